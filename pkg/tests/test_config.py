import json

import pytest

from intakesim.config import AgentConfig, RunConfig, SessionConfig


def test_defaults():
    cfg = RunConfig()
    a = cfg.agent
    assert (a.lambda_, a.pressure_trust_coupling, a.empathy_stress_coupling) == (0.1, 0.0, 0.0)
    assert (a.alpha, a.beta, a.theta_susp) == (0.5, 0.1, 0.5)
    assert (a.stress_th, a.trust_th, a.breakdown_th) == (0.7, 0.6, 0.85)
    assert (cfg.session.min_rounds, cfg.session.round_cap) == (18, 60)
    assert cfg.backend.kind == "scripted" and cfg.backend.max_retries == 4


@pytest.mark.parametrize("kw", [{"theta_susp": 0.0}, {"trust_th": 1.0}, {"alpha": 1.5},
                                {"beta": -0.1}, {"initial_trust": 2.0}, {"self_report_bias": -1}])
def test_agent_validation(kw):
    with pytest.raises(ValueError):
        AgentConfig(**kw)


def test_session_validation():
    with pytest.raises(ValueError):
        SessionConfig(min_rounds=20, round_cap=10)
    with pytest.raises(ValueError):
        SessionConfig(workers=0)


def test_from_dict_rejects_unknown():
    with pytest.raises(ValueError, match="sections"):
        RunConfig.from_dict({"agents": {}})
    with pytest.raises(ValueError, match="gamma"):
        RunConfig.from_dict({"agent": {"gamma": 1}})


def test_load_toml_and_json(tmp_path):
    toml = tmp_path / "a.toml"
    toml.write_text('seed = 4\n[agent]\ntheta_susp = 0.6\n[backend]\nkind = "http"\n'
                    'endpoint_url = "http://x"\nmodel_name = "m"\nauth_env = "MY_KEY"\n')
    js = tmp_path / "a.json"
    js.write_text(json.dumps({"seed": 4, "agent": {"theta_susp": 0.6},
                              "backend": {"kind": "http", "endpoint_url": "http://x",
                                          "model_name": "m", "auth_env": "MY_KEY"}}))
    a, b = RunConfig.load(toml), RunConfig.load(js)
    assert a == b and a.seed == 4 and a.agent.theta_susp == 0.6
    # only the variable name is kept, never a secret
    assert a.backend.auth_env == "MY_KEY"


def test_config_hash():
    base = RunConfig()
    assert base.config_hash() == RunConfig().config_hash()
    assert base.config_hash() == base.with_overrides(session={"workers": 8}).config_hash()
    assert base.config_hash() == base.with_overrides(paths={"output_dir": "elsewhere"}).config_hash()
    assert base.config_hash() != base.with_overrides(agent={"beta": 0.2}).config_hash()
    assert base.config_hash() != base.with_overrides(seed=1).config_hash()


def test_with_overrides_validates():
    cfg = RunConfig().with_overrides(agent={"theta_susp": 0.7}, seed=9)
    assert cfg.agent.theta_susp == 0.7 and cfg.seed == 9 and cfg.agent.alpha == 0.5
    with pytest.raises(ValueError):
        RunConfig().with_overrides(agent={"theta_susp": 1.0})
    with pytest.raises(TypeError):
        RunConfig().with_overrides(agent={"nope": 1})
