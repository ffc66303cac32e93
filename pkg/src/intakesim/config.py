"""Run configuration: agent parameters, session parameters, paths, backends.

Sensitivity, suspicion threshold, smoothing and bias magnitudes are tunable;
the defaults below are the engine's choices.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class AgentConfig:
    # patient state update
    lambda_: float = 0.1
    pressure_trust_coupling: float = 0.0
    empathy_stress_coupling: float = 0.0
    initial_trust: float = 0.5
    initial_stress: float = 0.3
    # patient strategy
    stress_th: float = 0.7
    trust_th: float = 0.6
    breakdown_th: float = 0.85
    nonverbal_rate: float = 1.0
    length_budget: int = 60
    breakdown_length_budget: int = 12
    # evaluator suspicion
    theta_susp: float = 0.5
    alpha: float = 0.5
    beta: float = 0.1
    cot_enabled: bool = True
    # honesty bias on self-report items / suspicion adjustment on clinician items
    self_report_bias: int = 1
    rating_adjustment: int = 1
    # Chat utterances from local templates instead of a second backend call
    single_call: bool = False

    def __post_init__(self) -> None:
        for name in ("stress_th", "trust_th", "breakdown_th", "theta_susp"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} must lie in (0, 1)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha={self.alpha} must lie in [0, 1]")
        if self.lambda_ < 0 or self.beta < 0:
            raise ValueError("lambda_ and beta must be >= 0")
        for name in ("initial_trust", "initial_stress", "pressure_trust_coupling",
                     "empathy_stress_coupling"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} must lie in [0, 1]")
        if self.self_report_bias < 0 or self.rating_adjustment < 0:
            raise ValueError("bias magnitudes must be >= 0")


@dataclass(frozen=True)
class SessionConfig:
    min_rounds: int = 18
    round_cap: int = 60
    trace_internal: bool = True
    workers: int = 1
    exhaustion_window: int = 3
    wall_clock: bool = False

    def __post_init__(self) -> None:
        if self.min_rounds < 1 or self.round_cap < self.min_rounds:
            raise ValueError("need 1 <= min_rounds <= round_cap")
        if self.workers < 1 or self.exhaustion_window < 1:
            raise ValueError("workers and exhaustion_window must be >= 1")


@dataclass(frozen=True)
class BackendProfile:
    kind: str = "scripted"  # "scripted" | "http"
    script: str | None = None
    endpoint_url: str | None = None
    model_name: str | None = None
    auth_env: str = "OPENAI_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 4
    backoff_s: float = 1.0


@dataclass(frozen=True)
class Paths:
    repository: str | None = None
    feature_bank: str | None = None
    prompts: str | None = None
    output_dir: str = "corpus"


@dataclass(frozen=True)
class RunConfig:
    agent: AgentConfig = field(default_factory=AgentConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    paths: Paths = field(default_factory=Paths)
    backend: BackendProfile = field(default_factory=BackendProfile)
    seed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Hash of everything that can change a record (output dir excluded)."""
        d = self.to_dict()
        d["paths"].pop("output_dir", None)
        d["session"].pop("workers", None)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_overrides(self, **sections: dict[str, Any]) -> "RunConfig":
        """``cfg.with_overrides(agent={"theta_susp": 0.6}, seed=3)``."""
        changes: dict[str, Any] = {}
        for name, value in sections.items():
            if name == "seed":
                changes["seed"] = int(value)
            else:
                changes[name] = dataclasses.replace(getattr(self, name), **value)
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        known = {"agent": AgentConfig, "session": SessionConfig, "paths": Paths, "backend": BackendProfile}
        unknown = set(d) - set(known) - {"seed"}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kw: dict[str, Any] = {}
        for name, klass in known.items():
            if name in d:
                fields = {f.name for f in dataclasses.fields(klass)}
                bad = set(d[name]) - fields
                if bad:
                    raise ValueError(f"unknown keys in [{name}]: {sorted(bad)}")
                kw[name] = klass(**d[name])
        if "seed" in d:
            kw["seed"] = int(d["seed"])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        text = path.read_text("utf-8")
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            import tomli

            data = tomli.loads(text)
        return cls.from_dict(data)
