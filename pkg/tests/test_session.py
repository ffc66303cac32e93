import json

import pytest

from intakesim.config import RunConfig
from intakesim.errors import EmptyCorpus, RoundLimitExceeded, UnscriptedRequest
from intakesim.fixtures import bundled_script, fixture_backend, make_profile, mixed_profiles
from intakesim.records import CorpusRecord
from intakesim.session import (
    GREETING,
    OPENING_PROMPT,
    corpus_stats,
    load_corpus,
    public_projection,
    read_record,
    reconstruct_saturation,
    run_batch,
    run_session,
    validate_record,
    write_manifest,
    write_record,
)
from intakesim.backends import ScriptedBackend
from intakesim.vocab import Severity, Status, Strategy


@pytest.fixture(scope="module")
def frank(repo):
    profile, backend = bundled_script("frank-depression")
    return run_session(profile, repo, backend, RunConfig(), seed=1)


def test_bundled_frank_session(frank, repo):
    assert frank.interview_rounds >= 18
    assert validate_record(frank, repo).ok
    assert set(frank.patient_self_report) == set(frank.plan.self_report_abbrs)
    assert set(frank.doctor_clinician_report) == set(frank.plan.clinician_abbrs)
    assert frank.diagnosis.status is frank.profile.ground_truth.status


def test_round_layout(frank):
    t = frank.final_transcript
    assert t[0].doctor_utterance == GREETING and t[0].patient_utterance is None
    assert t[1].doctor_utterance == OPENING_PROMPT
    assert frank.profile.chief_complaint.lower().rstrip(".") in t[1].patient_utterance.lower()
    assert t[-1].patient_utterance is None and t[-1].clinician_trace.decision == "Terminate"
    assert [x.round for x in t] == list(range(len(t)))


def test_run_meta(frank):
    m = frank.run_meta
    assert m["seed"] == 1 and m["terminated_by"] == "Terminate"
    assert m["timestamps"] == {}
    assert m["rounds_to_saturation"] == frank.interview_rounds
    assert sum(m["saturation"].values()) >= 2
    assert m["plan_route"] == "model"
    assert m["model_calls"] > 0 and m["token_counts"]


def test_same_seed_same_bytes(repo, frank):
    profile, backend = bundled_script("frank-depression")
    again = run_session(profile, repo, backend, RunConfig(), seed=1)
    assert again.to_json() == frank.to_json()


def test_round_trip(frank, tmp_path):
    path = write_record(frank, tmp_path)
    assert read_record(path) == frank
    assert CorpusRecord.from_json(frank.to_json()).to_json() == frank.to_json()


def test_public_projection(frank, repo):
    pub = public_projection(frank)
    assert all(t.clinician_trace is None and t.patient_trace is None for t in pub.final_transcript)
    assert validate_record(pub, repo).ok
    assert frank.final_transcript[2].patient_trace is not None  # original untouched


def test_reconstructed_saturation(frank, repo):
    assert reconstruct_saturation(frank, repo).terminate_ok


def test_round_limit(repo):
    p = make_profile("stuck", Status.DEPRESSION, Severity.MODERATE, Strategy.CONCEALMENT, seed=2)
    cfg = RunConfig().with_overrides(agent={"cot_enabled": False},
                                     session={"min_rounds": 30, "round_cap": 30})
    with pytest.raises(RoundLimitExceeded):
        run_session(p, repo, fixture_backend(p, repo), cfg, seed=0)


def test_missing_evaluator_script(repo):
    p = make_profile("noeval", Status.ANXIETY, Severity.MILD, seed=3)
    with pytest.raises(UnscriptedRequest):
        run_session(p, repo, fixture_backend(p, repo, include_evaluator=False), RunConfig(), seed=0)


# --------------------------------------------------------------------------- validation

def test_validation_catches_tampering(frank, repo):
    missing = frank.model_copy(update={"doctor_clinician_report": {}})
    assert "MissingScaleResponse" in validate_record(missing, repo).codes()
    abbr, resp = next(iter(frank.patient_self_report.items()))
    forged = resp.model_copy(update={"severity": "Severe" if resp.severity != "Severe" else "Mild"})
    bad = frank.model_copy(update={"patient_self_report": {abbr: forged}})
    assert "SeverityMismatch" in validate_record(bad, repo).codes()
    gap = frank.model_copy(update={"final_transcript": frank.final_transcript[:3] + frank.final_transcript[4:]})
    assert "RoundGap" in validate_record(gap, repo).codes()
    early = frank.model_copy(update={"final_transcript": frank.final_transcript[:6] +
                                     [frank.final_transcript[-1].model_copy(update={"round": 6})]})
    assert "UnsoundTermination" in validate_record(early, repo).codes()
    leaky = frank.model_copy(update={"run_meta": dict(frank.run_meta, trace_internal=False)})
    assert "TracePresence" in validate_record(leaky, repo).codes()


# --------------------------------------------------------------------------- batches

def _factory(repo):
    return lambda p: fixture_backend(p, repo)


def test_batch_isolates_failures(repo):
    profiles = mixed_profiles(6, seed=11)
    good = _factory(repo)

    def backend_for(p):
        return ScriptedBackend({}) if p.profile_id == "p002" else good(p)

    records, report = run_batch(profiles, repo, backend_for, RunConfig(), seed=5)
    assert len(records) == 5 and report.successes == 5
    (fail,) = report.failures
    assert fail.profile_id == "p002" and fail.error_type
    assert report.to_dict()["failed"] == 1


def test_parallel_matches_serial(repo):
    profiles = mixed_profiles(6, seed=12)
    serial, _ = run_batch(profiles, repo, _factory(repo), RunConfig(), seed=9, workers=1)
    parallel, _ = run_batch(profiles, repo, _factory(repo), RunConfig(), seed=9, workers=4)
    assert [r.to_json() for r in serial] == [r.to_json() for r in parallel]
    assert [r.run_meta["seed"] for r in serial] == [9 ^ i for i in range(6)]


def test_corpus_files(repo, tmp_path):
    records, report = run_batch(mixed_profiles(3, seed=13), repo, _factory(repo), RunConfig())
    for r in records:
        write_record(r, tmp_path)
    write_manifest(tmp_path, report, {"seed": 0})
    (tmp_path / "broken.json").write_text("{not json")
    loaded, bad = load_corpus(tmp_path)
    assert sorted(r.record_id for r in loaded) == sorted(r.record_id for r in records)
    assert [name for name, _ in bad] == ["broken.json"]
    assert json.loads((tmp_path / "manifest.json").read_text())["total"] == 3


# --------------------------------------------------------------------------- stats

def test_stats_average_turns(frank):
    turns = list(frank.final_transcript)
    turns += [turns[2].model_copy(update={"round": len(turns) + i}) for i in range(30)]
    a = frank.model_copy(update={"final_transcript": turns[:20]})
    b = frank.model_copy(update={"final_transcript": turns[:24]})
    s = corpus_stats([a, b])
    assert s.avg_turns == 22.0
    assert s.total_dialogues == 2
    assert s.pathology_distribution["Depression"] == 100.0


def test_stats_healthy_only(repo):
    p = make_profile("h", Status.HEALTHY, Severity.NOT_APPLICABLE, seed=1)
    rec = run_session(p, repo, fixture_backend(p, repo), RunConfig(), seed=0)
    s = corpus_stats([rec])
    assert s.severity_distribution["NotApplicable"] == 100.0
    assert set(s.to_dict()) == {"total_dialogues", "total_tokens", "avg_turns", "tokens_per_turn",
                                "pathology_distribution", "severity_distribution", "demographics"}
    assert "Avg. turns" in s.table()
    with pytest.raises(EmptyCorpus):
        corpus_stats([])
