import random

import pytest

from intakesim.agents import (
    CallLedger,
    Coverage,
    Decision,
    SuspicionTracker,
    evaluator_rate,
    evaluator_turn,
)
from intakesim.agents.assessor import assessor_select, fallback_plan, route_domain
from intakesim.agents.diagnostician import diagnose, resolve_severity
from intakesim.agents.evaluator import MAX_PROBES, Target, adjust_for_suspicion
from intakesim.agents.patient import (
    BREAKDOWN_HEDGE,
    apply_breakdown,
    appraise,
    complaint_elements,
    honesty_bias,
    patient_opening,
    patient_self_report,
    patient_turn,
)
from intakesim.agents.state import AgentState, PatientStrategy, SaturationStatus, SuspicionEvidence, update_suspicion
from intakesim.backends import ScriptedBackend
from intakesim.config import AgentConfig
from intakesim.errors import EvidenceError, IncompleteReports, ItemCountMismatch
from intakesim.fixtures import build_script, fixture_backend, items_for_grade, make_profile
from intakesim.records import PatientTrace, TurnRecord
from intakesim.scales import Rater, ScalePlan, build_response
from intakesim.vocab import Domain, Severity, Status, Strategy

LEX = {"_meta": {"appraisal": "lexicon"}, "PatientChat/*": {"text": "{draft}"}}


def depressed(strategy=Strategy.FRANKNESS, severity=Severity.MODERATE, **kw):
    return make_profile("d1", Status.DEPRESSION, severity, strategy, seed=5, **kw)


# --------------------------------------------------------------------------- patient

def test_appraise_lexicon():
    b = ScriptedBackend(LEX)
    psi, _ = appraise("Many people feel this way; take your time.", b)
    assert (psi.empathy, psi.pressure) == (1.0, 0.0)
    psi, _ = appraise("Answer the question. Yes or no?", b)
    assert (psi.empathy, psi.pressure) == (0.0, 1.0)
    with pytest.raises(ValueError):
        appraise("  ", b)


def test_patient_turn_deterministic():
    p = depressed(Strategy.CONCEALMENT)

    def run():
        return patient_turn(p, AgentState(0.5, 0.3), "Take your time. How is your sleep?",
                            ScriptedBackend(LEX), AgentConfig(), topic="sleep",
                            rng=random.Random(3), ledger=CallLedger(seed=3))

    a, b = run(), run()
    assert a == b
    directive, text = a
    assert directive.next_state.trust == pytest.approx(0.6)
    assert directive.strategy is PatientStrategy.MINIMIZE  # 0.6 is not above the threshold
    assert text


def test_patient_turn_under_stress():
    d, text = patient_turn(depressed(), AgentState(0.5, 0.9), "Answer the question.",
                           ScriptedBackend(LEX), AgentConfig(), topic="mood", rng=random.Random(0))
    assert d.strategy in {PatientStrategy.DEFLECT, PatientStrategy.BREAKDOWN}
    assert d.strategy is PatientStrategy.BREAKDOWN
    assert text.startswith(BREAKDOWN_HEDGE) and text.endswith("...")
    assert len(text.split()) <= AgentConfig().breakdown_length_budget + len(BREAKDOWN_HEDGE.split())
    assert d.contradiction_allowed


def test_apply_breakdown():
    assert apply_breakdown("um, I just can't do this anymore.", 3) == "um, I just..."
    assert apply_breakdown("I am fine.", 10) == f"{BREAKDOWN_HEDGE} I am fine..."


def test_opening_keeps_complaint():
    p = depressed()
    b = ScriptedBackend({"PatientChat.opening/0": {"text": "Hi. I feel flat."}})
    text, appended = patient_opening(p, b, AgentConfig())
    assert appended
    assert all(e in text.lower() for e in complaint_elements(p.chief_complaint))
    b = ScriptedBackend({"PatientChat.opening/0": {"text": "So... {chief_complaint}."}})
    text, appended = patient_opening(p, b, AgentConfig())
    assert not appended


def test_complaint_elements():
    assert complaint_elements("I feel flat and down most days, and I can't sleep") == \
        ["i feel flat", "down most days", "i can't sleep"]


def _self_report_backend(items):
    return ScriptedBackend({"PatientCoT.self_report/*": {"json": {"item_scores": items}}})


def test_self_report_bias_direction(repo):
    d = repo.get("PHQ-9")
    truth = items_for_grade(d, Severity.MODERATE)
    totals = {}
    for s in Strategy:
        r = patient_self_report(depressed(s), d, [], _self_report_backend(truth))
        totals[s] = r.total_score
        assert r.rater is Rater.PATIENT
    assert totals[Strategy.FRANKNESS] == sum(truth)
    assert repo.get("PHQ-9").bands[2].label == "Moderate"
    assert 10 <= totals[Strategy.FRANKNESS] <= 14
    assert totals[Strategy.CONCEALMENT] < totals[Strategy.FRANKNESS] < totals[Strategy.EXAGGERATION]


def test_self_report_arity(repo):
    with pytest.raises(ItemCountMismatch):
        patient_self_report(depressed(), repo.get("PHQ-9"), [], _self_report_backend([1] * 8))
    with pytest.raises(ValueError):
        patient_self_report(depressed(), repo.get("HAM-D"), [], _self_report_backend([1] * 17))


def test_honesty_bias_clamps(repo):
    d = repo.get("PHQ-9")
    assert honesty_bias(depressed(Strategy.CONCEALMENT), d, [0] * 9, 1) == [0] * 9
    assert honesty_bias(depressed(Strategy.EXAGGERATION), d, [3] * 9, 1) == [3] * 9


# --------------------------------------------------------------------------- evaluator

HAMD = ScalePlan.of(["HAM-D"], ["PHQ-9"])


def _cot(est, topic, flags=(), pattern="None"):
    return {"json": {"reasoning_step": "r", "suspicion_score": est, "inconsistency_flags": list(flags),
                     "suspected_pattern": pattern, "next_move_type": "Proceed",
                     "target_topic": topic, "guidance_for_chat": "g"}}


def _turn(r, topic, strategy, text="It's fine, I manage.", nonverbal=()):
    return TurnRecord(round=r, doctor_utterance="q", patient_utterance=text, topic=topic,
                      nonverbal=list(nonverbal),
                      patient_trace=PatientTrace(trust=0.4, stress=0.4, strategy=strategy.value))


def _unsaturated():
    return SaturationStatus(frozenset(), frozenset({"mood"}), 3, False, False, 18)


def test_investigate_probes_flagged_topic(repo):
    cov = Coverage.for_plan(HAMD, repo)
    topic = cov.targets[3].topic
    transcript = [_turn(2, topic, PatientStrategy.MINIMIZE, nonverbal=["sighs"])]
    b = ScriptedBackend({"EvaluatorCoT/*": _cot(0.9, topic, ["contradiction"], "Concealment"),
                         "EvaluatorChat/*": {"text": "{draft}"}})
    d, text = evaluator_turn(HAMD, transcript, SuspicionTracker(), b, AgentConfig(), coverage=cov,
                             saturation=_unsaturated(), round_=3, ledger=CallLedger())
    assert d.decision is Decision.INVESTIGATE and d.topic == topic
    assert d.tracker.xi == pytest.approx(0.5 * 0.9 + 0.2)
    assert "no judgment" in text


def test_investigate_gives_up_after_max_probes(repo):
    cov = Coverage.for_plan(HAMD, repo)
    first = cov.targets[0]
    for r in range(MAX_PROBES):
        cov.record(r + 2, first, PatientStrategy.MINIMIZE)
    b = ScriptedBackend({"EvaluatorCoT/*": _cot(0.9, first.topic),
                         "EvaluatorChat/*": {"text": "{draft}"}})
    d, _ = evaluator_turn(HAMD, [_turn(3, first.topic, PatientStrategy.MINIMIZE)],
                          SuspicionTracker(xi=0.9), b, AgentConfig(), coverage=cov,
                          saturation=_unsaturated(), round_=4, ledger=CallLedger())
    assert d.decision is Decision.INVESTIGATE
    assert (d.topic, d.target) != (first.topic, first.item)


def test_proceed_moves_to_next_target(repo):
    cov = Coverage.for_plan(HAMD, repo)
    cov.record(2, cov.targets[0], PatientStrategy.NEUTRAL)
    b = ScriptedBackend({"EvaluatorCoT/*": _cot(0.0, cov.targets[0].topic),
                         "EvaluatorChat/*": {"text": "{draft}"}})
    d, _ = evaluator_turn(HAMD, [_turn(2, cov.targets[0].topic, PatientStrategy.NEUTRAL)],
                          SuspicionTracker(), b, AgentConfig(), coverage=cov,
                          saturation=_unsaturated(), round_=3, ledger=CallLedger())
    assert d.decision is Decision.PROCEED
    assert d.target == cov.targets[1].item


def test_saturated_terminates(repo):
    cov = Coverage.for_plan(HAMD, repo)
    sat = SaturationStatus(cov.required, cov.required, 18, False, False, 18)
    b = ScriptedBackend({"EvaluatorCoT/*": _cot(0.9, "mood")})
    d, text = evaluator_turn(HAMD, [], SuspicionTracker(), b, AgentConfig(), coverage=cov,
                             saturation=sat, round_=19, ledger=CallLedger())
    assert d.decision is Decision.TERMINATE and d.topic is None


def test_passive_arm_walks_items_in_order(repo):
    cov = Coverage.for_plan(HAMD, repo)
    cfg = AgentConfig(cot_enabled=False)
    b = ScriptedBackend({"EvaluatorChat.passive/*": {"text": "{draft}"}})
    seen = []
    for r in range(3):
        d, text = evaluator_turn(HAMD, [], SuspicionTracker(), b, cfg, coverage=cov,
                                 saturation=_unsaturated(), round_=r + 2, ledger=CallLedger())
        assert d.decision is Decision.PROCEED and text.startswith("Next question.")
        cov.record(r + 2, Target(d.topic, d.target), PatientStrategy.NEUTRAL)
        seen.append(d.target)
    assert seen == [t.item for t in cov.targets[:3]]


def test_item_level_evidence(repo):
    cov = Coverage.for_plan(HAMD, repo)
    items = cov.item_targets
    assert len(items) == 17
    for i, t in enumerate(items[:-1]):
        cov.record(i + 2, t, PatientStrategy.DISCLOSE)
    assert not cov.evidence_sufficient
    cov.record(30, items[-1], PatientStrategy.MINIMIZE)
    assert not cov.evidence_sufficient  # minimising answers do not count as evidence
    cov.record(31, items[-1], PatientStrategy.NEUTRAL)
    assert cov.evidence_sufficient
    last = items[-1]
    assert cov.item_evidence(last.item.scale, last.item.item, last.topic) == [31]


def test_coverage_replay_matches(repo):
    cov = Coverage.for_plan(HAMD, repo)
    turns = []
    for r, t in enumerate(cov.targets[:5], start=2):
        turns.append(TurnRecord(round=r, doctor_utterance="q", patient_utterance="a", topic=t.topic,
                                target=t.item, patient_trace=PatientTrace(
                                    trust=0.5, stress=0.3, strategy="Neutral")))
        cov.record(r, t, PatientStrategy.NEUTRAL)
    replay = Coverage.from_transcript(HAMD, repo, turns)
    assert replay.informative == cov.informative and replay.answered == cov.answered


def _rate_backend(items, evidence=None):
    return ScriptedBackend({"EvaluatorCoT.rate/*": {"json": {
        "item_scores": items, "dialogue_evidence": evidence or {}, "interpretation": "x"}}})


def test_rate_one_per_scale_and_adjusts(repo):
    d = repo.get("HAM-D")
    literal = items_for_grade(d, Severity.MODERATE)
    t = SuspicionTracker()
    for _ in range(3):
        t = update_suspicion(t, SuspicionEvidence(("f",), False, 0.9, Strategy.CONCEALMENT))
    transcript = [_turn(r, "mood", PatientStrategy.MINIMIZE) for r in range(1, 21)]
    out = evaluator_rate(HAMD, transcript, t, _rate_backend(literal), repo)
    assert len(out) == 1 and out[0].scale_abbr == "HAM-D"
    assert out[0].literal_item_scores == literal
    assert out[0].total_score > sum(literal)
    calm = evaluator_rate(HAMD, transcript, SuspicionTracker(), _rate_backend(literal), repo)
    assert calm[0].item_scores == literal
    assert all(calm[0].dialogue_evidence[i] for i in range(17))


def test_rate_rejects_bad_evidence(repo):
    d = repo.get("HAM-D")
    transcript = [_turn(r, "mood", PatientStrategy.NEUTRAL) for r in range(1, 21)]
    with pytest.raises(EvidenceError):
        evaluator_rate(HAMD, transcript, SuspicionTracker(),
                       _rate_backend([1] * d.item_count, {"0": [99]}), repo)


def test_adjust_for_suspicion():
    t = SuspicionTracker(xi=0.9, pattern_votes=((1, Strategy.EXAGGERATION),))
    assert adjust_for_suspicion([0, 2, 4], (0, 4), t, 1) == [0, 1, 3]
    assert adjust_for_suspicion([0, 2, 4], (0, 4), SuspicionTracker(xi=0.2), 1) == [0, 2, 4]


# --------------------------------------------------------------------------- assessor

def test_fallback_routes(repo):
    assert route_domain("can't sleep, everything feels flat") is Domain.DEPRESSION
    assert route_domain("I panic and worry all the time") is Domain.ANXIETY
    assert route_domain("nightmares since the accident") is Domain.PTSD
    assert route_domain("my boss sent me") is Domain.DEPRESSION
    plan = fallback_plan("can't sleep, everything feels flat", repo)
    assert (plan.clinician_abbrs, plan.self_report_abbrs) == (["HAM-D"], ["PHQ-9"])


def _plan_json(clin, selfr):
    return {"json": {"clinician_scales": [{"name": c} for c in clin],
                     "self_report_scales": [{"name": s} for s in selfr]}}


def test_assessor_model_route(repo):
    p = depressed()
    b = ScriptedBackend({"AssessorCoT/0": _plan_json(["HAM-D"], ["PHQ-9", "ISI"])})
    plan, route = assessor_select(p.demographics, p.chief_complaint, repo, b, with_route=True)
    assert route == "model" and plan.self_report_abbrs == ["PHQ-9", "ISI"]


def test_assessor_repairs_mixed_plan(repo):
    p = depressed()
    b = ScriptedBackend({"AssessorCoT/0": _plan_json(["HAM-D"], ["GAD-7"]),
                         "AssessorCoT.plan_repair/0": _plan_json(["HAM-D"], ["PHQ-9"])})
    plan, route = assessor_select(p.demographics, p.chief_complaint, repo, b, with_route=True)
    assert route == "repaired" and plan.self_report_abbrs == ["PHQ-9"]


def test_assessor_falls_back(repo):
    p = make_profile("h", Status.HEALTHY, Severity.NOT_APPLICABLE)
    b = ScriptedBackend({"AssessorCoT/0": _plan_json(["HAM-D"], ["GAD-7"]),
                         "AssessorCoT.plan_repair/0": _plan_json([], ["PHQ-9"])})
    plan, route = assessor_select(p.demographics, p.chief_complaint, repo, b, with_route=True)
    assert route == "fallback" and plan.clinician_abbrs
    plan, route = assessor_select(p.demographics, p.chief_complaint, repo, ScriptedBackend({}),
                                  with_route=True)
    assert route == "fallback" and plan.clinician_abbrs


# --------------------------------------------------------------------------- diagnostician

def _flagged(pattern):
    return SuspicionTracker(xi=0.9, pattern_votes=((1, pattern),))


@pytest.mark.parametrize("self_g,clin_g,tracker,want,rule", [
    (Severity.SEVERE, Severity.MODERATE, _flagged(Strategy.EXAGGERATION), Severity.MODERATE,
     "exaggeration-downgrade"),
    (Severity.MILD, Severity.MODERATE, _flagged(Strategy.CONCEALMENT), Severity.MODERATE,
     "concealment-clinician-wins"),
    (Severity.MILD, Severity.MILD, SuspicionTracker(xi=0.1), Severity.MILD, "agreement"),
    (Severity.MILD, Severity.SEVERE, SuspicionTracker(xi=0.1), Severity.MODERATE, "model-judgement"),
])
def test_resolution_rules(self_g, clin_g, tracker, want, rule):
    assert resolve_severity(self_g, clin_g, tracker, Severity.MODERATE) == (want, rule)


def _diag_backend(status, severity, rounds=(1,)):
    return ScriptedBackend({"Diagnostician/0": {"json": {
        "final_diagnosis": {"status": status, "severity": severity},
        "reasoning": {"symptom_match": "m", "discrepancy_resolution": "d",
                      "key_evidence": [{"round": r} for r in rounds]}}}})


def _reports(repo, self_total, clin_total):
    phq, hamd = repo.get("PHQ-9"), repo.get("HAM-D")
    from intakesim.fixtures import items_for_total
    return ({"PHQ-9": build_response(phq, items_for_total(phq, self_total), Rater.PATIENT)},
            {"HAM-D": build_response(hamd, items_for_total(hamd, clin_total), Rater.EVALUATOR,
                                     evidence={0: [2]})})


def test_diagnose_end_to_end(repo):
    transcript = [_turn(r, "mood", PatientStrategy.NEUTRAL) for r in range(1, 5)]
    selfr, clin = _reports(repo, 22, 14)  # Severe vs Moderate
    rep = diagnose(transcript, selfr, clin, _flagged(Strategy.EXAGGERATION),
                   _diag_backend("Depression", "Severe", rounds=(99,)), repo=repo, plan=HAMD)
    assert rep.severity is Severity.MODERATE and rep.rule == "exaggeration-downgrade"
    assert [e.round for e in rep.key_evidence] == [2]


def test_diagnose_healthy_override(repo):
    transcript = [_turn(r, "mood", PatientStrategy.NEUTRAL) for r in range(1, 3)]
    selfr, clin = _reports(repo, 12, 14)
    rep = diagnose(transcript, selfr, clin, SuspicionTracker(), _diag_backend("Healthy", "NotApplicable"),
                   repo=repo, plan=HAMD)
    assert rep.status is Status.DEPRESSION and rep.severity is Severity.MODERATE


def test_diagnose_needs_all_reports(repo):
    selfr, _ = _reports(repo, 12, 14)
    with pytest.raises(IncompleteReports):
        diagnose([], selfr, {}, SuspicionTracker(), _diag_backend("Depression", "Mild"),
                 repo=repo, plan=HAMD)


def test_fixture_script_keys(repo):
    p = depressed(Strategy.CONCEALMENT, bank=None)
    script = build_script(p, repo)
    assert {"AssessorCoT/0", "EvaluatorCoT/*", "PatientCoT.self_report/0", "EvaluatorCoT.rate/0",
            "Diagnostician/0"} <= set(script)
    assert fixture_backend(p, repo).lexicon
