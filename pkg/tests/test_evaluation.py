import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intakesim.backends import ScriptedBackend
from intakesim.config import RunConfig
from intakesim.errors import (
    DegenerateLabels,
    DegenerateMatrix,
    InsufficientData,
    InsufficientStratum,
    LengthMismatch,
    SchemaViolation,
    UnknownLabel,
)
from intakesim.evaluation import (
    ConfusionMatrix,
    Dimension,
    ablation_run,
    auc,
    binarize_human,
    classification_metrics,
    cohens_d,
    compare_groups,
    confusion,
    diagnostic_alignment,
    icc_two_way,
    pearson,
    presentation_order,
    rate_realism,
    realism_table,
    stratified_sample,
    suspicion_alignment,
)
from intakesim.evaluation.realism import WIRE_KEYS, format_realism_table
from intakesim.fixtures import ABLATION_PLAN, ablation_profile, fixture_backend, mixed_profiles
from intakesim.records import DiagnosticReport
from intakesim.session import run_session
from intakesim.vocab import Severity, Status, Strategy

from .oracles import brute_metrics, icc21_loops, pair_count_auc


# --------------------------------------------------------------------------- confusion / metrics

def test_confusion_examples():
    assert confusion(["D", "D", "A"], ["D", "D", "A"], ["D", "A"]).counts == ((2, 0), (0, 1))
    assert confusion(["D", "A"], ["A", "D"], ["D", "A"]).counts == ((0, 1), (1, 0))
    with pytest.raises(LengthMismatch):
        confusion(["D"], [], ["D"])
    with pytest.raises(UnknownLabel):
        confusion(["D"], ["X"], ["D"])


def test_confusion_matches_tally():
    rng = random.Random(7)
    labels = ["a", "b", "c", "d"]
    t = [rng.choice(labels) for _ in range(50)]
    p = [rng.choice(labels) for _ in range(50)]
    cm = confusion(t, p, labels)
    for i, x in enumerate(labels):
        for j, y in enumerate(labels):
            assert cm.counts[i][j] == sum(1 for u, v in zip(t, p) if u == x and v == y)


def test_two_by_two_hand_values():
    m = classification_metrics(ConfusionMatrix.from_array(["x", "y"], [[25, 5], [10, 10]]))
    assert m.accuracy == pytest.approx(0.7, abs=1e-12)
    assert m.kappa == pytest.approx(8 / 23, abs=1e-12)
    assert m.mcc == pytest.approx(200 / math.sqrt(35 * 15 * 30 * 20), abs=1e-12)


def test_zero_predicted_class():
    m = classification_metrics(ConfusionMatrix.from_array(["x", "y", "z"], [[3, 1, 0], [2, 2, 0], [1, 0, 0]]))
    assert m.per_class["z"].precision == 0.0 and m.per_class["z"].f1 == 0.0


def test_degenerate_matrix():
    with pytest.raises(DegenerateMatrix):
        classification_metrics(ConfusionMatrix.from_array(["x"], [[0]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda k: st.lists(st.lists(st.integers(0, 12), min_size=k, max_size=k), min_size=k, max_size=k)))
def test_metrics_match_brute_force(cells):
    if sum(map(sum, cells)) == 0:
        cells[0][0] = 1
    got = classification_metrics(ConfusionMatrix.from_array([str(i) for i in range(len(cells))], cells))
    want = brute_metrics(cells)
    assert got.kappa == pytest.approx(want["kappa"], abs=1e-12)
    assert got.mcc == pytest.approx(want["mcc"], abs=1e-12)
    assert got.macro_f1 == pytest.approx(want["macro_f1"], abs=1e-12)
    assert -1 - 1e-12 <= got.mcc <= 1 + 1e-12


# --------------------------------------------------------------------------- stats

@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_equals_pair_count(pairs):
    scores = [float(s) for s, _ in pairs]
    labels = [y for _, y in pairs]
    if len(set(labels)) < 2:
        with pytest.raises(DegenerateLabels):
            auc(scores, labels)
        return
    assert auc(scores, labels) == float(pair_count_auc(scores, labels))


def test_auc_examples():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0
    assert auc([0.5, 0.5], [0, 1]) == 0.5
    with pytest.raises(LengthMismatch):
        auc([0.1], [0, 1])


def test_pearson():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    with pytest.raises(InsufficientData):
        pearson([1, 1, 1], [1, 2, 3])


def test_icc_identical_and_noise():
    assert icc_two_way([[1, 5, 2, 8]] * 4) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    noise = rng.normal(size=(5, 2000))
    assert abs(icc_two_way(noise)) < 0.05
    with pytest.raises(InsufficientData):
        icc_two_way([[1, 2, 3]])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5).flatmap(lambda k: st.integers(2, 8).flatmap(
    lambda n: st.lists(st.lists(st.integers(0, 9), min_size=n, max_size=n), min_size=k, max_size=k))))
def test_icc_matches_loops(m):
    try:
        got = icc_two_way(m)
    except InsufficientData:
        return
    assert got == pytest.approx(icc21_loops(m), abs=1e-9)


def test_group_comparison():
    a, b = [1, 2, 3, 4, 5], [3, 4, 5, 6, 7]
    assert cohens_d(a, b) == pytest.approx(-2 / math.sqrt(2.5))
    g = compare_groups(a, b)
    assert (g.n_a, g.n_b) == (5, 5) and 0 < g.p_value < 1


def test_suspicion_alignment():
    s = suspicion_alignment([0.1, 0.2, 0.8, 0.9], [1, 2, 4, 5])
    assert s.auc == 1.0 and s.pearson_r > 0.9
    inv = suspicion_alignment([0.9, 0.8, 0.2, 0.1], [1, 2, 4, 5])
    assert inv.auc == 0.0 and inv.pearson_r < 0
    assert [binarize_human(h) for h in range(1, 6)] == [0, 0, 1, 1, 1]
    with pytest.raises(DegenerateLabels):
        suspicion_alignment([0.1, 0.2, 0.3], [1, 1, 2])
    with pytest.raises(LengthMismatch):
        suspicion_alignment([0.1, 0.2], [1, 4, 5])


# --------------------------------------------------------------------------- corpus-level

@pytest.fixture(scope="module")
def corpus(repo):
    return [run_session(p, repo, fixture_backend(p, repo), RunConfig(), seed=3)
            for p in mixed_profiles(12, seed=3)]


def _as_truth(r):
    gt = r.profile.ground_truth
    return r.model_copy(update={"diagnosis": r.diagnosis.model_copy(
        update={"status": gt.status, "severity": gt.severity})})


def test_alignment_identity(corpus):
    rep = diagnostic_alignment([_as_truth(r) for r in corpus])
    assert rep.status.accuracy == 1.0 and rep.severity.accuracy == 1.0 and rep.leakage == {}


def test_alignment_one_miss_in_ten(corpus):
    recs = [_as_truth(r) for r in corpus[:10]]
    wrong = next(i for i, r in enumerate(recs) if r.profile.ground_truth.status is Status.ANXIETY)
    recs[wrong] = recs[wrong].model_copy(update={"diagnosis": DiagnosticReport(
        status=Status.DEPRESSION, severity=recs[wrong].diagnosis.severity, symptom_match="x",
        discrepancy_resolution="x", key_evidence=recs[wrong].diagnosis.key_evidence)})
    assert diagnostic_alignment(recs).status.accuracy == pytest.approx(0.9)


def test_alignment_leakage(corpus):
    healthy = next(_as_truth(r) for r in corpus if r.profile.ground_truth.status is Status.HEALTHY)
    sick = healthy.model_copy(update={"diagnosis": DiagnosticReport(
        status=Status.DEPRESSION, severity=Severity.MILD, symptom_match="x",
        discrepancy_resolution="x", key_evidence=healthy.diagnosis.key_evidence)})
    rep = diagnostic_alignment([sick])
    assert rep.leakage == {"NotApplicable": {"Mild": 1}} and rep.severity is None
    assert "leakage" in rep.table()


def test_sampling(corpus):
    want = {Strategy.CONCEALMENT: 2, Strategy.EXAGGERATION: 3, Strategy.FRANKNESS: 4}
    a = stratified_sample(corpus, want, seed=1)
    assert [r.record_id for r in a] == [r.record_id for r in stratified_sample(corpus, want, seed=1)]
    counts = {s: sum(r.honesty_echo.deception_strategy is s for r in a) for s in Strategy}
    assert counts == want
    # four statuses per stratum in the corpus, so four frank picks cover all of them
    frank = [r for r in a if r.honesty_echo.deception_strategy is Strategy.FRANKNESS]
    assert len({r.profile.ground_truth.status for r in frank}) == 4
    with pytest.raises(InsufficientStratum, match="Concealment"):
        stratified_sample(corpus, {Strategy.CONCEALMENT: 5}, seed=1)


def test_null_ablation(repo):
    profiles = [ablation_profile(s) for s in range(2)]
    cfg = RunConfig().with_overrides(agent={"cot_enabled": False})
    rep = ablation_run(profiles, repo, lambda p: fixture_backend(p, repo, plan=ABLATION_PLAN),
                       {"a": cfg, "b": cfg}, seed=3)
    a, b = rep.arms["a"].summary(), rep.arms["b"].summary()
    a.pop("arm"), b.pop("arm")
    assert a == b
    assert rep.arms["a"].mean_trust_by_round() == rep.arms["b"].mean_trust_by_round()
    assert rep.delta_trust_csv().replace(",a,", ",x,").replace("\na,", "\nx,") == \
        rep.delta_trust_csv().replace(",a,", ",x,").replace("\na,", "\nx,")


# --------------------------------------------------------------------------- realism

def _rater(score=7):
    return ScriptedBackend({"Rater/*": {"json": {k: {"score": score, "reason": "r"} for k in WIRE_KEYS.values()}}})


def test_rate_realism_fixture():
    s = rate_realism("D: hi\nP: hello", _rater(7))
    assert s.scores == {d: 7 for d in Dimension}


def test_rate_realism_out_of_range():
    with pytest.raises(SchemaViolation):
        rate_realism("D: hi", _rater(11))


def test_realism_table_shape():
    ratings = {"sim": [rate_realism("x", _rater(6)), rate_realism("x", _rater(8))]}
    table = realism_table(ratings)
    assert table["sim"]["DiscourseOrganicness"] == (7.0, pytest.approx(math.sqrt(2)))
    assert set(table["sim"]) == {d.value for d in Dimension}
    assert "7.00 (1.41)" in format_realism_table(table)


def test_presentation_order_seeded():
    systems = ["a", "b", "c", "d", "e"]
    assert presentation_order(systems, 3) == presentation_order(systems, 3)
    assert sorted(presentation_order(systems, 3)) == systems
