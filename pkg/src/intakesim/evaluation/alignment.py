"""Corpus-level evaluations: diagnostic alignment, ablation, suspicion calibration, sampling."""

from __future__ import annotations

import csv
import io
import random
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..config import RunConfig
from ..errors import InsufficientStratum, LengthMismatch, MissingGroundTruth
from ..records import CorpusRecord
from ..session import run_session
from ..vocab import Severity, Status, Strategy
from .metrics import MetricsReport, classification_metrics, confusion
from .stats import auc, pearson

STATUS_LABELS = [s.value for s in Status]
GRADED = [Severity.MILD.value, Severity.MODERATE.value, Severity.SEVERE.value]
NA = Severity.NOT_APPLICABLE.value


@dataclass
class AlignmentReport:
    status: MetricsReport
    severity: MetricsReport | None
    # cases kept out of the severity matrix because one side is NotApplicable
    leakage: dict[str, dict[str, int]]

    def to_dict(self) -> dict:
        return {"status": self.status.to_dict(),
                "severity": self.severity.to_dict() if self.severity else None,
                "leakage": self.leakage}

    def table(self) -> str:
        parts = [self.status.table("Status classification")]
        if self.severity:
            parts.append(self.severity.table("Severity grading (non-healthy ground truth)"))
        if self.leakage:
            rows = [f"  truth {t} -> predicted {p}: {n}" for t, d in self.leakage.items() for p, n in d.items()]
            parts.append("Severity leakage\n" + "\n".join(rows))
        return "\n\n".join(parts)


def diagnostic_alignment(records: Sequence[CorpusRecord]) -> AlignmentReport:
    if not records:
        raise MissingGroundTruth("no records to evaluate")
    truth_s, pred_s, truth_g, pred_g = [], [], [], []
    leakage: dict[str, dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for r in records:
        gt = r.profile.ground_truth
        if gt is None or r.diagnosis is None:
            raise MissingGroundTruth(f"{r.record_id}: ground truth or diagnosis missing")
        truth_s.append(gt.status.value)
        pred_s.append(r.diagnosis.status.value)
        t, p = gt.severity.value, r.diagnosis.severity.value
        if t in GRADED and p in GRADED:
            truth_g.append(t)
            pred_g.append(p)
        elif t != p:
            leakage[t][p] += 1
    status = classification_metrics(confusion(truth_s, pred_s, STATUS_LABELS))
    severity = classification_metrics(confusion(truth_g, pred_g, GRADED)) if truth_g else None
    return AlignmentReport(status, severity, {k: dict(v) for k, v in leakage.items()})


# --------------------------------------------------------------------------- ablation

@dataclass
class TrustTrajectory:
    profile_id: str
    values: list[float]
    delta_trust: float
    rounds_to_saturation: int


@dataclass
class ArmReport:
    name: str
    trajectories: list[TrustTrajectory]
    status_accuracy: float
    severity_accuracy: float
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def mean_delta_trust(self) -> float:
        return float(np.mean([t.delta_trust for t in self.trajectories])) if self.trajectories else 0.0

    @property
    def mean_rounds_to_saturation(self) -> float:
        return float(np.mean([t.rounds_to_saturation for t in self.trajectories])) if self.trajectories else 0.0

    def mean_trust_by_round(self) -> list[float]:
        """Per-round mean; shorter sessions carry their last value forward."""
        if not self.trajectories:
            return []
        width = max(len(t.values) for t in self.trajectories)
        padded = [t.values + [t.values[-1]] * (width - len(t.values)) for t in self.trajectories]
        return [float(x) for x in np.mean(padded, axis=0)]

    def summary(self) -> dict:
        return {"arm": self.name, "mean_delta_trust": self.mean_delta_trust,
                "mean_rounds_to_saturation": self.mean_rounds_to_saturation,
                "status_accuracy": self.status_accuracy, "severity_accuracy": self.severity_accuracy,
                "n": len(self.trajectories), "failures": len(self.failures)}


@dataclass
class AblationReport:
    arms: dict[str, ArmReport]

    def to_dict(self) -> dict:
        return {name: dict(arm.summary(), trajectories=[asdict(t) for t in arm.trajectories])
                for name, arm in self.arms.items()}

    def trust_series_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "mean_trust", "arm"])
        for name, arm in self.arms.items():
            for i, v in enumerate(arm.mean_trust_by_round(), start=1):
                w.writerow([i, f"{v:.6f}", name])
        return buf.getvalue()

    def delta_trust_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["arm", "profile_id", "delta_trust", "rounds_to_saturation"])
        for name, arm in self.arms.items():
            for t in arm.trajectories:
                w.writerow([name, t.profile_id, f"{t.delta_trust:.6f}", t.rounds_to_saturation])
        return buf.getvalue()


def trust_trajectory(record: CorpusRecord) -> TrustTrajectory:
    values = [t.patient_trace.trust for t in record.final_transcript
              if t.round >= 1 and t.patient_trace is not None]
    if not values:
        raise ValueError(f"{record.record_id}: no patient traces; run with trace_internal on")
    return TrustTrajectory(record.profile.profile_id, values, values[-1] - values[0],
                           int(record.run_meta["rounds_to_saturation"]))


def default_arms(config: RunConfig) -> dict[str, RunConfig]:
    """CoT arm vs. a passive arm: fixed item order, no suspicion updates."""
    return {
        "cot": config.with_overrides(agent={"cot_enabled": True}, session={"trace_internal": True}),
        "passive": config.with_overrides(agent={"cot_enabled": False}, session={"trace_internal": True}),
    }


def ablation_run(profiles: Sequence, repo, backend_for: Callable, arms: Mapping[str, RunConfig],
                 seed: int = 0) -> AblationReport:
    """Run every profile under every arm with the same seed; profiles are paired across arms."""
    out = {}
    for name, cfg in arms.items():
        records, failures = [], []
        for i, p in enumerate(profiles):
            try:
                records.append(run_session(p, repo, backend_for(p), cfg, seed ^ i))
            except Exception as exc:  # noqa: BLE001 - collected per arm
                failures.append((p.profile_id, f"{type(exc).__name__}: {exc}"))
        n = len(records) or 1
        status_acc = sum(r.diagnosis.status == r.profile.ground_truth.status for r in records) / n
        sev_acc = sum(r.diagnosis.severity == r.profile.ground_truth.severity for r in records) / n
        out[name] = ArmReport(name, [trust_trajectory(r) for r in records], status_acc, sev_acc, failures)
    return AblationReport(out)


# --------------------------------------------------------------------------- suspicion calibration

@dataclass(frozen=True)
class SuspicionAlignment:
    pearson_r: float
    auc: float
    n: int


def binarize_human(score: int) -> int:
    """1-2 reliable (0); 3-5 unreliable (1)."""
    if not 1 <= score <= 5:
        raise ValueError(f"human score {score} outside 1-5")
    return 0 if score <= 2 else 1


def suspicion_alignment(system_scores: Sequence[float], human_scores: Sequence[int]) -> SuspicionAlignment:
    if len(system_scores) != len(human_scores):
        raise LengthMismatch(f"{len(system_scores)} system vs {len(human_scores)} human scores")
    if len(system_scores) < 3:
        raise LengthMismatch("need at least 3 pairs")
    if any(not 0 <= s <= 1 for s in system_scores):
        raise ValueError("system scores must lie in [0, 1]")
    labels = [binarize_human(h) for h in human_scores]
    return SuspicionAlignment(pearson(system_scores, human_scores), auc(system_scores, labels),
                              len(system_scores))


# --------------------------------------------------------------------------- sampling

def _balanced_counts(groups: Mapping[str, int], want: int, order: list[str]) -> dict[str, int]:
    """Spread *want* across groups as evenly as capacity allows (round-robin
    water-filling, i.e. largest remainder with equal weights and caps)."""
    alloc = {g: 0 for g in order}
    left = want
    while left:
        progressed = False
        for g in order:
            if left and alloc[g] < groups[g]:
                alloc[g] += 1
                left -= 1
                progressed = True
        if not progressed:
            break
    return alloc


def stratified_sample(records: Sequence[CorpusRecord], strata: Mapping[Strategy | str, int],
                      seed: int = 0) -> list[CorpusRecord]:
    """Exact per-strategy counts; within a stratum, spread evenly over clinical status."""
    rng = random.Random(seed)
    by_strategy: dict[str, list[CorpusRecord]] = defaultdict(list)
    for r in sorted(records, key=lambda r: r.record_id):
        by_strategy[r.honesty_echo.deception_strategy.value].append(r)
    chosen: list[CorpusRecord] = []
    for key in sorted(strata, key=lambda k: Strategy(k).value):
        strat = Strategy(key).value
        want = int(strata[key])
        pool = by_strategy.get(strat, [])
        if want > len(pool):
            raise InsufficientStratum(f"stratum {strat}: requested {want}, corpus holds {len(pool)}")
        by_status: dict[str, list[CorpusRecord]] = defaultdict(list)
        for r in pool:
            by_status[r.profile.ground_truth.status.value].append(r)
        order = sorted(by_status)
        rng.shuffle(order)
        alloc = _balanced_counts({g: len(v) for g, v in by_status.items()}, want, order)
        for g in sorted(by_status):
            chosen.extend(rng.sample(by_status[g], alloc[g]))
    return sorted(chosen, key=lambda r: r.record_id)


def strata_counts(records: Sequence[CorpusRecord]) -> dict[str, int]:
    return dict(Counter(r.honesty_echo.deception_strategy.value for r in records))
