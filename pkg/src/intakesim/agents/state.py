"""Pure kernels: patient trust/stress dynamics, strategy choice, evaluator suspicion."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from ..vocab import Strategy


def clamp(x: float, lo: float = 0.0, hi: float = 1.0) -> float:
    return lo if x < lo else hi if x > hi else x


@dataclass(frozen=True)
class AgentState:
    trust: float
    stress: float

    def __post_init__(self) -> None:
        for name in ("trust", "stress"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def as_list(self) -> list[float]:
        return [self.trust, self.stress]


@dataclass(frozen=True)
class StimulusAppraisal:
    empathy: float
    pressure: float
    rationale: str = ""

    def __post_init__(self) -> None:
        for name in ("empathy", "pressure"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [-1, 1]")


def update_state(s: AgentState, psi: StimulusAppraisal, lam: float = 0.1, *,
                 pressure_trust_coupling: float = 0.0,
                 empathy_stress_coupling: float = 0.0) -> AgentState:
    """One step of the additive trust/stress update, clamped to the unit square.

    With both couplings at zero each channel moves only with its own stimulus.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    trust = s.trust + lam * psi.empathy - lam * pressure_trust_coupling * psi.pressure
    stress = s.stress + lam * psi.pressure - lam * empathy_stress_coupling * psi.empathy
    return AgentState(clamp(trust), clamp(stress))


class PatientStrategy(str, Enum):
    DISCLOSE = "Disclose"
    DEFLECT = "Deflect"
    MINIMIZE = "Minimize"
    EXAGGERATE = "ExaggerateSymptom"
    NEUTRAL = "Neutral"
    BREAKDOWN = "Breakdown"


DEFENSE_STRATEGIES = frozenset({PatientStrategy.DEFLECT, PatientStrategy.BREAKDOWN})
# Answers that give the interviewer something to score.
INFORMATIVE_STRATEGIES = frozenset({PatientStrategy.DISCLOSE, PatientStrategy.NEUTRAL,
                                    PatientStrategy.EXAGGERATE})
# Answers that at least engage with the topic.
ANSWERING_STRATEGIES = INFORMATIVE_STRATEGIES | {PatientStrategy.MINIMIZE}

HONESTY_STRATEGY = {
    Strategy.FRANKNESS: PatientStrategy.NEUTRAL,
    Strategy.CONCEALMENT: PatientStrategy.MINIMIZE,
    Strategy.EXAGGERATION: PatientStrategy.EXAGGERATE,
}

_VOLATILE_WORDS = ("volatile", "explosive", "labile", "breaks down", "falls apart",
                   "overwhelm", "tearful", "panics")


def is_volatile(profile) -> bool:
    """Behavioral constraint read from the profile: prone to falling apart under stress."""
    text = " ".join((profile.behavior_tendency, profile.communication_style,
                     profile.affect_baseline)).lower()
    return any(w in text for w in _VOLATILE_WORDS)


def select_patient_strategy(profile, s: AgentState, topic: str | None, *,
                            stress_th: float = 0.7, trust_th: float = 0.6,
                            breakdown_th: float = 0.85) -> PatientStrategy:
    if not (0 < stress_th < 1 and 0 < trust_th < 1):
        raise ValueError("thresholds must lie in (0, 1)")
    if s.stress > stress_th:
        if s.stress > breakdown_th or is_volatile(profile):
            return PatientStrategy.BREAKDOWN
        return PatientStrategy.DEFLECT
    if s.trust > trust_th:
        return PatientStrategy.DISCLOSE
    return HONESTY_STRATEGY[profile.honesty.strategy_for(topic)]


# --------------------------------------------------------------------------- suspicion

class Decision(str, Enum):
    PROCEED = "Proceed"
    INVESTIGATE = "Investigate"
    TERMINATE = "Terminate"


@dataclass(frozen=True)
class SuspicionEvidence:
    inconsistency_flags: tuple[str, ...] = ()
    nonverbal_mismatch: bool = False
    cot_estimate: float = 0.0
    suspected_pattern: Strategy | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.cot_estimate <= 1.0:
            raise ValueError(f"cot_estimate={self.cot_estimate} outside [0, 1]")
        object.__setattr__(self, "inconsistency_flags", tuple(self.inconsistency_flags))


@dataclass(frozen=True)
class SuspicionTracker:
    xi: float = 0.0
    theta_susp: float = 0.5
    history: tuple[tuple[int, float], ...] = ()
    decision_log: tuple[tuple[int, Decision], ...] = ()
    flag_log: tuple[tuple[int, str], ...] = ()
    pattern_votes: tuple[tuple[int, Strategy], ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 < self.theta_susp < 1.0:
            raise ValueError("theta_susp must lie in (0, 1)")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")

    @property
    def flagged(self) -> bool:
        return self.xi > self.theta_susp

    @property
    def suspected_pattern(self) -> Strategy | None:
        """Majority deception direction voted by the reasoning calls; ties give None."""
        conceal = sum(1 for _, p in self.pattern_votes if p is Strategy.CONCEALMENT)
        exagg = sum(1 for _, p in self.pattern_votes if p is Strategy.EXAGGERATION)
        if conceal > exagg:
            return Strategy.CONCEALMENT
        if exagg > conceal:
            return Strategy.EXAGGERATION
        return None

    def log_decision(self, round_: int, decision: Decision) -> "SuspicionTracker":
        return replace(self, decision_log=self.decision_log + ((round_, decision),))


def update_suspicion(tracker: SuspicionTracker, evidence: SuspicionEvidence, *,
                     round_: int | None = None, alpha: float = 0.5,
                     beta: float = 0.1) -> SuspicionTracker:
    """Exponential smoothing toward the reasoning estimate plus a per-flag bonus.

    A non-verbal/content mismatch counts as one more inconsistency flag.
    """
    n_flags = len(evidence.inconsistency_flags) + (1 if evidence.nonverbal_mismatch else 0)
    xi = clamp((1 - alpha) * tracker.xi + alpha * evidence.cot_estimate + beta * n_flags)
    r = round_ if round_ is not None else len(tracker.history)
    flags = tuple((r, f) for f in evidence.inconsistency_flags)
    if evidence.nonverbal_mismatch:
        flags += ((r, "nonverbal-mismatch"),)
    votes = tracker.pattern_votes
    if evidence.suspected_pattern in (Strategy.CONCEALMENT, Strategy.EXAGGERATION):
        votes = votes + ((r, evidence.suspected_pattern),)
    return replace(tracker, xi=xi, history=tracker.history + ((r, xi),),
                   flag_log=tracker.flag_log + flags, pattern_votes=votes)


@dataclass(frozen=True)
class SaturationStatus:
    covered_topics: frozenset[str]
    required_topics: frozenset[str]
    rounds: int
    evidence_sufficient: bool
    patient_exhausted: bool
    min_rounds: int = 18

    @property
    def domains_covered(self) -> bool:
        return self.required_topics <= self.covered_topics

    @property
    def rounds_reached(self) -> bool:
        return self.rounds >= self.min_rounds

    def conditions(self) -> dict[str, bool]:
        return {
            "domains_covered": self.domains_covered,
            "rounds": self.rounds_reached,
            "evidence_sufficient": self.evidence_sufficient,
            "patient_exhausted": self.patient_exhausted,
        }

    @property
    def terminate_ok(self) -> bool:
        return sum(self.conditions().values()) >= 2


def decide(tracker: SuspicionTracker, saturation: SaturationStatus | bool, *,
           theta: float | None = None) -> Decision:
    """*theta* overrides the tracker's threshold (any value in [0, 1])."""
    saturated = saturation if isinstance(saturation, bool) else saturation.terminate_ok
    if saturated:
        return Decision.TERMINATE
    theta = tracker.theta_susp if theta is None else theta
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    return Decision.INVESTIGATE if tracker.xi > theta else Decision.PROCEED


def exhausted(strategies: Sequence[PatientStrategy], window: int = 3) -> bool:
    """Patient gave no new information on each of the last *window* turns."""
    tail = list(strategies)[-window:]
    return len(tail) == window and all(s in DEFENSE_STRATEGIES for s in tail)


def replay_states(initial: AgentState, appraisals: Iterable[StimulusAppraisal],
                  lam: float = 0.1, **couplings: float) -> list[AgentState]:
    out = [initial]
    for psi in appraisals:
        out.append(update_state(out[-1], psi, lam, **couplings))
    return out
