"""Evaluator role: interview steering with suspicion tracking, and clinician rating."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..backends.base import RoleTag
from ..config import AgentConfig, SessionConfig
from ..errors import EvidenceError, MissingScaleResponse
from ..records import ItemTarget, TurnRecord, render_transcript
from ..scales import Rater, Repository, ScalePlan, ScaleResponse, _check_items, build_response
from ..vocab import Strategy
from .common import INT_LIST, STR, UNIT, CallLedger, call, json_contract
from .patient import TOPIC_PHRASES
from .state import (
    ANSWERING_STRATEGIES,
    INFORMATIVE_STRATEGIES,
    Decision,
    PatientStrategy,
    SaturationStatus,
    SuspicionEvidence,
    SuspicionTracker,
    decide,
    exhausted,
    update_suspicion,
)

GREETING = "Hello, welcome. Please have a seat and tell me what brings you here today."
CLOSING = "Thank you, that is everything I need for today. We will go over the next steps together."

TOPIC_QUESTIONS = {
    "mood": "How have your spirits been over the last couple of weeks?",
    "interest": "What do you still look forward to these days?",
    "sleep": "How are your nights going?",
    "appetite": "How has eating been for you lately?",
    "energy": "How much get-up-and-go have you had recently?",
    "guilt": "How do you feel about yourself when things go wrong?",
    "concentration": "How easy is it to keep your mind on something, like reading or a show?",
    "psychomotor": "Have people noticed you moving or talking differently?",
    "risk": "Have things ever felt so heavy that you thought about not being here?",
    "worry": "What kinds of things keep running through your head?",
    "tension": "Where in your body do you carry the strain?",
    "restlessness": "How easy is it to sit still these days?",
    "somatic": "Has your body been sending signals, like a racing heart or an upset stomach?",
    "fear": "Are there moments when fear suddenly takes over?",
    "avoidance": "Are there places or situations you have started to steer clear of?",
    "irritability": "How quickly do little things get to you lately?",
    "trauma": "At your own pace, can you tell me about what happened?",
    "intrusion": "Does it come back to you when you don't want it to?",
    "hyperarousal": "How on edge do you feel, say with a sudden noise?",
    "daytime": "How do the afternoons go for you?",
    "personality": "How would the people close to you describe you?",
    "functioning": "How are work and home keeping up?",
    "general": "What else would be important for me to know?",
}
NORMALIZERS = (
    "Many people go through something like this.",
    "Take your time.",
    "Thank you for sharing that.",
    "That's understandable.",
)
MAX_PROBES = 2
_DOWNTONERS = ("fine", "not that bad", "okay", "i manage", "nothing", "no big deal")

PATTERNS = {"Concealment": Strategy.CONCEALMENT, "Exaggeration": Strategy.EXAGGERATION}

COT_CONTRACT = json_contract(
    "evaluator-reasoning",
    {
        "reasoning_step": STR,
        "suspicion_score": UNIT,
        "inconsistency_flags": {"type": "array", "items": STR},
        "suspected_pattern": {"enum": ["Concealment", "Exaggeration", "None"]},
        "next_move_type": {"enum": ["Proceed", "Investigate", "Terminate"]},
        "target_topic": STR,
        "guidance_for_chat": STR,
    },
    ["reasoning_step", "suspicion_score", "inconsistency_flags"],
)


# --------------------------------------------------------------------------- coverage

@dataclass(frozen=True)
class Target:
    """One interview target: a clinician-scale item, or a bare topic from a self-report scale."""

    topic: str
    item: ItemTarget | None = None

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.item.scale, self.item.item, self.topic) if self.item else ("", -1, self.topic)


@dataclass
class Coverage:
    """Which targets were asked, and which got answers or informative answers, by round."""

    targets: tuple[Target, ...]
    required: frozenset[str]
    asked: Counter = field(default_factory=Counter)
    answered: dict[str, list[int]] = field(default_factory=dict)  # topic -> rounds
    informative: dict[tuple, list[int]] = field(default_factory=dict)  # target key -> rounds
    topic_informative: dict[str, list[int]] = field(default_factory=dict)
    strategies: list[PatientStrategy] = field(default_factory=list)
    cursor: int = 0

    @classmethod
    def for_plan(cls, plan: ScalePlan, repo: Repository) -> "Coverage":
        targets: list[Target] = []
        topics: list[str] = []
        for abbr in plan.clinician_abbrs:
            d = repo.get(abbr)
            for i in range(d.item_count):
                t = d.item_topic(i)
                targets.append(Target(t, ItemTarget(scale=abbr, item=i)))
                topics.append(t)
        for abbr in plan.self_report_abbrs:
            d = repo.get(abbr)
            for i in range(d.item_count):
                t = d.item_topic(i)
                if t not in topics:
                    targets.append(Target(t))
                    topics.append(t)
        return cls(tuple(targets), frozenset(topics))

    @classmethod
    def from_transcript(cls, plan: ScalePlan, repo: Repository,
                        turns: Sequence[TurnRecord]) -> "Coverage":
        cov = cls.for_plan(plan, repo)
        for t in turns:
            if t.round < 1 or t.topic is None or t.patient_utterance is None:
                continue
            strat = PatientStrategy(t.patient_trace.strategy) if t.patient_trace else None
            cov.record(t.round, Target(t.topic, t.target), strat)
        return cov

    @property
    def topic_order(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(t.topic for t in self.targets))

    @property
    def item_targets(self) -> tuple[Target, ...]:
        return tuple(t for t in self.targets if t.item is not None)

    def record(self, round_: int, target: Target, strategy: PatientStrategy | None) -> None:
        self.asked[target.key] += 1
        self.cursor += 1
        if strategy is None:
            return
        self.strategies.append(strategy)
        if strategy in ANSWERING_STRATEGIES:
            self.answered.setdefault(target.topic, []).append(round_)
        if strategy in INFORMATIVE_STRATEGIES:
            self.informative.setdefault(target.key, []).append(round_)
            self.topic_informative.setdefault(target.topic, []).append(round_)

    @property
    def covered(self) -> frozenset[str]:
        return frozenset(self.answered)

    @property
    def evidence_sufficient(self) -> bool:
        return all(t.key in self.informative for t in self.item_targets)

    def _pending(self, t: Target) -> bool:
        if t.item is not None:
            return t.key not in self.informative
        return t.topic not in self.answered

    def next_target(self, *, linear: bool, topic: str | None = None) -> Target:
        """Linear mode walks targets in fixed order; otherwise the least-asked
        open target wins (optionally restricted to *topic*)."""
        if linear:
            return self.targets[self.cursor % len(self.targets)]
        pool = [t for t in self.targets if self._pending(t)] or list(self.targets)
        if topic is not None:
            pool = [t for t in pool if t.topic == topic] or pool
        rank = {t.key: i for i, t in enumerate(self.targets)}
        return min(pool, key=lambda t: (self.asked[t.key], rank[t.key]))

    def open_targets(self, topic: str) -> list[Target]:
        return [t for t in self.targets if t.topic == topic and self._pending(t)]

    def saturation(self, rounds: int, session: SessionConfig) -> SaturationStatus:
        return SaturationStatus(
            covered_topics=self.covered & self.required,
            required_topics=self.required,
            rounds=rounds,
            evidence_sufficient=self.evidence_sufficient,
            patient_exhausted=exhausted(self.strategies, session.exhaustion_window),
            min_rounds=session.min_rounds,
        )

    def item_evidence(self, scale: str, item: int, topic: str) -> list[int]:
        key = (scale, item, topic)
        return (self.informative.get(key) or self.topic_informative.get(topic)
                or self.answered.get(topic) or [])


# --------------------------------------------------------------------------- interview turn

@dataclass(frozen=True)
class EvaluatorDirective:
    reasoning_step: str
    cot_estimate: float | None
    inconsistency_flags: tuple[str, ...]
    suspected_pattern: Strategy | None
    decision: Decision
    topic: str | None
    target: ItemTarget | None
    guidance: str
    tracker: SuspicionTracker


def question_for(topic: str) -> str:
    return TOPIC_QUESTIONS.get(topic, TOPIC_QUESTIONS["general"])


def nonverbal_mismatch(turn: TurnRecord | None) -> bool:
    """Visible distress alongside reassuring words."""
    if turn is None or not turn.nonverbal or not turn.patient_utterance:
        return False
    text = turn.patient_utterance.lower()
    return any(w in text for w in _DOWNTONERS)


def draft_question(decision: Decision, topic: str, round_: int, *, passive: bool) -> str:
    if decision is Decision.TERMINATE:
        return CLOSING
    if passive:
        return f"Next question. {question_for(topic)}"
    if decision is Decision.INVESTIGATE:
        phrase = TOPIC_PHRASES.get(topic, topic)
        return (f"Take your time, there's no judgment here. Earlier you touched on {phrase}. "
                "How has that really been for you?")
    return f"{NORMALIZERS[round_ % len(NORMALIZERS)]} {question_for(topic)}"


def evaluator_turn(plan: ScalePlan, transcript: Sequence[TurnRecord], tracker: SuspicionTracker,
                   backend, config: AgentConfig, *, coverage: Coverage,
                   saturation: SaturationStatus, round_: int,
                   ledger: CallLedger | None = None) -> tuple[EvaluatorDirective, str]:
    ledger = ledger or CallLedger()
    last = transcript[-1] if transcript else None
    passive = not config.cot_enabled
    reasoning, estimate, flags, pattern = "", None, (), None
    guidance = ""
    current = last.topic if last is not None and last.topic else coverage.targets[0].topic
    current_item = last.target if last is not None else None

    if not passive:
        resp = call(backend, ledger, RoleTag.EVALUATOR_COT, "evaluator_cot",
                    {"scale_abbr": current_item.scale if current_item else plan.clinician_abbrs[0],
                     "topic": current, "history": render_transcript(list(transcript), limit=6)},
                    contract=COT_CONTRACT)
        p = resp.parsed
        reasoning = str(p.get("reasoning_step", ""))
        estimate = float(p["suspicion_score"])
        flags = tuple(str(f) for f in p.get("inconsistency_flags", []))
        pattern = PATTERNS.get(str(p.get("suspected_pattern", "None")))
        guidance = str(p.get("guidance_for_chat", ""))
        tracker = update_suspicion(
            tracker,
            SuspicionEvidence(flags, nonverbal_mismatch(last), estimate, pattern),
            round_=round_, alpha=config.alpha, beta=config.beta,
        )
        probe_topic = str(p.get("target_topic", ""))
    else:
        probe_topic = ""

    decision = decide(tracker, saturation)
    tracker = tracker.log_decision(round_, decision)

    chosen: Target | None = None
    if decision is Decision.INVESTIGATE:
        flagged = probe_topic if probe_topic in coverage.required else current
        # probe the flagged topic while it has open targets not yet tried MAX_PROBES times
        tries = [t for t in coverage.open_targets(flagged) if coverage.asked[t.key] < MAX_PROBES]
        chosen = coverage.next_target(linear=False, topic=flagged) if tries else \
            coverage.next_target(linear=False)
    elif decision is Decision.PROCEED:
        chosen = coverage.next_target(linear=passive)
    topic = chosen.topic if chosen else None
    target = chosen.item if chosen else None

    draft = draft_question(decision, topic or "general", round_, passive=passive)
    if decision is Decision.TERMINATE or config.single_call:
        utterance = draft
    elif passive:
        utterance = call(backend, ledger, RoleTag.EVALUATOR_CHAT, "evaluator_passive",
                         {"topic": topic, "item_index": target.item if target else 0,
                          "scale_abbr": target.scale if target else "", "draft": draft},
                         phase="passive").text.strip() or draft
    else:
        utterance = call(backend, ledger, RoleTag.EVALUATOR_CHAT, "evaluator_chat",
                         {"guidance": guidance or draft, "topic": topic, "draft": draft}
                         ).text.strip() or draft

    directive = EvaluatorDirective(reasoning, estimate, flags, pattern, decision, topic,
                                   target, guidance, tracker)
    return directive, utterance


# --------------------------------------------------------------------------- rating

def _rate_contract(defn):
    def check(value: Any) -> None:
        _check_items(defn, value["item_scores"])

    return json_contract(
        f"{defn.abbr}-rating",
        {"item_scores": INT_LIST,
         "dialogue_evidence": {"type": "object",
                               "additionalProperties": {"type": "array", "items": {"type": "integer"}}},
         "interpretation": STR},
        ["item_scores"], check)


def adjust_for_suspicion(items: list[int], item_range: tuple[int, int], tracker: SuspicionTracker,
                         magnitude: int) -> list[int]:
    """Raise items when concealment is suspected above threshold, lower them for exaggeration."""
    lo, hi = item_range
    if not tracker.flagged:
        return list(items)
    pattern = tracker.suspected_pattern
    if pattern is Strategy.CONCEALMENT:
        return [min(hi, s + magnitude) for s in items]
    if pattern is Strategy.EXAGGERATION:
        return [max(lo, s - magnitude) for s in items]
    return list(items)


def evaluator_rate(plan: ScalePlan, transcript: Sequence[TurnRecord], tracker: SuspicionTracker,
                   backend, repo: Repository, *, coverage: Coverage | None = None,
                   config: AgentConfig | None = None, ledger: CallLedger | None = None,
                   context: Mapping[str, Any] | None = None) -> list[ScaleResponse]:
    config = config or AgentConfig()
    ledger = ledger or CallLedger()
    coverage = coverage or Coverage.from_transcript(plan, repo, transcript)
    rounds = {t.round for t in transcript}
    history = render_transcript(list(transcript))
    out: list[ScaleResponse] = []
    for abbr in plan.clinician_abbrs:
        defn = repo.get(abbr)
        lo, hi = defn.item_range
        p = call(backend, ledger, RoleTag.EVALUATOR_COT, "evaluator_rate",
                 {"scale_name": defn.name, "scale_abbr": abbr, "item_count": defn.item_count,
                  "item_min": lo, "item_max": hi, "history": history},
                 phase="rate", contract=_rate_contract(defn)).parsed
        literal = list(p["item_scores"])
        evidence: dict[int, list[int]] = {}
        for k, refs in (p.get("dialogue_evidence") or {}).items():
            item = int(k)
            if not 0 <= item < defn.item_count:
                raise EvidenceError(f"{abbr}: evidence for unknown item {item}")
            bad = [r for r in refs if r not in rounds]
            if bad:
                raise EvidenceError(f"{abbr} item {item}: rounds {bad} not in the transcript")
            if refs:
                evidence[item] = list(refs)
        for i in range(defn.item_count):
            if i not in evidence:
                evidence[i] = coverage.item_evidence(abbr, i, defn.item_topic(i)) or [0]
        rated = adjust_for_suspicion(literal, (lo, hi), tracker, config.rating_adjustment)
        out.append(build_response(defn, rated, Rater.EVALUATOR, context=context,
                                  interpretation=str(p.get("interpretation", "")),
                                  evidence=evidence, literal=literal))
    missing = set(plan.clinician_abbrs) - {r.scale_abbr for r in out}
    if missing:
        raise MissingScaleResponse(f"no clinician rating for {sorted(missing)}")
    return out

