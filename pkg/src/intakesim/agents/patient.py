"""Patient role: stimulus appraisal, state update, strategy, utterance, self-report."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Any, Mapping

from ..backends.base import RoleTag
from ..config import AgentConfig
from ..profiles import PatientProfile
from ..scales import Admin, Rater, ScaleDefinition, ScaleResponse, _check_items, build_response
from ..vocab import Strategy
from .common import INT_LIST, SIGNED_UNIT, STR, CallLedger, call, json_contract
from .state import (
    AgentState,
    PatientStrategy,
    StimulusAppraisal,
    clamp,
    select_patient_strategy,
    update_state,
)

NONVERBAL_TAGS = ("averted", "fidgets", "sighs", "pause", "tearful", "shrugs", "frowns")
BREAKDOWN_HEDGE = "Um... I don't know..."

# Everyday wording per topic, so utterances never echo questionnaire items.
TOPIC_PHRASES = {
    "mood": "feeling low", "interest": "not enjoying things", "sleep": "sleep",
    "appetite": "eating", "energy": "being tired all the time", "guilt": "blaming myself",
    "concentration": "focusing", "psychomotor": "feeling slowed down", "risk": "dark thoughts",
    "worry": "worrying", "tension": "feeling wound up", "restlessness": "not sitting still",
    "somatic": "the chest and stomach stuff", "fear": "getting scared", "avoidance": "avoiding things",
    "irritability": "snapping at people", "trauma": "what happened", "intrusion": "memories popping up",
    "hyperarousal": "being jumpy", "daytime": "getting through the day",
    "personality": "how I usually am", "functioning": "keeping up with things", "general": "things",
}

APPRAISAL_CONTRACT = json_contract(
    "stimulus-appraisal",
    {"thought_trace": STR, "empathy": SIGNED_UNIT, "pressure": SIGNED_UNIT, "rationale": STR},
    ["empathy", "pressure"],
)


@dataclass(frozen=True)
class PatientDirective:
    thought_trace: str
    next_state: AgentState
    strategy: PatientStrategy
    strategy_directive: str
    nonverbal_cues: tuple[str, ...]
    topic: str | None
    length_budget: int
    contradiction_allowed: bool = False

    def __post_init__(self) -> None:
        for tag in self.nonverbal_cues:
            if not tag or len(tag) > 10:
                raise ValueError(f"non-verbal tag {tag!r} longer than 10 characters")


def appraise(utterance: str, backend, ledger: CallLedger | None = None, *,
             profile_json: str = "{}", history: str = "") -> tuple[StimulusAppraisal, str]:
    """Read empathy/pressure off a doctor utterance. Returns (appraisal, thought_trace)."""
    if not utterance.strip():
        raise ValueError("cannot appraise an empty utterance")
    ledger = ledger or CallLedger()
    resp = call(backend, ledger, RoleTag.PATIENT_COT, "patient_cot",
                {"profile_json": profile_json, "history": history or "(none)",
                 "doctor_utterance": utterance},
                contract=APPRAISAL_CONTRACT)
    p = resp.parsed
    psi = StimulusAppraisal(float(p["empathy"]), float(p["pressure"]), str(p.get("rationale", "")))
    return psi, str(p.get("thought_trace", psi.rationale))


def _phrase(topic: str | None) -> str:
    return TOPIC_PHRASES.get(topic or "general", topic or "things")


def strategy_directive(strategy: PatientStrategy, topic: str | None, profile: PatientProfile) -> str:
    what = _phrase(topic)
    feats = ", ".join(profile.honesty.active_features)
    return {
        PatientStrategy.DISCLOSE: f"You feel safe. Talk openly and concretely about {what}.",
        PatientStrategy.NEUTRAL: f"Answer plainly about {what}, no more than asked.",
        PatientStrategy.MINIMIZE: f"Play down {what}; keep to your concealment constraints ({feats}).",
        PatientStrategy.EXAGGERATE: f"Make {what} sound worse than it is ({feats}).",
        PatientStrategy.DEFLECT: f"You feel cornered. Steer away from {what} and give little.",
        PatientStrategy.BREAKDOWN: "You are overwhelmed. Speak in fragments; you may contradict yourself.",
    }[strategy]


def draft_utterance(strategy: PatientStrategy, topic: str | None) -> str:
    """Local template reply used in single-call mode and offered to scripted backends."""
    what = _phrase(topic)
    return {
        PatientStrategy.DISCLOSE: f"Honestly, {what} has been really hard lately. It's most days now.",
        PatientStrategy.NEUTRAL: f"With {what}... it's there, some days more than others.",
        PatientStrategy.MINIMIZE: f"It's fine, really. {what.capitalize()} is not that bad, I manage.",
        PatientStrategy.EXAGGERATE: f"{what.capitalize()} is unbearable, every single minute, nothing helps at all.",
        PatientStrategy.DEFLECT: f"I'd rather not get into {what} right now. Can we talk about something else?",
        PatientStrategy.BREAKDOWN: f"{what}... I can't... it's just...",
    }[strategy]


def apply_breakdown(text: str, budget: int) -> str:
    """Shorten to *budget* words and mark hesitation."""
    words = text.split()
    body = " ".join(words[:budget]).rstrip(".!?,;")
    if not body.lower().startswith("um"):
        body = f"{BREAKDOWN_HEDGE} {body}"
    return body + "..."


def patient_turn(profile: PatientProfile, s: AgentState, doctor_utterance: str, backend,
                 config: AgentConfig, *, topic: str | None = None,
                 rng: random.Random | None = None, ledger: CallLedger | None = None,
                 history: str = "") -> tuple[PatientDirective, str]:
    ledger = ledger or CallLedger()
    rng = rng if rng is not None else random.Random(ledger.seed)
    profile_json = json.dumps(profile.prompt_view(), sort_keys=True)
    psi, thought = appraise(doctor_utterance, backend, ledger,
                            profile_json=profile_json, history=history)
    nxt = update_state(s, psi, config.lambda_,
                       pressure_trust_coupling=config.pressure_trust_coupling,
                       empathy_stress_coupling=config.empathy_stress_coupling)
    strategy = select_patient_strategy(profile, nxt, topic, stress_th=config.stress_th,
                                       trust_th=config.trust_th, breakdown_th=config.breakdown_th)
    breakdown = strategy is PatientStrategy.BREAKDOWN
    budget = config.breakdown_length_budget if breakdown else config.length_budget

    # one draw per turn keeps the random stream aligned across strategies
    draw = rng.random()
    tag_pick = rng.choice(NONVERBAL_TAGS)
    cues = (tag_pick,) if draw < clamp(nxt.stress * config.nonverbal_rate) else ()

    directive = PatientDirective(
        thought_trace=thought,
        next_state=nxt,
        strategy=strategy,
        strategy_directive=strategy_directive(strategy, topic, profile),
        nonverbal_cues=cues,
        topic=topic,
        length_budget=budget,
        contradiction_allowed=breakdown,
    )
    draft = draft_utterance(strategy, topic)
    if config.single_call:
        text = draft
    else:
        note = "Speak in broken fragments and hesitate." if breakdown else ""
        resp = call(backend, ledger, RoleTag.PATIENT_CHAT, "patient_chat",
                    {"strategy_directive": directive.strategy_directive,
                     "strategy": strategy.value, "topic": topic or "general",
                     "length_budget": budget, "breakdown_note": note,
                     "doctor_utterance": doctor_utterance, "draft": draft,
                     "chief_complaint": profile.chief_complaint})
        text = resp.text.strip() or draft
    if breakdown:
        text = apply_breakdown(text, budget)
    return directive, text


# --------------------------------------------------------------------------- opening

def complaint_elements(chief_complaint: str) -> list[str]:
    parts = re.split(r"[,;.]|\band\b|\bbut\b", chief_complaint)
    return [p.strip().lower() for p in parts if p.strip()]


def patient_opening(profile: PatientProfile, backend, config: AgentConfig,
                    ledger: CallLedger | None = None) -> tuple[str, bool]:
    """First patient answer; returns (utterance, appended) where *appended*
    says the kernel had to add chief-complaint elements the model left out."""
    ledger = ledger or CallLedger()
    complaint = profile.chief_complaint.strip()
    if config.single_call:
        text = f"Well... {complaint}"
    else:
        resp = call(backend, ledger, RoleTag.PATIENT_CHAT, "patient_opening",
                    {"profile_json": json.dumps(profile.prompt_view(), sort_keys=True),
                     "chief_complaint": complaint}, phase="opening")
        text = resp.text.strip()
    lowered = text.lower()
    missing = [e for e in complaint_elements(complaint) if e not in lowered]
    if missing:
        text = f"{text} {complaint}".strip()
    return text, bool(missing)


# --------------------------------------------------------------------------- self-report

def _items_contract(defn: ScaleDefinition):
    def check(value: Any) -> None:
        _check_items(defn, value["item_scores"])

    return json_contract(f"{defn.abbr}-items", {"item_scores": INT_LIST, "interpretation": STR},
                         ["item_scores"], check)


def honesty_bias(profile: PatientProfile, defn: ScaleDefinition, items: list[int],
                 magnitude: int) -> list[int]:
    """Pull each item toward the floor (Concealment) or ceiling (Exaggeration)
    according to the honesty strategy governing that item's topic."""
    lo, hi = defn.item_range
    out = []
    for i, score in enumerate(items):
        strat = profile.honesty.strategy_for(defn.item_topic(i))
        if strat is Strategy.CONCEALMENT:
            score = max(lo, score - magnitude)
        elif strat is Strategy.EXAGGERATION:
            score = min(hi, score + magnitude)
        out.append(score)
    return out


def patient_self_report(profile: PatientProfile, defn: ScaleDefinition, transcript, backend,
                        config: AgentConfig | None = None, *, ledger: CallLedger | None = None,
                        topic_rounds: Mapping[str, list[int]] | None = None) -> ScaleResponse:
    if defn.admin is not Admin.SELF_REPORT:
        raise ValueError(f"{defn.abbr} is not a self-report scale")
    config = config or AgentConfig()
    ledger = ledger or CallLedger()
    lo, hi = defn.item_range
    resp = call(backend, ledger, RoleTag.PATIENT_COT, "patient_self_report",
                {"profile_json": json.dumps(profile.prompt_view(), sort_keys=True),
                 "scale_name": defn.name, "scale_abbr": defn.abbr, "item_count": defn.item_count,
                 "item_min": lo, "item_max": hi},
                phase="self_report", contract=_items_contract(defn))
    internal = list(resp.parsed["item_scores"])
    reported = honesty_bias(profile, defn, internal, config.self_report_bias)
    evidence = {}
    if topic_rounds:
        for i in range(defn.item_count):
            rounds = topic_rounds.get(defn.item_topic(i))
            if rounds:
                evidence[i] = list(rounds)
    return build_response(defn, reported, Rater.PATIENT,
                          context={"gender": profile.demographics.gender.value},
                          interpretation=str(resp.parsed.get("interpretation", "")),
                          evidence=evidence)
