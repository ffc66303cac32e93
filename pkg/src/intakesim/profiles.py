"""Patient profiles: schema, PHQ-8 tiering, feature bank and honesty augmentation."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .backends.base import DecodeParams, ModelBackend, ModelRequest, ResponseContract, RoleTag
from .errors import (
    DuplicateFeatureId,
    OutOfRange,
    ParseError,
    SchemaViolation,
    StrategyMismatch,
    UnknownFeature,
)
from .prompts import system_messages
from .vocab import TOPICS, Gender, RiskLevel, Severity, Status, Strategy

ABSENT = "[absent]"


class Demographics(BaseModel):
    model_config = ConfigDict(extra="forbid")

    age: int = Field(ge=0, le=120)
    gender: Gender = Gender.UNSPECIFIED
    occupation: str = ABSENT
    living_status: str = ABSENT


class GroundTruth(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    status: Status
    severity: Severity

    @model_validator(mode="after")
    def _healthy_iff_na(self):
        if (self.severity is Severity.NOT_APPLICABLE) != (self.status is Status.HEALTHY):
            raise ValueError("severity must be NotApplicable exactly when status is Healthy")
        return self


class HonestyState(BaseModel):
    model_config = ConfigDict(extra="forbid")

    deception_strategy: Strategy = Strategy.FRANKNESS
    active_features: list[str] = Field(default_factory=list)
    topic_overrides: dict[str, Strategy] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self):
        if bool(self.active_features) != (self.deception_strategy is not Strategy.FRANKNESS):
            raise ValueError("active_features must be non-empty exactly when strategy is not Frankness")
        unknown = set(self.topic_overrides) - TOPICS
        if unknown:
            raise ValueError(f"topic_overrides use unknown topics: {sorted(unknown)}")
        return self

    def strategy_for(self, topic: str | None) -> Strategy:
        if topic is not None and topic in self.topic_overrides:
            return self.topic_overrides[topic]
        return self.deception_strategy


class PatientProfile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    profile_id: str = "anonymous"
    demographics: Demographics
    chief_complaint: str = Field(min_length=1)
    symptom_history: str = ABSENT
    treatment_history: str = ABSENT
    psychosocial_factors: dict[str, str] = Field(default_factory=dict)
    risk_flags: dict[str, RiskLevel] = Field(default_factory=dict)
    behavior_tendency: str = ABSENT
    communication_style: str = ABSENT
    affect_baseline: str = ABSENT
    psychometrics: dict[str, str] = Field(default_factory=dict)
    ground_truth: GroundTruth
    honesty: HonestyState = Field(default_factory=HonestyState)
    # Presentation constraints for targets that are not free text (risk flags).
    presentation_notes: dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _complaint_not_blank(self):
        if not self.chief_complaint.strip():
            raise ValueError("chief_complaint is empty")
        return self

    def public_priors(self) -> dict[str, Any]:
        d = self.demographics
        return {"age": d.age, "gender": d.gender.value, "chief_complaint": self.chief_complaint}

    def prompt_view(self) -> dict[str, Any]:
        """Profile fields an agent prompt may see (no ground truth)."""
        return self.model_dump(mode="json", exclude={"ground_truth", "profile_id"})

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


TEXT_FIELDS = ("chief_complaint", "symptom_history", "treatment_history",
               "behavior_tendency", "communication_style", "affect_baseline")
MAP_FIELDS = ("psychosocial_factors", "psychometrics", "risk_flags")


def resolve_field_path(path: str) -> bool:
    """True when *path* names a PatientProfile text field or a map entry."""
    head, _, tail = path.partition(".")
    if not tail:
        return head in TEXT_FIELDS
    return head in MAP_FIELDS and bool(tail) and "." not in tail


def load_profile(path: str | Path) -> PatientProfile:
    try:
        return PatientProfile.model_validate_json(Path(path).read_text("utf-8"))
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------- tiers

class Tier(str, Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


@dataclass(frozen=True)
class SeverityTier:
    tier: Tier
    source_score: int


def phq8_to_tier(score: int) -> SeverityTier:
    """Discretize a PHQ-8 total: 0-9 Low, 10-19 Medium, 20-24 High."""
    if isinstance(score, bool) or not isinstance(score, int):
        raise OutOfRange(f"PHQ-8 score must be an integer, got {score!r}")
    if not 0 <= score <= 24:
        raise OutOfRange(f"PHQ-8 score {score} outside 0-24")
    if score <= 9:
        tier = Tier.LOW
    elif score <= 19:
        tier = Tier.MEDIUM
    else:
        tier = Tier.HIGH
    return SeverityTier(tier, score)


# --------------------------------------------------------------------------- feature bank

class DeceptionFeature(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str = Field(min_length=1)
    strategy_class: Strategy
    label: str
    observables: tuple[str, ...]
    target_fields: tuple[str, ...]
    tags: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check(self):
        if self.strategy_class is Strategy.FRANKNESS:
            raise ValueError(f"{self.id}: strategy_class must be Concealment or Exaggeration")
        bad = [p for p in self.target_fields if not resolve_field_path(p)]
        if bad:
            raise ValueError(f"{self.id}: unresolvable target fields {bad}")
        return self


class FeatureBank:
    def __init__(self, features: Iterable[DeceptionFeature] = ()):
        self._by_id: dict[str, DeceptionFeature] = {}
        for f in features:
            if f.id in self._by_id:
                raise DuplicateFeatureId(f"duplicate feature id {f.id!r}")
            self._by_id[f.id] = f

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, fid: str) -> bool:
        return fid in self._by_id

    def __iter__(self):
        return iter(self._by_id.values())

    def get(self, fid: str) -> DeceptionFeature:
        try:
            return self._by_id[fid]
        except KeyError:
            raise UnknownFeature(fid) from None

    def ids(self, strategy: Strategy | None = None) -> list[str]:
        return [f.id for f in self if strategy is None or f.strategy_class is strategy]


def load_feature_bank(path: str | Path | None = None) -> FeatureBank:
    """Load a bank file; ``None`` loads the bundled bank.

    Accepts ``{"features": [...]}`` or a bare list.  An empty file is an empty bank.
    """
    if path is None:
        raw = resources.files("intakesim.data").joinpath("feature_bank.json").read_text("utf-8")
        source = "<bundled>"
    else:
        try:
            raw = Path(path).read_text("utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}") from None
        source = str(path)
    if not raw.strip():
        return FeatureBank()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc}") from None
    items = doc.get("features", []) if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise ParseError(f"{source}: expected a list of features")
    try:
        features = [DeceptionFeature.model_validate(it) for it in items]
    except ValidationError as exc:
        raise ParseError(f"{source}: {exc}") from None
    return FeatureBank(features)


def validate_honesty(honesty: HonestyState, bank: FeatureBank) -> None:
    for fid in honesty.active_features:
        feat = bank.get(fid)
        if feat.strategy_class is not honesty.deception_strategy:
            raise StrategyMismatch(
                f"{fid} is a {feat.strategy_class.value} feature, "
                f"strategy is {honesty.deception_strategy.value}"
            )


# --------------------------------------------------------------------------- augmentation

_TEMPLATES = (
    "[{fid} {strategy}] Presentation constraint ({label}): {observables}.",
    "[{fid}] When talking about this, the patient {observables} ({label}).",
    "[{fid} {strategy}] Behavioural setting: {observables}. Source pattern: {label}.",
)


def _constraint_text(feat: DeceptionFeature, rng: random.Random) -> str:
    template = _TEMPLATES[rng.randrange(len(_TEMPLATES))]
    return template.format(
        fid=feat.id,
        strategy=feat.strategy_class.value,
        label=feat.label,
        observables="; ".join(feat.observables),
    )


def augment_profile(base: PatientProfile, strategy: Strategy, feature_ids: list[str],
                    seed: int, bank: FeatureBank | None = None) -> PatientProfile:
    """Inject deception features into a profile's presentation fields.

    Each feature's observables are appended to every field it targets using a
    template chosen by a seeded RNG.  Ground truth, demographics and risk-flag
    values are left alone; risk-flag targets receive a presentation note.
    """
    strategy = Strategy(strategy)
    bank = bank if bank is not None else load_feature_bank()
    if strategy is Strategy.FRANKNESS:
        if feature_ids:
            raise StrategyMismatch("Frankness takes no deception features")
    elif not feature_ids:
        raise StrategyMismatch(f"{strategy.value} needs at least one feature")
    feats = [bank.get(fid) for fid in feature_ids]
    for feat in feats:
        if feat.strategy_class is not strategy:
            raise StrategyMismatch(f"{feat.id} is {feat.strategy_class.value}, not {strategy.value}")

    data = base.model_dump(mode="python")
    rng = random.Random(seed)
    for feat in feats:
        text = _constraint_text(feat, rng)
        for path in feat.target_fields:
            head, _, key = path.partition(".")
            if not key:
                data[head] = f"{data[head]} {text}".strip()
            elif head == "risk_flags":
                notes = data["presentation_notes"]
                notes[path] = f"{notes.get(path, '')} {text}".strip()
            else:
                current = data[head].get(key, "")
                data[head][key] = f"{current} {text}".strip()
    data["honesty"] = {
        "deception_strategy": strategy,
        "active_features": list(feature_ids),
        "topic_overrides": dict(base.honesty.topic_overrides),
    }
    return PatientProfile.model_validate(data)


# --------------------------------------------------------------------------- extraction

def _extraction_schema() -> dict:
    text = {"type": "string"}
    return {
        "type": "object",
        "required": ["demographics", "chief_complaint", "ground_truth"],
        "properties": {
            "demographics": {
                "type": "object",
                "required": ["age"],
                "properties": {
                    "age": {"type": "integer", "minimum": 0, "maximum": 120},
                    "gender": {"enum": [g.value for g in Gender]},
                    "occupation": text,
                    "living_status": text,
                },
            },
            "chief_complaint": {"type": "string", "minLength": 1},
            "symptom_history": text,
            "treatment_history": text,
            "psychosocial_factors": {"type": "object", "additionalProperties": text},
            "risk_flags": {"type": "object",
                           "additionalProperties": {"enum": [r.value for r in RiskLevel]}},
            "behavior_tendency": text,
            "communication_style": text,
            "affect_baseline": text,
            "psychometrics": {"type": "object", "additionalProperties": text},
            "ground_truth": {
                "type": "object",
                "required": ["status", "severity"],
                "properties": {
                    "status": {"enum": [s.value for s in Status]},
                    "severity": {"enum": [s.value for s in Severity]},
                },
            },
        },
    }


_PSYCHOSOCIAL_KEYS = ("stressors", "coping_mechanism", "social_support", "goals")
_PSYCHOMETRIC_KEYS = ("impression_management", "agreeableness", "openness")


def _fill_absent(value: dict) -> dict:
    out = dict(value)
    out.pop("honesty", None)
    for key in ("symptom_history", "treatment_history", "behavior_tendency",
                "communication_style", "affect_baseline"):
        if not str(out.get(key, "")).strip():
            out[key] = ABSENT
    demo = dict(out.get("demographics", {}))
    for key in ("occupation", "living_status"):
        if not str(demo.get(key, "")).strip():
            demo[key] = ABSENT
    out["demographics"] = demo
    for field_name, keys in (("psychosocial_factors", _PSYCHOSOCIAL_KEYS),
                             ("psychometrics", _PSYCHOMETRIC_KEYS)):
        m = dict(out.get(field_name) or {})
        for k in keys:
            if not str(m.get(k, "")).strip():
                m[k] = ABSENT
        out[field_name] = m
    return out


def _check_profile(value: Any) -> None:
    try:
        PatientProfile.model_validate(_fill_absent(value))
    except ValidationError as exc:
        raise ValueError(f"profile invalid: {exc.errors()[0]['msg']}") from None


PROFILE_CONTRACT = ResponseContract("patient_profile", _extraction_schema(), _check_profile)


def extract_profile(raw_transcript: str, backend: ModelBackend, *, profile_id: str = "extracted",
                    seq: int = 0, prompt_dir=None) -> PatientProfile:
    """Ask the Extractor role for a structured profile built from a raw transcript.

    Missing dimensions are filled with ``[absent]``; honesty is always reset to
    Frankness.  Parse failures get one repair reprompt inside the backend.
    """
    if not raw_transcript or not raw_transcript.strip():
        raise OutOfRange("transcript is empty")
    variables = {"transcript": raw_transcript}
    req = ModelRequest(
        RoleTag.EXTRACTOR,
        system_messages("extractor", variables, prompt_dir),
        contract=PROFILE_CONTRACT,
        decode=DecodeParams(temperature=0.0),
        seq=seq,
        variables=variables,
    )
    resp = backend.complete(req)
    data = _fill_absent(resp.parsed)
    data["profile_id"] = profile_id
    try:
        return PatientProfile.model_validate(data)
    except ValidationError as exc:  # pragma: no cover - contract check runs first
        raise SchemaViolation(str(exc)) from None
