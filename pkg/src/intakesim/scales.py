"""Scale repository, scoring and battery-plan validation.

Band semantics live in the data file, not here: for ``SumBands`` and
``Classification`` a band's threshold is the smallest total inside it; for
``ReverseBands`` it is the largest total inside it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import (
    CountMismatch,
    ItemCountMismatch,
    ItemOutOfRange,
    MissingContext,
    ParseError,
    UnknownScale,
)
from .vocab import DOMAIN_TOPICS, PRIMARY_DOMAINS, Domain, Severity

EXPECTED_SCALE_COUNT = 46
EXTERNAL_ALGORITHM = "requires-external-algorithm"
POSITIVE, NEGATIVE = "Positive", "Negative"


class Admin(str, Enum):
    SELF_REPORT = "SelfReport"
    CLINICIAN_RATED = "ClinicianRated"


class ScoringMode(str, Enum):
    SUM_BANDS = "SumBands"
    REVERSE_BANDS = "ReverseBands"
    CONDITIONAL_CUTOFF = "ConditionalCutoff"
    CLASSIFICATION = "Classification"
    ALGORITHM_STUB = "AlgorithmStub"


class Band(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    threshold: int
    label: str
    grade: Severity | None = None


class ScaleDefinition(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    abbr: str
    domain: Domain
    admin: Admin
    item_count: int = Field(ge=1)
    item_range: tuple[int, int]
    scoring_mode: ScoringMode
    bands: tuple[Band, ...] = ()
    condition_key: str | None = None
    condition_cutoffs: dict[str, int] = Field(default_factory=dict)
    note: str = ""

    @model_validator(mode="after")
    def _check(self):
        lo, hi = self.item_range
        if lo > hi:
            raise ValueError(f"{self.abbr}: item_range min > max")
        ts = [b.threshold for b in self.bands]
        if self.scoring_mode is ScoringMode.REVERSE_BANDS:
            if any(a <= b for a, b in zip(ts, ts[1:])):
                raise ValueError(f"{self.abbr}: reverse band thresholds must strictly decrease")
        elif any(a >= b for a, b in zip(ts, ts[1:])):
            raise ValueError(f"{self.abbr}: band thresholds must strictly increase")
        if self.scoring_mode in (ScoringMode.SUM_BANDS, ScoringMode.REVERSE_BANDS,
                                 ScoringMode.CLASSIFICATION) and not self.bands:
            raise ValueError(f"{self.abbr}: {self.scoring_mode.value} needs bands")
        if self.scoring_mode is ScoringMode.CONDITIONAL_CUTOFF:
            if not self.condition_key or not self.condition_cutoffs:
                raise ValueError(f"{self.abbr}: conditional cut-off needs condition_key and cut-offs")
        return self

    @property
    def min_total(self) -> int:
        return self.item_count * self.item_range[0]

    @property
    def max_total(self) -> int:
        return self.item_count * self.item_range[1]

    @property
    def is_primary(self) -> bool:
        return self.domain in PRIMARY_DOMAINS

    def item_topic(self, index: int) -> str:
        topics = DOMAIN_TOPICS[self.domain]
        return topics[index % len(topics)]

    def topics(self) -> set[str]:
        return {self.item_topic(i) for i in range(min(self.item_count, 64))}


class Repository:
    """Immutable, abbreviation-keyed collection of scale definitions."""

    def __init__(self, definitions: Iterable[ScaleDefinition]):
        self._defs: dict[str, ScaleDefinition] = {}
        for d in definitions:
            if d.abbr in self._defs:
                raise ParseError(f"duplicate scale abbreviation {d.abbr!r}")
            self._defs[d.abbr] = d
        self._by_name = {d.name.lower(): d for d in self._defs.values()}

    def __len__(self) -> int:
        return len(self._defs)

    def __iter__(self):
        return iter(self._defs.values())

    def __contains__(self, abbr: str) -> bool:
        return abbr in self._defs

    def get(self, abbr: str) -> ScaleDefinition:
        try:
            return self._defs[abbr]
        except KeyError:
            raise UnknownScale(abbr) from None

    def lookup(self, name: str) -> ScaleDefinition | None:
        """Find by abbreviation or full name (case-insensitive)."""
        name = name.strip()
        if name in self._defs:
            return self._defs[name]
        for abbr, d in self._defs.items():
            if abbr.lower() == name.lower():
                return d
        return self._by_name.get(name.lower())

    def by_domain(self, domain: Domain, admin: Admin | None = None) -> list[ScaleDefinition]:
        return [d for d in self if d.domain is domain and (admin is None or d.admin is admin)]

    def catalog(self) -> str:
        return "\n".join(f"- {d.abbr}: {d.name} ({d.domain.value}, {d.admin.value})" for d in self)


def load_repository(path: str | Path | None = None, expected: int = EXPECTED_SCALE_COUNT) -> Repository:
    if path is None:
        raw = resources.files("intakesim.data").joinpath("scales.json").read_text("utf-8")
        source = "<bundled>"
    else:
        try:
            raw = Path(path).read_text("utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc}") from None
        source = str(path)
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc}") from None
    items = doc.get("scales") if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise ParseError(f"{source}: expected a list of scale definitions")
    try:
        defs = [ScaleDefinition.model_validate(it) for it in items]
    except ValidationError as exc:
        raise ParseError(f"{source}: {exc}") from None
    if expected is not None and len(defs) != expected:
        raise CountMismatch(f"{source}: {len(defs)} scale definitions, expected {expected}")
    return Repository(defs)


# --------------------------------------------------------------------------- scoring

def _check_items(defn: ScaleDefinition, item_scores: list[int]) -> None:
    if len(item_scores) != defn.item_count:
        raise ItemCountMismatch(f"{defn.abbr} expects {defn.item_count} items, got {len(item_scores)}")
    lo, hi = defn.item_range
    for i, s in enumerate(item_scores):
        if isinstance(s, bool) or not isinstance(s, int) or not lo <= s <= hi:
            raise ItemOutOfRange(f"{defn.abbr} item {i}: {s!r} outside {lo}-{hi}")


def _band_for(defn: ScaleDefinition, total: int) -> Band:
    if defn.scoring_mode is ScoringMode.REVERSE_BANDS:
        chosen = defn.bands[0]
        for band in defn.bands:
            if total <= band.threshold:
                chosen = band
        return chosen
    chosen = defn.bands[0]
    for band in defn.bands:
        if band.threshold <= total:
            chosen = band
    return chosen


def _cutoff(defn: ScaleDefinition, context: Mapping[str, Any] | None) -> int:
    key = defn.condition_key
    if not context or key not in context:
        raise MissingContext(f"{defn.abbr} needs context[{key!r}]")
    value = context[key]
    value = getattr(value, "value", value)
    if value not in defn.condition_cutoffs:
        raise MissingContext(f"{defn.abbr}: no cut-off for {key}={value!r}")
    return defn.condition_cutoffs[value]


def score_scale(defn: ScaleDefinition, item_scores: list[int],
                context: Mapping[str, Any] | None = None) -> tuple[int, str]:
    """Total and severity label for a complete item vector."""
    _check_items(defn, item_scores)
    total = sum(item_scores)
    mode = defn.scoring_mode
    if mode is ScoringMode.ALGORITHM_STUB:
        return total, EXTERNAL_ALGORITHM
    if mode is ScoringMode.CONDITIONAL_CUTOFF:
        return total, POSITIVE if total >= _cutoff(defn, context) else NEGATIVE
    return total, _band_for(defn, total).label


def clinical_grade(defn: ScaleDefinition, total: int,
                   context: Mapping[str, Any] | None = None) -> Severity | None:
    """Map a total onto the shared Mild/Moderate/Severe grading, if the scale supports it.

    Primary-domain scales without graded bands fall back to quarters of the
    total range.
    """
    mode = defn.scoring_mode
    if mode in (ScoringMode.ALGORITHM_STUB, ScoringMode.CLASSIFICATION):
        return None
    if mode is ScoringMode.CONDITIONAL_CUTOFF:
        return Severity.MODERATE if total >= _cutoff(defn, context) else Severity.NOT_APPLICABLE
    band = _band_for(defn, total)
    if band.grade is not None or not defn.is_primary:
        return band.grade
    span = defn.max_total - defn.min_total
    frac = (total - defn.min_total) / span if span else 0.0
    if frac < 0.25:
        return Severity.NOT_APPLICABLE
    if frac < 0.5:
        return Severity.MILD
    if frac < 0.75:
        return Severity.MODERATE
    return Severity.SEVERE


def band_index(defn: ScaleDefinition, total: int) -> int:
    return defn.bands.index(_band_for(defn, total))


# --------------------------------------------------------------------------- responses

class Rater(str, Enum):
    PATIENT = "Patient"
    EVALUATOR = "Evaluator"


class ScaleResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scale_abbr: str
    item_scores: list[int]
    total_score: int
    severity: str
    interpretation: str = ""
    dialogue_evidence: dict[int, list[int]] = Field(default_factory=dict)
    rater: Rater
    # Transcript-literal estimate before suspicion adjustment (clinician ratings only).
    literal_item_scores: list[int] | None = None


def build_response(defn: ScaleDefinition, item_scores: list[int], rater: Rater, *,
                   context: Mapping[str, Any] | None = None, interpretation: str = "",
                   evidence: Mapping[int, list[int]] | None = None,
                   literal: list[int] | None = None) -> ScaleResponse:
    total, severity = score_scale(defn, item_scores, context)
    return ScaleResponse(
        scale_abbr=defn.abbr,
        item_scores=list(item_scores),
        total_score=total,
        severity=severity,
        interpretation=interpretation or f"{defn.abbr} total {total}: {severity}",
        dialogue_evidence={int(k): sorted(set(v)) for k, v in (evidence or {}).items()},
        rater=rater,
        literal_item_scores=list(literal) if literal is not None else None,
    )


def response_violations(resp: ScaleResponse, defn: ScaleDefinition, *,
                        context: Mapping[str, Any] | None = None,
                        rounds: set[int] | None = None) -> list[tuple[str, str]]:
    """Recompute a stored response; return ``(code, detail)`` pairs for every problem."""
    out: list[tuple[str, str]] = []
    try:
        total, severity = score_scale(defn, resp.item_scores, context)
    except ItemCountMismatch as exc:
        return [("ItemCountMismatch", str(exc))]
    except ItemOutOfRange as exc:
        return [("ItemOutOfRange", str(exc))]
    except MissingContext as exc:
        return [("MissingContext", str(exc))]
    if total != resp.total_score:
        out.append(("TotalMismatch", f"{defn.abbr}: stored {resp.total_score}, recomputed {total}"))
    if severity != resp.severity:
        out.append(("SeverityMismatch", f"{defn.abbr}: stored {resp.severity!r}, recomputed {severity!r}"))
    if rounds is not None:
        for item, refs in resp.dialogue_evidence.items():
            if not 0 <= item < defn.item_count:
                out.append(("EvidenceItem", f"{defn.abbr}: evidence for unknown item {item}"))
            bad = [r for r in refs if r not in rounds]
            if bad:
                out.append(("EvidenceRound", f"{defn.abbr} item {item}: rounds {bad} not in transcript"))
    return out


# --------------------------------------------------------------------------- plans

class PlanEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    abbr: str
    reason: str = ""


class ScalePlan(BaseModel):
    model_config = ConfigDict(extra="forbid")

    clinician_scales: list[PlanEntry] = Field(default_factory=list)
    self_report_scales: list[PlanEntry] = Field(default_factory=list)

    @property
    def clinician_abbrs(self) -> list[str]:
        return [e.abbr for e in self.clinician_scales]

    @property
    def self_report_abbrs(self) -> list[str]:
        return [e.abbr for e in self.self_report_scales]

    @classmethod
    def of(cls, clinician: list[str], self_report: list[str], reason: str = "") -> "ScalePlan":
        return cls(
            clinician_scales=[PlanEntry(abbr=a, reason=reason) for a in clinician],
            self_report_scales=[PlanEntry(abbr=a, reason=reason) for a in self_report],
        )

    def primary_domain(self, repo: Repository) -> Domain | None:
        for abbr in self.clinician_abbrs + self.self_report_abbrs:
            if abbr in repo and repo.get(abbr).is_primary:
                return repo.get(abbr).domain
        return None


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, code: str, detail: str) -> None:
        self.violations.append(Violation(code, detail))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:  # truthy when there is something to report
        return bool(self.violations)

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [{"code": v.code, "detail": v.detail} for v in self.violations]}


def validate_plan(plan: ScalePlan, repo: Repository) -> ValidationReport:
    report = ValidationReport()
    if not plan.clinician_scales:
        report.add("EmptyClinicianList", "clinician_scales must not be empty")
    primaries: set[Domain] = set()
    seen: set[str] = set()
    for expected, entries in ((Admin.CLINICIAN_RATED, plan.clinician_scales),
                              (Admin.SELF_REPORT, plan.self_report_scales)):
        for e in entries:
            if e.abbr in seen:
                report.add("DuplicateScale", f"{e.abbr} selected more than once")
            seen.add(e.abbr)
            if e.abbr not in repo:
                report.add("UnknownScale", f"{e.abbr!r} is not in the repository")
                continue
            d = repo.get(e.abbr)
            if d.admin is not expected:
                report.add("AdminMismatch", f"{e.abbr} is {d.admin.value}, listed as {expected.value}")
            if d.is_primary:
                primaries.add(d.domain)
    if len(primaries) > 1:
        names = ", ".join(sorted(p.value for p in primaries))
        report.add("MixedPrimaryDomains", f"plan mixes primary domains: {names}")
    return report
