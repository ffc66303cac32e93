"""Serialized shapes: transcript rounds, diagnostic reports, corpus records."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .profiles import HonestyState, PatientProfile
from .scales import ScalePlan, ScaleResponse
from .vocab import Severity, Status

MAX_TAG_LEN = 10


class ItemTarget(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    scale: str
    item: int = Field(ge=0)


class ClinicianTrace(BaseModel):
    model_config = ConfigDict(extra="forbid")

    xi: float = Field(ge=0.0, le=1.0)
    decision: str
    hypothesis_note: str = ""


class PatientTrace(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trust: float = Field(ge=0.0, le=1.0)
    stress: float = Field(ge=0.0, le=1.0)
    strategy: str
    directive_text: str = ""


class TurnRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    round: int = Field(ge=0)
    doctor_utterance: str
    patient_utterance: str | None = None
    topic: str | None = None
    target: ItemTarget | None = None
    nonverbal: list[str] = Field(default_factory=list)
    clinician_trace: ClinicianTrace | None = None
    patient_trace: PatientTrace | None = None

    @field_validator("nonverbal")
    @classmethod
    def _short_tags(cls, tags: list[str]) -> list[str]:
        for t in tags:
            if not t or len(t) > MAX_TAG_LEN:
                raise ValueError(f"non-verbal tag {t!r} must be 1-{MAX_TAG_LEN} characters")
        return tags


class EvidenceRef(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    round: int = Field(ge=0)
    note: str = ""


class DiagnosticReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    status: Status
    severity: Severity
    symptom_match: str
    discrepancy_resolution: str
    key_evidence: list[EvidenceRef] = Field(min_length=1)
    rule: str = ""

    @model_validator(mode="after")
    def _healthy_iff_na(self):
        if (self.severity is Severity.NOT_APPLICABLE) != (self.status is Status.HEALTHY):
            raise ValueError("severity must be NotApplicable exactly when status is Healthy")
        return self


class CorpusRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    record_id: str
    profile: PatientProfile
    plan: ScalePlan
    final_transcript: list[TurnRecord]
    patient_self_report: dict[str, ScaleResponse]
    doctor_clinician_report: dict[str, ScaleResponse]
    diagnosis: DiagnosticReport
    honesty_echo: HonestyState
    run_meta: dict[str, Any] = Field(default_factory=dict)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CorpusRecord":
        return cls.model_validate_json(text)

    @property
    def rounds(self) -> set[int]:
        return {t.round for t in self.final_transcript}

    @property
    def interview_rounds(self) -> int:
        """Rounds >= 1 in which the patient answered."""
        return sum(1 for t in self.final_transcript if t.round >= 1 and t.patient_utterance is not None)


def render_transcript(turns: list[TurnRecord], *, limit: int | None = None) -> str:
    """Plain-text dialogue, one speaker line each, non-verbal tags in brackets."""
    rows = turns if limit is None else turns[-limit:]
    lines: list[str] = []
    for t in rows:
        lines.append(f"[{t.round}] Doctor: {t.doctor_utterance}")
        if t.patient_utterance is not None:
            tags = "".join(f" [{n}]" for n in t.nonverbal)
            lines.append(f"[{t.round}] Patient:{tags} {t.patient_utterance}")
    return "\n".join(lines)
