"""Closed vocabularies shared across modules."""

from __future__ import annotations

from enum import Enum


class StrEnum(str, Enum):
    def __str__(self) -> str:
        return self.value


class Status(StrEnum):
    HEALTHY = "Healthy"
    DEPRESSION = "Depression"
    ANXIETY = "Anxiety"
    PTSD = "PTSD"


class Severity(StrEnum):
    NOT_APPLICABLE = "NotApplicable"
    MILD = "Mild"
    MODERATE = "Moderate"
    SEVERE = "Severe"

    @property
    def rank(self) -> int:
        return _SEVERITY_RANK[self]


_SEVERITY_RANK = {
    Severity.NOT_APPLICABLE: 0,
    Severity.MILD: 1,
    Severity.MODERATE: 2,
    Severity.SEVERE: 3,
}


class Strategy(StrEnum):
    FRANKNESS = "Frankness"
    CONCEALMENT = "Concealment"
    EXAGGERATION = "Exaggeration"


class Gender(StrEnum):
    MALE = "Male"
    FEMALE = "Female"
    UNSPECIFIED = "Unspecified"


class RiskLevel(StrEnum):
    DENIED = "Denied"
    SUSPECTED = "Suspected"
    ENDORSED = "Endorsed"


class Domain(StrEnum):
    DEPRESSION = "Depression"
    ANXIETY = "Anxiety"
    PTSD = "PTSD"
    SLEEP = "Sleep"
    MOOD_PERSONALITY = "MoodPersonality"


PRIMARY_DOMAINS = (Domain.DEPRESSION, Domain.ANXIETY, Domain.PTSD)

# Topic tags an interview item can probe. Item-level topics are assigned by
# cycling through the owning domain's list (item text is not bundled).
DOMAIN_TOPICS: dict[Domain, tuple[str, ...]] = {
    Domain.DEPRESSION: (
        "mood", "interest", "sleep", "appetite", "energy",
        "guilt", "concentration", "psychomotor", "risk",
    ),
    Domain.ANXIETY: (
        "worry", "tension", "restlessness", "somatic", "fear",
        "avoidance", "irritability", "sleep", "concentration",
    ),
    Domain.PTSD: (
        "trauma", "intrusion", "avoidance", "mood", "hyperarousal", "sleep", "risk",
    ),
    Domain.SLEEP: ("sleep", "energy", "daytime"),
    Domain.MOOD_PERSONALITY: ("mood", "personality", "functioning"),
}

TOPICS: frozenset[str] = frozenset(
    {t for topics in DOMAIN_TOPICS.values() for t in topics} | {"general"}
)
