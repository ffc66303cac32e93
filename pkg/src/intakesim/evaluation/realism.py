"""Blinded realism rating of dialogues on five dimensions, and the summary table."""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from ..agents.common import STR, CallLedger, call, json_contract
from ..backends.base import RoleTag


class Dimension(str, Enum):
    DISCOURSE = "DiscourseOrganicness"
    TEXTURE = "LinguisticTexture"
    EMOTION = "EmotionalGranularity"
    DEFENSE = "DefenseResistance"
    DYNAMICS = "InteractionDynamics"


# keys as the rater writes them
WIRE_KEYS = {
    Dimension.DISCOURSE: "Discourse_Organicness",
    Dimension.TEXTURE: "Linguistic_Texture",
    Dimension.EMOTION: "Emotional_Granularity",
    Dimension.DEFENSE: "Defense_Resistance",
    Dimension.DYNAMICS: "Interaction_Dynamics",
}

_SCORE = {"type": "object",
          "properties": {"score": {"type": "integer", "minimum": 1, "maximum": 10}, "reason": STR},
          "required": ["score"]}
REALISM_CONTRACT = json_contract("realism-rating", {k: _SCORE for k in WIRE_KEYS.values()},
                                 list(WIRE_KEYS.values()))


@dataclass(frozen=True)
class RealismScore:
    scores: dict[Dimension, int]
    reasons: dict[Dimension, str]

    def __post_init__(self) -> None:
        if set(self.scores) != set(Dimension):
            raise ValueError("all five dimensions are required")
        if any(not 1 <= s <= 10 for s in self.scores.values()):
            raise ValueError("scores must lie in 1-10")


def rate_realism(dialogue: str, backend, ledger: CallLedger | None = None) -> RealismScore:
    if not dialogue.strip():
        raise ValueError("empty dialogue")
    p = call(backend, ledger or CallLedger(), RoleTag.RATER, "realism_rater", {"dialogue": dialogue},
             contract=REALISM_CONTRACT).parsed
    return RealismScore({d: int(p[k]["score"]) for d, k in WIRE_KEYS.items()},
                        {d: str(p[k].get("reason", "")) for d, k in WIRE_KEYS.items()})


def presentation_order(systems: Sequence[str], seed: int) -> list[str]:
    """Seeded shuffle so the rater never sees systems in a fixed order."""
    order = list(systems)
    random.Random(seed).shuffle(order)
    return order


def realism_table(ratings: Mapping[str, Sequence[RealismScore]]) -> dict[str, dict[str, tuple[float, float]]]:
    """Per system and dimension: (mean, SD) over rated dialogues."""
    out: dict[str, dict[str, tuple[float, float]]] = {}
    for system, scores in ratings.items():
        row = {}
        for d in Dimension:
            vals = [s.scores[d] for s in scores]
            sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
            row[d.value] = (statistics.fmean(vals), sd)
        out[system] = row
    return out


def format_realism_table(table: Mapping[str, Mapping[str, tuple[float, float]]]) -> str:
    dims = [d.value for d in Dimension]
    head = f"{'system':<16}" + "".join(f"{d[:18]:>22}" for d in dims)
    lines = [head]
    for system, row in table.items():
        cells = "".join(f"{f'{row[d][0]:.2f} ({row[d][1]:.2f})':>22}" for d in dims)
        lines.append(f"{system:<16}{cells}")
    return "\n".join(lines)
