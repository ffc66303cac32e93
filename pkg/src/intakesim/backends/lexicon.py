"""Fixed cue-word tables used by the scripted backend's appraisal mode.

Each matched cue contributes its weight to one channel; channels are then
clamped to [-1, 1].  Matching is case-insensitive substring search, so cue
phrases should be specific enough not to collide.
"""

from __future__ import annotations

EMPATHY_CUES: dict[str, float] = {
    # normalization
    "many people": 1.0,
    "a lot of people": 1.0,
    "it's common": 1.0,
    "that's understandable": 1.0,
    # validation / pacing
    "take your time": 1.0,
    "that sounds really hard": 1.0,
    "thank you for sharing": 1.0,
    "i appreciate you telling me": 1.0,
    "it's okay": 1.0,
    "no judgment": 1.0,
    # dismissive
    "that's ridiculous": -1.0,
    "you're overreacting": -1.0,
    "calm down": -1.0,
}

PRESSURE_CUES: dict[str, float] = {
    # imperative interrogation
    "answer the question": 1.0,
    "yes or no": 1.0,
    "be honest": 1.0,
    "are you sure": 1.0,
    "just tell me": 1.0,
    "why didn't you": 1.0,
    "you said earlier": 1.0,
    # explicit de-escalation
    "no pressure": -1.0,
    "we can stop whenever": -1.0,
}


def _score(text: str, table: dict[str, float]) -> float:
    low = text.lower()
    total = sum(w for cue, w in table.items() if cue in low)
    return max(-1.0, min(1.0, total))


def lexicon_appraisal(utterance: str) -> dict:
    empathy = _score(utterance, EMPATHY_CUES)
    pressure = _score(utterance, PRESSURE_CUES)
    hits = [c for c in (*EMPATHY_CUES, *PRESSURE_CUES) if c in utterance.lower()]
    rationale = "cues: " + ", ".join(hits) if hits else "no cue words"
    return {"empathy": empathy, "pressure": pressure, "rationale": rationale}
