"""Deterministic table-lookup backend for tests, fixtures and replay.

Script file format (UTF-8 JSON)::

    {
      "_meta": {"name": "frank-depression", "appraisal": "lexicon"},
      "EvaluatorCoT/0": {"text": "..."},
      "PatientChat/3": {"json": {...}, "malformed_prefix_count": 1},
      "EvaluatorChat/2": {"choices": ["...", "..."]}
    }

Keys are ``role_tag/index`` or ``role_tag.phase/index``; ``role_tag/*`` is a
catch-all for indices without their own entry.  String values in an entry may
contain ``{name}`` placeholders filled from the request variables.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Any, Mapping

from ..errors import ParseError, UnscriptedRequest
from .base import ModelBackend, ModelRequest, RawReply, RoleTag, Usage, count_tokens
from .lexicon import lexicon_appraisal

MALFORMED_REPLY = "{this is not json"

_PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


def render_placeholders(text: str, variables: Mapping[str, Any]) -> str:
    """Replace ``{name}`` for names present in *variables*; leave other braces."""

    def sub(m: re.Match) -> str:
        name = m.group(1)
        return str(variables[name]) if name in variables else m.group(0)

    return _PLACEHOLDER.sub(sub, text)


def _render_obj(obj: Any, variables: Mapping[str, Any]) -> Any:
    if isinstance(obj, str):
        return render_placeholders(obj, variables)
    if isinstance(obj, list):
        return [_render_obj(v, variables) for v in obj]
    if isinstance(obj, dict):
        return {k: _render_obj(v, variables) for k, v in obj.items()}
    return obj


class ScriptedBackend(ModelBackend):
    """Answers requests from a fixed script; never improvises.

    With ``lexicon=True`` un-phased ``PatientCoT`` requests (stimulus
    appraisal) are answered from the cue-word tables instead of the script.
    """

    def __init__(self, script: Mapping[str, Any], *, lexicon: bool | None = None,
                 seed: int = 0, name: str | None = None):
        meta = dict(script.get("_meta", {}))
        self.entries = {k: v for k, v in script.items() if k != "_meta"}
        for key, entry in self.entries.items():
            if not isinstance(entry, dict) or not ({"text", "json", "choices"} & entry.keys()):
                raise ParseError(f"script entry {key!r} needs text, json or choices")
        self.lexicon = bool(meta.get("appraisal") == "lexicon") if lexicon is None else lexicon
        self.seed = seed
        self.name = name or meta.get("name", "scripted")
        self.backend_id = f"scripted:{self.name}"

    @classmethod
    def from_file(cls, path: str | Path, **kw) -> "ScriptedBackend":
        try:
            script = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read script {path}: {exc}") from None
        if not isinstance(script, dict):
            raise ParseError(f"script {path} must be a JSON object")
        return cls(script, **kw)

    def _pick(self, key: str, choices: list, seed: int) -> Any:
        digest = hashlib.sha256(f"{seed}|{key}".encode()).hexdigest()
        return choices[int(digest[:8], 16) % len(choices)]

    def _call(self, req: ModelRequest, attempt: int) -> RawReply:
        prompt_tokens = sum(count_tokens(m.text) for m in req.messages)
        if self.lexicon and req.role_tag is RoleTag.PATIENT_COT and not req.phase:
            appraisal = lexicon_appraisal(str(req.variables.get("doctor_utterance", "")))
            appraisal["thought_trace"] = f"Reading the doctor: {appraisal['rationale']}."
            text = json.dumps(appraisal, sort_keys=True)
            return RawReply(text, Usage(prompt_tokens, count_tokens(text)))

        key = req.key
        entry = self.entries.get(key)
        if entry is None:
            entry = self.entries.get(key.rsplit("/", 1)[0] + "/*")
        if entry is None:
            raise UnscriptedRequest(f"no script entry for {key!r} in {self.name}")
        if attempt <= int(entry.get("malformed_prefix_count", 0)):
            return RawReply(MALFORMED_REPLY, Usage(prompt_tokens, 3))

        seed = req.decode.seed if req.decode.seed is not None else self.seed
        if "choices" in entry:
            value = self._pick(key, entry["choices"], seed)
        elif "json" in entry:
            value = entry["json"]
        else:
            value = entry["text"]
        value = _render_obj(value, req.variables)
        text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
        return RawReply(text, Usage(prompt_tokens, count_tokens(text)))
