"""Model-invocation contract shared by every backend.

A backend turns a :class:`ModelRequest` into a :class:`ModelResponse`.  For
JSON contracts the base class owns the validate -> repair -> fail loop, so
concrete backends only implement a single raw call.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable

import jsonschema

from ..errors import IntakeError, SchemaViolation


class RoleTag(str, Enum):
    ASSESSOR_COT = "AssessorCoT"
    PATIENT_COT = "PatientCoT"
    PATIENT_CHAT = "PatientChat"
    EVALUATOR_COT = "EvaluatorCoT"
    EVALUATOR_CHAT = "EvaluatorChat"
    DIAGNOSTICIAN = "Diagnostician"
    EXTRACTOR = "Extractor"
    RATER = "Rater"


class Speaker(str, Enum):
    SYSTEM = "System"
    USER = "User"
    ASSISTANT = "Assistant"


COT_TEMPERATURE = 0.2
CHAT_TEMPERATURE = 0.8

CHAT_ROLES = frozenset({RoleTag.PATIENT_CHAT, RoleTag.EVALUATOR_CHAT})


@dataclass(frozen=True)
class Message:
    speaker: Speaker
    text: str


@dataclass(frozen=True)
class ResponseContract:
    """JSON response contract: a JSON Schema plus an optional semantic check.

    ``check`` receives the parsed value and raises ``ValueError`` with a
    readable message when the value is unacceptable.
    """

    name: str
    schema: dict[str, Any]
    check: Callable[[Any], None] | None = None


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = COT_TEMPERATURE
    max_tokens: int = 1024
    seed: int | None = None


@dataclass(frozen=True)
class ModelRequest:
    role_tag: RoleTag
    messages: tuple[Message, ...]
    contract: ResponseContract | None = None
    decode: DecodeParams = field(default_factory=DecodeParams)
    # Sequence index within (role_tag, phase); scripted backends key on it.
    seq: int = 0
    phase: str = ""
    # Template variables the prompt was rendered from.
    variables: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("ModelRequest needs at least one message")
        if self.messages[0].speaker is not Speaker.SYSTEM:
            raise ValueError("first message must come from the System speaker")
        if self.decode.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def key(self) -> str:
        role = self.role_tag.value
        if self.phase:
            role = f"{role}.{self.phase}"
        return f"{role}/{self.seq}"


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
        )


@dataclass(frozen=True)
class ModelResponse:
    text: str
    parsed: Any = None
    usage: Usage = field(default_factory=Usage)
    attempt_count: int = 1


@dataclass(frozen=True)
class RawReply:
    text: str
    usage: Usage = field(default_factory=Usage)
    attempts: int = 1


_FENCE = re.compile(r"^\s*```(?:json)?\s*(.*?)\s*```\s*$", re.DOTALL)


def parse_json_reply(text: str, contract: ResponseContract) -> Any:
    """Parse and validate *text* against *contract*; raise ValueError on failure."""
    m = _FENCE.match(text)
    body = m.group(1) if m else text
    try:
        value = json.loads(body)
    except json.JSONDecodeError as exc:
        raise ValueError(f"reply is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(value, contract.schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValueError(f"schema violation at {path}: {exc.message}") from None
    if contract.check is not None:
        contract.check(value)
    return value


def repair_request(req: ModelRequest, bad_text: str, error: str) -> ModelRequest:
    note = (
        "Your previous reply did not satisfy the required output format.\n"
        f"Problem: {error}\n"
        "Reply again with a single JSON object that fixes the problem. No prose."
    )
    messages = req.messages + (
        Message(Speaker.ASSISTANT, bad_text),
        Message(Speaker.USER, note),
    )
    return replace(req, messages=messages)


class ModelBackend:
    """Base class; subclasses implement :meth:`_call`."""

    backend_id = "abstract"

    def _call(self, req: ModelRequest, attempt: int) -> RawReply:
        raise NotImplementedError

    def complete(self, req: ModelRequest) -> ModelResponse:
        reply = self._call(req, 1)
        if req.contract is None:
            return ModelResponse(reply.text, None, reply.usage, reply.attempts)
        try:
            parsed = parse_json_reply(reply.text, req.contract)
            return ModelResponse(reply.text, parsed, reply.usage, reply.attempts)
        except ValueError as exc:
            first_error = str(exc)
        second = self._call(repair_request(req, reply.text, first_error), 2)
        usage = reply.usage + second.usage
        attempts = reply.attempts + second.attempts
        try:
            parsed = parse_json_reply(second.text, req.contract)
        except ValueError as exc:
            # domain checks (item arity, item range) keep their own error type
            if isinstance(exc, IntakeError):
                raise
            raise SchemaViolation(
                f"{req.key}: {req.contract.name} failed after repair: {exc}"
            ) from None
        return ModelResponse(second.text, parsed, usage, attempts)


def count_tokens(text: str) -> int:
    return len(text.split())


class RoutedBackend(ModelBackend):
    """Dispatch each request to a per-role backend, with an optional default."""

    def __init__(self, routes: dict, default: ModelBackend | None = None):
        self.routes = {RoleTag(k): v for k, v in routes.items()}
        self.default = default
        ids = sorted({b.backend_id for b in self.routes.values()} |
                     ({default.backend_id} if default else set()))
        self.backend_id = "routed:" + "+".join(ids)

    def target(self, role: RoleTag) -> ModelBackend:
        b = self.routes.get(role, self.default)
        if b is None:
            from ..errors import UnscriptedRequest

            raise UnscriptedRequest(f"no backend configured for role {role.value}")
        return b

    def complete(self, req: ModelRequest) -> ModelResponse:
        return self.target(req.role_tag).complete(req)
