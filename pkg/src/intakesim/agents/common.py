"""Backend call plumbing shared by the role kernels."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from ..backends.base import (
    CHAT_TEMPERATURE,
    COT_TEMPERATURE,
    DecodeParams,
    ModelBackend,
    ModelRequest,
    ModelResponse,
    ResponseContract,
    RoleTag,
    Usage,
)
from ..prompts import system_messages


@dataclass
class CallLedger:
    """Per-session call sequencing and token accounting.

    Scripted backends key replies on ``(role, phase, index)``; the ledger hands
    out those indices in call order, so a session replays identically.
    """

    seed: int = 0
    prompt_dir: str | None = None
    counters: Counter = field(default_factory=Counter)
    usage: dict[str, Usage] = field(default_factory=dict)
    calls: int = 0
    attempts: int = 0

    def next_index(self, role: RoleTag, phase: str = "") -> int:
        k = (role.value, phase)
        i = self.counters[k]
        self.counters[k] += 1
        return i

    def record(self, role: RoleTag, resp: ModelResponse) -> None:
        self.usage[role.value] = self.usage.get(role.value, Usage()) + resp.usage
        self.calls += 1
        self.attempts += resp.attempt_count

    def token_counts(self) -> dict[str, dict[str, int]]:
        return {r: {"prompt_tokens": u.prompt_tokens, "completion_tokens": u.completion_tokens}
                for r, u in sorted(self.usage.items())}


def call(backend: ModelBackend, ledger: CallLedger, role: RoleTag, template: str,
         variables: Mapping[str, Any], *, phase: str = "",
         contract: ResponseContract | None = None,
         temperature: float | None = None, max_tokens: int = 1024) -> ModelResponse:
    if temperature is None:
        temperature = CHAT_TEMPERATURE if contract is None else COT_TEMPERATURE
    req = ModelRequest(
        role_tag=role,
        messages=system_messages(template, variables, ledger.prompt_dir),
        contract=contract,
        decode=DecodeParams(temperature=temperature, max_tokens=max_tokens, seed=ledger.seed),
        seq=ledger.next_index(role, phase),
        phase=phase,
        variables=dict(variables),
    )
    resp = backend.complete(req)
    ledger.record(role, resp)
    return resp


def json_contract(name: str, properties: dict[str, Any], required: list[str],
                  check: Callable[[Any], None] | None = None) -> ResponseContract:
    schema = {"type": "object", "properties": properties, "required": required}
    return ResponseContract(name, schema, check)


UNIT = {"type": "number", "minimum": 0, "maximum": 1}
SIGNED_UNIT = {"type": "number", "minimum": -1, "maximum": 1}
STR = {"type": "string"}
INT_LIST = {"type": "array", "items": {"type": "integer"}}
