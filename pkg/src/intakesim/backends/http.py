"""OpenAI-compatible chat-completions client."""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass

import httpx

from ..errors import AuthFailure, RateLimited, Timeout, Transport
from .base import ModelBackend, ModelRequest, RawReply, Speaker, Usage

log = logging.getLogger(__name__)

_WIRE_ROLE = {Speaker.SYSTEM: "system", Speaker.USER: "user", Speaker.ASSISTANT: "assistant"}


@dataclass(frozen=True)
class HttpConfig:
    endpoint_url: str
    model_name: str
    auth_env: str = "OPENAI_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 4
    backoff_s: float = 1.0
    backoff_cap_s: float = 30.0
    min_interval_s: float = 0.0


class HttpBackend(ModelBackend):
    """Speaks POST ``{model, messages, temperature, max_tokens}`` and reads
    ``choices[0].message.content``.

    Credentials are read from the environment variable named in the config at
    call time; the secret itself is never stored on the instance.
    """

    def __init__(self, config: HttpConfig, client: httpx.Client | None = None,
                 sleep=time.sleep):
        self.config = config
        self.backend_id = f"http:{config.model_name}"
        self._client = client or httpx.Client(timeout=config.timeout_s)
        self._sleep = sleep
        self._lock = threading.Lock()
        self._last_call = 0.0

    @property
    def url(self) -> str:
        url = self.config.endpoint_url.rstrip("/")
        return url if url.endswith("/chat/completions") else url + "/chat/completions"

    def _throttle(self) -> None:
        if self.config.min_interval_s <= 0:
            return
        with self._lock:
            wait = self._last_call + self.config.min_interval_s - time.monotonic()
            if wait > 0:
                self._sleep(wait)
            self._last_call = time.monotonic()

    def _payload(self, req: ModelRequest) -> dict:
        body = {
            "model": self.config.model_name,
            "messages": [{"role": _WIRE_ROLE[m.speaker], "content": m.text} for m in req.messages],
            "temperature": req.decode.temperature,
            "max_tokens": req.decode.max_tokens,
        }
        if req.decode.seed is not None:
            body["seed"] = req.decode.seed
        return body

    def _call(self, req: ModelRequest, attempt: int) -> RawReply:
        key = os.environ.get(self.config.auth_env, "").strip()
        if not key:
            raise AuthFailure(f"environment variable {self.config.auth_env} is not set")
        headers = {"Authorization": f"Bearer {key}"}
        payload = self._payload(req)

        last: Exception | None = None
        for n in range(1, self.config.max_retries + 2):
            self._throttle()
            try:
                resp = self._client.post(self.url, json=payload, headers=headers)
            except httpx.TimeoutException as exc:
                last = Timeout(f"request timed out: {exc}")
            except httpx.HTTPError as exc:
                last = Transport(f"transport error: {exc}")
            else:
                if resp.status_code in (401, 403):
                    raise AuthFailure(f"credential rejected (HTTP {resp.status_code})")
                if resp.status_code == 429:
                    last = RateLimited("HTTP 429")
                elif resp.status_code >= 500:
                    last = Transport(f"HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise Transport(f"HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    return self._decode(resp, n)
            if n <= self.config.max_retries:
                delay = min(self.config.backoff_s * 2 ** (n - 1), self.config.backoff_cap_s)
                log.warning("%s attempt %d failed (%s); retrying in %.1fs", req.key, n, last, delay)
                self._sleep(delay)
        assert last is not None
        raise last

    @staticmethod
    def _decode(resp: httpx.Response, attempts: int) -> RawReply:
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise Transport(f"malformed completion body: {exc}") from None
        usage = body.get("usage") or {}
        return RawReply(
            text or "",
            Usage(int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))),
            attempts,
        )
