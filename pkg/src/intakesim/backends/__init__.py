from .base import (
    RoutedBackend,
    CHAT_TEMPERATURE,
    COT_TEMPERATURE,
    DecodeParams,
    Message,
    ModelBackend,
    ModelRequest,
    ModelResponse,
    ResponseContract,
    RoleTag,
    Speaker,
    Usage,
)
from .http import HttpBackend, HttpConfig
from .lexicon import lexicon_appraisal
from .scripted import ScriptedBackend


def scripted_backend(script, **kw) -> ScriptedBackend:
    """Build a scripted backend from a mapping or a path to a script file."""
    if isinstance(script, dict):
        return ScriptedBackend(script, **kw)
    return ScriptedBackend.from_file(script, **kw)


def http_backend(config: HttpConfig, **kw) -> HttpBackend:
    return HttpBackend(config, **kw)


__all__ = [
    "CHAT_TEMPERATURE", "COT_TEMPERATURE", "DecodeParams", "HttpBackend", "HttpConfig",
    "Message", "ModelBackend", "ModelRequest", "ModelResponse", "ResponseContract",
    "RoleTag", "RoutedBackend", "ScriptedBackend", "Speaker", "Usage", "http_backend",
    "lexicon_appraisal", "scripted_backend",
]
