"""Prompt templates: plain-text files with ``{name}`` placeholders.

Only placeholders whose names are supplied get substituted, so literal JSON
braces in the templates survive rendering.  A directory passed as
``prompt_dir`` overrides the bundled copies file by file.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .backends.base import Message, Speaker
from .backends.scripted import render_placeholders

TEMPLATE_NAMES = (
    "assessor", "patient_cot", "patient_chat", "patient_opening", "patient_self_report",
    "evaluator_cot", "evaluator_chat", "evaluator_passive", "evaluator_rate",
    "diagnostician", "extractor", "realism_rater",
)


@lru_cache(maxsize=None)
def _bundled(name: str) -> str:
    return resources.files("intakesim.data.prompts").joinpath(f"{name}.txt").read_text("utf-8")


def load_template(name: str, prompt_dir: str | Path | None = None) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown prompt template {name!r}")
    if prompt_dir is not None:
        path = Path(prompt_dir) / f"{name}.txt"
        if path.exists():
            return path.read_text("utf-8")
    return _bundled(name)


def render(name: str, variables: Mapping[str, Any], prompt_dir=None) -> str:
    return render_placeholders(load_template(name, prompt_dir), variables)


def system_messages(name: str, variables: Mapping[str, Any], prompt_dir=None) -> tuple[Message, ...]:
    return (Message(Speaker.SYSTEM, render(name, variables, prompt_dir)),)
