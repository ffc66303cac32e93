"""Command-line entry point: ``intakesim <command> [options]``.

Exit codes: 0 success, 1 partial failure (batch under --strict, validation
findings, nothing usable), 2 configuration/startup error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

from .backends import HttpBackend, HttpConfig, ScriptedBackend
from .config import RunConfig
from .errors import IntakeError
from .evaluation import ablation_run, diagnostic_alignment, rate_realism, stratified_sample
from .evaluation.alignment import strata_counts
from .evaluation.realism import format_realism_table, realism_table
from .fixtures import build_script
from .profiles import PatientProfile, load_feature_bank, load_profile
from .records import render_transcript
from .scales import load_repository
from .session import (
    corpus_stats,
    load_corpus,
    public_projection,
    run_batch,
    validate_record,
    write_manifest,
    write_record,
)
from .vocab import Strategy

log = logging.getLogger("intakesim")

OK, PARTIAL, CONFIG_ERROR, IO_ERROR = 0, 1, 2, 3

# Every --json reply has this shape.
OUTPUT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "ok", "exit_code"],
    "properties": {
        "command": {"type": "string"},
        "ok": {"type": "boolean"},
        "exit_code": {"type": "integer", "enum": [0, 1, 2, 3]},
        "result": {"type": "object"},
        "error": {"type": "object", "required": ["type", "message"],
                  "properties": {"type": {"type": "string"}, "message": {"type": "string"}}},
    },
    "oneOf": [{"required": ["result"]}, {"required": ["error"]}],
}

STRATA_ORDER = (Strategy.CONCEALMENT, Strategy.EXAGGERATION, Strategy.FRANKNESS)


class ConfigError(Exception):
    pass


class CommandFailed(Exception):
    def __init__(self, code: int, result: dict[str, Any]):
        super().__init__(f"exit {code}")
        self.code, self.result = code, result


# --------------------------------------------------------------------------- setup helpers

def load_config(args) -> RunConfig:
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {exc.filename}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    overrides: dict[str, Any] = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "workers", None):
        overrides["session"] = {"workers": args.workers}
    try:
        cfg = cfg.with_overrides(**overrides) if overrides else cfg
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    for name in ("repository", "feature_bank", "prompts"):
        p = getattr(cfg.paths, name)
        if p is not None and not Path(p).exists():
            raise ConfigError(f"paths.{name} does not exist: {p}")
    return cfg


def _repo(cfg: RunConfig):
    return load_repository(cfg.paths.repository)


def load_profiles(path: str) -> list[tuple[PatientProfile, Path]]:
    root = Path(path)
    if not root.exists():
        raise ConfigError(f"profiles path does not exist: {path}")
    files = [root] if root.is_file() else sorted(
        p for p in root.glob("*.json") if not p.name.endswith(".script.json"))
    if not files:
        raise ConfigError(f"no profile files under {path}")
    return [(load_profile(f), f) for f in files]


def backend_factory(cfg: RunConfig, paths: dict[str, Path], repo) -> Callable[[PatientProfile], Any]:
    b = cfg.backend
    if b.kind == "http":
        if not b.endpoint_url or not b.model_name:
            raise ConfigError("http backend needs endpoint_url and model_name")
        shared = HttpBackend(HttpConfig(b.endpoint_url, b.model_name, auth_env=b.auth_env,
                                        timeout_s=b.timeout_s, max_retries=b.max_retries,
                                        backoff_s=b.backoff_s))
        return lambda profile: shared
    if b.kind == "fixture":
        return lambda profile: ScriptedBackend(build_script(profile, repo))
    if b.kind != "scripted":
        raise ConfigError(f"unknown backend kind {b.kind!r}")
    if b.script is not None:
        if not Path(b.script).exists():
            raise ConfigError(f"backend.script does not exist: {b.script}")
        return lambda profile: ScriptedBackend.from_file(b.script)

    def sibling(profile: PatientProfile):
        src = paths[profile.profile_id]
        return ScriptedBackend.from_file(src.with_name(src.stem + ".script.json"))

    return sibling


def rater_backend(cfg: RunConfig, script: str | None):
    if script:
        return ScriptedBackend.from_file(script)
    return backend_factory(cfg, {}, None)(None)


def _corpus(path: str):
    if not Path(path).is_dir():
        raise ConfigError(f"corpus directory does not exist: {path}")
    records, bad = load_corpus(path)
    for name, err in bad:
        log.warning("skipping unreadable record %s: %s", name, err)
    return records, bad


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------- commands

def cmd_synthesize(args) -> dict[str, Any]:
    cfg = load_config(args)
    repo = _repo(cfg)
    load_feature_bank(cfg.paths.feature_bank)  # fail fast on a broken bank
    pairs = load_profiles(args.profiles)
    factory = backend_factory(cfg, {p.profile_id: f for p, f in pairs}, repo)
    out = Path(args.out or cfg.paths.output_dir)
    records, report = run_batch([p for p, _ in pairs], repo, factory, cfg)
    for rec in records:
        write_record(rec, out)
    write_manifest(out, report, {"seed": cfg.seed, "config_hash": cfg.config_hash()})
    print(report.summary(), file=sys.stderr)
    result = {"out": str(out), **report.to_dict()}
    if report.successes == 0 or (args.strict and report.failures):
        raise CommandFailed(PARTIAL, result)
    return result


def cmd_evaluate(args) -> dict[str, Any]:
    records, bad = _corpus(args.corpus)
    if not records:
        raise CommandFailed(PARTIAL, {"records": 0, "skipped": len(bad)})
    rep = diagnostic_alignment(records)
    out = Path(args.out) if args.out else Path(args.corpus) / "eval"
    result = {"records": len(records), "skipped": len(bad), **rep.to_dict()}
    _write(out / "metrics.json", json.dumps(result, indent=2, sort_keys=True) + "\n")
    _write(out / "metrics.txt", rep.table() + "\n")
    print(rep.table(), file=sys.stderr)
    return result


def cmd_ablate(args) -> dict[str, Any]:
    cfg = load_config(args)
    repo = _repo(cfg)
    pairs = load_profiles(args.profiles)
    factory = backend_factory(cfg, {p.profile_id: f for p, f in pairs}, repo)
    names = [a.strip() for a in args.arms.split(",") if a.strip()]
    arms = {}
    for i, name in enumerate(names):
        if name not in ("cot", "passive"):
            raise ConfigError(f"unknown arm {name!r}; use cot or passive")
        label = name if names.count(name) == 1 else f"{name}{i}"
        arms[label] = cfg.with_overrides(agent={"cot_enabled": name == "cot"},
                                         session={"trace_internal": True})
    rep = ablation_run([p for p, _ in pairs], repo, factory, arms, cfg.seed)
    out = Path(args.out or cfg.paths.output_dir)
    _write(out / "trust_series.csv", rep.trust_series_csv())
    _write(out / "delta_trust.csv", rep.delta_trust_csv())
    summary = {name: arm.summary() for name, arm in rep.arms.items()}
    _write(out / "ablation.json", json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    return {"out": str(out), "arms": summary}


def cmd_validate(args) -> dict[str, Any]:
    cfg = load_config(args)
    repo = _repo(cfg)
    records, bad = _corpus(args.corpus)
    reports = {r.record_id: validate_record(r, repo).to_dict() for r in records}
    clean = sum(1 for v in reports.values() if v["ok"])
    result = {"records": len(records), "clean": clean, "skipped": len(bad), "reports": reports}
    if clean != len(records) or bad or not records:
        raise CommandFailed(PARTIAL, result)
    return result


def cmd_stats(args) -> dict[str, Any]:
    records, bad = _corpus(args.corpus)
    stats = corpus_stats(records)
    print(stats.table(), file=sys.stderr)
    return {"skipped": len(bad), **stats.to_dict()}


def cmd_export(args) -> dict[str, Any]:
    records, bad = _corpus(args.corpus)
    out = Path(args.out)
    for rec in records:
        write_record(public_projection(rec) if args.public else rec, out)
    return {"out": str(out), "exported": len(records), "public": bool(args.public), "skipped": len(bad)}


def parse_strata(text: str) -> dict[Strategy, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != len(STRATA_ORDER):
        raise ConfigError("--strata takes three counts: concealment,exaggeration,frankness")
    try:
        return {s: int(n) for s, n in zip(STRATA_ORDER, parts)}
    except ValueError:
        raise ConfigError(f"--strata counts must be integers: {text}") from None


def cmd_sample(args) -> dict[str, Any]:
    strata = parse_strata(args.strata)
    records, bad = _corpus(args.corpus)
    seed = args.seed if args.seed is not None else 0
    chosen = stratified_sample(records, strata, seed)
    manifest = {"seed": seed, "strata": {s.value: n for s, n in strata.items()},
                "counts": strata_counts(chosen), "record_ids": [r.record_id for r in chosen]}
    if args.out:
        _write(Path(args.out), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def cmd_rate(args) -> dict[str, Any]:
    cfg = load_config(args)
    records, bad = _corpus(args.corpus)
    backend = rater_backend(cfg, args.script)
    rated = [rate_realism(render_transcript(r.final_transcript), backend) for r in records]
    scores = {r.record_id: {d.value: v for d, v in s.scores.items()} for r, s in zip(records, rated)}
    table = realism_table({args.system: rated}) if rated else {}
    if table:
        print(format_realism_table(table), file=sys.stderr)
    return {"scores": scores, "table": {k: {d: list(v) for d, v in row.items()} for k, row in table.items()},
            "skipped": len(bad)}


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intakesim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *, config=True):
        p.add_argument("--json", action="store_true", help="machine-readable output on stdout")
        if config:
            p.add_argument("--config", help="TOML or JSON run configuration")
            p.add_argument("--seed", type=int)
        return p

    p = common(sub.add_parser("synthesize", help="run sessions for a set of profiles"))
    p.add_argument("--profiles", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_synthesize)

    p = common(sub.add_parser("evaluate", help="status/severity alignment metrics"), config=False)
    p.add_argument("corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = common(sub.add_parser("ablate", help="CoT vs passive evaluator comparison"))
    p.add_argument("--profiles", required=True)
    p.add_argument("--arms", default="cot,passive")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = common(sub.add_parser("validate", help="check record invariants"))
    p.add_argument("corpus")
    p.set_defaults(func=cmd_validate)

    p = common(sub.add_parser("stats", help="corpus statistics"), config=False)
    p.add_argument("corpus")
    p.set_defaults(func=cmd_stats)

    p = common(sub.add_parser("export", help="copy records, optionally without internal traces"),
               config=False)
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--public", action="store_true")
    p.set_defaults(func=cmd_export)

    p = common(sub.add_parser("sample", help="stratified evaluation sample"), config=False)
    p.add_argument("corpus")
    p.add_argument("--strata", required=True, help="concealment,exaggeration,frankness counts")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = common(sub.add_parser("rate", help="realism ratings with the rater backend"))
    p.add_argument("corpus")
    p.add_argument("--script", help="scripted rater backend file")
    p.add_argument("--system", default="intakesim")
    p.set_defaults(func=cmd_rate)
    return ap


def _emit(args, payload: dict[str, Any]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True, default=str))


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    cmd = args.command
    try:
        result = args.func(args)
        code = OK
    except CommandFailed as exc:
        result, code = exc.result, exc.code
    except ConfigError as exc:
        return _fail(args, cmd, CONFIG_ERROR, "ConfigError", str(exc))
    except OSError as exc:
        return _fail(args, cmd, IO_ERROR, type(exc).__name__, str(exc))
    except IntakeError as exc:
        return _fail(args, cmd, CONFIG_ERROR, type(exc).__name__, str(exc))
    _emit(args, {"command": cmd, "ok": code == OK, "exit_code": code, "result": result})
    return code


def _fail(args, cmd: str, code: int, kind: str, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    _emit(args, {"command": cmd, "ok": False, "exit_code": code,
                 "error": {"type": kind, "message": message}})
    return code


if __name__ == "__main__":
    sys.exit(main())
