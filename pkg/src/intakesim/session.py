"""Closed-loop session driver, batch runner, corpus I/O, validation and statistics.

Round layout: round 0 is the doctor's greeting alone; in round 1 the patient
answers with the chief complaint; from round 2 on the evaluator and patient
alternate until the evaluator terminates, which produces a final doctor-only
round.  The minimum-round rule counts rounds >= 1 with a patient reply.
"""

from __future__ import annotations

import json
import os
import random
import statistics
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .agents import (
    AgentState,
    CallLedger,
    Coverage,
    Decision,
    SuspicionTracker,
    assessor_select,
    diagnose,
    evaluator_rate,
    evaluator_turn,
    patient_opening,
    patient_self_report,
    patient_turn,
)
from .agents.evaluator import GREETING, Target
from .agents.state import PatientStrategy
from .backends.base import CHAT_TEMPERATURE, COT_TEMPERATURE, ModelBackend, RoleTag, count_tokens
from .config import RunConfig
from .errors import EmptyCorpus, IntakeError, PlanInvalid, RatingIncomplete, RoundLimitExceeded
from .profiles import PatientProfile
from .records import ClinicianTrace, CorpusRecord, PatientTrace, TurnRecord, render_transcript
from .scales import Repository, ValidationReport, response_violations, validate_plan
from .vocab import Severity, Status

OPENING_PROMPT = "Go ahead, in your own words."


def _context(profile: PatientProfile) -> dict[str, Any]:
    return {"gender": profile.demographics.gender.value}


def _backend_ids(backend: ModelBackend) -> dict[str, str]:
    target = getattr(backend, "target", None)
    ids = {}
    for role in RoleTag:
        try:
            ids[role.value] = target(role).backend_id if target else backend.backend_id
        except IntakeError:
            continue
    return ids


def run_session(profile: PatientProfile, repo: Repository, backend: ModelBackend,
                config: RunConfig | None = None, seed: int = 0) -> CorpusRecord:
    config = config or RunConfig()
    agent, sess = config.agent, config.session
    started = time.time() if sess.wall_clock else None
    ledger = CallLedger(seed=seed, prompt_dir=config.paths.prompts)
    rng = random.Random(seed)
    context = _context(profile)

    plan, route = assessor_select(profile.demographics, profile.chief_complaint, repo, backend,
                                  ledger=ledger, with_route=True)
    report = validate_plan(plan, repo)
    if not report.ok:
        raise PlanInvalid("; ".join(report.codes()))

    coverage = Coverage.for_plan(plan, repo)
    tracker = SuspicionTracker(theta_susp=agent.theta_susp)
    state = AgentState(agent.initial_trust, agent.initial_stress)
    trace = sess.trace_internal

    opening, appended = patient_opening(profile, backend, agent, ledger)
    turns = [
        TurnRecord(round=0, doctor_utterance=GREETING),
        TurnRecord(
            round=1, doctor_utterance=OPENING_PROMPT, patient_utterance=opening,
            patient_trace=PatientTrace(trust=state.trust, stress=state.stress,
                                       strategy=PatientStrategy.NEUTRAL.value,
                                       directive_text="State the reason for coming in.")
            if trace else None,
        ),
    ]
    interview_rounds = 1
    final_saturation = None
    r = 2
    while True:
        if r > sess.round_cap:
            raise RoundLimitExceeded(f"{profile.profile_id}: no termination within {sess.round_cap} rounds")
        saturation = coverage.saturation(interview_rounds, sess)
        ed, doctor = evaluator_turn(plan, turns, tracker, backend, agent, coverage=coverage,
                                    saturation=saturation, round_=r, ledger=ledger)
        tracker = ed.tracker
        ctrace = ClinicianTrace(xi=tracker.xi, decision=ed.decision.value,
                                hypothesis_note=ed.reasoning_step) if trace else None
        if ed.decision is Decision.TERMINATE:
            turns.append(TurnRecord(round=r, doctor_utterance=doctor, clinician_trace=ctrace))
            final_saturation = saturation
            break
        pd, reply = patient_turn(profile, state, doctor, backend, agent, topic=ed.topic, rng=rng,
                                 ledger=ledger, history=render_transcript(turns, limit=6))
        state = pd.next_state
        coverage.record(r, Target(ed.topic, ed.target), pd.strategy)
        turns.append(TurnRecord(
            round=r, doctor_utterance=doctor, patient_utterance=reply, topic=ed.topic,
            target=ed.target, nonverbal=list(pd.nonverbal_cues), clinician_trace=ctrace,
            patient_trace=PatientTrace(trust=state.trust, stress=state.stress,
                                       strategy=pd.strategy.value,
                                       directive_text=pd.strategy_directive) if trace else None,
        ))
        interview_rounds += 1
        r += 1

    self_reports = {}
    for abbr in plan.self_report_abbrs:
        self_reports[abbr] = patient_self_report(profile, repo.get(abbr), turns, backend, agent,
                                                 ledger=ledger, topic_rounds=coverage.answered)
    clinician = {resp.scale_abbr: resp for resp in
                 evaluator_rate(plan, turns, tracker, backend, repo, coverage=coverage,
                                config=agent, ledger=ledger, context=context)}
    if set(self_reports) != set(plan.self_report_abbrs) or set(clinician) != set(plan.clinician_abbrs):
        raise RatingIncomplete(f"{profile.profile_id}: report keys do not match the plan")
    diagnosis = diagnose(turns, self_reports, clinician, tracker, backend, repo=repo, plan=plan,
                         profile=profile, ledger=ledger, context=context)

    run_meta: dict[str, Any] = {
        "seed": seed,
        "config_hash": config.config_hash(),
        "backend_ids": _backend_ids(backend),
        "timestamps": {"started": started, "finished": time.time()} if started is not None else {},
        "token_counts": ledger.token_counts(),
        "model_calls": ledger.calls,
        "decode": {"cot_temperature": COT_TEMPERATURE, "chat_temperature": CHAT_TEMPERATURE},
        "plan_route": route,
        "chief_complaint_injected": True,
        "chief_complaint_appended": appended,
        "trace_internal": trace,
        "terminated_by": Decision.TERMINATE.value,
        "rounds_to_saturation": interview_rounds,
        "saturation": final_saturation.conditions(),
        "initial_state": {"trust": agent.initial_trust, "stress": agent.initial_stress},
        "final_xi": tracker.xi,
        "evaluator_mode": "cot" if agent.cot_enabled else "passive",
        "min_rounds": sess.min_rounds,
        "exhaustion_window": sess.exhaustion_window,
    }
    return CorpusRecord(
        record_id=f"{profile.profile_id}-s{seed}",
        profile=profile,
        plan=plan,
        final_transcript=turns,
        patient_self_report=self_reports,
        doctor_clinician_report=clinician,
        diagnosis=diagnosis,
        honesty_echo=profile.honesty.model_copy(deep=True),
        run_meta=run_meta,
    )


# --------------------------------------------------------------------------- batches

@dataclass
class BatchEntry:
    index: int
    profile_id: str
    seed: int
    status: str
    record_id: str | None = None
    error_type: str | None = None
    message: str | None = None


@dataclass
class BatchReport:
    entries: list[BatchEntry] = field(default_factory=list)

    @property
    def failures(self) -> list[BatchEntry]:
        return [e for e in self.entries if e.status != "ok"]

    @property
    def successes(self) -> int:
        return len(self.entries) - len(self.failures)

    def to_dict(self) -> dict[str, Any]:
        return {"total": len(self.entries), "succeeded": self.successes,
                "failed": len(self.failures), "entries": [asdict(e) for e in self.entries]}

    def summary(self) -> str:
        lines = [f"{self.successes}/{len(self.entries)} sessions succeeded"]
        lines += [f"  failed #{e.index} {e.profile_id}: {e.error_type}: {e.message}" for e in self.failures]
        return "\n".join(lines)


def session_seed(seed: int, index: int) -> int:
    return seed ^ index


def run_batch(profiles: Sequence[PatientProfile], repo: Repository,
              backend_for: Callable[[PatientProfile], ModelBackend],
              config: RunConfig | None = None, seed: int | None = None,
              workers: int | None = None) -> tuple[list[CorpusRecord], BatchReport]:
    """Run independent sessions; failures are collected, never raised."""
    config = config or RunConfig()
    seed = config.seed if seed is None else seed
    workers = workers or config.session.workers

    def one(i: int) -> tuple[CorpusRecord | None, BatchEntry]:
        p = profiles[i]
        s = session_seed(seed, i)
        try:
            rec = run_session(p, repo, backend_for(p), config, s)
        except Exception as exc:  # noqa: BLE001 - isolation is the point
            return None, BatchEntry(i, p.profile_id, s, "failed", None, type(exc).__name__, str(exc))
        return rec, BatchEntry(i, p.profile_id, s, "ok", rec.record_id)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(profiles))))
    else:
        results = [one(i) for i in range(len(profiles))]
    records = [r for r, _ in results if r is not None]
    return records, BatchReport([e for _, e in results])


# --------------------------------------------------------------------------- files

def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_record(record: CorpusRecord, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{record.record_id}.json"
    _atomic_write(path, record.to_json() + "\n")
    return path


def write_manifest(out_dir: str | Path, report: BatchReport, extra: dict | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = report.to_dict()
    if extra:
        data.update(extra)
    path = out / "manifest.json"
    _atomic_write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def read_record(path: str | Path) -> CorpusRecord:
    return CorpusRecord.from_json(Path(path).read_text(encoding="utf-8"))


def load_corpus(corpus_dir: str | Path) -> tuple[list[CorpusRecord], list[tuple[str, str]]]:
    """All record files in a directory; unreadable ones come back as (name, error)."""
    records, bad = [], []
    for path in sorted(Path(corpus_dir).glob("*.json")):
        if path.name == "manifest.json":
            continue
        try:
            records.append(read_record(path))
        except (ValueError, OSError) as exc:
            bad.append((path.name, str(exc).splitlines()[0]))
    return records, bad


def public_projection(record: CorpusRecord) -> CorpusRecord:
    """Copy without internal state traces, as shared publicly."""
    turns = [t.model_copy(update={"clinician_trace": None, "patient_trace": None})
             for t in record.final_transcript]
    meta = dict(record.run_meta, trace_internal=False, projection="public")
    return record.model_copy(update={"final_transcript": turns, "run_meta": meta}, deep=True)


# --------------------------------------------------------------------------- validation

def validate_record(record: CorpusRecord, repo: Repository) -> ValidationReport:
    rep = ValidationReport()
    turns = record.final_transcript
    rounds = [t.round for t in turns]
    if rounds != list(range(len(turns))):
        rep.add("RoundGap", f"rounds are not contiguous from 0: {rounds[:5]}...")
    last = len(turns) - 1
    for i, t in enumerate(turns):
        if t.patient_utterance is None and i not in (0, last):
            rep.add("MissingPatientUtterance", f"round {t.round} has no patient reply")
    if len(turns) < 2 or turns[1].patient_utterance is None or \
            not record.run_meta.get("chief_complaint_injected"):
        rep.add("ChiefComplaintMissing", "round 1 must carry the chief complaint")

    internal = bool(record.run_meta.get("trace_internal"))
    for t in turns:
        has = t.clinician_trace is not None or t.patient_trace is not None
        if has and not internal:
            rep.add("TracePresence", f"round {t.round} carries traces in a trace-free record")
        if internal and t.round >= 1 and t.patient_trace is None and t.patient_utterance is not None:
            rep.add("TracePresence", f"round {t.round} lacks its patient trace")

    for v in validate_plan(record.plan, repo).violations:
        rep.add(v.code, v.detail)
    present = set(record.rounds)
    context = _context(record.profile)
    for want, got in ((record.plan.self_report_abbrs, record.patient_self_report),
                      (record.plan.clinician_abbrs, record.doctor_clinician_report)):
        for abbr in set(want) - set(got):
            rep.add("MissingScaleResponse", f"no report for {abbr}")
        for abbr in set(got) - set(want):
            rep.add("UnexpectedScaleResponse", f"report for {abbr} is not in the plan")
        for abbr, resp in got.items():
            if abbr not in repo:
                continue
            if resp.scale_abbr != abbr:
                rep.add("KeyMismatch", f"report filed under {abbr} is for {resp.scale_abbr}")
            for code, detail in response_violations(resp, repo.get(abbr), context=context, rounds=present):
                rep.add(code, detail)
    for ref in record.diagnosis.key_evidence:
        if ref.round not in present:
            rep.add("EvidenceRound", f"diagnosis cites missing round {ref.round}")
    if record.honesty_echo != record.profile.honesty:
        rep.add("HonestyMismatch", "honesty echo differs from the profile")

    if internal and record.run_meta.get("terminated_by") == Decision.TERMINATE.value:
        sat = reconstruct_saturation(record, repo)
        if sat is not None and not sat.terminate_ok:
            rep.add("UnsoundTermination", f"saturation conditions at termination: {sat.conditions()}")
    return rep


def reconstruct_saturation(record: CorpusRecord, repo: Repository):
    """Saturation status as it stood when the final round was decided."""
    from .config import SessionConfig

    body = record.final_transcript[:-1]
    coverage = Coverage.from_transcript(record.plan, repo, body)
    default = SessionConfig()
    min_rounds = record.run_meta.get("min_rounds", default.min_rounds)
    sess = SessionConfig(min_rounds=min_rounds, round_cap=max(min_rounds, default.round_cap),
                         exhaustion_window=record.run_meta.get("exhaustion_window",
                                                               default.exhaustion_window))
    answered = sum(1 for t in body if t.round >= 1 and t.patient_utterance is not None)
    return coverage.saturation(answered, sess)


# --------------------------------------------------------------------------- statistics

@dataclass
class StatsReport:
    total_dialogues: int
    total_tokens: int
    avg_turns: float
    tokens_per_turn: float
    pathology_distribution: dict[str, float]
    severity_distribution: dict[str, float]
    demographics: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def table(self) -> str:
        rows = [
            ("Total dialogues", f"{self.total_dialogues}"),
            ("Total tokens", f"{self.total_tokens}"),
            ("Avg. turns", f"{self.avg_turns:.1f}"),
            ("Tokens / turn", f"{self.tokens_per_turn:.1f}"),
        ]
        rows += [(f"Pathology: {k}", f"{v:.1f}%") for k, v in self.pathology_distribution.items()]
        rows += [(f"Severity: {k}", f"{v:.1f}%") for k, v in self.severity_distribution.items()]
        d = self.demographics
        rows.append(("Age mean (SD)", f"{d['age_mean']:.1f} ({d['age_sd']:.1f})"))
        rows += [(f"Gender: {k}", f"{v:.1f}%") for k, v in d["gender"].items()]
        width = max(len(a) for a, _ in rows)
        return "\n".join(f"{a:<{width}}  {b}" for a, b in rows)


def _pct(counter: Counter, keys: Iterable[str], n: int) -> dict[str, float]:
    return {k: 100.0 * counter.get(k, 0) / n for k in keys}


def corpus_stats(records: Sequence[CorpusRecord]) -> StatsReport:
    if not records:
        raise EmptyCorpus("no records to summarize")
    n = len(records)
    turns = [len(r.final_transcript) for r in records]
    tokens = 0
    for r in records:
        for t in r.final_transcript:
            tokens += count_tokens(t.doctor_utterance)
            if t.patient_utterance:
                tokens += count_tokens(t.patient_utterance)
    status = Counter(r.profile.ground_truth.status.value for r in records)
    severity = Counter(r.profile.ground_truth.severity.value for r in records)
    ages = [r.profile.demographics.age for r in records]
    gender = Counter(r.profile.demographics.gender.value for r in records)
    return StatsReport(
        total_dialogues=n,
        total_tokens=tokens,
        avg_turns=sum(turns) / n,
        tokens_per_turn=tokens / sum(turns),
        pathology_distribution=_pct(status, [s.value for s in Status], n),
        severity_distribution=_pct(severity, [s.value for s in Severity], n),
        demographics={
            "age_mean": statistics.fmean(ages),
            "age_sd": statistics.stdev(ages) if n > 1 else 0.0,
            "age_min": min(ages),
            "age_max": max(ages),
            "gender": _pct(gender, sorted(gender), n),
        },
    )
