"""Diagnostician role: adjudicate self-report vs clinician evidence into a final report."""

from __future__ import annotations

from typing import Any, Mapping, Sequence

from ..backends.base import RoleTag
from ..errors import IncompleteReports
from ..profiles import PatientProfile
from ..records import DiagnosticReport, EvidenceRef, TurnRecord
from ..scales import Repository, ScalePlan, ScaleResponse, clinical_grade
from ..vocab import Domain, Severity, Status, Strategy
from .common import STR, CallLedger, call, json_contract
from .state import SuspicionTracker

DIAGNOSIS_CONTRACT = json_contract(
    "diagnosis",
    {
        "final_diagnosis": {
            "type": "object",
            "properties": {"status": {"enum": [s.value for s in Status]},
                           "severity": {"enum": [s.value for s in Severity]}},
            "required": ["status", "severity"],
        },
        "reasoning": {
            "type": "object",
            "properties": {
                "symptom_match": STR,
                "discrepancy_resolution": STR,
                "key_evidence": {"type": "array", "items": {
                    "type": "object",
                    "properties": {"round": {"type": "integer"}, "note": STR},
                    "required": ["round"]}},
            },
        },
    },
    ["final_diagnosis"],
)

DOMAIN_STATUS = {Domain.DEPRESSION: Status.DEPRESSION, Domain.ANXIETY: Status.ANXIETY,
                 Domain.PTSD: Status.PTSD}


def _max_grade(reports: Mapping[str, ScaleResponse], repo: Repository,
               context: Mapping[str, Any] | None) -> Severity | None:
    grades = []
    for abbr, r in reports.items():
        d = repo.get(abbr)
        if not d.is_primary:
            continue
        g = clinical_grade(d, r.total_score, context)
        if g is not None:
            grades.append(g)
    return max(grades, key=lambda g: g.rank) if grades else None


def resolve_severity(self_grade: Severity | None, clinician_grade: Severity | None,
                     tracker: SuspicionTracker, proposal: Severity) -> tuple[Severity, str]:
    """Discrepancy rules. Returns (severity, rule name)."""
    both = self_grade is not None and clinician_grade is not None
    if both and self_grade != clinician_grade and tracker.flagged:
        if tracker.suspected_pattern is Strategy.CONCEALMENT:
            return clinician_grade, "concealment-clinician-wins"
        if tracker.suspected_pattern is Strategy.EXAGGERATION:
            return min(self_grade, clinician_grade, key=lambda g: g.rank), "exaggeration-downgrade"
    if both and self_grade == clinician_grade:
        return self_grade, "agreement"
    return proposal, "model-judgement"


_RULE_TEXT = {
    "concealment-clinician-wins": "Self-report ({s}) understates the interview picture ({c}) and "
                                  "suspicion points to hiding symptoms, so the clinician grade stands.",
    "exaggeration-downgrade": "Self-report ({s}) and clinician grade ({c}) disagree and suspicion points "
                              "to inflated symptoms, so the lower grade is kept.",
    "agreement": "Self-report and clinician grade agree ({s}).",
    "model-judgement": "No rule-based resolution applied (self {s}, clinician {c}); "
                       "severity follows the diagnostician's judgement.",
}


def diagnose(transcript: Sequence[TurnRecord], self_reports: Mapping[str, ScaleResponse],
             clinician_reports: Mapping[str, ScaleResponse], tracker: SuspicionTracker, backend,
             *, repo: Repository, plan: ScalePlan, profile: PatientProfile | None = None,
             ledger: CallLedger | None = None,
             context: Mapping[str, Any] | None = None) -> DiagnosticReport:
    missing = (set(plan.self_report_abbrs) - set(self_reports)) | \
              (set(plan.clinician_abbrs) - set(clinician_reports))
    if missing:
        raise IncompleteReports(f"missing reports for {sorted(missing)}")
    ledger = ledger or CallLedger()
    rounds = {t.round for t in transcript}

    def summary(reports: Mapping[str, ScaleResponse]) -> str:
        return "; ".join(f"{a} {r.total_score} ({r.severity})" for a, r in reports.items()) or "none"

    demo = profile.demographics if profile else None
    p = call(backend, ledger, RoleTag.DIAGNOSTICIAN, "diagnostician", {
        "demographics": f"{demo.age}, {demo.gender.value}" if demo else "unknown",
        "chief_complaint": profile.chief_complaint if profile else "",
        "self_summary": summary(self_reports),
        "clinician_summary": summary(clinician_reports),
        "suspicion": f"{tracker.xi:.2f}",
        "suspected_pattern": tracker.suspected_pattern.value if tracker.suspected_pattern else "None",
        "inconsistencies": "; ".join(f"round {r}: {f}" for r, f in tracker.flag_log) or "none",
    }, contract=DIAGNOSIS_CONTRACT).parsed

    status = Status(p["final_diagnosis"]["status"])
    proposal = Severity(p["final_diagnosis"]["severity"])
    self_g = _max_grade(self_reports, repo, context)
    clin_g = _max_grade(clinician_reports, repo, context)
    severity, rule = resolve_severity(self_g, clin_g, tracker, proposal)
    note = _RULE_TEXT[rule].format(s=self_g.value if self_g else "n/a",
                                   c=clin_g.value if clin_g else "n/a")

    # keep status and severity consistent, erring toward flagging symptoms
    if status is Status.HEALTHY and severity is not Severity.NOT_APPLICABLE:
        status = DOMAIN_STATUS.get(plan.primary_domain(repo), Status.DEPRESSION)
        note += f" Graded symptoms rule out a healthy status; reported as {status.value}."
    elif status is not Status.HEALTHY and severity is Severity.NOT_APPLICABLE:
        severity = Severity.MILD
        note += " Ambiguous presentation graded Mild."

    reasoning = p.get("reasoning") or {}
    evidence = [EvidenceRef(round=int(e["round"]), note=str(e.get("note", "")))
                for e in reasoning.get("key_evidence", []) if int(e["round"]) in rounds]
    if not evidence:
        cited = sorted({r for resp in clinician_reports.values()
                        for refs in resp.dialogue_evidence.values() for r in refs if r in rounds})
        evidence = [EvidenceRef(round=r, note="clinician rating evidence") for r in cited[:3]]
    if not evidence:
        evidence = [EvidenceRef(round=min(rounds) if rounds else 0, note="presenting complaint")]

    model_text = str(reasoning.get("discrepancy_resolution", "")).strip()
    return DiagnosticReport(
        status=status,
        severity=severity,
        symptom_match=str(reasoning.get("symptom_match", "")) or f"{status.value} picture",
        discrepancy_resolution=f"{note} {model_text}".strip() if rule == "model-judgement" else note,
        key_evidence=evidence,
        rule=rule,
    )
