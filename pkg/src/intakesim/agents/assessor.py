"""Assessor role: choose the scale battery from public priors only."""

from __future__ import annotations

import re
from typing import Any

from ..backends.base import RoleTag
from ..errors import BackendFailure, UnknownScale
from ..profiles import Demographics
from ..scales import Admin, PlanEntry, Repository, ScalePlan, validate_plan
from ..vocab import Domain
from .common import STR, CallLedger, call, json_contract

_ENTRY = {"type": "object", "properties": {"name": STR, "reason": STR}, "required": ["name"]}
PLAN_CONTRACT = json_contract(
    "scale-plan",
    {"clinician_scales": {"type": "array", "items": _ENTRY},
     "self_report_scales": {"type": "array", "items": _ENTRY}},
    ["clinician_scales", "self_report_scales"],
)

KEYWORDS: dict[Domain, tuple[str, ...]] = {
    Domain.DEPRESSION: ("flat", "sad", "down", "low", "hopeless", "depress", "empty",
                        "worthless", "numb", "no energy", "tired", "crying", "pointless"),
    Domain.ANXIETY: ("worry", "worried", "anxious", "nervous", "panic", "on edge", "tense",
                     "restless", "racing heart", "fear", "scared"),
    Domain.PTSD: ("trauma", "nightmare", "flashback", "accident", "assault", "combat",
                  "startle", "attack", "abuse", "war"),
}
# Preferred (clinician, self-report) pair per domain for the fallback route.
FALLBACK_PAIRS = {
    Domain.DEPRESSION: ("HAM-D", "PHQ-9"),
    Domain.ANXIETY: ("HAM-A", "GAD-7"),
    Domain.PTSD: ("CAPS-5", "PC-PTSD-5"),
}


def route_domain(chief_complaint: str) -> Domain:
    """Keyword vote; ties resolve in table order, no hits default to Depression."""
    text = chief_complaint.lower()
    hits = {d: sum(len(re.findall(r"\b" + re.escape(k), text)) for k in kws)
            for d, kws in KEYWORDS.items()}
    best = max(hits.values())
    if best == 0:
        return Domain.DEPRESSION
    return next(d for d in KEYWORDS if hits[d] == best)


def fallback_plan(chief_complaint: str, repo: Repository) -> ScalePlan:
    domain = route_domain(chief_complaint)
    reason = f"keyword routing to {domain.value}"
    clin_pref, self_pref = FALLBACK_PAIRS[domain]
    clin = [d.abbr for d in repo.by_domain(domain, Admin.CLINICIAN_RATED)]
    selfr = [d.abbr for d in repo.by_domain(domain, Admin.SELF_REPORT)]
    if not clin:
        raise BackendFailure(f"no clinician-rated scale for {domain.value}; fallback impossible")
    c = clin_pref if clin_pref in clin else clin[0]
    s = [self_pref if self_pref in selfr else selfr[0]] if selfr else []
    return ScalePlan.of([c], s, reason)


def _to_plan(parsed: dict[str, Any], repo: Repository) -> ScalePlan:
    def entries(key: str) -> list[PlanEntry]:
        out = []
        for e in parsed.get(key, []):
            name = str(e["name"]).strip()
            d = repo.lookup(name)
            out.append(PlanEntry(abbr=d.abbr if d else name, reason=str(e.get("reason", ""))))
        return out

    return ScalePlan(clinician_scales=entries("clinician_scales"),
                     self_report_scales=entries("self_report_scales"))


def assessor_select(demographics: Demographics, chief_complaint: str, repo: Repository, backend,
                    *, ledger: CallLedger | None = None,
                    with_route: bool = False) -> ScalePlan | tuple[ScalePlan, str]:
    """Model proposal, one repair round on an invalid plan, then keyword fallback.

    ``with_route=True`` also returns which path produced the plan:
    ``"model"``, ``"repaired"`` or ``"fallback"``.
    """
    ledger = ledger or CallLedger()
    if len(repo) == 0:
        raise UnknownScale("empty scale repository")
    variables = {
        "scale_catalog": repo.catalog(),
        "demographics": f"{demographics.age}, {demographics.gender.value}",
        "chief_complaint": chief_complaint,
    }
    plan, route = None, "fallback"
    try:
        plan = _to_plan(call(backend, ledger, RoleTag.ASSESSOR_COT, "assessor", variables,
                             contract=PLAN_CONTRACT).parsed, repo)
        report = validate_plan(plan, repo)
        route = "model"
        if not report.ok:
            problems = "; ".join(v.detail for v in report.violations)
            repaired = dict(variables, chief_complaint=f"{chief_complaint}\n\nYour previous plan was "
                            f"rejected: {problems}. Fix it.")
            plan = _to_plan(call(backend, ledger, RoleTag.ASSESSOR_COT, "assessor", repaired,
                                 phase="plan_repair", contract=PLAN_CONTRACT).parsed, repo)
            route = "repaired"
            if not validate_plan(plan, repo).ok:
                plan = None
    except BackendFailure:
        plan = None
    if plan is None:
        plan, route = fallback_plan(chief_complaint, repo), "fallback"
    return (plan, route) if with_route else plan
