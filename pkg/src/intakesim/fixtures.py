"""Synthetic profiles and matching scripted-backend scripts.

Scripts are derived from a profile's ground truth: the assessor proposes a
fixed battery, self-report and rating calls return item vectors that land in
the ground-truth grade, and reasoning calls report suspicion according to the
honesty strategy.  Utterance calls echo the kernels' local drafts.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Any

from .backends.scripted import ScriptedBackend
from .profiles import (
    Demographics,
    FeatureBank,
    GroundTruth,
    PatientProfile,
    augment_profile,
    load_feature_bank,
)
from .scales import Repository, ScaleDefinition, ScalePlan, clinical_grade
from .vocab import Gender, Severity, Status, Strategy

COMPLAINTS = {
    Status.DEPRESSION: "I feel flat and down most days, and I can't sleep",
    Status.ANXIETY: "I worry about everything, and I feel on edge all the time",
    Status.PTSD: "Since the accident I get nightmares, and loud noises make me jump",
    Status.HEALTHY: "My partner wanted me to get checked after a stressful month at work",
}
PLANS = {
    Status.DEPRESSION: (["HAM-D"], ["PHQ-9"]),
    Status.ANXIETY: (["HAM-A"], ["GAD-7"]),
    Status.PTSD: (["CAPS-5"], ["PC-PTSD-5"]),
    Status.HEALTHY: (["HAM-D"], ["PHQ-9"]),
}
OCCUPATIONS = ("teacher", "nurse", "warehouse worker", "student", "accountant", "retired")
SUSPICION = {Strategy.FRANKNESS: 0.1, Strategy.CONCEALMENT: 0.8, Strategy.EXAGGERATION: 0.8}


def make_profile(profile_id: str, status: Status, severity: Severity,
                 strategy: Strategy = Strategy.FRANKNESS, *, seed: int = 0,
                 gender: Gender | None = None, age: int | None = None,
                 bank: FeatureBank | None = None, **fields: Any) -> PatientProfile:
    rng = random.Random(f"{profile_id}|{seed}")
    presentation = {
        "symptom_history": "Symptoms built up over the past few months.",
        "behavior_tendency": "guarded at first, opens up when treated warmly",
        "communication_style": "short answers, everyday words",
        "affect_baseline": "tired",
        **fields,
    }
    base = PatientProfile(
        profile_id=profile_id,
        demographics=Demographics(
            age=age if age is not None else rng.randint(19, 70),
            gender=gender or rng.choice([Gender.FEMALE, Gender.MALE]),
            occupation=rng.choice(OCCUPATIONS),
            living_status=rng.choice(["lives alone", "lives with partner", "lives with family"]),
        ),
        chief_complaint=COMPLAINTS[status],
        ground_truth=GroundTruth(status=status, severity=severity),
        **presentation,
    )
    if strategy is Strategy.FRANKNESS:
        return base
    bank = bank or load_feature_bank()
    ids = bank.ids(strategy)
    picked = sorted(random.Random(seed).sample(ids, 2))
    return augment_profile(base, strategy, picked, seed, bank)


# --------------------------------------------------------------------------- item vectors

def items_for_total(defn: ScaleDefinition, total: int) -> list[int]:
    lo, hi = defn.item_range
    n = defn.item_count
    spare = total - lo * n
    base, extra = divmod(spare, n)
    items = [lo + base + (1 if i < extra else 0) for i in range(n)]
    return items


def items_for_grade(defn: ScaleDefinition, grade: Severity, context: dict | None = None) -> list[int]:
    """Lower-median total among those whose clinical grade is closest to *grade*.

    The lower median keeps headroom above the vector on short binary scales,
    so honesty bias can move the total in either direction.
    """
    totals = list(range(defn.min_total, defn.max_total + 1))
    graded = [(t, clinical_grade(defn, t, context)) for t in totals]
    graded = [(t, g) for t, g in graded if g is not None]
    if not graded:
        return items_for_total(defn, totals[len(totals) // 2])
    best = min(abs(g.rank - grade.rank) for _, g in graded)
    pool = [t for t, g in graded if abs(g.rank - grade.rank) == best]
    return items_for_total(defn, pool[(len(pool) - 1) // 2])


def shift_items(defn: ScaleDefinition, items: list[int], delta: int) -> list[int]:
    lo, hi = defn.item_range
    return [min(hi, max(lo, x + delta)) for x in items]


# --------------------------------------------------------------------------- scripts

def build_script(profile: PatientProfile, repo: Repository, *, plan: ScalePlan | None = None,
                 suspicion: float | None = None, name: str | None = None,
                 include_evaluator: bool = True) -> dict[str, Any]:
    status = profile.ground_truth.status
    severity = profile.ground_truth.severity
    strategy = profile.honesty.deception_strategy
    if plan is None:
        clin, selfr = PLANS[status]
        plan = ScalePlan.of(clin, selfr, "fixture battery")
    context = {"gender": profile.demographics.gender.value}
    est = SUSPICION[strategy] if suspicion is None else suspicion
    pattern = strategy.value if strategy is not Strategy.FRANKNESS else "None"

    script: dict[str, Any] = {
        "_meta": {"name": name or f"fixture-{profile.profile_id}", "appraisal": "lexicon"},
        "AssessorCoT/0": {"json": {
            "clinician_scales": [{"name": a, "reason": "fixture"} for a in plan.clinician_abbrs],
            "self_report_scales": [{"name": a, "reason": "fixture"} for a in plan.self_report_abbrs],
        }},
        "PatientChat.opening/0": {"text": "Well, it's hard to say... {chief_complaint}."},
        "PatientChat/*": {"text": "{draft}"},
        "Diagnostician/0": {"json": {
            "final_diagnosis": {"status": status.value, "severity": severity.value},
            "reasoning": {"symptom_match": f"Presentation fits {status.value}.",
                          "discrepancy_resolution": "See scale comparison.",
                          "key_evidence": [{"round": 1, "note": "presenting complaint"}]},
        }},
    }
    if include_evaluator:
        flags = [] if strategy is Strategy.FRANKNESS else ["account of {topic} does not match affect"]
        script["EvaluatorCoT/*"] = {"json": {
            "reasoning_step": "Checking the latest answer on {topic} against earlier ones.",
            "suspicion_score": est,
            "inconsistency_flags": flags,
            "suspected_pattern": pattern,
            "next_move_type": "Investigate" if est > 0.5 else "Proceed",
            "target_topic": "{topic}",
            "guidance_for_chat": "{topic}",
        }}
        script["EvaluatorChat/*"] = {"text": "{draft}"}
        script["EvaluatorChat.passive/*"] = {"text": "{draft}"}
    for k, abbr in enumerate(plan.self_report_abbrs):
        d = repo.get(abbr)
        script[f"PatientCoT.self_report/{k}"] = {"json": {
            "item_scores": items_for_grade(d, severity, context),
            "interpretation": "How I have felt lately.",
        }}
    # transcript-literal ratings: what a literal reading of the answers supports
    literal_shift = {Strategy.FRANKNESS: 0, Strategy.CONCEALMENT: -1, Strategy.EXAGGERATION: 1}[strategy]
    for k, abbr in enumerate(plan.clinician_abbrs):
        d = repo.get(abbr)
        truth = items_for_grade(d, severity, context)
        script[f"EvaluatorCoT.rate/{k}"] = {"json": {
            "item_scores": shift_items(d, truth, literal_shift),
            "dialogue_evidence": {},
            "interpretation": f"{abbr} scored from the interview.",
        }}
    return script


def fixture_backend(profile: PatientProfile, repo: Repository, **kw) -> ScriptedBackend:
    return ScriptedBackend(build_script(profile, repo, **kw))


def mixed_profiles(n: int, seed: int = 0, bank: FeatureBank | None = None) -> list[PatientProfile]:
    """Cycle through statuses and honesty strategies; severities follow the status."""
    bank = bank or load_feature_bank()
    rng = random.Random(seed)
    statuses = [Status.DEPRESSION, Status.ANXIETY, Status.PTSD, Status.HEALTHY]
    strategies = [Strategy.FRANKNESS, Strategy.CONCEALMENT, Strategy.EXAGGERATION]
    graded = [Severity.MILD, Severity.MODERATE, Severity.SEVERE]
    out = []
    for i in range(n):
        status = statuses[i % len(statuses)]
        sev = Severity.NOT_APPLICABLE if status is Status.HEALTHY else graded[rng.randrange(3)]
        strat = strategies[(i // len(statuses)) % len(strategies)]
        out.append(make_profile(f"p{i:03d}", status, sev, strat, seed=seed + i, bank=bank))
    return out


ABLATION_PLAN = ScalePlan.of(["MADRS"], ["PHQ-9"], "ablation battery")


def ablation_profile(seed: int, bank: FeatureBank | None = None) -> PatientProfile:
    """A concealing patient with moderate depression who opens up only once trust exceeds 0.6."""
    return make_profile(f"abl{seed:02d}", Status.DEPRESSION, Severity.MODERATE,
                        Strategy.CONCEALMENT, seed=seed, bank=bank)


def ablation_initial_trust(seed: int) -> float:
    """Starting trust below the disclosure threshold, varied per seed."""
    return round(random.Random(seed).uniform(0.3, 0.55), 3)


def write_fixture_profiles(out_dir, profiles, repo: Repository, **script_kw) -> list:
    """Write ``<id>.json`` profiles with sibling ``<id>.script.json`` scripts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for p in profiles:
        path = out / f"{p.profile_id}.json"
        path.write_text(p.to_json() + "\n", encoding="utf-8")
        script = build_script(p, repo, **script_kw)
        (out / f"{p.profile_id}.script.json").write_text(
            json.dumps(script, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def bundled_script(name: str) -> tuple[PatientProfile, ScriptedBackend]:
    """A packaged (profile, scripted backend) pair, e.g. ``"frank-depression"``."""
    from importlib import resources

    root = resources.files("intakesim.data.scripts")
    profile = PatientProfile.model_validate_json(root.joinpath(f"{name}.profile.json").read_text("utf-8"))
    script = json.loads(root.joinpath(f"{name}.json").read_text("utf-8"))
    return profile, ScriptedBackend(script)
