"""Compare the reasoning evaluator against the passive one on concealing patients.

Each seed gets its own profile and starting trust.  Prints mean trust per
round for both arms and the per-seed final trust gap.

    python scripts/run_ablation.py --seeds 10 --out runs/ablation
"""

import argparse
import json
from pathlib import Path

from intakesim.config import RunConfig
from intakesim.evaluation import ablation_run
from intakesim.fixtures import ABLATION_PLAN, ablation_initial_trust, ablation_profile, fixture_backend
from intakesim.scales import load_repository


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", type=Path, default=Path("runs/ablation"))
    a = ap.parse_args()

    repo = load_repository()
    gaps = {}
    reports = {}
    for seed in range(a.seeds):
        cfg = RunConfig(seed=seed).with_overrides(agent={"initial_trust": ablation_initial_trust(seed)})
        arms = {"cot": cfg, "passive": cfg.with_overrides(agent={"cot_enabled": False})}
        rep = ablation_run([ablation_profile(seed)], repo,
                           lambda p: fixture_backend(p, repo, plan=ABLATION_PLAN), arms, seed)
        reports[seed] = rep.to_dict()
        cot, passive = rep.arms["cot"].mean_trust_by_round(), rep.arms["passive"].mean_trust_by_round()
        gaps[seed] = cot[-1] - passive[-1]
        print(f"seed {seed}: final trust cot {cot[-1]:.3f}  passive {passive[-1]:.3f}")

    wins = sum(g > 0 for g in gaps.values())
    print(f"reasoning evaluator ends with higher trust on {wins}/{a.seeds} seeds")
    a.out.mkdir(parents=True, exist_ok=True)
    (a.out / "ablation_seeds.json").write_text(json.dumps(reports, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
