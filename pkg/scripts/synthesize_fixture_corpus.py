"""Generate fixture profiles with scripted backends and synthesize a corpus from them.

    python scripts/synthesize_fixture_corpus.py --n 48 --out runs/fixture
"""

import argparse
import sys
from pathlib import Path

from intakesim.cli import main as cli
from intakesim.fixtures import mixed_profiles, write_fixture_profiles
from intakesim.scales import load_repository


def run(n: int, out: Path, seed: int, workers: int) -> int:
    profiles_dir = out / "profiles"
    write_fixture_profiles(profiles_dir, mixed_profiles(n, seed=seed), load_repository())
    corpus = out / "corpus"
    code = cli(["synthesize", "--profiles", str(profiles_dir), "--out", str(corpus),
                "--seed", str(seed), "--workers", str(workers)])
    if code == 0:
        code = cli(["validate", str(corpus)])
    return code


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=48)
    ap.add_argument("--out", type=Path, default=Path("runs/fixture"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    a = ap.parse_args()
    sys.exit(run(a.n, a.out, a.seed, a.workers))
