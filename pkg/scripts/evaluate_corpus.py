"""Alignment metrics, corpus statistics and a stratified rating sample for a corpus.

    python scripts/evaluate_corpus.py runs/fixture/corpus --strata 12,13,25
"""

import argparse
import sys

from intakesim.cli import main as cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpus")
    ap.add_argument("--strata", default="4,4,4", help="concealment,exaggeration,frankness")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    worst = 0
    for argv in (["evaluate", a.corpus],
                 ["stats", a.corpus],
                 ["sample", a.corpus, "--strata", a.strata, "--seed", str(a.seed),
                  "--out", f"{a.corpus}/eval/sample.json"]):
        worst = max(worst, cli(argv))
    return worst


if __name__ == "__main__":
    sys.exit(main())
