"""Regenerate the bundled synthetic fixture under src/volsent/data/fixture/."""
import argparse
from pathlib import Path

from volsent.fixture import bundled_fixture_dir, write_fixture

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=bundled_fixture_dir())
    ap.add_argument("--n-returns", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    path = write_fixture(args.out, n_returns=args.n_returns, seed=args.seed)
    print(f"fixture written to {path}")
