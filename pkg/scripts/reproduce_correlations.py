"""Generate the spatial/temporal correlation curves for a factorization run.

Desk default: n=793 (13 x 61, 10-bit product), 200 runs.  The full-scale
setting (--runs 2000 on the 19-bit instance via --n 497503 --p-bits 9
--q-bits 10) matches the large-ensemble configuration but takes hours.

Writes c_d.csv, c_tau.csv and a summary to --out.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from memflow.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=793)
    parser.add_argument("--p-bits", type=int, default=4)
    parser.add_argument("--q-bits", type=int, default=6)
    parser.add_argument("--runs", type=int, default=200)
    parser.add_argument("--base-seed", type=int, default=7)
    parser.add_argument("--workers", type=int, default=0)
    parser.add_argument("--out", default="memflow-out/correlations")
    args = parser.parse_args()

    cli_args = ["analyze", str(args.n), "--p-bits", str(args.p_bits), "--q-bits", str(args.q_bits),
                "-M", str(args.runs), "--base-seed", str(args.base_seed), "--out", args.out]
    if args.workers:
        cli_args += ["--workers", str(args.workers)]
    return cli_main(cli_args)


if __name__ == "__main__":
    raise SystemExit(main())
