"""Long-running target: factorize the 19-bit semiprime 497503 = 499 x 997.

Builds the 9x10-bit multiplier, integrates single trajectories until one
solves, and prints progress.  Expect minutes of wall time per seed; this
is deliberately not part of the test suite.

Usage: python scripts/run_19bit_instance.py [--seeds 3] [--max-time 20000]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from memflow.cnf import decode_factors, encode_cnf
from memflow.dynamics import FlowParams, initial_state, integrate
from memflow.litgraph import literal_graph
from memflow.netlist import build_multiplier


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=3)
    parser.add_argument("--max-time", type=float, default=20000.0)
    args = parser.parse_args()

    netlist = build_multiplier(9, 10)
    cs = encode_cnf(netlist, 497503)
    graph = literal_graph(cs)
    print(f"instance: {cs.num_vars} variables ({len(cs.free_vars)} free), "
          f"{len(cs.clauses)} clauses, literal-graph diameter {graph.diameter}")

    params = FlowParams()
    solved = 0
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        t0 = time.time()
        traj = integrate(initial_state(cs, params, rng), cs, params,
                         max_time=args.max_time, record_stride=100, rng=rng)
        wall = time.time() - t0
        if traj.termination == "solved":
            p, q = decode_factors(cs, traj.assignment)
            assert p * q == 497503
            solved += 1
            print(f"seed {seed}: solved {p} x {q} at t={traj.final_state.t:.0f} "
                  f"({len(traj.crossings)} crossings, {wall:.0f}s wall)")
        else:
            print(f"seed {seed}: {traj.termination} after t={traj.final_state.t:.0f} ({wall:.0f}s wall)")
    print(f"{solved}/{args.seeds} seeds solved")
    return 0 if solved else 1


if __name__ == "__main__":
    raise SystemExit(main())
