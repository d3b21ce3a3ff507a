"""Command-line entry point: factorize, analyze, toy.

Every run writes a ``run_config.txt`` holding the fully resolved
configuration; feeding it back through ``--config`` reproduces the run
(and its CSV artifacts) byte for byte.  Outputs are plain CSV plus
key=value manifests; no plotting happens here.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import read_manifest, sha256_text, write_csv, write_manifest
from .cnf import DimacsError, EncodingError, decode_factors, encode_cnf, export_dimacs, parse_dimacs
from .dynamics import (
    FIXED_POINT_NON_SOLUTION,
    MAX_TIME,
    SOLVED,
    FlowParams,
    detect_instanton_phase,
    initial_state,
    integrate,
)
from .ensemble import GLOBAL_T, PER_TRAJECTORY, EnsembleConfig, analyze
from .litgraph import literal_graph
from .netlist import build_multiplier, netlist_to_text
from .toyflow import build_instanton_family, invariance_scan, logistic_product, spiral_sink, suggest_scan_times

EXIT_OK = 0
EXIT_CONFIG = 2  # argparse uses 2 for usage errors as well
EXIT_TIMEOUT = 3
EXIT_FIXED_POINT = 4

_FLOW_FIELDS = {
    "alpha": (float, 5.0),
    "beta": (float, 20.0),
    "gamma": (float, 0.25),
    "delta": (float, 0.05),
    "epsilon": (float, 1e-3),
    "zeta": (float, 0.1),
    "theta": (float, 0.0),
    "dt": (float, None),
    "x_l_max": (float, None),
    "v_clamp": (float, 1.0),
}


class ConfigError(ValueError):
    pass


def _add_flow_flags(p: argparse.ArgumentParser) -> None:
    for name in _FLOW_FIELDS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)


def _resolve(args, config: dict, name: str, typ, default):
    explicit = getattr(args, name, None)
    if explicit is not None:
        return explicit
    if name in config and config[name] != "":
        if typ is bool:
            return config[name] in ("1", "true", "True")
        return typ(config[name])
    return default


def _flow_params(args, config) -> FlowParams:
    values = {}
    for name, (typ, default) in _FLOW_FIELDS.items():
        values[name] = _resolve(args, config, name, typ, default)
    theta = values["theta"]
    if values["dt"] is None:
        values["dt"] = 0.01 if theta > 0 else 0.05
    return FlowParams(**values)


def _load_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    try:
        return read_manifest(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


def _build_instance(args, config):
    """(clause system, netlist or None, n, info) from flags or a DIMACS file."""
    cnf_path = _resolve(args, config, "cnf", str, None)
    n = _resolve(args, config, "n", int, None)
    if cnf_path:
        try:
            cs = parse_dimacs(Path(cnf_path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {cnf_path}: {exc}")
        except DimacsError as exc:
            raise ConfigError(f"bad DIMACS file {cnf_path}: {exc}")
        return cs, None, n, {"cnf": cnf_path, "n": n if n is not None else ""}
    if n is None:
        raise ConfigError("need a number to factorize (or --cnf PATH)")
    if n < 4:
        raise ConfigError("n must be at least 4")
    p_bits = _resolve(args, config, "p_bits", int, None)
    q_bits = _resolve(args, config, "q_bits", int, None)
    if p_bits is None or q_bits is None:
        raise ConfigError("--p-bits and --q-bits are required without --cnf")
    try:
        netlist = build_multiplier(p_bits, q_bits)
        cs = encode_cnf(netlist, n)
    except (ValueError, EncodingError) as exc:
        raise ConfigError(str(exc))
    return cs, netlist, n, {"n": n, "p_bits": p_bits, "q_bits": q_bits}


def _select_plot_literals(cs, count: int, seed: int) -> list[int]:
    free = cs.free_vars
    count = min(count, len(free))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    picked = rng.choice(len(free), size=count, replace=False)
    return sorted(free[i] for i in picked)


def cmd_factorize(args) -> int:
    config = _load_config(args)
    cs, netlist, n, instance_info = _build_instance(args, config)
    params = _flow_params(args, config)
    seed = _resolve(args, config, "seed", int, 0)
    max_time = _resolve(args, config, "max_time", float, 1000.0)
    record_stride = _resolve(args, config, "record_stride", int, 5)
    plot_literals = _resolve(args, config, "plot_literals", int, 70)
    out = Path(args.out or f"memflow-out/factorize-{instance_info.get('n', 'cnf')}-seed{seed}")
    out.mkdir(parents=True, exist_ok=True)

    run_config = {"subcommand": "factorize", **instance_info, "seed": seed, "max_time": max_time,
                  "record_stride": record_stride, "plot_literals": plot_literals,
                  **{k: getattr(params, k) if getattr(params, k) is not None else "" for k in _FLOW_FIELDS},
                  "version": __version__}
    write_manifest(out / "run_config.txt", run_config)
    if netlist is not None:
        (out / "netlist.txt").write_text(netlist_to_text(netlist))

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    state = initial_state(cs, params, rng)
    traj = integrate(state, cs, params, max_time, record_stride=record_stride, rng=rng)

    subset = _select_plot_literals(cs, plot_literals, seed)
    names = [cs.node_map.get(v, f"v{v}") for v in subset]
    u = traj.u()
    write_csv(out / "trajectory.csv", ["t"] + [f"u_{name}" for name in names],
              ((t, *row) for t, row in zip(traj.times.tolist(), u[:, subset].tolist())))
    write_csv(out / "crossings.csv", ["t", "var", "direction", "slope_sign"],
              ((e.time, e.var, e.direction, e.slope_sign) for e in traj.crossings))

    phase = detect_instanton_phase(traj)
    result = {"status": traj.termination, "n": instance_info.get("n", ""),
              "t_end": traj.final_state.t, "crossings": len(traj.crossings),
              "phase_start": phase.t_start if phase else "", "phase_end": phase.t_end if phase else ""}
    code = EXIT_OK
    if traj.termination == SOLVED:
        try:
            p, q = decode_factors(cs, traj.assignment)
        except ValueError:
            p = q = None
        if p is not None:
            if n is not None and p * q != n:
                raise RuntimeError(f"decoded factors {p} x {q} do not multiply to {n}")
            result["p"], result["q"] = p, q
            print(p, q)
        else:
            result["satisfying_assignment"] = "".join(
                "1" if b else "0" for b in traj.assignment.tolist()
            )
            print("SAT")
    elif traj.termination == MAX_TIME:
        code = EXIT_TIMEOUT
        print(f"no solution within max_time={max_time}; see {out}/result.txt", file=sys.stderr)
    elif traj.termination == FIXED_POINT_NON_SOLUTION:
        code = EXIT_FIXED_POINT
        print("flow stalled at a non-solution fixed point (this should not happen; "
              f"state recorded in {out})", file=sys.stderr)
    result["exit_code"] = code
    write_manifest(out / "result.txt", result)
    return code


def cmd_analyze(args) -> int:
    config = _load_config(args)
    cs, _, n, instance_info = _build_instance(args, config)
    params = _flow_params(args, config)
    runs = _resolve(args, config, "runs", int, 200)
    base_seed = _resolve(args, config, "base_seed", int, 0)
    max_time = _resolve(args, config, "max_time", float, 2000.0)
    record_stride = _resolve(args, config, "record_stride", int, 4)
    max_lag = _resolve(args, config, "max_lag", float, None)
    t_rule = _resolve(args, config, "t_rule", str, PER_TRAJECTORY)
    if t_rule not in (PER_TRAJECTORY, GLOBAL_T):
        raise ConfigError(f"--t-rule must be {PER_TRAJECTORY} or {GLOBAL_T}")
    workers = _resolve(args, config, "workers", int, _default_workers())
    out = Path(args.out or f"memflow-out/analyze-{instance_info.get('n', 'cnf')}")
    out.mkdir(parents=True, exist_ok=True)

    graph = literal_graph(cs)
    cfg = EnsembleConfig(cs=cs, params=params, run_count=runs, base_seed=base_seed,
                         max_time=max_time, record_stride=record_stride,
                         t_rule=t_rule, max_lag=max_lag, workers=workers)
    result = analyze(cfg, graph)

    label = t_rule
    write_csv(out / f"c_d_{label}.csv", ["d", "C"],
              ((d, result.c_d[d]) for d in sorted(result.c_d)))
    lit_names = [cs.node_map.get(v, f"v{v}") for v in result.temporal_literals]
    write_csv(out / f"c_tau_{label}.csv", ["tau"] + [f"C_{name}" for name in lit_names],
              ((t, *[result.c_tau[v][i] for v in result.temporal_literals])
               for i, t in enumerate(result.tau.tolist())))

    summary = {
        "diameter": result.diameter,
        "correlation_length": result.correlation_length if result.correlation_length is not None else "none",
        "correlation_time": result.correlation_time if result.correlation_time is not None else "none",
        "median_phase_duration": result.median_phase_duration,
        "excluded_no_phase": result.excluded_no_phase,
        "skipped_pairs": result.skipped_pairs,
        "temporal_literals": " ".join(str(v) for v in result.temporal_literals),
        **{f"terminated_{k}": v for k, v in sorted(result.counts.items())},
    }
    write_manifest(out / f"summary_{label}.txt", summary)

    run_config = {"subcommand": "analyze", **instance_info, "runs": runs, "base_seed": base_seed,
                  "max_time": max_time, "record_stride": record_stride,
                  "max_lag": max_lag if max_lag is not None else "", "t_rule": t_rule,
                  "workers": workers,
                  **{k: getattr(params, k) if getattr(params, k) is not None else "" for k in _FLOW_FIELDS},
                  "version": __version__}
    write_manifest(out / "run_config.txt", run_config)
    manifest = {"instance_hash": sha256_text(export_dimacs(cs)),
                "runs": runs, "base_seed": base_seed,
                "seed_rule": "seed_sequence(base_seed).spawn(index)",
                **run_config}
    write_manifest(out / f"manifest_{label}.txt", manifest)

    fixed = result.counts.get(FIXED_POINT_NON_SOLUTION, 0)
    unsolved = result.counts.get(MAX_TIME, 0)
    if fixed or unsolved:
        print(f"warning: partial ensemble ({fixed} non-solution fixed points, "
              f"{unsolved} timeouts out of {runs} runs)", file=sys.stderr)
    for key, value in summary.items():
        print(f"{key}={value}")
    return EXIT_OK


def _parse_times(spec: str) -> list[float] | None:
    if spec == "auto":
        return None
    if ":" in spec:
        lo, hi, count = spec.split(":")
        return np.linspace(float(lo), float(hi), int(count)).tolist()
    return [float(tok) for tok in spec.split(",") if tok]


def cmd_toy(args) -> int:
    config = _load_config(args)
    flow_kind = _resolve(args, config, "flow", str, "logistic")
    dim = _resolve(args, config, "dim", int, 1)
    sigma_min = _resolve(args, config, "sigma_min", float, -4.0)
    sigma_max = _resolve(args, config, "sigma_max", float, 4.0)
    sigma_count = _resolve(args, config, "sigma_count", int, None)
    dt = _resolve(args, config, "dt", float, 0.02)
    times_spec = _resolve(args, config, "times", str, "auto")
    points = _resolve(args, config, "points", int, 20)

    if flow_kind == "logistic":
        flow = logistic_product(dim)
    elif flow_kind == "spiral":
        flow = spiral_sink()
    else:
        raise ConfigError(f"unknown flow kind {flow_kind!r} (choose logistic or spiral)")
    m = flow.start.n_unstable
    if sigma_count is None:
        sigma_count = 161 if m == 1 else 41
    out = Path(args.out or f"memflow-out/toy-{flow_kind}{dim if flow_kind == 'logistic' else ''}")
    out.mkdir(parents=True, exist_ok=True)

    family = build_instanton_family(flow, sigma_span=(sigma_min, sigma_max), count=sigma_count, dt=dt)
    literals = list(range(flow.dim))[:m] if flow_kind == "logistic" else [0]

    times = _parse_times(times_spec)
    if times is None:
        times = suggest_scan_times(family, literals[0], points).tolist()
    time_grid = [(t,) * m if np.isscalar(t) else tuple(t) for t in times]
    report = invariance_scan(family, literals, time_grid)

    (out / "report.txt").write_text(report.to_text())
    _dump_family_csv(out / "trajectories.csv", family)
    run_config = {"subcommand": "toy", "flow": flow_kind, "dim": dim,
                  "sigma_min": sigma_min, "sigma_max": sigma_max, "sigma_count": sigma_count,
                  "dt": dt, "times": times_spec, "points": points, "version": __version__}
    write_manifest(out / "run_config.txt", run_config)

    print(f"value_set {sorted(report.value_set)}")
    print(f"raw_crossing_counts {sorted(report.raw_count_set)}")
    if report.errors:
        print(f"{len(report.errors)} observation tuples hit tangent crossings; "
              "rerun with a finer --sigma-count to resolve them", file=sys.stderr)
    return EXIT_OK


def _dump_family_csv(path, family, max_curves: int = 9) -> None:
    g = family.frames.shape[1]
    picks = np.unique(np.linspace(0, g - 1, min(max_curves, g)).astype(int))
    header = ["t"]
    for i in picks.tolist():
        for d in range(family.flow.dim):
            header.append(f"x{d}_g{i}")
    rows = []
    stride = max(1, len(family.times) // 2000)
    for k in range(0, len(family.times), stride):
        row = [family.times[k]]
        for i in picks.tolist():
            row.extend(family.frames[k, i].tolist())
        rows.append(row)
    write_csv(path, header, rows)


def _default_workers() -> int:
    env = os.environ.get("MEMFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memflow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"memflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factorize", help="solve one factorization instance")
    f.add_argument("n", nargs="?", type=int, default=None)
    f.add_argument("--p-bits", dest="p_bits", type=int, default=None)
    f.add_argument("--q-bits", dest="q_bits", type=int, default=None)
    f.add_argument("--cnf", dest="cnf", default=None, help="DIMACS file; bypasses the multiplier builder")
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--max-time", dest="max_time", type=float, default=None)
    f.add_argument("--record-stride", dest="record_stride", type=int, default=None)
    f.add_argument("--plot-literals", dest="plot_literals", type=int, default=None)
    f.add_argument("--out", default=None)
    f.add_argument("--config", default=None)
    _add_flow_flags(f)
    f.set_defaults(func=cmd_factorize)

    a = sub.add_parser("analyze", help="trajectory ensemble and correlation curves")
    a.add_argument("n", nargs="?", type=int, default=None)
    a.add_argument("--p-bits", dest="p_bits", type=int, default=None)
    a.add_argument("--q-bits", dest="q_bits", type=int, default=None)
    a.add_argument("--cnf", dest="cnf", default=None)
    a.add_argument("-M", "--runs", dest="runs", type=int, default=None)
    a.add_argument("--base-seed", dest="base_seed", type=int, default=None)
    a.add_argument("--max-time", dest="max_time", type=float, default=None)
    a.add_argument("--record-stride", dest="record_stride", type=int, default=None)
    a.add_argument("--max-lag", dest="max_lag", type=float, default=None)
    a.add_argument("--t-rule", dest="t_rule", choices=[PER_TRAJECTORY, GLOBAL_T], default=None)
    a.add_argument("--workers", type=int, default=None)
    a.add_argument("--out", default=None)
    a.add_argument("--config", default=None)
    _add_flow_flags(a)
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("toy", help="signed threshold-crossing invariance scan on a toy flow")
    t.add_argument("--flow", choices=["logistic", "spiral"], default=None)
    t.add_argument("--dim", type=int, default=None)
    t.add_argument("--sigma-min", dest="sigma_min", type=float, default=None)
    t.add_argument("--sigma-max", dest="sigma_max", type=float, default=None)
    t.add_argument("--sigma-count", dest="sigma_count", type=int, default=None)
    t.add_argument("--dt", type=float, default=None)
    t.add_argument("--times", default=None, help='"auto", "a,b,c" or "lo:hi:count"')
    t.add_argument("--points", type=int, default=None, help="number of auto scan times")
    t.add_argument("--out", default=None)
    t.add_argument("--config", default=None)
    t.set_defaults(func=cmd_toy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
