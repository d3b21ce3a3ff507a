"""Seeded trajectory ensembles and burst-phase correlation functions.

Spatial correlations compare voltages of variable pairs across an
ensemble of runs, each sampled at its own mid-burst time (per-trajectory
alignment; a fixed global time rule is available for comparison):

    C(d) = max over pairs (a, b) at graph distance d of
           E2{v_a, v_b} / sqrt(E2{v_a} * E2{v_b})

with the covariance estimator E2{a,b} = E{ab} - E{a}E{b} taken over the
ensemble dimension.  Temporal correlations fix a literal and lag the
second sample:  C(tau) = E2{v(t), v(t+tau)} / E2{v(t)}.  Note the
asymmetric normalization: C(0) = 1 exactly, but |C(tau)| may exceed 1 in
principle.  The correlation length (time) is the first distance (lag) at
which the curve drops one order of magnitude below its plateau.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cnf import ClauseSystem
from .dynamics import (
    FIXED_POINT_NON_SOLUTION,
    FlowParams,
    Trajectory,
    detect_instanton_phase,
    initial_state,
    integrate,
)
from .litgraph import LiteralGraph

#: Pairs with ensemble variance below this are skipped (and counted).
MIN_VARIANCE = 1e-12

PER_TRAJECTORY = "per-trajectory"
GLOBAL_T = "global"


def covariance_e2(a, b) -> float:
    """E2{a,b} = E{ab} - E{a}E{b} over the sample dimension, exactly.

    Sums are computed with ``math.fsum`` so the result is independent of
    accumulation order.
    """
    la = [float(x) for x in a]
    lb = [float(x) for x in b]
    if len(la) != len(lb):
        raise ValueError("sample vectors differ in length")
    n = len(la)
    if n < 2:
        raise ValueError("need at least 2 samples")
    e_ab = math.fsum(x * y for x, y in zip(la, lb)) / n
    e_a = math.fsum(la) / n
    e_b = math.fsum(lb) / n
    return e_ab - e_a * e_b


class _NeumaierSum:
    """Compensated running sum; error stays O(eps * sum |x|)."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float) -> None:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    def value(self) -> float:
        return self.s + self.c


class CovarianceAccumulator:
    """Mergeable covariance accumulator (a monoid under ``merge``).

    Accumulates compensated sums of a, b and a*b; partitions of the same
    sample set merged in any order agree to well below 1e-12.
    """

    def __init__(self):
        self.count = 0
        self._sa = _NeumaierSum()
        self._sb = _NeumaierSum()
        self._sab = _NeumaierSum()

    def update(self, a, b) -> None:
        la = [float(x) for x in np.atleast_1d(a)]
        lb = [float(x) for x in np.atleast_1d(b)]
        if len(la) != len(lb):
            raise ValueError("sample vectors differ in length")
        for x, y in zip(la, lb):
            self._sa.add(x)
            self._sb.add(y)
            self._sab.add(x * y)
        self.count += len(la)

    def merge(self, other: "CovarianceAccumulator") -> "CovarianceAccumulator":
        out = CovarianceAccumulator()
        out.count = self.count + other.count
        for mine, theirs, target in (
            (self._sa, other._sa, out._sa),
            (self._sb, other._sb, out._sb),
            (self._sab, other._sab, out._sab),
        ):
            target.add(mine.value())
            target.add(theirs.value())
        return out

    def covariance(self) -> float:
        if self.count < 2:
            raise ValueError("need at least 2 samples")
        n = self.count
        return self._sab.value() / n - (self._sa.value() / n) * (self._sb.value() / n)


@dataclass
class EnsembleConfig:
    cs: ClauseSystem
    params: FlowParams
    run_count: int
    base_seed: int = 0
    #: Explicit per-run seeds; overrides base_seed derivation when given.
    seeds: list[int] | None = None
    max_time: float = 1000.0
    record_stride: int = 4
    t_rule: str = PER_TRAJECTORY
    #: Literals for temporal correlations; None picks the `temporal_count`
    #: highest-variance free variables at the aligned snapshot.
    temporal_literals: list[int] | None = None
    temporal_count: int = 4
    #: Maximum lag in time units; None resolves to 4x the median burst duration.
    max_lag: float | None = None
    workers: int = 1

    def __post_init__(self):
        count = len(self.seeds) if self.seeds is not None else self.run_count
        if count < 2:
            raise ValueError("ensemble needs at least 2 runs")
        if self.t_rule not in (PER_TRAJECTORY, GLOBAL_T):
            raise ValueError(f"unknown t_rule {self.t_rule!r}")


@dataclass
class Ensemble:
    trajectories: list[Trajectory]
    seed_labels: list[str]
    counts: dict[str, int]
    fixed_point_indices: list[int]


@dataclass
class CorrelationResult:
    c_d: dict[int, float]
    tau: np.ndarray
    c_tau: dict[int, np.ndarray]
    correlation_length: int | None
    correlation_time: float | None
    diameter: int
    median_phase_duration: float
    excluded_no_phase: int
    skipped_pairs: int
    t_rule: str
    temporal_literals: list[int] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)


def _rng_for(cfg_base_seed: int, index: int, explicit: list[int] | None):
    if explicit is not None:
        return np.random.default_rng(explicit[index])
    seq = np.random.SeedSequence(entropy=cfg_base_seed, spawn_key=(index,))
    return np.random.default_rng(seq)


def _run_one(args) -> Trajectory:
    cs, params, base_seed, index, explicit, max_time, stride = args
    rng = _rng_for(base_seed, index, explicit)
    state = initial_state(cs, params, rng)
    return integrate(state, cs, params, max_time, record_stride=stride, rng=rng)


def run_ensemble(cfg: EnsembleConfig) -> Ensemble:
    """Run the seeded ensemble; trajectories are indexed by seed.

    Runs that stall at a non-solution fixed point are reported in
    ``fixed_point_indices``, never silently dropped.
    """
    count = len(cfg.seeds) if cfg.seeds is not None else cfg.run_count
    tasks = [
        (cfg.cs, cfg.params, cfg.base_seed, i, cfg.seeds, cfg.max_time, cfg.record_stride)
        for i in range(count)
    ]
    workers = max(1, min(cfg.workers, count))
    if workers == 1:
        trajectories = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(_run_one, tasks))
    if cfg.seeds is not None:
        labels = [str(s) for s in cfg.seeds]
    else:
        labels = [f"{cfg.base_seed}:{i}" for i in range(count)]
    counts: dict[str, int] = {}
    fixed = []
    for i, traj in enumerate(trajectories):
        counts[traj.termination] = counts.get(traj.termination, 0) + 1
        if traj.termination == FIXED_POINT_NON_SOLUTION:
            fixed.append(i)
    return Ensemble(trajectories=trajectories, seed_labels=labels, counts=counts, fixed_point_indices=fixed)


def sample_index_at(traj: Trajectory, t: float) -> int:
    """Index of the snapshot nearest to time t (clamped to the record)."""
    times = traj.times
    i = int(np.searchsorted(times, t))
    if i <= 0:
        return 0
    if i >= len(times):
        return len(times) - 1
    return i - 1 if t - times[i - 1] <= times[i] - t else i


def _aligned_indices(trajectories: list[Trajectory], t_rule: str):
    """Reference snapshot index per trajectory; None for runs with no burst."""
    phases = [detect_instanton_phase(tr) for tr in trajectories]
    mids = [ph.mid_time if ph is not None else None for ph in phases]
    if t_rule == GLOBAL_T:
        observed = [m for m in mids if m is not None]
        if not observed:
            return [None] * len(trajectories), phases
        t_global = float(np.median(observed))
        idx = [sample_index_at(tr, t_global) if m is not None else None for tr, m in zip(trajectories, mids)]
    else:
        idx = [sample_index_at(tr, m) if m is not None else None for tr, m in zip(trajectories, mids)]
    return idx, phases


def _snapshot_matrix(trajectories: list[Trajectory], t_rule: str):
    idx, phases = _aligned_indices(trajectories, t_rule)
    rows = [tr.v[i] for tr, i in zip(trajectories, idx) if i is not None]
    excluded = sum(1 for i in idx if i is None)
    if len(rows) < 2:
        raise ValueError("fewer than 2 trajectories have a burst phase")
    return np.vstack(rows), idx, phases, excluded


def spatial_correlation(
    trajectories: list[Trajectory],
    graph: LiteralGraph,
    t_rule: str = PER_TRAJECTORY,
):
    """C(d) over the literal graph; returns (curve dict, diagnostics dict)."""
    x, _, _, excluded = _snapshot_matrix(trajectories, t_rule)
    rows = x.shape[0]
    cols: dict[int, list[float]] = {}
    means: dict[int, float] = {}
    variances: dict[int, float] = {}
    for var in graph.vertices:
        col = [float(t) for t in x[:, var]]
        cols[var] = col
        means[var] = math.fsum(col) / rows
        variances[var] = covariance_e2(col, col)

    c_d: dict[int, float] = {}
    skipped = 0
    for d in range(1, graph.diameter + 1):
        best = None
        for a, b in graph.pairs_at_distance(d):
            va, vb = variances[a], variances[b]
            if va < MIN_VARIANCE or vb < MIN_VARIANCE:
                skipped += 1
                continue
            ca, cb = cols[a], cols[b]
            cov = math.fsum(p * q for p, q in zip(ca, cb)) / rows - means[a] * means[b]
            ratio = cov / math.sqrt(va * vb)
            # normalized covariance is in [-1, 1]; clip float residue
            ratio = max(-1.0, min(1.0, ratio))
            if best is None or ratio > best:
                best = ratio
        if best is not None:
            c_d[d] = best
    return c_d, {"excluded_no_phase": excluded, "skipped_pairs": skipped, "ensemble_rows": rows}


def temporal_correlation(
    trajectories: list[Trajectory],
    literal: int,
    t_rule: str = PER_TRAJECTORY,
    max_lag: float = 10.0,
    lag_step: float | None = None,
):
    """C(tau) for one literal on a uniform lag grid; returns (tau, values).

    Lags past a trajectory's record reuse its final snapshot (the run has
    reached a fixed point and holds its value).
    """
    idx, _ = _aligned_indices(trajectories, t_rule)
    used = [(tr, i) for tr, i in zip(trajectories, idx) if i is not None]
    if len(used) < 2:
        raise ValueError("fewer than 2 trajectories have a burst phase")
    if lag_step is None:
        first = used[0][0].times
        if len(first) < 2:
            raise ValueError("trajectories carry a single snapshot; no lag grid")
        lag_step = float(first[1] - first[0])
    n_lags = int(math.floor(max_lag / lag_step + 1e-9)) + 1
    tau = np.arange(n_lags) * lag_step

    samples = np.empty((len(used), n_lags))
    for r, (tr, i0) in enumerate(used):
        t0 = float(tr.times[i0])
        for j in range(n_lags):
            samples[r, j] = tr.v[sample_index_at(tr, t0 + j * lag_step), literal]

    base = samples[:, 0]
    var0 = covariance_e2(base, base)
    if var0 < MIN_VARIANCE:
        raise ValueError(f"literal {literal} has degenerate variance at the aligned time")
    values = np.empty(n_lags)
    for j in range(n_lags):
        values[j] = covariance_e2(base, samples[:, j]) / var0
    return tau, values


def select_temporal_literals(
    trajectories: list[Trajectory],
    graph: LiteralGraph,
    count: int,
    t_rule: str = PER_TRAJECTORY,
) -> list[int]:
    """Default literal subset: the highest-variance vertices at alignment."""
    x, _, _, _ = _snapshot_matrix(trajectories, t_rule)
    ranked = sorted(
        graph.vertices,
        key=lambda var: covariance_e2(x[:, var], x[:, var]),
        reverse=True,
    )
    return sorted(ranked[:count])


def correlation_scales(result: CorrelationResult) -> tuple[int | None, float | None]:
    """First distance/lag where the curve drops below plateau/10.

    Spatial plateau is C(1); temporal plateau is C(0) = 1.  The temporal
    scale is the median over the analyzed literals.  Either value is None
    when no drop is observed within range.
    """
    length = None
    plateau = result.c_d.get(1)
    if plateau is not None:
        for d in sorted(result.c_d):
            if result.c_d[d] < plateau / 10.0:
                length = d
                break
    times = []
    for values in result.c_tau.values():
        drop = np.nonzero(values < 0.1)[0]
        if drop.size:
            times.append(float(result.tau[drop[0]]))
    time = float(np.median(times)) if times else None
    return length, time


def analyze(cfg: EnsembleConfig, graph: LiteralGraph, ensemble: Ensemble | None = None) -> CorrelationResult:
    """Run (or reuse) an ensemble and compute both correlation curves."""
    if ensemble is None:
        ensemble = run_ensemble(cfg)
    trajs = ensemble.trajectories
    c_d, diag = spatial_correlation(trajs, graph, cfg.t_rule)

    phases = [detect_instanton_phase(tr) for tr in trajs]
    durations = [ph.duration for ph in phases if ph is not None]
    median_duration = float(np.median(durations)) if durations else 0.0
    max_lag = cfg.max_lag if cfg.max_lag is not None else max(4.0 * median_duration, 1.0)

    literals = cfg.temporal_literals
    if literals is None:
        literals = select_temporal_literals(trajs, graph, cfg.temporal_count, cfg.t_rule)
    c_tau: dict[int, np.ndarray] = {}
    tau = np.array([0.0])
    lag_step = cfg.record_stride * cfg.params.dt
    for lit in literals:
        tau, values = temporal_correlation(trajs, lit, cfg.t_rule, max_lag, lag_step)
        c_tau[lit] = values

    result = CorrelationResult(
        c_d=c_d,
        tau=tau,
        c_tau=c_tau,
        correlation_length=None,
        correlation_time=None,
        diameter=graph.diameter,
        median_phase_duration=median_duration,
        excluded_no_phase=diag["excluded_no_phase"],
        skipped_pairs=diag["skipped_pairs"],
        t_rule=cfg.t_rule,
        temporal_literals=list(literals),
        counts=dict(ensemble.counts),
    )
    result.correlation_length, result.correlation_time = correlation_scales(result)
    for lit, values in result.c_tau.items():
        if not np.isfinite(values).all():
            raise ValueError(f"non-finite temporal correlation for literal {lit}")
        if values[0] != 1.0:
            raise AssertionError(f"C(0) != 1 for literal {lit}")
    return result
