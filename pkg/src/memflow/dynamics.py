"""Continuous-time dynamics of a clause system with per-clause memories.

State: a voltage v_n in [-1, 1] per variable (logical 0 at -1, logical 1
at +1; displayed voltage u = (v+1)/2 so the logical threshold 1/2 sits at
v = 0), a fast activation memory x_s in [0, 1] and a slow rigidity memory
x_l in [1, x_l_max] per clause.

Each clause m has mismatch C_m(v) = 1/2 * min_i (1 - q_i v_i) over its
literals, zero exactly when some literal is fully satisfied.  Voltages
feel two forces per clause:

  gradient  G_{n,m} = 1/2 * q_{n,m} * min_{i != n} (1 - q_i v_i)
  rigidity  R_{n,m} = 1/2 * (q_{n,m} - v_n)  if n attains the clause
            minimum (ties included), else 0

combined as  dv_n = sum_m [ x_l x_s G + (1 + zeta x_l)(1 - x_s) R ],
with memory evolution  dx_s = beta (x_s + eps)(C_m - gamma)  and
dx_l = alpha C_m - alpha delta.  The voltage derivative is the field of
the box-constrained dynamics: components pushing outward at a clamped
rail are projected to zero, so fully satisfied vertex states are exact
fixed points of the voltage flow.

Unit-fixed variables are pinned rails (voltage sources): held at +-1,
no derivative, no noise.

Integration is Euler-Maruyama with diagonal additive noise of intensity
theta on the free voltages (forward Euler when theta = 0); memory
variables are noise-free and clamped to their bounds after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .cnf import ClauseSystem

#: Sup-norm tolerance on the projected voltage derivative below which a
#: state with an unsatisfied clause is flagged as a non-solution fixed point.
FIXED_POINT_TOL = 1e-6

SOLVED = "solved"
MAX_TIME = "max_time"
FIXED_POINT_NON_SOLUTION = "fixed_point_non_solution"


class FlowError(RuntimeError):
    """Raised when the flow evaluates to a non-finite derivative."""


@dataclass(frozen=True)
class FlowParams:
    """Rates, thresholds and integration settings of the flow.

    The numeric defaults are tuning defaults, recorded here as config.
    ``x_l_max=None`` resolves to 1e4 * (number of clauses).
    """

    alpha: float = 5.0
    beta: float = 20.0
    gamma: float = 0.25
    delta: float = 0.05
    epsilon: float = 1e-3
    zeta: float = 0.1
    theta: float = 0.0
    dt: float = 0.05
    x_l_max: float | None = None
    v_clamp: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon", "zeta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 < self.gamma < 1 and 0 < self.delta < 1):
            raise ValueError("gamma and delta must lie in (0, 1)")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.v_clamp <= 0:
            raise ValueError("v_clamp must be positive")
        if self.x_l_max is not None and self.x_l_max < 1:
            raise ValueError("x_l_max must be at least 1")

    def slow_memory_cap(self, num_clauses: int) -> float:
        return self.x_l_max if self.x_l_max is not None else 1e4 * num_clauses


@dataclass
class SystemState:
    v: np.ndarray
    x_s: np.ndarray
    x_l: np.ndarray
    t: float = 0.0

    def copy(self) -> "SystemState":
        return SystemState(self.v.copy(), self.x_s.copy(), self.x_l.copy(), self.t)


class CrossingEvent(NamedTuple):
    time: float
    var: int
    direction: int  # +1 toward logical 1, -1 toward logical 0
    slope_sign: int


@dataclass
class InstantonPhase:
    t_start: float
    t_end: float
    crossing_count: int

    @property
    def mid_time(self) -> float:
        return 0.5 * (self.t_start + self.t_end)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass
class Trajectory:
    times: np.ndarray  # (T,)
    v: np.ndarray  # (T, N) voltage snapshots
    crossings: list[CrossingEvent]
    termination: str
    assignment: np.ndarray | None
    final_state: SystemState

    def u(self) -> np.ndarray:
        """Snapshots in display coordinates u = (v+1)/2."""
        return 0.5 * (self.v + 1.0)


class _Compiled:
    """Padded clause arrays shared by all flow evaluations of one system."""

    def __init__(self, cs: ClauseSystem):
        m = len(cs.clauses)
        n = cs.num_vars
        if m == 0:
            raise ValueError("clause system has no clauses")
        width = max(len(c) for c in cs.clauses)
        if any(len(c) < 2 for c in cs.clauses):
            raise ValueError("width-1 clauses must be stored as units")
        var = np.zeros((m, width), dtype=np.int64)
        sign = np.zeros((m, width), dtype=np.float64)
        mask = np.zeros((m, width), dtype=bool)
        for i, clause in enumerate(cs.clauses):
            for j, (v, pol) in enumerate(clause):
                var[i, j] = v
                sign[i, j] = float(pol)
                mask[i, j] = True
        self.var = var
        self.sign = sign
        self.mask = mask
        self.pos = sign > 0
        self.neg = sign < 0
        self.num_vars = n
        self.num_clauses = m
        free = np.ones(n, dtype=bool)
        unit_idx = np.array(sorted(cs.units), dtype=np.int64)
        unit_vals = np.array([cs.units[v] for v in sorted(cs.units)], dtype=bool)
        free[unit_idx] = False
        self.free = free
        self.unit_idx = unit_idx
        self.unit_vals = unit_vals
        self.pinned_v = np.zeros(n, dtype=np.float64)
        self.pinned_v[unit_idx] = np.where(unit_vals, 1.0, -1.0)


def _compiled(cs: ClauseSystem) -> _Compiled:
    comp = getattr(cs, "_memflow_compiled", None)
    if comp is None:
        comp = _Compiled(cs)
        cs._memflow_compiled = comp  # type: ignore[attr-defined]
    return comp


def clause_mismatch(v: np.ndarray, cs: ClauseSystem) -> np.ndarray:
    """Per-clause mismatch C_m(v) in [0, 1]."""
    comp = _compiled(cs)
    vals = 1.0 - comp.sign * v[comp.var]
    vals[~comp.mask] = np.inf
    return 0.5 * vals.min(axis=1)


def _flow(v, x_s, x_l, comp: _Compiled, p: FlowParams):
    vals = 1.0 - comp.sign * v[comp.var]
    vals[~comp.mask] = np.inf
    two_smallest = np.partition(vals, 1, axis=1)
    m1 = two_smallest[:, 0]
    m2 = two_smallest[:, 1]
    amin = np.argmin(vals, axis=1)
    mismatch = 0.5 * m1

    g = (0.5 * m1)[:, None] * comp.sign
    rows = np.arange(comp.num_clauses)
    g[rows, amin] = 0.5 * comp.sign[rows, amin] * m2
    r = np.where(vals == m1[:, None], 0.5 * (comp.sign - v[comp.var]), 0.0)

    w_g = (x_l * x_s)[:, None]
    w_r = ((1.0 + p.zeta * x_l) * (1.0 - x_s))[:, None]
    contrib = w_g * g + w_r * r
    dv = np.bincount(comp.var.ravel(), weights=contrib.ravel(), minlength=comp.num_vars)
    dv[~comp.free] = 0.0
    # project outward pushes at the rails: field of the clamped dynamics
    dv[(v >= p.v_clamp) & (dv > 0.0)] = 0.0
    dv[(v <= -p.v_clamp) & (dv < 0.0)] = 0.0

    dxs = p.beta * (x_s + p.epsilon) * (mismatch - p.gamma)
    dxl = p.alpha * mismatch - p.alpha * p.delta
    return dv, dxs, dxl


def flow_field(state: SystemState, cs: ClauseSystem, p: FlowParams):
    """Evaluate (dv, dx_s, dx_l) at the given state."""
    comp = _compiled(cs)
    if state.v.shape != (comp.num_vars,) or state.x_s.shape != (comp.num_clauses,):
        raise ValueError("state dimensions do not match the clause system")
    return _flow(state.v, state.x_s, state.x_l, comp, p)


def _advance(v, x_s, x_l, comp: _Compiled, p: FlowParams, cap: float, rng):
    dv, dxs, dxl = _flow(v, x_s, x_l, comp, p)
    v2 = v + p.dt * dv
    if p.theta > 0.0:
        if rng is None:
            raise ValueError("theta > 0 requires an rng")
        noise = math.sqrt(2.0 * p.theta * p.dt) * rng.standard_normal(comp.num_vars)
        v2 = v2 + np.where(comp.free, noise, 0.0)
    np.clip(v2, -p.v_clamp, p.v_clamp, out=v2)
    xs2 = np.clip(x_s + p.dt * dxs, 0.0, 1.0)
    xl2 = np.clip(x_l + p.dt * dxl, 1.0, cap)
    if not (np.isfinite(v2).all() and np.isfinite(xs2).all() and np.isfinite(xl2).all()):
        raise FlowError("non-finite state update: derivative blow-up or poisoned state")
    return v2, xs2, xl2, dv


def step(state: SystemState, cs: ClauseSystem, p: FlowParams, rng=None) -> SystemState:
    """One Euler-Maruyama step; returns a new state, bounds enforced."""
    comp = _compiled(cs)
    cap = p.slow_memory_cap(comp.num_clauses)
    v2, xs2, xl2, _ = _advance(state.v, state.x_s, state.x_l, comp, p, cap, rng)
    return SystemState(v2, xs2, xl2, state.t + p.dt)


def initial_state(cs: ClauseSystem, p: FlowParams, rng) -> SystemState:
    """Uniform random voltages in (-1, 1), x_s = 1/2, x_l = 1, pins applied."""
    comp = _compiled(cs)
    v = rng.uniform(-1.0, 1.0, comp.num_vars)
    v[comp.unit_idx] = comp.pinned_v[comp.unit_idx]
    return SystemState(v, np.full(comp.num_clauses, 0.5), np.ones(comp.num_clauses), 0.0)


def _rounded_bits(v: np.ndarray, comp: _Compiled) -> np.ndarray:
    bits = v >= 0.0  # v = 0 rounds to logical 1
    if comp.unit_idx.size:
        bits[comp.unit_idx] = comp.unit_vals
    return bits


def _satisfies(bits: np.ndarray, comp: _Compiled) -> bool:
    at = bits[comp.var]
    sat = (comp.pos & at) | (comp.neg & ~at)
    return bool(sat.any(axis=1).all())


def check_solution(state: SystemState, cs: ClauseSystem) -> np.ndarray | None:
    """Round voltages, merge units, return the assignment iff it satisfies
    every clause.  Exact Boolean evaluation, no tolerance."""
    comp = _compiled(cs)
    bits = _rounded_bits(state.v, comp)
    if _satisfies(bits, comp):
        return bits
    return None


def integrate(
    initial: SystemState,
    cs: ClauseSystem,
    p: FlowParams,
    max_time: float,
    record_stride: int = 1,
    rng=None,
) -> Trajectory:
    """Integrate until solved, ``max_time`` is reached, or the voltage flow
    stalls below :data:`FIXED_POINT_TOL` with an unsatisfied clause.

    Snapshots are decimated by ``record_stride``; threshold crossings of
    every free voltage are recorded at every step with linear
    interpolation of the event time.
    """
    if max_time < 0:
        raise ValueError("max_time must be non-negative")
    if record_stride < 1:
        raise ValueError("record_stride must be at least 1")
    comp = _compiled(cs)
    cap = p.slow_memory_cap(comp.num_clauses)

    v = initial.v.copy()
    x_s = initial.x_s.copy()
    x_l = initial.x_l.copy()
    times = [initial.t]
    snaps = [v.copy()]
    crossings: list[CrossingEvent] = []
    termination = MAX_TIME
    assignment = None

    max_steps = int(math.floor(max_time / p.dt + 1e-9))
    t = initial.t
    free = comp.free
    for k in range(1, max_steps + 1):
        v_old = v
        v, x_s, x_l, dv = _advance(v, x_s, x_l, comp, p, cap, rng)
        t_new = initial.t + k * p.dt

        flipped = np.nonzero(((v_old >= 0.0) != (v >= 0.0)) & free)[0]
        if flipped.size:
            batch = []
            for var in flipped.tolist():
                a, b = v_old[var], v[var]
                t_ev = t + p.dt * (0.0 - a) / (b - a)
                direction = 1 if b >= 0.0 else -1
                slope = 1 if b > a else -1
                batch.append(CrossingEvent(t_ev, var, direction, slope))
            batch.sort(key=lambda e: (e.time, e.var))
            crossings.extend(batch)
        t = t_new

        recorded = k % record_stride == 0
        if recorded:
            times.append(t)
            snaps.append(v.copy())

        bits = _rounded_bits(v, comp)
        if _satisfies(bits, comp):
            termination = SOLVED
            assignment = bits
            if not recorded:
                times.append(t)
                snaps.append(v.copy())
            break
        if np.abs(dv[free]).max(initial=0.0) < FIXED_POINT_TOL:
            termination = FIXED_POINT_NON_SOLUTION
            if not recorded:
                times.append(t)
                snaps.append(v.copy())
            break
    else:
        if max_steps > 0 and max_steps % record_stride != 0:
            times.append(t)
            snaps.append(v.copy())

    final = SystemState(v, x_s, x_l, t)
    return Trajectory(
        times=np.array(times),
        v=np.vstack(snaps),
        crossings=crossings,
        termination=termination,
        assignment=assignment,
        final_state=final,
    )


def detect_instanton_phase(traj: Trajectory) -> InstantonPhase | None:
    """Burst phase spanning the first to last threshold crossing."""
    if not traj.crossings:
        return None
    return InstantonPhase(
        t_start=traj.crossings[0].time,
        t_end=traj.crossings[-1].time,
        crossing_count=len(traj.crossings),
    )
