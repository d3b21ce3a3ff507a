"""Low-dimensional flows for the signed threshold-crossing invariant.

An instanton family is a set of deterministic trajectories connecting an
unstable critical point x_b to an attractor x_a, indexed by moduli: one
shift parameter per unstable direction of x_b.  Moduli are realized as
seeding parameters, seed(sigma) = x_b + sum_j r * exp(lambda_j sigma_j) u_j
along the unstable eigendirections u_j, so increasing sigma_j advances
the trajectory (d x / d sigma > 0 on a monotone crossing).

The intersection number pairs one observed coordinate alpha_i and one
observation time t_i per modulus, locates every sigma_0 on the moduli
grid with x^{alpha_i}(t_i, sigma_0) = 1/2 for all i, and sums the sign of
det d x^{alpha_i}(t_i, sigma)/d sigma_j there.  Raw crossing counts may
change with the observation times, but new crossings appear in pairs of
opposite Jacobian sign, so the signed sum is invariant away from the
boundaries of the crossing window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

THRESHOLD = 0.5
REFINE_TOL = 1e-10
TANGENCY_TOL = 1e-8

LOGISTIC_PRODUCT = "LOGISTIC_PRODUCT"
SPIRAL_SINK = "SPIRAL_SINK"
CUSTOM = "CUSTOM"

ATTRACTOR = "attractor"
REPELLER = "repeller"
SADDLE = "saddle"


class TangencyError(RuntimeError):
    """A crossing is tangent to the threshold; the moduli grid needs refinement."""


class ConvergenceError(RuntimeError):
    """A family trajectory failed to reach the attractor within the horizon."""


def numeric_jacobian(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    d = x.size
    jac = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        jac[:, j] = (f((x + e)[None, :])[0] - f((x - e)[None, :])[0]) / (2 * h)
    return jac


def classify_eigenvalues(eigs: np.ndarray) -> str:
    re = eigs.real
    if np.any(np.abs(re) < 1e-9):
        raise ValueError("non-hyperbolic critical point")
    if np.all(re > 0):
        return REPELLER
    if np.all(re < 0):
        return ATTRACTOR
    return SADDLE


@dataclass
class CriticalPoint:
    x: np.ndarray
    kind: str
    eigenvalues: np.ndarray
    #: Columns span the unstable subspace; one column per modulus.
    unstable_dirs: np.ndarray
    #: Expansion rate along each unstable direction (for seeding).
    unstable_rates: np.ndarray

    @property
    def n_unstable(self) -> int:
        return self.unstable_dirs.shape[1]


@dataclass
class ToyFlow:
    """A vector field with listed, classified critical points.

    ``f`` is batched: it maps an (B, D) array of states to (B, D)
    derivatives.  Listed critical points are verified to be zeros of the
    field (sup norm below 1e-10) with classification matching the
    Jacobian eigenvalue signs.
    """

    dim: int
    kind: str
    f: callable
    critical_points: list[CriticalPoint]
    start: CriticalPoint
    end: CriticalPoint

    def __post_init__(self):
        for cp in self.critical_points:
            residual = np.abs(self.f(cp.x[None, :])[0]).max()
            if residual >= 1e-10:
                raise ValueError(f"listed critical point {cp.x} has |F| = {residual:.2e}")
            eigs = np.linalg.eigvals(numeric_jacobian(self.f, cp.x))
            if classify_eigenvalues(eigs) != cp.kind:
                raise ValueError(f"critical point {cp.x}: classification does not match Jacobian")
        if self.end.kind != ATTRACTOR:
            raise ValueError("end point must be an attractor")
        if self.start.kind not in (REPELLER, SADDLE):
            raise ValueError("start point must be a repeller or saddle")


def logistic_product(dim: int = 1) -> ToyFlow:
    """dx_i = x_i (1 - x_i) on [0,1]^dim; every corner is a critical point."""
    if not (1 <= dim <= 3):
        raise ValueError("dimension must be 1 to 3")

    def f(x):
        return x * (1.0 - x)

    points = []
    start = end = None
    for corner in product((0.0, 1.0), repeat=dim):
        x = np.array(corner)
        eigs = 1.0 - 2.0 * x  # diagonal Jacobian
        kind = classify_eigenvalues(eigs.astype(complex))
        unstable = np.nonzero(eigs > 0)[0]
        dirs = np.eye(dim)[:, unstable]
        cp = CriticalPoint(x, kind, eigs.astype(complex), dirs, eigs[unstable])
        points.append(cp)
        if kind == REPELLER:
            start = cp
        if kind == ATTRACTOR:
            end = cp
    return ToyFlow(dim=dim, kind=LOGISTIC_PRODUCT, f=f, critical_points=points, start=start, end=end)


def _newton_zero(f, x0: np.ndarray, steps: int = 60) -> np.ndarray | None:
    x = x0.copy()
    for _ in range(steps):
        fx = f(x[None, :])[0]
        if np.abs(fx).max() < 1e-13:
            return x
        try:
            dx = np.linalg.solve(numeric_jacobian(f, x), -fx)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
    return x if np.abs(f(x[None, :])[0]).max() < 1e-13 else None


def spiral_sink(
    rho: float = 0.2,
    omega: float = 5.0,
    expansion: float = 1.0,
    blend_radius: float = 0.5,
) -> ToyFlow:
    """Planar flow: repeller at the origin, spiral sink at (1, 1).

    The field blends a linear expansion ``expansion * x`` near the origin
    into the explicit spiral matrix A = [[-rho, omega], [-omega, -rho]]
    acting around a = (1, 1).  The blend weight 3s^2 - 2s^3 of
    s = |x|^2 / (2 blend_radius^2), clipped to [0, 1], has zero gradient
    at both critical points, so the Jacobians there are exactly the two
    linear pieces; beyond ``sqrt(2) * blend_radius`` from the origin the
    field is the pure spiral, which keeps the decaying loops around the
    sink circular where they meet the threshold planes.

    A third critical point, a saddle between the two basins, is forced by
    index counting on the plane (repeller + sink + degree 1 at infinity
    exceeds the Euler characteristic); it is located numerically and
    listed.

    The repeller is isotropic, so every direction is an unstable
    eigendirection; the instanton family seeds along the single diagonal
    representative (1,1)/sqrt(2), giving a one-parameter (time-shift)
    moduli space.
    """
    a = np.array([1.0, 1.0])
    mat = np.array([[-rho, omega], [-omega, -rho]])

    def f(x):
        s = np.clip((x * x).sum(axis=-1) / (2.0 * blend_radius**2), 0.0, 1.0)
        w = s * s * (3.0 - 2.0 * s)
        expand = expansion * x
        swirl = (x - a) @ mat.T
        return (1.0 - w)[..., None] * expand + w[..., None] * swirl

    diag = np.array([[1.0], [1.0]]) / math.sqrt(2.0)
    start = CriticalPoint(
        x=np.zeros(2),
        kind=REPELLER,
        eigenvalues=np.array([expansion, expansion], dtype=complex),
        unstable_dirs=diag,
        unstable_rates=np.array([expansion]),
    )
    end = CriticalPoint(
        x=a,
        kind=ATTRACTOR,
        eigenvalues=np.array([-rho + 1j * omega, -rho - 1j * omega]),
        unstable_dirs=np.zeros((2, 0)),
        unstable_rates=np.zeros(0),
    )
    points = [start, end]
    saddle_x = _newton_zero(f, np.array([0.25, -0.2]))
    if saddle_x is not None and np.abs(saddle_x).max() < 2.0 and np.linalg.norm(saddle_x) > 1e-3:
        eigs = np.linalg.eigvals(numeric_jacobian(f, saddle_x))
        if classify_eigenvalues(eigs) == SADDLE:
            unstable = np.nonzero(eigs.real > 0)[0]
            vecs = np.linalg.eig(numeric_jacobian(f, saddle_x))[1]
            points.append(
                CriticalPoint(
                    x=saddle_x,
                    kind=SADDLE,
                    eigenvalues=eigs,
                    unstable_dirs=vecs[:, unstable].real,
                    unstable_rates=eigs[unstable].real,
                )
            )
    return ToyFlow(dim=2, kind=SPIRAL_SINK, f=f, critical_points=points, start=start, end=end)


def _rk4_step(f, x: np.ndarray, dt: float, k1: np.ndarray | None = None) -> np.ndarray:
    if k1 is None:
        k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class InstantonFamily:
    flow: ToyFlow
    axes: list[np.ndarray]  # one sigma axis per modulus
    seeds: np.ndarray  # (G, D) flat over the moduli grid
    times: np.ndarray  # (T,)
    frames: np.ndarray  # (T, G, D)
    r: float
    dt: float

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def values_at(self, t: float, component: int) -> np.ndarray:
        """Grid of x^component(t, sigma), linearly interpolated in t."""
        if t <= self.times[0]:
            frame = self.frames[0]
        elif t >= self.times[-1]:
            frame = self.frames[-1]
        else:
            k = int(np.searchsorted(self.times, t) - 1)
            theta = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
            frame = (1.0 - theta) * self.frames[k] + theta * self.frames[k + 1]
        return frame[:, component].reshape(self.grid_shape)

    def center_index(self) -> int:
        flat = 0
        for n in self.grid_shape:
            flat = flat * n + n // 2
        return flat

    def crossing_times(self, component: int, grid_index: int | None = None) -> np.ndarray:
        """Times where one stored trajectory crosses the 1/2 threshold."""
        g = self.center_index() if grid_index is None else grid_index
        series = self.frames[:, g, component] - THRESHOLD
        out = []
        for k in range(len(series) - 1):
            a, b = series[k], series[k + 1]
            if a == 0.0:
                out.append(self.times[k])
            elif a * b < 0.0:
                out.append(self.times[k] + (self.times[k + 1] - self.times[k]) * (-a) / (b - a))
        return np.array(out)


def _seed_points(flow: ToyFlow, sigmas: np.ndarray, r: float) -> np.ndarray:
    """seed = x_b + sum_j r exp(lambda_j sigma_j) u_j for each sigma row."""
    start = flow.start
    amps = r * np.exp(start.unstable_rates[None, :] * sigmas)  # (B, m)
    if np.any(amps > 0.1):
        raise ValueError("sigma grid too wide: seeds leave the linear neighbourhood of the start point")
    return start.x[None, :] + amps @ start.unstable_dirs.T


def build_instanton_family(
    flow: ToyFlow,
    sigma_span: tuple[float, float] = (-4.0, 4.0),
    count: int = 81,
    dt: float = 0.02,
    r: float = 1e-4,
    horizon: float = 400.0,
    tol: float = 1e-6,
) -> InstantonFamily:
    """Integrate the seeded moduli grid until every trajectory is within
    ``tol`` of the attractor; raises :class:`ConvergenceError` otherwise."""
    m = flow.start.n_unstable
    if m == 0:
        raise ValueError("start point has no unstable direction")
    if count < 3:
        raise ValueError("need at least 3 grid points per modulus")
    axes = [np.linspace(sigma_span[0], sigma_span[1], count) for _ in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    sigmas = np.stack([g.ravel() for g in mesh], axis=1)  # (G, m)
    seeds = _seed_points(flow, sigmas, r)

    x = seeds.copy()
    frames = [x.copy()]
    target = flow.end.x[None, :]
    n_max = int(math.ceil(horizon / dt))
    converged = False
    for _ in range(n_max):
        x = _rk4_step(flow.f, x, dt)
        frames.append(x.copy())
        if np.abs(x - target).max() < tol:
            converged = True
            break
    if not converged:
        worst = float(np.abs(x - target).max())
        raise ConvergenceError(f"family not within {tol} of the attractor by t={horizon} (residual {worst:.2e})")
    times = np.arange(len(frames)) * dt
    return InstantonFamily(
        flow=flow, axes=axes, seeds=seeds, times=times, frames=np.stack(frames), r=r, dt=dt
    )


def _evaluate_points(
    flow: ToyFlow,
    sigmas: np.ndarray,  # (B, m)
    components: np.ndarray,  # (B,)
    times: np.ndarray,  # (B,)
    r: float,
    dt: float,
) -> np.ndarray:
    """x^{component_b}(time_b, sigma_b) by fresh integration of each seed.

    All points advance in lockstep with a shared fixed-step RK4; values at
    off-step times come from cubic Hermite interpolation between the two
    bracketing steps, so the accuracy is O(dt^4) like the integrator.
    """
    b = sigmas.shape[0]
    if b == 0:
        return np.zeros(0)
    x = _seed_points(flow, sigmas, r)
    t_max = float(times.max())
    n_steps = max(1, int(math.ceil(t_max / dt - 1e-12)))
    k_idx = np.minimum((times / dt).astype(int), n_steps - 1)
    theta = times / dt - k_idx

    d = flow.dim
    x0 = np.empty((b, d))
    f0 = np.empty((b, d))
    x1 = np.empty((b, d))
    f1 = np.empty((b, d))
    for k in range(n_steps + 1):
        fk = flow.f(x)
        sel0 = k_idx == k
        if sel0.any():
            x0[sel0] = x[sel0]
            f0[sel0] = fk[sel0]
        sel1 = k_idx == k - 1
        if sel1.any():
            x1[sel1] = x[sel1]
            f1[sel1] = fk[sel1]
        if k == n_steps:
            break
        x = _rk4_step(flow.f, x, dt, k1=fk)

    th = theta[:, None]
    h00 = 2 * th**3 - 3 * th**2 + 1
    h10 = th**3 - 2 * th**2 + th
    h01 = -2 * th**3 + 3 * th**2
    h11 = th**3 - th**2
    states = h00 * x0 + h10 * dt * f0 + h01 * x1 + h11 * dt * f1
    return states[np.arange(b), components]


def _eval_rows(family: InstantonFamily, sigmas: np.ndarray, lits: np.ndarray, times: np.ndarray) -> np.ndarray:
    """g_i(sigma) = x^{lit_i}(t_i, sigma) - 1/2 with per-row observables; (B, m)."""
    b, m = sigmas.shape
    rep_sig = np.repeat(sigmas, m, axis=0)
    vals = _evaluate_points(family.flow, rep_sig, lits.ravel(), times.ravel(), family.r, family.dt)
    return vals.reshape(b, m) - THRESHOLD


def _eval_g(family: InstantonFamily, sigmas: np.ndarray, literals, times) -> np.ndarray:
    """g_i(sigma) = x^{alpha_i}(t_i, sigma) - 1/2 for each sigma row; (B, m)."""
    b = sigmas.shape[0]
    lits = np.tile(np.asarray(literals, dtype=int), (b, 1))
    tts = np.tile(np.asarray(times, dtype=float), (b, 1))
    return _eval_rows(family, sigmas, lits, tts)


def _refine_1d_rows(family, entry_ids, lo, hi, lits, times):
    """Lockstep bisection across brackets of many scan entries at once.

    Returns (entry_ids, sigma0, slopes) for rows whose fresh endpoint
    values confirm the bracket, plus the ids of dropped rows.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    entry_ids = np.asarray(entry_ids, dtype=int)
    lits = np.asarray(lits, dtype=int)
    times = np.asarray(times, dtype=float)
    g_lo = _eval_rows(family, lo[:, None], lits[:, None], times[:, None])[:, 0]
    g_hi = _eval_rows(family, hi[:, None], lits[:, None], times[:, None])[:, 0]
    valid = np.sign(g_lo) * np.sign(g_hi) < 0
    dropped = entry_ids[~valid]
    entry_ids, lo, hi, g_lo = entry_ids[valid], lo[valid], hi[valid], g_lo[valid]
    lits, times = lits[valid], times[valid]
    for _ in range(80):
        if not lo.size or (hi - lo).max() <= REFINE_TOL:
            break
        mid = 0.5 * (lo + hi)
        g_mid = _eval_rows(family, mid[:, None], lits[:, None], times[:, None])[:, 0]
        take_lo = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(take_lo, mid, lo)
        g_lo = np.where(take_lo, g_mid, g_lo)
        hi = np.where(take_lo, hi, mid)
    sigma0 = 0.5 * (lo + hi)
    # central-difference slope at every root in one batch
    spacing = family.axes[0][1] - family.axes[0][0]
    h = spacing / 100.0
    probes = np.concatenate([sigma0 + h, sigma0 - h])
    pl = np.concatenate([lits, lits])
    pt = np.concatenate([times, times])
    g = _eval_rows(family, probes[:, None], pl[:, None], pt[:, None])[:, 0]
    n = sigma0.size
    slopes = (g[:n] - g[n:]) / (2.0 * h)
    return entry_ids, sigma0, slopes, dropped.tolist()


def _refine_2d(family, literals, times, boxes):
    """Recursive quadrant subdivision; keeps sub-boxes whose corners span
    both components' signs.  Runaway branching indicates a tangency."""
    roots = []
    max_active = 64
    active = boxes  # each box: (lo (2,), hi (2,))
    for _ in range(80):
        if not active:
            break
        if len(active) > max_active:
            raise TangencyError("crossing cells branch without limit; refine the moduli grid")
        done = [b for b in active if max(b[1] - b[0]) <= REFINE_TOL]
        roots += [0.5 * (b[0] + b[1]) for b in done]
        active = [b for b in active if max(b[1] - b[0]) > REFINE_TOL]
        if not active:
            break
        # evaluate the full 3x3 stencil of every active box in one batch
        pts = []
        for lo, hi in active:
            xs = np.array([lo[0], 0.5 * (lo[0] + hi[0]), hi[0]])
            ys = np.array([lo[1], 0.5 * (lo[1] + hi[1]), hi[1]])
            for i in range(3):
                for j in range(3):
                    pts.append((xs[i], ys[j]))
        g = _eval_g(family, np.array(pts), literals, times).reshape(len(active), 3, 3, 2)
        nxt = []
        for bi, (lo, hi) in enumerate(active):
            xs = np.array([lo[0], 0.5 * (lo[0] + hi[0]), hi[0]])
            ys = np.array([lo[1], 0.5 * (lo[1] + hi[1]), hi[1]])
            for i in range(2):
                for j in range(2):
                    corners = g[bi, i : i + 2, j : j + 2, :]
                    spans = [
                        (corners[..., c].min() < 0.0) and (corners[..., c].max() > 0.0)
                        for c in range(2)
                    ]
                    if all(spans):
                        nxt.append((np.array([xs[i], ys[j]]), np.array([xs[i + 1], ys[j + 1]])))
        active = nxt
    return roots


def _dedupe(roots: list[np.ndarray], tol: float = 1e-6) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for s in sorted(roots, key=lambda a: tuple(a.tolist())):
        if not any(np.abs(s - other).max() < tol for other in out):
            out.append(s)
    return out


def _jacobian_sign(family, literals, times, sigma0: np.ndarray) -> int:
    m = family.m
    spacing = np.array([axis[1] - axis[0] for axis in family.axes])
    h = spacing / 100.0
    jac = np.empty((m, m))
    probes = []
    for j in range(m):
        e = np.zeros(m)
        e[j] = h[j]
        probes.append(sigma0 + e)
        probes.append(sigma0 - e)
    g = _eval_g(family, np.array(probes), literals, times)  # (2m, m)
    for j in range(m):
        jac[:, j] = (g[2 * j] - g[2 * j + 1]) / (2.0 * h[j])
    det = float(np.linalg.det(jac))
    if abs(det) < TANGENCY_TOL:
        raise TangencyError(
            f"crossing at sigma={sigma0} is tangent to the threshold (|det| = {abs(det):.2e}); refine the grid"
        )
    return 1 if det > 0 else -1


def _scan_raw(family: InstantonFamily, literals, times_list):
    """Crossing sets for many observation-time tuples.

    Returns a list aligned with ``times_list``; each item is either
    (crossings, warnings) with crossings = [(sigma, sign), ...] or a
    TangencyError instance for that entry.
    """
    m = family.m
    if len(literals) != m:
        raise ValueError(f"need exactly {m} observed literals, one per modulus")
    for tt in times_list:
        if len(tt) != m:
            raise ValueError(f"need exactly {m} observation times, one per modulus")

    results: list = [None] * len(times_list)
    if m == 1:
        ax = family.axes[0]
        rows_e, rows_lo, rows_hi, rows_t = [], [], [], []
        for e, tt in enumerate(times_list):
            g = family.values_at(tt[0], literals[0]).ravel() - THRESHOLD
            for i in range(len(ax) - 1):
                if np.sign(g[i]) * np.sign(g[i + 1]) < 0:
                    rows_e.append(e)
                    rows_lo.append(float(ax[i]))
                    rows_hi.append(float(ax[i + 1]))
                    rows_t.append(float(tt[0]))
        if rows_e:
            ids, sigma0, slopes, dropped = _refine_1d_rows(
                family, rows_e, rows_lo, rows_hi, [literals[0]] * len(rows_e), rows_t
            )
        else:
            ids, sigma0, slopes, dropped = np.zeros(0, int), np.zeros(0), np.zeros(0), []
        for e in range(len(times_list)):
            mine = ids == e
            warnings = []
            if e in dropped:
                warnings.append("a grid bracket evaporated under fresh evaluation (near-tangent crossing)")
            tangent = np.abs(slopes[mine]) < TANGENCY_TOL
            if tangent.any():
                results[e] = TangencyError(
                    "crossing tangent to the threshold "
                    f"(|d x/d sigma| = {np.abs(slopes[mine]).min():.2e}); refine the moduli grid"
                )
                continue
            crossings = [
                (np.array([s]), 1 if sl > 0 else -1)
                for s, sl in sorted(zip(sigma0[mine].tolist(), slopes[mine].tolist()))
            ]
            results[e] = (crossings, warnings)
        return results

    if m != 2:
        raise NotImplementedError("crossing search is implemented for 1 or 2 moduli")
    ax0, ax1 = family.axes
    for e, tt in enumerate(times_list):
        g1 = family.values_at(tt[0], literals[0]) - THRESHOLD
        g2 = family.values_at(tt[1], literals[1]) - THRESHOLD
        boxes = []
        for i in range(len(ax0) - 1):
            for j in range(len(ax1) - 1):
                c1 = g1[i : i + 2, j : j + 2]
                c2 = g2[i : i + 2, j : j + 2]
                if c1.min() < 0 < c1.max() and c2.min() < 0 < c2.max():
                    boxes.append((np.array([ax0[i], ax1[j]]), np.array([ax0[i + 1], ax1[j + 1]])))
        try:
            roots = _dedupe(_refine_2d(family, literals, tt, boxes))
            results[e] = ([(s, _jacobian_sign(family, literals, tt, s)) for s in roots], [])
        except TangencyError as exc:
            results[e] = exc
    return results


def find_crossings(family: InstantonFamily, literals, times) -> list[tuple[np.ndarray, int]]:
    """All moduli points where every observed coordinate sits at 1/2,
    with the sign of the moduli-space Jacobian determinant at each."""
    result = _scan_raw(family, literals, [tuple(times)])[0]
    if isinstance(result, TangencyError):
        raise result
    return result[0]


def intersection_number(family: InstantonFamily, literals, times) -> int:
    """Signed count of threshold crossings over the moduli grid."""
    return sum(sign for _, sign in find_crossings(family, literals, times))


def suggest_scan_times(family: InstantonFamily, literal: int, n_points: int = 20, pad: float = 0.15) -> np.ndarray:
    """Observation times safely inside the crossing window.

    For time-shift moduli each reference-orbit crossing s_c is visible at
    observation time t iff its moduli location s_c - t lies inside the
    sigma grid.  Crossing the window boundary removes crossings one at a
    time, passing through even-count zones where the signed sum is not
    defined by the finite family alone; this helper samples only the
    interiors of odd-count zones, padded away from the zone edges.  For
    multi-moduli families the rule is applied along the first axis, which
    is exact for coordinate-decoupled products.
    """
    center_axis = family.axes[0]
    center_idx = tuple(int(np.argmin(np.abs(ax))) for ax in family.axes)
    flat = 0
    for idx, size in zip(center_idx, family.grid_shape):
        flat = flat * size + idx
    s_c = family.crossing_times(literal, grid_index=flat)
    if s_c.size == 0:
        raise ValueError("the reference trajectory never crosses the threshold")
    ax = center_axis
    shift = float(ax[center_idx[0]])
    s_c = s_c - shift  # crossing times of the sigma = 0 trajectory
    bounds = sorted(set((s_c - ax[-1]).tolist() + (s_c - ax[0]).tolist()))
    zones = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        t_mid = 0.5 * (lo + hi)
        count = int(np.sum((s_c - ax[-1] < t_mid) & (t_mid < s_c - ax[0])))
        if count % 2 == 1 and t_mid > 0:
            zones.append((lo, hi, count))
    if not zones:
        raise ValueError("no odd-count observation zones inside the moduli window")
    times: list[float] = []
    per_zone = max(1, n_points // len(zones))
    for lo, hi, _ in zones:
        width = hi - lo
        a, b = lo + pad * width, hi - pad * width
        k = per_zone if len(times) + per_zone <= n_points else n_points - len(times)
        if k <= 0:
            break
        times.extend(np.linspace(a, b, k).tolist())
    while len(times) < n_points:
        lo, hi, _ = zones[-1]
        times.append(0.5 * (lo + hi))
    return np.array(sorted(times)[:n_points])


@dataclass
class ScanEntry:
    times: tuple
    crossings: list[tuple[np.ndarray, int]]
    signed_sum: int
    warnings: list[str] = field(default_factory=list)


@dataclass
class InvarianceReport:
    entries: list[ScanEntry]
    errors: list[tuple[tuple, str]]

    @property
    def value_set(self) -> set[int]:
        return {e.signed_sum for e in self.entries}

    @property
    def raw_count_set(self) -> set[int]:
        return {len(e.crossings) for e in self.entries}

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            ts = " ".join(f"{t:.6g}" for t in e.times)
            lines.append(f"times {ts} : crossings={len(e.crossings)} signed_sum={e.signed_sum}")
            for sigma, sign in e.crossings:
                ss = " ".join(f"{s:.10f}" for s in sigma)
                lines.append(f"  sigma {ss} sign {sign:+d}")
            for w in e.warnings:
                lines.append(f"  warning: {w}")
        for times, msg in self.errors:
            ts = " ".join(f"{t:.6g}" for t in times)
            lines.append(f"times {ts} : tangency error: {msg}")
        lines.append(f"value_set {sorted(self.value_set)}")
        lines.append(f"raw_crossing_counts {sorted(self.raw_count_set)}")
        return "\n".join(lines) + "\n"


def invariance_scan(family: InstantonFamily, literals, time_grid) -> InvarianceReport:
    """Evaluate the signed crossing count over observation-time tuples.

    Tangency errors are collected into the report rather than raised; a
    tuple with no crossings at all is reported as 0 with a window-boundary
    warning (the trajectories are already past, or not yet at, the
    threshold everywhere on the grid).
    """
    tuples = [tuple(float(t) for t in (times if np.iterable(times) else (times,))) for times in time_grid]
    entries: list[ScanEntry] = []
    errors: list[tuple[tuple, str]] = []
    for tt, result in zip(tuples, _scan_raw(family, literals, tuples)):
        if isinstance(result, TangencyError):
            errors.append((tt, str(result)))
            continue
        crossings, warnings = result
        if not crossings:
            warnings = warnings + ["no crossings found: observation time lies outside the crossing window"]
        entries.append(ScanEntry(times=tt, crossings=crossings, signed_sum=sum(s for _, s in crossings), warnings=warnings))
    return InvarianceReport(entries=entries, errors=errors)
