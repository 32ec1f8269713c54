"""Pole selection: Tsuji-point maximization and a minimax baseline.

Tsuji points maximize the product of pairwise pseudohyperbolic distances of
``q`` boundary points.  The search runs in boundary parameters by coordinate
ascent, each coordinate maximized by golden-section search between its
neighbours.  The minimax baseline minimizes the worst-case Blaschke product
over the region boundary directly with a multi-start simplex search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .conformal import interval_slit_point, tsuji_init, tsuji_init_angles
from .errors import ArityError, ConvergenceError, DomainError
from .hyperbolic import PoleRegion, log_blaschke, log_pair_product, worst_case_product

METHODS = ("tsuji", "tsuji_init_only", "minimax", "manual")
DISTINCT_FLOOR = 1e-8
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PoleSet:
    """Validated set of distinct basis poles inside a region."""

    poles: tuple
    region: PoleRegion
    method: str = "manual"
    conj_closed: bool = False

    def __post_init__(self):
        poles = tuple(complex(p) for p in np.ravel(np.asarray(self.poles, dtype=complex)))
        object.__setattr__(self, "poles", poles)
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not poles:
            raise ArityError("a pole set needs at least one pole")
        arr = np.asarray(poles)
        if np.any(np.abs(arr) >= 1.0):
            raise DomainError("poles must lie strictly inside the unit disk")
        if not np.all(self.region.contains(arr, tol=1e-9)):
            raise DomainError("poles must lie in the closed pole region")
        if arr.size > 1:
            j, k = np.triu_indices(arr.size, 1)
            if np.min(np.abs(arr[j] - arr[k])) <= DISTINCT_FLOOR:
                raise DomainError("poles must be pairwise distinct")
        if self.conj_closed and not _is_conj_closed(arr):
            raise DomainError("pole set flagged conjugate-closed but is not")

    @property
    def q(self) -> int:
        return len(self.poles)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.poles, dtype=complex)

    def to_dict(self) -> dict:
        return {
            "poles": [[p.real, p.imag] for p in self.poles],
            "region": self.region.to_dict(),
            "method": self.method,
            "conj_closed": self.conj_closed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PoleSet":
        poles = [complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)
                 for p in data["poles"]]
        return cls(tuple(poles), PoleRegion.from_dict(data["region"]),
                   data.get("method", "manual"), bool(data.get("conj_closed", False)))


@dataclass(frozen=True)
class SelectReport:
    objective: float
    worst_case: float
    iterations: int
    restarts_used: int

    def to_dict(self) -> dict:
        return {"objective": self.objective, "worst_case": self.worst_case,
                "iterations": self.iterations, "restarts_used": self.restarts_used}


@dataclass(frozen=True)
class SelectOptions:
    """Optimizer settings shared by both selectors."""

    max_sweeps: int = 500
    sweep_tol: float = 1e-12
    line_tol: float = 1e-11
    restarts: int = 8
    grid_density: int = 512
    perturbation: float = 0.05
    seed: int = 0
    maxiter: int = 0  # 0 selects 200 per free parameter


def _is_conj_closed(arr: np.ndarray, tol: float = 1e-12) -> bool:
    remaining = list(arr)
    while remaining:
        z = remaining.pop()
        if abs(z.imag) <= tol:
            continue
        dists = [abs(w - z.conjugate()) for w in remaining]
        if not dists or min(dists) > tol:
            return False
        remaining.pop(int(np.argmin(dists)))
    return True


# -- helpers ------------------------------------------------------------------------------


def _boundary_map(region: PoleRegion):
    if region.kind == "interval":
        return lambda nu: np.asarray(interval_slit_point(nu, region), dtype=complex)
    return region.boundary_point


def _canonical_order(poles: np.ndarray) -> np.ndarray:
    ang = np.mod(np.angle(poles), 2.0 * math.pi)
    ang = np.where(np.abs(ang - 2.0 * math.pi) < 1e-15, 0.0, ang)
    idx = np.lexsort((np.abs(poles), np.round(ang, 12)))
    return poles[idx]


def _nudge_distinct(poles: np.ndarray, region: PoleRegion) -> np.ndarray:
    """Push near-coincident poles apart radially toward the region interior."""
    poles = poles.copy()
    if region.kind == "interval":
        center = 0.5 * (region.a + region.b)
    elif region.kind == "disk":
        center = 0.0
    else:
        center = complex(np.mean(region.points))
    for _ in range(poles.size):
        changed = False
        for j in range(poles.size):
            for k in range(j + 1, poles.size):
                if abs(poles[j] - poles[k]) <= DISTINCT_FLOOR:
                    d = center - poles[k]
                    step = 10.0 * DISTINCT_FLOOR
                    poles[k] = poles[k] + (step * d / abs(d) if abs(d) > step else step)
                    changed = True
        if not changed:
            break
    return poles


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` including both endpoints."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for x in (lo, hi):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


# -- Tsuji points -------------------------------------------------------------------------


def tsuji_ascent(region: PoleRegion, q: int, opts: SelectOptions = SelectOptions()):
    """Coordinate ascent on boundary parameters.

    Returns ``(nu, log_objective_history)`` where ``nu`` are the optimized
    parameters in increasing order.
    """
    fmap = _boundary_map(region)
    span = region.param_span
    if region.kind == "boundary":
        nu = np.linspace(0.0, span, q, endpoint=False)
    else:
        nu = np.sort(tsuji_init_angles(region, q))
    pts = np.asarray(fmap(nu), dtype=complex)
    history = [log_pair_product(pts)]

    def coord_obj(k):
        others = np.delete(pts, k)

        def f(t):
            return float(log_blaschke(fmap(t), others))
        return f

    for _ in range(opts.max_sweeps):
        for k in range(q):
            if region.cyclic:
                lo = nu[k - 1] if k > 0 else nu[-1] - span
                hi = nu[k + 1] if k < q - 1 else nu[0] + span
            else:
                lo = nu[k - 1] if k > 0 else 0.0
                hi = nu[k + 1] if k < q - 1 else span
            f = coord_obj(k)
            current = f(nu[k])
            t, ft = _golden_max(f, lo, hi, opts.line_tol)
            if ft > current:
                t_store = t
                if region.cyclic:
                    t_store = float(np.mod(t, span))
                nu[k] = t_store
                pts[k] = complex(fmap(t_store))
        if region.cyclic:
            order = np.argsort(nu)
            nu, pts = nu[order], pts[order]
        history.append(log_pair_product(pts))
        if history[-1] - history[-2] < opts.sweep_tol:
            return nu, history
    raise ConvergenceError(f"Tsuji ascent did not converge in {opts.max_sweeps} sweeps")


def _finalize(region, poles, method, objective_log, iterations, restarts, grid_density):
    poles = _nudge_distinct(np.asarray(poles, dtype=complex), region)
    if region.kind == "interval":
        poles = poles.real.astype(complex)
    q = poles.size
    if region.kind == "disk" and method == "tsuji":
        # rotational symmetry: put the smallest argument at zero
        ang = np.mod(np.angle(poles), 2.0 * math.pi)
        poles = poles * np.exp(-1j * np.min(ang))
    tiny = np.abs(poles.imag) <= 1e-15 * np.maximum(np.abs(poles), 1e-300)
    poles = np.where(tiny, poles.real + 0j, poles)
    poles = _canonical_order(poles)
    pset = PoleSet(tuple(poles), region, method)
    worst, _ = worst_case_product(region, poles, grid_density=max(grid_density, 64))
    obj = float(np.exp(objective_log)) if q > 1 else 1.0
    return pset, SelectReport(min(obj, np.nextafter(1.0, 0.0)), worst, iterations, restarts)


def tsuji_points(region: PoleRegion, q: int, opts: SelectOptions = SelectOptions()):
    """Tsuji points of ``region``: ``q`` boundary points maximizing the pair product.

    Parameters
    ----------
    region : PoleRegion
    q : int
        Number of points, at least two.
    opts : SelectOptions

    Returns
    -------
    (PoleSet, SelectReport)
    """
    if q < 2:
        raise ArityError("Tsuji points need q >= 2")
    return _tsuji_cached(region, int(q), opts)


@lru_cache(maxsize=256)
def _tsuji_cached(region, q, opts):
    nu, history = tsuji_ascent(region, q, opts)
    pts = np.asarray(_boundary_map(region)(nu), dtype=complex)
    return _finalize(region, pts, "tsuji", history[-1], len(history) - 1, 1, opts.grid_density)


def tsuji_init_poles(region: PoleRegion, q: int, opts: SelectOptions = SelectOptions()):
    """Conformal seed configuration without optimization."""
    pts = tsuji_init(region, q)
    log_obj = log_pair_product(pts) if q > 1 else 0.0
    return _finalize(region, pts, "tsuji_init_only", log_obj, 0, 0, opts.grid_density)


# -- minimax baseline ---------------------------------------------------------------------


def _fast_worst_log(region: PoleRegion, grid_pts: np.ndarray, h: float, poles) -> float:
    """Grid maximum of the log product with parabolic peak interpolation."""
    vals = log_blaschke(grid_pts, poles)
    i = int(np.argmax(vals))
    n = vals.size
    if region.cyclic:
        left, right = vals[(i - 1) % n], vals[(i + 1) % n]
    elif 0 < i < n - 1:
        left, right = vals[i - 1], vals[i + 1]
    else:
        return float(vals[i])
    denom = left - 2.0 * vals[i] + right
    if not np.isfinite(denom) or denom >= 0:
        return float(vals[i])
    delta = 0.5 * (left - right) / denom
    return float(vals[i] - 0.25 * (left - right) * delta)


def _unpack(x: np.ndarray, region: PoleRegion) -> np.ndarray:
    # smooth surjections onto the closed region avoid the flat spots clipping creates
    if region.kind == "interval":
        mid, half = 0.5 * (region.a + region.b), 0.5 * (region.b - region.a)
        return (mid + half * np.cos(x)).astype(complex)
    w = x[0::2] + 1j * x[1::2]
    if region.kind == "disk":
        r = np.abs(w)
        scale = np.where(r > 1e-300, np.tanh(r) / np.maximum(r, 1e-300), 1.0)
        return region.radius * w * scale
    return region.project(w)


def _pack(poles: np.ndarray, region: PoleRegion) -> np.ndarray:
    poles = np.asarray(poles, dtype=complex)
    if region.kind == "interval":
        mid, half = 0.5 * (region.a + region.b), 0.5 * (region.b - region.a)
        return np.arccos(np.clip((poles.real - mid) / half, -1.0, 1.0))
    if region.kind == "disk":
        r = np.minimum(np.abs(poles) / region.radius, 0.995)
        w = np.where(r > 0, np.arctanh(r) * np.exp(1j * np.angle(poles)), 0.0)
    else:
        w = poles
    out = np.empty(2 * poles.size)
    out[0::2], out[1::2] = w.real, w.imag
    return out


def minimax_poles(region: PoleRegion, q: int, opts: SelectOptions = SelectOptions()):
    """Poles minimizing the worst-case Blaschke product over the region boundary.

    Multi-start Nelder-Mead over a smooth parameterization of the closed
    region (boundary-sample regions use projection instead).  During the
    search the inner maximum uses a fixed grid with parabolic interpolation;
    the reported ``worst_case`` is recomputed with the refined
    :func:`worst_case_product`.
    """
    if q < 1:
        raise ArityError("minimax needs q >= 1")
    return _minimax_cached(region, int(q), opts)


@lru_cache(maxsize=256)
def _minimax_cached(region, q, opts):
    span = region.param_span
    if region.cyclic:
        ts = np.linspace(0.0, span, opts.grid_density, endpoint=False)
    else:
        ts = np.linspace(0.0, span, opts.grid_density)
    grid_pts = region.boundary_point(ts)
    h = ts[1] - ts[0]

    def objective(x):
        return _fast_worst_log(region, grid_pts, h, _unpack(x, region))

    if region.kind == "boundary":
        seed = region.boundary_point(np.linspace(0.0, span, q, endpoint=False))
    else:
        seed = tsuji_init(region, q)
    x_seed = _pack(seed, region)
    if region.kind == "interval":
        # pull endpoint seeds off the parameter extremes where cos is flat
        x_seed = 0.98 * x_seed + 0.01 * math.pi
    rng = np.random.default_rng(opts.seed)

    best_x, best_f, iters, used = None, np.inf, 0, 0
    for r in range(max(opts.restarts, 1)):
        x = x_seed.copy()
        if r > 0:
            x = x + opts.perturbation * rng.standard_normal(x.size)
        # chained runs re-expand the simplex, which helps on the nonsmooth max
        prev = objective(x)
        maxiter = opts.maxiter or 200 * x.size
        for _ in range(10):
            res = minimize(objective, x, method="Nelder-Mead",
                           options={"xatol": 1e-9, "fatol": 1e-11, "maxiter": maxiter,
                                    "adaptive": True})
            iters += int(res.nit)
            x = res.x
            if res.fun > prev - 1e-7:
                break
            # a restart crawling well above the incumbent will not overtake it
            if res.fun > best_f + 1e-3 and res.fun > prev - 1e-3:
                break
            prev = res.fun
        used += 1
        if np.isfinite(res.fun) and res.fun < best_f:
            best_f, best_x = float(res.fun), res.x
    if best_x is None:
        raise ConvergenceError("minimax search produced no finite objective")
    poles = _unpack(best_x, region)
    log_obj = log_pair_product(poles) if q > 1 else 0.0
    return _finalize(region, poles, "minimax", log_obj, iters, used, opts.grid_density)


# -- derived quantities -------------------------------------------------------------------


def worst_case_rate(poleset: PoleSet, grid_density: int = 512) -> float:
    """Per-basis decay factor ``worst_case_product ** (1 / q)``."""
    if not isinstance(poleset, PoleSet):
        raise DomainError("expected a PoleSet")
    worst, _ = worst_case_product(poleset.region, poleset.array, grid_density=grid_density)
    return float(worst ** (1.0 / poleset.q))


def enforce_conjugate_closure(poleset: PoleSet, snap_tol: float = 1e-9) -> PoleSet:
    """Complete a pole set under complex conjugation.

    Existing near-conjugate pairs are snapped to exact conjugates; unmatched
    complex poles gain their conjugate.  Real poles are left alone.
    """
    poles = list(poleset.poles)
    used = [False] * len(poles)
    out: list[complex] = []
    for i, z in enumerate(poles):
        if used[i]:
            continue
        used[i] = True
        if z.imag == 0.0:
            out.append(z)
            continue
        best, best_d = None, snap_tol
        for j in range(i + 1, len(poles)):
            if not used[j]:
                d = abs(poles[j] - z.conjugate())
                if d <= best_d:
                    best, best_d = j, d
        if best is None and abs(z.imag) <= snap_tol:
            out.append(complex(z.real, 0.0))
            continue
        if best is not None:
            used[best] = True
        out.extend([z, z.conjugate()])
    return PoleSet(tuple(out), poleset.region, poleset.method, conj_closed=True)
