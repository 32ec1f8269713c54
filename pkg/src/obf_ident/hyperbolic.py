"""Pseudohyperbolic geometry of the unit disk.

The metric ``[z, mu]_h = |(z - mu) / (1 - conj(mu) z)|``, Blaschke-type
products built from it, worst-case products over the boundary of a pole
region and the analytic hyperbolic Chebyshev constants of disks and real
intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ArityError, DomainError, UnsupportedRegion

DEFAULT_MARGIN = 1e-6


def _as_complex_array(values) -> np.ndarray:
    return np.asarray(values, dtype=complex)


def _check_inside(*arrays: np.ndarray) -> None:
    for arr in arrays:
        if arr.size and not np.all(np.abs(arr) < 1.0):
            raise DomainError("points must lie strictly inside the unit disk")


@dataclass(frozen=True)
class PoleRegion:
    """A-priori pole region inside the open unit disk.

    Use the :meth:`disk`, :meth:`interval` and :meth:`boundary` constructors.
    ``margin`` is the guaranteed distance between the closed region and the
    unit circle.
    """

    kind: str
    radius: float = 0.0
    a: float = 0.0
    b: float = 0.0
    points: tuple = field(default=())
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if self.margin <= 0:
            raise DomainError("margin must be positive")
        limit = 1.0 - self.margin
        if self.kind == "disk":
            if not 0.0 < self.radius < 1.0:
                raise DomainError(f"disk radius must be in (0, 1), got {self.radius}")
            if self.radius > limit:
                raise DomainError("disk closer to the unit circle than the margin allows")
        elif self.kind == "interval":
            if not -1.0 < self.a < self.b < 1.0:
                raise DomainError(f"interval must satisfy -1 < a < b < 1, got [{self.a}, {self.b}]")
            if max(abs(self.a), abs(self.b)) > limit:
                raise DomainError("interval closer to the unit circle than the margin allows")
        elif self.kind == "boundary":
            pts = tuple(complex(p) for p in self.points)
            if len(pts) < 3:
                raise DomainError("boundary regions need at least three points")
            if max(abs(p) for p in pts) > limit:
                raise DomainError("boundary points must have modulus below 1 - margin")
            object.__setattr__(self, "points", pts)
        else:
            raise DomainError(f"unknown region kind {self.kind!r}")

    @classmethod
    def disk(cls, radius: float, margin: float = DEFAULT_MARGIN) -> "PoleRegion":
        return cls("disk", radius=float(radius), margin=margin)

    @classmethod
    def interval(cls, a: float, b: float, margin: float = DEFAULT_MARGIN) -> "PoleRegion":
        return cls("interval", a=float(a), b=float(b), margin=margin)

    @classmethod
    def boundary(cls, points: Sequence[complex], margin: float = DEFAULT_MARGIN) -> "PoleRegion":
        return cls("boundary", points=tuple(complex(p) for p in points), margin=margin)

    # -- boundary parameterization -------------------------------------------------

    @property
    def cyclic(self) -> bool:
        """Whether the boundary parameter wraps around."""
        return self.kind != "interval"

    @property
    def param_span(self) -> float:
        if self.kind == "disk":
            return 2.0 * math.pi
        if self.kind == "interval":
            return math.pi
        return float(len(self.points))

    def boundary_point(self, t):
        """Map boundary parameter(s) ``t`` to points on the boundary.

        Disk: ``radius * exp(i t)`` for t in [0, 2 pi).  Interval: the slit is its
        own boundary and is traversed as ``mid + half * cos(t)`` for t in [0, pi];
        both sides of the slit carry identical values of any product with
        conjugate-symmetric dependence, so one pass suffices.  Boundary samples:
        piecewise-linear closed polygon through the given points, t in [0, M).
        """
        t = np.asarray(t, dtype=float)
        if self.kind == "disk":
            return self.radius * np.exp(1j * t)
        if self.kind == "interval":
            mid = 0.5 * (self.a + self.b)
            half = 0.5 * (self.b - self.a)
            return (mid + half * np.cos(t)).astype(complex)
        pts = np.asarray(self.points, dtype=complex)
        m = len(pts)
        tt = np.mod(t, m)
        idx = np.floor(tt).astype(int) % m
        frac = tt - np.floor(tt)
        return pts[idx] + frac * (pts[(idx + 1) % m] - pts[idx])

    # -- membership ----------------------------------------------------------------

    def contains(self, z, tol: float = 1e-9):
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return np.abs(z) <= self.radius + tol
        if self.kind == "interval":
            return (np.abs(z.imag) <= tol) & (z.real >= self.a - tol) & (z.real <= self.b + tol)
        inside = _point_in_polygon(z, np.asarray(self.points))
        return inside | (_distance_to_polygon(z, np.asarray(self.points)) <= tol)

    def project(self, z):
        """Nearest point of the closed region (Euclidean)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            r = np.abs(z)
            scale = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
            return z * scale
        if self.kind == "interval":
            return np.clip(z.real, self.a, self.b).astype(complex)
        pts = np.asarray(self.points)
        inside = _point_in_polygon(z, pts)
        return np.where(inside, z, _nearest_on_polygon(z, pts))

    @property
    def max_modulus(self) -> float:
        if self.kind == "disk":
            return self.radius
        if self.kind == "interval":
            return max(abs(self.a), abs(self.b))
        return max(abs(p) for p in self.points)

    # -- serialization -------------------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "disk":
            out = {"kind": "disk", "radius": self.radius}
        elif self.kind == "interval":
            out = {"kind": "interval", "a": self.a, "b": self.b}
        else:
            out = {"kind": "boundary", "points": [[p.real, p.imag] for p in self.points]}
        if self.margin != DEFAULT_MARGIN:
            out["margin"] = self.margin
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PoleRegion":
        kind = data.get("kind")
        margin = float(data.get("margin", DEFAULT_MARGIN))
        if kind == "disk":
            return cls.disk(float(data["radius"]), margin=margin)
        if kind == "interval":
            return cls.interval(float(data["a"]), float(data["b"]), margin=margin)
        if kind == "boundary":
            pts = [complex(p[0], p[1]) if isinstance(p, (list, tuple)) else complex(p)
                   for p in data["points"]]
            return cls.boundary(pts, margin=margin)
        raise DomainError(f"unknown region kind {kind!r}")


def _point_in_polygon(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # even-odd rule
    x, y = z.real, z.imag
    inside = np.zeros(z.shape, dtype=bool)
    m = len(pts)
    for i in range(m):
        p, q = pts[i], pts[(i + 1) % m]
        cond = (p.imag > y) != (q.imag > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = p.real + (y - p.imag) * (q.real - p.real) / (q.imag - p.imag)
        inside ^= cond & (x < xcross)
    return inside


def _segment_nearest(z: np.ndarray, p: complex, q: complex) -> np.ndarray:
    d = q - p
    denom = abs(d) ** 2
    if denom == 0:
        return np.full(z.shape, p, dtype=complex)
    s = np.clip(((z - p) * np.conj(d)).real / denom, 0.0, 1.0)
    return p + s * d


def _nearest_on_polygon(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    best = None
    best_d = None
    m = len(pts)
    for i in range(m):
        cand = _segment_nearest(z, pts[i], pts[(i + 1) % m])
        d = np.abs(cand - z)
        if best is None:
            best, best_d = cand, d
        else:
            better = d < best_d
            best = np.where(better, cand, best)
            best_d = np.where(better, d, best_d)
    return best


def _distance_to_polygon(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.abs(_nearest_on_polygon(z, pts) - z)


# -- metric and products ------------------------------------------------------------


def pseudo_metric(z, mu):
    """Pseudohyperbolic distance ``|(z - mu) / (1 - conj(mu) z)|``.

    Broadcasts over array arguments; returns a Python float for scalars.
    """
    zz = _as_complex_array(z)
    mm = _as_complex_array(mu)
    _check_inside(zz, mm)
    d = np.abs((zz - mm) / (1.0 - np.conj(mm) * zz))
    if d.ndim == 0:
        return float(d)
    return d


def log_blaschke(z, poles) -> np.ndarray:
    """Sum of ``log [z, mu_k]_h`` over poles, vectorized over ``z``.

    No domain checks; callers validate once.
    """
    z = np.asarray(z, dtype=complex)
    poles = np.asarray(poles, dtype=complex).ravel()
    if poles.size == 0:
        return np.zeros(z.shape)
    zz = z[..., None]
    num = zz - poles
    den = 1.0 - np.conj(poles) * zz
    # one log of squared moduli per term
    ratio = (num.real ** 2 + num.imag ** 2) / (den.real ** 2 + den.imag ** 2)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(ratio).sum(axis=-1)


def blaschke_product(z, poles) -> float:
    """Product of ``[z, mu_k]_h`` over the poles (1 for an empty list)."""
    zz = _as_complex_array(z)
    pp = _as_complex_array(poles).ravel()
    _check_inside(zz, pp)
    if pp.size == 0:
        return 1.0 if zz.ndim == 0 else np.ones(zz.shape)
    val = np.prod(pseudo_metric(zz[..., None], pp), axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def pair_product(points) -> tuple[float, float]:
    """Product of pairwise pseudohyperbolic distances.

    Returns ``(raw, normalized)`` where ``normalized`` is the ``1/binom(q, 2)``
    root, i.e. the finite transfinite-diameter functional.
    """
    pts = _as_complex_array(points).ravel()
    q = pts.size
    if q < 2:
        raise ArityError("pair_product needs at least two points")
    _check_inside(pts)
    j, k = np.triu_indices(q, 1)
    d = pseudo_metric(pts[j], pts[k])
    raw = float(np.prod(d))
    npairs = q * (q - 1) // 2
    with np.errstate(divide="ignore"):
        normalized = float(np.exp(np.sum(np.log(d)) / npairs)) if raw > 0 else 0.0
    return raw, normalized


def log_pair_product(points) -> float:
    """Sum of ``log [z_j, z_k]_h`` over pairs; ``-inf`` on coincidence."""
    pts = np.asarray(points, dtype=complex).ravel()
    j, k = np.triu_indices(pts.size, 1)
    with np.errstate(divide="ignore"):
        d = np.abs((pts[j] - pts[k]) / (1.0 - np.conj(pts[k]) * pts[j]))
        return float(np.sum(np.log(d)))


def _local_maxima(values: np.ndarray, cyclic: bool) -> np.ndarray:
    if cyclic:
        left = np.roll(values, 1)
        right = np.roll(values, -1)
    else:
        left = np.concatenate(([-np.inf], values[:-1]))
        right = np.concatenate((values[1:], [-np.inf]))
    return np.flatnonzero((values >= left) & (values >= right))


def worst_case_product(region: PoleRegion, poles, grid_density: int = 512,
                       n_refine: int = 8) -> tuple[float, complex]:
    """Maximum of the Blaschke product over the boundary of ``region``.

    A uniform grid in the boundary parameter locates candidate peaks; the
    ``n_refine`` best local maxima are polished with a bounded scalar search
    (tolerance 1e-10, at most 200 iterations).  Returns ``(value, argmax)``.
    """
    if not isinstance(region, PoleRegion):
        raise DomainError("region must be a PoleRegion")
    if grid_density < 64:
        raise DomainError("grid_density must be at least 64")
    poles = _as_complex_array(poles).ravel()
    _check_inside(poles)

    span = region.param_span
    if region.cyclic:
        ts = np.linspace(0.0, span, grid_density, endpoint=False)
    else:
        ts = np.linspace(0.0, span, grid_density)
    h = ts[1] - ts[0]
    logs = log_blaschke(region.boundary_point(ts), poles)

    peaks = _local_maxima(logs, region.cyclic)
    peaks = peaks[np.argsort(logs[peaks])[::-1][:n_refine]]

    best_t = ts[peaks[0]]
    best_log = logs[peaks[0]]

    def neg(t):
        return -float(log_blaschke(region.boundary_point(t), poles))

    for i in peaks:
        if not np.isfinite(logs[i]) and logs[i] < 0:
            continue
        lo, hi = ts[i] - h, ts[i] + h
        if not region.cyclic:
            lo, hi = max(lo, 0.0), min(hi, span)
        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10, "maxiter": 200})
        if -res.fun > best_log:
            best_log, best_t = -res.fun, float(res.x)

    point = complex(region.boundary_point(best_t))
    return float(np.exp(best_log)), point


# -- complete elliptic integral and analytic constants ------------------------------


@dataclass(frozen=True)
class EllipticModulus:
    """Modulus ``k`` with its complement ``k' = sqrt(1 - k^2)``."""

    k: float
    kp: float

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulus":
        if not 0.0 <= k < 1.0:
            raise DomainError(f"elliptic modulus must be in [0, 1), got {k}")
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean, stopped once ``|a - b| < 1e-15 a``."""
    for _ in range(64):
        if abs(a - b) < 1e-15 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def elliptic_K(k: float, kp: float | None = None) -> float:
    """Complete elliptic integral of the first kind, modulus convention.

    ``K(k) = int_0^1 dx / sqrt((1 - x^2)(1 - k^2 x^2))`` evaluated as
    ``pi / (2 AGM(1, k'))``.  Pass ``kp`` when the complementary modulus is
    known more accurately than ``sqrt(1 - k^2)``.
    """
    if not 0.0 <= k < 1.0:
        raise DomainError(f"elliptic_K requires 0 <= k < 1, got {k}")
    if kp is None:
        kp = math.sqrt((1.0 - k) * (1.0 + k))
    if kp <= 0.0:
        raise DomainError("complementary modulus underflowed to zero")
    return math.pi / (2.0 * agm(1.0, kp))


def interval_modulus(a: float, b: float) -> tuple[float, float]:
    """``(k, k')`` of the Moebius-reduced interval ``[0, k]`` equivalent to ``[a, b]``.

    ``k = (b - a) / (1 - ab)``; the complement is formed from factored terms
    to avoid cancellation for intervals close to the unit circle.
    """
    k = (b - a) / (1.0 - a * b)
    kp = math.sqrt((1.0 - a * a) * (1.0 - b * b)) / (1.0 - a * b)
    return k, kp


def tau_analytic(region: PoleRegion) -> float:
    """Hyperbolic Chebyshev constant of a disk or real interval."""
    if region.kind == "disk":
        return region.radius
    if region.kind == "interval":
        k, kp = interval_modulus(region.a, region.b)
        return math.exp(-0.5 * math.pi * elliptic_K(kp, k) / elliptic_K(k, kp))
    raise UnsupportedRegion("analytic constant only available for disks and intervals")
