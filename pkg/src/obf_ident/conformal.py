"""Conformal map between the slit disk and an annulus, and Tsuji-point seeding.

For the symmetric interval ``[-rho, rho]`` the exterior ``D \\ [-rho, rho]`` is
mapped onto ``{tau < |w| < 1}`` by the chain

    z  --moebius-->  z_m = (z + rho) / (1 + rho z)            (slit -> [0, k])
       --sc_map--->  s = F(sqrt(z_m / k) | k)                  (rectangle)
       --exp------>  w = exp(pi (-i s - K'/2 + i K) / K)

with ``k = 2 rho / (1 + rho^2)``, ``K = K(k)`` and ``K' = K(k')``.  The square
root takes arguments in ``[0, pi)``, so the slit-disk lands on the rectangle
``[-K, K] x [0, K'/2]`` with its vertical edges identified; the exponential
closes the strip into the annulus, the slit going to ``|w| = tau`` and the
unit circle to ``|w| = 1`` with ``g(1) = 1``.  The inverse uses
``z_m = k sn(s | k^2)^2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import ellipkinc

from .errors import BranchError, ConvergenceError, DomainError, UnsupportedRegion
from .hyperbolic import PoleRegion, elliptic_K

_MAX_LANDEN = 64


@dataclass(frozen=True)
class IntervalMapParams:
    """Constants of the map for the interval ``[-rho, rho]``."""

    rho: float
    rho_tilde: float
    kp: float
    K_k: float
    K_kp: float
    tau: float

    @classmethod
    def from_rho(cls, rho: float) -> "IntervalMapParams":
        if not 0.0 < rho < 1.0:
            raise DomainError(f"rho must be in (0, 1), got {rho}")
        r2 = rho * rho
        k = 2.0 * rho / (1.0 + r2)
        kp = (1.0 - r2) / (1.0 + r2)
        K = elliptic_K(k, kp)
        Kp = elliptic_K(kp, k)
        return cls(rho, k, kp, K, Kp, math.exp(-0.5 * math.pi * Kp / K))


def mobius(z, rho: float):
    """``(z + rho) / (1 + rho z)``: sends ``[-rho, rho]`` to ``[0, 2rho/(1+rho^2)]``."""
    z = np.asarray(z, dtype=complex)
    den = 1.0 + rho * z
    if np.any(np.abs(den) < 1e-300):
        raise DomainError("Moebius map evaluated at its pole")
    out = (z + rho) / den
    return complex(out) if out.ndim == 0 else out


def mobius_inverse(z, rho: float):
    z = np.asarray(z, dtype=complex)
    den = 1.0 - rho * z
    if np.any(np.abs(den) < 1e-300):
        raise DomainError("inverse Moebius map evaluated at its pole")
    out = (z - rho) / den
    return complex(out) if out.ndim == 0 else out


def hyperbolic_center(a: float, b: float) -> tuple[float, float]:
    """Real ``c`` with ``phi_c([a, b]) = [-r, r]`` for ``phi_c(z) = (z - c)/(1 - c z)``.

    Returns ``(c, r)``.
    """
    s = a + b
    if abs(s) < 1e-15:
        return 0.0, b
    p = 1.0 + a * b
    c = (p - math.sqrt(max(p * p - s * s, 0.0))) / s
    r = (b - c) / (1.0 - c * b)
    return c, r


# -- Jacobi sn by descending Landen ---------------------------------------------------


def jacobi_sn(u, m: float, mc: float | None = None):
    """Jacobi elliptic sine ``sn(u | m)`` for complex ``u`` and parameter ``m = k^2``.

    Descending Landen transformation down to a parameter below 1e-18, then
    the small-parameter expansion of sn.  ``mc`` optionally supplies ``1 - m``
    to full precision.
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"parameter m must be in [0, 1), got {m}")
    u = np.asarray(u, dtype=complex)
    k = math.sqrt(m)
    kp = math.sqrt(mc) if mc is not None else math.sqrt((1.0 - k) * (1.0 + k))

    ks = []
    for _ in range(_MAX_LANDEN):
        if k < 1e-9:
            break
        k_next = (k / (1.0 + kp)) ** 2
        kp = 2.0 * math.sqrt(kp) / (1.0 + kp)
        if not k_next < k:
            raise ConvergenceError("Landen recursion failed to contract")
        k = k_next
        ks.append(k)
    else:
        raise ConvergenceError("Landen recursion did not converge in 64 stages")

    scale = 1.0
    for kn in ks:
        scale *= 1.0 + kn
    v = u / scale
    mu = k * k
    sv, cv = np.sin(v), np.cos(v)
    sn = sv - 0.25 * mu * (v - sv * cv) * cv
    for kn in reversed(ks):
        sn = (1.0 + kn) * sn / (1.0 + kn * sn * sn)
    return complex(sn) if sn.ndim == 0 else sn


# -- Schwarz-Christoffel stage ----------------------------------------------------------


def _f_integrand(k: float):
    k2 = k * k

    def f(w):
        return 1.0 / (np.sqrt(1.0 - w * w) * np.sqrt(1.0 - k2 * w * w))

    return f


def _segment_integral(f, w0: complex, w1: complex) -> complex:
    d = w1 - w0
    if d == 0:
        return 0j
    with warnings.catch_warnings():
        # endpoint singularities at the branch points trigger harmless roundoff notices
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda t: f(w0 + t * d), 0.0, 1.0, complex_func=True,
                      epsabs=1e-14, epsrel=1e-13, limit=400)
    return d * val


def incomplete_F(zeta: complex, k: float) -> complex:
    """``int_0^zeta dw / sqrt((1 - w^2)(1 - k^2 w^2))`` for ``zeta`` in the closed
    upper half-plane; points on the real axis beyond 1 take the limit from above.
    """
    zeta = complex(zeta)
    if zeta.imag < 0:
        raise BranchError("incomplete_F integrates in the closed upper half-plane only")
    if abs(zeta) * k >= 1.0 and k > 0:
        raise BranchError("integration path would reach the branch point 1/k")
    if zeta.imag == 0.0 and abs(zeta.real) <= 1.0:
        x = zeta.real
        return complex(math.copysign(ellipkinc(math.asin(abs(x)), k * k), x))
    f = _f_integrand(k)
    # Paths passing near the branch points at +-1 detour through the upper half-plane.
    if abs(zeta.real) > 1.0 - 1e-6 and zeta.imag < 0.25:
        corner = complex(zeta.real, 0.25)
        return _segment_integral(f, 0j, corner) + _segment_integral(f, corner, zeta)
    return _segment_integral(f, 0j, zeta)


def _sqrt_upper(z: complex) -> complex:
    # square root with argument in [0, pi)
    r = abs(z)
    ang = math.atan2(z.imag, z.real)
    if ang < 0 or (ang == 0 and math.copysign(1.0, z.imag) < 0 and z.real < 0):
        ang += 2.0 * math.pi
    return math.sqrt(r) * complex(math.cos(ang / 2), math.sin(ang / 2))


def sc_map(z, params: IntervalMapParams):
    """Schwarz-Christoffel stage ``F(sqrt(z / k) | k)`` on ``D \\ [0, k]``."""
    def one(zz: complex) -> complex:
        zz = complex(zz)
        if abs(zz) > 1.0 + 1e-12:
            raise BranchError("sc_map is defined on the closed unit disk only")
        zeta = _sqrt_upper(zz / params.rho_tilde)
        return incomplete_F(zeta, params.rho_tilde)

    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        return one(complex(arr))
    return np.array([one(v) for v in arr.ravel()]).reshape(arr.shape)


def sc_inverse(s, params: IntervalMapParams):
    """``k sn(s | k^2)^2``."""
    sn = jacobi_sn(s, params.rho_tilde ** 2, mc=params.kp ** 2)
    return params.rho_tilde * sn * sn


# -- full chain ---------------------------------------------------------------------------


def region_to_annulus(z, params: IntervalMapParams):
    """Map ``D \\ [-rho, rho]`` onto the annulus ``{tau < |w| < 1}``."""
    zm = mobius(z, params.rho)
    s = sc_map(zm, params)
    K, Kp = params.K_k, params.K_kp
    return np.exp(math.pi * (-1j * np.asarray(s) - 0.5 * Kp + 1j * K) / K)[()]


def annulus_to_region(w, params: IntervalMapParams):
    """Inverse of :func:`region_to_annulus`; ``|w| = tau`` lands on the slit."""
    w = np.asarray(w, dtype=complex)
    mod = np.abs(w)
    if np.any(mod < params.tau - 1e-12) or np.any(mod > 1.0 + 1e-12):
        raise DomainError("w must satisfy tau <= |w| <= 1")
    K, Kp = params.K_k, params.K_kp
    sigma = (K / math.pi) * np.log(w)
    s = 1j * sigma + 0.5j * Kp + K
    z = mobius_inverse(sc_inverse(s, params), params.rho)
    return z


def _interval_frame(region: PoleRegion) -> tuple[float, IntervalMapParams]:
    c, r = hyperbolic_center(region.a, region.b)
    return c, IntervalMapParams.from_rho(r)


def interval_slit_point(nu, region: PoleRegion):
    """Point of the interval with conformal angle ``nu`` in ``[0, pi]``.

    ``nu = 0`` is the right endpoint, ``nu = pi`` the left one; this is one side
    of the slit seen from the annulus, ``f(tau e^{i nu})``.
    """
    c, params = _interval_frame(region)
    w = params.tau * np.exp(1j * np.asarray(nu, dtype=float))
    x = np.real(annulus_to_region(w, params))
    x = np.clip(x, -params.rho, params.rho)
    return (x + c) / (1.0 + c * x)


def tsuji_init_angles(region: PoleRegion, q: int) -> np.ndarray:
    """Boundary parameters of the conformal seed configuration."""
    if q < 1:
        raise DomainError("q must be at least 1")
    if region.kind == "disk":
        return np.mod(2.0 * math.pi * np.arange(1, q + 1) / q, 2.0 * math.pi)
    if region.kind == "interval":
        # One side of the slit carries the full boundary; equispacing over the
        # closed half-circle keeps the seeds distinct and includes both endpoints.
        if q == 1:
            return np.array([0.5 * math.pi])
        return math.pi * np.arange(q) / (q - 1)
    raise UnsupportedRegion("conformal seeding is available for disks and intervals only")


def tsuji_init(region: PoleRegion, q: int) -> np.ndarray:
    """Initial Tsuji points: equispaced samples of the inner annulus circle
    pushed through the conformal map.
    """
    angles = tsuji_init_angles(region, q)
    if region.kind == "disk":
        return region.radius * np.exp(1j * angles)
    return np.asarray(interval_slit_point(angles, region), dtype=complex)
