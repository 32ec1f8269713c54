import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from obf_ident.errors import ArityError, DomainError, UnsupportedRegion
from obf_ident.hyperbolic import (
    EllipticModulus,
    PoleRegion,
    blaschke_product,
    elliptic_K,
    interval_modulus,
    pair_product,
    pseudo_metric,
    tau_analytic,
    worst_case_product,
)

inside = st.builds(
    lambda r, t: r * complex(math.cos(t), math.sin(t)),
    st.floats(0.0, 0.98),
    st.floats(0.0, 2 * math.pi),
)


def K_quad(k):
    # substitution x = sin(theta) removes the endpoint singularity
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return quad(lambda th: 1.0 / math.sqrt(1.0 - (k * math.sin(th)) ** 2), 0.0, math.pi / 2,
                    epsabs=1e-14, epsrel=1e-14, limit=200)[0]


def test_pseudo_metric_examples():
    assert pseudo_metric(0.37, 0) == pytest.approx(0.37, abs=1e-15)
    assert pseudo_metric(0.5 + 0.1j, 0.5 + 0.1j) == 0.0
    assert pseudo_metric(0.5, 0.3) == pytest.approx(0.2 / 0.85, rel=1e-14)


def test_pseudo_metric_rejects_outside():
    with pytest.raises(DomainError):
        pseudo_metric(1.0, 0.2)
    with pytest.raises(DomainError):
        pseudo_metric(0.1, 1.2j)


def test_metric_symmetry_bulk(rng):
    from conftest import random_disk_points

    z = random_disk_points(rng, 10_000, 0.999)
    mu = random_disk_points(rng, 10_000, 0.999)
    np.testing.assert_allclose(pseudo_metric(z, mu), pseudo_metric(mu, z), rtol=1e-12, atol=1e-15)


@given(inside, inside, inside)
@settings(max_examples=300, deadline=None)
def test_mobius_invariance(z, mu, a):
    def phi(w):
        return (w - a) / (1 - np.conj(a) * w)

    assert abs(pseudo_metric(phi(z), phi(mu)) - pseudo_metric(z, mu)) <= 1e-12


@given(inside, inside)
@settings(max_examples=300, deadline=None)
def test_metric_range(z, mu):
    d = pseudo_metric(z, mu)
    assert 0.0 <= d < 1.0


def test_blaschke_examples():
    expected = (0.4 / 0.88) * (1.0 / 1.24)
    assert blaschke_product(0.6, [0.2, -0.4]) == pytest.approx(expected, rel=1e-14)
    assert blaschke_product(0.6, [0.2, -0.4]) == pytest.approx(0.366569, abs=1e-6)
    assert blaschke_product(0.2, [0.2, 0.9]) == 0.0
    assert blaschke_product(0.5, []) == 1.0
    # duplicates are legal here
    assert blaschke_product(0.1, [0.3, 0.3]) == pytest.approx(pseudo_metric(0.1, 0.3) ** 2)


def test_pair_product_examples():
    raw, norm = pair_product([0.5, -0.5])
    assert raw == pytest.approx(0.8, rel=1e-14)
    assert norm == pytest.approx(0.8, rel=1e-14)
    assert pair_product([0.3, 0.3, -0.3])[0] == 0.0
    with pytest.raises(ArityError):
        pair_product([0.1])
    with pytest.raises(DomainError):
        pair_product([0.1, 1.0])


def test_pair_product_disk_q3_against_grid():
    # rotation fixes the first point; the subharmonic log-metric peaks on the circle
    rho = 0.5
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    T1, T2 = np.meshgrid(th, th)
    z1 = rho
    z2, z3 = rho * np.exp(1j * T1), rho * np.exp(1j * T2)

    def d(a, b):
        return np.abs((a - b) / (1 - np.conj(b) * a))

    grid_best = np.max(d(z1, z2) * d(z1, z3) * d(z2, z3))
    tsuji = rho * np.exp(2j * np.pi * np.arange(3) / 3)
    assert abs(pair_product(tsuji)[0] - grid_best) <= 1e-4
    # interior points never beat the boundary configuration
    inner = 0.9 * tsuji
    assert pair_product(inner)[0] < pair_product(tsuji)[0]


def test_worst_case_examples():
    val, arg = worst_case_product(PoleRegion.disk(0.5), [0])
    assert val == pytest.approx(0.5, abs=1e-12)
    assert abs(arg) == pytest.approx(0.5, abs=1e-12)
    val, arg = worst_case_product(PoleRegion.interval(-0.5, 0.5), [0])
    assert val == pytest.approx(0.5, abs=1e-12)
    assert abs(arg) == pytest.approx(0.5, abs=1e-12)


def test_worst_case_matches_dense_sweep():
    region = PoleRegion.disk(0.8)
    poles = [0.8, -0.8]
    t = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
    brute = np.max(blaschke_product(0.8 * np.exp(1j * t), poles))
    val, _ = worst_case_product(region, poles)
    assert abs(val - brute) <= 1e-6
    assert val >= brute - 1e-12


def test_worst_case_random_configurations_vs_sweep(rng):
    from conftest import random_disk_points

    region = PoleRegion.interval(-0.7, 0.9)
    t = np.linspace(0, np.pi, 50_001)
    pts = region.boundary_point(t)
    for _ in range(10):
        poles = random_disk_points(rng, 4, 0.9)
        brute = np.max(blaschke_product(pts, poles))
        val, _ = worst_case_product(region, poles)
        assert val >= brute - 1e-12
        assert val - brute <= 1e-6


def test_worst_case_validates():
    with pytest.raises(DomainError):
        worst_case_product(PoleRegion.disk(0.5), [0.1], grid_density=10)
    with pytest.raises(DomainError):
        worst_case_product("disk", [0.1])


def test_elliptic_K_values():
    assert elliptic_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert abs(elliptic_K(0.5) - K_quad(0.5)) <= 1e-10
    assert elliptic_K(0.999999) > 7.0
    for k in (0.1, 0.3, 0.7, 0.9, 0.99):
        assert elliptic_K(k) == pytest.approx(K_quad(k), rel=1e-13)
    with pytest.raises(DomainError):
        elliptic_K(1.0)
    with pytest.raises(DomainError):
        elliptic_K(-0.1)


def test_elliptic_modulus_complement():
    for k in (0.0, 0.3, 0.999999):
        m = EllipticModulus.from_k(k)
        assert abs(m.k ** 2 + m.kp ** 2 - 1.0) <= 1e-12


def _tau_quadrature(a, b):
    k, kp = interval_modulus(a, b)
    return math.exp(-0.5 * math.pi * K_quad(kp) / K_quad(k))


def test_tau_analytic_values():
    assert tau_analytic(PoleRegion.disk(0.73)) == 0.73
    t999 = tau_analytic(PoleRegion.interval(-0.999, 0.999))
    assert t999 == pytest.approx(0.7427, abs=1e-4)
    assert t999 ** -2 == pytest.approx(1.81, abs=0.02)
    t95 = tau_analytic(PoleRegion.interval(-0.95, 0.95))
    # frozen from independent quadrature of both K terms
    assert t95 == pytest.approx(_tau_quadrature(-0.95, 0.95), abs=1e-12)
    assert t95 == pytest.approx(0.5675961028, abs=1e-9)
    with pytest.raises(UnsupportedRegion):
        tau_analytic(PoleRegion.boundary([0.1, 0.2j, -0.1]))


@given(st.floats(-0.95, 0.9), st.floats(0.01, 0.9))
@settings(max_examples=100, deadline=None)
def test_tau_mobius_shift_invariance(a, width):
    b = min(a + width, 0.95)
    if b - a < 1e-3:
        return
    rt = (b - a) / (1 - a * b)
    assert abs(tau_analytic(PoleRegion.interval(a, b)) - tau_analytic(PoleRegion.interval(0.0, rt))) <= 1e-10


def test_chebyshev_lower_bound_for_disk(rng):
    from conftest import random_disk_points

    region = PoleRegion.disk(0.6)
    for q in (1, 2, 3, 5):
        best = min(worst_case_product(region, random_disk_points(rng, q, 0.6))[0] for _ in range(30))
        assert best ** (1.0 / q) >= 0.6 - 1e-6


def test_region_validation_and_roundtrip():
    with pytest.raises(DomainError):
        PoleRegion.disk(1.0)
    with pytest.raises(DomainError):
        PoleRegion.interval(0.5, 0.2)
    with pytest.raises(DomainError):
        PoleRegion.boundary([0.1, 0.2])
    with pytest.raises(DomainError):
        PoleRegion.disk(0.99, margin=0.05)
    for reg in (PoleRegion.disk(0.4), PoleRegion.interval(-0.3, 0.8),
                PoleRegion.boundary([0.1, 0.5 + 0.2j, -0.3j])):
        assert PoleRegion.from_dict(reg.to_dict()) == reg


def test_region_contains_and_project():
    sq = PoleRegion.boundary([0.5 + 0.5j, -0.5 + 0.5j, -0.5 - 0.5j, 0.5 - 0.5j])
    assert sq.contains(0.1 + 0.1j)
    assert not sq.contains(0.7)
    assert sq.project(0.7 + 0j) == pytest.approx(0.5)
    iv = PoleRegion.interval(-0.2, 0.4)
    assert iv.project(0.9 + 0.3j) == pytest.approx(0.4)
