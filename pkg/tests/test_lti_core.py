import math

import numpy as np
import pytest
from scipy import linalg

from obf_ident.errors import (
    DegenerateError,
    DimensionError,
    DomainError,
    InstabilityError,
    SingularityError,
)
from obf_ident.lti_core import (
    EnergyBudget,
    GramMatrices,
    PartialFractionTF,
    StateSpaceModel,
    Trajectory,
    bias_upper_bound,
    gram_matrix,
    h2_distance,
    h2_distance_ss,
    h2_norm,
    h2_norm_ss,
    optimal_projection,
    pf_to_ss,
    projection_bias,
    psd_bounds,
    scalar_error_closed_form,
    simulate_closed_loop,
    ss_to_pf,
)


def rand_poles(rng, n, radius=0.9):
    return radius * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def rand_tf(rng, n, p=1, m=1, radius=0.9):
    R = rng.standard_normal((n, p, m)) + 1j * rng.standard_normal((n, p, m))
    return PartialFractionTF(rand_poles(rng, n, radius), R)


def impulse(G, T):
    # h_t for t = 1..T, straight from the partial fractions
    t = np.arange(T)
    return np.einsum("jt,jpm->tpm", G.poles[:, None] ** t[None, :], G.residues)


def siso(poles, res=None):
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    res = np.ones(poles.size) if res is None else np.asarray(res, dtype=complex)
    return PartialFractionTF(poles, res.reshape(-1, 1, 1))


def test_h2_norm_examples():
    assert h2_norm(siso([0.5])) == pytest.approx(1 / math.sqrt(0.75), abs=1e-12)
    assert h2_norm(siso([0.0])) == pytest.approx(1.0, abs=1e-15)


def test_h2_norm_matches_impulse_energy(rng):
    for _ in range(20):
        G = rand_tf(rng, 3, radius=0.9)
        T = int(math.log(1e-12) / math.log(np.max(np.abs(G.poles)))) + 2
        h = impulse(G, T)
        assert h2_norm(G) == pytest.approx(math.sqrt(np.sum(np.abs(h) ** 2)), abs=1e-8)


def test_h2_norm_ss_agrees(rng):
    G = rand_tf(rng, 4, p=2, m=3)
    assert h2_norm_ss(pf_to_ss(G)) == pytest.approx(h2_norm(G), rel=1e-10)
    unstable = StateSpaceModel(np.array([[1.2]]), np.ones((1, 1)), np.ones((1, 1)))
    assert h2_norm_ss(unstable) == math.inf


def test_gram_examples():
    np.testing.assert_allclose(gram_matrix([0.5, -0.5]), [[4 / 3, 0.8], [0.8, 4 / 3]], atol=1e-15)
    np.testing.assert_allclose(gram_matrix([0.0], m=2), np.eye(2))
    with pytest.raises(SingularityError):
        gram_matrix([0.3, 0.3])
    with pytest.raises(DomainError):
        gram_matrix([1.0])


def test_gram_matches_series(rng):
    mu = rand_poles(rng, 4, 0.8)
    t = np.arange(300)
    V = mu[:, None] ** t[None, :]
    series = V @ V.conj().T
    Xi = gram_matrix(mu)
    np.testing.assert_allclose(Xi, series, atol=1e-8)
    assert np.min(np.linalg.eigvalsh(Xi)) > 0
    gm = GramMatrices.build([0.5], mu)
    assert gm.phi_lambda[0, 0] == pytest.approx(1 / 0.75)


def test_projection_examples():
    coeffs, bias = optimal_projection(siso([0.3]), [0.3])
    assert coeffs[0, 0, 0] == pytest.approx(1.0)
    assert bias <= 1e-7
    G = siso([0.6])
    _, bias = optimal_projection(G, [0.2, -0.4])
    assert bias / h2_norm(G) == pytest.approx(0.366569, abs=1e-6)
    assert scalar_error_closed_form(0.6, [0.2, -0.4]) == pytest.approx(0.366569, abs=1e-6)
    assert scalar_error_closed_form(0.2, [0.2, 0.5]) == 0.0


def test_projection_matches_time_domain_ls(rng):
    T = 10_000
    G = rand_tf(rng, 3, p=2, m=2, radius=0.8)
    mu = rand_poles(rng, 4, 0.8)
    h = impulse(G, T).reshape(T, -1)
    V = (mu[None, :] ** np.arange(T)[:, None])
    W, *_ = np.linalg.lstsq(V, h, rcond=None)
    ls_bias = math.sqrt(np.sum(np.abs(h - V @ W) ** 2))
    coeffs, bias = optimal_projection(G, mu)
    assert bias == pytest.approx(ls_bias, abs=1e-6)
    np.testing.assert_allclose(coeffs.reshape(4, -1), W, atol=1e-6)
    assert h2_distance(G, coeffs, mu) == pytest.approx(bias, abs=1e-8)


def test_scalar_identity_random(rng):
    for _ in range(200):
        q = int(rng.integers(1, 7))
        lam = rand_poles(rng, 1, 0.95)[0]
        mu = rand_poles(rng, q, 0.95)
        G = siso([lam])
        _, bias = optimal_projection(G, mu)
        assert abs(bias / h2_norm(G) - scalar_error_closed_form(lam, mu)) <= 1e-9


def test_projection_first_order_optimal(rng):
    G = rand_tf(rng, 3, p=1, m=2)
    mu = rand_poles(rng, 3)
    coeffs, bias = optimal_projection(G, mu)
    for _ in range(200):
        d = rng.standard_normal(coeffs.shape) + 1j * rng.standard_normal(coeffs.shape)
        d *= 1e-3 / np.linalg.norm(d)
        assert h2_distance(G, coeffs + d, mu) >= bias - 1e-12


def test_bound_examples():
    G = siso([0.5, -0.2], [1.0, 2.0])
    budget = EnergyBudget.from_tf(G)
    assert budget.psd_ratio == 1.0
    tight, loose = bias_upper_bound(G, G.poles, budget)
    assert tight == 0.0 and loose == 0.0
    mu = [0.1]
    tight, _ = bias_upper_bound(G, mu, budget)
    manual = 2 * (1 / math.sqrt(0.75) * scalar_error_closed_form(0.5, mu)
                  + 2 / math.sqrt(0.96) * scalar_error_closed_form(-0.2, mu))
    assert tight == pytest.approx(manual)


def test_bound_dominance_random(rng):
    for _ in range(200):
        n, q = int(rng.integers(1, 6)), int(rng.integers(1, 9))
        G = rand_tf(rng, n, p=int(rng.integers(1, 3)), m=int(rng.integers(1, 3)))
        mu = rand_poles(rng, q)
        _, bias = optimal_projection(G, mu)
        tight, loose = bias_upper_bound(G, mu, EnergyBudget.from_tf(G))
        assert bias <= tight * (1 + 1e-12) + 1e-14
        assert tight <= loose * (1 + 1e-12) + 1e-14


def test_budget_validation():
    with pytest.raises(DomainError):
        EnergyBudget(-1.0, 0.5)
    with pytest.raises(DomainError):
        EnergyBudget(1.0, 1.0)
    with pytest.raises(DomainError):
        EnergyBudget(1.0, 0.5, 0.5)
    with pytest.raises(DegenerateError):
        EnergyBudget.from_tf(siso([0.1]), psd=(1.0, 0.0))


def test_tf_validation():
    with pytest.raises(InstabilityError):
        siso([1.0])
    with pytest.raises(DomainError):
        siso([0.2, 0.2 + 1e-12])
    with pytest.raises(DimensionError):
        PartialFractionTF(np.array([0.1, 0.2]), np.ones((1, 1, 1)))


def test_pf_ss_examples():
    ss = pf_to_ss(siso([0.4], [3.0]))
    assert ss.A.shape == (1, 1) and ss.A[0, 0] == pytest.approx(0.4)
    assert (ss.C @ ss.B)[0, 0] == pytest.approx(3.0)
    rank1 = PartialFractionTF(np.array([0.2]), np.outer([1.0, 2.0], [3.0, -1.0])[None])
    assert pf_to_ss(rank1).n == 1


def test_pf_ss_round_trip_markov(rng):
    for _ in range(10):
        G = rand_tf(rng, 4, p=2, m=3)
        ss = pf_to_ss(G)
        np.testing.assert_allclose(ss.markov(20), G.markov(20), atol=1e-9)
        back = ss_to_pf(ss)
        np.testing.assert_allclose(back.markov(20), G.markov(20), atol=1e-9)


def test_ss_to_pf_similarity_invariant(rng):
    A = np.diag([0.5, -0.3, 0.1])
    B = rng.standard_normal((3, 2))
    C = rng.standard_normal((2, 3))
    T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    a = ss_to_pf(StateSpaceModel(A, B, C))
    b = ss_to_pf(StateSpaceModel(T @ A @ np.linalg.inv(T), T @ B, C @ np.linalg.inv(T)))
    ia, ib = np.argsort(a.poles.real), np.argsort(b.poles.real)
    np.testing.assert_allclose(a.poles[ia], b.poles[ib], atol=1e-12)
    np.testing.assert_allclose(a.residues[ia], b.residues[ib], atol=1e-8)
    for pole, R in zip(a.poles, a.residues):
        j = int(np.argmin(np.abs(np.diag(A) - pole)))
        np.testing.assert_allclose(R, np.outer(C[:, j], B[j]), atol=1e-12)


def test_ss_to_pf_defective():
    with pytest.raises(DegenerateError):
        ss_to_pf(StateSpaceModel(np.array([[0.5, 1.0], [0.0, 0.5]]), np.ones((2, 1)), np.ones((1, 2))))


def test_ss_h2_distance(rng):
    a = pf_to_ss(rand_tf(rng, 3))
    assert h2_distance_ss(a, a) == pytest.approx(0.0, abs=1e-7)


def test_serialization_round_trips(rng):
    G = rand_tf(rng, 3, p=2, m=2)
    again = PartialFractionTF.from_dict(G.to_dict())
    np.testing.assert_allclose(again.poles, G.poles)
    np.testing.assert_allclose(again.residues, G.residues)
    ss = StateSpaceModel(np.diag([0.1, 0.2]), np.ones((2, 1)), np.ones((1, 2)), noise_cov=[[2.0]])
    back = StateSpaceModel.from_dict(ss.to_dict())
    np.testing.assert_allclose(back.A, ss.A)
    np.testing.assert_allclose(back.noise_cov, ss.noise_cov)


def test_state_space_validation():
    with pytest.raises(DimensionError):
        StateSpaceModel(np.eye(2), np.ones((3, 1)), np.ones((1, 2)))
    with pytest.raises(DomainError):
        StateSpaceModel(np.eye(1) * 0.5, np.ones((1, 1)), np.ones((1, 1)), noise_cov=[[-1.0]])


def test_simulation_zero_and_impulse():
    plant = StateSpaceModel(np.diag([0.5, -0.3]), np.ones((2, 1)), np.array([[1.0, 2.0]]))
    traj = simulate_closed_loop(plant, N=50, noise_std=0.0, probe=np.zeros(50))
    assert np.all(traj.y == 0) and np.all(traj.u == 0)
    probe = np.zeros(30)
    probe[0] = 1.0
    traj = simulate_closed_loop(plant, N=30, noise_std=0.0, probe=probe)
    np.testing.assert_allclose(traj.y[:, 0], plant.markov(30)[:, 0, 0], atol=1e-15)


def test_simulation_ar_variance():
    a = 0.8
    plant = StateSpaceModel(np.array([[a]]), np.ones((1, 1)), np.ones((1, 1)))
    traj = simulate_closed_loop(plant, N=100_000, seed=7, noise_std=0.0)
    P = linalg.solve_discrete_lyapunov(plant.A, plant.B @ plant.B.T)[0, 0]
    assert np.var(traj.y[1000:, 0]) == pytest.approx(P, rel=0.03)


def test_simulation_deterministic_and_validated():
    plant = StateSpaceModel(np.array([[0.5]]), np.ones((1, 1)), np.ones((1, 1)))
    a = simulate_closed_loop(plant, N=100, seed=3)
    b = simulate_closed_loop(plant, N=100, seed=3)
    np.testing.assert_array_equal(a.y, b.y)
    assert a.seed == 3
    gain = StateSpaceModel(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), D=[[1.0]])
    with pytest.raises(InstabilityError):
        simulate_closed_loop(plant, (gain, None), N=10)
    with pytest.raises(DomainError):
        simulate_closed_loop(plant, N=0)


def test_closed_loop_feedback_matches_manual_recursion():
    plant = StateSpaceModel(np.array([[0.5]]), np.ones((1, 1)), np.ones((1, 1)))
    gain = StateSpaceModel(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), D=[[-0.3]])
    traj = simulate_closed_loop(plant, (gain, None), N=40, seed=5, noise_std=0.0)
    eps = np.random.default_rng(5)
    eps.standard_normal((41, 1))
    eps = eps.standard_normal((40, 1))[:, 0]
    x, ys = 0.0, []
    for t in range(40):
        u = eps[t] - 0.3 * x
        x = 0.5 * x + u
        ys.append(x)
    np.testing.assert_allclose(traj.y[:, 0], ys, atol=1e-12)


def test_trajectory_validation():
    with pytest.raises(DimensionError):
        Trajectory(np.zeros((5, 1)), np.zeros((4, 1)))
    with pytest.raises(DomainError):
        Trajectory(np.full((2, 1), np.nan), np.zeros((2, 1)))


def test_psd_bounds_examples():
    assert psd_bounds() == (1.0, 1.0)
    plant = StateSpaceModel(np.array([[0.2]]), np.ones((1, 1)), np.ones((1, 1)))
    Hu = StateSpaceModel(np.array([[0.5]]), np.ones((1, 1)), np.array([[0.5]]), D=[[1.0]])
    sup, inf = psd_bounds((None, Hu, plant))
    assert sup / inf == pytest.approx(9.0, rel=1e-9)
    s2, i2 = psd_bounds((None, Hu, plant), n_grid=8192)
    assert abs((s2 / i2) / (sup / inf) - 1) < 1e-3


def test_psd_bounds_closed_loop_refinement():
    plant = StateSpaceModel(np.array([[0.7]]), np.ones((1, 1)), np.ones((1, 1)))
    Gu = StateSpaceModel(np.array([[0.3]]), np.ones((1, 1)), np.array([[-0.2]]), D=[[-0.1]])
    s1, i1 = psd_bounds((Gu, None, plant))
    s2, i2 = psd_bounds((Gu, None, plant), n_grid=8192)
    assert abs((s2 / i2) / (s1 / i1) - 1) < 1e-3
    assert s1 / i1 >= 1.0


def test_psd_bounds_degenerate():
    plant = StateSpaceModel(np.array([[0.2]]), np.ones((1, 1)), np.ones((1, 1)))
    # 1 - z^-1 vanishes at zero frequency
    Hu = StateSpaceModel(np.zeros((1, 1)), np.ones((1, 1)), np.array([[-1.0]]), D=[[1.0]])
    with pytest.raises(DegenerateError):
        psd_bounds((None, Hu, plant))


def test_projection_bias_matches_gram_solve(rng):
    for _ in range(100):
        G = rand_tf(rng, int(rng.integers(1, 5)), p=2, m=int(rng.integers(1, 3)))
        mu = rand_poles(rng, int(rng.integers(1, 6)))
        assert projection_bias(G, mu) == pytest.approx(optimal_projection(G, mu)[1], rel=1e-9, abs=1e-12)


def test_projection_bias_survives_clustered_basis():
    # 15 nearly equal poles: the Gram solve refuses, the Blaschke form does not
    mu = 0.3 + 1e-3 * np.arange(15)
    G = siso([0.6, -0.2], [1.0, 0.5])
    with pytest.raises(SingularityError):
        optimal_projection(G, mu)
    bias = projection_bias(G, mu)
    assert 0 < bias < h2_norm(G)
    # shrinking toward a single repeated pole approaches the repeated-pole error
    assert bias <= projection_bias(G, [0.3])
