"""Finite-sample identification with fixed basis poles, plus a Ho-Kalman baseline.

The regressor for basis pole ``mu_k`` is ``x_t = sum_{l<t} mu_k^{t-1-l} u_l``,
so the model ``y_t = sum_k R_k x_t^{(k)}`` is linear in the residues and the
fit is ordinary least squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import DimensionError, DomainError, RankDeficientError, RankError
from .lti_core import (
    PartialFractionTF,
    StateSpaceModel,
    Trajectory,
    _poles_of,
    h2_distance,
    h2_norm,
    optimal_projection,
    simulate_closed_loop,
    ss_to_pf,
)

__all__ = [
    "Trajectory",
    "IdentResult",
    "ConvergenceTable",
    "regressor_states",
    "least_squares_fit",
    "convergence_experiment",
    "estimate_markov",
    "ho_kalman",
]

COND_LIMIT = 1e14


@dataclass
class IdentResult:
    """Fitted residues ``coeffs[k]`` for the basis ``1/(z - mu_k)``."""

    coeffs: np.ndarray
    mus: object
    residual: float
    rel_h2_error: Optional[float] = None
    condition: float = 1.0
    ridge: float = 0.0

    def __post_init__(self):
        if self.residual < 0:
            raise DomainError("residual must be non-negative")

    def to_tf(self) -> PartialFractionTF:
        return PartialFractionTF(_poles_of(self.mus), self.coeffs)


def regressor_states(mus, u) -> np.ndarray:
    """Regressor states ``x_1 .. x_N`` of the basis filters driven by ``u``.

    Parameters
    ----------
    mus : PoleSet or array_like
    u : ndarray, shape (N,) or (N, m)
        Inputs ``u_0 .. u_{N-1}``.

    Returns
    -------
    ndarray, shape (N, q*m)
        Row ``t-1`` holds ``x_t``; columns ``k*m:(k+1)*m`` belong to ``mu_k``.
    """
    mu = _poles_of(mus)
    u = np.asarray(u)
    if u.ndim == 1:
        u = u[:, None]
    N, m = u.shape
    dtype = complex if (np.iscomplexobj(mu) and np.any(mu.imag != 0)) or np.iscomplexobj(u) else float
    X = np.empty((N, mu.size * m), dtype=dtype)
    for k, z in enumerate(mu):
        a = [1.0, -(z if dtype is complex else z.real)]
        X[:, k * m:(k + 1) * m] = lfilter([1.0], a, u, axis=0)
    return X


def least_squares_fit(traj: Trajectory, mus, burn_in: int = 0, ridge: float = 0.0,
                      truth: Optional[PartialFractionTF] = None) -> IdentResult:
    """Least-squares residues for fixed basis poles.

    Parameters
    ----------
    traj : Trajectory
    mus : PoleSet or array_like
    burn_in : int
        Leading samples dropped from the objective (regressors still start at rest).
    ridge : float
        Optional Tikhonov weight added as ``ridge * N * I`` to the normal matrix.
    truth : PartialFractionTF, optional
        When given, the relative H2 error of the fit is reported.

    Raises
    ------
    RankDeficientError
        If the regressor covariance has condition number above 1e14.
    """
    mu = _poles_of(mus)
    X = regressor_states(mu, traj.u)[burn_in:]
    Y = traj.y[burn_in:]
    N, qm = X.shape
    m = traj.u.shape[1]
    p = Y.shape[1]
    if N < qm:
        raise RankDeficientError(f"{N} samples cannot determine {qm} regressors", math.inf)
    s = np.linalg.svd(X, compute_uv=False)
    cond = math.inf if s[-1] == 0 else float((s[0] / s[-1]) ** 2)
    if ridge == 0.0 and cond > COND_LIMIT:
        raise RankDeficientError(f"regressor covariance condition {cond:.3g} exceeds 1e14", cond)
    if ridge > 0.0:
        G = X.conj().T @ X + ridge * N * np.eye(qm)
        W = np.linalg.solve(G, X.conj().T @ Y)
    else:
        W, *_ = np.linalg.lstsq(X, Y, rcond=None)
    coeffs = np.stack([W[k * m:(k + 1) * m, :].T for k in range(mu.size)])
    resid = Y - X @ W
    residual = float(np.sum(np.abs(resid) ** 2) / N)
    rel = None
    if truth is not None:
        rel = h2_distance(truth, coeffs, mu) / h2_norm(truth)
    return IdentResult(coeffs, mus, residual, rel, cond, ridge)


# -- convergence experiments --------------------------------------------------------------


@dataclass
class ConvergenceTable:
    """Per-trial errors with per-N aggregates and the fitted log-log slope."""

    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    slope: float = math.nan
    reference: str = "analytic"


def _trial_seed(seed: int, N: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, N, trial]).generate_state(1)[0])


def convergence_experiment(plant: StateSpaceModel, mus, N_list: Sequence[int], trials: int,
                           seed: int, controller=None, noise_std: float = 1.0,
                           reference_N: int = 10 ** 6, truth: Optional[PartialFractionTF] = None
                           ) -> ConvergenceTable:
    """Distance between finite-sample fits and the limiting projection.

    With an open loop and white probing the limit is the analytic H2
    projection of the plant onto the basis.  Otherwise it is replaced by a
    single fit on ``reference_N`` samples.

    Returns
    -------
    ConvergenceTable
        ``rows`` holds ``(N, trial, error, "obf")``; ``summary`` holds
        ``(N, mean, min, max)``; ``slope`` is the least-squares slope of
        ``log(mean error)`` against ``log N``.
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    mu = _poles_of(mus)
    G = truth if truth is not None else ss_to_pf(plant)
    if controller is None:
        ref_coeffs, _ = optimal_projection(G, mu)
        ref_kind = "analytic"
    else:
        traj = simulate_closed_loop(plant, controller, reference_N, seed=_trial_seed(seed, reference_N, 0),
                                    noise_std=noise_std)
        ref_coeffs = least_squares_fit(traj, mu).coeffs
        ref_kind = f"empirical_N={reference_N}"

    table = ConvergenceTable(reference=ref_kind)
    for N in N_list:
        errs = []
        for trial in range(trials):
            traj = simulate_closed_loop(plant, controller, int(N), seed=_trial_seed(seed, int(N), trial),
                                        noise_std=noise_std)
            fit = least_squares_fit(traj, mu)
            err = _coeff_h2_distance(fit.coeffs, ref_coeffs, mu)
            errs.append(err)
            table.rows.append((int(N), trial, err, "obf"))
        errs = np.asarray(errs)
        table.summary.append((int(N), float(errs.mean()), float(errs.min()), float(errs.max())))
    if len(N_list) >= 2:
        Ns = np.log([s[0] for s in table.summary])
        means = np.array([s[1] for s in table.summary])
        if np.all(means > 0):
            table.slope = float(np.polyfit(Ns, np.log(means), 1)[0])
    return table


def _coeff_h2_distance(a: np.ndarray, b: np.ndarray, mu: np.ndarray) -> float:
    # both models share the basis, so the error is a Gram quadratic form
    d = (a - b).reshape(mu.size, -1)
    K = 1.0 / (1.0 - np.outer(mu, mu.conj()))
    val = float(np.real(np.sum((d @ d.conj().T) * K)))
    return math.sqrt(max(val, 0.0))


# -- Ho-Kalman ----------------------------------------------------------------------------


def estimate_markov(traj: Trajectory, T: int) -> np.ndarray:
    """Least-squares deconvolution of ``H_1 .. H_T`` from input/output data."""
    u, y = traj.u, traj.y
    N, m = u.shape
    if N < T * m:
        raise RankDeficientError("not enough samples to estimate the Markov parameters", math.inf)
    Phi = np.zeros((N, T * m), dtype=u.dtype)
    # row t-1 holds [u_{t-1}, ..., u_{t-T}] for output y_t
    for k in range(T):
        Phi[k:, k * m:(k + 1) * m] = u[:N - k]
    W, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    return np.stack([W[k * m:(k + 1) * m, :].T for k in range(T)])


def ho_kalman(data, n: int, T: int) -> StateSpaceModel:
    """Ho-Kalman realization from Markov parameters or a trajectory.

    Parameters
    ----------
    data : Trajectory or ndarray of shape (>= T, p, m)
        Markov parameters ``H_1, H_2, ...`` or data to estimate them from.
    n : int
        Model order.
    T : int
        Number of Markov parameters used; the Hankel matrix has ``T // 2``
        block rows and ``T - T // 2 - 1`` block columns.

    Raises
    ------
    RankError
        If the Hankel matrix has numerical rank below ``n`` (relative tolerance 1e-10).
    """
    if T < 3:
        raise DomainError("T must be at least 3")
    if isinstance(data, Trajectory):
        H = estimate_markov(data, T)
    else:
        H = np.asarray(data)
        if H.ndim == 1:
            H = H.reshape(-1, 1, 1)
        if H.shape[0] < T:
            raise DimensionError(f"need {T} Markov parameters, got {H.shape[0]}")
    _, p, m = H.shape
    T1 = T // 2
    T2 = T - T1 - 1
    Hank = np.block([[H[i + j] for j in range(T2 + 1)] for i in range(T1)])
    Hm = Hank[:, :T2 * m]
    Hp = Hank[:, m:]
    U, s, Vh = np.linalg.svd(Hm)
    rank = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    if rank < n:
        raise RankError(f"Hankel matrix has numerical rank {rank} < {n}")
    root = np.sqrt(s[:n])
    O = U[:, :n] * root
    Q = root[:, None] * Vh[:n]
    C = O[:p]
    B = Q[:, :m]
    A = np.linalg.pinv(O) @ Hp @ np.linalg.pinv(Q)
    return StateSpaceModel(A, B, C)
