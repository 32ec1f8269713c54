"""Sample-complexity lower bounds for identifying systems in a pole region.

Two Gaussian output models, the true plant and a surrogate built from
minimax poles and projected residues, are compared through their KL
divergence.  Its growth with the sample count gives a floor on how many
samples any method needs to tell them apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, DomainError, SingularityError, SizeError, UnsupportedRegion
from .hyperbolic import PoleRegion, tau_analytic
from .lti_core import (
    EnergyBudget,
    PartialFractionTF,
    StateSpaceModel,
    optimal_projection,
    pf_to_ss,
)
from .pole_select import SelectOptions, minimax_poles

TOEPLITZ_CAP = 2000


@dataclass
class HypothesisPair:
    G_true: PartialFractionTF
    G_surrogate: PartialFractionTF
    noise_cov: np.ndarray
    N: int

    def __post_init__(self):
        if self.G_true.dims != self.G_surrogate.dims:
            raise DimensionError("hypotheses must share input/output dimensions")
        if self.G_true.n != self.G_surrogate.n:
            raise DimensionError("surrogate must have as many poles as the true system")
        p = self.G_true.dims[0]
        self.noise_cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        if self.noise_cov.shape != (p, p):
            raise DimensionError("noise covariance must be p x p")
        if np.min(np.linalg.eigvalsh(self.noise_cov)) <= 0:
            raise DomainError("noise covariance must be positive definite")
        if self.N < 0:
            raise DomainError("N must be non-negative")


@dataclass(frozen=True)
class FloorResult:
    """Sample floor with the constants that produce it.

    ``growth_factor`` is the per-dimension factor ``tau^-2`` (analytic value
    where one exists); ``growth_factor_n`` is ``tau_n^-2`` from the finite
    minimax value at ``q = n``.
    """

    floor: float
    tau_n: float
    growth_factor: float
    growth_factor_n: float


def build_surrogate(G: PartialFractionTF, region: PoleRegion,
                    opts: SelectOptions = SelectOptions()) -> PartialFractionTF:
    """``n``-pole surrogate: minimax poles of ``region`` with optimally projected residues.

    Raises
    ------
    SingularityError
        When the minimax poles cluster (a disk with ``n >= 2`` puts them all at
        the centre) and the basis Gram matrix is singular.
    """
    pset, _ = minimax_poles(region, G.n, opts)
    try:
        coeffs, _ = optimal_projection(G, pset)
    except SingularityError as exc:
        raise SingularityError(f"minimax poles for n={G.n} cluster; surrogate basis is singular") from exc
    return PartialFractionTF(pset.array, coeffs)


def toeplitz_convolution_matrix(G: PartialFractionTF, N: int) -> np.ndarray:
    """Block lower-triangular map from ``u_0..u_{N-1}`` to ``y_1..y_N``."""
    if N > TOEPLITZ_CAP:
        raise SizeError(f"N={N} exceeds the dense cap of {TOEPLITZ_CAP}")
    p, m = G.dims
    H = G.markov(N)
    T = np.zeros((N * p, N * m), dtype=complex)
    for k in range(N):
        for i in range(k, N):
            j = i - k
            T[i * p:(i + 1) * p, j * m:(j + 1) * m] = H[k]
    return T


def _delta_markov(pair: HypothesisPair) -> np.ndarray:
    return pair.G_true.markov(pair.N) - pair.G_surrogate.markov(pair.N)


def kl_exact(pair: HypothesisPair, inputs: Optional[np.ndarray] = None) -> float:
    """KL divergence between the output laws of the two hypotheses.

    With ``inputs`` (shape ``(N, m)``) the divergence for that input record is
    returned.  Without, the expectation under unit white input, which reduces
    to ``1/2 sum_k (N - k + 1) tr(dH_k^H R^-1 dH_k)``.
    """
    if pair.N == 0:
        return 0.0
    Rinv = np.linalg.inv(pair.noise_cov)
    if inputs is None:
        dH = _delta_markov(pair)
        w = np.arange(pair.N, 0, -1)
        terms = np.einsum("kpm,pq,kqm->k", dH.conj(), Rinv, dH)
        return float(0.5 * np.real(np.sum(w * terms)))
    if pair.N > TOEPLITZ_CAP:
        raise SizeError(f"N={pair.N} exceeds the dense cap of {TOEPLITZ_CAP}")
    U = np.asarray(inputs, dtype=float).reshape(pair.N, -1)
    dy = _convolve(_delta_markov(pair), U)
    return float(0.5 * np.real(np.einsum("tp,pq,tq->", dy.conj(), Rinv, dy)))


def kl_dense(pair: HypothesisPair) -> float:
    """White-input expectation through the dense Toeplitz matrices."""
    if pair.N == 0:
        return 0.0
    dT = toeplitz_convolution_matrix(pair.G_true, pair.N) - \
        toeplitz_convolution_matrix(pair.G_surrogate, pair.N)
    W = np.kron(np.eye(pair.N), np.linalg.inv(pair.noise_cov))
    return float(0.5 * np.real(np.trace(dT.conj().T @ W @ dT)))


def _convolve(H: np.ndarray, U: np.ndarray) -> np.ndarray:
    # y_{t} = sum_{k=1}^{t} H_k u_{t-k}, rows t = 1..N
    N = U.shape[0]
    p = H.shape[1]
    Y = np.zeros((N, p), dtype=complex)
    for k in range(N):
        Y[k:] += U[:N - k] @ H[k].T
    return Y


def kl_expected_mc(pair: HypothesisPair, input_filter: Optional[StateSpaceModel] = None,
                   draws: int = 64, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo expected KL under coloured input ``u = H_u eps``.

    Returns ``(mean, standard_error)``.
    """
    rng = np.random.default_rng(seed)
    m = pair.G_true.dims[1]
    vals = []
    for _ in range(draws):
        if input_filter is None:
            U = rng.standard_normal((pair.N, m))
        else:
            eps = rng.standard_normal((pair.N, input_filter.dims[1]))
            U = _filter(input_filter, eps)
        vals.append(kl_exact(pair, U))
    vals = np.asarray(vals)
    se = float(vals.std(ddof=1) / math.sqrt(draws)) if draws > 1 else math.inf
    return float(vals.mean()), se


def _filter(sys: StateSpaceModel, eps: np.ndarray) -> np.ndarray:
    x = np.zeros(sys.n)
    out = np.empty((eps.shape[0], sys.dims[0]))
    for t, e in enumerate(eps):
        out[t] = np.real(sys.C @ x + sys.D @ e)
        x = sys.A @ x + sys.B @ e
    return out


def _tau_n(region: PoleRegion, n: int, opts: SelectOptions) -> float:
    """``tau_n^n``: the minimax worst-case product at ``q = n``."""
    _, rep = minimax_poles(region, n, opts)
    return rep.worst_case


def kl_bound(pair: HypothesisPair, budget: EnergyBudget, region: PoleRegion,
             psd_sup: float = 1.0, opts: SelectOptions = SelectOptions()) -> float:
    """Upper bound on the expected KL divergence, linear in ``N``.

    ``R_bar^2 ||R^-1|| sup Phi_u / (2 (1 - rho^2)) * tau_n^(2n) * N`` with the
    spectral norm of the inverse noise covariance.
    """
    if pair.N == 0:
        return 0.0
    worst = _tau_n(region, pair.G_true.n, opts)
    rinv = float(np.linalg.norm(np.linalg.inv(pair.noise_cov), 2))
    pref = budget.R_bar ** 2 * rinv * psd_sup / (2.0 * (1.0 - budget.rho_lambda ** 2))
    return pref * worst ** 2 * pair.N


def sample_complexity_floor(delta: float, budget: EnergyBudget, region: PoleRegion, n: int,
                            noise_cov=None, psd_sup: float = 1.0,
                            opts: SelectOptions = SelectOptions()) -> FloorResult:
    """Samples needed before the expected KL can exceed ``delta``."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    if n < 1:
        raise DomainError("n must be positive")
    cov = np.eye(1) if noise_cov is None else np.atleast_2d(noise_cov)
    rinv = float(np.linalg.norm(np.linalg.inv(cov), 2))
    worst = _tau_n(region, n, opts)
    tau_n = worst ** (1.0 / n)
    denom = budget.R_bar ** 2 * rinv * psd_sup
    floor = math.inf if denom == 0 or worst == 0 else \
        2.0 * delta * (1.0 - budget.rho_lambda ** 2) / denom / worst ** 2
    try:
        growth = tau_analytic(region) ** -2
    except UnsupportedRegion:
        growth = tau_n ** -2
    return FloorResult(floor, tau_n, growth, tau_n ** -2)


def extend_realization(G_surrogate, n_target: int) -> StateSpaceModel:
    """Realize the surrogate and pad it with decoupled zero states up to ``n_target``."""
    sys = pf_to_ss(G_surrogate) if isinstance(G_surrogate, PartialFractionTF) else G_surrogate
    r = sys.n
    if r > n_target:
        raise DimensionError(f"realized dimension {r} exceeds target {n_target}")
    pad = n_target - r
    if pad == 0:
        return sys
    p, m = sys.dims
    dtype = np.result_type(sys.A, sys.B, sys.C)
    A = np.zeros((n_target, n_target), dtype=dtype)
    A[:r, :r] = sys.A
    B = np.vstack([sys.B, np.zeros((pad, m), dtype=dtype)])
    C = np.hstack([sys.C, np.zeros((p, pad), dtype=dtype)])
    return StateSpaceModel(A, B, C, sys.D, sys.noise_cov)
