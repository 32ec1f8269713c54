"""Transfer-function algebra in partial-fraction and state-space form.

H2 inner products of the rational functions ``1/(z - a)`` and ``1/(z - b)``
equal ``1 / (1 - a conj(b))``; every Gram, projection and norm computation
below is built from that kernel.  The module also realizes partial
fractions as state-space models, simulates closed loops and evaluates
input spectra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .errors import (
    DegenerateError,
    DimensionError,
    DomainError,
    InstabilityError,
    NumericalError,
    SingularityError,
)
from .hyperbolic import pseudo_metric

POLE_SEPARATION = 1e-10


def _poles_of(mus) -> np.ndarray:
    # accepts a PoleSet or any array-like of poles
    if hasattr(mus, "poles"):
        return np.asarray(mus.poles, dtype=complex)
    return np.asarray(mus, dtype=complex).ravel()


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kernel matrix ``[1 / (1 - a_j conj(b_k))]``."""
    return 1.0 / (1.0 - np.outer(a, np.conj(b)))


# -- domain types -------------------------------------------------------------------------


@dataclass
class PartialFractionTF:
    """``G(z) = sum_j R_j / (z - lambda_j)`` with distinct stable poles.

    ``residues`` has shape ``(n, p, m)``.
    """

    poles: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=complex).ravel()
        res = np.asarray(self.residues, dtype=complex)
        if res.ndim == 1:
            res = res.reshape(-1, 1, 1)
        if res.ndim != 3 or res.shape[0] != self.poles.size:
            raise DimensionError("residues must have shape (n, p, m) matching the poles")
        self.residues = res
        if np.any(np.abs(self.poles) >= 1.0):
            raise InstabilityError("all poles must lie strictly inside the unit disk")
        n = self.poles.size
        if n > 1:
            j, k = np.triu_indices(n, 1)
            if np.min(np.abs(self.poles[j] - self.poles[k])) <= POLE_SEPARATION:
                raise DomainError("poles must be pairwise distinct")

    @property
    def n(self) -> int:
        return self.poles.size

    @property
    def dims(self) -> tuple[int, int]:
        return self.residues.shape[1], self.residues.shape[2]

    def markov(self, count: int) -> np.ndarray:
        """Impulse-response matrices ``H_1 .. H_count``, shape ``(count, p, m)``."""
        k = np.arange(count)
        powers = self.poles[None, :] ** k[:, None]
        return np.einsum("kj,jpm->kpm", powers, self.residues)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        w = 1.0 / (z[..., None] - self.poles)
        return np.einsum("...j,jpm->...pm", w, self.residues)

    def to_dict(self) -> dict:
        return {
            "poles": [[p.real, p.imag] for p in self.poles],
            "residues": _cplx_to_json(self.residues),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartialFractionTF":
        return cls(_json_to_cplx(data["poles"]), _json_to_cplx(data["residues"]))


@dataclass
class StateSpaceModel:
    """``x_{t+1} = A x_t + B u_t``, ``y_t = C x_t + D u_t + v_t`` with ``v_t ~ N(0, noise_cov)``.

    Stability is not enforced on construction because identified models
    may be unstable; use :meth:`spectral_radius` or :meth:`is_stable`.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None
    noise_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A))
        self.B = np.atleast_2d(np.asarray(self.B))
        self.C = np.atleast_2d(np.asarray(self.C))
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape[0] != n or self.C.shape[1] != n:
            raise DimensionError("inconsistent state-space dimensions")
        p, m = self.C.shape[0], self.B.shape[1]
        if self.D is None:
            self.D = np.zeros((p, m))
        self.D = np.atleast_2d(np.asarray(self.D))
        if self.D.shape != (p, m):
            raise DimensionError("D must be p x m")
        if self.noise_cov is None:
            self.noise_cov = np.eye(p)
        self.noise_cov = np.atleast_2d(np.asarray(self.noise_cov, dtype=float))
        cov = self.noise_cov
        if cov.shape != (p, p) or not np.allclose(cov, cov.T):
            raise DomainError("noise covariance must be symmetric p x p")
        if np.min(np.linalg.eigvalsh(cov)) <= 0:
            raise DomainError("noise covariance must be positive definite")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        return self.C.shape[0], self.B.shape[1]

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A)))) if self.n else 0.0

    def is_stable(self) -> bool:
        return self.spectral_radius() < 1.0

    def markov(self, count: int) -> np.ndarray:
        """``H_k = C A^{k-1} B`` for ``k = 1 .. count``."""
        p, m = self.dims
        out = np.empty((count, p, m), dtype=np.result_type(self.A, self.B, self.C))
        AkB = self.B
        for k in range(count):
            out[k] = self.C @ AkB
            AkB = self.A @ AkB
        return out

    def freq_response(self, z) -> np.ndarray:
        """``C (zI - A)^{-1} B + D`` at each point of ``z``; shape ``(len(z), p, m)``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = self.n
        if n == 0:
            return np.broadcast_to(self.D, (z.size,) + self.D.shape).astype(complex)
        M = z[:, None, None] * np.eye(n) - self.A
        X = np.linalg.solve(M, np.broadcast_to(self.B, (z.size,) + self.B.shape))
        return self.C @ X + self.D

    def to_dict(self) -> dict:
        return {
            "A": _cplx_to_json(self.A),
            "B": _cplx_to_json(self.B),
            "C": _cplx_to_json(self.C),
            "D": _cplx_to_json(self.D),
            "noise_cov": self.noise_cov.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StateSpaceModel":
        D = _json_to_cplx(data["D"]) if "D" in data else None
        cov = np.asarray(data["noise_cov"], dtype=float) if "noise_cov" in data else None
        return cls(_real_if_close(_json_to_cplx(data["A"])),
                   _real_if_close(_json_to_cplx(data["B"])),
                   _real_if_close(_json_to_cplx(data["C"])),
                   None if D is None else _real_if_close(D), cov)


@dataclass
class GramMatrices:
    """H2 inner products between system poles ``lambda`` and basis poles ``mu``.

    ``Xi_mumu`` is the scalar Gram ``[1/(1 - mu_j conj(mu_k))]`` tensored with
    ``I_m``; ``p_lambda_mu[j]`` is the row ``[1/(1 - lambda_j conj(mu_k))]_k``;
    ``phi_lambda`` is the matrix ``[1/(1 - lambda_j conj(lambda_k))]`` whose
    diagonal holds ``1/(1 - |lambda_j|^2)``.
    """

    Xi_mumu: np.ndarray
    p_lambda_mu: np.ndarray
    phi_lambda: np.ndarray

    @classmethod
    def build(cls, lambdas, mus, m: int = 1) -> "GramMatrices":
        lam = np.asarray(lambdas, dtype=complex).ravel()
        mu = _poles_of(mus)
        return cls(gram_matrix(mu, m), _cauchy(lam, mu), _cauchy(lam, lam))


@dataclass(frozen=True)
class EnergyBudget:
    """Constants of the bias bound: residue mass, pole radius and input PSD ratio."""

    R_bar: float
    rho_lambda: float
    psd_ratio: float = 1.0

    def __post_init__(self):
        if self.R_bar < 0:
            raise DomainError("R_bar must be non-negative")
        if not 0.0 <= self.rho_lambda < 1.0:
            raise DomainError("rho_lambda must be in [0, 1)")
        if not self.psd_ratio >= 1.0 or not math.isfinite(self.psd_ratio):
            raise DomainError("psd_ratio must be finite and at least 1")

    @classmethod
    def from_tf(cls, tf: PartialFractionTF, psd: tuple[float, float] = (1.0, 1.0)) -> "EnergyBudget":
        sup, inf = psd
        if inf <= 0:
            raise DegenerateError("input spectrum has zero infimum; bound is infinite")
        norms = np.linalg.norm(tf.residues, axis=(1, 2))
        return cls(float(norms.sum()), float(np.max(np.abs(tf.poles))), float(sup / inf))


# -- H2 geometry --------------------------------------------------------------------------


def gram_matrix(poles, m: int = 1) -> np.ndarray:
    """Gram matrix ``[1 / (1 - mu_j conj(mu_k))] (x) I_m`` of the bases ``1/(z - mu_k)``."""
    mu = _poles_of(poles)
    if np.any(np.abs(mu) >= 1.0):
        raise DomainError("poles must lie strictly inside the unit disk")
    if mu.size > 1:
        j, k = np.triu_indices(mu.size, 1)
        if np.min(np.abs(mu[j] - mu[k])) <= 1e-12:
            raise SingularityError("coincident poles make the Gram matrix singular")
    return np.kron(_cauchy(mu, mu), np.eye(m))


def _residue_traces(residues: np.ndarray) -> np.ndarray:
    # T[j, k] = tr(R_j R_k^H)
    flat = residues.reshape(residues.shape[0], -1)
    return flat @ flat.conj().T


def h2_norm(tf: PartialFractionTF) -> float:
    """H2 norm from the Gram matrix of the system's own poles."""
    if tf.n == 0:
        return 0.0
    # many clustered poles make phi numerically indefinite, yet the form stays accurate
    phi = _cauchy(tf.poles, tf.poles)
    terms = _residue_traces(tf.residues) * phi
    val = float(np.real(np.sum(terms)))
    if val < -1e-12 * max(1.0, float(np.sum(np.abs(terms)))):
        raise NumericalError("quadratic form is negative; poles too close to resolve")
    return math.sqrt(max(val, 0.0))


def _cholesky_lower(M: np.ndarray) -> np.ndarray:
    # plain Cholesky that works in any numpy precision
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        d = M[j, j] - np.sum(np.abs(L[j, :j]) ** 2)
        if not d.real > 0:
            raise SingularityError("basis Gram matrix is not positive definite")
        L[j, j] = np.sqrt(d.real)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def _forward_solve(L: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X = np.zeros_like(Y)
    for i in range(L.shape[0]):
        X[i] = (Y[i] - L[i, :i] @ X[:i]) / L[i, i]
    return X


def _bordered_schur(lam: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """``Phi - P Xi^{-1} P^H`` through a Cholesky factor of the basis Gram.

    With triangular solves the absolute error stays near unit roundoff times
    the diagonal of ``Phi`` whatever the conditioning of ``Xi``; extended
    precision (where the platform has it) removes most of what is left, which
    matters when the error is tiny and only its square root is reported.
    """
    ext = np.clongdouble
    lam_e, mu_e = lam.astype(ext), mu.astype(ext)
    M = 1 / (1 - np.outer(mu_e, mu_e.conj()))
    P = 1 / (1 - np.outer(lam_e, mu_e.conj()))
    Phi = 1 / (1 - np.outer(lam_e, lam_e.conj()))
    W = _forward_solve(_cholesky_lower(M), P.conj().T)
    return (Phi - W.conj().T @ W).astype(complex)


def optimal_projection(G: PartialFractionTF, mus) -> tuple[np.ndarray, float]:
    """Best H2 approximation of ``G`` in the span of ``1/(z - mu_k)``.

    Parameters
    ----------
    G : PartialFractionTF
    mus : PoleSet or array_like
        Distinct basis poles.

    Returns
    -------
    coeffs : ndarray, shape (q, p, m)
        Optimal residue matrices.
    bias : float
        H2 norm of the approximation error.
    """
    mu = _poles_of(mus)
    M = gram_matrix(mu, 1)
    ev = np.linalg.eigvalsh(M)
    if ev[0] <= 0 or ev[-1] / ev[0] > 1e14:
        raise SingularityError("basis Gram matrix is numerically singular")
    P = _cauchy(G.poles, mu)
    cf = linalg.cho_factor(M, lower=True)
    # C = P M^{-1}; coefficient k mixes the residues with weights C[:, k]
    Cw = linalg.cho_solve(cf, P.conj().T).conj().T
    coeffs = np.einsum("jk,jpm->kpm", Cw, G.residues)
    S = _bordered_schur(G.poles, mu)
    bias2 = float(np.real(np.sum(_residue_traces(G.residues) * S)))
    return coeffs, math.sqrt(max(bias2, 0.0))


def projection_bias(G: PartialFractionTF, mus) -> float:
    """H2 error of the best approximation of ``G`` by the basis, without a solve.

    The residual of ``1/(z - lambda)`` after projection has inner products
    ``b(lambda_j) conj(b(lambda_k)) / (1 - lambda_j conj(lambda_k))`` with
    ``b`` the Blaschke product vanishing at the basis poles, so the error
    stays accurate when the basis Gram matrix is too ill-conditioned to
    factor.
    """
    mu = _poles_of(mus)
    lam = G.poles
    b = np.ones(lam.size, dtype=complex)
    for m in mu:
        b *= (lam - m) / (1.0 - np.conj(m) * lam)
    S = _cauchy(lam, lam) * np.outer(b, b.conj())
    val = float(np.real(np.sum(_residue_traces(G.residues) * S)))
    return math.sqrt(max(val, 0.0))


def scalar_error_closed_form(lam: complex, mus) -> float:
    """Relative error of the best approximation of ``1/(z - lam)``: ``prod_k [lam, mu_k]_h``."""
    mu = _poles_of(mus)
    if mu.size == 0:
        return 1.0
    return float(np.prod(pseudo_metric(complex(lam), mu)))


def bias_upper_bound(G: PartialFractionTF, mus, budget: EnergyBudget) -> tuple[float, float]:
    """Per-pole (``tight``) and uniform (``loose``) bounds on the projection bias."""
    mu = _poles_of(mus)
    pref = 1.0 + budget.psd_ratio
    prods = np.array([scalar_error_closed_form(l, mu) for l in G.poles])
    norms = np.linalg.norm(G.residues, axis=(1, 2))
    tight = pref * float(np.sum(norms / np.sqrt(1.0 - np.abs(G.poles) ** 2) * prods))
    loose = pref * budget.R_bar / math.sqrt(1.0 - budget.rho_lambda ** 2) * float(np.max(prods))
    return tight, loose


def h2_distance(G: PartialFractionTF, coeffs, mus) -> float:
    """``||G - sum_k coeffs_k / (z - mu_k)||_2`` via the joint Gram matrix."""
    mu = _poles_of(mus)
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim == 1:
        coeffs = coeffs.reshape(-1, 1, 1)
    poles = np.concatenate([G.poles, mu])
    res = np.concatenate([G.residues, -coeffs], axis=0)
    K = _cauchy(poles, poles)
    val = float(np.real(np.sum(_residue_traces(res) * K)))
    return math.sqrt(max(val, 0.0))


def h2_norm_ss(sys: StateSpaceModel) -> float:
    """H2 norm of a state-space model from its controllability Gramian; ``inf`` if unstable."""
    if sys.n and not sys.is_stable():
        return math.inf
    d2 = float(np.real(np.sum(np.abs(sys.D) ** 2)))
    if sys.n == 0:
        return math.sqrt(d2)
    P = linalg.solve_discrete_lyapunov(sys.A, sys.B @ sys.B.conj().T)
    val = float(np.real(np.trace(sys.C @ P @ sys.C.conj().T))) + d2
    return math.sqrt(max(val, 0.0))


def h2_distance_ss(a: StateSpaceModel, b: StateSpaceModel) -> float:
    """H2 norm of ``a - b`` via the parallel difference system."""
    A = linalg.block_diag(a.A, b.A)
    B = np.vstack([a.B, b.B])
    C = np.hstack([a.C, -b.C])
    return h2_norm_ss(StateSpaceModel(A, B, C, a.D - b.D))


# -- realizations -------------------------------------------------------------------------


def pf_to_ss(G: PartialFractionTF, rank_tol: float = 1e-12) -> StateSpaceModel:
    """Diagonal realization with one state per singular direction of each residue."""
    p, m = G.dims
    real = np.all(G.poles.imag == 0) and np.all(G.residues.imag == 0)
    poles = G.poles.real if real else G.poles
    residues = G.residues.real if real else G.residues
    a_diag, B_rows, C_cols = [], [], []
    for lam, R in zip(poles, residues):
        U, s, Vh = np.linalg.svd(R)
        if s.size == 0 or s[0] == 0:
            continue
        r = int(np.sum(s >= rank_tol * s[0]))
        root = np.sqrt(s[:r])
        C_cols.append(U[:, :r] * root)
        B_rows.append(root[:, None] * Vh[:r])
        a_diag.extend([lam] * r)
    if not a_diag:
        return StateSpaceModel(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)))
    return StateSpaceModel(np.diag(a_diag), np.vstack(B_rows), np.hstack(C_cols))


def ss_to_pf(sys: StateSpaceModel, merge_tol: float = 1e-8) -> PartialFractionTF:
    """Partial fractions of a diagonalizable state-space model."""
    w, V = np.linalg.eig(sys.A)
    if sys.n and np.linalg.cond(V) > 1e10:
        raise DegenerateError("state matrix is defective or nearly so")
    Bt = np.linalg.solve(V, sys.B)
    Ct = sys.C @ V
    poles: list[complex] = []
    residues: list[np.ndarray] = []
    for i in np.argsort(-np.abs(w), kind="stable"):
        R = np.outer(Ct[:, i], Bt[i, :])
        for j, lam in enumerate(poles):
            if abs(lam - w[i]) <= merge_tol:
                residues[j] = residues[j] + R
                break
        else:
            poles.append(complex(w[i]))
            residues.append(R)
    p, m = sys.dims
    res = np.array(residues) if residues else np.zeros((0, p, m), dtype=complex)
    return PartialFractionTF(np.array(poles, dtype=complex), res)


# -- simulation ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Input/output record: ``u[t]`` is ``u_t`` for t = 0..N-1 and ``y[t]`` is ``y_{t+1}``."""

    u: np.ndarray
    y: np.ndarray
    seed: int = 0
    system_tag: str = ""

    def __post_init__(self):
        self.u = np.asarray(self.u)
        self.y = np.asarray(self.y)
        if self.u.ndim == 1:
            self.u = self.u[:, None]
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.u.shape[0] != self.y.shape[0]:
            raise DimensionError("u and y must have the same number of samples")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.y))):
            raise DomainError("trajectory contains non-finite samples")

    @property
    def N(self) -> int:
        return self.u.shape[0]


def _closed_loop_matrix(plant: StateSpaceModel, Gu: Optional[StateSpaceModel],
                        Hu: Optional[StateSpaceModel]) -> np.ndarray:
    A, B, C = plant.A, plant.B, plant.C
    blocks_n = [plant.n, Gu.n if Gu else 0, Hu.n if Hu else 0]
    n_tot = sum(blocks_n)
    Acl = np.zeros((n_tot, n_tot), dtype=np.result_type(A, B, C, complex))
    n0, n1 = blocks_n[0], blocks_n[0] + blocks_n[1]
    Acl[:n0, :n0] = A
    if Gu is not None:
        Acl[:n0, :n0] += B @ Gu.D @ C
        Acl[:n0, n0:n1] = B @ Gu.C
        Acl[n0:n1, :n0] = Gu.B @ C
        Acl[n0:n1, n0:n1] = Gu.A
    if Hu is not None:
        Acl[:n0, n1:] = B @ Hu.C
        Acl[n1:, n1:] = Hu.A
    return Acl


def closed_loop_spectral_radius(plant, controller=None) -> float:
    Gu, Hu = controller if controller is not None else (None, None)
    Acl = _closed_loop_matrix(plant, Gu, Hu)
    return float(np.max(np.abs(np.linalg.eigvals(Acl)))) if Acl.size else 0.0


def simulate_closed_loop(plant: StateSpaceModel, controller=None, N: int = 1000,
                         seed: int = 0, noise_std: float = 1.0, probe_std: float = 1.0,
                         probe: Optional[np.ndarray] = None,
                         noise_model: Optional[StateSpaceModel] = None,
                         system_tag: str = "") -> Trajectory:
    """Simulate ``y_t = G u_t + v_t`` under ``u_t = G_u y_t + H_u eps_t`` from rest.

    Parameters
    ----------
    plant : StateSpaceModel
        Strictly proper plant; ``noise_cov`` shapes white output noise.
    controller : (G_u, H_u) or None
        Either entry may be None.  ``None`` means open loop ``u_t = eps_t``.
    N : int
        Number of samples.
    seed : int
        Seed of the generator drawing ``e_t`` and ``eps_t``.
    noise_std, probe_std : float
        Scale factors for the output noise and the probing signal.
    probe : ndarray, optional
        Explicit ``eps`` sequence (``N x m_eps``) overriding the random one.
    noise_model : StateSpaceModel, optional
        Colouring filter ``H`` driven by unit white noise; replaces ``noise_cov``.

    Returns
    -------
    Trajectory
    """
    if N < 1:
        raise DomainError("N must be positive")
    if np.any(plant.D != 0):
        raise DomainError("plant must be strictly proper")
    Gu, Hu = controller if controller is not None else (None, None)
    rho = closed_loop_spectral_radius(plant, (Gu, Hu))
    if rho >= 1.0 - 1e-9:
        raise InstabilityError(f"closed loop spectral radius {rho:.6g} is not below 1")
    if noise_model is not None and noise_model.n and not noise_model.is_stable():
        raise InstabilityError("noise model is unstable")

    rng = np.random.default_rng(seed)
    p, m = plant.dims
    m_eps = Hu.dims[1] if Hu is not None else m
    if Hu is None and Gu is not None:
        m_eps = m
    p_e = noise_model.dims[1] if noise_model is not None else p
    e = rng.standard_normal((N + 1, p_e)) * noise_std
    eps = rng.standard_normal((N, m_eps)) * probe_std
    if probe is not None:
        eps = np.asarray(probe, dtype=float).reshape(N, -1)
    Lv = np.linalg.cholesky(plant.noise_cov)

    cplx = np.iscomplexobj(plant.A) or np.iscomplexobj(plant.B) or np.iscomplexobj(plant.C)
    dtype = complex if cplx else float
    x = np.zeros(plant.n, dtype=dtype)
    xi = np.zeros(Gu.n if Gu else 0)
    eta = np.zeros(Hu.n if Hu else 0)
    zeta = np.zeros(noise_model.n if noise_model else 0)
    u_rec = np.zeros((N, m), dtype=dtype)
    y_rec = np.zeros((N, p), dtype=dtype)
    for t in range(N + 1):
        if noise_model is not None:
            v = noise_model.C @ zeta + noise_model.D @ e[t]
            zeta = noise_model.A @ zeta + noise_model.B @ e[t]
        else:
            v = Lv @ e[t]
        y = plant.C @ x + v
        if t >= 1:
            y_rec[t - 1] = y
        if t == N:
            break
        if Hu is not None:
            u = Hu.C @ eta + Hu.D @ eps[t]
            eta = Hu.A @ eta + Hu.B @ eps[t]
        else:
            u = eps[t].astype(dtype)
        if Gu is not None:
            u = u + Gu.C @ xi + Gu.D @ y
            xi = Gu.A @ xi + Gu.B @ y
        u_rec[t] = u
        x = plant.A @ x + plant.B @ u
    return Trajectory(u_rec, y_rec, seed, system_tag)


def psd_bounds(input_model=None, n_grid: int = 4096) -> tuple[float, float]:
    """Extremes over frequency of the spectral norm of the input spectrum.

    ``input_model`` is ``None`` (white input) or ``(G_u, H_u, plant)`` where
    ``G_u`` may be None for open loop.  The plant noise spectrum is taken from
    ``plant.noise_cov``.
    """
    if input_model is None:
        return 1.0, 1.0
    Gu, Hu, plant = input_model
    rho = closed_loop_spectral_radius(plant, (Gu, Hu))
    if rho >= 1.0 - 1e-9:
        raise InstabilityError("closed loop is not stable")
    z = np.exp(2j * np.pi * np.arange(n_grid) / n_grid)
    p, m = plant.dims
    Hz = Hu.freq_response(z) if Hu is not None else np.broadcast_to(np.eye(m), (n_grid, m, m))
    drive = Hz @ Hz.conj().transpose(0, 2, 1)
    if Gu is not None:
        Gz = plant.freq_response(z)
        Guz = Gu.freq_response(z)
        S = np.linalg.inv(np.eye(m) - Guz @ Gz)
        drive = drive + Guz @ plant.noise_cov @ Guz.conj().transpose(0, 2, 1)
        phi = S @ drive @ S.conj().transpose(0, 2, 1)
    else:
        phi = drive
    norms = np.linalg.norm(phi, ord=2, axis=(1, 2))
    sup, inf = float(np.max(norms)), float(np.min(norms))
    if inf <= 1e-14 * sup:
        raise DegenerateError("input spectrum vanishes at some frequency")
    return sup, inf


# -- JSON helpers -------------------------------------------------------------------------


def _cplx_to_json(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _json_to_cplx(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return arr.astype(complex)
    return arr[..., 0] + 1j * arr[..., 1]


def _real_if_close(arr: np.ndarray) -> np.ndarray:
    return arr.real.copy() if np.all(arr.imag == 0) else arr
