"""Model-agnostic Bures / quantum-Chernoff metrics of finite-dimensional states.

Everything here works from spectral data: eigenvalues ``p_n`` of a density
matrix, their first-order variations ``dp_n`` and the eigenvector couplings
``<n|dm>``. For thermal families the spectral data follow from the
Hamiltonian spectrum, see :func:`thermal_spectral_state`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .numerics import SymMat2

#: pairs (or single levels) whose weight falls below this are dropped
KERNEL_EPS = 1e-14

_STATE_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


class NegativeProbability(ValueError):
    pass


class DegenerateCoupling(ValueError):
    """Derivative coupling requested between two degenerate levels."""


@dataclass(frozen=True)
class SpectralState:
    """Eigenvalues of rho, their variation, and eigenvector couplings <n|dm>."""

    probs: np.ndarray
    d_probs: np.ndarray
    overlap_d: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        dp = np.asarray(self.d_probs, dtype=float)
        ov = np.asarray(self.overlap_d, dtype=complex)
        n = p.size
        if dp.shape != (n,) or ov.shape != (n, n):
            raise DimensionMismatch(
                f"probs {p.shape}, d_probs {dp.shape}, overlap_d {ov.shape}")
        if abs(p.sum() - 1) > _STATE_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        if abs(dp.sum()) > _STATE_TOL:
            raise ValueError(f"d_probs sum to {dp.sum()!r}, not 0")
        if np.max(np.abs(ov + ov.conj().T), initial=0.0) > _STATE_TOL:
            raise ValueError("overlap_d is not anti-Hermitian")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "d_probs", dp)
        object.__setattr__(self, "overlap_d", ov)


class BuresParts(NamedTuple):
    classical: float
    nonclassical: float

    @property
    def total(self) -> float:
        return self.classical + self.nonclassical


def _check_probs(p):
    if np.any(p < -_STATE_TOL):
        raise NegativeProbability(f"negative eigenvalue {p.min()!r}")
    return np.clip(p, 0.0, None)


def _fisher_rao(p, dp):
    keep = p >= KERNEL_EPS
    return 0.25 * float(np.sum(dp[keep] ** 2 / p[keep]))


def bures_parts(s: SpectralState) -> BuresParts:
    """Fisher-Rao (classical) and non-commutative contributions to ds^2.

    ds^2 = 1/4 sum dp_n^2/p_n + 1/2 sum_{n!=m} |<n|dm>|^2 (p_n-p_m)^2/(p_n+p_m)
    """
    p = _check_probs(s.probs)
    pn, pm = p[:, None], p[None, :]
    den = pn + pm
    w = np.abs(s.overlap_d) ** 2
    np.fill_diagonal(w, 0.0)
    keep = den >= KERNEL_EPS
    nc = 0.5 * np.sum(w[keep] * (pn - pm)[keep] ** 2 / den[keep])
    return BuresParts(_fisher_rao(p, s.d_probs), float(nc))


def bures_ds2(s: SpectralState) -> float:
    return bures_parts(s).total


def qcb_ds2(s: SpectralState) -> float:
    """Quantum-Chernoff-bound line element: Bures denominators p_n+p_m
    replaced by (sqrt p_n + sqrt p_m)^2."""
    p = _check_probs(s.probs)
    keep = p >= KERNEL_EPS
    classical = 0.125 * float(np.sum(s.d_probs[keep] ** 2 / p[keep]))
    r = np.sqrt(p)
    w = np.abs(s.overlap_d) ** 2
    np.fill_diagonal(w, 0.0)
    mask = (p[:, None] + p[None, :]) >= KERNEL_EPS
    # (p_n - p_m)^2 / (sqrt p_n + sqrt p_m)^2 == (sqrt p_n - sqrt p_m)^2
    nc = 0.5 * np.sum(w[mask] * ((r[:, None] - r[None, :]) ** 2)[mask])
    return classical + float(nc)


class DenseState:
    """Density matrix, optionally carrying its exact eigendecomposition.

    Supplying the spectrum (as :func:`gibbs_state` does) keeps tiny
    eigenvalues accurate to full relative precision, which the fidelity
    needs at low temperature.
    """

    def __init__(self, matrix, *, eigvals=None, eigvecs=None):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"not a square matrix: {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > _STATE_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > _STATE_TOL:
            raise ValueError(f"trace {np.trace(m).real!r} != 1")
        if eigvals is None:
            eigvals, eigvecs = np.linalg.eigh(m)
        eigvals = np.asarray(eigvals, dtype=float)
        if eigvals.min() < -_STATE_TOL:
            raise NegativeProbability(f"negative eigenvalue {eigvals.min()!r}")
        self.matrix = m
        self.eigvals = np.clip(eigvals, 0.0, None)
        self.eigvecs = np.asarray(eigvecs, dtype=complex)

    @classmethod
    def from_spectrum(cls, probs, vectors) -> "DenseState":
        p = np.asarray(probs, dtype=float)
        v = np.asarray(vectors, dtype=complex)
        m = (v * p) @ v.conj().T
        return cls(0.5 * (m + m.conj().T), eigvals=p, eigvecs=v)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def gibbs_weights(energies, beta: float) -> np.ndarray:
    e = np.asarray(energies, dtype=float)
    w = np.exp(-beta * (e - e.min()))
    return w / w.sum()


def gibbs_state(hamiltonian, beta: float) -> DenseState:
    e, v = np.linalg.eigh(np.asarray(hamiltonian))
    return DenseState.from_spectrum(gibbs_weights(e, beta), v)


def uhlmann_fidelity(rho: DenseState, sigma: DenseState) -> float:
    """F = tr sqrt(sqrt(rho) sigma sqrt(rho)).

    Evaluated as the trace norm of sqrt(rho) sqrt(sigma), i.e. the sum of
    singular values of diag(sqrt p) V_rho^+ V_sigma diag(sqrt q); this never
    takes square roots of rounding noise.
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"{rho.dim} vs {sigma.dim}")
    overlap = rho.eigvecs.conj().T @ sigma.eigvecs
    a = np.sqrt(rho.eigvals)[:, None] * overlap * np.sqrt(sigma.eigvals)[None, :]
    return float(np.linalg.svd(a, compute_uv=False).sum())


def bures_distance_sq(rho: DenseState, sigma: DenseState) -> float:
    """d_B^2 = 2 (1 - F) = min_U ||sqrt(rho) - sqrt(sigma) U||_F^2.

    The minimum is evaluated as the norm of the residual at the optimal
    unitary (orthogonal Procrustes), so nearby states keep full relative
    precision instead of losing it to the cancellation in 1 - F.
    """
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"{rho.dim} vs {sigma.dim}")
    # work in rho's eigenbasis: sqrt(rho) -> diag(sqrt p)
    sp = np.sqrt(rho.eigvals)
    b = (rho.eigvecs.conj().T @ sigma.eigvecs) * np.sqrt(sigma.eigvals)[None, :]
    x, _, yh = np.linalg.svd(sp[:, None] * b)
    w = yh.conj().T @ x.conj().T
    resid = np.diag(sp) - b @ w
    return float(np.sum(np.abs(resid) ** 2))


def fidelity_line_element(state_at: Callable[[np.ndarray], DenseState], x,
                          direction, delta: float = 1e-3) -> float:
    """Finite-difference estimate of g(u, u) from the exact fidelity.

    Uses the symmetric separation D(d) = d_B^2(x - d u/2, x + d u/2)/d^2,
    which is even in d, and one Richardson step (4 D(d/2) - D(d))/3.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(direction, dtype=float))

    def quotient(d):
        lo = state_at(x - 0.5 * d * u)
        hi = state_at(x + 0.5 * d * u)
        return bures_distance_sq(lo, hi) / (d * d)

    return (4.0 * quotient(0.5 * delta) - quotient(delta)) / 3.0


class ThermalFamily:
    """Gibbs states rho(lambda) = exp(-beta H(lambda))/Z via spectral data.

    ``energies``, ``d_energies`` and ``d_couplings`` are callables of the
    parameter; ``d_couplings(lam)[n, m] = <n|dH|m>/(E_n - E_m)``. When a dense
    ``hamiltonian`` callable is supplied, :meth:`state` builds the explicit
    density matrix for fidelity checks.
    """

    def __init__(self, energies, d_energies, d_couplings, beta: float,
                 hamiltonian: Callable[[float], np.ndarray] | None = None):
        if not (np.isfinite(beta) and beta > 0):
            raise ValueError(f"beta must be finite and positive, got {beta}")
        self.energies = energies
        self.d_energies = d_energies
        self.d_couplings = d_couplings
        self.beta = float(beta)
        self.hamiltonian = hamiltonian

    @classmethod
    def from_hamiltonian(cls, hamiltonian: Callable[[float], np.ndarray],
                         d_hamiltonian: Callable[[float], np.ndarray],
                         beta: float, degeneracy_tol: float = 1e-10):
        cache = {}

        def decompose(lam):
            if lam not in cache:
                e, v = np.linalg.eigh(hamiltonian(lam))
                dh = v.conj().T @ np.asarray(d_hamiltonian(lam)) @ v
                cache.clear()
                cache[lam] = (e, dh)
            return cache[lam]

        def couplings(lam):
            e, dh = decompose(lam)
            gap = e[:, None] - e[None, :]
            degenerate = np.abs(gap) < degeneracy_tol
            np.fill_diagonal(degenerate, False)
            if np.any(np.abs(dh[degenerate]) > degeneracy_tol):
                raise DegenerateCoupling(
                    "dH couples degenerate levels; lift the degeneracy first")
            with np.errstate(divide="ignore", invalid="ignore"):
                c = np.where(np.abs(gap) < degeneracy_tol, 0.0, dh / gap)
            return c

        return cls(lambda lam: decompose(lam)[0],
                   lambda lam: np.real(np.diag(decompose(lam)[1])),
                   couplings, beta, hamiltonian=hamiltonian)

    def with_beta(self, beta: float) -> "ThermalFamily":
        return ThermalFamily(self.energies, self.d_energies, self.d_couplings,
                             beta, self.hamiltonian)

    def state(self, lam: float, beta: float | None = None) -> DenseState:
        if self.hamiltonian is None:
            raise ValueError("family has no dense Hamiltonian")
        return gibbs_state(self.hamiltonian(lam), self.beta if beta is None else beta)


def thermal_spectral_state(f: ThermalFamily, lam: float) -> SpectralState:
    """Spectral data of the Gibbs state at ``lam`` for a variation of ``lam``.

    dp_i = -beta p_i (dE_i - <dE>),  <i|dj> = <i|dH|j>/(E_i - E_j).
    """
    e = np.asarray(f.energies(lam), dtype=float)
    de = np.asarray(f.d_energies(lam), dtype=float)
    p = gibbs_weights(e, f.beta)
    dp = -f.beta * p * (de - p @ de)
    c = np.array(f.d_couplings(lam), dtype=complex)
    np.fill_diagonal(c, 0.0)
    if not np.all(np.isfinite(c)):
        raise DegenerateCoupling("non-finite derivative coupling")
    return SpectralState(p, dp, c)


class ThermalBlocks(NamedTuple):
    """Metric components in (lambda, beta) coordinates.

    The line element is g_hh dl^2 + 2 g_hb dl dbeta + g_bb dbeta^2 with
    g_hh = g_hh_c + g_hh_nc.
    """

    g_bb: float
    g_hb: float
    g_hh_c: float
    g_hh_nc: float

    def to_hT(self, beta: float) -> SymMat2:
        # dbeta = -beta^2 dT
        return SymMat2(self.g_hh_c + self.g_hh_nc,
                       -beta ** 2 * self.g_hb,
                       beta ** 4 * self.g_bb)


def thermal_blocks(f: ThermalFamily, lam: float) -> ThermalBlocks:
    s = thermal_spectral_state(f, lam)
    e = np.asarray(f.energies(lam), dtype=float)
    de = np.asarray(f.d_energies(lam), dtype=float)
    p = s.probs
    e0 = e - p @ e
    d0 = de - p @ de
    b = f.beta
    return ThermalBlocks(
        g_bb=0.25 * float(p @ (e0 * e0)),
        g_hb=0.25 * b * float(p @ (e0 * d0)),
        g_hh_c=0.25 * b * b * float(p @ (d0 * d0)),
        g_hh_nc=bures_parts(s).nonclassical,
    )


def thermal_metric_2x2(f: ThermalFamily, lam: float) -> SymMat2:
    """Bures metric of the thermal family in (lambda, T) coordinates."""
    return thermal_blocks(f, lam).to_hT(f.beta)
