"""Bures metric of quasi-free fermion Gibbs states.

A :class:`ModeSystem` lists Bogoliubov pairs (nu, -nu); each pair spans the
four states |0~>, |01>, |10>, |1~> with energies 0, L, L, 2L, where
|0~> = cos(t/2)|00> - sin(t/2)|11> and |1~> = cos(t/2)|11> + sin(t/2)|00>.
Only the pair angle t and the quasiparticle energy L depend on the
parameter h.

The finite mode sums below are exact for such systems (they are checked
against :mod:`thermobures.metric` on the explicit many-body Gibbs state).
:func:`thermodynamic_components` gives the per-site momentum integrals of a
translation-invariant dispersion.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .metric import ThermalBlocks, ThermalFamily, fidelity_line_element, thermal_blocks
from .numerics import NonConvergence, QuadratureSpec, SymMat2, integrate

QuadratureFailure = NonConvergence

MAX_DENSE_MODES = 6


class TooManyModes(ValueError):
    pass


@dataclass(frozen=True)
class ModeSystem:
    """Per-pair quasiparticle energies and their h-derivatives.

    ``theta`` only fixes the many-body basis of :func:`dense_from_modes`; no
    metric component depends on it.
    """

    Lambda: np.ndarray
    dLambda: np.ndarray
    dtheta: np.ndarray
    beta: float
    theta: np.ndarray | None = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.Lambda, dtype=float))
        dl = np.atleast_1d(np.asarray(self.dLambda, dtype=float))
        dt = np.atleast_1d(np.asarray(self.dtheta, dtype=float))
        th = np.zeros_like(lam) if self.theta is None else np.atleast_1d(
            np.asarray(self.theta, dtype=float))
        if not (lam.shape == dl.shape == dt.shape == th.shape) or lam.ndim != 1:
            raise ValueError("mode arrays must be 1-D and of equal length")
        if np.any(lam <= 0):
            raise ValueError("quasiparticle energies must be positive")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        for name, v in (("Lambda", lam), ("dLambda", dl), ("dtheta", dt), ("theta", th)):
            object.__setattr__(self, name, v)

    @property
    def n_modes(self) -> int:
        return self.Lambda.size


class ClassicalBlock(NamedTuple):
    """(h, beta)-coordinate Fisher-Rao components; cross term enters as
    2 g_hb dh dbeta."""

    g_bb: float
    g_hb: float
    g_hh_c: float


def occupation_variance(x):
    """<n>(1 - <n>) for a fermion level at beta*Lambda = x."""
    x = np.abs(np.asarray(x, dtype=float))
    e = np.exp(-x)
    return e / (1.0 + e) ** 2


def one_minus_sech(x):
    """(cosh x - 1)/cosh x without cancellation at small x or overflow at large x."""
    x = np.abs(np.asarray(x, dtype=float))
    small = np.minimum(x, 1.0)
    big = np.maximum(x, 1.0)
    e = np.exp(-2.0 * big)
    return np.where(x < 1.0,
                    2.0 * np.sinh(0.5 * small) ** 2 / np.cosh(small),
                    1.0 - 2.0 * np.exp(-big) / (1.0 + e))


def sech(x):
    e = np.exp(-np.abs(np.asarray(x, dtype=float)))
    return 2.0 * e / (1.0 + e * e)


def inv_cosh_plus_one(x):
    """1/(cosh x + 1), overflow-free."""
    return 2.0 * occupation_variance(x)


def classical_block(ms: ModeSystem) -> ClassicalBlock:
    """Fisher-Rao part of the metric; both fermions of each pair contribute."""
    b = ms.beta
    w = 2.0 * occupation_variance(b * ms.Lambda)
    return ClassicalBlock(
        g_bb=0.25 * float(np.sum(w * ms.Lambda ** 2)),
        g_hb=0.25 * b * float(np.sum(w * ms.Lambda * ms.dLambda)),
        g_hh_c=0.25 * b * b * float(np.sum(w * ms.dLambda ** 2)),
    )


def nonclassical_hh(ms: ModeSystem) -> float:
    """1/4 sum_nu (1 - sech(beta L_nu)) (dtheta_nu)^2."""
    return 0.25 * float(np.sum(one_minus_sech(ms.beta * ms.Lambda) * ms.dtheta ** 2))


def mode_blocks(ms: ModeSystem) -> ThermalBlocks:
    c = classical_block(ms)
    return ThermalBlocks(c.g_bb, c.g_hb, c.g_hh_c, nonclassical_hh(ms))


def mode_metric(ms: ModeSystem) -> SymMat2:
    """Extensive 2x2 metric of the mode system in (h, T) coordinates."""
    if ms.beta <= 0:
        raise ValueError("(h, T) coordinates need beta > 0")
    return mode_blocks(ms).to_hT(ms.beta)


# pair basis |00>, |01>, |10>, |11>; occupation count of each eigenstate
_PAIR_COUNT = np.array([0, 1, 1, 2])


def _pair_hamiltonian(lam, theta):
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    up = np.array([s, 0, 0, c])  # |1~>
    h = np.diag([0.0, lam, lam, 0.0])
    return h + 2 * lam * np.outer(up, up)


def dense_from_modes(ms: ModeSystem, h_perturbation=None) -> ThermalFamily:
    """Explicit many-body thermal family of the mode system.

    The family parameter is the displacement from the reference point:
    L_nu(x) = L_nu + x dL_nu and t_nu(x) = t_nu + x dt_nu, with per-mode
    (dL, dt) taken from ``h_perturbation`` when given. Couplings are the
    analytic <0~|d|1~> = dt/2 within each pair; the dense Hamiltonian is
    attached for fidelity checks.
    """
    n = ms.n_modes
    if n > MAX_DENSE_MODES:
        raise TooManyModes(f"{n} modes > {MAX_DENSE_MODES}")
    if h_perturbation is None:
        dl, dt = ms.dLambda, ms.dtheta
    else:
        pert = np.asarray(h_perturbation, dtype=float).reshape(n, 2)
        dl, dt = pert[:, 0], pert[:, 1]

    states = np.array(list(itertools.product(range(4), repeat=n)), dtype=int)
    counts = _PAIR_COUNT[states]                     # (4^n, n)
    dim = states.shape[0]

    # couplings: states differing only by |0~> <-> |1~> in one pair
    coupling = np.zeros((dim, dim))
    index = {tuple(s): i for i, s in enumerate(states)}
    for i, s in enumerate(states):
        for nu in range(n):
            if s[nu] == 0:
                t = s.copy()
                t[nu] = 3
                j = index[tuple(t)]
                coupling[i, j] = 0.5 * dt[nu]
                coupling[j, i] = -0.5 * dt[nu]

    def lam_at(x):
        lam = ms.Lambda + x * dl
        if np.any(lam <= 0):
            raise ValueError("displacement drives a mode energy non-positive")
        return lam

    def order(x):
        return np.argsort(counts @ lam_at(x), kind="stable")

    def energies(x):
        return (counts @ lam_at(x))[order(x)]

    def d_energies(x):
        return (counts @ dl)[order(x)]

    def d_couplings(x):
        o = order(x)
        return coupling[np.ix_(o, o)]

    def hamiltonian(x):
        lam = lam_at(x)
        theta = ms.theta + x * dt
        total = np.zeros((dim, dim))
        for nu in range(n):
            left = np.eye(4 ** nu)
            right = np.eye(4 ** (n - nu - 1))
            total += np.kron(np.kron(left, _pair_hamiltonian(lam[nu], theta[nu])), right)
        return total

    return ThermalFamily(energies, d_energies, d_couplings, ms.beta,
                         hamiltonian=hamiltonian)


@dataclass(frozen=True)
class EnergyForm:
    """Momentum integral rewritten over quasiparticle energy.

    ``sample(t)`` maps a smooth variable t in [lo, hi] to arrays
    (Lambda, dLambda^2, dtheta^2, Lambda*dLambda, weight) where ``weight``
    already contains dk/dt and the full-zone multiplicity.
    """

    lo: float
    hi: float
    sample: Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class DispersionModel:
    """Quasi-free dispersion on k in [-pi, pi].

    Each attribute is a vectorised callable of (k, h). ``even`` marks
    integrands symmetric under k -> -k, halving the quadrature work.
    ``energy_form(h)`` optionally returns an :class:`EnergyForm`.
    """

    epsilon: Callable
    delta: Callable
    Lambda: Callable
    theta: Callable
    dLambda: Callable
    dtheta: Callable
    even: bool = False
    energy_form: Callable[[float], EnergyForm | None] | None = None
    gap: Callable[[float], float] | None = None


@dataclass(frozen=True)
class ThermoComponents:
    """Per-site metric in (h, T) coordinates with the g_hh split."""

    g_hh_c: float
    g_hh_nc: float
    g_hT: float
    g_TT: float

    @property
    def g_hh(self) -> float:
        return self.g_hh_c + self.g_hh_nc

    @property
    def tensor(self) -> SymMat2:
        return SymMat2(self.g_hh, self.g_hT, self.g_TT)

    def as_array(self) -> np.ndarray:
        return np.array([self.g_hh_c, self.g_hh_nc, self.g_hT, self.g_TT])


def _thermal_integrands(beta, lam, dlam2, dtheta2, lam_dlam, weight, split=False):
    """Rows: dL^2 s, (1-sech) dt^2, L^2 s, and the positive / negative parts
    of -L dL s, with s = 1/(cosh beta L + 1). With ``split`` two more rows
    follow: dt^2 and sech dt^2 (the ground-state value of the non-classical
    integrand and its thermal deficit)."""
    x = beta * lam
    s = inv_cosh_plus_one(x) * weight
    cross = -lam_dlam * s
    rows = [
        dlam2 * s,
        one_minus_sech(x) * dtheta2 * weight,
        lam * lam * s,
        np.maximum(cross, 0.0),
        np.minimum(cross, 0.0),
    ]
    if split:
        rows += [dtheta2 * weight, sech(x) * dtheta2 * weight]
    return np.stack(rows)


def _assemble(beta, raw):
    c, nc, tt, hp, hm = raw[:5]
    pref = 1.0 / (16.0 * math.pi)
    return ThermoComponents(
        g_hh_c=beta ** 2 * pref * c,
        g_hh_nc=nc / (8.0 * math.pi),
        g_hT=beta ** 3 * pref * (hp + hm),
        g_TT=beta ** 4 * pref * tt,
    )


def _k_samples(dm, h):
    def sample(k):
        lam = dm.Lambda(k, h)
        dl = dm.dLambda(k, h)
        return lam, dl * dl, dm.dtheta(k, h) ** 2, lam * dl
    return sample


def _raw_k(dm, h_values, beta_values, spec, split=False):
    """Momentum integrals for several (h, beta) points sharing one mesh."""
    samplers = [_k_samples(dm, h) for h in h_values]
    nrow = 7 if split else 5

    def f(k):
        rows = []
        for sample, b in zip(samplers, beta_values):
            lam, dl2, dt2, ldl = sample(k)
            rows.append(_thermal_integrands(b, lam, dl2, dt2, ldl, 1.0, split))
        return np.concatenate(rows)

    # integrands are single-signed per row, so a pure relative criterion applies
    zero = np.zeros(nrow * len(samplers))
    if dm.even:
        raw = 2.0 * integrate(f, 0.0, math.pi, spec, abs_tol=zero)
    else:
        raw = (integrate(f, -math.pi, 0.0, spec, abs_tol=zero)
               + integrate(f, 0.0, math.pi, spec, abs_tol=zero))
    return raw.reshape(len(samplers), nrow)


def _raw_energy(form, beta, spec):
    def f(t):
        lam, dl2, dt2, ldl, w = form.sample(t)
        return _thermal_integrands(beta, lam, dl2, dt2, ldl, w)
    return integrate(f, form.lo, form.hi, spec, abs_tol=np.zeros(5))


def thermodynamic_components(dm: DispersionModel, h: float, T: float,
                             spec: QuadratureSpec | None = None,
                             variable: str = "auto") -> ThermoComponents:
    """Per-site metric of the infinite chain at field ``h`` and temperature ``T``.

        g_hh^c  = beta^2/(16 pi) int (dL)^2 / (cosh beta L + 1) dk
        g_hh^nc = 1/(8 pi) int (cosh beta L - 1)/cosh beta L (dtheta)^2 dk
        g_TT    = beta^4/(16 pi) int L^2 / (cosh beta L + 1) dk
        g_hT    = -beta^3/(16 pi) int L dL / (cosh beta L + 1) dk

    over k in [-pi, pi]. ``variable`` is "k", "energy" or "auto"; "auto"
    uses the energy variable at a gap-closing field and falls back to it
    when the momentum quadrature fails close to criticality.
    """
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    spec = spec or QuadratureSpec()
    beta = 1.0 / T
    if variable not in ("auto", "k", "energy"):
        raise ValueError(f"unknown integration variable {variable!r}")

    gapless = dm.gap is not None and dm.gap(h) == 0.0
    form = dm.energy_form(h) if dm.energy_form is not None else None
    if variable == "energy" or (variable == "auto" and gapless and form is not None):
        if form is None:
            raise ValueError(f"no energy-variable form at h={h}")
        return _assemble(beta, _raw_energy(form, beta, spec))
    try:
        return _assemble(beta, _raw_k(dm, [h], [beta], spec)[0])
    except NonConvergence:
        near_critical = dm.gap is not None and beta * dm.gap(h) < 0.1
        if variable == "k" or form is None or not near_critical:
            raise
        return _assemble(beta, _raw_energy(form, beta, spec))


def thermodynamic_components_many(dm: DispersionModel, hs, Ts,
                                  spec: QuadratureSpec | None = None,
                                  split: bool = False):
    """Momentum-space components at several points on one shared adaptive mesh.

    Intended for tight clusters of points (finite-difference stencils).
    Returns an array of shape (npoints, 4) ordered (g_hh_c, g_hh_nc, g_hT, g_TT).
    With ``split`` two columns are appended: the temperature-independent
    part of g_hh and the thermal remainder g_hh_c - deficit, computed
    directly so that its (possibly exponentially small) size is resolved.
    Requires a gapped spectrum, otherwise the ground-state integral diverges.
    """
    hs = np.atleast_1d(np.asarray(hs, dtype=float))
    Ts = np.atleast_1d(np.asarray(Ts, dtype=float))
    if np.any(Ts <= 0):
        raise ValueError("temperatures must be positive")
    spec = spec or QuadratureSpec()
    betas = 1.0 / Ts
    raw = _raw_k(dm, hs, betas, spec, split)
    out = np.array([_assemble(b, r).as_array() for b, r in zip(betas, raw)])
    if not split:
        return out
    static = raw[:, 5] / (8.0 * math.pi)
    thermal = out[:, 0] - raw[:, 6] / (8.0 * math.pi)
    return np.column_stack([out, static, thermal])


def thermodynamic_metric(dm: DispersionModel, h: float, T: float,
                         spec: QuadratureSpec | None = None) -> SymMat2:
    return thermodynamic_components(dm, h, T, spec).tensor


def mode_sum_components(dm: DispersionModel, h: float, T: float, L: int) -> ThermoComponents:
    """Per-site metric of an L-site chain from the exact mode sums.

    Pairs sit at k_j = pi (2j - 1)/L, j = 1..L/2.
    """
    if L % 2:
        raise ValueError("L must be even")
    k = np.pi * (2 * np.arange(1, L // 2 + 1) - 1) / L
    ms = ModeSystem(dm.Lambda(k, h), dm.dLambda(k, h), dm.dtheta(k, h), 1.0 / T)
    b = mode_blocks(ms)
    g = b.to_hT(ms.beta)
    return ThermoComponents(b.g_hh_c / L, b.g_hh_nc / L, g.a12 / L, g.a22 / L)


# ---- three-way oracle ---------------------------------------------------------

ORACLE_STEP = 0.02


def random_mode_system(rng: np.random.Generator, n_modes: int,
                       zero_dtheta: bool = False) -> ModeSystem:
    """Draw Lambda in [0.1, 3], dLambda and dtheta in [-1, 1], beta in [0.1, 10]."""
    lam = rng.uniform(0.1, 3.0, n_modes)
    dlam = rng.uniform(-1.0, 1.0, n_modes)
    dtheta = rng.uniform(-1.0, 1.0, n_modes)
    beta = rng.uniform(0.1, 10.0)
    if zero_dtheta:
        dtheta = np.zeros(n_modes)
    return ModeSystem(lam, dlam, dtheta, beta)


def oracle_steps(ms: ModeSystem, c: float = ORACLE_STEP) -> tuple[float, float]:
    """Finite-difference displacements (dh, dT) small against the scales on
    which the thermal state varies: T and Lambda in energy, T^2/Lambda in T."""
    T = 1.0 / ms.beta
    dl = max(float(np.abs(ms.dLambda).max()), 1e-12)
    dt = max(float(np.abs(ms.dtheta).max()), 1e-12)
    dh = c * min(min(T, float(ms.Lambda.min())) / dl, 1.0 / dt)
    dT = c * T * min(1.0, T / float(ms.Lambda.max()))
    return dh, dT


@dataclass(frozen=True)
class OracleResult:
    closed: SymMat2
    dense: SymMat2
    closed_vs_dense: float      # max |entry difference| / max |entry|
    fidelity_vs_dense: float    # max relative error of g(u, u) over three directions
    nc_closed: float
    nc_dense: float


def oracle_check(ms: ModeSystem, c: float = ORACLE_STEP) -> OracleResult:
    """Compare the closed mode formulas with the generic spectral metric of
    the explicit many-body state, and that with finite differences of the
    Uhlmann fidelity along h, T and a mixed direction."""
    closed = mode_metric(ms)
    fam = dense_from_modes(ms)
    blocks = thermal_blocks(fam, 0.0)
    dense = blocks.to_hT(ms.beta)
    G = dense.as_array()
    scale = np.max(np.abs(G))
    cvd = float(np.max(np.abs(closed.as_array() - G)) / scale)

    T = 1.0 / ms.beta

    def state_at(x):
        return fam.state(x[0], 1.0 / x[1])

    dh, dT = oracle_steps(ms, c)
    worst = 0.0
    for u in ((dh, 0.0), (0.0, dT), (dh, dT)):
        u = np.array(u)
        exact = float(u @ G @ u)
        fd = fidelity_line_element(state_at, [0.0, T], u, delta=1.0)
        worst = max(worst, abs(fd / exact - 1.0))
    return OracleResult(closed, dense, cvd, worst,
                        nonclassical_hh(ms), float(blocks.g_hh_nc))
