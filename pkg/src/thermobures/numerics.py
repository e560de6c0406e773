"""Numerical kernels: adaptive Gauss-Kronrod quadrature, closed-form 2x2
symmetric eigendecomposition and central finite differences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "NonConvergence",
    "QuadratureSpec",
    "SymMat2",
    "EigenFrame2",
    "integrate",
    "eigen2",
    "central_diff",
]


class NonConvergence(ArithmeticError):
    """Adaptive quadrature ran out of subdivisions before meeting tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise ValueError(f"abs_tol must be non-negative, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


# 7-point Gauss / 15-point Kronrod abscissae on [-1, 1] (non-negative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point node set, ordered -x..0..+x
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (x1, x3, x5, x7=0)
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[13, 11, 9]] = _WG[:3]

#: polynomial degree integrated exactly by a single 15-point Kronrod panel
KRONROD_EXACTNESS = 22

_EPS = np.finfo(float).eps


def _gk15(f, a, b):
    """Apply the Gauss-Kronrod pair to every panel [a_i, b_i] at once.

    Returns (kronrod, error, abs_integral) with shape (m, npanels)."""
    c = 0.5 * (a + b)
    r = 0.5 * (b - a)
    x = c[:, None] + r[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float)
    fx = fx.reshape(-1, a.size, 15)
    kron = (fx @ _KW) * r
    gauss = (fx @ _GW) * r
    resabs = (np.abs(fx) @ _KW) * np.abs(r)
    return kron, np.abs(kron - gauss), resabs


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              spec: QuadratureSpec | None = None, *, abs_tol=None):
    """Adaptive 15-point Gauss-Kronrod integral of ``f`` over [a, b].

    ``f`` must be vectorised: it receives a 1-D array of abscissae and returns
    either an array of the same length or an ``(m, n)`` array for an
    m-component integrand. Panels are bisected until the summed
    Gauss/Kronrod discrepancy is below ``max(abs_tol, rel_tol*|I|)`` for every
    component. Endpoints are never sampled, so integrable endpoint
    singularities are handled by repeated bisection.

    ``abs_tol`` overrides ``spec.abs_tol``; an array gives one absolute
    tolerance per component.

    Raises NonConvergence once ``spec.max_subdivisions`` bisections have been
    spent without meeting the tolerance.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    atol = np.atleast_1d(spec.abs_tol if abs_tol is None else abs_tol).astype(float)

    lo = np.array([float(a)])
    hi = np.array([float(b)])
    scalar = []

    def g(x):
        y = np.asarray(f(x), dtype=float)
        if not scalar:
            scalar.append(y.ndim == 1)
        return y

    val, err, rab = _gk15(g, lo, hi)
    spent = 0
    while True:
        total = val.sum(axis=1)
        tol = np.maximum(atol, spec.rel_tol * np.abs(total))
        # rounding floor, as in QUADPACK
        tol = np.maximum(tol, 50 * _EPS * rab.sum(axis=1))
        if np.all(err.sum(axis=1) <= tol):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.where(err > 0, err / tol[:, None], 0.0)
        score = np.nan_to_num(score, nan=0.0, posinf=1e300).max(axis=0)
        order = np.argsort(score)[::-1]
        # split the worst panels until the untouched remainder fits in half the budget
        tail = np.cumsum(score[order][::-1])[::-1]
        nsplit = max(1, int(np.count_nonzero(tail > 0.5)))
        split = order[:nsplit]
        keep = order[nsplit:]
        spent += nsplit
        if spent > spec.max_subdivisions:
            raise NonConvergence(
                f"no convergence on [{a}, {b}] after {spec.max_subdivisions} "
                f"subdivisions (error {err.sum(axis=1).max():.3e}, "
                f"tolerance {tol.min():.3e})")
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        nv, ne, nr = _gk15(g, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[:, keep], nv], axis=1)
        err = np.concatenate([err[:, keep], ne], axis=1)
        rab = np.concatenate([rab[:, keep], nr], axis=1)

    total = val.sum(axis=1)
    return float(total[0]) if scalar[0] else total


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2x2 matrix [[a11, a12], [a12, a22]]."""

    a11: float
    a12: float
    a22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    def __mul__(self, c: float) -> "SymMat2":
        return SymMat2(c * self.a11, c * self.a12, c * self.a22)

    __rmul__ = __mul__


@dataclass(frozen=True)
class EigenFrame2:
    lambda_max: float
    lambda_min: float
    v_max: tuple[float, float]
    v_min: tuple[float, float]


_SIGN_EPS = 1e-12


def _orient(v):
    x, y = v
    if y < -_SIGN_EPS or (abs(y) <= _SIGN_EPS and x < 0):
        return (-x + 0.0, -y + 0.0)
    return (x + 0.0, y + 0.0)


def eigen2(m: SymMat2) -> EigenFrame2:
    """Closed-form eigendecomposition of a symmetric 2x2 matrix.

    Eigenvectors are oriented so their second component is non-negative
    (first component non-negative when the second vanishes). An exactly
    degenerate matrix gets the canonical axes frame.
    """
    a, b, c = m.a11, m.a12, m.a22
    mean = 0.5 * (a + c)
    half = 0.5 * (a - c)
    r = math.hypot(half, b)
    if r == 0.0:
        return EigenFrame2(mean, mean, (1.0, 0.0), (0.0, 1.0))
    if b == 0.0:
        # exactly diagonal: exact axis vectors
        if a >= c:
            return EigenFrame2(a, c, (1.0, 0.0), (0.0, 1.0))
        return EigenFrame2(c, a, (0.0, 1.0), (1.0, 0.0))
    phi = 0.5 * math.atan2(b, half)
    vmax = (math.cos(phi), math.sin(phi))
    vmin = (-vmax[1], vmax[0])
    # the eigenvalue of smaller magnitude comes from det/other to avoid cancellation
    det = a * c - b * b
    if mean >= 0:
        lmax = mean + r
        lmin = det / lmax
    else:
        lmin = mean - r
        lmax = det / lmin
    return EigenFrame2(lmax, lmin, _orient(vmax), _orient(vmin))


def central_diff(f: Callable[[float], float], x: float, step: float,
                 order: int = 1) -> float:
    if step <= 0:
        raise ValueError("step must be positive")
    if order == 1:
        return (f(x + step) - f(x - step)) / (2 * step)
    if order == 2:
        return (f(x + step) - 2 * f(x) + f(x - step)) / (step * step)
    raise ValueError("order must be 1 or 2")
