"""Transverse-field Ising chain H = -sum_j (s^x_j s^x_{j+1} + h s^z_j).

Fermionic dispersion (J = 1): eps_k = cos k - h, Delta_k = sin k,
Lambda_k = sqrt(eps_k^2 + Delta_k^2), tan theta_k = Delta_k / eps_k.
The lowest excitation gap is |1 - |h||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .numerics import QuadratureSpec, SymMat2, eigen2, integrate
from .quasifree import (DispersionModel, EnergyForm, ThermoComponents,
                        inv_cosh_plus_one, occupation_variance,
                        thermodynamic_components)

CATALAN = 0.915965594177219015054603514932384110774


class GaplessPoint(ValueError):
    pass


class RootNotBracketed(ValueError):
    pass


def gap(h: float) -> float:
    return abs(1.0 - abs(h))


def _eps(k, h):
    # cos k - h, written to keep relative accuracy near k = 0
    return (1.0 - h) - 2.0 * np.sin(0.5 * k) ** 2


def _delta(k, h):
    return np.sin(k)


def _lambda(k, h):
    return np.hypot(_eps(k, h), _delta(k, h))


def _theta(k, h):
    return np.arctan2(_delta(k, h), _eps(k, h))


def _dlambda(k, h):
    return -_eps(k, h) / _lambda(k, h)


def _dtheta(k, h):
    lam = _lambda(k, h)
    return _delta(k, h) / (lam * lam)


def _energy_form(h: float) -> EnergyForm | None:
    """k -> omega = Lambda_k, then omega = c - r cos t to absorb the
    inverse-square-root band edges. Mirror h -> -h flips only Lambda dLambda."""
    if h == 0.0:
        return None
    hh = abs(h)
    a, b = abs(1.0 - hh), 1.0 + hh
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    sign = math.copysign(1.0, h)

    def sample(t):
        w = c - r * np.cos(t)
        root = np.sqrt((w + a) * (b + w))
        delta2 = (r * np.sin(t) * root) ** 2 / (4.0 * hh * hh)
        eps = (1.0 - hh * hh - w * w) / (2.0 * hh)
        return (w, eps * eps / (w * w), delta2 / w ** 4, -sign * eps,
                4.0 * w / root)

    return EnergyForm(0.0, math.pi, sample)


def ising_dispersion() -> DispersionModel:
    return DispersionModel(
        epsilon=lambda k, h: np.cos(k) - h,
        delta=_delta,
        Lambda=_lambda,
        theta=_theta,
        dLambda=_dlambda,
        dtheta=_dtheta,
        even=True,
        energy_form=_energy_form,
        gap=gap,
    )


ISING = ising_dispersion()


def metric_components(h: float, T: float, spec: QuadratureSpec | None = None,
                      variable: str = "auto") -> ThermoComponents:
    """Per-site metric at (h, T) including the classical / non-classical split."""
    return thermodynamic_components(ISING, h, T, spec, variable)


def metric_at(h: float, T: float, spec: QuadratureSpec | None = None) -> SymMat2:
    return metric_components(h, T, spec).tensor


def zero_temperature_nc(h: float, spec: QuadratureSpec | None = None) -> float:
    """Ground-state limit of g_hh^nc,

        1/(8 pi h^2) int_{|1-h|}^{1+h} sqrt((w^2-(1-h)^2)((1+h)^2-w^2)) / w^3 dw,

    evaluated after w = c - r cos t so the integrand is smooth.
    """
    if not h > 0:
        raise ValueError("zero_temperature_nc needs h > 0")
    if h == 1.0:
        raise GaplessPoint("g_hh^nc diverges at h = 1 for T = 0")
    a, b = abs(1.0 - h), 1.0 + h
    c, r = 0.5 * (a + b), 0.5 * (b - a)

    def f(t):
        w = c - r * np.cos(t)
        s = r * np.sin(t)
        return s * s * np.sqrt((w + a) * (b + w)) / w ** 3

    return integrate(f, 0.0, math.pi, spec) / (8.0 * math.pi * h * h)


def excess_over_ground_state(h: float, T: float,
                             spec: QuadratureSpec | None = None) -> float:
    """g_hh(h, T) - g_hh^nc(h, T=0), computed without cancellation.

    The non-classical deficit is 1/(8 pi) int sech(beta L) (dtheta)^2 dk.
    """
    beta = 1.0 / T

    def f(k):
        lam = _lambda(k, h)
        x = beta * lam
        sech = 2.0 * np.exp(-x) / (1.0 + np.exp(-2.0 * x))
        return np.stack([_dlambda(k, h) ** 2 * inv_cosh_plus_one(x),
                         sech * _dtheta(k, h) ** 2])

    c, d = 2.0 * integrate(f, 0.0, math.pi, spec, abs_tol=np.zeros(2))
    return beta * beta * c / (16.0 * math.pi) - d / (8.0 * math.pi)


def specific_heat(h: float, T: float, spec: QuadratureSpec | None = None) -> float:
    """Per-site c_v = beta^2 var(H)/L = (1/2pi) int beta^2 L^2 <n>(1-<n>) dk."""
    beta = 1.0 / T

    def f(k):
        lam = _lambda(k, h)
        return (beta * lam) ** 2 * occupation_variance(beta * lam)

    return 2.0 * integrate(f, 0.0, math.pi, spec, abs_tol=0.0) / (2.0 * math.pi)


def energy_variance(h: float, T: float, spec: QuadratureSpec | None = None) -> float:
    """Per-site thermal energy variance <H^2> - <H>^2 = T^2 c_v."""
    return T * T * specific_heat(h, T, spec)


# ---- h = 0: flat dispersion, everything in closed form ---------------------

def h_zero_metric(T: float) -> SymMat2:
    """Exact metric on the classical line h = 0 (Lambda_k = 1); diagonal."""
    beta = 1.0 / T
    s = float(inv_cosh_plus_one(beta))
    sech = 1.0 / math.cosh(beta) if beta < 700 else 0.0
    g_hh = beta * beta * s / 16.0 + (1.0 - sech) / 8.0
    return SymMat2(g_hh, 0.0, beta ** 4 * s / 8.0)


def _h_zero_difference(T):
    g = h_zero_metric(T)
    return g.a11 - g.a22


def h_zero_line_crossings() -> tuple[float, float]:
    """Temperatures where g_hh = g_TT on the h = 0 line, (T_low, T_high)."""
    roots = []
    for lo, hi in ((0.05, 0.5), (0.5, 1.5)):
        flo, fhi = _h_zero_difference(lo), _h_zero_difference(hi)
        if flo * fhi > 0:
            raise RootNotBracketed(f"g_hh - g_TT keeps its sign on [{lo}, {hi}]")
        roots.append(optimize.bisect(_h_zero_difference, lo, hi, xtol=1e-10))
    return roots[0], roots[1]


# ---- closed-form asymptotics ------------------------------------------------

def classical_critical(h, T):
    return math.pi * T / (96.0 * h * h)


def classical_saddle(h, T):
    d = gap(h)
    return math.sqrt(d / (32.0 * math.pi * abs(h))) * T ** -1.5 * math.exp(-d / T)


def catalan_critical(h, T):
    return (CATALAN / (math.pi ** 2 * T) - 1.0 / 16.0) / (h * h)


def nc_small_gap(h, T=0.0):
    return 1.0 / (16.0 * gap(h))


def nc_large_gap_ellipse(h, T=0.0):
    return 1.0 / (8.0 * h ** 2.5 * (h - 1.0) ** 1.5)


def nc_large_gap_quartic(h, T=0.0):
    return 1.0 / (8.0 * gap(h) ** 4)


def mixed_critical(h, T):
    # sign follows the momentum integral with eps_k = cos k - h at h = +1
    return -math.copysign(math.pi / 48.0, h)


def gtt_critical(h, T):
    return math.pi / (24.0 * T)


def _saddle_prefactor(h, T):
    d = gap(h)
    return math.sqrt(2.0 * math.pi * d * T / abs(h)) * math.exp(-d / T) / (8.0 * math.pi)


def mixed_saddle(h, T):
    """Leading saddle-point g_hT ~ T^(-5/2) e^(-gap/T) (sign of 1 - |h|, h > 0)."""
    eps0 = 1.0 - abs(h)
    return math.copysign(1.0, h) * eps0 * T ** -3 * _saddle_prefactor(h, T)


def gtt_saddle(h, T):
    """Leading saddle-point g_TT ~ T^(-7/2) e^(-gap/T)."""
    return gap(h) ** 2 * T ** -4 * _saddle_prefactor(h, T)


NC_SCALING_EXPONENT = -1.0  # 2*dim(V) - 2z - d with z = d = dim(V) = 1


def nc_power_law(h, T):
    return NC_SCALING_EXPONENT


def large_field_line(t):
    """Leading metric on T = h = t >> 1: t^-2/(16 cosh^2(1/2)) [[1,-1],[-1,1]]."""
    a = t ** -2 / (16.0 * math.cosh(0.5) ** 2)
    return SymMat2(a, -a, a)


def large_field_eigenvalue(h, T):
    return 2.0 * large_field_line(T).a11


def fitted_exponent(h: float, T_lo: float, T_hi: float, n: int = 11,
                    spec: QuadratureSpec | None = None) -> float:
    """Least-squares slope of log g_hh^nc against log T, T log-spaced."""
    Ts = np.geomspace(T_lo, T_hi, n)
    g = [metric_components(h, T, spec).g_hh_nc for T in Ts]
    return float(np.polyfit(np.log(Ts), np.log(g), 1)[0])


# ---- predictions registry ---------------------------------------------------

def _quantum_critical(h, T):
    return T >= 10.0 * gap(h)


def _quasi_classical(h, T):
    return T <= gap(h) / 10.0


def _ratio_check(rtol):
    def check(predicted, numeric):
        return predicted != 0 and abs(numeric / predicted - 1.0) <= rtol
    return check


def _component(name):
    def numeric(h, T, spec):
        return getattr(metric_components(h, T, spec), name)
    return numeric


def _zero_T(h, T, spec):
    return zero_temperature_nc(h, spec)


def _exponent_numeric(h, T, spec):
    # decade window centred (geometrically) on the probe temperature
    return fitted_exponent(h, T / math.sqrt(10.0), T * math.sqrt(10.0), spec=spec)


def _large_field_numeric(h, T, spec):
    return eigen2(metric_at(h, T, spec)).lambda_max


def _degeneracy_numeric(h, T, spec):
    e = eigen2(metric_at(h, T, spec))
    return e.lambda_min / e.lambda_max


@dataclass(frozen=True)
class RegimePrediction:
    """A closed-form asymptotic for one metric quantity.

    ``formula(h, T)`` is the prediction, ``numeric(h, T, spec)`` the quantity
    it approximates, ``validity(h, T)`` the regime, and ``check(pred, num)``
    the pass rule used at the ``probes``.
    """

    name: str
    component: str
    formula: Callable[[float, float], float]
    validity: Callable[[float, float], bool]
    numeric: Callable[[float, float, QuadratureSpec | None], float]
    probes: tuple[tuple[float, float], ...]
    check: Callable[[float, float], bool] = field(default=_ratio_check(0.05))
    description: str = ""


def asymptotic_predictions() -> list[RegimePrediction]:
    return [
        RegimePrediction(
            "classical_critical", "g_hh_c", classical_critical, _quantum_critical,
            _component("g_hh_c"), ((1.0, 0.02),), _ratio_check(0.03),
            "pi T / (96 h^2), quantum-critical fan"),
        RegimePrediction(
            "classical_saddle", "g_hh_c", classical_saddle, _quasi_classical,
            _component("g_hh_c"), ((2.0, 0.05),), _ratio_check(0.20),
            "sqrt(gap/(32 pi h)) T^-3/2 exp(-gap/T)"),
        RegimePrediction(
            "catalan_critical", "g_hh_nc", catalan_critical, _quantum_critical,
            _component("g_hh_nc"), ((1.0, 0.02),), _ratio_check(0.02),
            "(C/pi^2 T^-1 - 1/16)/h^2"),
        RegimePrediction(
            "nc_ground_state", "g_hh_nc",
            lambda h, T: zero_temperature_nc(h), _quasi_classical,
            _component("g_hh_nc"), ((1.5, 0.01),), _ratio_check(1e-6),
            "T -> 0 energy integral, approached exponentially"),
        RegimePrediction(
            "nc_small_gap", "g_hh_nc(T=0)", nc_small_gap,
            lambda h, T: gap(h) <= 0.1, _zero_T, ((1.01, 0.0),), _ratio_check(0.05),
            "1/(16 gap)"),
        RegimePrediction(
            "nc_large_gap_ellipse", "g_hh_nc(T=0)", nc_large_gap_ellipse,
            lambda h, T: gap(h) >= 10.0, _zero_T, ((101.0, 0.0),), _ratio_check(0.05),
            "1/(8 h^5/2 (h-1)^3/2)"),
        RegimePrediction(
            "nc_large_gap_quartic", "g_hh_nc(T=0)", nc_large_gap_quartic,
            lambda h, T: gap(h) >= 10.0, _zero_T, ((101.0, 0.0),), _ratio_check(0.05),
            "1/(8 gap^4)"),
        RegimePrediction(
            "mixed_critical", "g_hT", mixed_critical, _quantum_critical,
            _component("g_hT"), ((1.0, 0.02),), _ratio_check(0.05),
            "|g_hT| -> pi/48"),
        RegimePrediction(
            "gtt_cft", "g_TT", gtt_critical, _quantum_critical,
            _component("g_TT"), ((1.0, 0.02),), _ratio_check(0.02),
            "pi/(24 T), c = 1/2, v = 1"),
        RegimePrediction(
            "mixed_saddle", "g_hT", mixed_saddle, _quasi_classical,
            _component("g_hT"), ((2.0, 0.05),), _ratio_check(0.20),
            "~ T^-5/2 exp(-gap/T)"),
        RegimePrediction(
            "gtt_saddle", "g_TT", gtt_saddle, _quasi_classical,
            _component("g_TT"), ((2.0, 0.05),), _ratio_check(0.20),
            "~ T^-7/2 exp(-gap/T)"),
        RegimePrediction(
            "nc_scaling_exponent", "d log g_hh_nc / d log T", nc_power_law,
            _quantum_critical, _exponent_numeric, ((1.0, math.sqrt(1e-3)),),
            lambda p, n: abs(n - p) <= 0.05,
            "g_hh^nc ~ T^-1 over T in [0.01, 0.1]"),
        RegimePrediction(
            "large_field_line", "lambda_max", large_field_eigenvalue,
            lambda h, T: h == T and h >= 10.0, _large_field_numeric,
            ((20.0, 20.0),), _ratio_check(0.10),
            "single eigenvalue 2 t^-2/(16 cosh^2(1/2)) along w = (-1, 1)"),
        RegimePrediction(
            "large_field_degeneracy", "lambda_min/lambda_max",
            lambda h, T: 0.0, lambda h, T: h == T and h >= 10.0,
            _degeneracy_numeric, ((20.0, 20.0),), lambda p, n: n < 1e-2,
            "second eigenvalue negligible on T = h"),
    ]
