"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary. ``python3 tests/test_acceptance.py`` prints them directly.
"""

import math

import numpy as np
import pytest

from thermobures import geometry, ising, quasifree
from thermobures.cli import convention_ratios
from thermobures.metric import SpectralState, bures_ds2, qcb_ds2
from thermobures.numerics import eigen2

RESULTS: list[str] = []


def report(n, ok, msg):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {msg}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 ---------------------------------------------------------------------------

def test_criterion_01_catalan_divergence():
    target = ising.CATALAN / math.pi ** 2
    Ts = (0.05, 0.02, 0.01)
    tols = (0.05, 0.03, 0.02)
    nc = [ising.metric_components(1.0, T).g_hh_nc for T in Ts]
    ratios = [T * g / target for T, g in zip(Ts, nc)]
    ok_ratio = all(abs(r - 1) <= tol for r, tol in zip(ratios, tols))
    # g_nc = C/(pi^2 T) + a: intercept a from a fit against 1/T
    slope, intercept = np.polyfit(1 / np.array(Ts), nc, 1)
    ok_int = abs(intercept / (-1 / 16) - 1) <= 0.10
    report(1, ok_ratio and ok_int,
           "T g_nc / (C/pi^2) = " + ", ".join(f"{r:.4f}" for r in ratios)
           + f" (tol 5%/3%/2%); intercept {intercept:.5f} vs -1/16 (tol 10%)")


# 2 ---------------------------------------------------------------------------

def test_criterion_02_cft_specific_heat():
    T = 0.01
    g = ising.metric_components(1.0, T)
    r_cft = g.g_TT * T / (math.pi / 24)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(20):
        h, t = rng.uniform(-3, 3), rng.uniform(0.02, 3)
        c = ising.metric_components(h, t)
        # per-site energy variance in units of T^2: (1/2pi) int (beta L)^2 n(1-n) dk
        var = ising.specific_heat(h, t)
        worst = max(worst, abs(4 * t * t * c.g_TT / var - 1))
    ok = abs(r_cft - 1) <= 0.02 and worst <= 1e-10
    report(2, ok, f"g_TT T / (pi/24) = {r_cft:.4f} (tol 2%); "
                  f"max rel dev of 4T^2 g_TT identity over 20 points {worst:.2e} (tol 1e-10)")


# 3 ---------------------------------------------------------------------------

def test_criterion_03_mixed_term():
    g = ising.metric_components(1.0, 0.02)
    r = abs(g.g_hT) / (math.pi / 48)
    ratios = convention_ratios(1.0, 0.02, 1024)
    # eps_k = cos k - h makes the mixed term negative; the magnitude is compared
    report(3, abs(r - 1) <= 0.05,
           f"|g_hT| / (pi/48) = {r:.4f} (sign {'-' if g.g_hT < 0 else '+'}, tol 5%); "
           f"mode-sum / momentum-integral ratio g_hT {ratios['g_hT']:.6f}, "
           f"g_hh_nc {ratios['g_hh_nc']:.6f}")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_critical_classical_term():
    T = 0.02
    r = ising.metric_components(1.0, T).g_hh_c / T / (math.pi / 96)
    report(4, abs(r - 1) <= 0.03, f"g_hh_c / T / (pi/96) = {r:.4f} (tol 3%)")


# 5 ---------------------------------------------------------------------------

def test_criterion_05_zero_temperature_limits():
    small = ising.zero_temperature_nc(1.01) * 16 * 0.01
    big = ising.zero_temperature_nc(11.0) * 8 * 10.0 ** 4
    ok = abs(small - 1) <= 0.05 and abs(big - 1) <= 0.10
    exact_big = 8 * 1e4 / (8 * 121 * 120)
    report(5, ok, f"16 D g_nc(1+D) at D=0.01: {small:.4f} (tol 5%); "
                  f"8 D^4 g_nc(1+D) at D=10: {big:.4f} (tol 10%; "
                  f"closed form 1/(8h^2(h^2-1)) gives {exact_big:.4f})")


# 6 ---------------------------------------------------------------------------

def test_criterion_06_exponential_suppression():
    Ts = np.linspace(0.05, 0.1, 11)
    y = np.log([ising.excess_over_ground_state(2.0, T) for T in Ts])
    slope = np.polyfit(1 / Ts, y, 1)[0]
    # same data with the T^(-3/2) prefactor of the dilute-gas law removed
    corrected = np.polyfit(1 / Ts, y + 1.5 * np.log(Ts), 1)[0]
    report(6, abs(slope / -1.0 - 1) <= 0.10,
           f"slope of log(g_hh - g_nc(T=0)) vs 1/T at h=2: {slope:.4f} vs -1 (tol 10%); "
           f"with T^(3/2) prefactor removed: {corrected:.5f}")


# 7 ---------------------------------------------------------------------------

def test_criterion_07_h_zero_crossings():
    lo, hi = ising.h_zero_line_crossings()
    ok = abs(lo - 0.101) <= 1e-3 and abs(hi - 0.852) <= 1e-3
    report(7, ok, f"crossings T = {lo:.6f}, {hi:.6f} vs 0.101, 0.852 (tol 1e-3)")


# 8 ---------------------------------------------------------------------------

def test_criterion_08_large_field_line():
    t = 20.0
    g = ising.metric_at(t, t).as_array()
    ref = t ** -2 / (16 * math.cosh(0.5) ** 2) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    dev = np.max(np.abs(g / ref - 1))
    e = eigen2(ising.metric_at(t, t))
    q = e.lambda_min / e.lambda_max
    report(8, dev <= 0.10 and q < 1e-2,
           f"max entrywise rel dev {dev:.4f} (tol 10%); lambda_min/lambda_max {q:.2e} (< 1e-2)")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_oracle_equivalence():
    rng = np.random.default_rng(9)
    dense = fid = 0.0
    for modes in (1, 2, 3):
        for _ in range(100):
            r = quasifree.oracle_check(quasifree.random_mode_system(rng, modes))
            dense = max(dense, r.closed_vs_dense)
            fid = max(fid, r.fidelity_vs_dense)
    report(9, dense <= 1e-6 and fid <= 1e-5,
           f"100 trials each for 1-3 modes: closed vs spectral {dense:.2e} (tol 1e-6), "
           f"spectral vs fidelity {fid:.2e} (tol 1e-5)")


# 10 --------------------------------------------------------------------------

def _random_spectral_state(rng, n):
    p = rng.dirichlet(np.ones(n))
    if rng.random() < 0.3:
        p[rng.integers(n)] = 0.0
        p /= p.sum()
    dp = rng.normal(size=n)
    dp[p == 0] = 0.0
    live = p > 0
    dp[live] -= dp[live].mean()
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return SpectralState(p, dp, a - a.conj().T)


def test_criterion_10_metric_sandwich():
    rng = np.random.default_rng(10)
    bad = 0
    for _ in range(1000):
        s = _random_spectral_state(rng, int(rng.integers(2, 9)))
        b, q = bures_ds2(s), qcb_ds2(s)
        bad += not (b / 2 - 1e-12 <= q <= b + 1e-12)
    report(10, bad == 0, f"{bad} violations of ds2/2 <= qcb <= ds2 in 1000 states (dim 2-8)")


# 11 --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def crossover_grid():
    mf = geometry.ising_field((0.05, 3.0, 0.01, 2.0))
    return geometry.scan(mf, np.linspace(1.05, 2.0, 80), np.linspace(0.02, 1.0, 80))


def _slope_constancy(line):
    p = line.points[np.argsort(line.points[:, 0])]
    total = np.polyfit(p[:, 0], p[:, 1], 1)[0]
    edges = np.linspace(p[0, 0], p[-1, 0], 4)
    devs = []
    for a, b in zip(edges[:-1], edges[1:]):
        part = p[(p[:, 0] >= a) & (p[:, 0] <= b)]
        if len(part) >= 3:
            devs.append(abs(np.polyfit(part[:, 0], part[:, 1], 1)[0] / total - 1))
    return total, max(devs) if devs else math.inf


def test_criterion_11_curvature_sign_structure(crossover_grid):
    sg = crossover_grid
    H, T = np.meshgrid(sg.h_axis, sg.T_axis)
    K = sg.curvature
    low = (T < (H - 1) / 10) & np.isfinite(K)
    high = (T > 10 * (H - 1)) & np.isfinite(K)
    f_neg = np.mean(K[low] < 0)
    f_pos = np.mean(K[high] > 0)
    lines = geometry.zero_curvature_contours(sg)
    best = None
    for ln in lines:
        if len(ln) >= 9:
            slope, dev = _slope_constancy(ln)
            if best is None or dev < best[1]:
                best = (slope, dev, len(ln))
    ok_line = best is not None and best[1] <= 0.20
    line_msg = (f"best contour {best[2]} pts, dT/dh {best[0]:.3f}, "
                f"max third-span deviation {best[1]:.3f} (tol 20%)") if best else "no contour"
    report(11, f_neg >= 0.9 and f_pos >= 0.9 and ok_line,
           f"K<0 at {f_neg:.3f} of {low.sum()} quasi-classical nodes, "
           f"K>0 at {f_pos:.3f} of {high.sum()} critical nodes (tol 0.9); {line_msg}")


# 12 --------------------------------------------------------------------------

def test_criterion_12_scaling_exponent():
    s = ising.fitted_exponent(1.0, 0.01, 0.1)
    report(12, abs(s + 1.0) <= 0.05, f"log-log slope of g_nc vs T at h=1: {s:.4f} (-1 +- 0.05)")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
