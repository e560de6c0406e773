"""Command-line front end.

    thermobures scan       metric, eigenframe and curvature on an (h, T) grid
    thermobures verify     closed-form asymptotics against the numerics
    thermobures oracle     seeded random mode systems, three-way comparison
    thermobures crossover  zero-curvature contours and ridge lines

Exit codes: 0 success, 1 usage / configuration error, 2 partial failure
(some nodes or checks failed), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import geometry, ising, quasifree
from .numerics import NonConvergence, QuadratureSpec, SymMat2

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL, EXIT_NUMERICAL = 0, 1, 2, 3

ORACLE_TOL_DENSE = 1e-6
ORACLE_TOL_FIDELITY = 1e-5

# per-command grid defaults: (h_min, h_max, h_count, t_min, t_max, t_count)
_GRID_DEFAULTS = {
    "scan": (0.0, 2.0, 21, 0.05, 1.0, 20),
    "crossover": (1.05, 2.0, 80, 0.02, 1.0, 80),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class ScanConfig:
    h_range: tuple[float, float, int]
    T_range: tuple[float, float, int]
    spec: QuadratureSpec
    out: str | None = None
    format: str = "csv"
    field: str = "ising"

    def __post_init__(self):
        (h0, h1, nh), (t0, t1, nt) = self.h_range, self.T_range
        if nh < 2 or nt < 2:
            raise UsageError("grid counts must be at least 2")
        if not t0 > 0:
            raise UsageError("--t-min must be positive")
        if not (h1 > h0 and t1 > t0):
            raise UsageError("grid maxima must exceed minima")

    @property
    def h_axis(self):
        return np.linspace(*self.h_range)

    @property
    def T_axis(self):
        return np.linspace(*self.T_range)


@dataclass(frozen=True)
class VerificationRow:
    name: str
    probe: tuple[float, float]
    predicted: float
    numeric: float
    passed: bool

    @property
    def ratio(self) -> float:
        return self.numeric / self.predicted if self.predicted != 0 else math.nan


def _fmt(x) -> str:
    """Shortest round-tripping decimal; NaN becomes an empty field."""
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _json_value(x):
    x = float(x)
    return None if math.isnan(x) else x


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline="", encoding="utf-8"), True
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _field(cfg: ScanConfig) -> geometry.MetricField:
    (h0, h1, _), (t0, t1, _) = cfg.h_range, cfg.T_range
    domain = (h0 - 1.0, h1 + 1.0, 0.5 * t0, 2.0 * t1)
    if cfg.field == "flat":
        return geometry.constant_field(SymMat2(1.0, 0.0, 1.0), domain)
    return geometry.ising_field(domain, cfg.spec)


def _report_failures(sg: geometry.ScanGrid) -> int:
    for (iT, ih), reason in sorted(sg.failures.items()):
        print(f"node h={sg.h_axis[ih]!r} T={sg.T_axis[iT]!r}: {reason}", file=sys.stderr)
    if not sg.failures:
        return EXIT_OK
    metric_failed = sum(r.startswith("metric") for r in sg.failures.values())
    if metric_failed == sg.h_axis.size * sg.T_axis.size:
        return EXIT_NUMERICAL
    return EXIT_PARTIAL


def write_grid(sg: geometry.ScanGrid, stream, fmt: str = "csv"):
    if fmt == "json":
        rows = [{k: _json_value(v) for k, v in r.items()} for r in sg.records()]
        json.dump(rows, stream, indent=1)
        stream.write("\n")
        return
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(geometry.COLUMNS)
    for r in sg.records():
        w.writerow([_fmt(r[c]) for c in geometry.COLUMNS])


def read_grid_csv(text: str) -> list[dict]:
    """Parse scan CSV back into records (blank fields become NaN)."""
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append({k: (float(v) if v != "" else math.nan) for k, v in r.items()})
    return rows


def write_polylines(lines, stream, fmt: str = "csv"):
    if fmt == "json":
        json.dump([{"kind": ln.kind, "index": i, "points": ln.points.tolist()}
                   for i, ln in enumerate(lines)], stream, indent=1)
        stream.write("\n")
        return
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(("kind", "line", "point", "h", "T"))
    for i, ln in enumerate(lines):
        for j, (h, T) in enumerate(ln.points):
            w.writerow((ln.kind, i, j, _fmt(h), _fmt(T)))


def cmd_scan(cfg: ScanConfig) -> int:
    stream, close = _open_out(cfg.out)
    try:
        sg = geometry.scan(_field(cfg), cfg.h_axis, cfg.T_axis)
        write_grid(sg, stream, cfg.format)
    finally:
        if close:
            stream.close()
    return _report_failures(sg)


def verification_rows(spec: QuadratureSpec | None = None) -> list[VerificationRow]:
    rows = []
    for pred in ising.asymptotic_predictions():
        for h, T in pred.probes:
            p = pred.formula(h, T)
            n = pred.numeric(h, T, spec)
            rows.append(VerificationRow(pred.name, (h, T), p, n, bool(pred.check(p, n))))
    return rows


def convention_ratios(h: float = 1.0, T: float = 0.02, L: int = 1024,
                      spec: QuadratureSpec | None = None) -> dict:
    """Finite-chain mode sums over the thermodynamic momentum integrals."""
    ms = quasifree.mode_sum_components(ising.ISING, h, T, L)
    th = ising.metric_components(h, T, spec)
    return {"g_hT": ms.g_hT / th.g_hT, "g_hh_nc": ms.g_hh_nc / th.g_hh_nc}


def cmd_verify(spec: QuadratureSpec | None = None, stream=None) -> int:
    out = stream or sys.stdout
    try:
        rows = verification_rows(spec)
        ratios = convention_ratios(spec=spec)
        crossings = ising.h_zero_line_crossings()
    except NonConvergence as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{'prediction':26s} {'h':>8s} {'T':>8s} {'predicted':>14s} "
          f"{'numeric':>14s} {'ratio':>9s}  result", file=out)
    for r in rows:
        print(f"{r.name:26s} {r.probe[0]:8.4g} {r.probe[1]:8.4g} {r.predicted:14.6e} "
              f"{r.numeric:14.6e} {r.ratio:9.5f}  {'PASS' if r.passed else 'FAIL'}",
              file=out)
    print(f"h=0 crossings g_hh = g_TT: T = {crossings[0]:.6f}, {crossings[1]:.6f}", file=out)
    print(f"convention ratio g_hT (mode sum, L=1024 / momentum integral) at h=1, T=0.02: "
          f"{ratios['g_hT']:.6f}", file=out)
    print(f"convention ratio g_hh_nc (mode sum, L=1024 / momentum integral) at h=1, T=0.02: "
          f"{ratios['g_hh_nc']:.6f}", file=out)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_PARTIAL


def run_oracle(modes: int, trials: int, seed: int, zero_dtheta: bool = False):
    """Seeded oracle run; numpy's default_rng (PCG64) makes draws portable."""
    if not 1 <= modes <= quasifree.MAX_DENSE_MODES:
        raise UsageError(f"--modes must be in [1, {quasifree.MAX_DENSE_MODES}]")
    if trials < 1:
        raise UsageError("--trials must be positive")
    rng = np.random.default_rng(seed)
    return [quasifree.oracle_check(quasifree.random_mode_system(rng, modes, zero_dtheta))
            for _ in range(trials)]


def cmd_oracle(modes: int, trials: int, seed: int, stream=None,
               zero_dtheta: bool = False) -> int:
    out = stream or sys.stdout
    results = run_oracle(modes, trials, seed, zero_dtheta)
    dense = np.array([r.closed_vs_dense for r in results])
    fid = np.array([r.fidelity_vs_dense for r in results])
    if not (np.all(np.isfinite(dense)) and np.all(np.isfinite(fid))):
        print("NaN in oracle comparison", file=sys.stderr)
        return EXIT_NUMERICAL
    ok_d = dense.max() < ORACLE_TOL_DENSE
    ok_f = fid.max() < ORACLE_TOL_FIDELITY
    print(f"modes={modes} trials={trials} seed={seed} (numpy PCG64)", file=out)
    print(f"closed forms vs spectral metric: max rel dev {dense.max():.3e} "
          f"(tol {ORACLE_TOL_DENSE:g}) {'PASS' if ok_d else 'FAIL'}", file=out)
    print(f"spectral metric vs fidelity FD:  max rel dev {fid.max():.3e} "
          f"(tol {ORACLE_TOL_FIDELITY:g}) {'PASS' if ok_f else 'FAIL'}", file=out)
    return EXIT_OK if ok_d and ok_f else EXIT_PARTIAL


def cmd_crossover(cfg: ScanConfig, summary_stream=None) -> int:
    stream, close = _open_out(cfg.out)
    summary = summary_stream or (sys.stdout if close else sys.stderr)
    try:
        sg = geometry.scan(_field(cfg), cfg.h_axis, cfg.T_axis)
        contours = geometry.zero_curvature_contours(sg)
        ridges = geometry.ridge_lines(sg)
        write_polylines(contours + ridges, stream, cfg.format)
    finally:
        if close:
            stream.close()
    code = _report_failures(sg)
    try:
        print(geometry.crossover_report(ridges=ridges, contours=contours).summary(),
              file=summary)
    except geometry.NoLines as exc:
        print(f"no crossover lines: {exc}", file=summary)
    for c in contours:
        print(f"zero-curvature line: {len(c)} points, dT/dh = "
              f"{geometry.polyline_slope(c):.4f}", file=summary)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thermobures",
                     description="Bures metric of thermal quasi-free chains.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def grid_args(p, defaults):
        h0, h1, nh, t0, t1, nt = defaults
        p.add_argument("--h-min", type=float, default=h0)
        p.add_argument("--h-max", type=float, default=h1)
        p.add_argument("--h-count", type=int, default=nh)
        p.add_argument("--t-min", type=float, default=t0)
        p.add_argument("--t-max", type=float, default=t1)
        p.add_argument("--t-count", type=int, default=nt)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--rel-tol", type=float, default=QuadratureSpec.rel_tol)
        # test hook: constant metric instead of the Ising chain
        p.add_argument("--field", choices=("ising", "flat"), default="ising",
                       help=argparse.SUPPRESS)

    grid_args(sub.add_parser("scan", help="metric on an (h, T) grid"),
              _GRID_DEFAULTS["scan"])
    p = sub.add_parser("verify", help="check the asymptotic predictions")
    p.add_argument("--rel-tol", type=float, default=QuadratureSpec.rel_tol)
    p = sub.add_parser("oracle", help="random mode systems vs generic metric and fidelity")
    p.add_argument("--modes", type=int, default=1)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    grid_args(sub.add_parser("crossover", help="zero-curvature and ridge polylines"),
              _GRID_DEFAULTS["crossover"])
    return parser


def _spec(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(rel_tol=args.rel_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(_spec(args))
        if args.command == "oracle":
            return cmd_oracle(args.modes, args.trials, args.seed)
        cfg = ScanConfig((args.h_min, args.h_max, args.h_count),
                         (args.t_min, args.t_max, args.t_count),
                         _spec(args), args.out, args.format, args.field)
        return cmd_scan(cfg) if args.command == "scan" else cmd_crossover(cfg)
    except UsageError as exc:
        print(f"thermobures: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergence as exc:
        print(f"thermobures: quadrature failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
