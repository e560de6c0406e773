"""Geometry of a 2x2 metric field over the (h, T) plane.

Eigenvector fields, Gaussian curvature (Brioschi formula with central
differences), zero-curvature contours by marching squares, and ridge lines
of the largest eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
from scipy import ndimage

from .numerics import QuadratureSpec, SymMat2, eigen2

COLUMNS = ("h", "T", "g_hh", "g_hT", "g_TT", "g_hh_classical",
           "g_hh_nonclassical", "lambda_max", "lambda_min", "vmax_h", "vmax_T",
           "curvature")

DEG_EPS = 1e-12
NCOL = 7
SPLIT_GAP_RATIO = 4.0


class DegenerateMetric(ArithmeticError):
    pass


class NoLines(ValueError):
    pass


@dataclass
class MetricField:
    """A metric field g(h, T) on the rectangle ``domain`` = (h_min, h_max, T_min, T_max).

    ``eval_many(hs, Ts)`` may be supplied for batched evaluation; it returns
    an (n, 7) array of (g_hh, g_hT, g_TT, g_hh_c, g_hh_nc, g_hh_static,
    g_hh_thermal), NaN where unavailable. When the last two are present,
    g_hh = g_hh_static + g_hh_thermal with g_hh_static independent of T, and
    curvature differentiates the two parts separately: a thermal part far
    below the rounding level of g_hh is then still resolved.
    """

    eval: Callable[[float, float], SymMat2]
    domain: tuple[float, float, float, float]
    eval_many: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        h0, h1, t0, t1 = self.domain
        if not (h0 < h1 and 0 < t0 < t1):
            raise ValueError(f"invalid domain {self.domain}")

    def sample(self, hs, Ts) -> np.ndarray:
        hs = np.atleast_1d(np.asarray(hs, dtype=float))
        Ts = np.atleast_1d(np.asarray(Ts, dtype=float))
        if self.eval_many is not None:
            return np.asarray(self.eval_many(hs, Ts), dtype=float).reshape(-1, NCOL)
        out = np.full((hs.size, NCOL), np.nan)
        for i, (h, T) in enumerate(zip(hs, Ts)):
            g = self.eval(h, T)
            out[i, :3] = g.a11, g.a12, g.a22
        return out


def ising_field(domain, spec: QuadratureSpec | None = None) -> MetricField:
    """Transverse-field Ising metric as a :class:`MetricField`."""
    from .ising import ISING, metric_at
    from .quasifree import thermodynamic_components_many

    def many(hs, Ts):
        # the split only pays off (and only avoids cancellation) deep in the gap
        split = bool(np.all(np.abs(np.abs(hs) - 1.0) > SPLIT_GAP_RATIO * Ts))
        c = thermodynamic_components_many(ISING, hs, Ts, spec, split=split)
        if not split:
            c = np.column_stack([c, np.full((len(c), 2), np.nan)])
        return np.column_stack([c[:, 0] + c[:, 1], c[:, 2], c[:, 3], c[:, 0], c[:, 1],
                                c[:, 4], c[:, 5]])

    return MetricField(lambda h, T: metric_at(h, T, spec), tuple(domain), many)


def default_step(h_axis, T_axis) -> float:
    spacing = min(np.min(np.diff(h_axis)), np.min(np.diff(T_axis)))
    return max(1e-4, 1e-3 * spacing)


def stencil_steps(T, step):
    """(step_h, step_T) at temperature T.

    Boltzmann factors exp(-gap/T) vary on a scale ~T in h and ~T^2/gap in T,
    so at low temperature a fixed step leaves a large truncation error in
    the curvature; the steps shrink accordingly.
    """
    return min(step, 5e-4 * T), min(step, 2.5e-3 * T * T)


def _stencil(h, T, step_h, step_T):
    o = np.array([-1.0, 0.0, 1.0])
    hh, tt = np.meshgrid(h + o * step_h, T + o * step_T, indexing="ij")
    return hh.ravel(), tt.ravel()


def brioschi(E, F, G, step_h, step_T=None, deg_eps=DEG_EPS) -> float:
    """Gaussian curvature from 3x3 stencils of E, F, G (index [i_h, i_T],
    centre at [1, 1]) spaced ``step_h`` in h and ``step_T`` (default
    ``step_h``) in T.

    ``E`` may be a tuple of stencils summing to E; each is differenced on
    its own."""
    parts = E if isinstance(E, tuple) else (E,)
    E = sum(parts)

    def linear(op):
        def d(X):
            if X is E:
                return sum(op(p) for p in parts)
            return op(X)
        return d

    sh = step_h
    sT = step_h if step_T is None else step_T
    d_h = linear(lambda X: (X[2, 1] - X[0, 1]) / (2 * sh))
    d_T = linear(lambda X: (X[1, 2] - X[1, 0]) / (2 * sT))
    d_hh = linear(lambda X: (X[2, 1] - 2 * X[1, 1] + X[0, 1]) / sh ** 2)
    d_TT = linear(lambda X: (X[1, 2] - 2 * X[1, 1] + X[1, 0]) / sT ** 2)
    d_hT = linear(lambda X: (X[2, 2] - X[2, 0] - X[0, 2] + X[0, 0]) / (4 * sh * sT))

    e, f, g = E[1, 1], F[1, 1], G[1, 1]
    det = e * g - f * f
    if not det > deg_eps * (e + g) ** 2:
        raise DegenerateMetric(f"det g = {det:.3e} at trace {e + g:.3e}")
    Eh, ET, Fh, FT, Gh, GT = d_h(E), d_T(E), d_h(F), d_T(F), d_h(G), d_T(G)
    a = np.array([
        [-0.5 * d_TT(E) + d_hT(F) - 0.5 * d_hh(G), 0.5 * Eh, Fh - 0.5 * ET],
        [FT - 0.5 * Gh, e, f],
        [0.5 * GT, f, g],
    ])
    b = np.array([
        [0.0, 0.5 * ET, 0.5 * Gh],
        [0.5 * ET, e, f],
        [0.5 * Gh, f, g],
    ])
    return float((np.linalg.det(a) - np.linalg.det(b)) / det ** 2)


def _check_interior(mf, h, T, sh, sT):
    h0, h1, t0, t1 = mf.domain
    if not (h0 + 2 * sh <= h <= h1 - 2 * sh and t0 + 2 * sT <= T <= t1 - 2 * sT):
        raise ValueError(f"({h}, {T}) closer than two steps to the domain boundary")


def gaussian_curvature(mf: MetricField, p, step: float = 1e-4,
                       deg_eps: float = DEG_EPS, adapt: bool = True) -> float:
    """Gaussian curvature of E dh^2 + 2F dh dT + G dT^2 at p = (h, T).

    With ``adapt`` the stencil steps follow :func:`stencil_steps`.
    """
    h, T = p
    sh, sT = stencil_steps(T, step) if adapt else (step, step)
    _check_interior(mf, h, T, sh, sT)
    vals = mf.sample(*_stencil(h, T, sh, sT))
    return brioschi(*_stencil_efg(vals), sh, sT, deg_eps)


def _stencil_efg(vals):
    E, F, G, _, _, E0, E1 = (vals[:, i].reshape(3, 3) for i in range(NCOL))
    if np.all(np.isfinite(E0)) and np.all(np.isfinite(E1)):
        E = (E0, E1)
    return E, F, G


@dataclass
class ScanGrid:
    """Metric, eigenframe and curvature on an (h, T) lattice; arrays are
    indexed [iT, ih]."""

    h_axis: np.ndarray
    T_axis: np.ndarray
    g: np.ndarray               # (nT, nh, 3): g_hh, g_hT, g_TT
    g_hh_c: np.ndarray
    g_hh_nc: np.ndarray
    lambda_max: np.ndarray
    lambda_min: np.ndarray
    v_max: np.ndarray           # (nT, nh, 2)
    v_min: np.ndarray
    curvature: np.ndarray
    failures: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, h_axis, T_axis) -> "ScanGrid":
        h_axis = np.asarray(h_axis, dtype=float)
        T_axis = np.asarray(T_axis, dtype=float)
        for name, ax in (("h_axis", h_axis), ("T_axis", T_axis)):
            if ax.ndim != 1 or ax.size < 2 or np.any(np.diff(ax) <= 0):
                raise ValueError(f"{name} must be strictly increasing with >= 2 nodes")
        shape = (T_axis.size, h_axis.size)
        nan = lambda *extra: np.full(shape + extra, np.nan)  # noqa: E731
        return cls(h_axis, T_axis, nan(3), nan(), nan(), nan(), nan(),
                   nan(2), nan(2), nan())

    @property
    def shape(self):
        return self.lambda_max.shape

    def set_metric(self, iT, ih, row):
        self.g[iT, ih] = row[:3]
        self.g_hh_c[iT, ih] = row[3]
        self.g_hh_nc[iT, ih] = row[4]
        fr = eigen2(SymMat2(*row[:3]))
        self.lambda_max[iT, ih] = fr.lambda_max
        self.lambda_min[iT, ih] = fr.lambda_min
        self.v_max[iT, ih] = fr.v_max
        self.v_min[iT, ih] = fr.v_min

    def records(self) -> Iterator[dict]:
        """One dict per node, T-major / h-minor, keyed by :data:`COLUMNS`."""
        for iT, T in enumerate(self.T_axis):
            for ih, h in enumerate(self.h_axis):
                g = self.g[iT, ih]
                yield dict(zip(COLUMNS, (
                    float(h), float(T), g[0], g[1], g[2],
                    self.g_hh_c[iT, ih], self.g_hh_nc[iT, ih],
                    self.lambda_max[iT, ih], self.lambda_min[iT, ih],
                    self.v_max[iT, ih, 0], self.v_max[iT, ih, 1],
                    self.curvature[iT, ih])))


def eigen_field(mf: MetricField, h_axis, T_axis) -> ScanGrid:
    """Metric and eigenframe at every node; curvature left unset."""
    sg = ScanGrid.empty(h_axis, T_axis)
    for iT, T in enumerate(sg.T_axis):
        for ih, h in enumerate(sg.h_axis):
            try:
                sg.set_metric(iT, ih, mf.sample(h, T)[0])
            except Exception as exc:  # node-level failure, keep scanning
                sg.failures[(iT, ih)] = f"metric: {exc}"
    return sg


def scan(mf: MetricField, h_axis, T_axis, step: float | None = None,
         deg_eps: float = DEG_EPS, adapt: bool = True) -> ScanGrid:
    """Full scan: metric, eigenframe and, at interior nodes, curvature.

    Interior nodes are evaluated on their 3x3 curvature stencil in one batch,
    so the node value and its finite differences share a quadrature mesh.
    Boundary nodes carry no curvature.
    """
    sg = ScanGrid.empty(h_axis, T_axis)
    step = default_step(sg.h_axis, sg.T_axis) if step is None else step
    nT, nh = sg.shape
    for iT, T in enumerate(sg.T_axis):
        for ih, h in enumerate(sg.h_axis):
            interior = 0 < iT < nT - 1 and 0 < ih < nh - 1
            try:
                if interior:
                    sh, sT = stencil_steps(T, step) if adapt else (step, step)
                    vals = mf.sample(*_stencil(h, T, sh, sT))
                    sg.set_metric(iT, ih, vals[4])
                else:
                    sg.set_metric(iT, ih, mf.sample(h, T)[0])
            except Exception as exc:
                sg.failures[(iT, ih)] = f"metric: {exc}"
                continue
            if interior:
                try:
                    sg.curvature[iT, ih] = brioschi(*_stencil_efg(vals), sh, sT, deg_eps)
                except DegenerateMetric as exc:
                    sg.failures[(iT, ih)] = f"curvature: {exc}"
    return sg


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray  # (n, 2) rows of (h, T)
    kind: str

    def __len__(self):
        return len(self.points)


def _dedupe(points, tol=1e-14):
    out = [points[0]]
    for p in points[1:]:
        if np.max(np.abs(np.asarray(p) - out[-1])) > tol:
            out.append(p)
    return np.array(out)


def _chain(segments):
    """Join segments given as (key_a, key_b) pairs into ordered key paths."""
    adj: dict = {}
    for a, b in segments:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    used = set()
    paths = []

    def walk(start):
        path = [start]
        prev, cur = None, start
        while True:
            nxt = None
            for cand in adj[cur]:
                edge = frozenset((cur, cand))
                if edge not in used:
                    nxt = cand
                    used.add(edge)
                    break
            if nxt is None:
                return path
            path.append(nxt)
            prev, cur = cur, nxt
            if cur == start:
                return path

    # open chains first (degree-1 ends), then closed loops
    for key in sorted(adj, key=lambda k: (len(adj[k]) != 1, k)):
        if any(frozenset((key, c)) not in used for c in adj[key]):
            paths.append(walk(key))
    return paths


# marching squares: corners ordered (0,0), (0,1), (1,1), (1,0) in (iT, ih)
# offsets; edges 0: bottom (T fixed, h varies), 1: right, 2: top, 3: left
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))


def zero_curvature_contours(sg: ScanGrid, values: np.ndarray | None = None,
                            kind: str = "zero-curvature") -> list[Polyline]:
    """K = 0 level set by marching squares with linear edge interpolation.

    Cells touching a missing value are skipped; saddle cells are resolved by
    the mean of their corners.
    """
    K = sg.curvature if values is None else np.asarray(values, dtype=float)
    nT, nh = K.shape
    H, TT = np.meshgrid(sg.h_axis, sg.T_axis)
    points = {}
    segments = []

    def corner(c, iT, ih):
        dT, dh = ((0, 0), (0, 1), (1, 1), (1, 0))[c]
        return iT + dT, ih + dh

    def edge_key(iT, ih, e):
        a, b = (corner(c, iT, ih) for c in _EDGE_CORNERS[e])
        return (a, b) if a <= b else (b, a)

    def crossing(key):
        if key not in points:
            (t0, h0), (t1, h1) = key
            v0, v1 = K[t0, h0], K[t1, h1]
            s = v0 / (v0 - v1)
            points[key] = np.array([H[t0, h0] + s * (H[t1, h1] - H[t0, h0]),
                                    TT[t0, h0] + s * (TT[t1, h1] - TT[t0, h0])])
        return points[key]

    for iT in range(nT - 1):
        for ih in range(nh - 1):
            v = [K[corner(c, iT, ih)] for c in range(4)]
            if not np.all(np.isfinite(v)):
                continue
            inside = [x > 0 for x in v]
            cut = [e for e in range(4)
                   if inside[_EDGE_CORNERS[e][0]] != inside[_EDGE_CORNERS[e][1]]]
            if not cut:
                continue
            if len(cut) == 2:
                pairs = [tuple(cut)]
            else:
                centre_inside = np.mean(v) > 0
                # saddle: join edges so the centre's side stays connected
                if centre_inside == inside[0]:
                    pairs = [(0, 1), (2, 3)]
                else:
                    pairs = [(0, 3), (1, 2)]
            for e1, e2 in pairs:
                k1, k2 = edge_key(iT, ih, e1), edge_key(iT, ih, e2)
                crossing(k1)
                crossing(k2)
                segments.append((k1, k2))

    lines = []
    for path in _chain(segments):
        pts = _dedupe([points[k] for k in path])
        if len(pts) >= 2:
            lines.append(Polyline(pts, kind))
    return lines


_GRID_DIRECTIONS = ((0, 1), (1, 0), (1, 1), (1, -1))  # (dT, dh) index steps


def ridge_nodes(sg: ScanGrid) -> np.ndarray:
    """Boolean mask of nodes whose lambda_max is a strict local maximum along
    the grid direction best aligned with v_min."""
    lam = sg.lambda_max
    nT, nh = lam.shape
    mask = np.zeros((nT, nh), dtype=bool)
    for iT in range(1, nT - 1):
        for ih in range(1, nh - 1):
            vmin = sg.v_min[iT, ih]
            if not np.all(np.isfinite(vmin)) or not np.isfinite(lam[iT, ih]):
                continue
            dh_phys = 0.5 * (sg.h_axis[ih + 1] - sg.h_axis[ih - 1])
            dT_phys = 0.5 * (sg.T_axis[iT + 1] - sg.T_axis[iT - 1])
            best, best_cos = None, -1.0
            for dT, dh in _GRID_DIRECTIONS:
                d = np.array([dh * dh_phys, dT * dT_phys])
                c = abs(d @ vmin) / np.linalg.norm(d)
                if c > best_cos + 1e-12:
                    best, best_cos = (dT, dh), c
            dT, dh = best
            here = lam[iT, ih]
            fwd, back = lam[iT + dT, ih + dh], lam[iT - dT, ih - dh]
            mask[iT, ih] = here > fwd and here > back
    return mask


def ridge_lines(sg: ScanGrid) -> list[Polyline]:
    """Ridge nodes chained into polylines through 8-neighbour adjacency."""
    mask = ridge_nodes(sg)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    lines = []
    for lab in range(1, n + 1):
        nodes = {tuple(x) for x in np.argwhere(labels == lab)}
        if len(nodes) < 2:
            continue
        for path in _walk_component(nodes):
            if len(path) >= 2:
                pts = np.array([[sg.h_axis[ih], sg.T_axis[iT]] for iT, ih in path])
                lines.append(Polyline(pts, "ridge"))
    return lines


def _neighbours(node, nodes):
    iT, ih = node
    return [(iT + a, ih + b) for a in (-1, 0, 1) for b in (-1, 0, 1)
            if (a or b) and (iT + a, ih + b) in nodes]


def _walk_component(nodes):
    """Cover an 8-connected node set with adjacent-step paths, starting each
    path at the node with the fewest unvisited neighbours."""
    left = set(nodes)
    paths = []
    while left:
        start = min(left, key=lambda n: (len(_neighbours(n, left)), n))
        path = [start]
        left.discard(start)
        cur = start
        while True:
            cand = _neighbours(cur, left)
            if not cand:
                break
            cur = min(cand, key=lambda n: (len(_neighbours(n, left)), n))
            left.discard(cur)
            path.append(cur)
        paths.append(path)
    return paths


def point_polyline_distance(p, line: Polyline) -> float:
    p = np.asarray(p, dtype=float)
    a = line.points[:-1]
    b = line.points[1:]
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.min(np.linalg.norm(proj - p, axis=1)))


@dataclass(frozen=True)
class CrossoverReport:
    """Mean distance of each ridge polyline to the nearest zero-curvature
    polyline (in (h, T) units)."""

    ridge_distances: tuple[float, ...]
    ridge_sizes: tuple[int, ...]
    n_contours: int

    @property
    def mean_distance(self) -> float:
        w = np.asarray(self.ridge_sizes, dtype=float)
        return float(np.sum(w * np.asarray(self.ridge_distances)) / w.sum())

    def summary(self) -> str:
        lines = [f"ridges: {len(self.ridge_distances)}, zero-curvature lines: "
                 f"{self.n_contours}, weighted mean distance: {self.mean_distance:.6g}"]
        for i, (d, n) in enumerate(zip(self.ridge_distances, self.ridge_sizes)):
            lines.append(f"  ridge {i}: {n} points, mean distance {d:.6g}")
        return "\n".join(lines)


def crossover_report(sg: ScanGrid | None = None, ridges=None, contours=None) -> CrossoverReport:
    if ridges is None:
        ridges = ridge_lines(sg)
    if contours is None:
        contours = zero_curvature_contours(sg)
    if not ridges or not contours:
        raise NoLines(f"{len(ridges)} ridge and {len(contours)} zero-curvature polylines")
    dists, sizes = [], []
    for r in ridges:
        d = [min(point_polyline_distance(p, c) for c in contours) for p in r.points]
        dists.append(float(np.mean(d)))
        sizes.append(len(r))
    return CrossoverReport(tuple(dists), tuple(sizes), len(contours))


def polyline_slope(line: Polyline) -> float:
    """Least-squares dT/dh over the polyline's points."""
    return float(np.polyfit(line.points[:, 0], line.points[:, 1], 1)[0])


def sphere_field(domain=(0.3, math.pi - 0.3, 0.1, 2.0)) -> MetricField:
    """Unit-sphere metric dh^2 + sin^2(h) dT^2 (h as colatitude); K = 1."""
    return MetricField(lambda h, T: SymMat2(1.0, 0.0, math.sin(h) ** 2), domain)


def constant_field(g: SymMat2, domain=(-1.0, 1.0, 0.1, 1.0)) -> MetricField:
    return MetricField(lambda h, T: g, domain)
