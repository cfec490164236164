"""Planar cell-grid geometry: empty-cell contours, necklaces, coins and b-contours.

The grid has cell side ``q = 2d + delta`` and is centred on the box: cell
``(k, l)`` is the square of side ``q`` centred at ``centre + (k q, l q)``,
for ``|k|, |l| <= K``.  The origin of all geometric statements is the box
centre, which is the centre of cell ``(0, 0)``.

A c-contour is a closed chain of empty cells, 4-adjacent in cyclic order,
whose polygon through the cell centres winds around the origin.  Contours are
found layer by layer as shortest enclosing cycles: a cycle encloses the origin
iff it uses an odd number of the bonds ``(k, 0)-(k, 1)``, ``k >= 1`` (the ray
``y = q/2`` to the right of the origin cell), so a shortest enclosing cycle is
a shortest path between the two sheets of the parity double cover.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from matplotlib.path import Path
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial import cKDTree

from .bounds import ContourParams
from .sampler import Configuration


class ContourTooShort(ValueError):
    pass


@dataclass(frozen=True)
class CellGrid:
    q: float
    L: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("cell side must be positive")
        if self.K < 1:
            raise ValueError(f"box side L={self.L} too small for cells of side {self.q}")

    @classmethod
    def from_params(cls, d: float, delta: float, L: float) -> "CellGrid":
        if not delta > 0:
            raise ValueError("delta must be positive")
        return cls(q=2 * d + delta, L=L, delta=delta)

    @property
    def centre(self) -> np.ndarray:
        return np.array([self.L / 2, self.L / 2])

    @property
    def K(self) -> int:
        return int(math.floor((self.L / self.q - 1) / 2))

    @property
    def side(self) -> int:
        return 2 * self.K + 1

    @property
    def area(self) -> float:
        return self.q * self.q

    def contains(self, k: int, l: int) -> bool:
        return abs(k) <= self.K and abs(l) <= self.K

    def cells(self) -> list:
        r = range(-self.K, self.K + 1)
        return [(k, l) for k in r for l in r]

    def cell_centre(self, k: int, l: int) -> np.ndarray:
        return self.centre + self.q * np.array([k, l], dtype=float)

    def cell_of(self, points: np.ndarray) -> np.ndarray:
        """Integer ``(k, l)`` per point; may fall outside the grid in the margin."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.floor((pts - self.centre) / self.q + 0.5).astype(np.int64)

    def flat(self, k: int, l: int) -> int:
        return (k + self.K) * self.side + (l + self.K)

    def unflat(self, i: int) -> tuple[int, int]:
        i = int(i)
        return (i // self.side - self.K, i % self.side - self.K)


def empty_cells(cfg: Configuration, grid: CellGrid) -> set:
    """Grid cells containing no point of ``cfg``."""
    occupied = {tuple(c) for c in grid.cell_of(cfg.points).tolist()}
    return {c for c in grid.cells() if c not in occupied}


@dataclass(frozen=True)
class Contour:
    cells: tuple
    n: int
    encloses_origin: bool = True

    def polygon(self, grid: CellGrid) -> np.ndarray:
        return np.array([grid.cell_centre(k, l) for k, l in self.cells])


@dataclass
class ContourReport:
    contours: list = field(default_factory=list)

    @property
    def lengths(self) -> list:
        return [c.n for c in self.contours]

    def to_json(self) -> list:
        return [[list(c) for c in ct.cells] for ct in self.contours]


def _neighbours(c):
    k, l = c
    return ((k + 1, l), (k - 1, l), (k, l + 1), (k, l - 1))


def _parity_bond(u, v) -> bool:
    return u[0] == v[0] and u[0] >= 1 and {u[1], v[1]} == {0, 1}


def _shortest_enclosing_cycle(cells: set, grid: CellGrid) -> Optional[list]:
    starts = sorted(c for c in cells if c[1] == 0 and c[0] >= 1)
    if not starts:
        return None
    N = grid.side * grid.side
    rows, cols = [], []
    for u in cells:
        iu = grid.flat(*u)
        for v in ((u[0] + 1, u[1]), (u[0], u[1] + 1)):
            if v not in cells:
                continue
            iv = grid.flat(*v)
            flip = N if _parity_bond(u, v) else 0
            rows += [iu, iu + N]
            cols += [iv + flip, (iv + N - flip) if flip else iv + N]
    if not rows:
        return None
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(2 * N, 2 * N)).tocsr()
    idx = [grid.flat(*s) for s in starts]
    dist, pred = shortest_path(graph, directed=False, unweighted=True, indices=idx,
                               return_predecessors=True)
    best, best_i = math.inf, -1
    for j, s in enumerate(idx):
        if dist[j, s + N] < best:
            best, best_i = dist[j, s + N], j
    if not np.isfinite(best):
        return None
    path = []
    node = idx[best_i] + N
    while node != idx[best_i]:
        path.append(grid.unflat(node % N))
        node = pred[best_i, node]
    path.reverse()
    return path


def _interior(polygon_cells: list, candidates: Iterable) -> set:
    cand = list(candidates)
    if not cand:
        return set()
    poly = Path(np.array(polygon_cells, dtype=float), closed=False)
    inside = poly.contains_points(np.array(cand, dtype=float))
    return {c for c, ins in zip(cand, inside) if ins}


def c_contours_around_origin(empty: set, grid: CellGrid) -> ContourReport:
    """Nested empty-cell contours around the origin cell, innermost first.

    Each layer is a shortest enclosing cycle of the empty cells left after
    removing the previous layers and everything they enclose, so every
    reported contour is a simple chordless cycle and the layers are disjoint.
    """
    remaining = {c for c in empty if grid.contains(*c) and c != (0, 0)}
    out = ContourReport()
    while True:
        cyc = _shortest_enclosing_cycle(remaining, grid)
        if cyc is None:
            return out
        out.contours.append(Contour(tuple(cyc), len(cyc)))
        remaining -= set(cyc)
        remaining -= _interior(cyc, remaining)


def winds_around_origin(cells: Sequence) -> bool:
    """Parity test for the polygon through the cell centres (in cell units)."""
    n = len(cells)
    crossings = sum(_parity_bond(cells[i], cells[(i + 1) % n]) for i in range(n))
    return crossings % 2 == 1


def is_simple_chordless_cycle(cells: Sequence) -> bool:
    """True iff consecutive cells are 4-adjacent, cells are distinct and no other pair is adjacent."""
    n = len(cells)
    if n < 4 or len(set(map(tuple, cells))) != n:
        return False
    pos = {tuple(c): i for i, c in enumerate(cells)}
    for i, c in enumerate(cells):
        for nb in _neighbours(tuple(c)):
            j = pos.get(nb)
            if j is not None and (j - i) % n not in (1, n - 1):
                return False
        if tuple(cells[(i + 1) % n]) not in _neighbours(tuple(c)):
            return False
    return True


@dataclass
class ContourStatistics:
    n: np.ndarray
    counts: np.ndarray
    n_snapshots: int
    envelope: np.ndarray
    G: float = math.nan

    @property
    def freq(self) -> np.ndarray:
        return self.counts / self.n_snapshots

    def rows(self) -> list:
        return [(int(n), float(f), float(e)) for n, f, e in zip(self.n, self.freq, self.envelope)]


def contour_envelope(n, beta: float, lam: float, cp: ContourParams) -> np.ndarray:
    """``c(beta) exp(-n alpha G)`` with ``c(beta) = exp(beta m)``; NaN where ``G <= 0``."""
    n = np.asarray(n, dtype=float)
    G = cp.G(beta, lam)
    if G <= 0:
        return np.full(n.shape, math.nan)
    return np.exp(beta * cp.m - n * cp.alpha * G)


def contour_statistics(snapshots: Sequence[Configuration], grid: CellGrid,
                       beta: Optional[float] = None, lam: Optional[float] = None,
                       cp: Optional[ContourParams] = None) -> ContourStatistics:
    """Per length ``n``, the fraction of snapshots with an enclosing contour layer of length ``n``.

    Rows cover every even ``n`` from 8 to the outermost ring length ``8K``.
    The envelope is attached when ``beta``, ``lam`` and ``cp`` are given.
    """
    if not len(snapshots):
        raise ValueError("need at least one snapshot")
    ns = np.arange(8, 8 * grid.K + 1, 2)
    counts = np.zeros(len(ns), dtype=np.int64)
    for cfg in snapshots:
        lengths = set(c_contours_around_origin(empty_cells(cfg, grid), grid).lengths)
        for n in lengths:
            if 8 <= n <= ns[-1]:
                counts[(n - 8) // 2] += 1
    if cp is not None and beta is not None and lam is not None:
        env = contour_envelope(ns, beta, lam, cp)
        G = cp.G(beta, lam)
    else:
        env, G = np.full(len(ns), math.nan), math.nan
    return ContourStatistics(ns, counts, len(snapshots), env, G)


# --------------------------------------------------------------------------
# necklace

def _exit_param(p0, p1, x, rho):
    """Largest ``t`` with ``|p0 + t (p1 - p0) - x| = rho``, or ``inf`` if the line misses the circle."""
    d = p1 - p0
    w = p0 - x
    A = d @ d
    B = 2 * (d @ w)
    C = w @ w - rho * rho
    disc = B * B - 4 * A * C
    if disc < 0:
        return math.inf
    return (-B + math.sqrt(disc)) / (2 * A)


def _walk(poly: np.ndarray, seg_len: np.ndarray, start_seg: int, start_t: float, rho: float) -> list:
    total = seg_len.sum()
    m = len(poly)
    x = poly[start_seg] + start_t * (poly[(start_seg + 1) % m] - poly[start_seg])
    out = [x]
    seg, t, arc = start_seg, start_t, 0.0
    while True:
        # advance along the curve until leaving the ball around the last point
        while True:
            p0, p1 = poly[seg % m], poly[(seg + 1) % m]
            te = _exit_param(p0, p1, out[-1], rho)
            if t - 1e-12 <= te <= 1.0 + 1e-12:
                te = min(max(te, t), 1.0)
                arc += (te - t) * seg_len[seg % m]
                t = te
                break
            arc += (1.0 - t) * seg_len[seg % m]
            seg, t = seg + 1, 0.0
            if arc >= total:
                return out
        if total - arc < rho * (1 - 1e-9):
            return out
        out.append(p0 + t * (p1 - p0))


def necklace_points(gamma, a: float, eps: float, d: Optional[float] = None,
                    n: Optional[int] = None, n_offsets: int = 4) -> np.ndarray:
    """Points ``D`` spaced by chords ``a + eps/2`` along the closed polygon ``gamma``.

    Greedy rule: the next point is the first exit of the curve from the disc
    of radius ``a + eps/2`` around the current one, and a point is only placed
    if the arc left back to the start is at least that radius.  The walk is
    started at every vertex and ``n_offsets - 1`` fractions of each edge, and
    the longest necklace is returned.

    Raises:
        ContourTooShort: if ``d`` is given and ``n <= 2 sqrt(2) a / d`` (``n``
            defaults to the number of vertices).
    """
    poly = np.asarray(gamma, dtype=float)
    if n is None:
        n = len(poly)
    if d is not None and n <= 2 * math.sqrt(2) * a / d:
        raise ContourTooShort(f"contour length {n} <= 2*sqrt(2)*a/d = {2 * math.sqrt(2) * a / d:.4g}")
    rho = a + eps / 2
    seg_len = np.linalg.norm(np.roll(poly, -1, axis=0) - poly, axis=1)
    best = None
    for s in range(len(poly)):
        for j in range(n_offsets):
            pts = _walk(poly, seg_len, s, j / n_offsets, rho)
            if best is None or len(pts) > len(best):
                best = pts
    return np.array(best)


# --------------------------------------------------------------------------
# coins and b-contours

def coin_covers_cell(centre, r: float, grid: CellGrid) -> Optional[tuple]:
    """A cell lying entirely inside the closed disc ``B_r(centre)``, or None.

    The farthest corner of cell ``(k, l)`` lies at distance
    ``hypot(|dx| + q/2, |dy| + q/2)`` from the centre, where ``(dx, dy)`` is
    the offset to the cell centre, so the cell containing the centre is the
    best candidate and the only one tested.  It is covered whenever
    ``r >= sqrt(2) q``.  Cells are indexed on the infinite lattice.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    c = np.asarray(centre, dtype=float)
    rel = (c - grid.centre) / grid.q
    home = np.floor(rel + 0.5)
    dx, dy = np.abs(rel - home) * grid.q + grid.q / 2
    if dx * dx + dy * dy <= r * r:
        return (int(home[0]), int(home[1]))
    return None


@dataclass
class BContour:
    exists: bool
    step: float
    inside: np.ndarray = field(repr=False)
    extent: int = 0

    def site_of(self, points: np.ndarray, centre: np.ndarray) -> np.ndarray:
        idx = np.rint((np.asarray(points) - centre) / self.step).astype(np.int64) + self.extent
        return np.clip(idx, 0, 2 * self.extent)

    def encloses(self, points: np.ndarray, centre: np.ndarray) -> np.ndarray:
        idx = self.site_of(points, centre)
        return self.inside[idx[:, 0], idx[:, 1]]


def b_contour(cfg: Configuration, ell: float, step: Optional[float] = None) -> BContour:
    """Search for a closed curve around the box centre at distance ``> ell`` from every point.

    Sites of a square lattice of spacing ``step <= ell/8`` centred on the box
    centre are free when farther than ``ell + step`` from every point.  A
    4-connected circuit of free sites around the centre (a polygon whose
    points all lie farther than ``ell`` from the configuration) exists iff
    the 8-connected blocked component of the centre site, with that site
    counted as blocked, avoids the lattice border.
    """
    if cfg.nu != 2:
        raise ValueError("b-contours are planar")
    if step is None:
        step = ell / 8
    if not 0 < step <= ell / 8 * (1 + 1e-12):
        raise ValueError("step must lie in (0, ell/8]")
    E = int(math.floor(cfg.L / 2 / step))
    ax = np.arange(-E, E + 1) * step
    centre = np.array([cfg.L / 2, cfg.L / 2])
    gx, gy = np.meshgrid(ax + centre[0], ax + centre[1], indexing="ij")
    if cfg.n:
        dist, _ = cKDTree(cfg.points).query(np.column_stack([gx.ravel(), gy.ravel()]),
                                            distance_upper_bound=ell + step + 1e-12)
        blocked = (dist <= ell + step).reshape(gx.shape)
    else:
        blocked = np.zeros(gx.shape, dtype=bool)
    blocked[E, E] = True
    lab, _ = ndimage.label(blocked, structure=np.ones((3, 3), dtype=int))
    comp = lab == lab[E, E]
    border = np.concatenate([comp[0], comp[-1], comp[:, 0], comp[:, -1]])
    exists = not border.any()
    # sites not reachable from the border without crossing the centre component
    outside_lab, _ = ndimage.label(~comp)
    edge = np.unique(np.concatenate([outside_lab[0], outside_lab[-1],
                                     outside_lab[:, 0], outside_lab[:, -1]]))
    outside = np.isin(outside_lab, edge[edge > 0])
    inside = ~outside if exists else np.zeros_like(comp)
    return BContour(exists, step, inside, E)


def b_contour_exists(cfg: Configuration, ell: float, step: Optional[float] = None) -> bool:
    return b_contour(cfg, ell, step).exists
