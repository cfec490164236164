import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsperc.bounds import ContourParams, alpha_constant
from gibbsperc.contour2d import (CellGrid, ContourTooShort, b_contour, b_contour_exists,
                                 c_contours_around_origin, coin_covers_cell, contour_envelope,
                                 contour_statistics, empty_cells, is_simple_chordless_cycle,
                                 necklace_points, winds_around_origin)
from gibbsperc.percolation import clusters
from gibbsperc.sampler import Configuration

GRID = CellGrid(q=1.0, L=11.0)


def ring(r):
    return {c for c in GRID.cells() if max(abs(c[0]), abs(c[1])) == r}


def test_grid_layout():
    g = CellGrid.from_params(d=1.0, delta=0.5, L=90.0)
    assert g.q == 2.5 and g.K == 17
    assert g.cell_of(g.centre).tolist() == [[0, 0]]
    assert g.cell_of(g.cell_centre(3, -2) + 0.49 * g.q).tolist() == [[3, -2]]


def test_empty_cells():
    assert empty_cells(Configuration(np.zeros((0, 2)), 11.0), GRID) == set(GRID.cells())
    centres = np.array([GRID.cell_centre(*c) for c in GRID.cells()])
    assert empty_cells(Configuration(centres, 11.0), GRID) == set()
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 11.0, (60, 2))
    occ = set()
    for x in pts:
        k = int(math.floor((x[0] - 5.5) + 0.5))
        l = int(math.floor((x[1] - 5.5) + 0.5))
        occ.add((k, l))
    assert empty_cells(Configuration(pts, 11.0), GRID) == set(GRID.cells()) - occ


def test_minimal_ring():
    rep = c_contours_around_origin(ring(1), GRID)
    assert rep.lengths == [8]
    assert set(rep.contours[0].cells) == ring(1)


def test_broken_ring():
    assert c_contours_around_origin(ring(1) - {(1, 1)}, GRID).lengths == []
    assert c_contours_around_origin(ring(1) - {(0, -1)}, GRID).lengths == []


def test_nested_double_ring():
    rep = c_contours_around_origin(ring(1) | ring(2), GRID)
    assert rep.lengths == [8, 16]
    assert set(rep.contours[1].cells) == ring(2)


def test_all_empty_gives_every_layer():
    assert c_contours_around_origin(set(GRID.cells()), GRID).lengths == [8, 16, 24, 32, 40]


def _transform(cells, t):
    ops = [lambda k, l: (k, l), lambda k, l: (-l, k), lambda k, l: (-k, -l), lambda k, l: (l, -k),
           lambda k, l: (-k, l), lambda k, l: (k, -l), lambda k, l: (l, k), lambda k, l: (-l, -k)]
    return {ops[t](*c) for c in cells}


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10 ** 6), p=st.floats(0.4, 0.9), t=st.integers(0, 7))
def test_contours_symmetric_and_simple(seed, p, t):
    rng = np.random.default_rng(seed)
    empty = {c for c in GRID.cells() if rng.random() < p}
    rep = c_contours_around_origin(empty, GRID)
    rep_t = c_contours_around_origin(_transform(empty, t), GRID)
    assert rep.lengths == rep_t.lengths
    seen = set()
    for ct in rep.contours:
        assert is_simple_chordless_cycle(ct.cells)
        assert winds_around_origin(ct.cells)
        assert set(ct.cells) <= empty
        assert not (set(ct.cells) & seen)
        seen |= set(ct.cells)
    assert rep.lengths == sorted(rep.lengths)


def test_contour_statistics_sparse_and_counts():
    L = 20.0
    grid = CellGrid(q=2.5, L=L)
    snaps = [Configuration(np.zeros((0, 2)), L) for _ in range(3)]
    st_ = contour_statistics(snaps, grid)
    f = dict(zip(st_.n.tolist(), st_.freq.tolist()))
    assert f[8] == 1.0 and f[16] == 1.0 and f[10] == 0.0
    assert np.all(st_.counts <= st_.n_snapshots)


def test_contour_envelope():
    cp = ContourParams(m=0.9, eps=0.5, a=1.0, d=1.0, delta=0.5)
    env = contour_envelope([8, 10], beta=6.0, lam=1.0, cp=cp)
    G = cp.G(6.0, 1.0)
    assert env[0] == pytest.approx(math.exp(6 * 0.9 - 8 * cp.alpha * G))
    assert env[1] < env[0]
    assert np.isnan(contour_envelope([8], beta=0.0, lam=1e-3, cp=cp)).all()


def square_ring_cells(side):
    s = side - 1
    return ([(i, 0) for i in range(s)] + [(s, j) for j in range(s)]
            + [(s - i, s) for i in range(s)] + [(0, s - j) for j in range(s)])


def test_necklace_on_square():
    poly = np.array(square_ring_cells(10), dtype=float)  # perimeter 36
    D = necklace_points(poly, a=0.8, eps=0.2)
    assert len(D) == 40
    chords = np.linalg.norm(np.diff(D, axis=0), axis=1)
    assert chords == pytest.approx(0.9, abs=1e-9)


def test_necklace_too_short():
    poly = np.array(square_ring_cells(3), dtype=float)
    with pytest.raises(ContourTooShort):
        necklace_points(poly, a=4.0, eps=0.1, d=1.0)


def random_contours(count, grid, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        empty = {c for c in grid.cells() if rng.random() < rng.uniform(0.55, 0.95)}
        out += [ct for ct in c_contours_around_origin(empty, grid).contours]
    return out[:count]


@pytest.mark.parametrize("a,eps", [(1.0, 0.5), (1.25, 0.3), (1.5, 0.5), (1.1, 0.05)])
def test_necklace_counts_between_bounds(a, eps):
    d, delta = 1.0, 0.5
    grid = CellGrid.from_params(d, delta, 40.0)
    q = grid.q
    rho = a + eps / 2
    alpha = alpha_constant(a, eps, d, delta)
    for ct in random_contours(30, grid, seed=int(a * 100)):
        D = necklace_points(ct.polygon(grid), a, eps, d=d)
        assert alpha * ct.n <= len(D) <= math.floor(q * ct.n / rho)
        assert np.all(np.linalg.norm(np.diff(D, axis=0), axis=1) == pytest.approx(rho, abs=1e-9))


def test_coin_small_disc_at_corner():
    corner = GRID.cell_centre(0, 0) + 0.5
    assert coin_covers_cell(corner, 0.4, GRID) is None


def corners_inside(grid, cell, centre, r):
    cc = grid.cell_centre(*cell)
    return all(np.hypot(cc[0] + sx * grid.q / 2 - centre[0], cc[1] + sy * grid.q / 2 - centre[1]) <= r
               for sx in (-1, 1) for sy in (-1, 1))


def test_coin_random_centres_large_radius():
    grid = CellGrid(q=2.5, L=90.0)
    rng = np.random.default_rng(1)
    for c in rng.uniform(0, 90, (2000, 2)):
        cell = coin_covers_cell(c, 1.5 * grid.q, grid)
        assert cell is not None and corners_inside(grid, cell, c, 1.5 * grid.q)


def test_coin_agrees_with_exhaustive_search():
    grid = CellGrid(q=1.0, L=11.0)
    rng = np.random.default_rng(2)
    for _ in range(3000):
        c = rng.uniform(2, 9, 2)
        r = rng.uniform(0.3, 2.0)
        home = tuple(int(v) for v in np.floor(c - 5.5 + 0.5))
        brute = [(k, l) for k in range(home[0] - 3, home[0] + 4) for l in range(home[1] - 3, home[1] + 4)
                 if corners_inside(grid, (k, l), c, r)]
        got = coin_covers_cell(c, r, grid)
        assert (got is None) == (not brute)
        if got is not None:
            assert got in brute


def test_b_contour_basic():
    assert b_contour_exists(Configuration(np.zeros((0, 2)), 20.0), 1.0)
    xs = np.arange(0, 20.01, 0.5)
    dense = np.array([[x, y] for x in xs for y in xs])
    assert not b_contour_exists(Configuration(dense, 20.0), 1.0)
    with pytest.raises(ValueError):
        b_contour(Configuration(dense, 20.0), 1.0, step=0.2)


def test_b_contour_annulus():
    # particles inside a disc of radius 2 and outside radius 8 leave a clear annulus
    rng = np.random.default_rng(3)
    c = np.array([10.0, 10.0])
    pts = rng.uniform(0, 20, (4000, 2))
    r = np.linalg.norm(pts - c, axis=1)
    pts = pts[(r < 2) | (r > 8)]
    assert b_contour_exists(Configuration(pts, 20.0), 1.0)
    pts2 = pts[(np.linalg.norm(pts - c, axis=1) < 2) | (np.linalg.norm(pts - c, axis=1) > 4)]
    assert not b_contour_exists(Configuration(np.vstack([pts2, [[10 + x, 10] for x in np.arange(2, 8.5, 0.4)]]), 20.0), 1.0)


def test_c_contour_implies_b_contour():
    # with q/2 > ell + 2 step, the polygon through an empty contour keeps clear of every particle
    ell = 0.5
    grid = CellGrid(q=1.5, L=30.0)
    rng = np.random.default_rng(8)
    agree = 0
    for _ in range(40):
        pts = rng.uniform(0, 30, (rng.integers(50, 400), 2))
        cfg = Configuration(pts, 30.0)
        has_c = bool(c_contours_around_origin(empty_cells(cfg, grid), grid).contours)
        if has_c:
            assert b_contour_exists(cfg, ell)
            agree += 1
    assert agree > 5


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(20, 400))
def test_b_contour_blocks_clusters(seed, n):
    ell, L = 1.0, 20.0
    pts = np.random.default_rng(seed).uniform(0, L, (n, 2))
    cfg = Configuration(pts, L)
    bc = b_contour(cfg, ell)
    if not bc.exists:
        return
    inside = bc.encloses(pts, np.array([L / 2, L / 2]))
    part = clusters(cfg, ell)
    for k in np.unique(part.labels[inside]):
        assert inside[part.labels == k].all()
