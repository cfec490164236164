"""Grand-canonical Metropolis sampler for a finite-volume Gibbs point process.

The target is the Gibbs density with respect to a Poisson process of rate
``lam`` on the box ``[0, L]^nu`` with an empty boundary condition: a
configuration ``w`` has weight proportional to ``lam**n * exp(-beta H(w))``
relative to the unit-rate Poisson process, ``H`` summing each unordered pair
once.  Hard-core overlaps are excluded for every ``beta``.

Moves are birth (uniform position), death (uniform particle) and translation
(uniform displacement in a ball).  Positions live in a linked cell list of
side ``>= r_cut`` so each energy evaluation touches ``3**nu`` cells.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .bounds import unit_ball_volume
from .potential import PotentialSpec, PowerTail

GENERATOR_NAME = f"numpy.random.Philox (numpy {np.__version__})"

KIND_BIRTH, KIND_DEATH, KIND_TRANSLATE = 0, 1, 2
KIND_NAMES = ("birth", "death", "translate")


class ConfigError(ValueError):
    pass


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a sub-task, stable across runs and thread counts."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


# --------------------------------------------------------------------------
# compiled kernels

@njit(cache=True, nogil=True)
def _phi(r, fam, pp):
    # caller has already excluded the hard core
    if r < pp[1]:
        return pp[3]
    if fam == 0:
        if r < pp[5]:
            return -pp[4]
        return 0.0
    if r < pp[2]:
        return -pp[4]
    return -pp[7] * r ** (-pp[6])


@njit(cache=True, nogil=True)
def _local_energy(x, skip, pos, head, nxt, nc, side, offsets, rc2, fam, pp, scratch):
    nu = x.shape[0]
    f2 = pp[0] * pp[0]
    for j in range(nu):
        c = int(x[j] / side)
        if c >= nc:
            c = nc - 1
        elif c < 0:
            c = 0
        scratch[j] = c
    e = 0.0
    for o in range(offsets.shape[0]):
        flat = 0
        ok = True
        for j in range(nu):
            c = scratch[j] + offsets[o, j]
            if c < 0 or c >= nc:
                ok = False
                break
            flat = flat * nc + c
        if not ok:
            continue
        i = head[flat]
        while i != -1:
            if i != skip:
                r2 = 0.0
                for j in range(nu):
                    t = pos[i, j] - x[j]
                    r2 += t * t
                if r2 <= rc2:
                    if r2 <= f2:
                        return True, 0.0
                    e += _phi(math.sqrt(r2), fam, pp)
            i = nxt[i]
    return False, e


@njit(cache=True, nogil=True)
def _cell_of(x, nc, side):
    flat = 0
    for j in range(x.shape[0]):
        c = int(x[j] / side)
        if c >= nc:
            c = nc - 1
        elif c < 0:
            c = 0
        flat = flat * nc + c
    return flat


@njit(cache=True, nogil=True)
def _link(i, cell, head, nxt, prv, cell_of):
    cell_of[i] = cell
    prv[i] = -1
    h = head[cell]
    nxt[i] = h
    if h != -1:
        prv[h] = i
    head[cell] = i


@njit(cache=True, nogil=True)
def _unlink(i, head, nxt, prv, cell_of):
    c = cell_of[i]
    if prv[i] != -1:
        nxt[prv[i]] = nxt[i]
    else:
        head[c] = nxt[i]
    if nxt[i] != -1:
        prv[nxt[i]] = prv[i]


@njit(cache=True, nogil=True)
def _move(u, normal, state, pos, head, nxt, prv, cell_of, L, nc, side, offsets, rc2,
          fam, pp, scratch, xbuf, beta, log_zv, p_birth, p_death, log_bd, radius):
    """One Metropolis move; returns (kind, accepted, delta_h).

    ``u`` holds [kind, index, accept, radius, position...] uniforms, ``state``
    holds [n, energy].  ``log_zv = ln(lam |V|)``, ``log_bd = ln(p_death / p_birth)``.
    """
    nu = pos.shape[1]
    n = int(state[0])
    if u[0] < p_birth:
        for j in range(nu):
            xbuf[j] = u[4 + j] * L
        hit, e = _local_energy(xbuf, -1, pos, head, nxt, nc, side, offsets, rc2, fam, pp, scratch)
        if hit:
            return 0, False, math.inf
        log_a = log_zv - math.log(n + 1.0) + log_bd - beta * e
        if log_a >= 0.0 or u[2] < math.exp(log_a):
            for j in range(nu):
                pos[n, j] = xbuf[j]
            _link(n, _cell_of(xbuf, nc, side), head, nxt, prv, cell_of)
            state[0] = n + 1
            state[1] += e
            return 0, True, e
        return 0, False, e
    if u[0] < p_birth + p_death:
        if n == 0:
            return 1, False, 0.0
        i = min(int(u[1] * n), n - 1)
        hit, e = _local_energy(pos[i], i, pos, head, nxt, nc, side, offsets, rc2, fam, pp, scratch)
        log_a = math.log(n) - log_zv - log_bd + beta * e
        if log_a >= 0.0 or u[2] < math.exp(log_a):
            last = n - 1
            _unlink(i, head, nxt, prv, cell_of)
            if i != last:
                c = cell_of[last]
                _unlink(last, head, nxt, prv, cell_of)
                for j in range(nu):
                    pos[i, j] = pos[last, j]
                _link(i, c, head, nxt, prv, cell_of)
            state[0] = last
            state[1] -= e
            return 1, True, -e
        return 1, False, -e
    # translation
    if n == 0:
        return 2, False, 0.0
    i = min(int(u[1] * n), n - 1)
    norm = 0.0
    for j in range(nu):
        norm += normal[j] * normal[j]
    norm = math.sqrt(norm)
    if norm == 0.0:
        return 2, False, 0.0
    rr = radius * u[3] ** (1.0 / nu)
    for j in range(nu):
        xbuf[j] = pos[i, j] + rr * normal[j] / norm
        if xbuf[j] < 0.0 or xbuf[j] > L:
            return 2, False, math.inf
    hit, e_new = _local_energy(xbuf, i, pos, head, nxt, nc, side, offsets, rc2, fam, pp, scratch)
    if hit:
        return 2, False, math.inf
    hit, e_old = _local_energy(pos[i], i, pos, head, nxt, nc, side, offsets, rc2, fam, pp, scratch)
    dh = e_new - e_old
    log_a = -beta * dh
    if log_a >= 0.0 or u[2] < math.exp(log_a):
        c_new = _cell_of(xbuf, nc, side)
        if c_new != cell_of[i]:
            _unlink(i, head, nxt, prv, cell_of)
            _link(i, c_new, head, nxt, prv, cell_of)
        for j in range(nu):
            pos[i, j] = xbuf[j]
        state[1] += dh
        return 2, True, dh
    return 2, False, dh


@njit(cache=True, nogil=True)
def _sweep(us, normals, state, pos, head, nxt, prv, cell_of, L, nc, side, offsets, rc2,
           fam, pp, beta, log_zv, p_birth, p_death, log_bd, radius, counts):
    nu = pos.shape[1]
    scratch = np.empty(nu, dtype=np.int64)
    xbuf = np.empty(nu)
    for k in range(us.shape[0]):
        kind, acc, dh = _move(us[k], normals[k], state, pos, head, nxt, prv, cell_of, L, nc,
                              side, offsets, rc2, fam, pp, scratch, xbuf, beta, log_zv,
                              p_birth, p_death, log_bd, radius)
        counts[kind, 0] += 1
        if acc:
            counts[kind, 1] += 1


@njit(cache=True, nogil=True)
def _total_energy(pos, n, head, nxt, nc, side, offsets, rc2, fam, pp):
    nu = pos.shape[1]
    scratch = np.empty(nu, dtype=np.int64)
    total = 0.0
    for i in range(n):
        hit, e = _local_energy(pos[i], i, pos, head, nxt, nc, side, offsets, rc2, fam, pp, scratch)
        if hit:
            return True, 0.0
        total += e
    return False, 0.5 * total


# --------------------------------------------------------------------------
# configurations

@dataclass(frozen=True)
class CellIndex:
    """Cell list in compressed form: ids of cell ``c`` are ``order[start[c]:start[c+1]]``."""

    side: float
    nc: int
    nu: int
    cell: np.ndarray
    order: np.ndarray
    start: np.ndarray

    def members(self, coords: Sequence[int]) -> np.ndarray:
        flat = 0
        for c in coords:
            flat = flat * self.nc + int(c)
        return self.order[self.start[flat]:self.start[flat + 1]]

    def as_dict(self) -> dict:
        out = {}
        for c in range(self.nc ** self.nu):
            ids = self.order[self.start[c]:self.start[c + 1]]
            if len(ids):
                out[c] = frozenset(int(i) for i in ids)
        return out


def grid_shape(L: float, r_cut: float) -> tuple[int, float]:
    """Cells per axis and their side (``>= r_cut``)."""
    nc = max(1, int(math.floor(L / r_cut)))
    return nc, L / nc


def flat_cells(points: np.ndarray, nc: int, side: float) -> np.ndarray:
    coords = np.clip((points / side).astype(np.int64), 0, nc - 1)
    flat = np.zeros(len(points), dtype=np.int64)
    for j in range(points.shape[1]):
        flat = flat * nc + coords[:, j]
    return flat


@dataclass(frozen=True)
class Configuration:
    """Finite point set in ``[0, L]^nu``; snapshots of a chain are instances of this."""

    points: np.ndarray
    L: float
    seed: Optional[int] = None
    sweep: Optional[int] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(0, 2) if pts.size == 0 else pts.reshape(1, -1)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def nu(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.n

    @property
    def volume(self) -> float:
        return self.L ** self.nu

    def inside_box(self) -> bool:
        return bool(np.all((self.points >= 0) & (self.points <= self.L)))

    def cell_index(self, side: float) -> CellIndex:
        nc, side = grid_shape(self.L, side)
        cell = flat_cells(self.points, nc, side)
        order = np.argsort(cell, kind="stable")
        start = np.searchsorted(cell[order], np.arange(nc ** self.nu + 1))
        return CellIndex(side, nc, self.nu, cell, order, start)

    def min_pair_distance(self) -> float:
        if self.n < 2:
            return math.inf
        from scipy.spatial import cKDTree
        dist, _ = cKDTree(self.points).query(self.points, k=2)
        return float(dist[:, 1].min())


def _offsets(nu: int) -> np.ndarray:
    return np.array(list(itertools.product((-1, 0, 1), repeat=nu)), dtype=np.int64)


def local_energy(cfg: Configuration, x, p: PotentialSpec, r_cut: float,
                 skip: Optional[int] = None) -> float:
    """Energy of a particle at ``x`` with every other particle of ``cfg`` within ``r_cut``.

    Returns ``math.inf`` on a hard-core overlap.  ``skip`` excludes one index
    (the particle itself when ``x`` is one of the points).
    """
    x = np.asarray(x, dtype=float)
    if cfg.n == 0:
        return 0.0
    index = cfg.cell_index(r_cut)
    home = np.clip((x / index.side).astype(int), 0, index.nc - 1)
    total = 0.0
    for off in itertools.product((-1, 0, 1), repeat=cfg.nu):
        c = home + off
        if np.any(c < 0) or np.any(c >= index.nc):
            continue
        ids = index.members(c)
        if skip is not None:
            ids = ids[ids != skip]
        if not len(ids):
            continue
        r = np.sqrt(((cfg.points[ids] - x) ** 2).sum(axis=1))
        r = r[r <= r_cut]
        if np.any(r <= p.f):
            return math.inf
        total += sum(p.evaluate(float(v)) for v in r)
    return total


def total_energy_bruteforce(points: np.ndarray, p: PotentialSpec, r_cut: float = math.inf) -> float:
    """``sum_{i<j} phi(|x_i - x_j|)`` over all pairs within ``r_cut``; O(n^2)."""
    total = 0.0
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(points[i] - points[j]))
            if r > r_cut:
                continue
            v = p.evaluate(r)
            if math.isinf(v):
                return math.inf
            total += v
    return total


# --------------------------------------------------------------------------
# chain parameters and state

@dataclass(frozen=True)
class McParams:
    lam: float
    beta: float
    L: float
    nu: int = 2
    seed: int = 0
    n_sweeps: int = 100
    burn_in: int = 100
    thin: int = 1
    move_mix: tuple = (0.35, 0.35, 0.30)
    r_cut: Optional[float] = None
    min_moves: int = 64
    translate_radius: Optional[float] = None

    def validate(self, p: PotentialSpec) -> None:
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if not self.L > 0:
            raise ConfigError(f"box side must be positive, got {self.L}")
        if self.nu < 1:
            raise ConfigError("dimension must be >= 1")
        if self.n_sweeps < 0 or self.burn_in < 0 or self.thin < 1 or self.min_moves < 1:
            raise ConfigError("sweep counts must be non-negative and thin, min_moves >= 1")
        mix = self.move_mix
        if len(mix) != 3 or any(x < 0 for x in mix) or abs(sum(mix) - 1.0) > 1e-9:
            raise ConfigError(f"move_mix must be three non-negative probabilities summing to 1, got {mix}")
        if (mix[0] > 0) != (mix[1] > 0):
            raise ConfigError("birth and death probabilities must both be positive or both zero")
        if self.r_cut is not None and self.r_cut < p.g:
            raise ConfigError(f"r_cut={self.r_cut} must be >= g={p.g}")

    def cutoff(self, p: PotentialSpec) -> float:
        return self.r_cut if self.r_cut is not None else p.default_cutoff(self.L)

    def displacement(self, p: PotentialSpec) -> float:
        if self.translate_radius is not None:
            return self.translate_radius
        return p.f if p.f > 0 else p.d / 2.0


def neglected_tail_bound(p: PotentialSpec, nu: int, r_cut: float) -> float:
    """Bound on the per-particle energy dropped by truncating at ``r_cut``.

    Uses the hard-core packing density ``1 / (kappa (f/2)^nu)``; ``inf``
    without a hard core when the tail is not truncated exactly.
    """
    fam = p.family
    if not isinstance(fam, PowerTail) or fam.amplitude == 0:
        return 0.0 if r_cut >= p.interaction_range() else math.inf
    if fam.s <= nu or p.f <= 0:
        return math.inf
    kappa = unit_ball_volume(nu)
    shell = nu * kappa * fam.amplitude * r_cut ** (nu - fam.s) / (fam.s - nu)
    return shell / (kappa * (p.f / 2.0) ** nu)


class ChainState:
    """Mutable sampler state backed by the compiled cell list."""

    def __init__(self, L: float, nu: int, p: PotentialSpec, r_cut: float, capacity: int = 256):
        self.L = float(L)
        self.nu = int(nu)
        self.p = p
        self.r_cut = float(r_cut)
        self.rc2 = self.r_cut ** 2
        self.nc, self.side = grid_shape(self.L, self.r_cut)
        self.offsets = _offsets(self.nu)
        self.fam, self.pp = p.kernel_params()
        capacity = max(int(capacity), 16)
        self.pos = np.zeros((capacity, self.nu))
        self.head = np.full(self.nc ** self.nu, -1, dtype=np.int64)
        self.nxt = np.full(capacity, -1, dtype=np.int64)
        self.prv = np.full(capacity, -1, dtype=np.int64)
        self.cell_of = np.full(capacity, -1, dtype=np.int64)
        self.state = np.zeros(2)  # [n, energy]
        self._scratch = np.empty(self.nu, dtype=np.int64)
        self._xbuf = np.empty(self.nu)

    @classmethod
    def from_configuration(cls, cfg: Configuration, p: PotentialSpec, r_cut: float) -> "ChainState":
        st = cls(cfg.L, cfg.nu, p, r_cut, capacity=2 * cfg.n + 16)
        n = cfg.n
        st.pos[:n] = cfg.points
        cells = flat_cells(cfg.points, st.nc, st.side)
        for i in range(n):
            _link(i, cells[i], st.head, st.nxt, st.prv, st.cell_of)
        st.state[0] = n
        hit, e = st.total_energy()
        if hit:
            raise ConfigError("initial configuration violates the hard core")
        st.state[1] = e
        return st

    @property
    def n(self) -> int:
        return int(self.state[0])

    @property
    def energy(self) -> float:
        return float(self.state[1])

    @property
    def points(self) -> np.ndarray:
        return self.pos[:self.n]

    def ensure_capacity(self, extra: int) -> None:
        need = self.n + extra
        cap = self.pos.shape[0]
        if need <= cap:
            return
        new = max(need, 2 * cap)
        pos = np.zeros((new, self.nu))
        pos[:cap] = self.pos
        self.pos = pos
        for name in ("nxt", "prv", "cell_of"):
            arr = np.full(new, -1, dtype=np.int64)
            arr[:cap] = getattr(self, name)
            setattr(self, name, arr)

    def local_energy(self, x, skip: int = -1) -> float:
        hit, e = _local_energy(np.asarray(x, dtype=float), skip, self.pos, self.head, self.nxt,
                               self.nc, self.side, self.offsets, self.rc2, self.fam, self.pp,
                               self._scratch)
        return math.inf if hit else e

    def total_energy(self) -> tuple[bool, float]:
        return _total_energy(self.pos, self.n, self.head, self.nxt, self.nc, self.side,
                             self.offsets, self.rc2, self.fam, self.pp)

    def recomputed_energy(self) -> float:
        hit, e = self.total_energy()
        return math.inf if hit else e

    def cell_mapping(self) -> dict:
        """Cell -> set of particle ids, read from the linked lists."""
        out = {}
        for c in range(len(self.head)):
            ids = set()
            i = self.head[c]
            while i != -1:
                ids.add(int(i))
                i = self.nxt[i]
            if ids:
                out[c] = frozenset(ids)
        return out

    def audit_cell_index(self) -> bool:
        """True iff the live cell lists equal a from-scratch rebuild."""
        rebuilt = Configuration(self.points, self.L).cell_index(self.r_cut).as_dict()
        return rebuilt == self.cell_mapping()

    def to_configuration(self, seed=None, sweep=None) -> Configuration:
        return Configuration(self.points.copy(), self.L, seed=seed, sweep=sweep)

    def kernel_args(self, params: McParams):
        volume = self.L ** self.nu
        pb, pd, _ = params.move_mix
        log_bd = math.log(pd / pb) if pb > 0 else 0.0
        return (float(params.beta), math.log(params.lam * volume), float(pb), float(pd),
                log_bd, float(params.displacement(self.p)))


def acceptance_ratio(kind: str, n: int, delta_h: float, lam: float, beta: float, volume: float,
                     move_mix=(0.35, 0.35, 0.30)) -> float:
    """Metropolis-Hastings ratio (before ``min(1, .)``) for a move from ``n`` particles."""
    pb, pd, _ = move_mix
    if math.isinf(delta_h) and delta_h > 0:
        return 0.0
    boltz = math.exp(-beta * delta_h)
    if kind == "birth":
        return lam * volume / (n + 1) * (pd / pb) * boltz
    if kind == "death":
        return n / (lam * volume) * (pb / pd) * boltz
    if kind == "translate":
        return boltz
    raise ValueError(f"unknown move kind {kind!r}")


@dataclass
class StepOutcome:
    kind: str
    accepted: bool
    delta_h: float


RANDOMS_PER_MOVE = 4  # kind, index, accept, radius; then nu position uniforms


def draw_move_randoms(rng: np.random.Generator, n_moves: int, nu: int):
    us = rng.random((n_moves, RANDOMS_PER_MOVE + nu))
    normals = rng.standard_normal((n_moves, nu))
    return us, normals


def mcmc_step(state: ChainState, params: McParams, p: PotentialSpec,
              rng: np.random.Generator) -> StepOutcome:
    """Attempt a single move in place."""
    state.ensure_capacity(1)
    us, normals = draw_move_randoms(rng, 1, state.nu)
    beta, log_zv, pb, pd, log_bd, radius = state.kernel_args(params)
    kind, acc, dh = _move(us[0], normals[0], state.state, state.pos, state.head, state.nxt,
                          state.prv, state.cell_of, state.L, state.nc, state.side, state.offsets,
                          state.rc2, state.fam, state.pp, state._scratch, state._xbuf, beta,
                          log_zv, pb, pd, log_bd, radius)
    return StepOutcome(KIND_NAMES[kind], bool(acc), float(dh))


@dataclass
class Diagnostics:
    attempted: dict
    accepted: dict
    density_trace: np.ndarray
    energy_trace: np.ndarray
    count_trace: np.ndarray
    r_cut: float
    neglected_tail_per_particle: float
    generator: str = GENERATOR_NAME
    seed: Optional[int] = None
    final_energy_drift: float = 0.0

    @property
    def acceptance_rates(self) -> dict:
        return {k: (self.accepted[k] / self.attempted[k] if self.attempted[k] else 0.0)
                for k in KIND_NAMES}


@dataclass
class ChainResult:
    snapshots: list
    diagnostics: Diagnostics
    final_state: ChainState = field(repr=False)


def _emit_snapshot(state: ChainState, params: McParams, sweep: int) -> Configuration:
    return state.to_configuration(seed=params.seed, sweep=sweep)


def run_sweeps(state: ChainState, params: McParams, rng: np.random.Generator,
               n_sweeps: int, counts: np.ndarray, on_sweep=None) -> None:
    """Advance ``n_sweeps`` sweeps of ``max(n, min_moves)`` attempted moves each."""
    args = state.kernel_args(params)
    for k in range(n_sweeps):
        n_moves = max(state.n, params.min_moves)
        state.ensure_capacity(n_moves)
        us, normals = draw_move_randoms(rng, n_moves, state.nu)
        _sweep(us, normals, state.state, state.pos, state.head, state.nxt, state.prv,
               state.cell_of, state.L, state.nc, state.side, state.offsets, state.rc2,
               state.fam, state.pp, *args, counts)
        if on_sweep is not None:
            on_sweep(k)


def run_chain(params: McParams, p: PotentialSpec, init: Optional[Configuration] = None) -> ChainResult:
    """Run ``burn_in + n_sweeps`` sweeps from ``init`` (empty by default).

    Snapshots are taken every ``thin`` sweeps after burn-in; the result is a
    deterministic function of ``params`` (including the seed).
    """
    params.validate(p)
    r_cut = params.cutoff(p)
    if init is None:
        state = ChainState(params.L, params.nu, p, r_cut)
    else:
        if init.nu != params.nu or init.L != params.L:
            raise ConfigError("initial configuration does not match the box")
        state = ChainState.from_configuration(init, p, r_cut)
    rng = make_rng(params.seed)
    counts = np.zeros((3, 2), dtype=np.int64)
    volume = params.L ** params.nu
    total = params.burn_in + params.n_sweeps
    counts_tr = np.zeros(total, dtype=np.int64)
    energy_tr = np.zeros(total)
    snapshots = []

    def record(k, offset):
        sweep = offset + k + 1
        counts_tr[sweep - 1] = state.n
        energy_tr[sweep - 1] = state.energy
        if offset == params.burn_in and (k + 1) % params.thin == 0:
            snapshots.append(_emit_snapshot(state, params, sweep))

    run_sweeps(state, params, rng, params.burn_in, counts, lambda k: record(k, 0))
    run_sweeps(state, params, rng, params.n_sweeps, counts, lambda k: record(k, params.burn_in))
    drift = abs(state.recomputed_energy() - state.energy) if state.n else 0.0
    diag = Diagnostics(
        attempted={name: int(counts[i, 0]) for i, name in enumerate(KIND_NAMES)},
        accepted={name: int(counts[i, 1]) for i, name in enumerate(KIND_NAMES)},
        density_trace=counts_tr / volume,
        energy_trace=energy_tr,
        count_trace=counts_tr,
        r_cut=r_cut,
        neglected_tail_per_particle=neglected_tail_bound(p, params.nu, r_cut),
        seed=params.seed,
        final_energy_drift=drift,
    )
    return ChainResult(snapshots, diag, state)


def replica_params(params: McParams, index: int) -> McParams:
    return replace(params, seed=derive_seed(params.seed, index))


# --------------------------------------------------------------------------
# snapshot dump format

def format_snapshot(cfg: Configuration) -> str:
    head = (f"# gibbs-perc v1 nu={cfg.nu} L={cfg.L!r} n={cfg.n} "
            f"seed={cfg.seed if cfg.seed is not None else 0} "
            f"sweep={cfg.sweep if cfg.sweep is not None else 0}")
    lines = [head]
    for row in cfg.points:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_snapshot(path, cfg: Configuration) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_snapshot(cfg))


def parse_snapshot(text: str) -> Configuration:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# gibbs-perc v1"):
        raise ValueError("not a gibbs-perc v1 snapshot")
    fields = dict(tok.split("=", 1) for tok in lines[0][2:].split()[2:])
    nu, n = int(fields["nu"]), int(fields["n"])
    rows = [list(map(float, ln.split())) for ln in lines[1:] if ln.strip()]
    pts = np.array(rows, dtype=float).reshape(n, nu)
    return Configuration(pts, float(fields["L"]), seed=int(fields["seed"]), sweep=int(fields["sweep"]))


def read_snapshot(path) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        return parse_snapshot(fh.read())
