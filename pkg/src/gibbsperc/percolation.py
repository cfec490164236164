"""ell-clusters of point configurations and crossing estimates of the percolation function.

Two points are ell-connected when a chain of points joins them with every
gap ``<= ell``.  Candidate pairs come from a k-d tree and the partition from
sparse connected components.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.stats import binomtest

from .potential import PotentialSpec
from .sampler import Configuration, McParams, replica_params, run_chain

PROXIES = ("crossing", "center")

FINITE_SIZE_CAVEAT = ("finite-box proxy: crossing of [0, L] along one axis with empty boundary; "
                      "estimates the direction of the percolation transition, not its location")


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class ClusterPartition:
    """Labels are canonical: cluster ids appear in order of first occurrence."""

    labels: np.ndarray
    sizes: np.ndarray
    ell: float

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def as_sets(self) -> set:
        return {frozenset(self.members(k).tolist()) for k in range(self.n_clusters)}


def _canonical(labels: np.ndarray) -> np.ndarray:
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inv]


def cluster_labels(points: np.ndarray, ell: float) -> np.ndarray:
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    pairs = cKDTree(points).query_pairs(ell, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return _canonical(labels)


def clusters(cfg: Configuration, ell: float) -> ClusterPartition:
    """Partition of ``cfg`` into ell-clusters (gaps ``<= ell`` connect)."""
    if not ell > 0:
        raise ValueError(f"ell must be positive, got {ell}")
    labels = cluster_labels(np.asarray(cfg.points), ell)
    sizes = np.bincount(labels) if len(labels) else np.zeros(0, dtype=np.int64)
    return ClusterPartition(labels, sizes, float(ell))


def crossing(cfg: Configuration, ell: float, axis: int = 0,
             part: Optional[ClusterPartition] = None) -> bool:
    """True iff one cluster comes within ``ell`` of both faces ``x_axis = 0`` and ``x_axis = L``."""
    if cfg.n == 0:
        return False
    if part is None:
        part = clusters(cfg, ell)
    x = cfg.points[:, axis]
    lo = set(part.labels[x <= ell].tolist())
    if not lo:
        return False
    hi = set(part.labels[x >= cfg.L - ell].tolist())
    return bool(lo & hi)


def center_reaches_boundary(cfg: Configuration, ell: float,
                            part: Optional[ClusterPartition] = None) -> bool:
    """True iff the cluster of the particle nearest the box centre comes within ``ell`` of the boundary.

    The starting particle must itself lie within ``ell`` of the centre.
    """
    if cfg.n == 0:
        return False
    if part is None:
        part = clusters(cfg, ell)
    c = np.full(cfg.nu, cfg.L / 2)
    dist = np.linalg.norm(cfg.points - c, axis=1)
    i = int(np.argmin(dist))
    if dist[i] > ell:
        return False
    pts = cfg.points[part.labels == part.labels[i]]
    return bool(np.any(pts <= ell) or np.any(pts >= cfg.L - ell))


def percolates(cfg: Configuration, ell: float, proxy: str = "crossing",
               part: Optional[ClusterPartition] = None) -> bool:
    if proxy == "crossing":
        return crossing(cfg, ell, 0, part)
    if proxy == "center":
        return center_reaches_boundary(cfg, ell, part)
    raise ValueError(f"unknown proxy {proxy!r}; expected one of {PROXIES}")


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class ClusterSizeSummary:
    mean: float
    max: int
    histogram: dict
    n_particles: int


def mean_cluster_size(snapshots: Sequence[Configuration], ell: float,
                      margin: float = 0.0) -> ClusterSizeSummary:
    """Size-biased mean cluster size over all particles of all snapshots.

    With ``margin > 0`` only particles at distance ``>= margin`` from the
    boundary are used as roots (clusters still count all their members), a
    minus-sampling edge correction.

    Raises:
        EmptyInput: with no snapshots, or no eligible particle.
    """
    if not len(snapshots):
        raise EmptyInput("no snapshots")
    total, count, biggest = 0.0, 0, 0
    hist: dict = {}
    for cfg in snapshots:
        part = clusters(cfg, ell)
        if not part.n_clusters:
            continue
        biggest = max(biggest, int(part.sizes.max()))
        for s, c in zip(*np.unique(part.sizes, return_counts=True)):
            hist[int(s)] = hist.get(int(s), 0) + int(c)
        per_point = part.sizes[part.labels]
        if margin > 0:
            keep = np.all((cfg.points >= margin) & (cfg.points <= cfg.L - margin), axis=1)
            per_point = per_point[keep]
        total += float(per_point.sum())
        count += len(per_point)
    if count == 0:
        raise EmptyInput("no particles in the snapshots")
    return ClusterSizeSummary(total / count, biggest, dict(sorted(hist.items())), count)


@dataclass
class ThetaEstimate:
    theta_hat: float
    ci95: tuple
    successes: int
    replicas: int
    mean_cluster_size: float
    proxy: str = "crossing"
    caveat: str = FINITE_SIZE_CAVEAT
    snapshots: list = field(default_factory=list, repr=False)


def replica_snapshot(params: McParams, p: PotentialSpec, index: int) -> Configuration:
    """Final configuration of replica ``index``; depends only on (params, index)."""
    rp = replica_params(params, index)
    res = run_chain(replace(rp, n_sweeps=max(rp.n_sweeps, 1), thin=1), p)
    return res.snapshots[-1]


def summarize_replicas(snaps: Sequence[Configuration], ell: float,
                       proxy: str = "crossing") -> ThetaEstimate:
    hits = sum(percolates(s, ell, proxy) for s in snaps)
    n = len(snaps)
    try:
        mcs = mean_cluster_size(snaps, ell).mean
    except EmptyInput:
        mcs = 0.0
    return ThetaEstimate(hits / n, wilson_interval(hits, n), hits, n, mcs, proxy, snapshots=list(snaps))


def theta_estimate(params: McParams, p: PotentialSpec, ell: float, replicas: int,
                   proxy: str = "crossing", executor=None) -> ThetaEstimate:
    """Fraction of independent equilibrated replicas that percolate, with a Wilson 95% interval.

    ``executor`` (a ``concurrent.futures`` executor) parallelises replicas;
    results are merged by replica index so they do not depend on it.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    params.validate(p)
    idx = range(replicas)
    if executor is None:
        snaps = [replica_snapshot(params, p, i) for i in idx]
    else:
        snaps = list(executor.map(lambda i: replica_snapshot(params, p, i), idx))
    return summarize_replicas(snaps, ell, proxy)
