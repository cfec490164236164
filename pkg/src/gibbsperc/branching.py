"""Galton-Watson process with the dominating offspring law.

The offspring count of a particle is bounded in probability by
``exp(beta (K n1 + M K^2)) (lam kappa ell^nu)^K / K!`` for ``K <= n_B``.  The
law used here caps each term at 1 and puts the leftover mass on ``K = 0``,
which makes it the stochastically largest law compatible with the caps.  The
true interacting offspring mechanism is never simulated; subcriticality of
this independent process is what forces the clusters to be finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import BoundConstants, offspring_count_bound, offspring_mean_bound

DEFAULT_MAX_GENERATIONS = 10_000
DEFAULT_EXPLOSION_CAP = 10 ** 7


@dataclass(frozen=True)
class OffspringLaw:
    masses: np.ndarray
    caps: np.ndarray
    flagged: bool = False
    lam: Optional[float] = None
    beta: Optional[float] = None
    constants: Optional[BoundConstants] = None

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.masses))

    @property
    def mean(self) -> float:
        return float(self.support @ self.masses)

    @property
    def variance(self) -> float:
        k = self.support
        return float((k * k) @ self.masses - self.mean ** 2)

    @classmethod
    def from_masses(cls, masses) -> "OffspringLaw":
        m = np.asarray(masses, dtype=float)
        if np.any(m < 0) or abs(m.sum() - 1) > 1e-12:
            raise ValueError("masses must be non-negative and sum to 1")
        return cls(m, m.copy())


def dominating_offspring_law(lam: float, beta: float, c: BoundConstants) -> OffspringLaw:
    """Offspring law on ``{0, ..., floor(n_B)}`` built from the capped count bounds.

    If the capped masses for ``K >= 1`` already sum to at least 1, they are
    rescaled to a probability vector and the law is flagged: it then no
    longer dominates anything and extinction checks should be skipped.
    """
    if not math.isfinite(offspring_mean_bound(lam, beta, c)):
        raise ValueError("offspring mean bound is infinite")
    kmax = c.max_offspring
    caps = np.array([1.0] + [min(1.0, offspring_count_bound(K, lam, beta, c))
                             for K in range(1, kmax + 1)])
    rest = caps[1:].sum()
    masses = caps.copy()
    if rest >= 1.0:
        masses[0] = 0.0
        masses[1:] /= rest
        flagged = True
    else:
        masses[0] = 1.0 - rest
        flagged = False
    return OffspringLaw(masses, caps, flagged, lam, beta, c)


@dataclass
class GWRun:
    extinct: bool
    total_size: int
    generations: int


def simulate_gw(law: OffspringLaw, max_generations: int = DEFAULT_MAX_GENERATIONS,
                rng: Optional[np.random.Generator] = None) -> GWRun:
    """One Galton-Watson tree from a single ancestor.

    ``generations`` counts the generations that were alive; a tree still
    alive after ``max_generations`` is reported as not extinct.
    """
    if law.flagged:
        raise ValueError("law is flagged as supercritical by bound")
    rng = np.random.default_rng() if rng is None else rng
    z, total, gen = 1, 1, 0
    k = law.support
    while z > 0 and gen < max_generations:
        gen += 1
        z = int(rng.multinomial(z, law.masses) @ k)
        total += z
    return GWRun(z == 0, total, gen)


@dataclass
class GWBatch:
    extinct: np.ndarray
    total_size: np.ndarray
    generations: np.ndarray


def simulate_gw_batch(law: OffspringLaw, replicas: int, rng: np.random.Generator,
                      max_generations: int = DEFAULT_MAX_GENERATIONS,
                      explosion_cap: int = DEFAULT_EXPLOSION_CAP) -> GWBatch:
    """Independent trees advanced generation by generation in lockstep.

    A tree whose generation size exceeds ``explosion_cap`` is stopped and
    counted as surviving, like one alive at ``max_generations``.
    """
    z = np.ones(replicas, dtype=np.int64)
    total = np.ones(replicas, dtype=np.int64)
    gens = np.zeros(replicas, dtype=np.int64)
    stopped = np.zeros(replicas, dtype=bool)
    k = law.support
    for _ in range(max_generations):
        live = (z > 0) & ~stopped
        if not live.any():
            break
        idx = np.flatnonzero(live)
        gens[idx] += 1
        z[idx] = rng.multinomial(z[idx], law.masses) @ k
        total[idx] += z[idx]
        stopped |= z > explosion_cap
    return GWBatch(z == 0, total, gens)


@dataclass
class ExtinctionReport:
    lam: float
    beta: float
    mean_bound: float
    law_mean: float
    extinction_rate: float
    mean_total_size: float
    total_size_se: float
    bound_1_over_eps: float
    size_bound_check: bool
    flagged: bool = False
    skipped: bool = False

    def as_row(self) -> dict:
        return {"lambda": self.lam, "beta": self.beta, "mean_bound": self.mean_bound,
                "law_mean": self.law_mean, "extinction_rate": self.extinction_rate,
                "mean_total_size": self.mean_total_size, "bound_1_over_eps": self.bound_1_over_eps}


GW_COLUMNS = ("lambda", "beta", "mean_bound", "law_mean", "extinction_rate",
              "mean_total_size", "bound_1_over_eps")


def extinction_and_size(lam: float, beta: float, c: BoundConstants, replicas: int,
                        rng: np.random.Generator,
                        max_generations: int = DEFAULT_MAX_GENERATIONS) -> ExtinctionReport:
    """Monte Carlo extinction rate and mean total progeny of the dominating process.

    The size check compares the empirical mean total progeny with
    ``1 / (1 - mean)`` of the law, allowing three standard errors.  Flagged or
    non-subcritical laws are skipped (NaN statistics, ``skipped=True``).
    """
    law = dominating_offspring_law(lam, beta, c)
    mb = offspring_mean_bound(lam, beta, c)
    if law.flagged or law.mean >= 1.0:
        nan = math.nan
        return ExtinctionReport(lam, beta, mb, law.mean, nan, nan, nan, nan, False,
                                flagged=law.flagged, skipped=True)
    batch = simulate_gw_batch(law, replicas, rng, max_generations)
    sizes = batch.total_size.astype(float)
    mean_size = float(sizes.mean())
    se = float(sizes.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    bound = 1.0 / (1.0 - law.mean)
    return ExtinctionReport(lam, beta, mb, law.mean, float(batch.extinct.mean()), mean_size, se,
                            bound, mean_size <= bound + 3 * se)
