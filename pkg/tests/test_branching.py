import math

import numpy as np
import pytest

from gibbsperc.bounds import bound_constants, beta_minus, lambda_minus, offspring_count_bound, offspring_mean_bound
from gibbsperc.branching import (OffspringLaw, dominating_offspring_law, extinction_and_size,
                                 simulate_gw, simulate_gw_batch)
from gibbsperc.potential import PotentialSpec

P = PotentialSpec.square_well(f=1, d=2, u0=0.5, well_depth=1, well_end=3)
C = bound_constants(P, 2, 2.0)


def test_deep_minus_law_is_valid():
    lam = lambda_minus(C) / 20
    beta = beta_minus(lam, C) / 2
    law = dominating_offspring_law(lam, beta, C)
    terms = [offspring_count_bound(K, lam, beta, C) for K in range(1, 17)]
    assert not law.flagged
    assert sum(terms) < 1
    assert law.masses.sum() == pytest.approx(1.0, abs=1e-15)
    assert law.masses[1:] == pytest.approx(np.array(terms), rel=1e-15)
    assert law.mean < 1
    assert law.mean <= offspring_mean_bound(lam, beta, C)
    assert len(law.masses) == 17


def test_beta_zero_law_is_poisson_like():
    lam = 0.01
    law = dominating_offspring_law(lam, 0.0, C)
    x = lam * C.ball_volume
    expected = [x ** K / math.factorial(K) for K in range(1, 17)]
    assert law.masses[1:] == pytest.approx(expected, rel=1e-12)


def test_masses_never_exceed_count_bound():
    for lam in (0.001, 0.02, 0.2):
        for beta in (0.0, 0.001, 0.01):
            law = dominating_offspring_law(lam, beta, C)
            for K in range(1, len(law.masses)):
                assert law.masses[K] <= offspring_count_bound(K, lam, beta, C) * (1 + 1e-12)


def test_supercritical_by_bound_flagged():
    law = dominating_offspring_law(1.0, 0.05, C)
    assert law.flagged
    assert law.masses[0] == 0.0
    assert law.masses.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        simulate_gw(law, 10, np.random.default_rng(0))


def test_gw_trivial_laws():
    dead = OffspringLaw.from_masses([1.0, 0.0])
    r = simulate_gw(dead, 100, np.random.default_rng(0))
    assert r.extinct and r.total_size == 1 and r.generations == 1
    forever = OffspringLaw.from_masses([0.0, 1.0])
    r = simulate_gw(forever, 500, np.random.default_rng(0))
    assert not r.extinct and r.generations == 500 and r.total_size == 501


def test_gw_deterministic_given_seed():
    law = OffspringLaw.from_masses([0.5, 0.2, 0.3])
    a = simulate_gw_batch(law, 2000, np.random.default_rng(3), max_generations=200)
    b = simulate_gw_batch(law, 2000, np.random.default_rng(3), max_generations=200)
    assert (a.total_size == b.total_size).all()


def test_subcritical_extinction_and_progeny():
    law = OffspringLaw.from_masses([0.6, 0.3, 0.1])  # mean 0.5
    batch = simulate_gw_batch(law, 100_000, np.random.default_rng(7))
    assert batch.extinct.mean() >= 0.999
    se = batch.total_size.std(ddof=1) / math.sqrt(len(batch.total_size))
    assert batch.total_size.mean() <= 2 + 3 * se
    assert abs(batch.total_size.mean() - 2) < 4 * se


def test_batch_matches_single_runs_in_law():
    # the same law simulated both ways agrees on the extinction-by-generation-1 rate
    law = OffspringLaw.from_masses([0.7, 0.3])
    batch = simulate_gw_batch(law, 20_000, np.random.default_rng(1))
    singles = [simulate_gw(law, 100, np.random.default_rng(i)).generations == 1 for i in range(2000)]
    assert np.mean(batch.generations == 1) == pytest.approx(0.7, abs=0.02)
    assert np.mean(singles) == pytest.approx(0.7, abs=0.04)


def test_extinction_and_size_report():
    lam = lambda_minus(C) / 10
    beta = beta_minus(lam, C) / 3
    rep = extinction_and_size(lam, beta, C, 20_000, np.random.default_rng(4))
    assert not rep.skipped
    assert rep.extinction_rate >= 0.999
    assert rep.size_bound_check
    assert rep.bound_1_over_eps == pytest.approx(1 / (1 - rep.law_mean))


def test_extinction_and_size_skips_flagged():
    rep = extinction_and_size(1.0, 0.05, C, 100, np.random.default_rng(0))
    assert rep.skipped and rep.flagged and math.isnan(rep.extinction_rate)
