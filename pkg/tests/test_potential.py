import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gibbsperc.potential import (DivergentTail, NoWindow, PotentialError, PotentialSpec,
                                 ShapeViolation, attraction_window, evaluate, tail_integral,
                                 validate_shape)


@pytest.fixture
def well():
    return PotentialSpec.square_well(f=1, d=2, u0=0.5, well_depth=1, well_end=3)


def test_evaluate_square_well(well):
    assert evaluate(well, 0.5) == math.inf
    assert evaluate(well, 1.0) == math.inf
    assert evaluate(well, 1.5) == 0.5
    assert evaluate(well, 2.5) == -1
    assert evaluate(well, 10) == 0


def test_evaluate_power_tail():
    p = PotentialSpec.power_tail(f=0.5, d=1, g=2, u0=1.0, well_depth=0.5, s=4, amplitude=3.0)
    assert p(0.4) == math.inf
    assert p(0.7) == 1.0
    assert p(1.5) == -0.5
    assert p(3.0) == pytest.approx(-3.0 / 81)


def test_validate_ok(well):
    rep = validate_shape(well)
    assert rep.ok and rep.n_checked > 10_000
    assert rep.horizon == pytest.approx(30.0)
    assert rep.grid_step == pytest.approx(2 / 1e4)


def test_validate_sign_flip():
    p = PotentialSpec.square_well(f=1, d=2, u0=0.5, well_depth=-1, well_end=3, M=1)
    with pytest.raises(ShapeViolation) as exc:
        validate_shape(p)
    assert exc.value.r >= 2
    assert exc.value.value > 0


def test_validate_power_tail_below_minus_M():
    # amplitude > M g^s makes phi(g) < -M
    M, g, s = 1.0, 2.0, 4.0
    p = PotentialSpec.power_tail(f=0.5, d=1, g=g, u0=0, well_depth=0.5, s=s,
                                 amplitude=2 * M * g ** s, M=M)
    with pytest.raises(ShapeViolation) as exc:
        validate_shape(p)
    assert any(v < -M for _, v, _ in exc.value.violations)


def test_validate_negative_repulsion():
    p = PotentialSpec.square_well(f=0.5, d=2, u0=-0.2, well_depth=1, well_end=3)
    with pytest.raises(ShapeViolation) as exc:
        validate_shape(p)
    assert 0.5 < exc.value.r < 2


def test_constructor_rejects_bad_lengths():
    with pytest.raises(PotentialError):
        PotentialSpec.square_well(f=2, d=1, u0=0, well_depth=1, well_end=3)
    with pytest.raises(PotentialError):
        PotentialSpec.power_tail(f=0.5, d=1, g=1, u0=0, well_depth=1, s=4, amplitude=1)


def test_tail_integral_power_closed_form():
    p = PotentialSpec.power_tail(f=0.25, d=0.5, g=1, u0=0, well_depth=1, s=4, amplitude=1)
    assert tail_integral(p, 2) == pytest.approx(0.5, rel=1e-12)


@pytest.mark.parametrize("s,nu,g,amp", [(4, 2, 1.0, 1.0), (5.5, 3, 2.0, 0.7), (2.5, 1, 1.3, 3.0)])
def test_tail_integral_matches_quadrature(s, nu, g, amp):
    p = PotentialSpec.power_tail(f=0.1, d=0.5, g=g, u0=0, well_depth=amp * g ** -s,
                                 s=s, amplitude=amp)
    val, err = quad(lambda r: r ** (nu - 1) * p.psi(r), g, np.inf, epsabs=0, epsrel=1e-13)
    assert tail_integral(p, nu) == pytest.approx(val, rel=1e-10)


def test_tail_integral_square_well_zero_when_well_ends_at_g(well):
    assert tail_integral(well, 2) == 0.0


def test_tail_integral_square_well_extends_past_g():
    p = PotentialSpec.square_well(f=1, d=2, u0=0, well_depth=1, well_end=3, g=2.5)
    assert tail_integral(p, 2) == pytest.approx((9 - 6.25) / 2)


def test_tail_integral_divergent():
    p = PotentialSpec.power_tail(f=0.25, d=0.5, g=1, u0=0, well_depth=1, s=2, amplitude=1)
    with pytest.raises(DivergentTail):
        tail_integral(p, 2)


def test_attraction_window_square_well():
    p = PotentialSpec.square_well(f=1, d=2, u0=0.5, well_depth=1, well_end=3)
    assert attraction_window(p, 0.5, cap=0.4) == (2.0, pytest.approx(0.4))


def test_attraction_window_at_depth_raises(well):
    with pytest.raises(NoWindow):
        attraction_window(well, well.M, cap=0.4)


def test_attraction_window_power_tail_rescan():
    p = PotentialSpec.power_tail(f=0.5, d=1, g=2, u0=0, well_depth=0.3, s=3, amplitude=8.0)
    m = 0.5
    a, eps = attraction_window(p, m, cap=10.0)
    assert a >= p.d
    r = np.linspace(a, a + eps, 10_001)
    assert max(p(x) for x in r) <= -m + 1e-12


@settings(max_examples=60, deadline=None)
@given(f=st.floats(0.05, 1.0), dd=st.floats(0.0, 1.0), gg=st.floats(0.05, 2.0),
       u0=st.floats(0.0, 5.0), depth=st.floats(0.05, 3.0), s=st.floats(3.1, 8.0))
def test_power_tail_shape_invariants(f, dd, gg, u0, depth, s):
    d = f + dd
    g = d + gg
    amp = depth * g ** s  # continuous at g
    p = PotentialSpec.power_tail(f=f, d=d, g=g, u0=u0, well_depth=depth, s=s, amplitude=amp)
    validate_shape(p, grid_step=(g - f) / 500)
    r = np.linspace(f + 1e-9, 10 * g, 2000)
    v = np.array([p(x) for x in r])
    assert np.all(v[(r > f) & (r < d)] >= 0)
    assert np.all((v[r >= d] <= 0) & (v[r >= d] >= -p.M))
    tail = r >= g
    assert np.all(-v[tail] <= np.array([p.psi(x) for x in r[tail]]) + 1e-15)


@settings(max_examples=60, deadline=None)
@given(m_frac=st.floats(0.01, 0.99), cap=st.floats(0.01, 3.0), s=st.floats(2.5, 6.0))
def test_attraction_window_rescan_property(m_frac, cap, s):
    p = PotentialSpec.power_tail(f=0.5, d=1, g=1.5, u0=0.2, well_depth=1.0, s=s,
                                 amplitude=1.5 ** s)
    m = m_frac * p.M
    a, eps = attraction_window(p, m, cap)
    assert 0 < eps <= cap
    r = np.linspace(a, a + eps, 2001)
    assert max(p(x) for x in r) <= -m * (1 - 1e-12)


def test_roundtrip_dict(well):
    assert PotentialSpec.from_dict(well.to_dict()) == well
