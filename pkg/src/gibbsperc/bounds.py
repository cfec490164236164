"""Explicit region boundaries in the (lambda, beta) plane.

Non-percolation side: packing constants of a hard-core gas, the offspring
count/mean bounds of the dominating branching process, the curve
``beta_minus(lambda)`` and its endpoint ``lambda_minus``.

Percolation side (two dimensions): the rate function ``G``, the necklace
density ``alpha``, the curve ``beta_plus(lambda)`` and its root ``lambda_plus``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy.special import comb, zeta

from .potential import PotentialSpec, PowerTail, SquareWell, attraction_window, tail_integral

CONTOUR_COUNT_CONSTANT = 3.0
SQRT2 = math.sqrt(2.0)


class BoundsError(ValueError):
    pass


class OutOfDomain(BoundsError):
    pass


class PreconditionViolated(BoundsError):
    pass


class RegionOverlap(BoundsError):
    pass


class EmptyGrid(BoundsError):
    pass


def unit_ball_volume(nu: int) -> float:
    if nu < 1:
        raise ValueError("dimension must be >= 1")
    return math.pi ** (nu / 2) / math.gamma(nu / 2 + 1)


@dataclass(frozen=True)
class BoundConstants:
    nu: int
    kappa: float
    ell: float
    f: float
    M: float
    m0: int
    n_B: float
    n0: int
    I_P: float
    n1: float
    A: float

    @property
    def ball_volume(self) -> float:
        """``kappa * ell**nu``, the volume of the connection ball."""
        return self.kappa * self.ell ** self.nu

    @property
    def max_offspring(self) -> int:
        return int(math.floor(self.n_B + 1e-9))


def shell_polynomial(m: float, nu: int) -> float:
    """``(m+1)**nu - m**nu``: volume of the unit-width shell at radius m over kappa."""
    return (m + 1.0) ** nu - m ** nu


def tail_shell_sum(p: PotentialSpec, nu: int, m0: int) -> float:
    """``sum_{m >= m0} shell_polynomial(m) * psi(m)``.

    Finite sum for the square well; for the algebraic tail the series is
    summed exactly through Hurwitz zeta values.
    """
    fam = p.family
    if isinstance(fam, SquareWell):
        if fam.well_end < m0 or fam.well_depth <= 0:
            return 0.0
        return sum(shell_polynomial(m, nu) * p.psi(m)
                   for m in range(m0, int(math.ceil(fam.well_end))))
    assert isinstance(fam, PowerTail)
    if fam.amplitude == 0:
        return 0.0
    tail_integral(p, nu)  # raises DivergentTail for s <= nu
    total = 0.0
    for j in range(nu):
        total += comb(nu, j, exact=True) * float(zeta(fam.s - j, m0))
    return fam.amplitude * total


def bound_constants(p: PotentialSpec, nu: int, ell: float) -> BoundConstants:
    """Packing and energy constants for the non-percolation bound.

    Requires a hard core (``f > 0``) and ``ell > f``.
    """
    if not p.f > 0:
        raise PreconditionViolated("non-percolation bound requires a hard core f > 0")
    if not ell > p.f:
        raise PreconditionViolated(f"non-percolation bound requires ell > f (ell={ell}, f={p.f})")
    kappa = unit_ball_volume(nu)
    half = (p.f / 2.0) ** nu
    n_B = (2.0 * ell / p.f) ** nu
    m0 = int(math.ceil(p.g))
    n0 = max(0, int(math.floor((m0 ** nu - ell ** nu) / half)))
    I_P = tail_shell_sum(p, nu, m0)
    n1 = p.M * n0 + (2.0 ** nu / p.f ** nu) * I_P
    A = n_B * (p.M * n_B + n1)
    return BoundConstants(nu=nu, kappa=kappa, ell=ell, f=p.f, M=p.M, m0=m0, n_B=n_B,
                          n0=n0, I_P=I_P, n1=n1, A=A)


def _minus_rate(lam: float, c: BoundConstants) -> float:
    """``-ln(lam) - kappa ell^nu lam - ln(kappa ell^nu)``; positive below lambda_minus."""
    vol = c.ball_volume
    return -math.log(lam) - vol * lam - math.log(vol)


def lambda_minus(c: BoundConstants, rtol: float = 1e-12, max_iter: int = 200) -> float:
    """Unique positive root of the non-percolation rate, by bisection in ``log(lambda)``.

    The lower end of the final bracket is returned, so the rate is
    non-negative there and strictly positive at every smaller intensity.
    """
    lo, hi = 1e-15, 10.0 / c.ball_volume
    if _minus_rate(lo, c) <= 0:
        raise BoundsError("lambda_minus below the bisection bracket")
    llo, lhi = math.log(lo), math.log(hi)
    for _ in range(max_iter):
        mid = 0.5 * (llo + lhi)
        if _minus_rate(math.exp(mid), c) > 0:
            llo = mid
        else:
            lhi = mid
        if math.expm1(lhi - llo) < rtol:
            break
    return math.exp(llo)


def beta_minus(lam: float, c: BoundConstants) -> float:
    """Curve on which the offspring mean bound equals one."""
    lm = lambda_minus(c)
    if not 0 < lam < lm:
        raise OutOfDomain(f"beta_minus defined for 0 < lambda < {lm:.12g}, got {lam}")
    return _minus_rate(lam, c) / c.A


def beta_minus_printed(lam: float, c: BoundConstants) -> float:
    """Variant with the last logarithm taken of ``kappa ell^nu / A`` and not divided by A.

    Kept for comparison only; it does not make the mean bound equal to one.
    """
    vol = c.ball_volume
    return -math.log(lam) / c.A - vol * lam / c.A - math.log(vol / c.A)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def log_offspring_count_bound(K: int, lam: float, beta: float, c: BoundConstants) -> float:
    x = lam * c.ball_volume
    return beta * (K * c.n1 + c.M * K * K) + K * math.log(x) - math.lgamma(K + 1)


def offspring_count_bound(K: int, lam: float, beta: float, c: BoundConstants) -> float:
    """Upper bound on P(#offspring = K); may exceed one."""
    if K < 0 or K > c.n_B + 1e-9:
        raise ValueError(f"K must lie in [0, n_B={c.n_B}], got {K}")
    if K == 0:
        return 1.0
    return _safe_exp(log_offspring_count_bound(K, lam, beta, c))


def offspring_mean_bound(lam: float, beta: float, c: BoundConstants) -> float:
    x = lam * c.ball_volume
    return x * _safe_exp(beta * (c.n_B * c.n1 + c.n_B ** 2 * c.M) + x)


def g_function(beta: float, lam: float, m: float, eps: float) -> float:
    """Rate ``beta m + ln(lam) + ln(pi eps^2 / 16)`` of the contour bound."""
    return beta * m + math.log(lam) + math.log(math.pi * eps * eps / 16.0)


def alpha_constant(a: float, eps: float, d: float, delta: float) -> float:
    """Necklace density; the strict inequality ``a + eps/2 < 4d + 2 delta`` selects 1/sqrt(2)."""
    rho = a + eps / 2.0
    q = 2.0 * d + delta
    if rho < 2.0 * q:
        return 1.0 / SQRT2
    return q / (rho + q)


def beta_plus(lam: float, m: float, eps: float, h: float = 0.0, clamp: bool = True) -> float:
    b = (-math.log(lam) - math.log(math.pi * eps * eps / 16.0) + h) / m
    return max(b, 0.0) if clamp else b


def canonical_h(a: float, eps: float, d: float, delta: float,
                c: float = CONTOUR_COUNT_CONSTANT) -> float:
    return math.log(c) / alpha_constant(a, eps, d, delta)


def beta_plus_canonical(lam, m, eps, a, d, delta, c=CONTOUR_COUNT_CONSTANT, clamp=True):
    return beta_plus(lam, m, eps, canonical_h(a, eps, d, delta, c), clamp=clamp)


def lambda_plus(eps: float, a: float, d: float, delta: float,
                c: float = CONTOUR_COUNT_CONSTANT) -> float:
    """Intensity where the canonical ``beta_plus`` reaches zero."""
    return math.exp(canonical_h(a, eps, d, delta, c)) * 16.0 / (math.pi * eps * eps)


@dataclass(frozen=True)
class ContourParams:
    """Geometry of the contour argument: attraction level, window and cell slack."""

    m: float
    eps: float
    a: float
    d: float
    delta: float
    c: float = CONTOUR_COUNT_CONSTANT

    @classmethod
    def from_potential(cls, p: PotentialSpec, m: float, delta: float,
                       c: float = CONTOUR_COUNT_CONSTANT) -> "ContourParams":
        a, eps = attraction_window(p, m, cap=delta)
        return cls(m=m, eps=eps, a=a, d=p.d, delta=delta, c=c)

    @property
    def q(self) -> float:
        return 2.0 * self.d + self.delta

    @property
    def alpha(self) -> float:
        return alpha_constant(self.a, self.eps, self.d, self.delta)

    @property
    def h(self) -> float:
        return canonical_h(self.a, self.eps, self.d, self.delta, self.c)

    @property
    def lambda_plus(self) -> float:
        return lambda_plus(self.eps, self.a, self.d, self.delta, self.c)

    def beta_plus(self, lam: float, clamp: bool = True) -> float:
        return beta_plus(lam, self.m, self.eps, self.h, clamp=clamp)

    def G(self, beta: float, lam: float) -> float:
        return g_function(beta, lam, self.m, self.eps)


class Region(str, enum.Enum):
    NON_PERCOLATING = "A-"
    PERCOLATING = "A+"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class RegionClassification:
    verdict: Region
    beta_minus_at_lambda: Optional[float] = None
    beta_plus_at_lambda: Optional[float] = None


def check_percolation_hypotheses(nu: int, ell: float, d: float) -> None:
    if nu != 2:
        raise PreconditionViolated(f"percolation region is only established for nu = 2 (got nu={nu})")
    if not ell > 2.0 * SQRT2 * d:
        raise PreconditionViolated(
            f"percolation region requires ell > 2*sqrt(2)*d = {2 * SQRT2 * d:.6g} (got ell={ell})")


def _minus_side(p, nu, ell, strict):
    try:
        return bound_constants(p, nu, ell)
    except PreconditionViolated:
        if strict:
            raise
        return None


def _plus_side(nu, ell, d, contour, strict):
    if contour is None:
        return None
    try:
        check_percolation_hypotheses(nu, ell, d)
    except PreconditionViolated:
        if strict:
            raise
        return None
    return contour


def classify(lam: float, beta: float, p: PotentialSpec, nu: int, ell: float,
             contour: ContourParams | None = None, strict: bool = False) -> RegionClassification:
    """Place ``(lam, beta)`` in A-, A+ or the undecided gap.

    The A+ side is only considered when ``contour`` is given.  With
    ``strict=True`` a failed hypothesis of a requested side raises
    ``PreconditionViolated`` instead of leaving that side undecided.
    """
    if not lam > 0 or beta < 0:
        raise ValueError("need lambda > 0 and beta >= 0")
    consts = _minus_side(p, nu, ell, strict)
    cp = _plus_side(nu, ell, p.d, contour, strict)

    in_minus = False
    bm = None
    if consts is not None and lam < lambda_minus(consts):
        bm = beta_minus(lam, consts)
        in_minus = beta < bm
    in_plus = False
    bp = None
    if cp is not None:
        bp = cp.beta_plus(lam)
        in_plus = lam > cp.lambda_plus or beta > bp
    if in_minus and in_plus:
        raise RegionOverlap(
            f"(lambda={lam}, beta={beta}) lies under beta_minus={bm} and above beta_plus={bp}")
    verdict = Region.NON_PERCOLATING if in_minus else Region.PERCOLATING if in_plus else Region.UNKNOWN
    return RegionClassification(verdict, bm, bp)


@dataclass(frozen=True)
class PhaseRow:
    lam: float
    beta_minus: Optional[float]
    beta_plus: Optional[float]
    lambda_minus: Optional[float]
    lambda_plus: Optional[float]
    verdict: str

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "beta_minus": self.beta_minus, "beta_plus": self.beta_plus,
                "lambda_minus": self.lambda_minus, "lambda_plus": self.lambda_plus,
                "verdict": self.verdict}


PHASE_COLUMNS = ("lambda", "beta_minus", "beta_plus", "lambda_minus", "lambda_plus", "verdict")


def phase_diagram(lambdas: Sequence[float], p: PotentialSpec, nu: int, ell: float,
                  contour: ContourParams | None = None, strict: bool = True) -> list[PhaseRow]:
    """Sample both boundary curves on a sorted intensity grid.

    ``verdict`` is ``ordered`` where both curves exist and ``beta_minus <
    beta_plus``, ``inverted`` where that ordering fails for these constants,
    and ``partial`` where at most one curve is defined.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise EmptyGrid("lambda grid is empty")
    if any(x <= 0 for x in lambdas) or any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambda grid must be positive and sorted")
    consts = _minus_side(p, nu, ell, strict)
    cp = _plus_side(nu, ell, p.d, contour, strict)
    lm = lambda_minus(consts) if consts is not None else None
    lp = cp.lambda_plus if cp is not None else None
    rows = []
    for lam in lambdas:
        bm = beta_minus(lam, consts) if lm is not None and lam < lm else None
        bp = cp.beta_plus(lam) if cp is not None else None
        if bm is not None and bp is not None:
            verdict = "ordered" if bm < bp else "inverted"
        else:
            verdict = "partial"
        rows.append(PhaseRow(lam, bm, bp, lm, lp, verdict))
    return rows
