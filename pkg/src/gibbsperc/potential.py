"""Radial pair potentials with a hard core, a repulsive shell and an attractive tail.

Two built-in families are supported:

* ``SquareWell``: constant repulsion ``u0`` on ``(f, d)``, a flat well of depth
  ``well_depth`` on ``[d, well_end)`` and zero from ``well_end`` on.
* ``PowerTail``: constant repulsion ``u0`` on ``(f, d)``, a flat well on
  ``[d, g)`` and an algebraic tail ``-amplitude * r**-s`` from ``g`` on.

The sign structure is checked on the half-open intervals ``(f, d)`` (non-negative)
and ``[d, inf)`` (non-positive), so the well may start exactly at ``d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

HARD_CORE = math.inf

# codes shared with the compiled sampler kernels
FAMILY_SQUARE_WELL = 0
FAMILY_POWER_TAIL = 1


class PotentialError(ValueError):
    pass


class ShapeViolation(PotentialError):
    """Raised when a potential breaks the required sign / bound structure.

    ``violations`` holds ``(r, value, expected)`` triples, the first one is
    also exposed as ``r``, ``value`` and ``expected``.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        self.r, self.value, self.expected = self.violations[0]
        lines = [f"r={r:.6g}: phi={v:.6g}, expected {e}" for r, v, e in self.violations[:5]]
        more = len(self.violations) - 5
        if more > 0:
            lines.append(f"... and {more} more")
        super().__init__("potential shape violated:\n  " + "\n  ".join(lines))


class DivergentTail(PotentialError):
    pass


class NoWindow(PotentialError):
    pass


@dataclass(frozen=True)
class SquareWell:
    u0: float
    well_depth: float
    well_end: float

    name = "square_well"


@dataclass(frozen=True)
class PowerTail:
    u0: float
    well_depth: float
    s: float
    amplitude: float

    name = "power_tail"


Family = Union[SquareWell, PowerTail]


@dataclass(frozen=True)
class PotentialSpec:
    """Pair potential ``phi(r)`` together with its shape constants.

    ``f`` is the hard-core radius, ``d`` the repulsion/attraction crossover,
    ``g`` the onset of the tail majorant ``psi`` and ``M`` the depth
    (``phi >= -M`` everywhere).
    """

    f: float
    d: float
    g: float
    M: float
    family: Family = field(repr=True)

    def __post_init__(self):
        if self.f < 0:
            raise PotentialError(f"hard-core radius must be >= 0, got f={self.f}")
        if not (self.d > 0 and self.d >= self.f):
            raise PotentialError(f"need d > 0 and d >= f, got d={self.d}, f={self.f}")
        if not self.g > self.d:
            raise PotentialError(f"need g > d, got g={self.g}, d={self.d}")
        if not self.M > 0:
            raise PotentialError(f"depth M must be positive, got {self.M}")
        fam = self.family
        if isinstance(fam, SquareWell):
            if fam.well_end < self.d:
                raise PotentialError("well_end must be >= d")
        elif isinstance(fam, PowerTail):
            if fam.amplitude < 0:
                raise PotentialError("amplitude must be >= 0")
        else:
            raise PotentialError(f"unknown potential family {fam!r}")

    @classmethod
    def square_well(cls, f, d, u0, well_depth, well_end, g=None, M=None):
        """Hard-core square well; ``g`` defaults to ``well_end``, ``M`` to ``well_depth``."""
        if g is None:
            g = well_end
        if M is None:
            M = abs(well_depth) if well_depth != 0 else 1.0
        return cls(f=f, d=d, g=g, M=M, family=SquareWell(u0, well_depth, well_end))

    @classmethod
    def power_tail(cls, f, d, g, u0, well_depth, s, amplitude, M=None):
        if M is None:
            M = max(well_depth, amplitude * g ** (-s))
        return cls(f=f, d=d, g=g, M=M, family=PowerTail(u0, well_depth, s, amplitude))

    @property
    def family_name(self) -> str:
        return self.family.name

    def evaluate(self, r: float) -> float:
        """Value of ``phi`` at distance ``r``; ``math.inf`` inside the hard core."""
        if r <= self.f:
            return HARD_CORE
        fam = self.family
        if r < self.d:
            return float(fam.u0)
        if isinstance(fam, SquareWell):
            return -float(fam.well_depth) if r < fam.well_end else 0.0
        if r < self.g:
            return -float(fam.well_depth)
        return -fam.amplitude * r ** (-fam.s)

    __call__ = evaluate

    def psi(self, r: float) -> float:
        """Tail majorant: ``-phi(r) <= psi(r)`` for ``r >= g``."""
        fam = self.family
        if isinstance(fam, SquareWell):
            return max(float(fam.well_depth), 0.0) if r < fam.well_end else 0.0
        return fam.amplitude * r ** (-fam.s)

    def interaction_range(self) -> float:
        """Radius beyond which ``phi`` vanishes, ``inf`` for algebraic tails."""
        fam = self.family
        if isinstance(fam, SquareWell):
            return max(fam.well_end, self.d)
        return math.inf if fam.amplitude > 0 else self.g

    def default_cutoff(self, L: float | None = None, rel: float = 1e-6) -> float:
        """Truncation radius for the sampler.

        Exact range for the square well; for the power tail the radius where
        ``psi`` drops below ``rel * M``, capped at ``L/2`` but never below ``g``.
        """
        fam = self.family
        if isinstance(fam, SquareWell):
            return max(self.g, fam.well_end)
        if fam.amplitude <= 0:
            return self.g
        r = (fam.amplitude / (rel * self.M)) ** (1.0 / fam.s)
        if L is not None:
            r = min(r, L / 2)
        return max(r, self.g)

    def kernel_params(self) -> tuple[int, np.ndarray]:
        """Family code and packed parameters for the compiled kernels."""
        fam = self.family
        pp = np.zeros(8)
        pp[0], pp[1], pp[2], pp[3], pp[4] = self.f, self.d, self.g, fam.u0, fam.well_depth
        if isinstance(fam, SquareWell):
            pp[5] = fam.well_end
            return FAMILY_SQUARE_WELL, pp
        pp[6], pp[7] = fam.s, fam.amplitude
        return FAMILY_POWER_TAIL, pp

    def to_dict(self) -> dict:
        fam = self.family
        out = {"family": fam.name, "f": self.f, "d": self.d, "g": self.g, "M": self.M,
               "u0": fam.u0, "well_depth": fam.well_depth}
        if isinstance(fam, SquareWell):
            out["well_end"] = fam.well_end
        else:
            out["s"] = fam.s
            out["amplitude"] = fam.amplitude
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialSpec":
        data = dict(data)
        family = data.pop("family")
        if family == "square_well":
            return cls.square_well(
                f=data["f"], d=data["d"], u0=data.get("u0", 0.0),
                well_depth=data["well_depth"], well_end=data["well_end"],
                g=data.get("g"), M=data.get("M"))
        if family == "power_tail":
            return cls.power_tail(
                f=data["f"], d=data["d"], g=data["g"], u0=data.get("u0", 0.0),
                well_depth=data["well_depth"], s=data["s"], amplitude=data["amplitude"],
                M=data.get("M"))
        raise PotentialError(f"unknown potential family {family!r}")


@dataclass
class ValidationReport:
    ok: bool
    n_checked: int
    horizon: float
    grid_step: float
    violations: list = field(default_factory=list)


def evaluate(p: PotentialSpec, r: float) -> float:
    return p.evaluate(r)


def _scan_radii(p: PotentialSpec, grid_step: float, horizon: float) -> np.ndarray:
    r = np.arange(p.f + grid_step, horizon + grid_step, grid_step)
    marks = [p.d, p.g, np.nextafter(p.d, 0.0), np.nextafter(p.g, 0.0)]
    if isinstance(p.family, SquareWell):
        marks += [p.family.well_end, np.nextafter(p.family.well_end, 0.0)]
    marks = [m for m in marks if p.f < m <= horizon]
    return np.unique(np.concatenate([r, marks]))


def validate_shape(p: PotentialSpec, grid_step: float | None = None,
                   horizon: float | None = None, rtol: float = 1e-12) -> ValidationReport:
    """Scan ``phi`` on a radial grid and check the shape conditions.

    Checks the sign structure, the lower bound ``-M`` and domination by the
    tail majorant ``psi`` (which must itself be non-negative and
    non-increasing) for ``r >= g``.  Defaults: horizon ``10 g``, step
    ``(g - f) / 1e4``.

    Raises:
        ShapeViolation: listing every offending radius.
    """
    if horizon is None:
        horizon = 10.0 * p.g
    if grid_step is None:
        grid_step = (p.g - p.f) / 1e4
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    radii = _scan_radii(p, grid_step, horizon)
    tol = rtol * p.M
    bad = []
    prev_psi = math.inf
    for r in radii:
        v = p.evaluate(float(r))
        if r < p.d:
            if v < -tol:
                bad.append((float(r), v, f"phi >= 0 on (f, d) = ({p.f}, {p.d})"))
            continue
        if v > tol:
            bad.append((float(r), v, f"phi <= 0 on [d, inf) = [{p.d}, inf)"))
        if v < -p.M - tol:
            bad.append((float(r), v, f"phi >= -M = {-p.M}"))
        if r >= p.g:
            s = p.psi(float(r))
            if s < 0 or s > prev_psi * (1 + rtol):
                bad.append((float(r), s, "psi positive and non-increasing on [g, inf)"))
            if -v > s + tol:
                bad.append((float(r), v, f"-phi <= psi(r) = {s:.6g} for r >= g"))
            prev_psi = s
    if bad:
        raise ShapeViolation(bad)
    return ValidationReport(ok=True, n_checked=len(radii), horizon=horizon, grid_step=grid_step)


def tail_integral(p: PotentialSpec, nu: int) -> float:
    """``I = int_g^inf r**(nu-1) psi(r) dr`` in closed form."""
    fam = p.family
    if isinstance(fam, SquareWell):
        depth = max(fam.well_depth, 0.0)
        if fam.well_end <= p.g:
            return 0.0
        return depth * (fam.well_end ** nu - p.g ** nu) / nu
    if fam.amplitude == 0:
        return 0.0
    if fam.s <= nu:
        raise DivergentTail(f"tail exponent s={fam.s} must exceed the dimension nu={nu}")
    return fam.amplitude * p.g ** (nu - fam.s) / (fam.s - nu)


def _level_set(p: PotentialSpec, m: float) -> list[tuple[float, float]]:
    """Closed radial intervals (outside the core) where ``phi <= -m``."""
    fam = p.family
    out = []
    if isinstance(fam, SquareWell):
        if fam.well_depth >= m and fam.well_end > p.d:
            out.append((p.d, float(np.nextafter(fam.well_end, 0.0))))
        return out
    lo, hi = None, None
    if fam.well_depth >= m:
        lo, hi = p.d, p.g
    if fam.amplitude > 0 and fam.amplitude * p.g ** (-fam.s) >= m:
        r_m = (fam.amplitude / m) ** (1.0 / fam.s)
        if lo is None:
            lo = p.g
        hi = r_m
    elif lo is not None:
        # the flat part is closed on the right only in the limit
        hi = np.nextafter(p.g, 0.0)
    if lo is not None and hi > lo:
        out.append((lo, hi))
    return out


def attraction_window(p: PotentialSpec, m: float, cap: float) -> tuple[float, float]:
    """Interval ``[a, a + eps]`` with ``phi <= -m`` throughout and ``eps <= cap``.

    Returns the window starting at the smallest admissible radius ``a``
    (``a >= d``).

    Raises:
        NoWindow: if ``m`` is outside ``(0, M)`` or ``phi`` never reaches ``-m``.
    """
    if not 0 < m < p.M:
        raise NoWindow(f"attraction level must satisfy 0 < m < M={p.M}, got m={m}")
    if cap <= 0:
        raise ValueError("cap must be positive")
    intervals = _level_set(p, m)
    if not intervals:
        raise NoWindow(f"phi never reaches -{m}")
    a, b = intervals[0]
    return float(a), float(min(cap, b - a))
