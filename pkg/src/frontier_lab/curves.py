"""Boundary curves with exact calculus, and the tube energy functional.

A curve is a finite sum of analytic terms (linear, forward/backward power,
log-corrected power), so evaluation and the first two derivatives are exact.
On top of that this module provides the scalar functionals that govern how
hard it is for a Brownian path to live between two such curves: the energy
functional, the curvature (regularity) budget, the intrinsic clock of a tube
width, and the asymptotic expansion of the inverse-square-width integral for
the log-tuned tube family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, ParamError, QuadratureFailure

__all__ = [
    "Constant",
    "Linear",
    "PowerForward",
    "PowerBackward",
    "LogPowerForward",
    "Curve",
    "CriticalConstants",
    "CONSTANTS",
    "SQRT2",
    "SURVIVAL_CRITICAL",
    "DISPLACEMENT_CRITICAL",
    "TUNED_WIDTH",
    "TUNED_GROWTH",
    "TUNED_TUBE_OFFSET",
    "NEVER",
    "energy_functional",
    "curvature_bound",
    "intrinsic_clock_time",
    "inverse_square_width_integral",
    "log_tuned_width_expansion",
    "make_curves",
]

SQRT2 = math.sqrt(2.0)

#: Critical barrier amplitude: a particle line can stay above
#: sqrt2*t - c*t^(1/3) forever with positive probability iff c is at least
#: this value.
SURVIVAL_CRITICAL = 3.0 ** (4.0 / 3.0) * math.pi ** (2.0 / 3.0) * 2.0 ** (-7.0 / 6.0)

#: Consistent-maximal-displacement constant: the minimal lineage sup of
#: sqrt2*s - X(s) grows like this constant times t^(1/3).
DISPLACEMENT_CRITICAL = 3.0 ** (1.0 / 3.0) * math.pi ** (2.0 / 3.0) * 2.0 ** (-0.5)

#: Common width coefficient of the log-tuned tube (the leading and the 1/log
#: correction both carry it) that cancels the first three expansion orders.
TUNED_WIDTH = 3.0 ** (1.0 / 3.0) * math.pi ** (2.0 / 3.0) * 2.0 ** (-1.0 / 6.0)

#: Growth-rate constant of the expected top-of-tube count for the tuned tube,
#: multiplying t^(1/3)/log^3 t.
TUNED_GROWTH = 2.0 ** (1.0 / 3.0) * 3.0 ** (1.0 / 3.0) * 11.0 * math.pi ** (2.0 / 3.0)

#: Sentinel meaning "the intrinsic clock never reaches the threshold".
NEVER = math.inf


@dataclass(frozen=True)
class CriticalConstants:
    survival_critical: float = SURVIVAL_CRITICAL
    displacement_critical: float = DISPLACEMENT_CRITICAL
    tuned_width: float = TUNED_WIDTH
    tuned_growth: float = TUNED_GROWTH
    sqrt2: float = SQRT2


CONSTANTS = CriticalConstants()


# --------------------------------------------------------------------------
# term kinds
# --------------------------------------------------------------------------

def _as_array(u):
    return np.asarray(u, dtype=float)


def _check_base(base, power: float, what: str):
    """Power bases must be positive; zero is fine when the power is positive."""
    b = np.asarray(base)
    bad = (b < 0.0) | ((b == 0.0) & (power <= 0.0))
    if np.any(bad):
        raise DomainError(f"nonpositive base in {what} term")


@dataclass(frozen=True)
class Constant:
    coefficient: float

    def value(self, u):
        return self.coefficient * np.ones_like(_as_array(u))

    def d1(self, u):
        return np.zeros_like(_as_array(u))

    d2 = d1


@dataclass(frozen=True)
class Linear:
    """coefficient * u"""

    coefficient: float

    def value(self, u):
        return self.coefficient * _as_array(u)

    def d1(self, u):
        return self.coefficient * np.ones_like(_as_array(u))

    def d2(self, u):
        return np.zeros_like(_as_array(u))


@dataclass(frozen=True)
class PowerForward:
    """coefficient * (u + shift)^exponent"""

    coefficient: float
    exponent: float
    shift: float = 0.0

    def value(self, u):
        w = _as_array(u) + self.shift
        _check_base(w, self.exponent, "PowerForward")
        return self.coefficient * w ** self.exponent

    def d1(self, u):
        w = _as_array(u) + self.shift
        p = self.exponent
        _check_base(w, p - 1.0, "PowerForward")
        return self.coefficient * p * w ** (p - 1.0)

    def d2(self, u):
        w = _as_array(u) + self.shift
        p = self.exponent
        _check_base(w, p - 2.0, "PowerForward")
        return self.coefficient * p * (p - 1.0) * w ** (p - 2.0)


@dataclass(frozen=True)
class PowerBackward:
    """coefficient * (horizon + shift - u)^exponent"""

    coefficient: float
    exponent: float
    horizon: float
    shift: float = 0.0

    def value(self, u):
        w = self.horizon + self.shift - _as_array(u)
        _check_base(w, self.exponent, "PowerBackward")
        return self.coefficient * w ** self.exponent

    def d1(self, u):
        w = self.horizon + self.shift - _as_array(u)
        p = self.exponent
        _check_base(w, p - 1.0, "PowerBackward")
        return -self.coefficient * p * w ** (p - 1.0)

    def d2(self, u):
        w = self.horizon + self.shift - _as_array(u)
        p = self.exponent
        _check_base(w, p - 2.0, "PowerBackward")
        return self.coefficient * p * (p - 1.0) * w ** (p - 2.0)


@dataclass(frozen=True)
class LogPowerForward:
    """coefficient * (u + power_shift)^exponent / log^log_power(u + shift)

    ``shift`` must keep log(u + shift) >= 1 on the domain (shift >= e does).
    ``power_shift`` defaults to ``shift``; a zero power_shift expresses terms
    like u^(1/3)/log^2(u+e) whose numerator is unshifted.
    """

    coefficient: float
    exponent: float
    log_power: int
    shift: float
    power_shift: Optional[float] = None

    def __post_init__(self):
        if self.power_shift is None:
            object.__setattr__(self, "power_shift", self.shift)

    def _bases(self, u, min_power: float):
        u = _as_array(u)
        w = u + self.power_shift
        v = u + self.shift
        _check_base(w, min_power, "LogPowerForward")
        _check_base(v, -1.0, "LogPowerForward log argument")
        lv = np.log(v)
        if np.any(lv <= 0.0):
            raise DomainError("log base below 1 in LogPowerForward term")
        return w, v, lv

    def value(self, u):
        w, _, lv = self._bases(u, self.exponent)
        return self.coefficient * w ** self.exponent * lv ** (-self.log_power)

    def d1(self, u):
        p, k = self.exponent, self.log_power
        w, v, lv = self._bases(u, p - 1.0)
        return self.coefficient * (
            p * w ** (p - 1.0) * lv ** (-k)
            - k * w ** p * lv ** (-k - 1.0) / v
        )

    def d2(self, u):
        p, k = self.exponent, self.log_power
        w, v, lv = self._bases(u, p - 2.0)
        return self.coefficient * (
            p * (p - 1.0) * w ** (p - 2.0) * lv ** (-k)
            - 2.0 * p * k * w ** (p - 1.0) * lv ** (-k - 1.0) / v
            + (k * (k + 1.0) * lv ** (-k - 2.0) + k * lv ** (-k - 1.0)) * w ** p / v ** 2
        )


CurveTerm = Union[Constant, Linear, PowerForward, PowerBackward, LogPowerForward]


# --------------------------------------------------------------------------
# curves
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Curve:
    """Sum of analytic terms on a closed domain [lo, hi] (hi may be inf)."""

    terms: tuple
    domain: tuple = (0.0, math.inf)

    def __init__(self, terms: Sequence[CurveTerm], domain=(0.0, math.inf)):
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "domain", (float(domain[0]), float(domain[1])))

    def _check(self, u):
        lo, hi = self.domain
        arr = _as_array(u)
        if np.any((arr < lo) | (arr > hi)):
            raise DomainError(f"u outside curve domain [{lo}, {hi}]")
        return arr

    def value(self, u):
        arr = self._check(u)
        out = np.zeros_like(arr)
        for term in self.terms:
            out = out + term.value(arr)
        return float(out) if np.ndim(u) == 0 else out

    __call__ = value

    def derivative(self, u, order: int = 1):
        """Exact derivative of the term sum; order 1 or 2.

        Valid wherever every term is differentiable (for curves with an
        unshifted power term that excludes u = 0).
        """
        if order not in (1, 2):
            raise ParamError("derivative order must be 1 or 2")
        arr = self._check(u)
        out = np.zeros_like(arr)
        for term in self.terms:
            out = out + (term.d1(arr) if order == 1 else term.d2(arr))
        return float(out) if np.ndim(u) == 0 else out

    def shifted(self, offset: float) -> "Curve":
        """Curve plus a constant."""
        return Curve(self.terms + (Constant(offset),), self.domain)

    def is_critical_line(self) -> bool:
        """True when the term sum is exactly slope-sqrt2 linear plus constants.

        The particle engine uses this to switch to the exact line-absorption
        sampler, which is discretization-free.
        """
        has_line = False
        for term in self.terms:
            if isinstance(term, Constant):
                continue
            if isinstance(term, Linear) and term.coefficient == SQRT2:
                has_line = True
                continue
            return False
        return has_line

    def constant_offset(self) -> float:
        """Sum of the Constant terms."""
        return sum(t.coefficient for t in self.terms if isinstance(t, Constant))


# --------------------------------------------------------------------------
# quadrature helpers
# --------------------------------------------------------------------------

_QUAD_LIMIT = 200


def _piecewise_quad(func, a: float, b: float, tol: float) -> float:
    """Adaptive quadrature, geometrically split so that integrands decaying
    over many decades keep honest per-piece error estimates."""
    if b <= a:
        return 0.0
    if b - a > 10.0:
        interior = a + np.geomspace(1.0, b - a, 40) - 1.0
        cuts = np.unique(np.concatenate([[a, b], interior]))
        cuts = cuts[(cuts >= a) & (cuts <= b)]
    else:
        cuts = np.array([a, b])
    total = 0.0
    err_total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        val, err = quad(func, lo, hi, epsabs=tol / max(len(cuts) - 1, 1),
                        epsrel=1e-11, limit=_QUAD_LIMIT)
        total += val
        err_total += err
    if not math.isfinite(total) or err_total > max(tol, 1e-9) * 50:
        raise QuadratureFailure(
            f"quadrature error estimate {err_total:.3e} above tolerance {tol:.3e}"
        )
    return total


# --------------------------------------------------------------------------
# functionals
# --------------------------------------------------------------------------

def energy_functional(f: Curve, L: Curve, t: float, quad_tol: float = 1e-10) -> float:
    """Exponential cost of staying in the moving tube (f, f+L) up to t.

    Value: (1/2) int_0^t f'^2 + int_0^t pi^2/(2 L^2) + f'(t)L(t) + f'(0)f(0)
    + (1/2) log L(0) - (1/2) log L(t).
    """
    if quad_tol <= 0:
        raise ParamError("quad_tol must be positive")
    if t <= 0:
        raise ParamError("t must be positive")
    L0 = L.value(0.0)
    Lt = L.value(t)
    if L0 <= 0 or Lt <= 0:
        raise DomainError("tube width must stay positive on [0, t]")
    i_drift = _piecewise_quad(lambda s: 0.5 * f.derivative(s) ** 2, 0.0, t, quad_tol)
    i_width = _piecewise_quad(
        lambda s: math.pi ** 2 / (2.0 * L.value(s) ** 2), 0.0, t, quad_tol
    )
    return (
        i_drift
        + i_width
        + f.derivative(t) * Lt
        + f.derivative(0.0) * f.value(0.0)
        + 0.5 * math.log(L0)
        - 0.5 * math.log(Lt)
    )


def curvature_bound(f: Curve, L: Curve, t: float, quad_tol: float = 1e-8) -> float:
    """Curvature-weighted regularity budget of the tube at horizon t.

    |L'(0)|L(0) + |L'(t)|L(t) + int |L''| L + int |f''| L - |L'(0)| f(0).
    A finite sup over t certifies that the uniform tube estimates apply.
    """
    if t <= 0:
        raise ParamError("t must be positive")
    lp0 = abs(L.derivative(0.0))
    lpt = abs(L.derivative(t))
    i_L = _piecewise_quad(lambda s: abs(L.derivative(s, 2)) * L.value(s), 0.0, t, quad_tol)
    i_f = _piecewise_quad(lambda s: abs(f.derivative(s, 2)) * L.value(s), 0.0, t, quad_tol)
    return lp0 * L.value(0.0) + lpt * L.value(t) + i_L + i_f - lp0 * f.value(0.0)


def inverse_square_width_integral(L: Curve, t: float) -> float:
    """int_0^t L(s)^-2 ds by adaptive quadrature."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    return _piecewise_quad(lambda s: 1.0 / L.value(s) ** 2, 0.0, t, 1e-10)


def intrinsic_clock_time(L: Curve, eps: float) -> float:
    """First time the accumulated inverse-square width exceeds eps.

    Returns the infimum t with int_0^t L(s)^-2 ds > eps, or the NEVER
    sentinel (inf) when the threshold is not reached on the curve's domain.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    hi = L.domain[1]
    if not math.isfinite(hi):
        # expand a bracket; widths of interest grow sublinearly, so the clock
        # diverges and a crossing exists, but cap the search all the same
        hi = 1.0
        while inverse_square_width_integral(L, hi) <= eps:
            hi *= 2.0
            if hi > 2.0 ** 40:
                return NEVER
    if inverse_square_width_integral(L, hi) <= eps:
        return NEVER
    return brentq(lambda tt: inverse_square_width_integral(L, tt) - eps,
                  0.0, hi, xtol=1e-10, rtol=1e-15)


def log_tuned_width_expansion(t: float, alpha: float = TUNED_WIDTH,
                              beta: Optional[float] = None) -> float:
    """Four-term asymptotic expansion of the inverse-square-width integral
    for the log-tuned tube, through order t^(1/3)/log^3 t.

    The remainder is of order t^(1/3)/log^4 t.
    """
    if t < 2:
        raise ParamError("expansion needs t >= 2")
    if beta is None:
        beta = alpha
    lt = math.log(t)
    c1 = 3.0 / alpha ** 2
    c2 = -6.0 * beta / alpha ** 3
    c3 = (9.0 * beta / alpha ** 4) * (beta - 2.0 * alpha)
    c4 = -(6.0 * beta / alpha ** 5) * (2.0 * beta ** 2 - 9.0 * alpha * beta + 18.0 * alpha ** 2)
    return t ** (1.0 / 3.0) * (c1 + c2 / lt + c3 / lt ** 2 + c4 / lt ** 3)


# --------------------------------------------------------------------------
# standard curve families
# --------------------------------------------------------------------------

CurveKind = Literal["critical_barrier", "tuned_tube", "horizon_tube", "log_offset_tube"]

#: Default additive constant of the tuned tube, chosen so the start point
#: sits strictly inside the tube: f(0) = -tuned_width/2 < 0 < f(0) + L(0).
TUNED_TUBE_OFFSET = SQRT2 * math.e + TUNED_WIDTH / 2.0


def make_curves(kind: CurveKind, t: Optional[float] = None, z: Optional[float] = None,
                offset_constant: Optional[float] = None):
    """Build one of the standard (floor, width) curve pairs.

    kind="critical_barrier"
        One-sided barrier sqrt2 u - c u^(1/3) + c u^(1/3)/log^2(u+e) - 1 with
        c the survival-critical amplitude; no width curve (returns (g, None)).
        The term-wise derivative is singular at u = 0 although the sum is not;
        evaluate derivatives at u > 0 only.
    kind="tuned_tube"
        Floor sqrt2(u+e) - c(u+e)^(1/3) + c(u+e)^(1/3)/log^2(u+e) - C and
        width alpha (u+e)^(1/3) (1 + 1/log(u+e)) with alpha the tuned width.
        C defaults to TUNED_TUBE_OFFSET; any C with f(0) < 0 < f(0) + L(0)
        is accepted.
    kind="horizon_tube"
        Needs t and z. Floor sqrt2 u - a(t+1)^(1/3) + z and width
        a (t+1-u)^(1/3) on the domain [0, t], a the displacement-critical
        constant. Requires z < a (t+1)^(1/3).
    kind="log_offset_tube"
        Needs t >= 1. Floor sqrt2 u - a t^(1/3) + log(t)/(3 sqrt2) + 1 and
        width a (t-u)^(1/3); the width vanishes at the horizon, so its
        derivatives exist on [0, t) only.
    """
    a = DISPLACEMENT_CRITICAL
    c = SURVIVAL_CRITICAL
    if kind == "critical_barrier":
        g = Curve([
            Linear(SQRT2),
            PowerForward(-c, 1.0 / 3.0, 0.0),
            LogPowerForward(c, 1.0 / 3.0, 2, math.e, power_shift=0.0),
            Constant(-1.0),
        ])
        return g, None
    if kind == "tuned_tube":
        C = TUNED_TUBE_OFFSET if offset_constant is None else float(offset_constant)
        f = Curve([
            PowerForward(SQRT2, 1.0, math.e),
            PowerForward(-c, 1.0 / 3.0, math.e),
            LogPowerForward(c, 1.0 / 3.0, 2, math.e),
            Constant(-C),
        ])
        L = Curve([
            PowerForward(TUNED_WIDTH, 1.0 / 3.0, math.e),
            LogPowerForward(TUNED_WIDTH, 1.0 / 3.0, 1, math.e),
        ])
        if not (f.value(0.0) < 0.0 < f.value(0.0) + L.value(0.0)):
            raise ParamError(
                "offset_constant must satisfy f(0) < 0 < f(0) + L(0); "
                f"admissible range is ({SQRT2 * math.e:.6f}, "
                f"{SQRT2 * math.e + L.value(0.0):.6f})"
            )
        return f, L
    if kind == "horizon_tube":
        if t is None or z is None:
            raise ParamError("horizon_tube needs t and z")
        if t <= 0:
            raise ParamError("t must be positive")
        if not z < a * (t + 1.0) ** (1.0 / 3.0):
            raise ParamError("horizon_tube needs z < a (t+1)^(1/3) so that f(0) < 0")
        f = Curve([Linear(SQRT2), Constant(z - a * (t + 1.0) ** (1.0 / 3.0))],
                  domain=(0.0, t))
        L = Curve([PowerBackward(a, 1.0 / 3.0, t, 1.0)], domain=(0.0, t))
        return f, L
    if kind == "log_offset_tube":
        if t is None:
            raise ParamError("log_offset_tube needs t")
        if t < 1:
            raise ParamError("log_offset_tube needs t >= 1")
        f = Curve([
            Linear(SQRT2),
            Constant(-a * t ** (1.0 / 3.0) + math.log(t) / (3.0 * SQRT2) + 1.0),
        ], domain=(0.0, t))
        L = Curve([PowerBackward(a, 1.0 / 3.0, t, 0.0)], domain=(0.0, t))
        return f, L
    raise ParamError(f"unknown curve kind {kind!r}")
