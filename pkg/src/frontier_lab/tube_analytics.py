"""Closed-form and series predictions for single-particle tube events.

The exact eigenseries for a Brownian motion killed at the walls of a fixed
tube, the up-to-constant envelopes for moving tubes, the short-time reflection
bound, and the algebraic shape formulas used as Monte Carlo targets: the
probability of sitting just below the top of a shrinking tube, the expected
top-window particle count, and the displacement tail shape z e^(-sqrt2 z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .curves import (
    SQRT2,
    DISPLACEMENT_CRITICAL,
    Curve,
    energy_functional,
    intrinsic_clock_time,
)
from .errors import ParamError, SeriesDivergenceGuard

__all__ = [
    "EnvelopePair",
    "WindowSpec",
    "fixed_tube_probability",
    "moving_tube_envelope",
    "moving_tube_short_time_bound",
    "top_window_shape",
    "top_window_shape_short_time",
    "predicted_top_window_count",
    "displacement_tail_shape",
]

_SERIES_CAP = 10_000


@dataclass(frozen=True)
class WindowSpec:
    """End-window (p, q) in units of the tube width; half-open by convention.

    The discrete top-of-tube counts use the half-open window
    [width - 2, width - 1), which corresponds to p = 1 - 2/L, q = 1 - 1/L.
    """

    p: float
    q: float
    half_open: bool = True

    def __post_init__(self):
        if not self.p < self.q:
            raise ParamError("window needs p < q")


@dataclass(frozen=True)
class EnvelopePair:
    """Lower/upper envelope expressions bracketing a tube probability.

    The expressions bracket the truth only up to constants depending on the
    curvature budget; when direction_swapped (floor slope <= 0 at the
    endpoint) the printed roles of lower and upper are exchanged.
    """

    lower: float
    upper: float
    direction_swapped: bool

    def ordered(self) -> tuple:
        return (self.upper, self.lower) if self.direction_swapped else (self.lower, self.upper)


def fixed_tube_probability(y: float, t: float, p: float, q: float,
                           tol: float = 1e-12) -> float:
    """P(a Brownian motion from y stays in (-1, 1) up to t and ends in (p, q)).

    Eigenfunction series of the killed kernel: sum over n >= 1 of
    exp(-n^2 pi^2 t / 8) sin(n pi (y+1)/2) int_p^q sin(n pi (z+1)/2) dz,
    truncated once a geometric tail bound falls below tol.
    """
    if not (-1.0 < y < 1.0):
        raise ParamError("start point must lie inside (-1, 1)")
    if not (-1.0 <= p <= q <= 1.0):
        raise ParamError("window must satisfy -1 <= p <= q <= 1")
    if t <= 0.0:
        raise ParamError("t must be positive")
    if tol <= 0.0:
        raise ParamError("tol must be positive")
    if p == q:
        return 0.0
    rate = math.pi**2 * t / 8.0
    total = 0.0
    for n in range(1, _SERIES_CAP + 1):
        decay = math.exp(-(n * n) * rate)
        phi = math.sin(n * math.pi * (y + 1.0) / 2.0)
        window = (2.0 / (n * math.pi)) * (
            math.cos(n * math.pi * (p + 1.0) / 2.0)
            - math.cos(n * math.pi * (q + 1.0) / 2.0)
        )
        total += decay * phi * window
        # remaining terms are bounded by (q-p) exp(-m^2 rate) summed over
        # m > n, which a geometric series with ratio exp(-(2n+1) rate) bounds
        ratio = math.exp(-(2 * n + 1) * rate)
        tail = (q - p) * decay * ratio / max(1.0 - ratio, 1e-300)
        if tail < tol * max(abs(total), 1e-30):
            return min(max(total, 0.0), 1.0)
    raise SeriesDivergenceGuard(
        f"series cap {_SERIES_CAP} hit before tolerance; t={t:g} is too small"
    )


def _window_sine_integral(p: float, q: float) -> float:
    """int_p^q sin(pi nu) d nu, exactly."""
    return (math.cos(math.pi * p) - math.cos(math.pi * q)) / math.pi


def moving_tube_envelope(f: Curve, L: Curve, t: float, x: float, w: WindowSpec,
                         eps: float) -> EnvelopePair:
    """Up-to-constant envelope for the probability of staying in the moving
    tube (f, f+L) up to t and ending in the window (p L(t), q L(t)).

    Both envelope values share the factor
    exp(-energy) sin(pi x / L(0)) int_p^q sin(pi nu) d nu and differ in the
    end-slope correction exp((1-q) f'(t) L(t)) versus exp((1-p) f'(t) L(t)).
    Valid once t is past the intrinsic clock time of eps; the bracketing
    constants depend only on (curvature budget, eps) and are not materialized.
    """
    if x <= 0.0 or abs(f.value(0.0) + x) > 1e-9 * (1.0 + abs(x)):
        raise ParamError("need f(0) = -x < 0")
    if f.value(0.0) + L.value(0.0) <= 0.0:
        raise ParamError("need f(0) + L(0) > 0")
    clock = intrinsic_clock_time(L, eps)
    if t < clock:
        raise ParamError(
            f"t={t:g} is before the intrinsic clock time {clock:g}; "
            "use moving_tube_short_time_bound instead"
        )
    energy = energy_functional(f, L, t)
    fp_t = f.derivative(t)
    Lt = L.value(t)
    shared = math.exp(-energy) * math.sin(math.pi * x / L.value(0.0))
    shared *= _window_sine_integral(w.p, w.q)
    lower = shared * math.exp((1.0 - w.q) * fp_t * Lt)
    upper = shared * math.exp((1.0 - w.p) * fp_t * Lt)
    return EnvelopePair(lower=lower, upper=upper, direction_swapped=fp_t <= 0.0)


def moving_tube_short_time_bound(f: Curve, L: Curve, t: float, x: float,
                                 w: WindowSpec) -> float:
    """Reflection-principle upper bound (up to constants) for the tube event
    at times before the intrinsic clock has run.

    exp(-(1/2) int f'^2 - f'(0)f(0) - p f'(t)L(t)) times the smallest of the
    two one-sided reflection estimates and 1:
    min( (-f(0)) (q^2-p^2) L(t)^2 / t^(3/2),
         (L(0)+f(0)) ((1-p)^2-(1-q)^2) L(t)^2 / t^(3/2),
         1 ).
    """
    if f.derivative(t) < 0.0:
        raise ParamError("bound requires f'(t) >= 0")
    if f.value(0.0) >= 0.0:
        raise ParamError("bound requires f(0) < 0")
    if not (0.0 <= w.p <= w.q <= 1.0):
        raise ParamError("window must satisfy 0 <= p <= q <= 1")
    drift, _ = quad(lambda s: f.derivative(s) ** 2, 0.0, t, epsabs=1e-12, limit=200)
    expo = math.exp(-0.5 * drift - f.derivative(0.0) * f.value(0.0)
                    - w.p * f.derivative(t) * L.value(t))
    Lt2 = L.value(t) ** 2 / t ** 1.5
    from_floor = (-f.value(0.0)) * (w.q**2 - w.p**2) * Lt2
    from_ceiling = (L.value(0.0) + f.value(0.0)) * ((1.0 - w.p) ** 2 - (1.0 - w.q) ** 2) * Lt2
    return expo * min(from_floor, from_ceiling, 1.0)


def top_window_shape(t: float, z: float, s: float, y: float) -> float:
    """Predicted shape of the probability of staying in the horizon tube up
    to s and sitting y below its top: y z exp(-s - sqrt2 z + sqrt2 y)
    t^(-1/2) (t+1-s)^(-1/2)."""
    if not 0.0 <= s <= t:
        raise ParamError("need 0 <= s <= t")
    return (
        y * z * math.exp(-s - SQRT2 * z + SQRT2 * y)
        / math.sqrt(t) / math.sqrt(t + 1.0 - s)
    )


def top_window_shape_short_time(z: float, s: float, y: float) -> float:
    """Short-time variant: exp(-s - sqrt2 z + sqrt2 y) min(y z s^(-3/2), 1)."""
    if s < 0.0:
        raise ParamError("need s >= 0")
    if y * z <= 0.0:
        clamp = 0.0
    elif s == 0.0 or y * z >= s**1.5:
        clamp = 1.0
    else:
        clamp = y * z / s**1.5
    return math.exp(-s - SQRT2 * z + SQRT2 * y) * clamp


def predicted_top_window_count(t: float, z: float, u: float) -> float:
    """Expected number of particles in the top window of the horizon tube at
    time u, up to constants: z exp(-sqrt2 z) t^(-1/2) (t+1-u)^(-1/2).

    Valid for u in [t^(2/3), t] and z in [1, a t^(1/3) / 2].
    """
    if not t ** (2.0 / 3.0) <= u <= t:
        raise ParamError("need u in [t^(2/3), t]")
    if not 1.0 <= z <= DISPLACEMENT_CRITICAL * t ** (1.0 / 3.0) / 2.0:
        raise ParamError("need z in [1, a t^(1/3) / 2]")
    return z * math.exp(-SQRT2 * z) / math.sqrt(t) / math.sqrt(t + 1.0 - u)


def displacement_tail_shape(z: float) -> float:
    """Shape z e^(-sqrt2 z) of the lower displacement tail
    P(min lineage sup <= a t^(1/3) - z); the bracketing constants are not
    known in closed form and must be fitted empirically."""
    if z < 1.0:
        raise ParamError("tail shape is stated for z >= 1")
    return z * math.exp(-SQRT2 * z)
