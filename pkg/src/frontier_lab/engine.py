"""Branching particle system with absorbing barriers, pruned to desk scale.

Each particle diffuses as a Brownian motion and splits in two at rate-1
exponential clocks that are carried exactly across time steps (splits are
resolved at the exact clock time inside a step, and barrier checks apply to
each sub-segment). Absorption at a barrier removes the particle; pruning IS
absorption, which is what keeps populations desk sized.

Two absorption schemes, chosen per scenario:

* line mode: when the floor is exactly the critical line sqrt2 u + c and no
  ceiling is present, the engine works in drift-adjusted coordinates where
  the barrier is constant and decides absorption from an exactly sampled
  per-segment bridge minimum. This scheme is exact in law at any dt, and the
  same minimum drives the running displacement sup, so displacement
  statistics are discretization free.
* tube mode: general curved floor and optional ceiling, linearized per
  segment, with Bernoulli bridge-crossing corrections (leading error O(dt)
  in event probabilities instead of O(sqrt dt) for naive endpoint checks).
  Two-sided survival multiplies the one-sided factors; the neglected
  double-crossing term is O(exp(-2 L^2/dt)) and irrelevant for every tube
  used here.

Replicas are batched into flat arrays, but every draw is keyed by
(seed, replica, lineage, step), so results are independent of batch size,
worker count, and of which barrier pruned which branch (common random
numbers across scenarios sharing a seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from .curves import SQRT2, Curve
from .errors import ParamError
from .stochastic_kernels import (
    CH_BRIDGE_MIN,
    CH_CLOCK,
    CH_CROSS_LOWER,
    CH_CROSS_UPPER,
    CH_MOVE,
    CHILD_WORDS,
    CLOCK_COUNTER,
    RandomStream,
    bridge_min_from_uniform,
    derive_key,
    fold,
    gaussian,
    uniform,
)

__all__ = [
    "TubeScenario",
    "ParticleState",
    "ParticleStatus",
    "TrajectoryOutcome",
    "PopulationResult",
    "PairMomentEstimate",
    "simulate",
    "simulate_population",
    "absorbed_count_at_line",
    "single_particle_tube_weights",
    "correlated_pair_estimate",
    "yule_pair_moment",
]

_U64 = np.uint64
_TAG_SINGLE = 0x5E0001
_TAG_PAIR = 0x5E0002


# --------------------------------------------------------------------------
# scenario and outcome records
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TubeScenario:
    """A simulation target: barriers, horizon, step, and observables.

    ``width`` is the tube width curve; the ceiling is lower + width. The top
    window counts particles with position - lower(u) inside
    [width(u) - top_window[0], width(u) - top_window[1]) at each observation
    time. ``declare_survived_at`` stops a replica early and scores it as
    survived once its live population reaches the threshold (for barriers
    along which the survivor population grows without bound).
    """

    lower: Optional[Curve] = None
    width: Optional[Curve] = None
    horizon: float = 1.0
    dt: float = 0.01
    top_window: Tuple[float, float] = (2.0, 1.0)
    track_displacement: bool = False
    population_cap: int = 10_000_000
    observation_times: Tuple[float, ...] = ()
    declare_survived_at: Optional[int] = None
    branching_rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "observation_times",
                           tuple(float(u) for u in self.observation_times))
        if self.horizon <= 0.0:
            raise ParamError("horizon must be positive")
        if self.dt <= 0.0:
            raise ParamError("dt must be positive")
        if self.width is not None and self.lower is None:
            raise ParamError("a width curve needs a floor curve")
        if self.population_cap <= 0:
            raise ParamError("population_cap must be positive")
        if self.branching_rate < 0.0:
            raise ParamError("branching_rate must be nonnegative (0 disables)")
        for u in self.observation_times:
            if not 0.0 < u <= self.horizon + 1e-12:
                raise ParamError("observation times must lie in (0, horizon]")
            k = u / self.dt
            if abs(k - round(k)) > 1e-9:
                raise ParamError("observation times must be multiples of dt")
        if not self.top_window[0] > self.top_window[1] >= 0.0:
            raise ParamError("top_window offsets must satisfy outer > inner >= 0")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    def uses_line_mode(self) -> bool:
        return (
            self.width is None
            and self.lower is not None
            and self.lower.is_critical_line()
        )


class ParticleStatus(Enum):
    ALIVE = "alive"
    ABSORBED_LOWER = "absorbed_lower"
    ABSORBED_UPPER = "absorbed_upper"


@dataclass(frozen=True)
class ParticleState:
    """Snapshot of one particle at the end of a run.

    ``displacement`` is the running sup of sqrt2 s - X(s) along the lineage;
    it starts at zero and never decreases, and absorbed particles never move
    again. Displacement is tracked exactly in line mode.
    """

    position: float
    displacement: float
    born_at: float
    lineage_key: int
    status: ParticleStatus = ParticleStatus.ALIVE
    absorbed_at: Optional[float] = None


@dataclass(frozen=True)
class TrajectoryOutcome:
    """One replica's trajectory summary."""

    final_population: int
    survived: bool
    budget_exceeded: bool
    lower_absorption_count: int
    upper_absorption_events: Tuple[float, ...]
    top_window_counts: Dict[float, int]
    min_displacement: Optional[float] = None
    particles: Tuple[ParticleState, ...] = ()


@dataclass
class PopulationResult:
    """Per-replica arrays for one scenario run over a batch of replicas."""

    replicas: np.ndarray
    survived: np.ndarray
    budget_exceeded: np.ndarray
    final_population: np.ndarray
    lower_absorption_count: np.ndarray
    min_displacement: np.ndarray
    top_window_counts: Dict[float, np.ndarray] = field(default_factory=dict)
    upper_events: Dict[int, Tuple[float, ...]] = field(default_factory=dict)
    displacement_checkpoints: Dict[float, np.ndarray] = field(default_factory=dict)

    def merge(self, other: "PopulationResult") -> "PopulationResult":
        return PopulationResult(
            replicas=np.concatenate([self.replicas, other.replicas]),
            survived=np.concatenate([self.survived, other.survived]),
            budget_exceeded=np.concatenate([self.budget_exceeded, other.budget_exceeded]),
            final_population=np.concatenate([self.final_population, other.final_population]),
            lower_absorption_count=np.concatenate(
                [self.lower_absorption_count, other.lower_absorption_count]),
            min_displacement=np.concatenate([self.min_displacement, other.min_displacement]),
            top_window_counts={
                u: np.concatenate([self.top_window_counts[u], other.top_window_counts[u]])
                for u in self.top_window_counts
            },
            upper_events={**self.upper_events, **other.upper_events},
            displacement_checkpoints={
                u: np.concatenate([self.displacement_checkpoints[u],
                                   other.displacement_checkpoints[u]])
                for u in self.displacement_checkpoints
            },
        )


# --------------------------------------------------------------------------
# block state
# --------------------------------------------------------------------------

class _Block:
    """Struct-of-arrays for the live particles of a batch of replicas."""

    __slots__ = ("key", "rep", "pos", "cur", "clock", "disp", "born")

    def __init__(self, key, rep, pos, cur, clock, disp, born):
        self.key = key
        self.rep = rep
        self.pos = pos
        self.cur = cur
        self.clock = clock
        self.disp = disp
        self.born = born

    @classmethod
    def roots(cls, root_keys: np.ndarray, rate: float = 1.0) -> "_Block":
        n = len(root_keys)
        with np.errstate(divide="ignore"):
            clock = -np.log(uniform(root_keys, CLOCK_COUNTER, CH_CLOCK)) / rate \
                if rate > 0.0 else np.full(n, np.inf)
        return cls(
            key=root_keys,
            rep=np.arange(n, dtype=np.int64),
            pos=np.zeros(n),
            cur=np.zeros(n),
            clock=clock,
            disp=np.zeros(n),
            born=np.zeros(n),
        )

    def __len__(self):
        return len(self.key)

    def keep(self, mask: np.ndarray) -> None:
        self.key = self.key[mask]
        self.rep = self.rep[mask]
        self.pos = self.pos[mask]
        self.cur = self.cur[mask]
        self.clock = self.clock[mask]
        self.disp = self.disp[mask]
        self.born = self.born[mask]

    def resolve(self, idx: np.ndarray, splits: np.ndarray,
                rate: float = 1.0) -> None:
        """Remove all particles at idx; those flagged in splits leave two
        children each at the parent position and clock time."""
        par = idx[splits]
        k1 = fold(self.key[par], CHILD_WORDS[0])
        k2 = fold(self.key[par], CHILD_WORDS[1])
        newkey = np.concatenate([k1, k2])
        born = np.concatenate([self.clock[par], self.clock[par]])
        newclock = born - np.log(uniform(newkey, CLOCK_COUNTER, CH_CLOCK)) / rate
        keep = np.ones(len(self.key), dtype=bool)
        keep[idx] = False
        self.key = np.concatenate([self.key[keep], newkey])
        self.rep = np.concatenate([self.rep[keep], self.rep[par], self.rep[par]])
        self.pos = np.concatenate([self.pos[keep], self.pos[par], self.pos[par]])
        self.cur = np.concatenate([self.cur[keep], born])
        self.clock = np.concatenate([self.clock[keep], newclock])
        self.disp = np.concatenate([self.disp[keep], self.disp[par], self.disp[par]])
        self.born = np.concatenate([self.born[keep], born])


class _Recorder:
    """Per-replica accumulators for one batch."""

    def __init__(self, n: int, obs_times: Tuple[float, ...]):
        self.n = n
        self.lower_count = np.zeros(n, dtype=np.int64)
        self.budget = np.zeros(n, dtype=bool)
        self.declared = np.zeros(n, dtype=bool)
        self.final_pop = np.zeros(n, dtype=np.int64)
        self.window_counts = {u: np.zeros(n, dtype=np.int64) for u in obs_times}
        self.disp_checkpoints = {u: np.full(n, np.inf) for u in obs_times}
        self.upper_events: Dict[int, list] = {}

    def record_upper(self, reps: np.ndarray, times: np.ndarray) -> None:
        for r, s in zip(reps.tolist(), times.tolist()):
            self.upper_events.setdefault(int(r), []).append(float(s))


# --------------------------------------------------------------------------
# steppers
# --------------------------------------------------------------------------

def _line_advance(block: _Block, idx, step_ctr, seg_end, barrier: float, rec: _Recorder):
    """Move particles idx to seg_end in drift-adjusted coordinates and return
    a boolean absorbed mask (exact bridge-minimum against a flat barrier)."""
    delta = seg_end - block.cur[idx]
    z = gaussian(block.key[idx], step_ctr, CH_MOVE)
    y1 = block.pos[idx] + np.sqrt(delta) * z - SQRT2 * delta
    u = uniform(block.key[idx], step_ctr, CH_BRIDGE_MIN)
    m = bridge_min_from_uniform(u, block.pos[idx], y1, delta)
    block.pos[idx] = y1
    block.cur[idx] = seg_end
    block.disp[idx] = np.maximum(block.disp[idx], -m)
    absorbed = m <= barrier
    if absorbed.any():
        np.add.at(rec.lower_count, block.rep[idx][absorbed], 1)
    return absorbed


def _tube_advance(block: _Block, idx, step_ctr, seg_end, lower: Curve,
                  width: Optional[Curve], track_disp: bool, rec: _Recorder):
    """Move particles idx to seg_end with linearized barrier crossing checks.

    Returns the absorbed mask (lower or upper); upper absorptions are
    recorded with the segment end time.
    """
    t_a = block.cur[idx]
    delta = seg_end - t_a
    z = gaussian(block.key[idx], step_ctr, CH_MOVE)
    x1 = block.pos[idx] + np.sqrt(delta) * z
    hit_lower = np.zeros(len(idx), dtype=bool)
    hit_upper = np.zeros(len(idx), dtype=bool)
    if lower is not None:
        b0 = lower.value(t_a)
        b1 = lower.value(seg_end)
        d0 = block.pos[idx] - b0
        d1 = x1 - b1
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            p_lo = np.where((d0 <= 0.0) | (d1 <= 0.0), 1.0,
                            np.exp(-2.0 * np.maximum(d0, 0.0) * np.maximum(d1, 0.0)
                                   / np.maximum(delta, 1e-300)))
        hit_lower = uniform(block.key[idx], step_ctr, CH_CROSS_LOWER) < p_lo
    if width is not None:
        c0 = b0 + width.value(t_a)
        c1 = b1 + width.value(seg_end)
        e0 = c0 - block.pos[idx]
        e1 = c1 - x1
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            p_up = np.where((e0 <= 0.0) | (e1 <= 0.0), 1.0,
                            np.exp(-2.0 * np.maximum(e0, 0.0) * np.maximum(e1, 0.0)
                                   / np.maximum(delta, 1e-300)))
        hit_upper = (~hit_lower) & (uniform(block.key[idx], step_ctr, CH_CROSS_UPPER) < p_up)
    if track_disp:
        y0 = block.pos[idx] - SQRT2 * t_a
        y1 = x1 - SQRT2 * np.asarray(seg_end)
        u = uniform(block.key[idx], step_ctr, CH_BRIDGE_MIN)
        m = bridge_min_from_uniform(u, y0, y1, np.maximum(delta, 1e-300))
        block.disp[idx] = np.maximum(block.disp[idx], -m)
    block.pos[idx] = x1
    block.cur[idx] = seg_end
    if hit_lower.any():
        np.add.at(rec.lower_count, block.rep[idx][hit_lower], 1)
    if hit_upper.any():
        which = np.asarray(seg_end) * np.ones_like(delta)
        rec.record_upper(block.rep[idx][hit_upper], which[hit_upper])
    return hit_lower | hit_upper


def _run_block(scenario: TubeScenario, root_keys: np.ndarray) -> Tuple[_Block, _Recorder]:
    """Run one batch of replicas to the horizon."""
    line_mode = scenario.uses_line_mode()
    barrier = scenario.lower.constant_offset() if line_mode else 0.0
    block = _Block.roots(root_keys, scenario.branching_rate)
    rec = _Recorder(len(root_keys), scenario.observation_times)
    obs_lookup = {round(u / scenario.dt) - 1: u for u in scenario.observation_times}
    n_steps = scenario.n_steps

    def advance(idx, seg_end, k):
        step_ctr = _U64(k)
        if line_mode:
            return _line_advance(block, idx, step_ctr, seg_end, barrier, rec)
        return _tube_advance(block, idx, step_ctr, seg_end, scenario.lower,
                             scenario.width, scenario.track_displacement, rec)

    for k in range(n_steps):
        t1 = min((k + 1) * scenario.dt, scenario.horizon)
        # resolve branch clocks ringing inside this step, possibly nested
        while len(block):
            sel = block.clock < t1
            if not sel.any():
                break
            idx = np.nonzero(sel)[0]
            absorbed = advance(idx, block.clock[idx], k)
            block.resolve(idx, ~absorbed, scenario.branching_rate)
        # everyone else advances to the grid point
        if len(block):
            idx = np.arange(len(block))
            absorbed = advance(idx, np.full(len(block), t1), k)
            if absorbed.any():
                block.keep(~absorbed)
        # budget and early-declare bookkeeping, then observables
        counts = np.bincount(block.rep, minlength=rec.n)
        over = counts > scenario.population_cap
        if over.any():
            rec.budget |= over
            rec.final_pop[over] = counts[over]
            block.keep(~over[block.rep])
            counts = np.bincount(block.rep, minlength=rec.n)
        if scenario.declare_survived_at is not None:
            done = (counts >= scenario.declare_survived_at) & ~rec.declared
            if done.any():
                rec.declared |= done
                rec.final_pop[done] = counts[done]
                block.keep(~done[block.rep])
        if k in obs_lookup and len(block):
            u = obs_lookup[k]
            if scenario.width is not None:
                off = block.pos - scenario.lower.value(u)
                w = scenario.width.value(u)
                lo, hi = w - scenario.top_window[0], w - scenario.top_window[1]
                in_win = (off >= lo) & (off < hi)
                if in_win.any():
                    np.add.at(rec.window_counts[u], block.rep[in_win], 1)
            if scenario.track_displacement:
                np.minimum.at(rec.disp_checkpoints[u], block.rep, block.disp)
    counts = np.bincount(block.rep, minlength=rec.n)
    flagged = rec.budget | rec.declared
    rec.final_pop[~flagged] = counts[~flagged]
    return block, rec


def _collect(scenario: TubeScenario, replica_ids: np.ndarray, block: _Block,
             rec: _Recorder) -> PopulationResult:
    n = rec.n
    min_disp = np.full(n, np.inf)
    if len(block):
        np.minimum.at(min_disp, block.rep, block.disp)
    survived = (np.bincount(block.rep, minlength=n) > 0) | rec.declared | rec.budget
    return PopulationResult(
        replicas=replica_ids,
        survived=survived,
        budget_exceeded=rec.budget.copy(),
        final_population=rec.final_pop.copy(),
        lower_absorption_count=rec.lower_count.copy(),
        min_displacement=min_disp,
        top_window_counts={u: rec.window_counts[u].copy()
                           for u in scenario.observation_times},
        upper_events={int(replica_ids[r]): tuple(ts)
                      for r, ts in rec.upper_events.items()},
        displacement_checkpoints={u: rec.disp_checkpoints[u].copy()
                                  for u in scenario.observation_times},
    )


# --------------------------------------------------------------------------
# public simulation API
# --------------------------------------------------------------------------

def simulate_population(scenario: TubeScenario, seed: int, replicas,
                        batch_size: int = 1024) -> PopulationResult:
    """Run many replicas of a scenario; returns per-replica summaries.

    ``replicas`` is a range or array of replica ids; the ids key the
    randomness, so any partition of the same ids into batches or workers
    reproduces identical results.
    """
    ids = np.asarray(list(replicas), dtype=np.int64)
    if len(ids) == 0:
        raise ParamError("need at least one replica")
    out: Optional[PopulationResult] = None
    for lo in range(0, len(ids), batch_size):
        sub = ids[lo:lo + batch_size]
        keys = derive_key(seed, sub.astype(np.uint64))
        block, rec = _run_block(scenario, keys)
        res = _collect(scenario, sub, block, rec)
        out = res if out is None else out.merge(res)
    return out


def simulate(scenario: TubeScenario, stream: RandomStream,
             return_particles: bool = False) -> TrajectoryOutcome:
    """One full system trajectory for the replica identified by ``stream``."""
    root = np.array([stream.key()], dtype=np.uint64)
    block, rec = _run_block(scenario, root)
    res = _collect(scenario, np.array([0], dtype=np.int64), block, rec)
    particles: Tuple[ParticleState, ...] = ()
    if return_particles and len(block):
        # line-mode positions are drift adjusted; report lab coordinates
        shift = SQRT2 * scenario.horizon if scenario.uses_line_mode() else 0.0
        particles = tuple(
            ParticleState(
                position=float(block.pos[i] + shift),
                displacement=float(block.disp[i]),
                born_at=float(block.born[i]),
                lineage_key=int(block.key[i]),
            )
            for i in range(len(block))
        )
    md = float(res.min_displacement[0])
    return TrajectoryOutcome(
        final_population=int(res.final_population[0]),
        survived=bool(res.survived[0]),
        budget_exceeded=bool(res.budget_exceeded[0]),
        lower_absorption_count=int(res.lower_absorption_count[0]),
        upper_absorption_events=res.upper_events.get(0, ()),
        top_window_counts={u: int(res.top_window_counts[u][0])
                           for u in scenario.observation_times},
        min_displacement=md if scenario.track_displacement else None,
        particles=particles,
    )


def absorbed_count_at_line(y: float, t: float, seed: int, replicas,
                           dt: float = 0.25) -> np.ndarray:
    """Per-replica count of particles absorbed at the line sqrt2 u - y before
    time t; absorption at the line is the counted event and removes the
    particle with its subtree."""
    if y <= 0.0:
        raise ParamError("y must be positive")
    from .curves import Constant, Linear

    line = Curve([Linear(SQRT2), Constant(-y)])
    scenario = TubeScenario(lower=line, horizon=t, dt=dt)
    res = simulate_population(scenario, seed, replicas)
    return res.lower_absorption_count


# --------------------------------------------------------------------------
# single-particle weighted runs
# --------------------------------------------------------------------------

def single_particle_tube_weights(lower: Curve, width: Optional[Curve],
                                 keys: np.ndarray, t0, t1: float, dt: float,
                                 x0, step_offset: int = 0):
    """Bridge-corrected survival weights for independent single particles.

    Advances each particle from (t0, x0) to t1 on its own dt grid and
    accumulates the conditional no-crossing probability
    prod (1 - p_lower)(1 - p_upper); a skeleton endpoint outside the tube
    makes its segment factor zero through p = 1. Averaging the returned
    weights (times any endpoint indicator) estimates the tube event
    probability without the variance of realized absorption. t0 and x0 may
    be arrays for per-particle start points; returns (x_end, weights).
    """
    nrep = len(keys)
    cur = np.asarray(t0, dtype=float) * np.ones(nrep)
    x = np.asarray(x0, dtype=float) * np.ones(nrep)
    w = np.ones(nrep)
    n_steps = int(math.ceil((t1 - float(np.min(cur))) / dt - 1e-9))
    for k in range(n_steps):
        seg_end = np.minimum(cur + dt, t1)
        delta = seg_end - cur
        active = delta > 1e-15
        if not active.any():
            break
        step_ctr = _U64(step_offset + k)
        z = gaussian(keys, step_ctr, CH_MOVE)
        x1 = np.where(active, x + np.sqrt(np.maximum(delta, 0.0)) * z, x)
        factor = _segment_survival_factor(lower, width, cur, seg_end, x, x1, delta)
        w = w * np.where(active, factor, 1.0)
        x = x1
        cur = seg_end
    return x, w


def _segment_survival_factor(lower, width, t_a, t_b, x_a, x_b, delta):
    """(1 - p_cross_floor)(1 - p_cross_ceiling) on one linearized segment."""
    b0 = lower.value(t_a)
    b1 = lower.value(t_b)
    d0 = x_a - b0
    d1 = x_b - b1
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        p_lo = np.where((d0 <= 0.0) | (d1 <= 0.0), 1.0,
                        np.exp(-2.0 * np.maximum(d0, 0.0) * np.maximum(d1, 0.0)
                               / np.maximum(delta, 1e-300)))
    factor = 1.0 - p_lo
    if width is not None:
        e0 = b0 + width.value(t_a) - x_a
        e1 = b1 + width.value(t_b) - x_b
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            p_up = np.where((e0 <= 0.0) | (e1 <= 0.0), 1.0,
                            np.exp(-2.0 * np.maximum(e0, 0.0) * np.maximum(e1, 0.0)
                                   / np.maximum(delta, 1e-300)))
        factor = factor * (1.0 - p_up)
    return factor


def _end_window_indicator(lower: Curve, width: Curve, t: float, x: np.ndarray,
                          offsets: Tuple[float, float]) -> np.ndarray:
    off = x - lower.value(t)
    wv = width.value(t)
    return ((off >= wv - offsets[0]) & (off < wv - offsets[1])).astype(float)


@dataclass(frozen=True)
class PairMomentEstimate:
    """Estimate of E[count(m) * count(n)] from the two-spine representation."""

    value: float
    stderr: float
    diagonal_term: float
    pair_term: float
    n_samples: int


def yule_pair_moment(m: float, n: float) -> float:
    """E[count(m) count(n)] when the counted event is trivially true:
    e^n + 2 e^(m+n) (1 - e^-m) for m <= n (pure Yule second moment)."""
    if not 0.0 <= m <= n:
        raise ParamError("need 0 <= m <= n")
    return math.exp(n) + 2.0 * math.exp(m + n) * (1.0 - math.exp(-m))


def correlated_pair_estimate(t: float, z: float, m: float, n: float,
                             replicas: int, seed: int, dt: float = 0.01,
                             trivial_events: bool = False,
                             window: Tuple[float, float] = (2.0, 1.0)) -> PairMomentEstimate:
    """Monte Carlo of E[#top-window(m) * #top-window(n)] via two dependent
    spines equal until an exponential(2) split time.

    The second moment decomposes as e^n P(one spine in both windows) plus
    2 int_0^m e^(m+n-r) P(pair events | split at r) dr. The integral is
    sampled by importance drawing r with density proportional to e^-r on
    [0, m], which makes the importance weight constant, so the estimator is
    unbiased. With ``trivial_events`` the indicator events are identically
    one and the closed form e^n + 2 e^(m+n)(1 - e^-m) is returned with zero
    error (both sampled factors are exactly one).
    """
    if not 0.0 < m <= n <= t:
        raise ParamError("need 0 < m <= n <= t")
    if replicas <= 1:
        raise ParamError("need at least two replicas")
    if trivial_events:
        total = yule_pair_moment(m, n)
        return PairMomentEstimate(
            value=total,
            stderr=0.0,
            diagonal_term=math.exp(n),
            pair_term=total - math.exp(n),
            n_samples=replicas,
        )
    from .curves import make_curves

    lower, width = make_curves("horizon_tube", t=t, z=z)

    # diagonal term: one spine through both windows
    keys = derive_key(seed, _TAG_SINGLE, np.arange(replicas, dtype=np.uint64))
    x_m, w_m = single_particle_tube_weights(lower, width, keys, 0.0, m, dt, 0.0)
    ind_m = _end_window_indicator(lower, width, m, x_m, window)
    if n > m:
        x_n, w_n = single_particle_tube_weights(
            lower, width, keys, m, n, dt, x_m,
            step_offset=int(math.ceil(m / dt)) + 1)
        ind_n = _end_window_indicator(lower, width, n, x_n, window)
        diag_samples = w_m * ind_m * w_n * ind_n
    else:
        diag_samples = w_m * ind_m
    diag_scale = math.exp(n)

    # pair term: common spine to r, then two independent continuations
    pkeys = derive_key(seed, _TAG_PAIR, np.arange(replicas, dtype=np.uint64))
    u = uniform(pkeys, CLOCK_COUNTER, CH_CLOCK)
    mass = 1.0 - math.exp(-m)
    r = -np.log(1.0 - u * mass)
    x_r, w_c = _ragged_common_run(lower, width, pkeys, r, dt)
    k1 = fold(pkeys, CHILD_WORDS[0])
    k2 = fold(pkeys, CHILD_WORDS[1])
    off = int(math.ceil(m / dt)) + 1
    x_1, w_1 = single_particle_tube_weights(lower, width, k1, r, m, dt, x_r, step_offset=off)
    ind_1 = _end_window_indicator(lower, width, m, x_1, window)
    x_2, w_2 = single_particle_tube_weights(lower, width, k2, r, n, dt, x_r, step_offset=off)
    ind_2 = _end_window_indicator(lower, width, n, x_2, window)
    pair_samples = w_c * w_1 * ind_1 * w_2 * ind_2
    pair_scale = 2.0 * math.exp(m + n) * mass

    value = diag_scale * float(diag_samples.mean()) + pair_scale * float(pair_samples.mean())
    var = (diag_scale**2 * float(diag_samples.var(ddof=1))
           + pair_scale**2 * float(pair_samples.var(ddof=1))) / replicas
    return PairMomentEstimate(
        value=value,
        stderr=math.sqrt(var),
        diagonal_term=diag_scale * float(diag_samples.mean()),
        pair_term=pair_scale * float(pair_samples.mean()),
        n_samples=replicas,
    )


def _ragged_common_run(lower, width, keys, t_end, dt):
    """Weighted run from time zero to per-particle end times t_end."""
    t_end = np.asarray(t_end, dtype=float)
    nrep = len(keys)
    x = np.zeros(nrep)
    w = np.ones(nrep)
    cur = np.zeros(nrep)
    n_steps = int(math.ceil(float(np.max(t_end)) / dt - 1e-9))
    for k in range(n_steps):
        seg_end = np.minimum(cur + dt, t_end)
        delta = seg_end - cur
        active = delta > 1e-15
        if not active.any():
            break
        z = gaussian(keys, _U64(k), CH_MOVE)
        x1 = np.where(active, x + np.sqrt(np.maximum(delta, 0.0)) * z, x)
        factor = _segment_survival_factor(lower, width, cur, seg_end, x, x1, delta)
        w = w * np.where(active, factor, 1.0)
        x = x1
        cur = seg_end
    return x, w
