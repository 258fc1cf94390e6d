"""Linear flow tracing: chart crossings and free path lengths.

Free path lengths come in two flavors: time to enter the closed
epsilon-neighborhood of the cone points (circular obstacles) and time to
cross a perpendicular segment of half-length epsilon through a cone point
(segment obstacles).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import engine
from .engine import CircleObstacles, get_arrays, trace_batch
from .errors import InvalidEpsilon, SingularImpact
from .surface import TranslationSurface, separation_exceeds
from .transversal import build_transversals


@dataclass(frozen=True)
class UnitTangentState:
    """A point of the unit tangent bundle: chart, planar point, direction."""

    chart: int
    point: tuple[float, float]
    theta: float

    def direction(self):
        return (math.cos(self.theta), math.sin(self.theta))


class HitKind(Enum):
    HIT = "hit"
    CENSORED = "censored"
    SINGULAR_IMPACT = "singular-impact"


@dataclass(frozen=True)
class HitResult:
    """Outcome of a free-path trace.

    time is the hit time for HIT, the cap used for CENSORED, and the abort
    time for SINGULAR_IMPACT.
    """

    kind: HitKind
    time: float

    @property
    def is_hit(self) -> bool:
        return self.kind is HitKind.HIT

    @property
    def is_censored(self) -> bool:
        return self.kind is HitKind.CENSORED

    @staticmethod
    def hit(t: float) -> "HitResult":
        return HitResult(HitKind.HIT, float(t))

    @staticmethod
    def censored(cap: float) -> "HitResult":
        return HitResult(HitKind.CENSORED, float(cap))

    @staticmethod
    def singular(t: float) -> "HitResult":
        return HitResult(HitKind.SINGULAR_IMPACT, float(t))


@dataclass(frozen=True)
class Chord:
    """Straight segment traversed inside one chart."""

    chart: int
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])


def step_across_edge(surface: TranslationSurface, state: UnitTangentState):
    """Follow the forward ray to the chart boundary and glue across it.

    Returns (new state, chord traversed).  Raises SingularImpact when the
    ray exits within corner tolerance of a vertex.
    """
    arr = get_arrays(surface)
    chart = np.asarray([state.chart], dtype=np.int64)
    pos = np.asarray([state.point], dtype=float)
    dvec = np.asarray([state.direction()], dtype=float)
    t_exit, exit_edge, q, sing = engine.exit_step(arr, chart, pos, dvec,
                                                  np.asarray([-1], dtype=np.int64))
    if not np.isfinite(t_exit[0]) or sing[0]:
        raise SingularImpact(
            f"ray from chart {state.chart} at {state.point} exits within corner "
            f"tolerance of a vertex")
    e = int(exit_edge[0])
    ch = int(chart[0])
    new_pos = q[0] + arr.glue_shift[ch, e]
    new_state = UnitTangentState(int(arr.glue_chart[ch, e]),
                                 (float(new_pos[0]), float(new_pos[1])), state.theta)
    chord = Chord(ch, (float(pos[0, 0]), float(pos[0, 1])),
                  (float(q[0, 0]), float(q[0, 1])))
    return new_state, chord


def _require_circular_epsilon(surface, epsilon):
    if epsilon <= 0:
        raise InvalidEpsilon("epsilon must be positive")
    if not separation_exceeds(surface, 2.0 * epsilon):
        raise InvalidEpsilon(
            f"epsilon {epsilon:g} is not below half the shortest singularity separation")


def _run_single(surface, state, t_max, obstacles, min_global_t=0.0) -> HitResult:
    res = trace_batch(surface,
                      np.asarray([state.chart], dtype=np.int64),
                      np.asarray([state.point], dtype=float),
                      np.asarray([state.direction()], dtype=float),
                      np.asarray([float(t_max)]),
                      obstacles, min_global_t=min_global_t)
    status = int(res.status[0])
    t = float(res.time[0])
    if status == engine.HIT:
        return HitResult.hit(t)
    if status == engine.CENSORED:
        return HitResult.censored(t)
    return HitResult.singular(t)


def free_path_circular(surface: TranslationSurface, epsilon: float,
                       state: UnitTangentState, t_max: float) -> HitResult:
    """First entry time into the closed epsilon-balls around the cone points.

    Requires epsilon below half the shortest singularity separation so the
    per-chart vertex test sees every obstacle.
    """
    _require_circular_epsilon(surface, epsilon)
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    return _run_single(surface, state, t_max, CircleObstacles(epsilon))


def free_path_segment(surface: TranslationSurface, epsilon: float,
                      state: UnitTangentState, t_max: float,
                      prongs: str = "pair") -> HitResult:
    """First crossing time of the perpendicular obstacle segments.

    The obstacle set is materialized per chart for the state's direction and
    validated to be embedded (InvalidEpsilon otherwise).
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    ts = build_transversals(surface, state.theta, epsilon, mode=prongs)
    return _run_single(surface, state, t_max, ts.obstacles)
