"""Level-2 action generation: lattice endpoint sampling and spline trajectories.

Trajectories are the low-level actions of the two-level driving game. For a
given maneuver, endpoints in (x, y, v) are sampled under one of three schemes:

* ``S1``    -- a single normative endpoint from a piecewise-constant
  acceleration model along the lane centerline.
* ``S1B``   -- the S1 endpoint plus the four spatial/velocity extremes of the
  bounded action space (lane bounds x velocity envelope bounds).
* ``S1G``   -- the S1 endpoint plus Gaussian draws centered on it with unit
  diagonal covariance in (x [m], y [m], v [m/s]).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLane, Infeasible, MismatchedHorizon, UnknownManeuver

__all__ = [
    "Task",
    "Segment",
    "Light",
    "SamplingScheme",
    "KinematicLimits",
    "LaneRef",
    "AgentState",
    "Maneuver",
    "LatticeEndpoint",
    "Trajectory",
    "sample_endpoints",
    "generate_trajectory",
    "arc_length",
    "min_distance_gap",
]


class Task(enum.Enum):
    LEFT_TURN = "LEFT_TURN"
    RIGHT_TURN = "RIGHT_TURN"
    THROUGH = "THROUGH"


class Segment(enum.Enum):
    APPROACH = "APPROACH"
    TURN_EXEC = "TURN_EXEC"
    EXIT = "EXIT"


class Light(enum.Enum):
    GREEN = "GREEN"
    AMBER = "AMBER"
    RED = "RED"


class SamplingScheme(enum.Enum):
    S1 = "S1"
    S1B = "S1B"
    S1G = "S1G"


@dataclass(frozen=True)
class KinematicLimits:
    """Passenger-vehicle comfort limits; config-overridable defaults."""

    a_min: float = -4.0   # m/s^2
    a_max: float = 3.0    # m/s^2
    j_max: float = 2.0    # m/s^3
    dt_traj: float = 0.1  # s, trajectory sample step
    horizon: float = 5.0  # s, action plan horizon


@dataclass
class LaneRef:
    """Polyline lane geometry with symmetric spatial bounds."""

    centerline: np.ndarray  # (n, 2) waypoints, meters
    half_width: float
    speed_limit: float

    def __post_init__(self):
        self.centerline = np.asarray(self.centerline, dtype=float)
        if self.centerline.ndim != 2 or self.centerline.shape[0] < 2:
            raise ValueError("centerline needs >= 2 waypoints")
        seg = np.diff(self.centerline, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ValueError("consecutive centerline waypoints must be distinct")
        if self.half_width <= 0.0:
            raise ValueError("half_width must be positive")
        self._cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        self._seg = seg
        self._seg_len = seg_len

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc length ``s`` along the centerline."""
        if s < -1e-9 or s > self.length + 1e-9:
            raise DegenerateLane(
                f"arc length {s:.2f} outside lane of length {self.length:.2f}"
            )
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self._cum, s, side="right") - 1)
        i = min(i, len(self._seg) - 1)
        frac = (s - self._cum[i]) / self._seg_len[i]
        return self.centerline[i] + frac * self._seg[i]

    def tangent_at(self, s: float) -> np.ndarray:
        """Unit tangent at arc length ``s``."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self._cum, s, side="right") - 1)
        i = min(max(i, 0), len(self._seg) - 1)
        return self._seg[i] / self._seg_len[i]

    def normal_at(self, s: float) -> np.ndarray:
        t = self.tangent_at(s)
        return np.array([-t[1], t[0]])

    def project(self, point) -> tuple[float, float]:
        """Project a point onto the centerline; returns (arc length, lateral offset)."""
        p = np.asarray(point, dtype=float)
        best = (0.0, float("inf"), 0.0)
        for i in range(len(self._seg)):
            a = self.centerline[i]
            d = self._seg[i]
            t = float(np.clip(np.dot(p - a, d) / np.dot(d, d), 0.0, 1.0))
            q = a + t * d
            dist = float(np.hypot(*(p - q)))
            if dist < best[1]:
                n = np.array([-d[1], d[0]]) / self._seg_len[i]
                lat = float(np.dot(p - q, n))
                best = (float(self._cum[i] + t * self._seg_len[i]), dist, lat)
        return best[0], best[2]


@dataclass
class AgentState:
    """Kinematic and situational snapshot of one road user."""

    agent_id: int
    position: tuple[float, float]
    heading: float
    speed: float
    acceleration: float
    task: Task
    segment: Segment
    light: Light
    lane: LaneRef

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError("speed must be nonnegative")


@dataclass(frozen=True)
class Maneuver:
    """A level-1 action with its velocity envelope and target speed."""

    name: str
    target_speed: float
    v_lo: float
    v_hi: float

    def __post_init__(self):
        if not (0.0 <= self.v_lo <= self.v_hi):
            raise ValueError("need 0 <= v_lo <= v_hi")


@dataclass(frozen=True)
class LatticeEndpoint:
    x: float
    y: float
    v: float

    def __post_init__(self):
        if self.v < 0.0:
            raise ValueError("endpoint speed must be nonnegative")


@dataclass
class Trajectory:
    """Time-parameterized path sampled at a fixed step.

    ``points`` is an (n, 4) array of (t, x, y, v). Speed columns follow the
    velocity profile; per-step acceleration/jerk invariants are checked on the
    speed column.
    """

    points: np.ndarray
    maneuver_id: str
    scheme_tag: SamplingScheme
    task: Task | None = field(default=None, compare=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)

    @property
    def times(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, 1:3]

    @property
    def v(self) -> np.ndarray:
        return self.points[:, 3]


def _const_accel_travel(v0: float, v_target: float, horizon: float,
                        limits: KinematicLimits) -> tuple[float, float]:
    """Distance and end speed under piecewise-constant acceleration.

    Accelerates at a_max (or brakes at a_min) until the target speed is
    reached, then holds it. Speed never drops below zero.
    """
    if abs(v_target - v0) < 1e-12:
        return v0 * horizon, v0
    a = limits.a_max if v_target > v0 else limits.a_min
    t_ramp = (v_target - v0) / a
    if t_ramp >= horizon:
        v_end = max(v0 + a * horizon, 0.0)
        if v0 + a * horizon < 0.0:  # stops before the horizon ends
            t_stop = -v0 / a
            dist = v0 * t_stop + 0.5 * a * t_stop * t_stop
        else:
            dist = v0 * horizon + 0.5 * a * horizon * horizon
        return dist, v_end
    dist = v0 * t_ramp + 0.5 * a * t_ramp * t_ramp + v_target * (horizon - t_ramp)
    return dist, v_target


def sample_endpoints(state: AgentState, maneuver: Maneuver,
                     scheme: SamplingScheme, n_gauss: int = 4,
                     seed: int | None = None,
                     limits: KinematicLimits = KinematicLimits()) -> list[LatticeEndpoint]:
    """Sample lattice endpoints for one (agent, maneuver) pair.

    The S1 endpoint leads every returned list, so scheme nesting
    (S1 subset of S1B and of S1G) holds by construction.
    """
    if maneuver is None:
        raise UnknownManeuver("no maneuver supplied")
    lane = state.lane
    s0, _ = lane.project(state.position)

    def endpoint_on_lane(v_goal: float, lateral: float = 0.0) -> LatticeEndpoint:
        dist, v_end = _const_accel_travel(state.speed, v_goal, limits.horizon, limits)
        s = s0 + dist
        if s > lane.length + 1e-9:
            raise DegenerateLane(
                f"lane length {lane.length:.1f} m < required travel {s:.1f} m"
            )
        p = lane.point_at(s)
        if lateral != 0.0:
            p = p + lateral * lane.normal_at(s)
        return LatticeEndpoint(float(p[0]), float(p[1]), float(v_end))

    s1 = endpoint_on_lane(maneuver.target_speed)
    if scheme is SamplingScheme.S1:
        return [s1]

    if scheme is SamplingScheme.S1B:
        out = [s1]
        for lateral in (lane.half_width, -lane.half_width):
            for v_bound in (maneuver.v_lo, maneuver.v_hi):
                out.append(endpoint_on_lane(v_bound, lateral))
        return out

    if scheme is SamplingScheme.S1G:
        if seed is None:
            raise ValueError("S1G sampling requires a seed")
        rng = np.random.default_rng(seed)
        draws = rng.normal(loc=[s1.x, s1.y, s1.v], scale=1.0, size=(n_gauss, 3))
        out = [s1]
        for x, y, v in draws:
            s, lat = lane.project((x, y))
            if abs(lat) > lane.half_width:  # project back to the lane bound
                lat = math.copysign(lane.half_width, lat)
                p = lane.point_at(min(s, lane.length)) + lat * lane.normal_at(s)
                x, y = float(p[0]), float(p[1])
            out.append(LatticeEndpoint(float(x), float(y), max(float(v), 0.0)))
        return out

    raise ValueError(f"unknown scheme {scheme}")


def _hermite_path(p0: np.ndarray, h0: float, p1: np.ndarray,
                  t1: np.ndarray, n: int = 200) -> np.ndarray:
    """Cubic Hermite path with heading-aligned boundary tangents."""
    chord = float(np.hypot(*(p1 - p0)))
    if chord < 1e-12:
        return np.tile(p0, (n, 1))
    m0 = chord * np.array([math.cos(h0), math.sin(h0)])
    m1 = chord * np.asarray(t1, dtype=float)
    u = np.linspace(0.0, 1.0, n)[:, None]
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1


def generate_trajectory(state: AgentState, endpoint: LatticeEndpoint,
                        horizon: float | None = None,
                        limits: KinematicLimits = KinematicLimits(),
                        maneuver_id: str = "",
                        scheme_tag: SamplingScheme = SamplingScheme.S1,
                        end_tangent: np.ndarray | None = None) -> Trajectory:
    """Connect the current pose to an endpoint with a spline trajectory.

    The speed profile is the cubic in time with zero acceleration slope at
    both boundaries, which degenerates to a linear ramp from the current
    speed to the endpoint speed; positions advance along the spatial spline
    proportionally to integrated speed.
    """
    T = limits.horizon if horizon is None else float(horizon)
    v0, v1 = float(state.speed), float(endpoint.v)
    mean_acc = (v1 - v0) / T
    if mean_acc > limits.a_max + 1e-9 or mean_acc < limits.a_min - 1e-9:
        raise Infeasible(f"mean acceleration {mean_acc:.2f} m/s^2 outside limits")

    p0 = np.asarray(state.position, dtype=float)
    p1 = np.array([endpoint.x, endpoint.y])
    if end_tangent is None:
        s_end, _ = state.lane.project(p1)
        end_tangent = state.lane.tangent_at(s_end)
    path = _hermite_path(p0, state.heading, p1, end_tangent)
    seg = np.diff(path, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    path_len = float(cum[-1])

    # Reachability of the path length itself under acceleration limits.
    max_travel = v0 * T + 0.5 * limits.a_max * T * T
    if path_len > max_travel + 1e-6:
        raise Infeasible(
            f"path length {path_len:.1f} m exceeds reachable {max_travel:.1f} m"
        )

    n = int(round(T / limits.dt_traj)) + 1
    t = np.linspace(0.0, T, n)
    v = v0 + (v1 - v0) * t / T
    travelled = v0 * t + 0.5 * (v1 - v0) * t * t / T
    total = travelled[-1]
    if path_len < 1e-9:
        xy = np.tile(p0, (n, 1))
    elif total < 1e-9:
        raise Infeasible("endpoint displaced but speed profile integrates to zero")
    else:
        s_of_t = path_len * travelled / total
        x = np.interp(s_of_t, cum, path[:, 0])
        y = np.interp(s_of_t, cum, path[:, 1])
        xy = np.column_stack([x, y])

    points = np.column_stack([t, xy, v])
    return Trajectory(points, maneuver_id=maneuver_id, scheme_tag=scheme_tag,
                      task=state.task)


def arc_length(traj: Trajectory) -> float:
    """Polyline length of the trajectory positions."""
    d = np.diff(traj.xy, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def min_distance_gap(a: Trajectory, b: Trajectory) -> float:
    """Minimum time-synchronized Euclidean gap between two trajectories."""
    ta, tb = a.times, b.times
    if ta.shape != tb.shape or not np.allclose(ta, tb, atol=1e-9):
        raise MismatchedHorizon("trajectories do not share a time grid")
    d = a.xy - b.xy
    return float(np.min(np.hypot(d[:, 0], d[:, 1])))
