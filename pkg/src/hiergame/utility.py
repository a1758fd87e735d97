"""Inhibitory and excitatory utilities for trajectory pairs.

The scalar payoff of a trajectory is a weighted combination of three
components: a vehicle-gap inhibitory term (closed-form erf sigmoid), a
pedestrian right-of-way step term, and a progress (excitatory) term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .lattice import Task, Trajectory, arc_length, min_distance_gap

__all__ = [
    "UtilityParams",
    "PedestrianState",
    "excitatory_utility",
    "vehicle_inhibitory_utility",
    "pedestrian_inhibitory_utility",
    "combined_utility",
]

# Default minimum safe gaps (meters) by ordered (ego task, other task) pair.
# Turning-vs-through conflicts use 5 m, in-lane leader/follower pairs 3 m.
_DEFAULT_D_STAR = 5.0
_FOLLOW_D_STAR = 3.0


def default_d_star_table() -> dict[tuple[Task, Task], float]:
    table = {}
    for a in Task:
        for b in Task:
            table[(a, b)] = _FOLLOW_D_STAR if a == b else _DEFAULT_D_STAR
    return table


@dataclass
class UtilityParams:
    """Weights and scales of the combined utility.

    W orders its components as (inhibitory-vehicle, inhibitory-pedestrian,
    excitatory) and must be a convex combination.
    """

    W: tuple[float, float, float] = (0.25, 0.5, 0.25)
    d_g: float = 100.0
    sigma: float = 1.5
    d_star_table: dict[tuple[Task, Task], float] = field(default_factory=default_d_star_table)
    stop_threshold: float = 2.0     # m displacement below which a trajectory "waits"
    ped_vicinity: float = 15.0      # m

    def __post_init__(self):
        w = np.asarray(self.W, dtype=float)
        if w.shape != (3,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("W must be three nonnegative weights summing to 1")
        if self.d_g <= 0 or self.sigma <= 0:
            raise ValueError("d_g and sigma must be positive")
        if any(v <= 0 for v in self.d_star_table.values()):
            raise ValueError("d_star entries must be positive")

    def d_star_for(self, task_i: Task | None, task_j: Task | None) -> float:
        if task_i is None or task_j is None:
            return _DEFAULT_D_STAR
        return self.d_star_table.get((task_i, task_j), _DEFAULT_D_STAR)


@dataclass
class PedestrianState:
    position: tuple[float, float]
    has_right_of_way: bool
    on_conflicting_crosswalk: bool


def excitatory_utility(traj: Trajectory, params: UtilityParams) -> float:
    """Progress utility min(arc length / d_g, 1)."""
    return min(arc_length(traj) / params.d_g, 1.0)


def vehicle_inhibitory_utility(gap: float, d_star: float, sigma: float) -> float:
    """Closed form of the Gaussian-integrated erf sigmoid: erf((gap - d*)/(2 sigma)).

    This equals the integral of erf((gap - theta)/(sigma sqrt 2)) against a
    Normal(d*, sigma) density over theta.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if math.isinf(gap):
        return 1.0
    return float(erf((gap - d_star) / (2.0 * sigma)))


def _is_proceeding(traj: Trajectory, params: UtilityParams) -> bool:
    disp = float(np.hypot(*(traj.xy[-1] - traj.xy[0])))
    return disp >= params.stop_threshold


def pedestrian_inhibitory_utility(traj: Trajectory, peds: list[PedestrianState],
                                  params: UtilityParams | None = None) -> float:
    """Step utility: -1 if a proceeding trajectory ignores a pedestrian with
    priority (right of way in the vicinity, or on the conflicting crosswalk),
    +1 otherwise."""
    params = params or UtilityParams()
    if not peds or not _is_proceeding(traj, params):
        return 1.0
    xy = traj.xy
    for ped in peds:
        if ped.on_conflicting_crosswalk:
            return -1.0
        if ped.has_right_of_way:
            d = np.hypot(xy[:, 0] - ped.position[0], xy[:, 1] - ped.position[1])
            if float(d.min()) <= params.ped_vicinity:
                return -1.0
    return 1.0


def combined_utility(traj_i: Trajectory, trajs_others: list[Trajectory],
                     peds: list[PedestrianState], params: UtilityParams) -> float:
    """W-weighted combination of the three utility components.

    The vehicle inhibitory term applies one erf to the minimum
    time-synchronized gap over all opponents (worst case), using the safe
    distance of the closest opponent's task pairing.
    """
    if trajs_others:
        gaps = [(min_distance_gap(traj_i, o), o) for o in trajs_others]
        gap, closest = min(gaps, key=lambda g: g[0])
        d_star = params.d_star_for(traj_i.task, closest.task)
        u_v_inh = vehicle_inhibitory_utility(gap, d_star, params.sigma)
    else:
        u_v_inh = 1.0
    u_p_inh = pedestrian_inhibitory_utility(traj_i, peds, params)
    u_v_exc = excitatory_utility(traj_i, params)
    w = params.W
    return float(w[0] * u_v_inh + w[1] * u_p_inh + w[2] * u_v_exc)
