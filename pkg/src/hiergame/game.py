"""Two-level hierarchical game: construction and backward induction.

A hierarchical game factors each agent's strategy into a maneuver (level 1)
and a trajectory realizing it (level 2). Level-2 action availability is keyed
by the agent's own maneuver only, so the level-2 roots are exactly the joint
maneuver profiles. Backward induction instantiates a simultaneous-move level
game at every level root, solves it with a pluggable response concept, and
propagates values upward.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import concepts as C
from .concepts import ResponseConcept, ResponseKind
from .errors import (DegenerateLane, EmptyActionSet, Infeasible, SolverFailure)
from .lattice import (AgentState, KinematicLimits, SamplingScheme, Trajectory,
                      generate_trajectory, sample_endpoints)
from .utility import PedestrianState, UtilityParams, combined_utility

__all__ = [
    "HierarchicalGame",
    "LevelGame",
    "LevelRootSet",
    "GameValue",
    "BackwardInductionResult",
    "build_game",
    "level_roots",
    "backward_induction",
    "reduce_to_normal_form",
]


@dataclass
class LevelGame:
    """Simultaneous-move game at one level root."""

    participants: list[int]
    strategy_sets: list[list]
    payoffs: list[np.ndarray]

    def __post_init__(self):
        shape = tuple(len(s) for s in self.strategy_sets)
        for u in self.payoffs:
            if u.shape != shape:
                raise ValueError("payoff tensor shape mismatch")


@dataclass(frozen=True)
class LevelRootSet:
    level: int
    nodes: tuple


@dataclass
class GameValue:
    values: np.ndarray        # per-agent
    strategy: tuple           # supporting joint strategy


@dataclass
class HierarchicalGame:
    """Agents, per-level action sets, and leaf utilities.

    ``level2_payoffs`` maps each joint maneuver profile to one payoff tensor
    per agent over that profile's trajectory index space. ``trajectories`` is
    populated for physically built games and may be empty for abstract ones.
    """

    agent_ids: list[int]
    maneuvers: list[list[str]]                      # per agent
    level2_payoffs: dict[tuple, list[np.ndarray]]
    trajectories: dict[tuple[int, str], list[Trajectory]] = field(default_factory=dict)
    agents: list[AgentState] = field(default_factory=list)

    def __post_init__(self):
        for i, ms in enumerate(self.maneuvers):
            if not ms:
                raise EmptyActionSet(f"agent {self.agent_ids[i]} has no maneuver")
        for prof in itertools.product(*self.maneuvers):
            if prof not in self.level2_payoffs:
                raise ValueError(f"missing leaf utilities for profile {prof}")

    @property
    def n_agents(self) -> int:
        return len(self.agent_ids)

    def traj_count(self, i: int, maneuver: str) -> int:
        key = (i, maneuver)
        if key in self.trajectories:
            return len(self.trajectories[key])
        # abstract games: infer from any profile containing this maneuver
        for prof, payoffs in self.level2_payoffs.items():
            if prof[i] == maneuver:
                return payoffs[0].shape[i]
        raise KeyError(key)

    def level2_game(self, profile: tuple) -> LevelGame:
        payoffs = self.level2_payoffs[profile]
        sets = [list(range(payoffs[0].shape[i])) for i in range(self.n_agents)]
        return LevelGame(list(self.agent_ids), sets, payoffs)


def _traj_seed(seed: int, agent_idx: int, man_idx: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(agent_idx), int(man_idx)])
    return int(ss.generate_state(1)[0])


def build_game(agents: list[AgentState], peds: list[PedestrianState],
               scheme: SamplingScheme, params: UtilityParams, rules,
               seed: int = 0, limits: KinematicLimits = KinematicLimits(),
               n_gauss: int = 4) -> HierarchicalGame:
    """Build the hierarchical game for one scene snapshot.

    Level-1 actions come from the maneuver rule table; level-2 actions from
    lattice sampling under ``scheme``. Endpoints whose trajectories are
    kinematically infeasible are dropped; a maneuver that loses every
    trajectory is removed; an agent that loses every maneuver raises
    EmptyActionSet.
    """
    if not agents:
        raise EmptyActionSet("no agents")
    maneuvers: list[list[str]] = []
    trajectories: dict[tuple[int, str], list[Trajectory]] = {}
    for i, state in enumerate(agents):
        kept = []
        for m_idx, maneuver in enumerate(rules.actions_for(state)):
            trajs = []
            try:
                endpoints = sample_endpoints(
                    state, maneuver, scheme, n_gauss=n_gauss,
                    seed=_traj_seed(seed, i, m_idx), limits=limits)
            except DegenerateLane:
                continue
            for ep in endpoints:
                try:
                    trajs.append(generate_trajectory(
                        state, ep, limits=limits, maneuver_id=maneuver.name,
                        scheme_tag=scheme))
                except Infeasible:
                    continue
            if trajs:
                kept.append(maneuver.name)
                trajectories[(i, maneuver.name)] = trajs
        if not kept:
            raise EmptyActionSet(f"agent {state.agent_id} has no feasible maneuver")
        maneuvers.append(kept)

    level2_payoffs: dict[tuple, list[np.ndarray]] = {}
    n = len(agents)
    for prof in itertools.product(*maneuvers):
        sets = [trajectories[(i, prof[i])] for i in range(n)]
        shape = tuple(len(s) for s in sets)
        payoffs = [np.empty(shape) for _ in range(n)]
        for idx in itertools.product(*(range(k) for k in shape)):
            chosen = [sets[i][idx[i]] for i in range(n)]
            for i in range(n):
                others = [t for j, t in enumerate(chosen) if j != i]
                payoffs[i][idx] = combined_utility(chosen[i], others, peds, params)
        level2_payoffs[prof] = payoffs

    return HierarchicalGame(
        agent_ids=[a.agent_id for a in agents],
        maneuvers=maneuvers,
        level2_payoffs=level2_payoffs,
        trajectories=trajectories,
        agents=list(agents),
    )


def level_roots(game: HierarchicalGame, kappa: int) -> LevelRootSet:
    """Nodes of level kappa whose parent lies in a higher level."""
    if kappa == 1:
        return LevelRootSet(1, ((),))
    if kappa == 2:
        return LevelRootSet(2, tuple(itertools.product(*game.maneuvers)))
    raise ValueError("kappa must be 1 or 2")


def _pure_solutions(g: LevelGame, concept: ResponseConcept, i: int) -> set[tuple]:
    if concept.kind is ResponseKind.BR:
        return C.best_response_profile(g, i)
    if concept.kind is ResponseKind.MM:
        return C.maxmin_profile(g, i)
    raise ValueError(f"concept {concept.kind} is not a per-agent pure response")


def _belief_value(g: LevelGame, concept: ResponseConcept, i: int) -> float:
    """Value each concept's own evaluation rule assigns to its response."""
    u = g.payoffs[i]
    other = tuple(ax for ax in range(u.ndim) if ax != i)
    if concept.kind is ResponseKind.BR:
        return float(u.max())
    if concept.kind is ResponseKind.MM:
        return float(u.min(axis=other).max()) if u.ndim > 1 else float(u.max())
    raise ValueError(f"concept {concept.kind} is not a per-agent pure response")


@dataclass
class Level2Record:
    root: tuple
    game: LevelGame
    solutions: list[set[tuple]]          # per agent
    joint_plays: list[tuple]             # product of own components
    values: dict[tuple, np.ndarray]      # joint play -> per-agent value


@dataclass
class BackwardInductionResult:
    strategies: list[tuple]              # per-agent (maneuver, traj index) tuples
    values: np.ndarray                   # per-agent values of the first strategy
    level1: list[tuple]                  # (LevelGame, per-agent solution sets, values)
    level2: dict[tuple, Level2Record]
    value_propagation: str


_COMBO_CAP = 4096


def backward_induction(game: HierarchicalGame, concept_l2: ResponseConcept,
                       concept_l1: ResponseConcept,
                       value_propagation: str = "belief") -> BackwardInductionResult:
    """Solve the hierarchical game bottom-up.

    Level-2 games are solved with the non-strategic ``concept_l2`` at every
    level root; their values become the level-1 payoffs. Under ``belief``
    propagation the value is the one each agent's own response rule assumes
    (unique per root); under ``joint`` it is the utility at the joint play of
    the agents' own responses, and all solution combinations are tracked.
    """
    if value_propagation not in ("belief", "joint"):
        raise ValueError("value_propagation must be 'belief' or 'joint'")
    n = game.n_agents
    roots = level_roots(game, 2).nodes
    records: dict[tuple, Level2Record] = {}
    for root in roots:
        g2 = game.level2_game(root)
        sols = [_pure_solutions(g2, concept_l2, i) for i in range(n)]
        own = [sorted({p[i] for p in sols[i]}) for i in range(n)]
        joint = list(itertools.product(*own))
        values: dict[tuple, np.ndarray] = {}
        if value_propagation == "belief":
            v = np.array([_belief_value(g2, concept_l2, i) for i in range(n)])
            for play in joint:
                values[play] = v
        else:
            for play in joint:
                values[play] = np.array([g2.payoffs[i][play] for i in range(n)])
        records[root] = Level2Record(root, g2, sols, joint, values)

    # One level-1 game per combination of level-2 joint plays across roots.
    # Under belief propagation the root value is play-independent, so a single
    # representative play per root suffices.
    if value_propagation == "belief":
        combo_plays = [records[r].joint_plays[:1] for r in roots]
    else:
        combo_plays = [records[r].joint_plays for r in roots]
    combos = 1
    for plays in combo_plays:
        combos *= len(plays)
        if combos > _COMBO_CAP:
            raise SolverFailure(f"level-2 solution combinations exceed {_COMBO_CAP}")

    man_shape = tuple(len(m) for m in game.maneuvers)
    level1 = []
    strategies: list[tuple] = []
    first_values = None
    for combo in itertools.product(*combo_plays):
        payoffs1 = [np.empty(man_shape) for _ in range(n)]
        for r_idx, root in enumerate(roots):
            man_idx = tuple(game.maneuvers[i].index(root[i]) for i in range(n))
            v = records[root].values[combo[r_idx]]
            for i in range(n):
                payoffs1[i][man_idx] = v[i]
        g1 = LevelGame(list(game.agent_ids),
                       [list(m) for m in game.maneuvers], payoffs1)
        if concept_l1.kind is ResponseKind.PNE:
            pne = C.enumerate_pne(g1)
            sols1 = [set(pne) for _ in range(n)]
            own1 = [sorted({p[i] for p in pne}) for i in range(n)]
        else:
            sols1 = [_pure_solutions(g1, concept_l1, i) for i in range(n)]
            own1 = [sorted({p[i] for p in sols1[i]}) for i in range(n)]
        if any(not o for o in own1):
            level1.append((g1, sols1, None))
            continue
        # Each agent's strategy comes from its own believed solution profile:
        # the lowest-index level-1 profile its response rule tracks, and the
        # lowest own trajectory of the level-2 solution at that profile's
        # root. Under PNE all agents share the equilibrium profile.
        strategy = []
        if concept_l1.kind is ResponseKind.PNE:
            prof = min(sols1[0])  # lowest-index equilibrium, shared
            chosen_man = prof
            root = tuple(game.maneuvers[j][prof[j]] for j in range(n))
            for i in range(n):
                traj_i = sorted({p[i] for p in records[root].solutions[i]})[0]
                strategy.append((root[i], traj_i))
            vals = np.array([payoffs1[i][chosen_man] for i in range(n)])
        else:
            for i in range(n):
                own_i = own1[i][0]  # lowest-index tie break
                prof_i = min(p for p in sols1[i] if p[i] == own_i)
                root_i = tuple(game.maneuvers[j][prof_i[j]] for j in range(n))
                traj_i = sorted({p[i] for p in records[root_i].solutions[i]})[0]
                strategy.append((root_i[i], traj_i))
            vals = np.array([_belief_value(g1, concept_l1, i) for i in range(n)])
        strategy = tuple(strategy)
        level1.append((g1, sols1, vals))
        strategies.append(strategy)
        if first_values is None:
            first_values = vals

    if first_values is None:
        raise SolverFailure("no level-1 solution found")
    return BackwardInductionResult(strategies, first_values, level1, records,
                                   value_propagation)


def reduce_to_normal_form(game: HierarchicalGame) -> LevelGame:
    """Flatten to one meta-action per full (maneuver, trajectory) strategy."""
    n = game.n_agents
    metas = []
    for i in range(n):
        acts = []
        for m in game.maneuvers[i]:
            acts.extend((m, k) for k in range(game.traj_count(i, m)))
        metas.append(acts)
    shape = tuple(len(a) for a in metas)
    payoffs = [np.empty(shape) for _ in range(n)]
    for idx in itertools.product(*(range(k) for k in shape)):
        prof = tuple(metas[i][idx[i]][0] for i in range(n))
        tidx = tuple(metas[i][idx[i]][1] for i in range(n))
        leaf = game.level2_payoffs[prof]
        for i in range(n):
            payoffs[i][idx] = leaf[i][tidx]
    return LevelGame(list(game.agent_ids), metas, payoffs)
