"""Solve a two-vehicle intersection scene under several solution concepts.

A through vehicle meets a left-turning vehicle at a signalized intersection.
We build the two-level game (maneuvers over lattice trajectories), run
backward induction under optimistic (BR), pessimistic (MM), and equilibrium
(PNE) readings, and compare the selected strategies.
"""

import numpy as np

from hiergame import (AgentState, LaneRef, Light, ManeuverRuleTable,
                      ResponseConcept, ResponseKind, SamplingScheme, Segment,
                      Task, UtilityParams, backward_induction, build_game,
                      level_roots)

through_lane = LaneRef(np.array([[0.0, 0.0], [400.0, 0.0]]),
                       half_width=1.75, speed_limit=15.0)
turn_lane = LaneRef(np.array([[30.0, -200.0], [30.0, 200.0]]),
                    half_width=1.75, speed_limit=15.0)

agents = [
    AgentState(0, (0.0, 0.0), 0.0, 9.0, 0.0, Task.THROUGH,
               Segment.APPROACH, Light.GREEN, through_lane),
    AgentState(1, (30.0, -40.0), np.pi / 2, 7.0, 0.0, Task.LEFT_TURN,
               Segment.APPROACH, Light.GREEN, turn_lane),
]

game = build_game(agents, [], SamplingScheme.S1B, UtilityParams(),
                  ManeuverRuleTable(), seed=0)

print("maneuvers per agent:", game.maneuvers)
print("level-2 roots:", len(level_roots(game, 2).nodes))
for i in range(game.n_agents):
    for m in game.maneuvers[i]:
        print(f"  agent {i} / {m}: {game.traj_count(i, m)} trajectories")

for name, l2, l1 in (
    ("optimistic (BR/BR)", ResponseKind.BR, ResponseKind.BR),
    ("pessimistic (MM/MM)", ResponseKind.MM, ResponseKind.MM),
    ("equilibrium (BR/PNE)", ResponseKind.BR, ResponseKind.PNE),
):
    res = backward_induction(game, ResponseConcept(l2), ResponseConcept(l1))
    print(f"\n{name}")
    for i, (man, traj) in enumerate(res.strategies[0]):
        print(f"  agent {i}: maneuver={man} trajectory={traj} "
              f"value={res.values[i]:.3f}")
