"""Hierarchical driving games with bounded-rationality estimation.

Multi-agent driving decisions at signalized intersections are modeled as
two-level hierarchical games (maneuvers over trajectories), solved under
quantal-response and equilibrium solution concepts, and fit to observed play
through exponential-regret generalized linear models.
"""

from . import errors
from .concepts import (MODEL_REGISTRY, BehaviorModel, Metamodel,
                       MixedResponse, ResponseConcept, ResponseKind)
from .estimation import (DEFAULT_FIT_COLUMNS, FEATURE_NAMES, G1Decision,
                         GlmFit, ModelFit, ModelReport, RegretRecord,
                         compute_regrets, estimate_alpha, evaluate_predictive,
                         fit_gamma_glm, fit_model, model_aic, predict_lambda)
from .game import (BackwardInductionResult, HierarchicalGame, LevelGame,
                   LevelRootSet, backward_induction, build_game, level_roots,
                   reduce_to_normal_form)
from .lattice import (AgentState, KinematicLimits, LaneRef, LatticeEndpoint,
                      Light, Maneuver, SamplingScheme, Segment, Task,
                      Trajectory, arc_length, generate_trajectory,
                      min_distance_gap, sample_endpoints)
from .scenario import (ManeuverRuleTable, ScenarioRecord, SyntheticSpec,
                       conflict_filter, decisions_for_model,
                       generate_synthetic, parse_scenarios, write_scenarios)
from .utility import (PedestrianState, UtilityParams, combined_utility,
                      excitatory_utility, pedestrian_inhibitory_utility,
                      vehicle_inhibitory_utility)

__version__ = "0.1.0"
