"""Scenario ingestion, maneuver rules, conflict filtering, and synthetic data.

The file format is line-delimited JSON, one game per line, with an explicit
``schema_version``. Synthetic datasets come from a calibrated abstract
intersection template: per game, level-1 payoff matrices are constructed so
that the generating model's quantal response produces regrets with mean
exactly 1/lambda_true, making the Gamma-GLM recovery experiment well posed.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .concepts import (BehaviorModel, MODEL_REGISTRY, Metamodel,
                       ResponseConcept, ResponseKind)
from .errors import (ObservedActionMissing, ParseError, SchemaViolation,
                     TemplateUnsatisfiable)
from .estimation import FEATURE_NAMES, G1Decision
from .game import backward_induction, build_game
from .lattice import (AgentState, KinematicLimits, LaneRef, Light, Maneuver,
                      SamplingScheme, Segment, Task, generate_trajectory,
                      sample_endpoints)
from .utility import PedestrianState, UtilityParams

__all__ = [
    "SCHEMA_VERSION",
    "ScenarioRecord",
    "ManeuverRuleTable",
    "SyntheticSpec",
    "parse_scenarios",
    "write_scenarios",
    "conflict_filter",
    "generate_synthetic",
    "decisions_for_model",
    "variant_index",
    "VARIANT_KEYS",
]

SCHEMA_VERSION = 1

# Order of the stored propagated level-1 payoff variants: the trajectory
# sampling scheme paired with the level-2 response that produced the values.
VARIANT_KEYS = (
    (SamplingScheme.S1, None),
    (SamplingScheme.S1B, ResponseKind.BR),
    (SamplingScheme.S1B, ResponseKind.MM),
    (SamplingScheme.S1G, ResponseKind.BR),
    (SamplingScheme.S1G, ResponseKind.MM),
)


def variant_index(model: BehaviorModel) -> int:
    return VARIANT_KEYS.index((model.scheme, model.g2_response))


# ---------------------------------------------------------------------------
# Maneuver rule table
# ---------------------------------------------------------------------------

_TURN_TASKS = (Task.LEFT_TURN, Task.RIGHT_TURN)


class ManeuverRuleTable:
    """Maps (task, segment, light) to the available maneuvers.

    Defaults: turning tasks on approach or during the turn may proceed within
    [2, 9] m/s or wait; through traffic on green tracks its speed (envelope
    current speed +- 2 m/s, clipped to [0, limit]) or decelerates; through
    traffic on amber/red decelerates; turning tasks on the exit segment track
    speed. Entries are overridable via a config mapping keyed by
    "TASK:SEGMENT:LIGHT" with a list of {name, v_lo, v_hi, target} dicts where
    bounds/targets may be the strings "v" (current speed), "v-2", "v+2".
    """

    def __init__(self, overrides: dict | None = None):
        self.overrides = dict(overrides or {})

    @staticmethod
    def _resolve(expr, state: AgentState) -> float:
        if isinstance(expr, str):
            v = state.speed
            val = {"v": v, "v-2": v - 2.0, "v+2": v + 2.0}[expr]
        else:
            val = float(expr)
        return float(np.clip(val, 0.0, state.lane.speed_limit))

    def _default_entries(self, state: AgentState) -> list[dict]:
        task, seg, light = state.task, state.segment, state.light
        if task in _TURN_TASKS:
            if seg in (Segment.APPROACH, Segment.TURN_EXEC):
                return [
                    {"name": "PROCEED_TURN", "v_lo": 2.0, "v_hi": 9.0, "target": "v"},
                    {"name": "WAIT", "v_lo": 0.0, "v_hi": 0.0, "target": 0.0},
                ]
            return [{"name": "TRACK_SPEED", "v_lo": "v-2", "v_hi": "v+2", "target": "v"}]
        if light is Light.GREEN:
            return [
                {"name": "TRACK_SPEED", "v_lo": "v-2", "v_hi": "v+2", "target": "v"},
                {"name": "DECELERATE", "v_lo": 0.0, "v_hi": "v", "target": 0.0},
            ]
        return [{"name": "DECELERATE", "v_lo": 0.0, "v_hi": "v", "target": 0.0}]

    def actions_for(self, state: AgentState) -> list[Maneuver]:
        key = f"{state.task.value}:{state.segment.value}:{state.light.value}"
        entries = self.overrides.get(key) or self._default_entries(state)
        out = []
        for e in entries:
            lo = self._resolve(e["v_lo"], state)
            hi = self._resolve(e["v_hi"], state)
            lo, hi = min(lo, hi), max(lo, hi)
            target = float(np.clip(self._resolve(e["target"], state), lo, hi))
            out.append(Maneuver(e["name"], target, lo, hi))
        if not out:
            raise ValueError(f"rule table has no actions for {key}")
        return out

    def producible(self, state: AgentState, maneuver_name: str) -> bool:
        return any(m.name == maneuver_name for m in self.actions_for(state))


# ---------------------------------------------------------------------------
# Records and line-delimited JSON I/O
# ---------------------------------------------------------------------------

def _default_lane() -> LaneRef:
    return LaneRef(np.array([[0.0, 0.0], [400.0, 0.0]]), half_width=1.75,
                   speed_limit=15.0)


@dataclass
class ScenarioRecord:
    """One game instance: scene snapshot plus observed strategies."""

    game_id: int
    timestamp: float
    agents: list[AgentState]
    pedestrians: list[PedestrianState]
    observed: dict[int, dict]     # agent_id -> {"maneuver": str, "trajectory": int}
    map_ref: str | None = None
    synthetic: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = {
            "schema_version": self.schema_version,
            "game_id": self.game_id,
            "timestamp": self.timestamp,
            "agents": [
                {
                    "agent_id": a.agent_id,
                    "position": list(a.position),
                    "heading": a.heading,
                    "speed": a.speed,
                    "acceleration": a.acceleration,
                    "task": a.task.value,
                    "segment": a.segment.value,
                    "light": a.light.value,
                    "lane": {
                        "centerline": a.lane.centerline.tolist(),
                        "half_width": a.lane.half_width,
                        "speed_limit": a.lane.speed_limit,
                    },
                }
                for a in self.agents
            ],
            "pedestrians": [
                {
                    "position": list(p.position),
                    "has_right_of_way": p.has_right_of_way,
                    "on_conflicting_crosswalk": p.on_conflicting_crosswalk,
                }
                for p in self.pedestrians
            ],
            "observed": {str(k): v for k, v in self.observed.items()},
            "map_ref": self.map_ref,
        }
        if self.synthetic is not None:
            syn = dict(self.synthetic)
            for k, v in syn.items():
                if isinstance(v, np.ndarray):
                    syn[k] = v.tolist()
            d["synthetic"] = syn
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioRecord":
        agents = [
            AgentState(
                agent_id=a["agent_id"],
                position=tuple(a["position"]),
                heading=float(a["heading"]),
                speed=float(a["speed"]),
                acceleration=float(a["acceleration"]),
                task=Task(a["task"]),
                segment=Segment(a["segment"]),
                light=Light(a["light"]),
                lane=LaneRef(np.asarray(a["lane"]["centerline"], dtype=float),
                             float(a["lane"]["half_width"]),
                             float(a["lane"]["speed_limit"])),
            )
            for a in d["agents"]
        ]
        peds = [
            PedestrianState(tuple(p["position"]), bool(p["has_right_of_way"]),
                            bool(p["on_conflicting_crosswalk"]))
            for p in d.get("pedestrians", [])
        ]
        return cls(
            game_id=int(d["game_id"]),
            timestamp=float(d["timestamp"]),
            agents=agents,
            pedestrians=peds,
            observed={int(k): v for k, v in d["observed"].items()},
            map_ref=d.get("map_ref"),
            synthetic=d.get("synthetic"),
            schema_version=int(d["schema_version"]),
        )


_AGENT_FIELDS = {
    "agent_id": int, "position": list, "heading": (int, float),
    "speed": (int, float), "acceleration": (int, float), "task": str,
    "segment": str, "light": str, "lane": dict,
}
_TOP_FIELDS = {
    "schema_version": int, "game_id": int, "timestamp": (int, float),
    "agents": list, "pedestrians": list, "observed": dict,
}


def _validate(d: dict, line_number: int) -> None:
    for name, typ in _TOP_FIELDS.items():
        if name not in d:
            raise SchemaViolation(f"missing field `{name}`", field_path=name,
                                  line_number=line_number)
        if not isinstance(d[name], typ):
            raise SchemaViolation(f"field `{name}` has wrong type",
                                  field_path=name, line_number=line_number)
    if d["schema_version"] != SCHEMA_VERSION:
        raise SchemaViolation(
            f"unsupported schema_version {d['schema_version']}",
            field_path="schema_version", line_number=line_number)
    if not d["agents"]:
        raise SchemaViolation("agents must be nonempty", field_path="agents",
                              line_number=line_number)
    for i, a in enumerate(d["agents"]):
        for name, typ in _AGENT_FIELDS.items():
            if name not in a:
                raise SchemaViolation(f"missing field `agents[{i}].{name}`",
                                      field_path=f"agents[{i}].{name}",
                                      line_number=line_number)
            if not isinstance(a[name], typ):
                raise SchemaViolation(f"field `agents[{i}].{name}` has wrong type",
                                      field_path=f"agents[{i}].{name}",
                                      line_number=line_number)
        for enum_field, enum_cls in (("task", Task), ("segment", Segment),
                                     ("light", Light)):
            try:
                enum_cls(a[enum_field])
            except ValueError:
                raise SchemaViolation(
                    f"invalid value for `agents[{i}].{enum_field}`",
                    field_path=f"agents[{i}].{enum_field}",
                    line_number=line_number) from None
    for k, v in d["observed"].items():
        if not isinstance(v, dict) or "maneuver" not in v:
            raise SchemaViolation(f"malformed observed entry for agent {k}",
                                  field_path=f"observed.{k}",
                                  line_number=line_number)


def parse_scenarios(path, strict: bool = True,
                    error_sink: list | None = None) -> list[ScenarioRecord]:
    """Parse a line-delimited JSON scenario file.

    In strict mode the first malformed line raises (ParseError for invalid
    JSON, SchemaViolation with a field path otherwise). With ``strict=False``
    malformed lines are skipped and appended to ``error_sink`` as
    (line_number, message) pairs.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                try:
                    d = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"line {lineno}: invalid JSON: {exc}") from exc
                _validate(d, lineno)
                records.append(ScenarioRecord.from_dict(d))
            except (ParseError, SchemaViolation) as exc:
                if strict:
                    raise
                if error_sink is not None:
                    error_sink.append((lineno, str(exc)))
    return records


def write_scenarios(records: list[ScenarioRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), separators=(",", ":")))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Conflict filter
# ---------------------------------------------------------------------------

def _s1_path(state: AgentState, rules: ManeuverRuleTable,
             limits: KinematicLimits) -> np.ndarray:
    maneuver = rules.actions_for(state)[0]
    ep = sample_endpoints(state, maneuver, SamplingScheme.S1, limits=limits)[0]
    traj = generate_trajectory(state, ep, limits=limits,
                               maneuver_id=maneuver.name)
    return traj.xy


def _same_lane(a: LaneRef, b: LaneRef) -> bool:
    return (a.centerline.shape == b.centerline.shape
            and np.allclose(a.centerline, b.centerline))


def conflict_filter(agents: list[AgentState], ego: AgentState,
                    rules: ManeuverRuleTable | None = None,
                    limits: KinematicLimits = KinematicLimits(),
                    conflict_radius: float = 2.0) -> list[AgentState]:
    """Agents in active conflict with the ego, plus their in-lane leaders.

    A conflict is a normative (S1) path of another agent passing within
    ``conflict_radius`` of the ego's own S1 path inside the planning horizon
    (path geometry, not time-synchronized). For every conflicting agent its
    immediate leader in the same lane is also included. Idempotent, and
    monotone in the horizon: extending paths can only add intersections.
    """
    rules = rules or ManeuverRuleTable()
    ego_path = _s1_path(ego, rules, limits)
    others = [a for a in agents if a.agent_id != ego.agent_id]
    included: dict[int, AgentState] = {}
    for a in others:
        try:
            path = _s1_path(a, rules, limits)
        except Exception:
            continue
        d = np.hypot(ego_path[:, None, 0] - path[None, :, 0],
                     ego_path[:, None, 1] - path[None, :, 1])
        if float(d.min()) <= conflict_radius:
            included[a.agent_id] = a
    # immediate leaders of included agents
    for a in list(included.values()):
        s_a, _ = a.lane.project(a.position)
        leader, best_gap = None, np.inf
        for b in others:
            if b.agent_id == a.agent_id or b.agent_id in included:
                continue
            if not _same_lane(a.lane, b.lane):
                continue
            s_b, _ = b.lane.project(b.position)
            gap = s_b - s_a
            if 0.0 < gap < best_gap:
                leader, best_gap = b, gap
        if leader is not None:
            included[leader.agent_id] = leader
    return [a for a in others if a.agent_id in included]


# ---------------------------------------------------------------------------
# Synthetic generation (calibrated abstract template)
# ---------------------------------------------------------------------------

@dataclass
class SyntheticSpec:
    """Ground-truth configuration of a synthetic recovery dataset.

    ``beta_true`` applies to ``feature_columns`` (names from FEATURE_NAMES);
    lambda_true = beta_true . X must stay positive over the feature support.
    """

    n_games: int
    model_key: str
    beta_true: tuple[float, ...] = (20.0, 1.5)
    alpha_true: float = 0.6
    seed: int = 0
    template: str = "calibrated-intersection-v1"
    feature_columns: tuple[str, ...] = ("intercept", "speed")
    speed_range: tuple[float, float] = (0.0, 10.0)
    dist_range: tuple[float, float] = (5.0, 50.0)
    n_actions: int = 17
    n_patterns: int = 64
    u_hi: float = 0.8
    fixed_assignment: bool = False   # disable per-game atom permutation (tests)

    def __post_init__(self):
        if self.model_key not in MODEL_REGISTRY:
            raise KeyError(f"unknown model key {self.model_key!r}")
        if len(self.beta_true) != len(self.feature_columns):
            raise ValueError("beta_true and feature_columns lengths differ")
        if not 0.0 <= self.alpha_true <= 1.0:
            raise ValueError("alpha_true must lie in [0, 1]")
        if self.n_actions < 3 or self.n_games < 1:
            raise ValueError("need n_actions >= 3 and n_games >= 1")


_G_MIN, _G_MAX = 1e-4, 0.4


def _calibrated_patterns(rng: np.random.Generator, n_patterns: int,
                         m: int) -> tuple[np.ndarray, np.ndarray]:
    """Regret-atom spectra (in z = lambda * regret units).

    The z spectrum solves sum_alt (z_a - 1) exp(-z_a) = 1 so the quantal
    response over utilities (u_hi - z/lambda) yields regrets with mean exactly
    1/lambda. The x spectrum (used for the QBR component and for non-solution
    columns) solves sum_alt z_a exp(-x_a) = sum_all exp(-x_a), which keeps the
    QBR-drawn regrets at the same mean while changing the response shape, so
    the QL1 mixing proportion stays identifiable.
    """
    m_alt = m - 1
    z_full = np.empty((n_patterns, m))
    x_full = np.empty((n_patterns, m))
    for p in range(n_patterns):
        rho = rng.uniform(0.85, 1.15, m_alt)

        def f(s):
            zs = s * rho
            return float(np.sum((zs - 1.0) * np.exp(-zs))) - 1.0

        lo, hi = 0.2, 1.9
        if f(lo) >= 0.0 or f(hi) <= 0.0:
            raise TemplateUnsatisfiable("atom calibration bracket failed")
        s = brentq(f, lo, hi, xtol=1e-12)
        z_alt = s * rho
        xi = rng.uniform(0.3, 3.0, m_alt)
        w = float(np.sum((z_alt - 1.0) * np.exp(-xi)))
        if w <= 0.0:
            raise TemplateUnsatisfiable("QBR spectrum calibration failed")
        t = -np.log(w)
        x = np.concatenate([[t], xi])
        z_full[p] = np.concatenate([[0.0], z_alt])
        x_full[p] = x - x.min()
    return z_full, x_full


def _gumbel_argmax(rng: np.random.Generator, scores: np.ndarray) -> np.ndarray:
    """Vectorized draw from logit(scores) along the last axis."""
    u = rng.random(scores.shape)
    return np.argmax(scores - np.log(-np.log(u)), axis=-1)


def _synth_arrays(spec: SyntheticSpec) -> dict:
    """Vectorized core of generate_synthetic; all per-game arrays."""
    model = MODEL_REGISTRY[spec.model_key]
    rng = np.random.default_rng(spec.seed)
    G, m = spec.n_games, spec.n_actions
    z_full, x_full = _calibrated_patterns(rng, spec.n_patterns, m)

    # features and true precision
    speed = rng.uniform(*spec.speed_range, G)
    dist = rng.uniform(*spec.dist_range, G)
    seg_idx = rng.integers(0, 3, G)
    light_idx = rng.integers(0, 3, G)
    features = np.zeros((G, len(FEATURE_NAMES)))
    features[:, 0] = 1.0
    features[:, 1] = speed
    features[:, 2] = dist
    features[np.arange(G), 3 + seg_idx] = 1.0
    features[np.arange(G), 6 + light_idx] = 1.0
    col_idx = [FEATURE_NAMES.index(c) for c in spec.feature_columns]
    lam = features[:, col_idx] @ np.asarray(spec.beta_true, dtype=float)
    if np.any(lam <= 0.0):
        raise TemplateUnsatisfiable(
            "beta_true . X is nonpositive on the feature support")
    g = np.clip(1.0 / lam, _G_MIN, _G_MAX)
    c = lam * g   # effective precision after regret-scale clipping

    pat = rng.integers(0, spec.n_patterns, G)
    z = z_full[pat]
    x = x_full[pat]
    if not spec.fixed_assignment:
        order = rng.random((G, m)).argsort(axis=1)
        z = np.take_along_axis(z, order, axis=1)
        x = np.take_along_axis(x, order, axis=1)
    a_star = z.argmin(axis=1)
    rows = np.arange(G)

    # ego payoff matrix (G, m, 2): the calibrated spectrum sits on the column
    # the generating response rule evaluates. ``build_ego(s)`` produces the
    # matrix with the whole regret spectrum inflated by the per-game factor s
    # (s = 1 for the generating variant).
    u_hi = spec.u_hi
    fam = (ResponseKind.PNE if model.metamodel is Metamodel.PNE_QE
           else model.g1_response)
    regen = 0
    delta = None
    if fam is ResponseKind.PNE:
        for _ in range(100):
            delta = rng.uniform(-1.5, 1.5, (G, m))
            # uniqueness of the intended equilibrium requires a unique argmax
            # in each column (ties have measure zero but are checked anyway)
            col2 = -z + delta
            srt = np.sort(col2, axis=1)
            bad = srt[:, -1] - srt[:, -2] < 1e-12
            if not bad.any():
                break
            regen += int(bad.sum())
        else:
            raise TemplateUnsatisfiable("could not break column ties")

    def build_ego(s: np.ndarray) -> np.ndarray:
        sg = (s * g)[:, None]
        e = np.empty((G, m, 2))
        if fam is ResponseKind.BR:
            e[:, :, 0] = u_hi - z * sg
            gap = (s * g) * ((z - x).max(axis=1) + 0.3)
            e[:, :, 1] = u_hi - gap[:, None] - x * sg
        elif fam is ResponseKind.MM:
            e[:, :, 1] = u_hi - z * sg
            lift = (s * g) * ((x - z).max(axis=1) + 0.3)
            e[:, :, 0] = u_hi + lift[:, None] - x * sg
        else:  # PNE family: second column is the first plus mixed-sign noise
            e[:, :, 0] = u_hi - z * sg
            e[:, :, 1] = e[:, :, 0] + delta * sg
        return e

    ego = build_ego(np.ones(G))

    # opponent target matrix (G, m, 2); axis layout matches the ego tensor
    # (axis 0 within a game = ego actions, axis 1 = opponent actions).
    opp = np.empty((G, m, 2))
    if fam is ResponseKind.BR:
        nu = rng.uniform(0.3, 0.7, (G, m))
        opp[:, :, 0] = nu
        opp[:, :, 1] = nu + 0.2      # opponent's level-0 solution column: 1
        opp_sol_col = 1
    elif fam is ResponseKind.MM:
        opp[:, :, 0] = rng.uniform(0.5, 0.7, (G, m))
        opp[:, :, 1] = rng.uniform(0.3, 0.45, (G, m))
        opp_sol_col = 0
    else:
        nu = rng.uniform(0.3, 0.7, (G, m))
        opp[:, :, 1] = nu
        opp[:, :, 0] = nu - 0.2
        b = ego[:, :, 1].argmax(axis=1)
        opp[rows, a_star, 0] = nu[rows, a_star] + 0.2
        opp[rows, b, 0] = nu[rows, b] + 0.2   # kills the column-2 equilibrium
        opp_sol_col = 0

    # observed level-1 actions
    if model.metamodel is Metamodel.QL1:
        level1 = rng.random(G) >= spec.alpha_true
        scores = np.where(level1[:, None], -c[:, None] * x, -c[:, None] * z)
        obs_ego = _gumbel_argmax(rng, scores)
    else:
        obs_ego = _gumbel_argmax(rng, -c[:, None] * z)
    if fam is ResponseKind.MM:
        opp_scores = lam[:, None] * opp.min(axis=1)
    else:
        opp_scores = lam[:, None] * opp.max(axis=1)
    obs_opp = _gumbel_argmax(rng, opp_scores)

    # Propagated level-1 payoff variants per agent. The generating
    # (scheme, level-2 response) combination reproduces the target exactly;
    # every other variant inflates the ego regret spectrum by a per-game
    # factor in [1.15, 1.4] (play is most rational under the scheme that
    # generated it) and is offset so optimistic propagation dominates the
    # S1 value, which dominates pessimistic propagation, entrywise.
    # Constant offsets and positive scaling leave argmax structure and hence
    # solution sets and equilibria identical across variants.
    gen_idx = variant_index(model)
    scales = rng.uniform(1.15, 1.4, (G, 5))
    scales[:, gen_idx] = 1.0
    E = [build_ego(scales[:, v]) for v in range(5)]
    O = [opp.copy() for _ in range(5)]

    def jitter() -> np.ndarray:
        return rng.uniform(0.05, 0.2, G) * g

    def push_up(mats, v, floor_v):
        shift = np.maximum(0.0, (mats[floor_v] - mats[v]).max(axis=(1, 2)))
        mats[v] = mats[v] + (shift + jitter())[:, None, None]

    def push_down(mats, v, ceil_v):
        shift = np.maximum(0.0, (mats[v] - mats[ceil_v]).max(axis=(1, 2)))
        mats[v] = mats[v] - (shift + jitter())[:, None, None]

    for mats in (E, O):
        if gen_idx in (1, 3):        # generating propagation is optimistic
            push_down(mats, 0, gen_idx)
        elif gen_idx in (2, 4):      # generating propagation is pessimistic
            push_up(mats, 0, gen_idx)
        for v in (1, 3):
            if v != gen_idx:
                push_up(mats, v, 0)
        for v in (2, 4):
            if v != gen_idx:
                push_down(mats, v, 0)

    variants = np.empty((G, 2, m, 2, 5))
    for v in range(5):
        variants[:, 0, :, :, v] = E[v]
        variants[:, 1, :, :, v] = O[v]

    # level-2 blocks at the observed root (generating scheme only)
    if model.scheme is SamplingScheme.S1:
        blocks = None
        obs_traj = np.zeros(G, dtype=int)
    else:
        blocks = rng.uniform(0.2, 0.8, (G, 5, 5))
        if model.g2_response is ResponseKind.MM:
            traj_scores = lam[:, None] * blocks.min(axis=2)
        else:
            traj_scores = lam[:, None] * blocks.max(axis=2)
        obs_traj = _gumbel_argmax(rng, traj_scores)

    return {
        "model": model, "features": features, "lambda_true": lam,
        "speed": speed, "seg_idx": seg_idx, "light_idx": light_idx,
        "variants": variants, "obs_ego": obs_ego, "obs_opp": obs_opp,
        "blocks": blocks, "obs_traj": obs_traj, "a_star": a_star,
        "opp_sol_col": opp_sol_col, "regenerated": regen, "z": z, "g": g,
    }


_SEGMENTS = tuple(Segment)
_LIGHTS = tuple(Light)
_TASKS = tuple(Task)


def generate_synthetic(spec: SyntheticSpec, return_stats: bool = False):
    """Synthetic dataset of hierarchical games with known ground truth.

    Each record carries (under ``synthetic``) the per-agent level-1 payoff
    matrices propagated under every (scheme, level-2 response) combination,
    the observed actions drawn from the generating model's mixed response,
    and the ego feature vector. With ``return_stats`` a dict with the
    regenerated-game count is returned alongside the records.
    """
    arrs = _synth_arrays(spec)
    lane = _default_lane()
    rng_task = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    tasks = rng_task.integers(0, 3, (spec.n_games, 2))
    opp_speed = rng_task.uniform(*spec.speed_range, spec.n_games)
    records = []
    for gi in range(spec.n_games):
        seg = _SEGMENTS[arrs["seg_idx"][gi]]
        light = _LIGHTS[arrs["light_idx"][gi]]
        agents = [
            AgentState(0, (0.0, 0.0), 0.0, float(arrs["speed"][gi]), 0.0,
                       _TASKS[tasks[gi, 0]], seg, light, lane),
            AgentState(1, (30.0, 30.0), -np.pi / 2, float(opp_speed[gi]), 0.0,
                       _TASKS[tasks[gi, 1]], seg, light, lane),
        ]
        observed = {
            0: {"maneuver": f"m{arrs['obs_ego'][gi]:02d}",
                "trajectory": int(arrs["obs_traj"][gi])},
            1: {"maneuver": f"col{arrs['obs_opp'][gi]}", "trajectory": 0},
        }
        syn = {
            "template": spec.template,
            "generator": spec.model_key,
            "n_actions": spec.n_actions,
            "features": arrs["features"][gi],
            "lambda_true": float(arrs["lambda_true"][gi]),
            "g1_variants": arrs["variants"][gi],
            "observed": [int(arrs["obs_ego"][gi]), int(arrs["obs_opp"][gi])],
            "g2_scheme": arrs["model"].scheme.value,
            "observed_traj": int(arrs["obs_traj"][gi]),
        }
        if arrs["blocks"] is not None:
            syn["g2_block"] = arrs["blocks"][gi]
        records.append(ScenarioRecord(
            game_id=gi, timestamp=float(gi), agents=agents, pedestrians=[],
            observed=observed, synthetic=syn))
    if return_stats:
        return records, {"n_games": len(records),
                         "regenerated": int(arrs["regenerated"])}
    return records


# ---------------------------------------------------------------------------
# Decisions for estimation
# ---------------------------------------------------------------------------

def _synthetic_decision(rec: ScenarioRecord, model: BehaviorModel) -> G1Decision:
    syn = rec.synthetic
    ci = variant_index(model)
    variants = np.asarray(syn["g1_variants"], dtype=float)
    payoffs = [variants[0, :, :, ci], variants[1, :, :, ci]]
    observed = tuple(int(a) for a in syn["observed"])
    block = syn.get("g2_block")
    return G1Decision(
        game_id=rec.game_id, ego=0, payoffs=payoffs, observed=observed,
        features=np.asarray(syn["features"], dtype=float),
        g2_block=None if block is None else np.asarray(block, dtype=float),
        g2_block_scheme=SamplingScheme(syn["g2_scheme"]),
        observed_traj=int(syn["observed_traj"]),
    )


def _physical_decision(rec: ScenarioRecord, model: BehaviorModel,
                       rules: ManeuverRuleTable, params: UtilityParams,
                       limits: KinematicLimits, seed: int) -> list[G1Decision]:
    game = build_game(rec.agents, rec.pedestrians, model.scheme, params,
                      rules, seed=seed, limits=limits)
    concept_l2 = ResponseConcept(model.g2_response or ResponseKind.BR)
    concept_l1 = ResponseConcept(
        ResponseKind.PNE if model.metamodel is Metamodel.PNE_QE
        else model.g1_response)
    result = backward_induction(game, concept_l2, concept_l1)
    g1 = result.level1[0][0]
    n = game.n_agents
    observed = []
    for i, a in enumerate(rec.agents):
        obs = rec.observed.get(a.agent_id)
        if obs is None or obs["maneuver"] not in game.maneuvers[i]:
            raise ObservedActionMissing(
                f"agent {a.agent_id}: observed maneuver not in game tree")
        observed.append(game.maneuvers[i].index(obs["maneuver"]))
    decisions = []
    for i, a in enumerate(rec.agents):
        others = [o for o in rec.agents if o.agent_id != a.agent_id]
        dist = min((float(np.hypot(a.position[0] - o.position[0],
                                   a.position[1] - o.position[1]))
                    for o in others), default=100.0)
        feats = np.zeros(len(FEATURE_NAMES))
        feats[0] = 1.0
        feats[1] = a.speed
        feats[2] = min(dist, 100.0)
        feats[3 + _SEGMENTS.index(a.segment)] = 1.0
        feats[6 + _LIGHTS.index(a.light)] = 1.0
        root = tuple(game.maneuvers[j][observed[j]] for j in range(n))
        block = game.level2_payoffs[root][i]
        block = np.moveaxis(block, i, 0)
        obs_traj = rec.observed[a.agent_id].get("trajectory", 0)
        decisions.append(G1Decision(
            game_id=rec.game_id, ego=i, payoffs=g1.payoffs,
            observed=tuple(observed), features=feats,
            g2_block=block, g2_block_scheme=model.scheme,
            observed_traj=int(obs_traj)))
    return decisions


def decisions_for_model(records: list[ScenarioRecord], model: BehaviorModel,
                        rules: ManeuverRuleTable | None = None,
                        params: UtilityParams | None = None,
                        limits: KinematicLimits = KinematicLimits(),
                        seed: int = 0) -> list[G1Decision]:
    """Level-1 decision views of a dataset under one behavior model.

    Synthetic records use their stored propagated payoff variants; physical
    records are rebuilt as hierarchical games and solved by backward induction
    under the model's level-2 concept.
    """
    rules = rules or ManeuverRuleTable()
    params = params or UtilityParams()
    out: list[G1Decision] = []
    for rec in records:
        if rec.synthetic is not None:
            out.append(_synthetic_decision(rec, model))
        else:
            out.extend(_physical_decision(rec, model, rules, params, limits,
                                          seed=seed))
    return out
