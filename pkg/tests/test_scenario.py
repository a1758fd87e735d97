"""Scenario I/O, maneuver rules, conflict filter, synthetic generation."""

import json

import numpy as np
import pytest
from scipy.stats import chisquare

from hiergame.concepts import MODEL_REGISTRY
from hiergame.errors import ParseError, SchemaViolation, TemplateUnsatisfiable
from hiergame.estimation import compute_regrets
from hiergame.lattice import (AgentState, KinematicLimits, LaneRef, Light,
                              Segment, Task)
from hiergame.scenario import (SCHEMA_VERSION, ManeuverRuleTable,
                               ScenarioRecord, SyntheticSpec, conflict_filter,
                               decisions_for_model, generate_synthetic,
                               parse_scenarios, variant_index, write_scenarios)
from hiergame.utility import PedestrianState


def lane(points=((0.0, 0.0), (400.0, 0.0))):
    return LaneRef(np.array(points, dtype=float), 1.75, 15.0)


def agent(aid=0, pos=(0.0, 0.0), heading=0.0, speed=8.0, task=Task.THROUGH,
          seg=Segment.APPROACH, light=Light.GREEN, ln=None):
    return AgentState(aid, pos, heading, speed, 0.0, task, seg, light,
                      ln or lane())


class TestManeuverRuleTable:
    def test_turning_approach(self):
        rules = ManeuverRuleTable()
        names = [m.name for m in rules.actions_for(agent(task=Task.LEFT_TURN))]
        assert names == ["PROCEED_TURN", "WAIT"]

    def test_through_green(self):
        rules = ManeuverRuleTable()
        mans = rules.actions_for(agent(speed=10.0))
        assert [m.name for m in mans] == ["TRACK_SPEED", "DECELERATE"]
        track = mans[0]
        assert (track.v_lo, track.v_hi, track.target_speed) == (8.0, 12.0, 10.0)

    def test_through_red_decelerates_only(self):
        rules = ManeuverRuleTable()
        mans = rules.actions_for(agent(light=Light.RED))
        assert [m.name for m in mans] == ["DECELERATE"]
        assert mans[0].target_speed == 0.0

    def test_turning_exit_tracks(self):
        rules = ManeuverRuleTable()
        mans = rules.actions_for(agent(task=Task.RIGHT_TURN, seg=Segment.EXIT))
        assert [m.name for m in mans] == ["TRACK_SPEED"]

    def test_speed_limit_clipping(self):
        rules = ManeuverRuleTable()
        mans = rules.actions_for(agent(speed=14.5))
        assert mans[0].v_hi == 15.0  # v+2 clipped to the lane limit

    def test_overrides(self):
        rules = ManeuverRuleTable({
            "THROUGH:APPROACH:GREEN": [
                {"name": "CRUISE", "v_lo": "v-2", "v_hi": "v+2", "target": "v"}]})
        mans = rules.actions_for(agent(speed=6.0))
        assert [m.name for m in mans] == ["CRUISE"]
        assert mans[0].target_speed == 6.0

    def test_producible(self):
        rules = ManeuverRuleTable()
        assert rules.producible(agent(), "TRACK_SPEED")
        assert not rules.producible(agent(), "PROCEED_TURN")


class TestScenarioIO:
    def _records(self, n=100):
        spec = SyntheticSpec(n_games=n, model_key="QL0:BR:BR:S1", seed=1)
        return generate_synthetic(spec)

    def test_round_trip(self, tmp_path):
        recs = self._records()
        path = tmp_path / "scen.jsonl"
        write_scenarios(recs, path)
        back = parse_scenarios(path)
        assert len(back) == len(recs)
        for a, b in zip(recs, back):
            assert json.dumps(a.to_dict(), sort_keys=True) == \
                json.dumps(b.to_dict(), sort_keys=True)

    def test_write_deterministic(self, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_scenarios(self._records(20), p1)
        write_scenarios(self._records(20), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_invalid_json_strict(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(ParseError, match="line 1"):
            parse_scenarios(path)

    def test_missing_agent_field_path(self, tmp_path):
        recs = self._records(2)
        d = recs[0].to_dict()
        del d["agents"][0]["light"]
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(d) + "\n")
        with pytest.raises(SchemaViolation) as ei:
            parse_scenarios(path)
        assert ei.value.field_path == "agents[0].light"
        assert ei.value.line_number == 1

    def test_invalid_enum_value(self, tmp_path):
        d = self._records(1)[0].to_dict()
        d["agents"][0]["task"] = "FLY"
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(d) + "\n")
        with pytest.raises(SchemaViolation) as ei:
            parse_scenarios(path)
        assert ei.value.field_path == "agents[0].task"

    def test_wrong_schema_version(self, tmp_path):
        d = self._records(1)[0].to_dict()
        d["schema_version"] = 99
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(d) + "\n")
        with pytest.raises(SchemaViolation) as ei:
            parse_scenarios(path)
        assert ei.value.field_path == "schema_version"

    def test_lenient_mode_collects_errors(self, tmp_path):
        recs = self._records(3)
        lines = [json.dumps(r.to_dict()) for r in recs]
        lines.insert(1, "{broken")
        bad = recs[1].to_dict()
        del bad["game_id"]
        lines.append(json.dumps(bad))
        path = tmp_path / "mixed.jsonl"
        path.write_text("\n".join(lines) + "\n")
        sink = []
        out = parse_scenarios(path, strict=False, error_sink=sink)
        assert len(out) == 3
        assert [ln for ln, _ in sink] == [2, 5]

    def test_blank_lines_skipped(self, tmp_path):
        recs = self._records(2)
        path = tmp_path / "gaps.jsonl"
        path.write_text("\n" + json.dumps(recs[0].to_dict()) + "\n\n"
                        + json.dumps(recs[1].to_dict()) + "\n")
        assert len(parse_scenarios(path)) == 2


class TestConflictFilter:
    def test_crossing_agent_included(self):
        ego = agent(0, pos=(0.0, 0.0))
        crosser = agent(1, pos=(30.0, -20.0), heading=np.pi / 2,
                        ln=lane(((30.0, -200.0), (30.0, 200.0))))
        far = agent(2, pos=(0.0, 300.0), ln=lane(((0.0, 300.0), (400.0, 300.0))))
        out = conflict_filter([ego, crosser, far], ego)
        assert [a.agent_id for a in out] == [1]

    def test_leader_of_conflicting_agent_included(self):
        ego = agent(0, pos=(0.0, 0.0))
        cross_lane = lane(((30.0, -200.0), (30.0, 200.0)))
        crosser = agent(1, pos=(30.0, -20.0), heading=np.pi / 2, ln=cross_lane)
        leader = agent(2, pos=(30.0, 150.0), heading=np.pi / 2, ln=cross_lane)
        out = conflict_filter([ego, crosser, leader], ego)
        assert sorted(a.agent_id for a in out) == [1, 2]

    def test_idempotent(self):
        ego = agent(0)
        crosser = agent(1, pos=(30.0, -20.0), heading=np.pi / 2,
                        ln=lane(((30.0, -200.0), (30.0, 200.0))))
        once = conflict_filter([ego, crosser], ego)
        twice = conflict_filter([ego] + once, ego)
        assert [a.agent_id for a in once] == [a.agent_id for a in twice]

    def test_monotone_in_horizon(self):
        # an agent conflicting only late in the plan appears once the
        # horizon is long enough, and extending it never removes anyone
        ego = agent(0, speed=10.0)
        late = agent(1, pos=(45.0, -2.5), heading=0.0, speed=0.5,
                     ln=lane(((0.0, -2.5), (400.0, -2.5))))
        short = conflict_filter([ego, late], ego,
                                limits=KinematicLimits(horizon=2.0),
                                conflict_radius=3.0)
        long_ = conflict_filter([ego, late], ego,
                                limits=KinematicLimits(horizon=5.0),
                                conflict_radius=3.0)
        assert {a.agent_id for a in short} <= {a.agent_id for a in long_}
        assert {a.agent_id for a in long_} == {1}


class TestSyntheticGeneration:
    def test_deterministic(self):
        spec = SyntheticSpec(n_games=30, model_key="QL1:BR:MM:S1B", seed=9)
        a = [json.dumps(r.to_dict(), sort_keys=True)
             for r in generate_synthetic(spec)]
        b = [json.dumps(r.to_dict(), sort_keys=True)
             for r in generate_synthetic(spec)]
        assert a == b

    def test_unknown_model_key(self):
        with pytest.raises(KeyError):
            SyntheticSpec(n_games=10, model_key="QL9:XX:S1")

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            SyntheticSpec(n_games=10, model_key="QL0:BR:BR:S1", alpha_true=1.5)

    def test_nonpositive_lambda_rejected(self):
        spec = SyntheticSpec(n_games=100, model_key="QL0:BR:BR:S1",
                             beta_true=(1.0, -1.0))
        with pytest.raises(TemplateUnsatisfiable):
            generate_synthetic(spec)

    def test_regret_calibration(self):
        # under the generating model, lambda * regret has mean 1 by design
        spec = SyntheticSpec(n_games=4000, model_key="QL0:BR:BR:S1", seed=3)
        recs = generate_synthetic(spec)
        model = MODEL_REGISTRY[spec.model_key]
        decs = decisions_for_model(recs, model)
        records, disc = compute_regrets(decs, model)
        assert disc == 0
        lam = np.array([r.synthetic["lambda_true"] for r in recs])
        eps = np.array([rr.epsilon for rr in records if rr.level == 1])
        scaled = lam * eps
        assert abs(scaled.mean() - 1.0) < 4.0 / np.sqrt(len(scaled))

    def test_high_lambda_degenerate(self):
        # lambda = 1e6 concentrates play on the zero-regret action
        spec = SyntheticSpec(n_games=3000, model_key="QL0:BR:BR:S1",
                             beta_true=(1e6,), feature_columns=("intercept",),
                             seed=4)
        recs = generate_synthetic(spec)
        model = MODEL_REGISTRY[spec.model_key]
        decs = decisions_for_model(recs, model)
        records, _ = compute_regrets(decs, model)
        zero = sum(1 for r in records if r.level == 1 and r.epsilon == 0.0)
        assert zero / spec.n_games >= 0.999

    def test_low_lambda_uniform(self):
        # lambda -> 0 makes the observed-action marginal uniform (chi-square
        # goodness of fit at the 1% level over 10^4 draws)
        spec = SyntheticSpec(n_games=10000, model_key="QL0:BR:BR:S1",
                             beta_true=(1e-9,), feature_columns=("intercept",),
                             seed=5)
        recs = generate_synthetic(spec)
        obs = np.array([r.synthetic["observed"][0] for r in recs])
        counts = np.bincount(obs, minlength=spec.n_actions)
        assert chisquare(counts).pvalue > 0.01

    def test_marginal_matches_response_distribution(self):
        # with a frozen payoff pattern, the observed-action marginal is within
        # total variation 0.02 of the generating quantal response at 10^4
        # draws per action cell
        m = 12
        spec = SyntheticSpec(n_games=10000 * m, model_key="QL0:BR:BR:S1",
                             beta_true=(5.0,), feature_columns=("intercept",),
                             n_actions=m, n_patterns=1, fixed_assignment=True,
                             seed=5)
        recs = generate_synthetic(spec)
        # BR family: the first ego column dominates, so the response is the
        # logit over it at lambda = 5 (identical across games by construction)
        v = np.asarray(recs[0].synthetic["g1_variants"])
        col0 = v[0, :, 0, 0]
        e = np.exp(5.0 * (col0 - col0.max()))
        p = e / e.sum()
        obs = np.array([r.synthetic["observed"][0] for r in recs])
        freq = np.bincount(obs, minlength=m) / len(obs)
        assert 0.5 * np.abs(freq - p).sum() <= 0.02

    def test_variant_ordering(self):
        # optimistic (BR) propagation dominates the S1 value which dominates
        # pessimistic (MM) propagation, entrywise, for both agents
        spec = SyntheticSpec(n_games=200, model_key="QL0:BR:BR:S1", seed=6)
        for rec in generate_synthetic(spec):
            v = np.asarray(rec.synthetic["g1_variants"])  # (2, m, 2, 5)
            for ag in range(2):
                for br_v, mm_v in ((1, 2), (3, 4)):
                    assert np.all(v[ag, :, :, br_v] >= v[ag, :, :, 0])
                    assert np.all(v[ag, :, :, 0] >= v[ag, :, :, mm_v])

    def test_variant_slicing(self):
        spec = SyntheticSpec(n_games=10, model_key="QL0:BR:MM:S1G", seed=7)
        recs = generate_synthetic(spec)
        model = MODEL_REGISTRY[spec.model_key]
        decs = decisions_for_model(recs, model)
        ci = variant_index(model)
        v = np.asarray(recs[0].synthetic["g1_variants"])
        assert np.array_equal(decs[0].payoffs[0], v[0, :, :, ci])
        assert decs[0].g2_block is not None  # non-S1 scheme carries a block

    def test_s1_has_no_block(self):
        spec = SyntheticSpec(n_games=5, model_key="QL0:MM:MM:S1", seed=8)
        recs = generate_synthetic(spec)
        assert all("g2_block" not in r.synthetic for r in recs)

    def test_stats_reported(self):
        spec = SyntheticSpec(n_games=50, model_key="PNE-QE:S1", seed=9)
        recs, stats = generate_synthetic(spec, return_stats=True)
        assert stats["n_games"] == 50
        assert stats["regenerated"] >= 0

    def test_pne_generator_has_equilibria(self):
        spec = SyntheticSpec(n_games=300, model_key="PNE-QE:BR:S1B", seed=10)
        recs = generate_synthetic(spec)
        model = MODEL_REGISTRY[spec.model_key]
        decs = decisions_for_model(recs, model)
        _, disc = compute_regrets(decs, model)
        assert disc == 0


class TestPhysicalDecisions:
    def test_two_agent_scene(self):
        ego = agent(0, pos=(0.0, 0.0), speed=8.0)
        other = agent(1, pos=(30.0, -40.0), heading=np.pi / 2, speed=8.0,
                      task=Task.LEFT_TURN,
                      ln=lane(((30.0, -200.0), (30.0, 200.0))))
        rec = ScenarioRecord(
            game_id=0, timestamp=0.0, agents=[ego, other], pedestrians=[],
            observed={0: {"maneuver": "TRACK_SPEED", "trajectory": 0},
                      1: {"maneuver": "WAIT", "trajectory": 0}})
        model = MODEL_REGISTRY["QL0:BR:BR:S1B"]
        decs = decisions_for_model([rec], model)
        assert len(decs) == 2  # one decision per agent
        assert decs[0].ego == 0 and decs[1].ego == 1
        for d in decs:
            assert d.features[0] == 1.0
            assert d.g2_block is not None
            recs, disc = compute_regrets([d], model)
            assert disc == 0
            assert all(r.epsilon >= 0.0 for r in recs)
