"""Response concepts: pure/noisy BR and MM, QBR, QL1, PNE, PNE-QE."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hiergame.concepts import (MODEL_REGISTRY, Metamodel, MixedResponse,
                               ResponseKind, best_response_profile,
                               enumerate_pne, maxmin_profile, noisy_br,
                               noisy_mm, pne_qe_response, qbr, ql1_response)
from hiergame.errors import EmptyEquilibriumSet

# Classic 2x2 games, payoffs as (u_row, u_col) with row axis 0.
PD = [np.array([[3.0, 0.0], [5.0, 1.0]]), np.array([[3.0, 5.0], [0.0, 1.0]])]
COORD = [np.array([[2.0, 0.0], [0.0, 1.0]]), np.array([[2.0, 0.0], [0.0, 1.0]])]
PENNIES = [np.array([[1.0, -1.0], [-1.0, 1.0]]),
           np.array([[-1.0, 1.0], [1.0, -1.0]])]


class TestRegistry:
    def test_cardinality(self):
        assert len(MODEL_REGISTRY) == 25

    def test_composition(self):
        metas = {m.metamodel for m in MODEL_REGISTRY.values()}
        assert metas == set(Metamodel)
        ql = [m for m in MODEL_REGISTRY.values() if m.metamodel is not Metamodel.PNE_QE]
        pq = [m for m in MODEL_REGISTRY.values() if m.metamodel is Metamodel.PNE_QE]
        assert len(ql) == 20 and len(pq) == 5

    def test_key_grammar(self):
        assert "QL0:MM:MM:S1" in MODEL_REGISTRY
        assert "QL1:BR:BR:S1" in MODEL_REGISTRY
        assert "PNE-QE:S1" in MODEL_REGISTRY
        assert "PNE-QE:BR:S1B" in MODEL_REGISTRY
        m = MODEL_REGISTRY["QL0:BR:MM:S1G"]
        assert (m.g1_response, m.g2_response) == (ResponseKind.BR, ResponseKind.MM)

    def test_s1_keys_have_no_g2(self):
        for key, m in MODEL_REGISTRY.items():
            if key.endswith(":S1"):
                assert m.g2_response is None


class TestPureResponses:
    def test_br_pd(self):
        # defect strictly dominates for both players
        assert best_response_profile(PD, 0) == {(1, 0)}
        assert best_response_profile(PD, 1) == {(0, 1)}

    def test_mm_pd(self):
        # worst cases: cooperate -> 0, defect -> 1, so defect; col symmetric
        assert maxmin_profile(PD, 0) == {(1, 1)}
        assert maxmin_profile(PD, 1) == {(1, 1)}

    def test_br_coordination_unique(self):
        assert best_response_profile(COORD, 0) == {(0, 0)}

    def test_mm_pennies_ties(self):
        # every action guarantees -1, all (action, minimizer) pairs admitted
        assert maxmin_profile(PENNIES, 0) == {(0, 1), (1, 0)}

    def test_br_ties(self):
        g = [np.array([[1.0, 1.0], [0.0, 1.0]])]
        assert best_response_profile(g, 0) == {(0, 0), (0, 1), (1, 1)}

    def test_three_agents(self):
        u = np.zeros((2, 2, 2))
        u[1, 0, 1] = 4.0
        assert best_response_profile([u, u, u], 0) == {(1, 0, 1)}


class TestNoisyResponses:
    def test_noisy_br_scalar_oracle(self):
        # logit over (1.0, 0.5) at lam = 2: sigma(1) = 0.7311
        p = noisy_br([np.array([1.0, 0.5])], 0, 2.0).probs
        assert p[0] == pytest.approx(1 / (1 + np.exp(-1.0)), abs=1e-12)

    def test_noisy_mm_scalar_oracle(self):
        p = noisy_mm([np.array([1.0, 0.0])], 0, 1.0).probs
        assert p[0] == pytest.approx(1 / (1 + np.exp(-1.0)), abs=1e-12)

    def test_noisy_br_matrix(self):
        # optimistic utilities of PD row player: (3, 5)
        p = noisy_br(PD, 0, 1.0).probs
        expect = np.exp(np.array([3.0, 5.0]) - 5.0)
        assert np.allclose(p, expect / expect.sum(), atol=1e-12)

    def test_noisy_mm_matrix(self):
        # worst-case utilities of PD row player: (0, 1)
        p = noisy_mm(PD, 0, 1.0).probs
        expect = np.exp(np.array([0.0, 1.0]) - 1.0)
        assert np.allclose(p, expect / expect.sum(), atol=1e-12)

    def test_qbr_scalar_oracle(self):
        # utilities vs the fixed column (0.6, 0.4) at lam = 5
        g = [np.array([[0.6, 9.0], [0.4, 9.0]])]
        p = qbr(g, 0, (0,), 5.0).probs
        assert p[0] == pytest.approx(1 / (1 + np.exp(-1.0)), abs=1e-12)

    def test_qbr_profile_set_average(self):
        u = np.array([[1.0, 3.0], [2.0, 0.0]])
        p = qbr([u, u], 0, {(0,), (1,)}, 1.0).probs
        vals = u.mean(axis=1)
        expect = np.exp(vals - vals.max())
        assert np.allclose(p, expect / expect.sum(), atol=1e-12)

    def test_shift_invariance_exact(self):
        # utilities on a dyadic grid and a power-of-two offset keep the
        # additions exact, so the shifted logits must match bit for bit
        rng = np.random.default_rng(1)
        u = rng.integers(0, 2**20, size=(3, 3)) * 2.0**-20
        for c in (128.0, -64.0):
            for fn in (noisy_br, noisy_mm):
                a = fn([u, u], 0, 7.0).probs
                b = fn([u + c, u + c], 0, 7.0).probs
                assert np.array_equal(a, b)

    def test_lambda_monotone_concentration(self):
        u = np.array([0.2, 0.9, 0.5])
        prev = -1.0
        for lam in (0.1, 1.0, 10.0, 100.0):
            p = noisy_br([u], 0, lam).probs
            assert p[1] > prev
            prev = p[1]


class TestQL1:
    def test_interpolation_endpoints(self):
        for alpha, ref in ((1.0, noisy_br(PD, 0, 2.0).probs),
                           (0.0, qbr(PD, 0, [(1,)], 3.0).probs)):
            p = ql1_response(PD, 0, ResponseKind.BR, alpha, 2.0, 3.0).probs
            assert np.allclose(p, ref, atol=1e-12)

    def test_convexity(self):
        p0 = ql1_response(PD, 0, ResponseKind.MM, 1.0, 2.0, 3.0).probs
        p1 = ql1_response(PD, 0, ResponseKind.MM, 0.0, 2.0, 3.0).probs
        pm = ql1_response(PD, 0, ResponseKind.MM, 0.4, 2.0, 3.0).probs
        assert np.allclose(pm, 0.4 * p0 + 0.6 * p1, atol=1e-12)

    def test_alpha_bounds(self):
        with pytest.raises(ValueError):
            ql1_response(PD, 0, ResponseKind.BR, 1.5, 1.0, 1.0)

    def test_opponent_solution_averaging(self):
        # opponent ties -> QBR averages utilities over the tied actions
        u0 = np.array([[1.0, 3.0], [2.0, 0.0]])
        u1 = np.array([[1.0, 1.0], [1.0, 1.0]])
        p = ql1_response([u0, u1], 0, ResponseKind.BR, 0.0, 1.0, 1.0).probs
        ref = qbr([u0, u1], 0, {(0,), (1,)}, 1.0).probs
        assert np.allclose(p, ref, atol=1e-12)


def _brute_force_pne(payoffs):
    shape = payoffs[0].shape
    out = set()
    for prof in itertools.product(*(range(s) for s in shape)):
        ok = True
        for i, u in enumerate(payoffs):
            for a in range(shape[i]):
                dev = list(prof)
                dev[i] = a
                if u[tuple(dev)] > u[prof] + 0.0:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.add(prof)
    return out


class TestPNE:
    def test_pd(self):
        assert enumerate_pne(PD) == {(1, 1)}

    def test_coordination(self):
        assert enumerate_pne(COORD) == {(0, 0), (1, 1)}

    def test_pennies_empty(self):
        assert enumerate_pne(PENNIES) == set()

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            n = int(rng.integers(2, 4))
            shape = tuple(int(rng.integers(2, 5)) for _ in range(n))
            payoffs = [rng.integers(0, 4, size=shape).astype(float)
                       for _ in range(n)]
            assert enumerate_pne(payoffs) == _brute_force_pne(payoffs)

    def test_pne_qe_scalar_oracle(self):
        # regrets (0, 0.5) at lam = 2 -> logit of (0, -1)
        g = [np.array([[1.0, 0.5], [0.5, 0.0]]),
             np.array([[1.0, 0.0], [0.0, 0.0]])]
        assert enumerate_pne(g) == {(0, 0)}
        p = pne_qe_response(g, 0, {(0, 0)}, 2.0).probs
        assert p[0] == pytest.approx(1 / (1 + np.exp(-1.0)), abs=1e-12)

    def test_pne_qe_min_over_equilibria(self):
        # regret against the nearest equilibrium, not an arbitrary one
        p = pne_qe_response(COORD, 0, enumerate_pne(COORD), 3.0).probs
        # each action has zero regret against its own equilibrium
        assert np.allclose(p, [0.5, 0.5], atol=1e-12)

    def test_pne_qe_empty_raises(self):
        with pytest.raises(EmptyEquilibriumSet):
            pne_qe_response(PENNIES, 0, set(), 1.0)


class TestQuantalLimits:
    def test_uniform_limit(self):
        rng = np.random.default_rng(3)
        u = rng.uniform(size=(4, 4))
        for fn in (noisy_br, noisy_mm):
            p = fn([u, u], 0, 1e-9).probs
            assert np.max(np.abs(p - 0.25)) < 1e-6

    def test_degenerate_limit(self):
        u = np.array([0.3, 0.9, 0.1])
        p = noisy_br([u], 0, 1e4).probs
        assert p[1] >= 0.999

    def test_simplex(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            u = rng.normal(size=(3, 3))
            for lam in (1e-9, 1.0, 1e4):
                p = noisy_br([u, u], 0, lam).probs
                assert np.all(p >= 0)
                assert abs(p.sum() - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-5, 5)),
       st.floats(1e-6, 100.0))
def test_noisy_responses_are_simplex_points(u, lam):
    for fn in (noisy_br, noisy_mm):
        p = fn([u, u.T], 0, lam).probs
        assert np.all(p >= 0) and abs(p.sum() - 1.0) < 1e-9


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-5, 5)))
def test_pure_solutions_nonempty_and_valid(u):
    g = [u, -u]
    for solver in (best_response_profile, maxmin_profile):
        sols = solver(g, 0)
        assert sols
        for p in sols:
            assert len(p) == 2 and all(0 <= k < 3 for k in p)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (2, 3, 3), elements=st.floats(-5, 5)))
def test_pne_matches_brute_force(us):
    payoffs = [us[0], us[1]]
    assert enumerate_pne(payoffs) == _brute_force_pne(payoffs)


def test_mixed_response_rejects_non_simplex():
    with pytest.raises(ValueError):
        MixedResponse(np.array([0.5, 0.6]))
