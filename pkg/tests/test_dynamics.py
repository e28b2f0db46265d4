import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from subspace_consensus.adversary import AdversarySpec, ScheduledRound, next_round
from subspace_consensus.dynamics import (
    WeightError,
    WeightRule,
    check_weights,
    decompose_update,
    min_broadcast_weight,
    run,
    step,
    weights_for,
)
from subspace_consensus.geometry import dist_to_hull
from subspace_consensus.graph import complete_graph, identity_graph, make_graph, star_graph

EQ = WeightRule()


def rnd(graph, m_set=None, t=1):
    return ScheduledRound(t, graph, tuple(range(graph.n)) if m_set is None else m_set)


class TestWeights:
    def test_equal_neighbor_pair(self):
        w = weights_for(EQ, rnd(complete_graph(2)))
        assert w.tolist() == [[0.5, 0.5], [0.5, 0.5]]

    def test_isolated_row_is_unit(self):
        g = make_graph(3, [(0, 1)])
        w = weights_for(EQ, rnd(g))
        assert w[0].tolist() == [1.0, 0.0, 0.0]
        assert w[2].tolist() == [0.0, 0.0, 1.0]

    def test_alpha_safe_star(self):
        rule = WeightRule("random_alpha_safe", alpha=0.2, seed=4)
        g = star_graph(4)
        for t in range(1, 101):
            w = weights_for(rule, rnd(g, (0,), t))
            support = g.adj.T
            assert np.all(w[support] >= 0.2)
            assert np.all(w[~support] == 0)
            np.testing.assert_allclose(w.sum(axis=1), 1, atol=1e-12)

    def test_alpha_safe_infeasible(self):
        rule = WeightRule("random_alpha_safe", alpha=0.6)
        with pytest.raises(WeightError, match="infeasible"):
            weights_for(rule, rnd(complete_graph(2)))

    def test_alpha_one_on_isolated(self):
        rule = WeightRule("random_alpha_safe", alpha=1.0)
        assert np.array_equal(weights_for(rule, rnd(identity_graph(3))), np.eye(3))

    def test_table_cycles(self):
        a = np.eye(2)
        b = np.full((2, 2), 0.5)
        rule = WeightRule("table", table=[a.tolist(), b.tolist()])
        g = complete_graph(2)
        assert np.array_equal(weights_for(rule, rnd(g, t=1)), a)
        assert np.array_equal(weights_for(rule, rnd(g, t=2)), b)
        assert np.array_equal(weights_for(rule, rnd(g, t=3)), a)

    def test_table_off_support(self):
        rule = WeightRule("table", table=np.full((2, 2), 0.5))
        with pytest.raises(WeightError, match="does not receive"):
            weights_for(rule, rnd(identity_graph(2)))

    def test_table_bad_row_sum(self):
        rule = WeightRule("table", table=np.full((2, 2), 0.45))
        with pytest.raises(WeightError, match="sums to"):
            weights_for(rule, rnd(complete_graph(2)))

    def test_check_weights_negative(self):
        with pytest.raises(WeightError):
            check_weights(np.array([[1.5, -0.5], [0.5, 0.5]]), complete_graph(2))

    @pytest.mark.parametrize("kw", [dict(kind="bogus"), dict(kind="random_alpha_safe"), dict(kind="table")])
    def test_bad_rules(self, kw):
        with pytest.raises(ValueError):
            WeightRule(**kw)


class TestStep:
    def test_pair_average(self):
        w = weights_for(EQ, rnd(complete_graph(2)))
        assert step(np.array([[0.0], [1.0]]), w).ravel().tolist() == [0.5, 0.5]

    def test_hand_arithmetic(self):
        # 0-based: In_0={0}, In_1={0,1}, In_2={0,2}
        g = make_graph(3, [(0, 1), (0, 2)])
        w = weights_for(EQ, rnd(g))
        out = step(np.array([[0.0], [6.0], [3.0]]), w)
        assert out.ravel().tolist() == [0.0, 3.0, 1.5]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            step(np.zeros((3, 2)), np.eye(2))


class TestMinBroadcastWeight:
    def test_pair(self):
        w = weights_for(EQ, rnd(complete_graph(2)))
        assert min_broadcast_weight(w, (0,)) == 0.5

    def test_everyone(self, rng):
        g = make_graph(4, [(0, 1), (2, 3), (1, 2)])
        w = weights_for(EQ, rnd(g))
        assert min_broadcast_weight(w, range(4)) == pytest.approx(1.0, abs=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            min_broadcast_weight(np.eye(2), ())

    def test_equal_neighbor_lower_bound(self):
        spec = AdversarySpec(5, "random_broadcastable", k=2, seed=11)
        for t in range(1, 301):
            r = next_round(spec, t)
            w = weights_for(EQ, r)
            direct = min(sum(w[i, j] for j in r.m_set) for i in range(5))
            assert min_broadcast_weight(w, r.m_set) == pytest.approx(direct, abs=1e-15)
            assert direct >= 1 / 5 - 1e-15


class TestDecomposition:
    def test_pair(self):
        dec = decompose_update(np.array([0.5, 0.5]), np.array([[0.0], [1.0]]), (0,), alpha=0.5)
        assert dec.xi.tolist() == [0.0]
        assert dec.xi_prime.tolist() == [1.0]
        assert dec.reconstruct().tolist() == [0.5]
        assert dec.certificates_ok((0,))

    def test_all_weight_on_m(self):
        x = np.array([[1.0, 2.0], [3.0, -1.0], [7.0, 7.0]])
        dec = decompose_update(np.array([0.25, 0.75, 0.0]), x, (0, 1), alpha=0.5)
        np.testing.assert_array_equal(dec.xi_prime, dec.xi)
        np.testing.assert_allclose(dec.reconstruct(), [2.5, -0.25], atol=1e-15)

    def test_alpha_equals_mass(self):
        x = np.array([[0.0], [4.0], [10.0]])
        dec = decompose_update(np.array([0.5, 0.25, 0.25]), x, (0,))
        assert dec.alpha == 0.5
        assert dec.xi_prime.tolist() == [7.0]  # plain average of the non-broadcasters
        assert dec.reconstruct().tolist() == [3.5]

    def test_alpha_too_large(self):
        with pytest.raises(ValueError):
            decompose_update(np.array([0.5, 0.5]), np.zeros((2, 1)), (0,), alpha=0.6)

    def test_alpha_nonpositive(self):
        with pytest.raises(ValueError):
            decompose_update(np.array([0.5, 0.5]), np.zeros((2, 1)), (0,), alpha=0.0)

    @given(
        st.integers(2, 6).flatmap(
            lambda n: st.tuples(
                st.just(n),
                st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n),
                st.sets(st.integers(0, n - 1), min_size=1),
                st.floats(0.01, 1.0),
                st.integers(0, 2**31),
            )
        )
    )
    @settings(max_examples=200)
    @example((2, [0.5, 0.15], {0, 1}, 1.0, 0))  # row mass on M rounds to 1 - 1e-16
    def test_reconstruction_property(self, case):
        n, raw, m_set, frac, seed = case
        w_row = np.array(raw) / sum(raw)
        x = np.random.default_rng(seed).uniform(-5, 5, size=(n, 3))
        w_m = w_row[list(m_set)].sum()
        dec = decompose_update(w_row, x, sorted(m_set), alpha=frac * w_m)
        np.testing.assert_allclose(dec.reconstruct(), w_row @ x, atol=1e-12)
        assert dec.certificates_ok(sorted(m_set), tol=1e-12)


class TestRun:
    def test_star_consensus(self):
        spec = AdversarySpec(3, "static", k=1, graphs=(star_graph(3),))
        x0 = np.array([[1.0, 2.0], [5.0, -1.0], [0.0, 0.0]])
        tr = run(spec, EQ, x0, 60)
        np.testing.assert_allclose(tr.states[-1], np.tile(x0[0], (3, 1)), atol=1e-15)
        assert np.array_equal(tr.states[:, 0], np.tile(x0[0], (61, 1)))

    def test_zero_rounds(self):
        spec = AdversarySpec(2, "static", graphs=(complete_graph(2),))
        with pytest.raises(ValueError):
            run(spec, EQ, np.zeros((2, 1)), 0)

    def test_wrong_x0(self):
        spec = AdversarySpec(2, "static", graphs=(complete_graph(2),))
        with pytest.raises(ValueError):
            run(spec, EQ, np.zeros((3, 1)), 4)
        with pytest.raises(ValueError):
            run(spec, EQ, np.array([[0.0], [np.nan]]), 4)

    def test_bit_identical_rerun(self):
        spec = AdversarySpec(5, "random_rooted", k=2, seed=21)
        rule = WeightRule("random_alpha_safe", alpha=0.1, seed=3)
        x0 = np.random.default_rng(0).uniform(-5, 5, (5, 3))
        a, b = run(spec, rule, x0, 50), run(spec, rule, x0, 50)
        assert a.states.tobytes() == b.states.tobytes()

    def test_trace_accessors(self):
        spec = AdversarySpec(4, "random_broadcastable", k=2, seed=1)
        x0 = np.random.default_rng(1).normal(size=(4, 2))
        tr = run(spec, EQ, x0, 5)
        assert (tr.n, tr.d, tr.rounds) == (4, 2, 5)
        assert tr.states.shape == (6, 4, 2)
        for t in range(1, 6):
            np.testing.assert_array_equal(tr.after(t), tr.record(t).weights @ tr.before(t))
            assert tr.record(t).alpha == min_broadcast_weight(tr.record(t).weights, tr.record(t).m_set)
        assert not tr.states.flags.writeable

    def test_non_expansion_and_validity(self, rng):
        spec = AdversarySpec(5, "random_rooted", k=3, seed=2)
        x0 = rng.uniform(-5, 5, (5, 3))
        tr = run(spec, WeightRule("random_alpha_safe", alpha=0.05, seed=9), x0, 30)
        for t in range(1, 31):
            prev = tr.before(t)
            for z in tr.after(t):
                assert dist_to_hull(z, prev)[0] <= 1e-9
                assert dist_to_hull(z, x0)[0] <= 1e-9

    def test_relay_run_uses_macro_rounds(self):
        spec = AdversarySpec(3, "random_rooted", k=1, seed=5)
        tr = run(spec, EQ, np.eye(3), 4, relay_rounds=9)
        assert tr.relay_rounds == 9
        assert all(len(r.m_set) == 1 for r in tr.records)
