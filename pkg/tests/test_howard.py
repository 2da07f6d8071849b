import numpy as np
import pytest

from simplexmdp import (SimplexGrid, build_local_tables, counterexample_model,
                        evaluate_policy, global_successor, memory_report,
                        policy_cycles, policy_graph, raw_model, solve_howard,
                        solve_rvi)
from simplexmdp.howard import PolicyGraph


def rank_one_model():
    targets = np.array([[0.6, 0.3, 0.1], [0.2, 0.2, 0.6]])
    trans = np.stack([np.tile(t, (3, 1)) for t in targets])[None, :, :, :]
    thetas = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])[None, :, :]
    return raw_model([1.0], [0.0, 1.0], trans, thetas), targets


class TestLocalTables:
    def test_rank_one_rows_share_successor(self):
        model, targets = rank_one_model()
        grid = SimplexGrid(3, 6)
        tables = build_local_tables(model, grid)
        for ai in range(2):
            expect = grid.nearest(targets[ai])
            assert (tables.succ[0, :, ai] == expect).all()

    def test_snapping_matches_reference_case(self):
        model = counterexample_model(0.25)
        grid = SimplexGrid(3, 2)
        tables = build_local_tables(model, grid)
        start = grid.index_of(np.array([[2, 0, 0]]))[0]  # (1, 0, 0)
        succ = tables.succ[0, start, 0]                  # action a0 = 0.25
        # (0.75, 0.25, 0) ties (1,0,0) and (0.5,0.5,0) at sup distance 0.25
        np.testing.assert_allclose(grid.points[succ], [0.5, 0.5, 0.0])

    def test_deterministic_rebuild(self):
        model = counterexample_model(0.3, action_count=3)
        grid = SimplexGrid(3, 15)
        t1 = build_local_tables(model, grid)
        t2 = build_local_tables(model, grid)
        np.testing.assert_array_equal(t1.succ, t2.succ)
        np.testing.assert_array_equal(t1.reward, t2.reward)


class TestGlobalSuccessor:
    def test_single_cluster_is_local_lookup(self):
        model = counterexample_model(0.25)
        grid = SimplexGrid(3, 5)
        tables = build_local_tables(model, grid)
        for i in (0, 3, grid.size - 1):
            assert global_successor(tables, (i,), 1) == (int(tables.succ[0, i, 1]),)

    def test_two_clusters_compose(self):
        model = counterexample_model(0.25)
        two = raw_model([0.5, 0.5], model.actions,
                        np.repeat(model.transitions, 2, axis=0),
                        np.repeat(model.thetas, 2, axis=0), primitivity_power=2)
        grid = SimplexGrid(3, 5)
        tables = build_local_tables(two, grid)
        gi = (2, 7)
        assert global_successor(tables, gi, 0) == (
            int(tables.succ[0, 2, 0]), int(tables.succ[1, 7, 0]))

    def test_matches_materialized_table(self):
        model = counterexample_model(0.25)
        two = raw_model([0.4, 0.6], model.actions,
                        np.repeat(model.transitions, 2, axis=0),
                        np.repeat(model.thetas, 2, axis=0), primitivity_power=2)
        grid = SimplexGrid(3, 6)  # 28^2 = 784 global nodes
        tables = build_local_tables(two, grid)
        m = grid.size
        assert m * m <= 10_000
        for ai in range(two.n_actions):
            full = np.empty((m, m), dtype=np.int64)
            for i in range(m):
                for j in range(m):
                    s = global_successor(tables, (i, j), ai)
                    full[i, j] = s[0] * m + s[1]
            d = np.full(m * m, ai, dtype=np.int64)
            graph = policy_graph(tables, d)
            np.testing.assert_array_equal(graph.successor, full.ravel())


class TestEvaluatePolicy:
    def test_two_cycle_average(self):
        graph = PolicyGraph(successor=np.array([1, 0]), reward=np.array([1.0, 3.0]))
        g, h = evaluate_policy(graph)
        np.testing.assert_allclose(g, [2.0, 2.0])
        assert h[0] == 0.0          # anchor: smallest index on the cycle
        assert h[1] == pytest.approx(1.0)  # h0 = r0 - g + h1

    def test_self_loop_with_tail(self):
        graph = PolicyGraph(successor=np.array([0, 0]), reward=np.array([5.0, 0.0]))
        g, h = evaluate_policy(graph)
        np.testing.assert_allclose(g, [5.0, 5.0])
        assert h[0] == 0.0
        assert h[1] - h[0] == pytest.approx(-5.0)

    def test_constant_rewards(self):
        rng = np.random.default_rng(0)
        succ = rng.integers(0, 50, size=50)
        graph = PolicyGraph(successor=succ, reward=np.full(50, 2.5))
        g, h = evaluate_policy(graph)
        np.testing.assert_allclose(g, 2.5)
        reps = {c.representative for c in policy_cycles(graph)}
        for c in policy_cycles(graph):
            assert c.gain == pytest.approx(2.5)
        assert (np.abs(h[list(reps)]) < 1e-12).all()

    def test_random_graphs_satisfy_evaluation_equations(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(2, 400))
            succ = rng.integers(0, n, size=n)
            r = rng.normal(size=n)
            graph = PolicyGraph(successor=succ, reward=r)
            g, h = evaluate_policy(graph)
            # gains constant along edges; bias equation holds off the anchors
            np.testing.assert_allclose(g, g[succ], atol=1e-10)
            anchors = {c.representative for c in policy_cycles(graph)}
            free = np.array([i for i in range(n) if i not in anchors])
            if free.size:
                np.testing.assert_allclose(h[free],
                                           r[free] - g[free] + h[succ[free]],
                                           atol=1e-9)
            for a in anchors:
                assert h[a] == 0.0
                # the anchor equation is implied by the cycle-mean identity
                assert h[a] == pytest.approx(r[a] - g[a] + h[succ[a]], abs=1e-9)

    def test_giant_cycle(self):
        n = 1000
        succ = np.roll(np.arange(n), -1)
        r = np.sin(np.arange(n))
        g, h = evaluate_policy(PolicyGraph(successor=succ, reward=r))
        np.testing.assert_allclose(g, r.mean(), atol=1e-12)
        np.testing.assert_allclose(h, h[succ] + r - g, atol=1e-8)


class TestSolveHoward:
    def test_rank_one_converges_fast(self):
        model, targets = rank_one_model()
        sol = solve_howard(model, SimplexGrid(3, 12))
        assert sol.converged
        assert sol.iterations <= 2
        expected = max(model.thetas[0, ai] @ targets[ai] for ai in range(2))
        # nearest-neighbor snapping perturbs the landing point by O(1/D)
        assert sol.gain == pytest.approx(expected, abs=0.1)

    def test_counterexample_matches_closed_form_and_rvi(self):
        model = counterexample_model(0.25)
        grid = SimplexGrid(3, 200)
        sol = solve_howard(model, grid)
        star = 0.4375 / 0.8125
        assert sol.converged
        assert sol.gain == pytest.approx(star, abs=1e-2)
        rvi = solve_rvi(model, grid, eps=1e-5)
        assert sol.gain == pytest.approx(rvi.gain, abs=2e-2)

    def test_gain_bias_improvement_is_monotone(self):
        model = counterexample_model(0.25, action_count=4)
        grid = SimplexGrid(3, 25)
        tables = build_local_tables(model, grid)
        from simplexmdp.howard import _improved_decisions, _local_index_axes
        axes = _local_index_axes(grid.size, 1)
        d = np.zeros(grid.size, dtype=np.int64)
        prev_g = prev_h = None
        for _ in range(30):
            g, h = evaluate_policy(policy_graph(tables, d))
            if prev_g is not None:
                assert (g >= prev_g - 1e-9).all()
                same = np.abs(g - prev_g) <= 1e-9
                assert (h[same] >= prev_h[same] - 1e-9).all()
            prev_g, prev_h = g, h
            d_new = _improved_decisions(tables, g, h, d, axes)
            if np.array_equal(d_new, d):
                break
            d = d_new

    def test_node_gains_reported(self):
        model = counterexample_model(0.25)
        sol = solve_howard(model, SimplexGrid(3, 50))
        assert sol.node_gains is not None
        assert sol.gain == pytest.approx(sol.node_gains.max())
        assert sol.bias.min() == 0.0

    def test_initial_policy_override(self):
        model = counterexample_model(0.25)
        grid = SimplexGrid(3, 40)
        d0 = np.ones(grid.size, dtype=np.int64)
        a = solve_howard(model, grid, d0=d0)
        b = solve_howard(model, grid)
        assert a.gain == pytest.approx(b.gain, abs=1e-10)


class TestMemoryAccounting:
    def test_local_vs_global_scaling(self):
        model = counterexample_model(0.25)
        two = raw_model([0.5, 0.5], model.actions,
                        np.repeat(model.transitions, 2, axis=0),
                        np.repeat(model.thetas, 2, axis=0), primitivity_power=2)
        grid = SimplexGrid(3, 10)
        tables = build_local_tables(two, grid)
        rep = memory_report(tables)
        m, na = grid.size, two.n_actions
        assert rep["local_entries"] == 2 * m * na
        assert rep["global_table_entries"] == m * m * na
        assert rep["ratio"] == pytest.approx(m / 2)
