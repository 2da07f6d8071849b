import numpy as np
import pytest

from simplexmdp import (SimplexGrid, counterexample_model, dual_bound,
                        lagrangian_value, optimal_steady_state, power_phi,
                        raw_model, single_offer_pricing, stationary_distribution)


def rank_one_model():
    targets = np.array([[0.6, 0.3, 0.1], [0.2, 0.2, 0.6]])
    trans = np.stack([np.tile(t, (3, 1)) for t in targets])[None, :, :, :]
    thetas = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])[None, :, :]
    return raw_model([1.0], [0.0, 1.0], trans, thetas)


class TestLagrangianValue:
    def test_zero_multiplier_is_pushed_reward(self):
        model = counterexample_model(0.25)
        rng = np.random.default_rng(0)
        for _ in range(10):
            mu = rng.dirichlet(np.ones(3))[None, :]
            ai = int(rng.integers(model.n_actions))
            val = lagrangian_value(model, power_phi(2), ai, mu, np.zeros(3))
            assert val == pytest.approx(model.step_reward(ai, mu), abs=1e-14)

    def test_penalty_vanishes_at_stationary_pair(self):
        model = counterexample_model(0.25)
        mu = stationary_distribution(model, 0)
        rng = np.random.default_rng(1)
        for p in (1, 2, 3, 4):
            for _ in range(5):
                lam = rng.normal(size=3)
                val = lagrangian_value(model, power_phi(p), 0, mu, lam)
                assert val == pytest.approx(model.reward(0, mu), abs=1e-9)

    def test_identity_map_hand_computation(self):
        model = counterexample_model(0.25)
        mu = np.array([[0.5, 0.3, 0.2]])
        lam = np.array([1.0, -2.0, 0.5])
        pushed = model.push(0, mu)
        by_hand = model.reward(0, pushed) + lam @ (pushed[0] - mu[0])
        val = lagrangian_value(model, power_phi(1), 0, mu, lam)
        assert val == pytest.approx(by_hand, abs=1e-14)


class TestDualBound:
    def test_rank_one_has_zero_gap_at_zero_multiplier(self):
        model = rank_one_model()
        grid = SimplexGrid(3, 8)
        gbar = optimal_steady_state(model, refine_rounds=0).gain
        for p in (1, 2):
            res = dual_bound(model, power_phi(p), grid, lower_target=gbar)
            assert res.bound == pytest.approx(gbar, abs=1e-9)

    def test_identity_zero_multiplier_value_is_brute_force(self):
        model = counterexample_model(0.25)
        grid = SimplexGrid(3, 10)
        res = dual_bound(model, power_phi(1), grid, max_iters=1, lower_target=-1e9)
        brute = max(model.step_reward(ai, [mu]) for ai in range(model.n_actions)
                    for mu in grid.points)
        assert res.trace[0] == pytest.approx(brute, abs=1e-12)

    def test_weak_duality_along_the_run(self):
        model = single_offer_pricing(consumption=500, reservation=85, cost=65,
                                     beta=0.1, gamma=10.0, price_min=0.08,
                                     price_max=0.22, price_steps=29)
        grid = SimplexGrid(2, 200)
        gbar = optimal_steady_state(model, refine_rounds=0).gain
        res = dual_bound(model, power_phi(2), grid, max_iters=300, lower_target=gbar)
        assert all(f >= gbar - 1e-9 for f in res.trace)
        assert res.bound >= gbar - 1e-9

    def test_reported_bound_never_increases(self):
        model = single_offer_pricing(consumption=500, reservation=85, cost=65,
                                     beta=0.1, gamma=15.0, price_min=0.08,
                                     price_max=0.22, price_steps=29)
        grid = SimplexGrid(2, 150)
        gbar = optimal_steady_state(model, refine_rounds=0).gain
        res = dual_bound(model, power_phi(3), grid, max_iters=200, lower_target=gbar)
        running = np.minimum.accumulate(res.trace)
        assert res.bound == pytest.approx(running[-1])

    def test_higher_powers_tighten_reference_instance(self):
        # observed behavior on the reference data; recorded, not a theorem
        model = single_offer_pricing(consumption=500, reservation=85, cost=65,
                                     beta=0.1, gamma=10.0, price_min=0.08,
                                     price_max=0.22, price_steps=57)
        grid = SimplexGrid(2, 400)
        gbar = optimal_steady_state(model, refine_rounds=0).gain
        b1 = dual_bound(model, power_phi(1), grid, max_iters=400, lower_target=gbar)
        b2 = dual_bound(model, power_phi(2), grid, max_iters=400, lower_target=gbar)
        assert b2.bound <= b1.bound + 1e-9
        assert b2.bound - gbar <= 0.05

    def test_diverging_multiplier_flags(self):
        model = counterexample_model(0.25)
        grid = SimplexGrid(3, 5)
        res = dual_bound(model, power_phi(1), grid, lam0=np.full(3, 9e7),
                         max_iters=5, lower_target=-1e12)
        assert not res.converged
        assert np.isfinite(res.bound)  # best certified value still returned
