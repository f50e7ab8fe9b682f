"""Backward-induction solvers, Monte Carlo harness, and baselines."""

import math

import numpy as np
import pytest

from mwadversary import (
    Decision,
    KExpertParams,
    ModelParams,
    clairvoyant_value,
    exhaustive_offline_optimum,
    monte_carlo_k_expert,
    no_info_conditional_losses,
    no_information_baseline,
    optimal_value,
    simulate_online,
    solve_k_expert,
    solve_two_expert,
    weight_power,
)
from mwadversary.core import GuardError

E = math.e


def params(mu=0.5, horizon=2, rho0=0.5, epsilon=1 / E, loss=None):
    return ModelParams(epsilon=epsilon, mu=mu, horizon=horizon, rho0=rho0, loss=loss)


class TestSolveTwoExpert:
    def test_rejects_general_loss(self):
        with pytest.raises(ValueError):
            solve_two_expert(params(loss=lambda y: y * y))

    @pytest.mark.parametrize("mu,rho0", [(0.3, 0.5), (0.5, 0.5), (0.7, 0.2)])
    def test_single_stage(self, mu, rho0):
        table = solve_two_expert(params(mu=mu, horizon=1, rho0=rho0))
        assert table.action(0, 0) is Decision.LIE
        assert table.root_value == pytest.approx(1 - mu + mu * rho0, abs=1e-12)

    def test_two_stage_anchor(self):
        table = solve_two_expert(params())
        assert table.root_value == pytest.approx(1.442236, abs=1e-6)
        assert table.action(0, 0) is Decision.LIE

    def test_terminal_and_sign_structure(self):
        table = solve_two_expert(params(horizon=12))
        assert np.all(table.values[12] == 0.0)
        for k in range(13):
            assert table.values[k].size == 2 * k + 1
            assert np.all(table.values[k] >= 0.0)

    def test_values_nonincreasing_in_offset(self):
        """More punished lies means less weight and (numerically) no more
        achievable loss; checked as an observation, not proved."""
        for mu in (0.3, 0.5, 0.7):
            table = solve_two_expert(params(mu=mu, horizon=25))
            for k in range(26):
                assert np.all(np.diff(table.values[k]) <= 1e-12)

    def test_bellman_consistency(self):
        p = params(mu=0.4, horizon=20)
        table = solve_two_expert(p)
        mu = p.mu
        for k in range(p.horizon):
            for j in range(-k, k + 1):
                rho = weight_power(j, p.rho0, p)
                lie = 1 - mu + mu * rho + mu * table.value(k + 1, j + 1) + (1 - mu) * table.value(k + 1, j)
                truth = (1 - mu) * (1 - rho) + (1 - mu) * table.value(k + 1, j - 1) + mu * table.value(k + 1, j)
                assert table.value(k, j) == pytest.approx(max(lie, truth), abs=1e-12)
                assert table.is_tie(k, j) == (abs(lie - truth) <= 1e-12 * max(1.0, abs(lie), abs(truth)))

    def test_state_access_bounds(self):
        table = solve_two_expert(params(horizon=3))
        with pytest.raises(ValueError):
            table.value(1, 2)
        with pytest.raises(ValueError):
            table.value(4, 0)
        with pytest.raises(ValueError):
            table.action(3, 0)  # no action at the terminal stage

    @pytest.mark.parametrize("n", [100, 200, 400])
    def test_state_count_probe(self, n):
        """Exactly 2k+1 offsets are touched at stage k, so total work is
        quadratic in the horizon."""
        table = solve_two_expert(params(horizon=n))
        assert table.states_evaluated == n * n
        assert all(table.values[k].size == 2 * k + 1 for k in range(n + 1))

    def test_quadratic_work_scaling(self):
        counts = {n: solve_two_expert(params(horizon=n)).states_evaluated for n in (100, 200, 400)}
        assert counts[200] / counts[100] == 4.0
        assert counts[400] / counts[200] == 4.0


class TestOptimalValue:
    def test_anchors(self):
        assert optimal_value(params(horizon=1)) == pytest.approx(0.75, abs=1e-12)
        assert optimal_value(params(horizon=2)) == pytest.approx(1.442236, abs=1e-6)

    def test_loose_sanity_bounds(self):
        for mu in (0.3, 0.5, 0.7):
            v = optimal_value(params(mu=mu, horizon=100))
            assert (1 - mu) * 100 < v < 100


class TestSimulateOnline:
    def test_deterministic(self):
        p = params(horizon=10)
        table = solve_two_expert(p)
        a = simulate_online(p, table, trials=500, seed=42)
        b = simulate_online(p, table, trials=500, seed=42)
        assert a.mean == b.mean and a.stderr == b.stderr
        assert np.array_equal(a.per_trial, b.per_trial)

    def test_stderr_definition(self):
        p = params(horizon=10)
        res = simulate_online(p, solve_two_expert(p), trials=400, seed=5)
        assert res.stderr == pytest.approx(res.per_trial.std(ddof=1) / 20.0, abs=1e-15)

    def test_near_deterministic_honest_expert(self):
        p = params(mu=0.999, horizon=5)
        table = solve_two_expert(p)
        res = simulate_online(p, table, trials=4000, seed=11)
        assert abs(res.mean - table.root_value) <= 3 * res.stderr

    def test_clt_band_large_run(self):
        p = params(horizon=20)
        table = solve_two_expert(p)
        res = simulate_online(p, table, trials=100_000, seed=7)
        assert abs(res.mean - table.root_value) <= 4 * res.stderr

    def test_mismatched_params(self):
        table = solve_two_expert(params(horizon=5))
        with pytest.raises(ValueError):
            simulate_online(params(horizon=6), table, trials=10, seed=0)


class TestSolveKExpert:
    def test_two_expert_reduction(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            eps = float(rng.uniform(0.1, 0.9))
            mu = float(rng.uniform(0.1, 0.9))
            n = int(rng.integers(1, 26))
            w1, w2 = (float(x) for x in rng.uniform(0.2, 2.0, size=2))
            kp = KExpertParams(epsilon=eps, horizon=n, accuracies=(mu,), initial_weights=(w1, w2))
            direct = optimal_value(
                ModelParams(epsilon=eps, mu=mu, horizon=n, rho0=w1 / (w1 + w2))
            )
            assert solve_k_expert(kp) == pytest.approx(direct, abs=1e-9)

    def test_three_expert_single_stage(self):
        kp = KExpertParams(epsilon=1 / E, horizon=1, accuracies=(0.5, 0.5), initial_weights=(1.0, 1.0, 1.0))
        # lying dominates: expected loss is the mean over the four honest
        # outcome combinations of the wrong-weight share
        assert solve_k_expert(kp) == pytest.approx(2 / 3, abs=1e-12)

    def test_five_expert_tracks_reduced_model(self):
        for n in (6, 10):
            kp = KExpertParams(epsilon=1 / E, horizon=n, accuracies=(0.5,) * 4, initial_weights=(1.0,) * 5)
            v2 = optimal_value(ModelParams(epsilon=1 / E, mu=0.5, horizon=n, rho0=0.2))
            assert abs(solve_k_expert(kp) - v2) <= 0.05 * n

    def test_guards(self):
        with pytest.raises(GuardError):
            solve_k_expert(
                KExpertParams(epsilon=0.5, horizon=5, accuracies=(0.5,) * 5, initial_weights=(1.0,) * 6)
            )
        with pytest.raises(GuardError):
            solve_k_expert(
                KExpertParams(epsilon=0.5, horizon=61, accuracies=(0.5,), initial_weights=(1.0, 1.0))
            )
        with pytest.raises(GuardError):
            solve_k_expert(
                KExpertParams(epsilon=0.5, horizon=20, accuracies=(0.5,) * 4, initial_weights=(1.0,) * 5)
            )

    def test_param_validation(self):
        with pytest.raises(ValueError):
            KExpertParams(epsilon=0.5, horizon=5, accuracies=(1.0,), initial_weights=(1.0, 1.0))
        with pytest.raises(ValueError):
            KExpertParams(epsilon=0.5, horizon=5, accuracies=(0.5,), initial_weights=(1.0,))


class TestClairvoyant:
    def test_single_stage_correct_honest(self):
        kp = KExpertParams(epsilon=1 / E, horizon=1, accuracies=(0.5,), initial_weights=(1.0, 1.0))
        assert clairvoyant_value([[1]], kp) == pytest.approx(0.5, abs=1e-15)

    def test_single_stage_wrong_honest(self):
        kp = KExpertParams(epsilon=1 / E, horizon=1, accuracies=(0.5,), initial_weights=(1.0, 1.0))
        # honest wrong: lying costs 1 now, truth costs 1 - rho; lying wins
        assert clairvoyant_value([[0]], kp) == pytest.approx(1.0, abs=1e-15)

    def test_dominates_fixed_response(self):
        """On the all-correct path the clairvoyant optimum beats replaying
        the all-lies response."""
        n = 8
        kp = KExpertParams(epsilon=1 / E, horizon=n, accuracies=(0.5,), initial_weights=(1.0, 1.0))
        all_lie_loss = sum(
            weight_power(j, 0.5, params(horizon=n)) for j in range(n)
        )
        assert clairvoyant_value(np.ones((1, n), dtype=int), kp) >= all_lie_loss - 1e-12

    @pytest.mark.parametrize("n", [6, 10])
    def test_average_clairvoyance_dominates_online(self, n):
        kp = KExpertParams(epsilon=1 / E, horizon=n, accuracies=(0.5,), initial_weights=(1.0, 1.0))
        total = 0.0
        for code in range(1 << n):
            path = np.array([[(code >> k) & 1 for k in range(n)]])
            total += clairvoyant_value(path, kp)
        assert total / (1 << n) >= optimal_value(params(horizon=n)) - 1e-12

    def test_dimension_mismatch(self):
        kp = KExpertParams(epsilon=1 / E, horizon=3, accuracies=(0.5, 0.5), initial_weights=(1.0,) * 3)
        with pytest.raises(ValueError):
            clairvoyant_value(np.ones((1, 3), dtype=int), kp)


class TestMonteCarloKExpert:
    def test_deterministic(self):
        kp = KExpertParams(epsilon=1 / E, horizon=8, accuracies=(0.5,) * 4, initial_weights=(1.0,) * 5)
        a = monte_carlo_k_expert(kp, trials=50, seed=3)
        b = monte_carlo_k_expert(kp, trials=50, seed=3)
        assert a.mean == b.mean and a.stderr == b.stderr
        assert np.array_equal(a.per_trial, b.per_trial)

    def test_exact_dp_mode(self):
        kp = KExpertParams(epsilon=1 / E, horizon=6, accuracies=(0.5, 0.6), initial_weights=(1.0,) * 3)
        res = monte_carlo_k_expert(kp, trials=10, seed=1, mode="exact_dp")
        assert res.mean == solve_k_expert(kp)
        assert res.stderr == 0.0 and res.per_trial is None

    def test_clairvoyant_mean_dominates_online_in_two_expert_case(self):
        kp = KExpertParams(epsilon=1 / E, horizon=12, accuracies=(0.5,), initial_weights=(1.0, 1.0))
        res = monte_carlo_k_expert(kp, trials=300, seed=17)
        assert res.mean >= optimal_value(params(horizon=12)) - 3 * res.stderr

    def test_rejects_unknown_mode(self):
        kp = KExpertParams(epsilon=1 / E, horizon=3, accuracies=(0.5,), initial_weights=(1.0, 1.0))
        with pytest.raises(ValueError):
            monte_carlo_k_expert(kp, trials=5, seed=0, mode="oracle")


class TestNoInformationBaseline:
    def test_single_stage(self):
        assert no_information_baseline(params(horizon=1)) == pytest.approx(0.5, abs=1e-15)

    def test_equalization_identity(self):
        for mu in (0.3, 0.5, 0.9):
            for rho in (0.1, 0.5, 0.8):
                c0, c1 = no_info_conditional_losses(0.5, rho, mu)
                assert abs(c0 - c1) <= 1e-12

    def test_coin_is_maximin(self):
        # any q != 1/2 lowers the worse of the two conditional losses
        for q in (0.0, 0.3, 0.8, 1.0):
            c0, c1 = no_info_conditional_losses(q, 0.5, 0.5)
            e0, e1 = no_info_conditional_losses(0.5, 0.5, 0.5)
            assert min(c0, c1) <= min(e0, e1) + 1e-15

    @pytest.mark.parametrize("mu", [0.3, 0.5, 0.7])
    @pytest.mark.parametrize("n", [1, 5, 12])
    def test_dominated_by_online_optimum(self, mu, n):
        p = params(mu=mu, horizon=n)
        assert no_information_baseline(p) <= optimal_value(p) + 1e-12

    def test_rejects_general_loss(self):
        with pytest.raises(ValueError):
            no_information_baseline(params(loss=lambda y: y * y))


def test_online_dominates_offline_with_strictness():
    diffs = []
    for n in range(1, 11):
        p = params(horizon=n)
        _, v_off = exhaustive_offline_optimum(p)
        diffs.append(optimal_value(p) - v_off)
    assert all(d >= -1e-9 for d in diffs)
    assert max(diffs) > 1e-6  # adaptivity strictly helps somewhere
