from fractions import Fraction

import numpy as np
import pytest

from rfb.design import (
    filter_response,
    channel_energy,
    gradient,
    make_problem,
    objective,
    objective_and_gradient,
    objective_direct,
    optimize,
    trapezoid_weights,
)
from rfb.paraunitary import PolyphaseFIR, ThetaVector
from conftest import EXAMPLE1

SMALL = ["1/3", "2/3"]


@pytest.fixture(scope="module")
def small_problem():
    return make_problem(SMALL, K=2, grid_size=256, seed=3)


class TestTrapezoid:
    def test_full_circle(self):
        w = trapezoid_weights(np.ones(8, bool), 0.5)
        assert np.allclose(w, 0.5)

    def test_run_ends_get_half_weight(self):
        mask = np.array([0, 1, 1, 1, 0, 0], bool)
        assert trapezoid_weights(mask, 1.0).tolist() == [0, 0.5, 1, 0.5, 0, 0]

    def test_isolated_point_and_wrap(self):
        mask = np.array([1, 0, 0, 1, 0, 1], bool)
        assert trapezoid_weights(mask, 1.0).tolist() == [0.5, 0, 0, 0, 0, 0.5]


class TestObjective:
    def test_single_band_is_zero(self):
        prob = make_problem(["1"], K=3)
        assert objective(ThetaVector.zeros(1, 3), prob) == 0.0
        theta, trace = optimize(prob, restarts=1)
        assert trace.final_values == [0.0]

    def test_identity_bank_positive(self, example1_problem):
        assert objective(PolyphaseFIR.identity(10), example1_problem) > 0.5

    def test_two_routes_agree(self, example1_problem, rng):
        theta = ThetaVector.random(10, 7, rng)
        assert objective(theta, example1_problem) == pytest.approx(objective_direct(theta, example1_problem), rel=1e-11)

    def test_nonnegative(self, small_problem, rng):
        for _ in range(20):
            assert objective(rng.uniform(-np.pi, np.pi, small_problem.n_params), small_problem) >= 0

    def test_grid_refinement(self, rng):
        # smooth bank: small angles keep the responses slowly varying
        coarse = make_problem(EXAMPLE1, grid_size=1024)
        fine = make_problem(EXAMPLE1, grid_size=2048)
        theta = ThetaVector(10, 7, 0.3 * rng.uniform(-np.pi, np.pi, coarse.n_params))
        a, b = objective(theta, coarse), objective(theta, fine)
        assert abs(a - b) / b < 1e-3

    def test_energy_budget(self, example1_problem, rng):
        theta = ThetaVector.random(10, 7, rng)
        for n in range(3):
            e = channel_energy(theta, example1_problem, n)
            assert e.total == pytest.approx(e.expected_total, abs=1e-6)
            assert e.rest == pytest.approx(e.expected_total - e.stopband, abs=1e-6)
            assert 0 <= e.stopband <= e.total

    def test_energy_budget_independent_of_theta(self, small_problem, rng):
        totals = {round(channel_energy(rng.uniform(-3, 3, small_problem.n_params), small_problem, 1).total, 9) for _ in range(5)}
        assert len(totals) == 1


class TestGradient:
    def test_analytic_vs_central(self, example1_problem, rng):
        x = rng.uniform(-np.pi, np.pi, example1_problem.n_params)
        ga = gradient(x, example1_problem)
        gc = gradient(x, example1_problem, method="central")
        assert np.linalg.norm(ga - gc) / np.linalg.norm(gc) < 1e-4

    def test_stencils_agree(self, example1_problem, rng):
        x = rng.uniform(-np.pi, np.pi, example1_problem.n_params)
        h = 1e-6
        for i in rng.choice(x.size, 5, replace=False):
            e = np.zeros_like(x)
            e[i] = 1.0
            f = lambda t: objective(x + t * e, example1_problem)
            two = (f(h) - f(-h)) / (2 * h)
            five = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)
            assert abs(two - five) < 1e-7

    def test_descent_direction(self, small_problem, rng):
        for _ in range(100):
            x = rng.uniform(-np.pi, np.pi, small_problem.n_params)
            D, g = objective_and_gradient(x, small_problem)
            step = 1e-6 / max(np.linalg.norm(g), 1e-12)
            assert objective(x - step * g, small_problem) < D

    def test_unknown_method(self, small_problem):
        with pytest.raises(ValueError):
            gradient(np.zeros(small_problem.n_params), small_problem, method="bogus")


class TestOptimize:
    def test_first_order_condition(self, small_problem):
        theta, trace = optimize(small_problem, restarts=2, max_iter=3000, gtol=1e-9)
        assert trace.stop_reasons[trace.best_restart] == "converged"
        assert np.abs(gradient(theta, small_problem)).max() < 1e-5

    def test_trace_monotone_and_deterministic(self, small_problem):
        _, t1 = optimize(small_problem, restarts=3, max_iter=200)
        _, t2 = optimize(small_problem, restarts=3, max_iter=200)
        assert t1.to_csv() == t2.to_csv()
        for r in range(3):
            vals = [d for rr, _, d, _ in t1.iterates if rr == r]
            assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_iteration_cap_reported(self, small_problem):
        _, trace = optimize(small_problem, restarts=1, max_iter=2)
        assert trace.stop_reasons == ["max_iter"]
        assert not trace.all_converged
        assert trace.best is not None

    def test_threads_same_result(self, small_problem, monkeypatch):
        _, serial = optimize(small_problem, restarts=3, max_iter=100)
        monkeypatch.setenv("RFB_THREADS", "3")
        _, threaded = optimize(small_problem, restarts=3, max_iter=100)
        assert threaded.to_csv() == serial.to_csv()

    def test_rejects_zero_restarts(self, small_problem):
        with pytest.raises(ValueError):
            optimize(small_problem, restarts=0)

    def test_example1_beats_identity(self, example1_problem, example1_design):
        theta, trace, _ = example1_design
        assert objective(theta, example1_problem) < 0.05 * objective(PolyphaseFIR.identity(10), example1_problem)


def test_problem_rejects_oversized_epsilon():
    with pytest.raises(ValueError):
        make_problem(EXAMPLE1, epsilon=Fraction(1, 4))


def test_alias_summed_power_is_constant(rng):
    # the per-frequency filter power is not flat, but summed over all K shifts it is P^2/Q
    prob = make_problem(EXAMPLE1, grid_size=512)
    theta = ThetaVector.random(10, 7, rng)
    psi = prob.grid.points
    for n in range(3):
        mt = prob.transform(n)
        total = sum(
            np.abs(filter_response(theta, prob, n, i, psi - 2 * np.pi * g / mt.K)) ** 2
            for i in range(len(prob.specs[n]))
            for g in range(mt.K)
        )
        assert np.abs(total - mt.P**2 / mt.Q).max() < 1e-12
        single = sum(np.abs(filter_response(theta, prob, n, i)) ** 2 for i in range(len(prob.specs[n])))
        assert single.max() - single.min() > 1e-3
