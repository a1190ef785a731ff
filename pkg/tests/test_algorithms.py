import math

import numpy as np
import pytest

from models.network import MixingMatrix
from models.objective_suite import ObjectiveSuite
from models.swarm import SwarmState
from processors.algorithms import (alg1_step, alg2_step, default_initial_points, hybrid_step,
                                   queries_per_iteration, run, tracking_identity_residuals)
from processors.network import build_ring, metropolis_weights
from processors.objectives import make_benchmark_instance, make_quadratic_suite
from processors.schedules import schedule_manual
from utils.exceptions import DivergenceError, InvalidSizeError


class ConstantSuite(ObjectiveSuite):
    kind = 'constant'

    def __init__(self, d, n):
        super().__init__(d=d, n=n, L=1.0, f_star=2.0)

    def local_value(self, i, x):
        return 2.0

    def local_grad(self, i, x):
        return np.zeros(self.d)

    def parameters(self):
        return {}


class LinearSuite(ObjectiveSuite):
    """f_i(x) = g_i^T x."""

    kind = 'linear'

    def __init__(self, slopes):
        super().__init__(d=slopes.shape[1], n=slopes.shape[0], L=0.0)
        self.slopes = slopes

    def local_value(self, i, x):
        return float(self.slopes[i] @ x)

    def local_grad(self, i, x):
        return self.slopes[i].copy()

    def parameters(self):
        return {'slopes': self.slopes}


class GradientFreeSuite(LinearSuite):
    def local_grad(self, i, x):
        raise AssertionError('kernels must not read analytic gradients')


def _constant_step(eta=0.1, u0=0.5, u_power=0.75):
    return schedule_manual(eta, 0.0, u0, u_power)


def test_queries_per_iteration():
    assert queries_per_iteration('alg1', 7) == 2
    assert queries_per_iteration('hybrid', 7) == 2
    assert queries_per_iteration('alg2', 7) == 14


def test_initial_points_scale_and_determinism():
    first = default_initial_points(2000, 4, seed=3)
    np.testing.assert_array_equal(first, default_initial_points(2000, 4, seed=3))
    assert first.std() == pytest.approx(5 / math.sqrt(4), rel=0.05)


def test_alg1_single_agent_quadratic():
    suite = make_quadratic_suite(1, 1, np.array([[0.0]]))
    w = MixingMatrix(w=np.array([[1.0]]), rho=0.0)
    state = alg1_step(SwarmState.initial(np.array([[1.0]])), suite, w, _constant_step(0.1), seed=0)
    assert state.x[0, 0] == pytest.approx(0.9, rel=1e-12)
    assert state.t == 1 and state.m == 2


def test_alg1_constant_objectives_is_pure_consensus(ring4_metropolis, rng):
    suite = ConstantSuite(3, 4)
    trace = run('alg1', suite, ring4_metropolis, schedule_manual(0.1, 0.5, 1.0, 0.5), T=20, seed=1,
                x0=rng.standard_normal((4, 3)))
    errors = trace.column('consensus_err')
    rho_sq = ring4_metropolis.rho ** 2
    assert np.all(errors[1:] <= rho_sq * errors[:-1] + 1e-12)


def test_alg2_first_step_from_zero_init(ring4_metropolis):
    centers = np.random.default_rng(4).standard_normal((4, 3))
    suite = make_quadratic_suite(3, 4, centers)
    x0 = np.arange(12, dtype=float).reshape(4, 3) / 10
    state = alg2_step(SwarmState.initial(x0), suite, ring4_metropolis, eta=0.1, u=0.3)
    np.testing.assert_allclose(state.s, ring4_metropolis.w @ (x0 - centers), atol=1e-12)
    assert state.m == 6


def test_alg2_matches_first_order_tracking_on_quadratics(ring4_metropolis):
    centers = np.random.default_rng(2).standard_normal((4, 3))
    suite = make_quadratic_suite(3, 4, centers)
    x0 = np.random.default_rng(3).standard_normal((4, 3))
    W = ring4_metropolis.w
    eta = 0.2

    state = SwarmState.initial(x0)
    x, s, g_prev = x0.copy(), np.zeros_like(x0), np.zeros_like(x0)
    for t in range(1, 31):
        state = alg2_step(state, suite, ring4_metropolis, eta=eta, u=1.0 / t)
        g = x - centers
        s = W @ (s + g - g_prev)
        x = W @ (x - eta * s)
        g_prev = g
        np.testing.assert_allclose(state.x, x, atol=1e-12)


def test_alg2_mean_stays_at_minimizer(ring4_metropolis, rng):
    suite = make_quadratic_suite(2, 4, rng.standard_normal((4, 2)))
    x0 = np.tile(suite.minimizer(), (4, 1))
    trace_state = SwarmState.initial(x0)
    for t in range(1, 50):
        trace_state = alg2_step(trace_state, suite, ring4_metropolis, eta=0.2, u=0.7)
        assert np.max(np.abs(trace_state.x_bar - suite.minimizer())) <= 1e-10


def test_alg2_identical_agents_stay_at_consensus(ring4_metropolis):
    suite = make_quadratic_suite(2, 4, np.tile([1.0, -1.0], (4, 1)))
    x0 = np.tile([3.0, 0.5], (4, 1))
    trace = run('alg2', suite, ring4_metropolis, _constant_step(0.2), T=30, seed=0, x0=x0)
    assert np.all(trace.column('consensus_err') <= 1e-20)


def test_hybrid_in_one_dimension_coincides_with_alg2(ring4_metropolis, rng):
    suite = make_quadratic_suite(1, 4, rng.standard_normal((4, 1)))
    x0 = rng.standard_normal((4, 1))
    alg2 = run('alg2', suite, ring4_metropolis, _constant_step(0.1), T=25, seed=8, x0=x0)
    hybrid = run('hybrid', suite, ring4_metropolis, _constant_step(0.1), T=25, seed=8, x0=x0)
    np.testing.assert_allclose(hybrid.column('f_bar'), alg2.column('f_bar'), rtol=1e-12)
    np.testing.assert_allclose(hybrid.column('track_err')[1:], alg2.column('track_err')[1:],
                               rtol=1e-9, atol=1e-14)


def test_hybrid_constant_objectives_collapse_to_means(ring4_metropolis, rng):
    x0 = rng.standard_normal((4, 2))
    state = SwarmState.initial(x0)
    for _ in range(60):
        state = hybrid_step(state, ConstantSuite(2, 4), ring4_metropolis, eta=0.1, u=0.5, seed=4)
    np.testing.assert_allclose(state.x, np.tile(x0.mean(axis=0), (4, 1)), atol=1e-12)
    np.testing.assert_allclose(state.s, 0.0, atol=1e-12)
    assert state.m == 120


def test_run_rejects_zero_iterations(ring4_metropolis, quadratic_suite):
    suite = make_quadratic_suite(3, 4, quadratic_suite.centers[:4])
    with pytest.raises(InvalidSizeError):
        run('alg1', suite, ring4_metropolis, _constant_step(), T=0, seed=0)


@pytest.mark.parametrize('kernel', ['alg1', 'alg2', 'hybrid'])
def test_run_is_deterministic_and_counts_queries(kernel, ring4_metropolis):
    suite = make_benchmark_instance(3, 4, np.random.default_rng(5))
    first = run(kernel, suite, ring4_metropolis, _constant_step(0.05), T=15, seed=21)
    second = run(kernel, suite, ring4_metropolis, _constant_step(0.05), T=15, seed=21)
    assert [row.to_dict() for row in first.rows] == [row.to_dict() for row in second.rows]

    per_iteration = queries_per_iteration(kernel, 3)
    assert [row.t for row in first.rows] == list(range(16))
    assert [row.m for row in first.rows] == [per_iteration * t for t in range(16)]
    assert first.rows[0].eta_t is None and first.rows[0].track_err is None
    if kernel == 'alg1':
        assert all(row.track_err is None for row in first.rows)
    else:
        assert all(row.track_err is not None for row in first.rows[1:])


def test_tracking_identities_hold_on_benchmark_instance():
    graph = build_ring(10)
    w = metropolis_weights(graph)
    suite = make_benchmark_instance(8, 10, np.random.default_rng(17))
    schedule = schedule_manual(0.02, 0.0, 4.0, 0.75)
    for kernel in ('alg2', 'hybrid'):
        trace = run(kernel, suite, w, schedule, T=300, seed=2, check_invariants=True)
        assert len(trace) == 301


def test_tracking_identity_residuals_by_hand(ring4_metropolis, rng):
    suite = make_quadratic_suite(2, 4, rng.standard_normal((4, 2)))
    previous = SwarmState.initial(rng.standard_normal((4, 2)))
    current = alg2_step(previous, suite, ring4_metropolis, eta=0.3, u=0.1)
    track, descent = tracking_identity_residuals(previous, current, 0.3)
    assert track <= 1e-12 and descent <= 1e-12


def test_divergence_attaches_partial_trace(ring4_metropolis, rng):
    # Huge iterates with a comparable radius keep the differences exact until f overflows
    suite = make_quadratic_suite(2, 4, rng.standard_normal((4, 2)))
    x0 = 1e150 * rng.standard_normal((4, 2))
    with pytest.raises(DivergenceError) as excinfo:
        run('alg2', suite, ring4_metropolis, _constant_step(5.0, u0=1e149, u_power=0.0), T=50, seed=0,
            x0=x0)
    error = excinfo.value
    assert error.partial_trace is not None
    assert len(error.partial_trace) >= 1
    assert 0 <= error.agent < 4
    assert error.iteration == error.partial_trace.last.t + 1
    assert all(np.isfinite(error.partial_trace.column('f_bar')))


def test_non_finite_start_diverges_at_iteration_zero(ring4_metropolis):
    suite = make_quadratic_suite(2, 4, np.zeros((4, 2)))
    with pytest.raises(DivergenceError) as excinfo:
        run('alg2', suite, ring4_metropolis, _constant_step(), T=5, seed=0, x0=np.full((4, 2), 1e300))
    assert excinfo.value.iteration == 0
    assert len(excinfo.value.partial_trace) == 0


def test_kernels_only_query_values(ring4_metropolis, rng):
    suite = GradientFreeSuite(rng.standard_normal((4, 3)))
    state = SwarmState.initial(rng.standard_normal((4, 3)))
    schedule = _constant_step(0.1)

    state = alg1_step(state, suite, ring4_metropolis, schedule, seed=0)
    state = alg2_step(state, suite, ring4_metropolis, eta=0.1, u=0.5)
    state = hybrid_step(state, suite, ring4_metropolis, eta=0.1, u=0.5, seed=0)

    assert state.t == 3
    assert state.m == 2 + 2 * 3 + 2


@pytest.mark.parametrize('kernel', ['alg1', 'alg2', 'hybrid'])
def test_query_count_is_checked_every_iteration(kernel, ring4_metropolis, rng):
    suite = LinearSuite(rng.standard_normal((4, 5)))
    trace = run(kernel, suite, ring4_metropolis, _constant_step(0.05), T=10, seed=3,
                check_invariants=True)
    assert trace.last.m == 10 * queries_per_iteration(kernel, 5)


class TestLinearObjectives:
    """Tracking on linear f_i = g_i^T x: exact estimates let the residual vanish, random ones do not."""

    d, n, T = 8, 4, 400

    @pytest.fixture
    def suite(self):
        return LinearSuite(np.random.default_rng(12).standard_normal((self.n, self.d)))

    @pytest.fixture
    def x0(self):
        return np.random.default_rng(13).standard_normal((self.n, self.d))

    def _late_mean(self, trace):
        return float(np.mean(trace.column('track_err')[-self.T // 5:]))

    def test_alg2_tracking_error_vanishes(self, suite, x0, ring4_metropolis):
        trace = run('alg2', suite, ring4_metropolis, _constant_step(0.05), T=self.T, seed=1, x0=x0)
        assert self._late_mean(trace) <= 1e-12

    def test_hybrid_tracking_error_stays_at_a_constant_level(self, suite, x0, ring4_metropolis):
        trace = run('hybrid', suite, ring4_metropolis, _constant_step(0.05), T=self.T, seed=1, x0=x0)
        track = trace.column('track_err')[1:]

        # mean(s(t)) is the mean of fresh estimates, so E track_err >= (d-1) sum ||g_i||^2 / n^2
        floor = (self.d - 1) * float(np.sum(suite.slopes ** 2)) / self.n ** 2
        assert self._late_mean(trace) >= 0.1 * floor
        assert self._late_mean(trace) >= 0.1 * float(np.mean(track[:self.T // 5]))

    def test_hybrid_estimates_have_second_moment_d_times_gradient_norm(self, suite, x0,
                                                                      ring4_metropolis):
        state = SwarmState.initial(x0)
        ratios = []
        for _ in range(self.T):
            state = hybrid_step(state, suite, ring4_metropolis, eta=0.05, u=0.5, seed=1)
            ratios.extend(np.sum(state.g_prev ** 2, axis=1) / np.sum(suite.slopes ** 2, axis=1))
        ratios = np.array(ratios)

        stderr = ratios.std(ddof=1) / math.sqrt(ratios.size)
        assert abs(ratios.mean() - self.d) <= 5 * stderr
