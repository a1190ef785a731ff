import math

import numpy as np
import pytest

from models.trace import Trace, TraceRow, Verdict
from processors.algorithms import run
from processors.network import build_ring, lazy_metropolis_weights, metropolis_weights
from processors.objectives import make_quadratic_suite
from processors.schedules import schedule_manual, schedule_theorem3, schedule_theorem4
from processors.verification import (evaluate_theorem3_bound, evaluate_theorem4_rate,
                                     verify_contraction, verify_estimator_bias,
                                     verify_gradient_upper_bound, verify_hybrid_nonvanishing,
                                     verify_lemma1, verify_qualitative_decrease, verify_rho_ceiling,
                                     verify_second_moment_ceiling, verify_smoothed_gradient_mc,
                                     verify_sphere_moments)
from utils.exceptions import NotApplicableError


def _trace(kernel, f_bar=None, grad=None, consensus=None, track=None, T=10):
    """Synthetic trace with rows t = 0..T from per-t callables."""
    trace = Trace(kernel=kernel)
    for t in range(T + 1):
        trace.append(TraceRow(
            t=t, m=2 * t,
            f_bar=f_bar(t) if f_bar else 1.0,
            grad_norm_sq=grad(t) if grad else 1.0,
            consensus_err=consensus(t) if consensus else 1.0,
            track_err=track(t) if track and t > 0 else None,
        ))
    return trace


def test_lemma1_passes_for_a_coordinate_gradient():
    g = np.zeros(16)
    g[0] = 1.0
    report = verify_lemma1(16, g, 100_000, np.random.default_rng(1))

    assert report.verdict == Verdict.PASS
    assert report.expected['mean_sq_norm'] == pytest.approx(16.0)
    assert report.expected['mean_sq_deviation'] == pytest.approx(15.0)


def test_lemma1_in_one_dimension_has_no_deviation():
    report = verify_lemma1(1, np.array([1.0]), 10_000, np.random.default_rng(2))

    assert report.verdict == Verdict.PASS
    assert report.measured['mean_sq_norm'] == pytest.approx(1.0)
    assert report.measured['mean_sq_deviation'] == pytest.approx(0.0, abs=1e-20)


def test_lemma1_with_zero_gradient_passes():
    report = verify_lemma1(4, np.zeros(4), 10_000, np.random.default_rng(3))
    assert report.verdict == Verdict.PASS
    assert report.measured['mean_sq_norm'] == 0.0


def test_lemma1_rejects_small_sample_counts_and_bad_shapes():
    with pytest.raises(ValueError):
        verify_lemma1(3, np.ones(3), 999, np.random.default_rng(0))
    with pytest.raises(ValueError):
        verify_lemma1(3, np.ones(2), 10_000, np.random.default_rng(0))


def test_sphere_moments_pass():
    report = verify_sphere_moments(3, 20_000, np.random.default_rng(4))
    assert report.verdict == Verdict.PASS
    assert report.measured['projection_identity'] is True


def test_smoothed_gradient_of_linear_function_matches_gradient():
    report = verify_smoothed_gradient_mc(np.array([1.0, -2.0, 0.5]), 20_000, np.random.default_rng(5))
    assert report.verdict == Verdict.PASS
    assert len(report.measured['mean']) == 3


def test_bias_on_cubic_is_u_squared_and_quarters_when_u_halves():
    report = verify_estimator_bias(lambda x: float(x[0] ** 3), lambda x: 3.0 * x ** 2,
                                   np.array([1.0]), (0.1, 0.05), L=12.0, name='cubic')

    assert report.verdict == Verdict.PASS
    first, second = report.measured['error']
    assert first == pytest.approx(0.01, rel=1e-6)
    assert second == pytest.approx(first / 4.0, rel=1e-6)
    assert report.expected['error'] == pytest.approx([0.6, 0.3])


def test_bias_on_quadratic_is_exact():
    A = np.diag([1.0, 2.0, 3.0, 4.0])
    report = verify_estimator_bias(lambda x: float(0.5 * x @ A @ x), lambda x: A @ x,
                                   np.array([0.3, -0.2, 1.0, 0.5]), (1.0, 0.1, 0.01), L=4.0)
    assert report.verdict == Verdict.PASS
    assert max(report.measured['error']) < 1e-10


def test_bias_fails_when_the_constant_is_too_small():
    report = verify_estimator_bias(lambda x: float(x[0] ** 3), lambda x: 3.0 * x ** 2,
                                   np.array([1.0]), (0.1,), L=0.01)
    assert report.verdict == Verdict.FAIL


def test_second_moment_ceiling_on_cos_sum():
    x = np.random.default_rng(6).standard_normal(8)
    report = verify_second_moment_ceiling(lambda y: float(np.sum(np.cos(y))), -np.sin(x), x,
                                          u=0.1, L=1.0, samples=20_000, rng=np.random.default_rng(7))
    assert report.verdict == Verdict.PASS


def test_gradient_bounds_hold_on_quadratic(quadratic_suite):
    points = np.random.default_rng(8).standard_normal((10, 3)) * 3.0
    assert verify_gradient_upper_bound(quadratic_suite, points).verdict == Verdict.PASS


def test_gradient_bounds_need_known_constants(benchmark_suite):
    with pytest.raises(NotApplicableError):
        verify_gradient_upper_bound(benchmark_suite, np.zeros((1, 5)))


def test_contraction_on_ring(ring4_metropolis):
    report = verify_contraction(ring4_metropolis, np.random.default_rng(9))

    assert report.verdict == Verdict.PASS
    assert report.measured['max_ratio'] <= 1.0 / 3.0 + 1e-9
    assert report.measured['max_mean_shift'] <= 1e-12


def test_rho_ceiling_applies_to_lazy_weights_only(ring4):
    report = verify_rho_ceiling(lazy_metropolis_weights(ring4))
    assert report.verdict == Verdict.PASS
    assert report.measured['rho'] == pytest.approx(2.0 / 3.0)

    with pytest.raises(NotApplicableError):
        verify_rho_ceiling(metropolis_weights(ring4))


class TestTheorem3Bound:
    @pytest.fixture
    def setting(self):
        centers = np.random.default_rng(10).standard_normal((4, 2))
        suite = make_quadratic_suite(2, 4, centers)
        w = metropolis_weights(build_ring(4))
        return suite, w

    def test_bound_holds_on_small_quadratic(self, setting):
        suite, w = setting
        schedule = schedule_theorem3(suite.L, w.rho, u0=0.1, u_power=1.0)
        trace = run('alg2', suite, w, schedule, T=200, seed=3)

        reports = evaluate_theorem3_bound(trace, suite, w, schedule)

        assert [r.name for r in reports] == ['theorem3-gradient', 'theorem3-consensus', 'theorem3-tracking']
        assert all(r.verdict == Verdict.PASS for r in reports)
        assert all(r.margin >= 0 for r in reports)
        assert reports[0].constants['eta'] == pytest.approx(1.0 / 6.0)
        assert len(reports[0].lhs) == 200

    def test_large_manual_step_is_not_covered(self, setting):
        suite, w = setting
        schedule = schedule_manual(0.5, 0.0, 0.1, 1.0)
        trace = run('alg2', suite, w, schedule, T=20, seed=3)

        reports = evaluate_theorem3_bound(trace, suite, w, schedule)

        assert len(reports) == 3
        assert all(r.verdict == Verdict.NOT_COVERED for r in reports)
        assert 'eta L = 0.5' in reports[0].notes[0]

    def test_other_kernels_are_not_applicable(self, setting):
        suite, w = setting
        schedule = schedule_theorem3(suite.L, w.rho, u0=0.1)
        trace = run('hybrid', suite, w, schedule, T=5, seed=3)
        with pytest.raises(NotApplicableError):
            evaluate_theorem3_bound(trace, suite, w, schedule)


def test_theorem4_rate_passes_on_quadratic():
    centers = np.random.default_rng(11).standard_normal((4, 2))
    suite = make_quadratic_suite(2, 4, centers)
    w = metropolis_weights(build_ring(4))
    schedule = schedule_theorem4(suite.mu, suite.L, w.rho, alpha=1.0, u1=1.0)
    trace = run('alg2', suite, w, schedule, T=400, seed=5)

    report = evaluate_theorem4_rate(trace, schedule.params['lambda'], suite.f_star)

    assert report.verdict == Verdict.PASS
    assert report.measured['slope'] < math.log(schedule.params['lambda'])


def test_theorem4_rate_fails_for_slow_decay():
    trace = _trace('alg2', f_bar=lambda t: 2.0 + 0.99 ** t, T=200)
    report = evaluate_theorem4_rate(trace, lam=0.9, f_star=2.0)
    assert report.verdict == Verdict.FAIL
    assert report.measured['slope'] == pytest.approx(math.log(0.99), rel=1e-6)


def test_theorem4_rate_converged_at_start():
    trace = _trace('alg2', f_bar=lambda t: 1.0, T=5)
    report = evaluate_theorem4_rate(trace, lam=0.9, f_star=1.0)
    assert report.verdict == Verdict.PASS
    assert report.notes == ['converged at start']


def test_theorem4_rate_shrinks_window_at_the_floor():
    trace = _trace('alg2', f_bar=lambda t: 0.5 ** t, T=100)
    report = evaluate_theorem4_rate(trace, lam=0.9, f_star=0.0)
    assert report.verdict == Verdict.PASS
    assert any('numerical floor' in note for note in report.notes)


class TestHybridNonvanishing:
    def test_short_runs_are_not_applicable(self):
        with pytest.raises(NotApplicableError):
            verify_hybrid_nonvanishing(_trace('alg2', track=lambda t: 1.0),
                                       _trace('hybrid', track=lambda t: 1.0))

    def test_one_dimension_is_inconclusive(self):
        report = verify_hybrid_nonvanishing(_trace('alg2', track=lambda t: 1.0, T=500),
                                            _trace('hybrid', track=lambda t: 1.0, T=500), d=1)
        assert report.verdict == Verdict.INCONCLUSIVE

    def test_persistent_hybrid_error_passes(self):
        report = verify_hybrid_nonvanishing(_trace('alg2', track=lambda t: 10.0 * 0.98 ** t, T=500),
                                            _trace('hybrid', track=lambda t: 1.0, T=500), d=4)
        assert report.verdict == Verdict.PASS
        assert report.measured['hybrid_last_over_first'] == pytest.approx(1.0)

    def test_vanishing_hybrid_error_fails(self):
        report = verify_hybrid_nonvanishing(_trace('alg2', track=lambda t: 10.0 * 0.98 ** t, T=500),
                                            _trace('hybrid', track=lambda t: 0.98 ** t, T=500), d=4)
        assert report.verdict == Verdict.FAIL

    def test_kernels_must_match_roles(self):
        with pytest.raises(NotApplicableError):
            verify_hybrid_nonvanishing(_trace('hybrid', T=500), _trace('alg2', T=500))


class TestQualitativeDecrease:
    def test_decreasing_trace_passes(self):
        trace = _trace('alg2', grad=lambda t: 1.0 / (1 + t), consensus=lambda t: 0.9 ** t, T=100)
        report = verify_qualitative_decrease(trace)
        assert report.verdict == Verdict.PASS
        assert 'scaled_consensus_max' not in report.measured

    def test_flat_trace_fails(self):
        assert verify_qualitative_decrease(_trace('alg2', T=100)).verdict == Verdict.FAIL

    def test_two_point_kernel_reports_scaled_consensus(self):
        trace = _trace('alg1', grad=lambda t: 1.0 / (1 + t), consensus=lambda t: 1.0 / (1 + t) ** 2,
                       T=100)
        report = verify_qualitative_decrease(trace)
        assert report.verdict == Verdict.PASS
        assert report.measured['scaled_consensus_max'] == pytest.approx(51.0 / 52.0 ** 2)

    def test_short_trace_is_not_applicable(self):
        with pytest.raises(NotApplicableError):
            verify_qualitative_decrease(_trace('alg2', T=1))
