"""Adaptive Gauss-Kronrod engine, delta collapse and ε-ladder extrapolation."""

import math

import numpy as np
import pytest

from relchannel.core.correlators import CommutatorSupport, Regulator
from relchannel.core.quadrature import (
    GAUSS_WEIGHTS,
    KRONROD_WEIGHTS,
    NODES,
    Constraint,
    IntegralResult,
    QuadraturePolicy,
    collapse_delta,
    extrapolate_ladder,
    integrate_box,
    integrate_reduction,
    integrate_simplex,
    ladder_limit,
    ordered_integrand,
    _adaptive,
    quad_checked,
)
from relchannel.errors import ConfigError, ConvergenceError

TIGHT = QuadraturePolicy(rel_tol=1e-11, abs_floor=1e-14)


def ones(times):
    return np.ones(times.shape[1])


def test_rule_weights():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-14)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(NODES, -NODES[::-1])


@pytest.mark.parametrize("degree", [0, 5, 13, 22])
def test_kronrod_polynomial_exactness(degree):
    # the 15-point Kronrod rule is exact through degree 22
    assert KRONROD_WEIGHTS @ NODES ** degree == pytest.approx(2.0 / (degree + 1) if degree % 2 == 0 else 0.0, abs=1e-13)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_simplex_volume(k):
    result = integrate_simplex(ones, k, (0.0, 2.0), TIGHT)
    assert result.value == pytest.approx(2.0 ** k / math.factorial(k), rel=1e-10)


def test_oscillatory_closed_form():
    T = 6.0
    result = integrate_simplex(lambda t: np.exp(1j * (t[0] - t[1])), 2, (0.0, T), TIGHT, frequency=1.0)
    expected = 1.0 - np.exp(1j * T) + 1j * T
    assert abs(result.value - expected) < 1e-9


def test_box_is_twice_symmetric_simplex():
    f = lambda t: np.exp(-(t[0] ** 2 + t[1] ** 2))
    box = integrate_box(f, 2, (0.0, 1.5), TIGHT)
    simplex = integrate_simplex(f, 2, (0.0, 1.5), TIGHT)
    assert box.value == pytest.approx(2.0 * simplex.value, rel=1e-10)
    one_d = quad_checked(lambda x: math.exp(-x * x), 0.0, 1.5)[0]
    assert box.value.real == pytest.approx(one_d ** 2, rel=1e-10)


def test_vector_valued_integrand():
    scales = np.array([1.0, 2.0, 3.0])[:, None]
    result = integrate_simplex(lambda t: scales * np.ones(t.shape[1]), 2, (0.0, 1.0), TIGHT)
    assert np.allclose(result.value, [0.5, 1.0, 1.5], rtol=1e-10)


def test_error_estimate_reported():
    result = integrate_simplex(lambda t: np.cos(3 * t[0]), 1, (0.0, 1.0))
    assert result.value.real == pytest.approx(math.sin(3.0) / 3.0, rel=1e-6)
    assert 0.0 <= result.error < 1e-6
    assert result.evaluations > 0


def test_subdivision_budget():
    policy = QuadraturePolicy(rel_tol=1e-14, abs_floor=1e-300, max_subdivisions=2)
    with pytest.raises(ConvergenceError) as info:
        integrate_simplex(lambda t: np.abs(t[0] - 0.3123) ** 0.5, 1, (0.0, 1.0), policy)
    assert info.value.value is not None


def test_inner_error_does_not_drive_bisection():
    # a constant integrand whose inner levels report error far above tolerance
    def evaluate(x):
        return np.ones((1, x.size)), np.full(x.size, 1e-3), x.size

    policy = QuadraturePolicy(rel_tol=1e-6, max_subdivisions=2)
    total, error, evaluations = _adaptive(evaluate, 0.0, 2.0, [], policy)
    assert total[0] == pytest.approx(2.0, rel=1e-14)
    assert error == pytest.approx(2e-3, rel=1e-9)
    assert evaluations == 15


def test_four_dimensional_box_converges_at_default_policy():
    f = lambda t: np.exp(-(t ** 2).sum(axis=0))
    result = integrate_box(f, 4, (0.0, 1.0))
    one_d = 0.5 * math.sqrt(math.pi) * math.erf(1.0)
    assert result.value.real == pytest.approx(one_d ** 4, rel=1e-6)
    assert result.error < 2e-6 * one_d ** 4


def test_collapse_delta_single_locus():
    support = CommutatorSupport(0.5)
    base = ordered_integrand(ones, 2, (0.0, 2.0))
    reduction = collapse_delta(base, support, axis=0, partner=1, axis_first=True)
    # t0 >= t1 keeps only dt = +r
    assert len(reduction.branches) == 1
    result = integrate_reduction(reduction, TIGHT)
    assert result.value == pytest.approx(-1j * 1.5 / (2.0 * math.pi), rel=1e-12)


def test_collapse_delta_outside_window():
    base = ordered_integrand(ones, 2, (0.0, 1.0))
    reduction = collapse_delta(base, CommutatorSupport(2.0), axis=0, partner=1)
    assert integrate_reduction(reduction, TIGHT).value == pytest.approx(0.0, abs=1e-15)


def test_collapse_delta_matches_shifted_integral():
    support = CommutatorSupport(0.7)
    f = lambda t: np.sin(t[0]) * np.exp(-t[1])
    base = ordered_integrand(f, 2, (0.0, 3.0))
    collapsed = integrate_reduction(collapse_delta(base, support, 0, 1), TIGHT)
    direct = quad_checked(lambda s: math.sin(s + 0.7) * math.exp(-s), 0.0, 2.3)[0]
    assert collapsed.value == pytest.approx(support.weights[0] * direct, rel=1e-10)


def test_collapse_rejects_pinned_axis():
    base = ordered_integrand(ones, 2, (0.0, 1.0))
    once = collapse_delta(base, CommutatorSupport(0.1), 0, 1).branches[0]
    with pytest.raises(ValueError):
        collapse_delta(once, CommutatorSupport(0.1), 0, 1)


def test_singular_line_resolved():
    lines = (Constraint(0, 1, 0.25),)
    f = lambda t: 1.0 / ((t[0] - t[1] - 0.25) ** 2 + 1e-4)
    result = integrate_simplex(f, 2, (0.0, 1.0), QuadraturePolicy(rel_tol=1e-8), singular=lines)
    # u = t0 - t1 reduces the simplex integral to one dimension with weight (1 - u)
    expected = quad_checked(lambda u: (1.0 - u) / ((u - 0.25) ** 2 + 1e-4), 0.0, 1.0, points=[0.25], limit=200)[0]
    assert result.value.real == pytest.approx(expected, rel=1e-6)


def test_ladder_recovers_polynomial_intercept():
    a, b, c = 1.7, -3.0, 11.0
    eps = [0.1 * 0.5 ** j for j in range(8)]
    value, residual = extrapolate_ladder([(e, a + b * e + c * e * e) for e in eps], order=3)
    assert abs(value - a) < 1e-10
    assert residual < 1e-10


def test_ladder_complex_values():
    eps = [0.2 * 0.5 ** j for j in range(6)]
    value, _ = extrapolate_ladder([(e, (2 - 1j) + 4j * e) for e in eps])
    assert abs(value - (2 - 1j)) < 1e-12


def test_ladder_divergence_detected():
    eps = [0.1 * 0.5 ** j for j in range(6)]
    with pytest.raises(ConvergenceError) as info:
        extrapolate_ladder([(e, 1.0 / e) for e in eps])
    assert "divergent" in str(info.value)
    assert len(info.value.rungs) == 6


def test_ladder_input_validation():
    with pytest.raises(ValueError):
        extrapolate_ladder([(0.1, 1.0), (0.05, 1.0)])
    with pytest.raises(ValueError):
        extrapolate_ladder([(0.1, 1.0), (0.2, 1.0), (0.05, 1.0)])


def test_ladder_limit_keeps_error_bookkeeping():
    reg = Regulator.halving(0.1, 6, 3)
    rungs = np.array([2.0 + e for e in reg.ladder])
    result = ladder_limit(IntegralResult(value=rungs, error=1e-9, evaluations=10), reg)
    assert result.value == pytest.approx(2.0, abs=1e-12)
    assert result.error == 1e-9
    assert len(result.rungs) == 6


def test_policy_validation_and_regulator():
    with pytest.raises(ConfigError):
        QuadraturePolicy(rel_tol=0.0)
    with pytest.raises(ConfigError):
        QuadraturePolicy(eps_rungs=2)
    reg = QuadraturePolicy(eps_start=0.2, eps_rungs=4).regulator(0.5)
    assert reg.ladder == pytest.approx((0.1, 0.05, 0.025, 0.0125))
    tight = QuadraturePolicy().tightened(0.1)
    assert tight.rel_tol == pytest.approx(1e-7)


def test_integral_result_arithmetic():
    total = IntegralResult(1.0, 0.1, warnings=("a",)) + IntegralResult(2j, 0.2, warnings=("b",))
    assert total.value == 1 + 2j
    assert total.error == pytest.approx(0.3)
    assert total.warnings == ("a", "b")
    assert total.scaled(-2).error == pytest.approx(0.6)
