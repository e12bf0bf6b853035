"""Adaptive quadrature: exactness, singular endpoints, half-line tails."""
import math

import numpy as np
import pytest

from fraclef.quadrature import (
    QuadratureError,
    QuadSpec,
    integrate_adaptive,
    integrate_endpoint_singular,
    integrate_semiinfinite,
)


def _check(res, expected, rel=1e-9, abs_=0.0):
    assert res.converged
    assert res.value == pytest.approx(expected, rel=rel, abs=abs_)
    # Advertised error bound must cover the actual error (with slack for the
    # reference itself).
    assert abs(res.value - expected) <= 10.0 * res.err_est + 1e-12 + rel * abs(expected)


def test_polynomial_single_panel():
    res = integrate_adaptive(lambda x: x**10, 0.0, 1.0)
    assert res.evals == 15  # GK15 is exact through degree 22
    _check(res, 1.0 / 11.0, rel=1e-13)


def test_smooth_oscillatory():
    res = integrate_adaptive(np.cos, 0.0, 20.0)
    _check(res, math.sin(20.0), rel=1e-9, abs_=1e-11)


def test_narrow_peak():
    a = 0.01
    res = integrate_adaptive(lambda x: 1.0 / (a**2 + x**2), -1.0, 1.0)
    _check(res, 2.0 * math.atan(1.0 / a) / a)


def test_converged_flag_honors_tolerance():
    spec = QuadSpec(rel_tol=1e-9, abs_tol=1e-12)
    res = integrate_adaptive(lambda x: np.exp(-x) * np.sin(3 * x), 0.0, 5.0, spec)
    assert res.converged
    assert res.err_est <= max(spec.rel_tol * abs(res.value), spec.abs_tol)


def test_endpoint_power_left():
    res = integrate_endpoint_singular(lambda t: t**-0.9, 0.0, 1.0, pow_a=-0.9)
    _check(res, 10.0)


def test_endpoint_power_right():
    res = integrate_endpoint_singular(lambda t: (1.0 - t) ** -0.5, 0.0, 1.0,
                                      pow_b=-0.5)
    _check(res, 2.0)


def test_endpoint_power_both():
    # Beta(1/2, 2/3): singular at both ends.
    res = integrate_endpoint_singular(
        lambda t: t**-0.5 * (1.0 - t) ** (-1.0 / 3.0), 0.0, 1.0,
        pow_a=-0.5, pow_b=-1.0 / 3.0)
    expected = math.gamma(0.5) * math.gamma(2.0 / 3.0) / math.gamma(7.0 / 6.0)
    _check(res, expected)


def test_log_singularity():
    # Logarithms are weaker than any declared power; a mild map suffices.
    res = integrate_endpoint_singular(lambda t: np.log(t), 0.0, 1.0, pow_a=-0.5)
    _check(res, -1.0)


def test_fractional_kink_positive_power():
    # Bounded but non-C^1 integrand: declaring the kink power smooths it.
    res = integrate_endpoint_singular(lambda t: t**0.3, 0.0, 1.0, pow_a=0.3)
    _check(res, 1.0 / 1.3, rel=1e-10)


def test_unmapped_strong_singularity_fails_honestly():
    # Without the endpoint map the bisection chain cannot reach the mass of
    # t^{-0.9} near 0 at rel_tol 1e-9; the result must say so.
    res = integrate_adaptive(lambda t: t**-0.9, 1e-300, 1.0,
                             QuadSpec(max_depth=30))
    assert not res.converged


def test_semiinfinite_quadratic_decay():
    res = integrate_semiinfinite(lambda y: y**-2.0, 1.0, decay=2.0)
    _check(res, 1.0)


def test_semiinfinite_slow_decay():
    res = integrate_semiinfinite(lambda y: y**-1.5, 4.0, decay=1.5)
    _check(res, 2.0 * 4.0**-0.5)


def test_semiinfinite_exponential():
    res = integrate_semiinfinite(lambda y: np.exp(-y), 1.0, decay=3.0)
    _check(res, math.exp(-1.0))


def test_domain_errors():
    with pytest.raises(ValueError):
        integrate_endpoint_singular(lambda t: t, 0.0, 1.0, pow_a=-1.0)
    with pytest.raises(ValueError):
        integrate_endpoint_singular(lambda t: t, 0.0, 1.0, pow_b=-1.5)
    with pytest.raises(ValueError):
        integrate_semiinfinite(lambda y: y**-2.0, 0.0, decay=2.0)
    with pytest.raises(ValueError):
        integrate_semiinfinite(lambda y: y**-2.0, 1.0, decay=1.0)
    with pytest.raises(QuadratureError):
        integrate_adaptive(lambda x: x, 1.0, 0.0)


def test_nonfinite_integrand_reports_abscissa():
    def f(x):
        return np.where(x > 0.5, np.inf, 1.0)

    with pytest.raises(QuadratureError) as exc:
        integrate_adaptive(f, 0.0, 1.0)
    assert exc.value.abscissa is not None
    assert exc.value.abscissa > 0.5


def test_scalar_only_callable_fallback():
    res = integrate_adaptive(lambda x: math.exp(-x * x), -2.0, 2.0)
    _check(res, math.sqrt(math.pi) * math.erf(2.0))


def test_eval_budget_respected():
    spec = QuadSpec(rel_tol=1e-15, abs_tol=0.0, max_evals=600)
    res = integrate_adaptive(lambda t: np.abs(t - 1 / 3.0) ** 0.5, 0.0, 1.0, spec)
    assert res.evals <= 600


def test_random_powers_sweep():
    rng = np.random.default_rng(20260819)
    for _ in range(25):
        p = float(rng.uniform(-0.95, 0.9))
        if abs(p) < 1e-3:
            continue
        res = integrate_endpoint_singular(lambda t, p=p: t**p, 0.0, 1.0, pow_a=p)
        assert res.converged
        assert res.value == pytest.approx(1.0 / (1.0 + p), rel=5e-9)
