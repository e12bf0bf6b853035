"""Regime classification, K_beta, and the kernel PV oracles.

Frozen reference values were produced during development by an independent
adaptive quadrature stack (different integrator, different endpoint handling)
and agree with the in-package kernel PV oracle to ~1e-9 or better; the
comments on each say which route produced them.
"""
import math

import numpy as np
import pytest

from fraclef.homogeneous import (
    FracParams,
    Regime,
    classify_regime,
    homogeneous_solution,
    k_beta,
    pv_compact_support,
    pv_oracle_power,
    scaling_exponents,
)
from fraclef.special import getoor_constant


def test_classify_regime_window():
    p = classify_regime(0.5, 0.0, 2.0)
    assert p.regime is Regime.EXISTS
    assert p.beta == pytest.approx(1.0 / 3.0, rel=1e-15)
    # Window is open: both edges classify as nonexistence.
    assert classify_regime(0.5, -1.0, 2.0).regime is Regime.NO_SOLUTION_ALPHA_LOW
    assert classify_regime(0.5, 0.5, 2.0).regime is Regime.NO_SOLUTION_ALPHA_HIGH
    assert classify_regime(0.5, -1.2, 1.0).regime is Regime.NO_SOLUTION_ALPHA_LOW
    assert classify_regime(0.5, 2.0, 1.5).regime is Regime.NO_SOLUTION_ALPHA_HIGH
    assert classify_regime(0.5, -0.999, 2.0).regime is Regime.EXISTS
    assert classify_regime(0.5, 0.499, 2.0).regime is Regime.EXISTS


def test_classify_regime_validation():
    for s in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            classify_regime(s, 0.0, 2.0)
    with pytest.raises(ValueError):
        classify_regime(0.5, 0.0, 0.5)
    with pytest.raises(ValueError):
        classify_regime(0.5, math.inf, 2.0)


def test_regime_implies_beta_window():
    rng = np.random.default_rng(7)
    for _ in range(200):
        s = float(rng.uniform(0.05, 0.95))
        g = float(rng.uniform(1.0, 6.0))
        a = float(rng.uniform(-2.0 * s, (g - 1.0) * s))
        p = classify_regime(s, a, g)
        if p.regime is Regime.EXISTS:
            assert 0.0 < p.beta < s


# Frozen during development from an independent adaptive-quadrature run of
# the defining integral; the in-package kernel PV oracle reproduces each to
# better than 3e-12 (see test_k_beta_cross_oracle).
_KBETA_FROZEN = [
    (0.5, 1.0 / 3.0, 0.1924500897),
    (0.25, 0.15, 0.2336773706),
    (0.75, 0.975, -0.3457800821),
]


def test_k_beta_frozen_values():
    for s, b, ref in _KBETA_FROZEN:
        assert k_beta(s, b) == pytest.approx(ref, abs=3e-9)


def test_k_beta_sign_trichotomy():
    # sign(K_beta) = sign(s - beta); at beta = s the integrand vanishes
    # identically and the value is exactly zero.
    assert k_beta(0.5, 0.5) == 0.0
    assert k_beta(0.25, 0.25) == 0.0
    for s in (0.25, 0.5, 0.75):
        assert k_beta(s, 0.4 * s) > 0.0
        assert k_beta(s, 1.6 * s) < 0.0


def test_k_beta_domain():
    for s, b in [(0.5, 0.0), (0.5, 1.0), (0.5, -0.1), (0.25, 0.6)]:
        with pytest.raises(ValueError):
            k_beta(s, b)


def test_k_beta_cross_oracle():
    # Dual route: integral representation vs direct kernel PV at t = 1.
    for s, b in [(0.5, 0.25), (0.25, 0.15), (0.75, 0.975)]:
        kb = k_beta(s, b)
        pv = pv_oracle_power(s, b, 1.0)
        assert abs(kb - pv) <= 1e-9 * max(abs(kb), 1e-8)


def test_pv_oracle_homogeneity():
    # (-Delta)^s t^beta = K_beta t^{beta-2s}: the oracle at t != 1 must scale.
    s, b = 0.5, 0.25
    t = 0.7
    assert pv_oracle_power(s, b, t) * t ** (2 * s - b) == pytest.approx(
        k_beta(s, b), abs=1e-10)


def test_pv_oracle_domain():
    with pytest.raises(ValueError):
        pv_oracle_power(0.5, 0.25, 0.0)
    with pytest.raises(ValueError):
        pv_oracle_power(0.5, 1.5, 1.0)


def test_pv_compact_support_barrier():
    # The flat barrier (1-(t-1)^2)_+^s on (0,2): the kernel PV at the center
    # must reproduce the closed-form constant. Second-order core correction
    # leaves a ~1e-8 truncation residue, well inside tolerance.
    for s in (0.25, 0.5, 0.75):
        def f(y, s=s):
            w = y * (2.0 - y)
            return np.where((y > 0.0) & (y < 2.0), np.clip(w, 0.0, None) ** s, 0.0)

        def f2(t, s=s):
            w = 1.0 - (t - 1.0) ** 2
            return (4.0 * s * (s - 1.0) * w ** (s - 2.0) * (t - 1.0) ** 2
                    - 2.0 * s * w ** (s - 1.0))

        v = pv_compact_support(f, f2, s, 1.0, 0.0, 2.0, edge_pow=s)
        assert v == pytest.approx(getoor_constant(s), rel=1e-6)


def test_homogeneous_solution_exists():
    p = classify_regime(0.5, 0.0, 2.0)
    h = homogeneous_solution(p)
    assert h.k_beta == pytest.approx(0.1924500897, abs=3e-9)
    assert h.c0 == pytest.approx(0.1924500897 ** (-1.0 / 3.0), rel=1e-8)
    t = np.array([0.25, 1.0, 4.0])
    u = h.u0(t)
    assert u[1] == pytest.approx(h.c0, rel=1e-14)
    assert np.all(np.diff(u) > 0)
    assert h.u0(np.array([-1.0, 0.0])).tolist() == [0.0, 0.0]


def test_homogeneous_solution_refusals():
    with pytest.raises(ValueError):
        homogeneous_solution(classify_regime(0.5, 0.7, 2.0))
    # Inside the window but within the safety margin of the lower edge.
    with pytest.raises(ValueError):
        homogeneous_solution(classify_regime(0.5, -1.0 + 1e-8, 2.0))


def test_scaling_exponents():
    p = classify_regime(0.5, 0.0, 2.0)
    e_val, e_arg = scaling_exponents(p)
    assert e_val == pytest.approx(-2.0, rel=1e-14)
    assert e_arg == pytest.approx(6.0, rel=1e-14)
    with pytest.raises(ValueError):
        scaling_exponents(classify_regime(0.5, 0.5, 2.0))


def test_margin_helper():
    p = classify_regime(0.5, 0.0, 2.0)
    assert p.margin() == pytest.approx(0.5, rel=1e-14)
