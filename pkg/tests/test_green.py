"""Green kernel, dimensional reduction, and representation residuals."""
import dataclasses
import math

import numpy as np
import pytest

from fraclef.fracop import Grid
from fraclef.green import (
    Branch,
    GreenEval,
    fit_far_field,
    g1,
    gn,
    green_rhs,
    reduce_check,
    u0_green_identity,
)
from fraclef.homogeneous import classify_regime, homogeneous_solution
from fraclef.solver import (
    SolutionProfile,
    Provenance,
    continue_in_b,
    profile_interp,
    restrict_profile,
    solve_bounded,
)
from fraclef.special import cn_reduction, kappa


def test_branch_selection():
    assert GreenEval.make(1, 0.5).branch is Branch.LOGCASE
    assert GreenEval.make(1, 0.4).branch is Branch.GENERIC
    assert GreenEval.make(2, 0.5).branch is Branch.GENERIC
    with pytest.raises(ValueError):
        GreenEval.make(0, 0.5)
    with pytest.raises(ValueError):
        GreenEval.make(1, 1.0)


def test_g1_symmetry_positivity_and_key_estimate():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        s = float(rng.uniform(0.05, 0.95))
        t = float(10.0 ** rng.uniform(-2, 2))
        tau = float(10.0 ** rng.uniform(-2, 2))
        if t == tau:
            continue
        a = g1(s, t, tau)
        b = g1(s, tau, t)
        assert a > 0.0
        assert a == pytest.approx(b, rel=1e-9)
        bound = (kappa(1, s) / s) * (4.0 * t * tau) ** s
        assert a * abs(t - tau) <= bound * (1.0 + 1e-9)


def test_g1_exterior_and_diagonal():
    assert g1(0.5, -1.0, 2.0) == 0.0
    assert g1(0.3, 1.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        g1(0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        g1(1.5, 1.0, 2.0)


def test_logcase_matches_generic_limit():
    # the closed form carries the factor 2 that the generic branch's inner
    # integral produces in the s -> 1/2 limit; a wrong prefactor would show
    # up here as a 2x jump, not a 1e-3 drift
    for (t, tau) in [(1.0, 2.0), (0.3, 5.0), (4.0, 4.5)]:
        exact = g1(0.5, t, tau)
        near = g1(0.5 + 1e-4, t, tau)
        assert abs(near - exact) / exact < 1e-2


def test_gn_validation_and_zero_exterior():
    with pytest.raises(ValueError):
        gn(1, 0.5, [1.0], [2.0])
    with pytest.raises(ValueError):
        gn(2, 0.5, [1.0, 2.0, 3.0], [0.0, 1.0])
    assert gn(2, 0.5, [0.0, -1.0], [0.0, 1.0]) == 0.0
    assert gn(3, 0.75, [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]) == 0.0
    with pytest.raises(ValueError):
        gn(2, 0.5, [0.0, 1.0], [0.0, 1.0])


def test_gn_symmetry_positivity_decay():
    x = np.array([0.0, 1.0])
    vals = []
    for d in (1.0, 4.0, 16.0):
        z = np.array([d, 2.0])
        v = gn(2, 0.6, x, z)
        assert v > 0.0
        assert v == pytest.approx(gn(2, 0.6, z, x), rel=1e-9)
        vals.append(v)
    assert vals[0] > vals[1] > vals[2]


def test_reduction_identity_n2():
    lhs, rhs, rel = reduce_check(2, 0.5, 1.0, 2.0)
    assert rel <= 1e-4
    lhs, rhs, rel = reduce_check(2, 0.3, 1.0, 2.0)
    assert rel <= 1e-4
    lhs, rhs, rel = reduce_check(2, 0.5, 0.5, 3.0)
    assert rel <= 1e-4


def test_reduction_identity_n3():
    lhs, rhs, rel = reduce_check(3, 0.75, 1.0, 0.5)
    assert rel <= 1e-4
    lhs, rhs, rel = reduce_check(3, 0.5, 1.0, 2.0)
    assert rel <= 1e-4
    lhs, rhs, rel = reduce_check(3, 0.25, 2.0, 1.0)
    assert rel <= 1e-4


def test_reduction_scale_pair_homogeneity():
    # lhs(lambda xn, lambda zn) = lambda^(2s-1) lhs(xn, zn)
    l1, _, _ = reduce_check(2, 0.5, 1.0, 2.0)
    l2, _, _ = reduce_check(2, 0.5, 2.0, 4.0)
    assert l2 == pytest.approx(l1, rel=1e-8)
    l1, _, _ = reduce_check(3, 0.75, 1.0, 0.5)
    l2, _, _ = reduce_check(3, 0.75, 2.0, 1.0)
    assert l2 / l1 == pytest.approx(2.0 ** 0.5, rel=1e-8)


def test_reduction_rejects_bad_inputs():
    with pytest.raises(ValueError):
        reduce_check(4, 0.5, 1.0, 2.0)
    with pytest.raises(ValueError):
        reduce_check(2, 0.5, 1.0, 1.0)


@pytest.mark.parametrize("s,gamma,alpha", [
    (0.5, 2.0, 0.0),
    (0.25, 3.0, -0.2),
    (0.75, 2.0, 0.5),
])
def test_u0_green_identity(s, gamma, alpha):
    p = classify_regime(s, alpha, gamma)
    assert abs(u0_green_identity(p) - 1.0) <= 1e-3


def test_fit_far_field_recovers_exact_two_power_data():
    p = classify_regime(0.75, -1.0, 2.0)
    grid = Grid.make(16.0, 128, 2.0)
    t = grid.interior
    u = 1.3 * t**p.s + 0.4 * t**p.beta
    prof = SolutionProfile(
        params=p, K=1.3, grid=grid, values=u, boundary_value=float(u[-1]),
        exterior=None, residual_sup=0.0, bracket_violation=0.0,
        provenance=Provenance.EXTRAPOLATED_UK)
    K_fit, c_fit, rel_rms, n = fit_far_field(prof)
    assert K_fit == pytest.approx(1.3, rel=1e-8)
    assert c_fit == pytest.approx(0.4, rel=1e-6)
    assert rel_rms < 1e-12
    assert n >= 8


def test_fit_far_field_degenerate_basis_raises():
    # alpha close to the upper regime edge makes beta approach s and the
    # two-power basis collinear
    p = classify_regime(0.5, 0.498, 2.0)
    grid = Grid.make(8.0, 32, 1.0)
    prof = SolutionProfile(
        params=p, K=0.0, grid=grid, values=np.ones(grid.interior.size),
        boundary_value=1.0, exterior=None, residual_sup=0.0,
        bracket_violation=0.0, provenance=Provenance.EXTRAPOLATED_UK)
    with pytest.raises(ValueError, match="degenerate"):
        fit_far_field(prof)


def test_fit_far_field_window_validation():
    p = classify_regime(0.5, 0.0, 2.0)
    grid = Grid.make(8.0, 64, 1.0)
    prof = SolutionProfile(
        params=p, K=0.0, grid=grid, values=np.ones(grid.interior.size),
        boundary_value=1.0, exterior=None, residual_sup=0.0,
        bracket_violation=0.0, provenance=Provenance.EXTRAPOLATED_UK)
    with pytest.raises(ValueError):
        fit_far_field(prof, window=(0.9, 0.2))
    with pytest.raises(ValueError, match="nodes"):
        fit_far_field(prof, window=(0.97, 1.0))


@pytest.fixture(scope="module")
def u0_profile():
    p = classify_regime(0.5, 0.0, 2.0)
    return solve_bounded(p, 0.0, Grid.make(8.0, 256, 3.0))


def test_green_rhs_reproduces_homogeneous_solution(u0_profile):
    # the exterior datum of the K = 0 bounded problem is the homogeneous
    # power itself, so the stored curve solves the unbounded problem up to
    # scheme error and the representation must return it to 1 percent
    hom = homogeneous_solution(u0_profile.params)
    for t in (1.0, 2.0):
        val = green_rhs(u0_profile, t)
        exact = hom.c0 * t**hom.params.beta
        assert abs(val - exact) / exact <= 1e-2
        u = float(profile_interp(u0_profile, t))
        assert abs(val - u) / u <= 1e-2


def test_green_rhs_monotone_in_curve(u0_profile):
    # a larger curve makes u^(-gamma) smaller pointwise, so the
    # representation value must drop
    big = dataclasses.replace(
        u0_profile, values=1.2 * u0_profile.values,
        boundary_value=1.2 * u0_profile.boundary_value)
    assert green_rhs(big, 1.0) < green_rhs(u0_profile, 1.0)


def test_green_rhs_domain_guard(u0_profile):
    with pytest.raises(ValueError):
        green_rhs(u0_profile, 4.0)
    with pytest.raises(ValueError):
        green_rhs(u0_profile, 0.0)


def test_green_rhs_self_consistency_on_continued_profile():
    # dual-route check: collocation + continuation against the kernel
    # representation with fitted far-field closure; the 2 percent band
    # absorbs the profile's own remaining truncation drift
    p = classify_regime(0.75, -1.0, 2.0)
    cont = continue_in_b(p, 1.0, 4.0, 9, 384, grading_q=4.0, ext_refine=1.0)
    prof = restrict_profile(cont.final, 128.0)
    for t in (16.0, 32.0):
        val = green_rhs(prof, t)
        u = float(profile_interp(prof, t))
        assert abs(val - u) / u <= 2e-2
