"""Regime classification and the homogeneous power solution.

The equation (-Delta)^s u = t^alpha / u^gamma on the half line, with u = 0 on
the complementary ray, admits solutions exactly for -2s < alpha < (gamma-1)s.
Inside that window the scale-invariant candidate is a pure power

    U_0(t) = C_0 t_+^beta,   beta = (alpha + 2s)/(1 + gamma),

and the whole construction reduces to one number: the value of the fractional
Laplacian on the normalized power,

    (-Delta)^s t_+^beta = K_beta t^{beta - 2s}  (t > 0),

with K_beta given by a one-dimensional integral (k_beta below). Then
C_0 = K_beta^{-1/(1+gamma)}, which requires K_beta > 0, i.e. beta < s.

The module also carries two principal-value quadrature oracles that evaluate
(-Delta)^s directly from the kernel, independent of both k_beta's integral
representation and the matrix discretization. They are deliberately slow and
deliberately separate: every fast path in the package is tested against them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .quadrature import (
    QuadSpec,
    QuadratureError,
    integrate_adaptive,
    integrate_endpoint_singular,
    integrate_semiinfinite,
)
from .special import cns

__all__ = [
    "Regime",
    "FracParams",
    "classify_regime",
    "k_beta",
    "pv_oracle_power",
    "pv_compact_support",
    "HomogeneousSolution",
    "homogeneous_solution",
    "scaling_exponents",
]

# Refuse to build the power solution closer to the existence boundary than
# this; every constant in the construction degenerates there.
REGIME_MARGIN = 1e-6


class Regime(enum.Enum):
    EXISTS = "Exists"
    NO_SOLUTION_ALPHA_LOW = "NoSolutionAlphaLow"
    NO_SOLUTION_ALPHA_HIGH = "NoSolutionAlphaHigh"


@dataclass(frozen=True)
class FracParams:
    """Validated parameter triple plus derived exponent and regime tag."""

    s: float
    alpha: float
    gamma: float
    beta: float
    regime: Regime

    def margin(self) -> float:
        """Distance of alpha to the nearer edge of the existence window."""
        return min(self.alpha + 2.0 * self.s,
                   (self.gamma - 1.0) * self.s - self.alpha)


def classify_regime(s: float, alpha: float, gamma: float) -> FracParams:
    """Validate (s, alpha, gamma) and classify the existence regime.

    The window is open: alpha = -2s and alpha = (gamma-1)s themselves are
    nonexistence parameters. beta is computed for every regime since the
    probes use it diagnostically even where no solution exists.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0,1), got {s}")
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if not math.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha}")
    beta = (alpha + 2.0 * s) / (1.0 + gamma)
    if alpha <= -2.0 * s:
        regime = Regime.NO_SOLUTION_ALPHA_LOW
    elif alpha >= (gamma - 1.0) * s:
        regime = Regime.NO_SOLUTION_ALPHA_HIGH
    else:
        regime = Regime.EXISTS
    return FracParams(s=float(s), alpha=float(alpha), gamma=float(gamma),
                      beta=beta, regime=regime)


def k_beta(s: float, beta: float, spec: Optional[QuadSpec] = None) -> float:
    """The constant in (-Delta)^s t_+^beta = K_beta t^{beta-2s}, 0 < beta < 2s.

    K_beta = C_{1,s} int_0^1 (tau^s - tau^beta)(1 - tau^{s-beta-1})
                              / (1-tau)^{1+2s} dtau.

    Sign trichotomy: sign(K_beta) = sign(s - beta); both factors of the
    numerator flip sign together at beta = s, so the integrand is pointwise
    nonnegative for beta < s and nonpositive for beta > s.

    The integrand is evaluated in log space (expm1) so the cancellations at
    both endpoints cost no precision. Endpoint powers: tau^{min(s,beta)+s-beta-1}
    at 0 and (1-tau)^{1-2s} at 1.
    """
    spec = spec or QuadSpec()
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0,1), got {s}")
    if not 0.0 < beta < 2.0 * s:
        raise ValueError(f"beta must lie in (0, 2s) = (0, {2*s}), got {beta}")

    a1 = s - beta
    a2 = s - beta - 1.0  # < 0 always

    def integrand(tau: np.ndarray) -> np.ndarray:
        ln = np.log(tau)
        with np.errstate(over="ignore", invalid="ignore"):
            # (tau^s - tau^beta) * (1 - tau^{s-beta-1}) in two stable forms:
            # generic, and the tau -> 0 form where tau^{s-beta-1} overflows.
            generic = (tau**beta * np.expm1(a1 * ln)) * (-np.expm1(a2 * ln))
            small = -np.expm1(a1 * ln) * np.exp((s - 1.0) * ln)
            num = np.where(a2 * ln > 50.0, small, generic)
        om = -np.expm1(ln)  # 1 - tau, exact enough everywhere
        return num * om ** (-1.0 - 2.0 * s)

    pow_a = min(s, beta) + s - beta - 1.0
    pow_b = 1.0 - 2.0 * s
    res = integrate_endpoint_singular(integrand, 0.0, 1.0,
                                      pow_a=pow_a, pow_b=pow_b, spec=spec)
    if not res.converged:
        raise QuadratureError(
            f"k_beta quadrature did not converge (err_est={res.err_est:.3e})",
            partial=res.value,
        )
    return cns(1, s) * res.value


def pv_oracle_power(s: float, beta: float, t: float,
                    spec: Optional[QuadSpec] = None) -> float:
    """(-Delta)^s t_+^beta at t > 0 straight from the kernel.

    Independent oracle for k_beta: evaluates

        C_{1,s} PV int_R (t^beta - y_+^beta) |t-y|^{-1-2s} dy

    by symmetric pairing on (t-delta, t+delta) with an analytic second-order
    (plus quartic) Taylor correction on (0, h0), endpoint-mapped quadrature on
    (0, t-delta), a folded tail on (t+delta, inf), and the exact contribution
    t^{beta-2s}/(2s) of the negative ray. Shares nothing with k_beta's
    integral representation beyond the normalization constant.
    """
    spec = spec or QuadSpec()
    if t <= 0.0:
        raise ValueError(f"oracle point must be positive, got t={t}")
    if not 0.0 < beta < 2.0 * s:
        raise ValueError(f"beta must lie in (0, 2s), got {beta}")

    delta = 0.5 * t
    h0 = delta / 100.0
    fpp = beta * (beta - 1.0) * t ** (beta - 2.0)
    f4 = beta * (beta - 1.0) * (beta - 2.0) * (beta - 3.0) * t ** (beta - 4.0)
    # int_0^{h0} (2f(t)-f(t+h)-f(t-h)) h^{-1-2s} dh via the Taylor expansion
    # of the symmetric difference: -f'' h^2 - f'''' h^4/12 + O(h^6).
    core_inner = (
        -fpp * h0 ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
        - f4 * h0 ** (4.0 - 2.0 * s) / (12.0 * (4.0 - 2.0 * s))
    )

    ft = t**beta

    def core(h: np.ndarray) -> np.ndarray:
        return (2.0 * ft - (t + h) ** beta - (t - h) ** beta) / h ** (1.0 + 2.0 * s)

    core_outer = integrate_adaptive(core, h0, delta, spec)

    def left(y: np.ndarray) -> np.ndarray:
        return (ft - y**beta) / (t - y) ** (1.0 + 2.0 * s)

    # Bounded at 0 with a y^beta kink; the beta-1 declaration makes the
    # substitution smooth both of them out.
    left_part = integrate_endpoint_singular(left, 0.0, t - delta,
                                            pow_a=beta - 1.0, pow_b=0.0,
                                            spec=spec)

    def tail(y: np.ndarray) -> np.ndarray:
        return (ft - y**beta) / (y - t) ** (1.0 + 2.0 * s)

    tail_part = integrate_semiinfinite(tail, t + delta,
                                       decay=1.0 + 2.0 * s - beta, spec=spec)

    neg_ray = ft * t ** (-2.0 * s) / (2.0 * s)

    for piece in (core_outer, left_part, tail_part):
        if not piece.converged:
            raise QuadratureError(
                f"pv_oracle_power piece did not converge (err_est={piece.err_est:.3e})",
                partial=piece.value,
            )
    return cns(1, s) * (core_inner + core_outer.value + left_part.value
                        + tail_part.value + neg_ray)


def pv_compact_support(f: Callable, f2: Callable, s: float, t: float,
                       lo: float, hi: float, edge_pow: float,
                       spec: Optional[QuadSpec] = None) -> float:
    """(-Delta)^s f at an interior point t of supp f = [lo, hi].

    f vanishes like (y-lo)^{edge_pow} and (hi-y)^{edge_pow} at the endpoints
    and is C^2 near t with second derivative f2. Same decomposition as
    pv_oracle_power: symmetric core with second-order Taylor correction,
    endpoint-mapped side integrals, exact exterior contribution (f is zero
    outside [lo, hi]).
    """
    spec = spec or QuadSpec()
    if not lo < t < hi:
        raise ValueError(f"t={t} outside the open support ({lo}, {hi})")
    if edge_pow <= 0.0:
        raise ValueError(f"edge_pow must be positive, got {edge_pow}")

    delta = 0.5 * min(t - lo, hi - t)
    h0 = delta / 100.0
    ft = float(f(np.array([t]))[0])
    fpp = float(f2(t))
    core_inner = -fpp * h0 ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)

    def core(h: np.ndarray) -> np.ndarray:
        return (2.0 * ft - f(t + h) - f(t - h)) / h ** (1.0 + 2.0 * s)

    core_outer = integrate_adaptive(core, h0, delta, spec)

    def left_side(y: np.ndarray) -> np.ndarray:
        return (ft - f(y)) / (t - y) ** (1.0 + 2.0 * s)

    left_part = integrate_endpoint_singular(left_side, lo, t - delta,
                                            pow_a=edge_pow - 1.0, pow_b=0.0,
                                            spec=spec)

    def right_side(y: np.ndarray) -> np.ndarray:
        return (ft - f(y)) / (y - t) ** (1.0 + 2.0 * s)

    right_part = integrate_endpoint_singular(right_side, t + delta, hi,
                                             pow_a=0.0, pow_b=edge_pow - 1.0,
                                             spec=spec)

    exterior = ft * ((t - lo) ** (-2.0 * s) + (hi - t) ** (-2.0 * s)) / (2.0 * s)
    return cns(1, s) * (core_inner + core_outer.value + left_part.value
                        + right_part.value + exterior)


@dataclass(frozen=True)
class HomogeneousSolution:
    """The power solution U_0(t) = C_0 t_+^beta of the Exists regime."""

    params: FracParams
    k_beta: float
    c0: float

    def u0(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0.0
        out[pos] = self.c0 * t[pos] ** self.params.beta
        return out if out.ndim else float(out)


def homogeneous_solution(params: FracParams,
                         spec: Optional[QuadSpec] = None) -> HomogeneousSolution:
    """Build U_0 for Exists-regime parameters.

    Refuses parameters within REGIME_MARGIN of the window edges: there either
    K_beta -> 0 (so C_0 blows up) or beta -> 0, and nothing downstream is
    trustworthy.
    """
    if params.regime is not Regime.EXISTS:
        raise ValueError(
            f"no homogeneous solution in regime {params.regime.value} "
            f"(s={params.s}, alpha={params.alpha}, gamma={params.gamma})"
        )
    if params.margin() < REGIME_MARGIN:
        raise ValueError(
            f"parameters within {REGIME_MARGIN} of the existence boundary "
            f"(margin={params.margin():.3e}); refusing to build U_0"
        )
    kb = k_beta(params.s, params.beta, spec)
    if kb <= 0.0:
        raise ValueError(
            f"K_beta = {kb} is not positive; C_0 undefined (beta >= s?)"
        )
    c0 = kb ** (-1.0 / (1.0 + params.gamma))
    return HomogeneousSolution(params=params, k_beta=kb, c0=c0)


def scaling_exponents(params: FracParams) -> tuple[float, float]:
    """Exponents (e_val, e_arg) of the family's scaling law.

    U_{lambda K}(t) = lambda^{e_val} U_K(lambda^{e_arg} t) with

        e_val = -(alpha + 2s) / (s(gamma-1) - alpha),
        e_arg = (1 + gamma) / (s(gamma-1) - alpha).

    The denominator is positive exactly in the Exists regime.
    """
    den = params.s * (params.gamma - 1.0) - params.alpha
    if den <= 0.0:
        raise ValueError("scaling exponents defined only for alpha < (gamma-1)s")
    return (-(params.alpha + 2.0 * params.s) / den,
            (1.0 + params.gamma) / den)
