"""Gamma-function machinery and the named constants of the fractional problem.

Everything downstream (operator normalization, Green kernels, barrier
constants) is a ratio of Gamma values. We carry our own Lanczos evaluation
rather than leaning on math.gamma so that array-valued callers get the same
code path as scalars and so the tests can cross-check two independent
implementations.

Normalizations used throughout the package:

    C_{n,s}   = 4^s Gamma(n/2+s) / (pi^{n/2} |Gamma(-s)|)

the Fourier-symbol normalization of the fractional Laplacian, i.e. the
constant for which (-Delta)^s e^{i x.xi} = |xi|^{2s} e^{i x.xi}, and

    kappa_{n,s} = Gamma(n/2) / (2^{2s} pi^{n/2} Gamma(s)^2)

the prefactor of the half-space Green kernel. The dimensional reduction
constant c_n relating the n-dimensional half-space kernel on rays to the
half-line kernel collapses to 1 for every n >= 2; cn_reduction evaluates the
defining product rather than hardcoding that.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "gamma_fn",
    "cns",
    "kappa",
    "cn_reduction",
    "getoor_constant",
    "Constants",
]

# Lanczos approximation, g = 607/128, 15 coefficients. Relative error of the
# rational part is below 1e-15 on the right half line; the exp() at the end
# costs a few ulps more for large arguments.
_LANCZOS_G = 4.7421875
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COEF = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
_SQRT_2PI = 2.5066282746310005


def _lngamma_pos(x: float) -> float:
    """log Gamma(x) for x > 0."""
    ser = _LANCZOS_C0
    y = x
    for c in _LANCZOS_COEF:
        y += 1.0
        ser += c / y
    tmp = x + _LANCZOS_G + 0.5
    return (x + 0.5) * math.log(tmp) - tmp + math.log(_SQRT_2PI * ser / x)


def gamma_fn(x: float) -> float:
    """Gamma(x) for real x, poles excluded.

    Uses the Lanczos series for x >= 0.5 and the reflection formula
    Gamma(x) Gamma(1-x) = pi / sin(pi x) below that. Raises ValueError on
    the poles x = 0, -1, -2, ...
    """
    x = float(x)
    if x >= 0.5:
        return math.exp(_lngamma_pos(x))
    if x == math.floor(x):
        raise ValueError(f"gamma_fn: pole at x = {x}")
    s = math.sin(math.pi * x)
    return math.pi / (s * math.exp(_lngamma_pos(1.0 - x)))


def cns(n: int, s: float) -> float:
    """Normalization constant C_{n,s} of the fractional Laplacian.

    C_{n,s} = 4^s Gamma(n/2 + s) / (pi^{n/2} |Gamma(-s)|), the constant for
    which the operator has Fourier symbol |xi|^{2s}. Requires 0 < s < 1.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"cns: s must lie in (0,1), got {s}")
    if n < 1:
        raise ValueError(f"cns: dimension must be >= 1, got {n}")
    return (
        4.0**s
        * gamma_fn(n / 2.0 + s)
        / (math.pi ** (n / 2.0) * abs(gamma_fn(-s)))
    )


def kappa(n: int, s: float) -> float:
    """Green-kernel prefactor kappa_{n,s} = Gamma(n/2)/(2^{2s} pi^{n/2} Gamma(s)^2)."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"kappa: s must lie in (0,1), got {s}")
    if n < 1:
        raise ValueError(f"kappa: dimension must be >= 1, got {n}")
    return gamma_fn(n / 2.0) / (2.0 ** (2.0 * s) * math.pi ** (n / 2.0) * gamma_fn(s) ** 2)


def cn_reduction(n: int) -> float:
    """Dimensional reduction constant c_n, n >= 2.

    Defined as the ratio turning the angular average of the n-dimensional
    half-space Green kernel over a ray into the half-line kernel:

        c_n = (kappa_{n,s} / kappa_{1,s}) * omega_{n-2} * B(1/2, (n-1)/2) / 2,

    with omega_{n-2} = 2 pi^{(n-1)/2} / Gamma((n-1)/2) the area of the unit
    sphere in R^{n-1} (omega_0 = 2, two points). The angular integral that
    produces the Beta factor is exact:

        int_0^1 x^{-1/2} (1-x)^{(n-3)/2} (1+Tx)^{-n/2} dx
            = B(1/2, (n-1)/2) (1+T)^{-1/2},

    a Gauss 2F1(a,b;a;z) = (1-z)^{-b} collapse, so the s-dependence cancels
    and the product telescopes to 1 for every n. We evaluate it anyway; the
    function is the receipt, not the constant.
    """
    if n < 2:
        raise ValueError(f"cn_reduction: defined for n >= 2, got {n}")
    # kappa ratio at any s; s = 1/2 is as good as any since it cancels.
    ratio = kappa(n, 0.5) / kappa(1, 0.5)
    omega = 2.0 * math.pi ** ((n - 1) / 2.0) / gamma_fn((n - 1) / 2.0)
    beta_half = gamma_fn(0.5) * gamma_fn((n - 1) / 2.0) / gamma_fn(n / 2.0)
    return ratio * omega * beta_half / 2.0


def getoor_constant(s: float) -> float:
    """Value of (-Delta)^s (1-x^2)_+^s inside (-1,1) in one dimension.

    The flat barrier: the fractional Laplacian of the s-th power of the
    distance-like factor (1-x^2)_+^s is constant in the unit ball,

        (-Delta)^s (1-x^2)_+^s = 2^{2s} Gamma(s+1/2) Gamma(s+1) / Gamma(1/2),

    which anchors both the operator validation and the solver's positive
    floor. Requires 0 < s < 1.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"getoor_constant: s must lie in (0,1), got {s}")
    return 2.0 ** (2.0 * s) * gamma_fn(s + 0.5) * gamma_fn(s + 1.0) / gamma_fn(0.5)


@dataclass(frozen=True)
class Constants:
    """Bundle of the constants attached to a (n, s) pair."""

    n: int
    s: float
    c_ns: float
    kappa_ns: float
    c_n: float

    @classmethod
    def for_order(cls, n: int, s: float) -> "Constants":
        return cls(
            n=n,
            s=s,
            c_ns=cns(n, s),
            kappa_ns=kappa(n, s),
            c_n=cn_reduction(n) if n >= 2 else 1.0,
        )
