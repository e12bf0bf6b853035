"""Damped Newton solver for the discrete singular problem and b-continuation.

solve_bounded computes the truncated family member u_{K,b}: the solution on
(0, b) with the far-field datum K t^s + U_0 imposed on [b, infinity).
solve_zero_exterior computes u_b, the zero-datum minimal lift whose increasing
limit in b is U_0. continue_in_b doubles b with the previous grid kept as an
exact prefix, asserts the nodewise monotonicity the comparison principle
predicts, and returns the restricted profile as the U_K estimate.

The bracket recorded on a bounded solve is the *discrete* comparison
statement, which the M-matrix structure makes exact up to Newton tolerance:

    lowerh <= u <= lowerh + u0h,

where lowerh = -W^{-1} g_K is the discrete lift of the K t^s part of the
datum alone and u0h is the solution of the K = 0 problem on the same grid.
A violation beyond 10x bracket_tol means the solver (not the grid) is broken,
and solve_bounded raises. The continuum sandwich max(K t^s, U_0) <= U_K <=
K t^s + U_0 holds only up to discretization error and is checked downstream
at its own tolerance.
"""
from __future__ import annotations

import enum
import json
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .fracop import Grid, PowerTail, ZERO_TAIL, DiscreteOperator, assemble
from .homogeneous import (
    FracParams,
    Regime,
    classify_regime,
    homogeneous_solution,
)
from .quadrature import QuadSpec
from .special import getoor_constant

__all__ = [
    "SolverError",
    "SolveSpec",
    "Provenance",
    "SolutionProfile",
    "EpsLevel",
    "ContinuationResult",
    "positive_floor",
    "default_grading",
    "solve_bounded",
    "solve_zero_exterior",
    "solve_epsilon_levels",
    "continue_in_b",
    "profile_interp",
    "restrict_profile",
    "save_profile",
    "load_profile",
]


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveSpec:
    newton_tol: float = 1e-10
    max_newton: int = 60
    damping_min: float = 2.0**-20
    floor_schedule: tuple[float, ...] = (0.0,)
    bracket_tol: float = 1e-8


class Provenance(enum.Enum):
    BOUNDED_UKB = "BoundedUKb"
    ZERO_EXTERIOR_UB = "ZeroExteriorUb"
    EXTRAPOLATED_UK = "ExtrapolatedUK"


@dataclass(eq=False)
class SolutionProfile:
    """Nodal solution plus everything needed to rerun the checks on it."""

    params: FracParams
    K: float
    grid: Grid
    values: np.ndarray        # interior nodes t_1 .. t_{N-1}
    boundary_value: float     # value carried at t_N
    exterior: PowerTail
    residual_sup: float
    bracket_violation: float
    provenance: Provenance

    def full_curve(self) -> tuple[np.ndarray, np.ndarray]:
        t = self.grid.nodes
        u = np.concatenate([[0.0], self.values, [self.boundary_value]])
        return t, u


def profile_interp(profile: SolutionProfile, x) -> np.ndarray:
    """Piecewise-linear evaluation of the stored curve at points in [0, b]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > profile.grid.b):
        raise ValueError("evaluation point outside [0, b]")
    t, u = profile.full_curve()
    return np.interp(x, t, u)


def restrict_profile(profile: SolutionProfile, b_new: float) -> SolutionProfile:
    """Restriction of a profile to (0, b'], b' the largest node <= b_new.

    Used to discard the part of a curve contaminated by domain truncation
    before far-field reads (the boundary value of the result is a solution
    value, not a datum). Keeps provenance.
    """
    nodes = profile.grid.nodes
    if not 0.0 < b_new <= profile.grid.b:
        raise ValueError(f"b_new must lie in (0, {profile.grid.b}], got {b_new}")
    cut = int(np.searchsorted(nodes, b_new, side="right")) - 1
    if cut < 9:
        raise ValueError("restriction would leave fewer than 9 nodes")
    return SolutionProfile(
        params=profile.params, K=profile.K,
        grid=Grid.from_nodes(nodes[:cut + 1], grading_q=profile.grid.grading_q),
        values=profile.values[:cut - 1],
        boundary_value=float(profile.values[cut - 1]),
        exterior=profile.exterior,
        residual_sup=profile.residual_sup,
        bracket_violation=profile.bracket_violation,
        provenance=profile.provenance)


def positive_floor(params: FracParams) -> float:
    """Coefficient c of the guaranteed positive floor c t^beta.

    Scaled-barrier argument: inside any interval (0, r], r <= 1, the solution
    dominates a multiple of the flat barrier, with constant

        c = (2^{-2s - |alpha|} / B_{1,s})^{1/(1+gamma)},

    B_{1,s} the flat-barrier constant. Only the order of magnitude matters
    downstream (initial-iterate clipping); the exact constant keeps it
    reproducible.
    """
    s, alpha, gamma = params.s, params.alpha, params.gamma
    return (2.0 ** (-2.0 * s - abs(alpha)) / getoor_constant(s)) ** (
        1.0 / (1.0 + gamma))


def default_grading(params: FracParams) -> float:
    """Grading exponent resolving the t^beta boundary layer, clipped to [1, 4]."""
    if params.beta <= 0.0:
        return 4.0
    return float(min(4.0, max(1.0, 1.0 / params.beta)))


def _rhs(t: np.ndarray, params: FracParams, u: np.ndarray, eps: float) -> np.ndarray:
    return t**params.alpha * (u + eps) ** (-params.gamma)


def _newton_solve(op: DiscreteOperator, params: FracParams, eps: float,
                  u_init: np.ndarray, spec: SolveSpec) -> tuple[np.ndarray, float]:
    """Damped Newton on F(u) = W u + g - t^alpha (u+eps)^(-gamma).

    Residuals are measured in the scaled sup norm |F| / (1 + |rhs|). Steps
    that would make any component nonpositive are rejected by halving; a
    step that cannot decrease the residual above the minimum damping stalls
    out as an error.
    """
    t = op.grid.interior
    W, g = op.W, op.g
    u = np.array(u_init, dtype=float)
    if np.any(u <= 0.0):
        raise SolverError("initial guess must be strictly positive")

    def residual(v: np.ndarray) -> tuple[np.ndarray, float]:
        r = _rhs(t, params, v, eps)
        F = W @ v + g - r
        return F, float(np.max(np.abs(F) / (1.0 + np.abs(r))))

    F, res = residual(u)
    for _ in range(spec.max_newton):
        if res <= spec.newton_tol:
            return u, res
        J = W + np.diag(params.gamma * t**params.alpha
                        * (u + eps) ** (-params.gamma - 1.0))
        delta = np.linalg.solve(J, -F)
        lam = 1.0
        accepted = False
        while lam >= spec.damping_min:
            trial = u + lam * delta
            if np.all(trial > 0.0):
                F_t, res_t = residual(trial)
                if res_t < res:
                    u, F, res = trial, F_t, res_t
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            raise SolverError(
                f"line search stalled at scaled residual {res:.3e}")
    if res <= spec.newton_tol:
        return u, res
    raise SolverError(
        f"Newton did not reach {spec.newton_tol:.1e} in {spec.max_newton} "
        f"iterations (residual {res:.3e})")


def _check_exists(params: FracParams) -> None:
    if params.regime is not Regime.EXISTS:
        raise SolverError(
            f"parameters are in regime {params.regime.value}; the bounded "
            "family solve requires the existence window (use probe mode for "
            "nonexistence diagnostics)")


def solve_bounded(params: FracParams, K: float, grid: Grid,
                  spec: Optional[SolveSpec] = None,
                  quad: Optional[QuadSpec] = None) -> SolutionProfile:
    """Truncated family member u_{K,b} with datum K t^s + U_0 beyond b."""
    spec = spec or SolveSpec()
    _check_exists(params)
    if K < 0.0 or not np.isfinite(K):
        raise ValueError(f"K must be a finite nonnegative real, got {K}")
    hom = homogeneous_solution(params, quad)
    if K > 0.0:
        tail = PowerTail(((K, params.s), (hom.c0, params.beta)))
    else:
        tail = PowerTail(((hom.c0, params.beta),))
    op = assemble(grid, tail, params.s, quad)
    t = grid.interior

    # Supersolution initial guess, clipped once (before the iteration) to
    # [max(K t^s, floor/2), guess + bracket_tol]; afterwards positivity is
    # maintained by the line search alone.
    guess = K * t**params.s + hom.c0 * t**params.beta
    floor = positive_floor(params) * t**params.beta
    u = np.minimum(np.maximum(guess, np.maximum(K * t**params.s, 0.5 * floor)),
                   guess + spec.bracket_tol)
    res = np.inf
    for eps in spec.floor_schedule:
        u, res = _newton_solve(op, params, eps, u, spec)

    # Discrete comparison bracket (exact up to Newton tolerance).
    if K > 0.0:
        g_K = op.g_by_term[0]
        lower = np.linalg.solve(op.W, -g_K)
        op0 = replace(op, exterior=PowerTail((tail.terms[1],)),
                      g=op.g_by_term[1], g_by_term=(op.g_by_term[1],))
        u0_guess = np.maximum(hom.c0 * t**params.beta, floor)
        u0h, _ = _newton_solve(op0, params, spec.floor_schedule[-1],
                               u0_guess, spec)
        sup = float(np.max(u))
        viol = max(float(np.max(lower - u)), float(np.max(u - lower - u0h)), 0.0)
        bracket_violation = viol / sup
    else:
        bracket_violation = 0.0

    if bracket_violation > 10.0 * spec.bracket_tol:
        raise SolverError(
            f"discrete comparison bracket violated by {bracket_violation:.3e} "
            f"(> 10x bracket_tol): solver inconsistency")

    return SolutionProfile(
        params=params, K=float(K), grid=grid, values=u,
        boundary_value=float(tail(np.array([grid.b]))[0]),
        exterior=tail, residual_sup=res,
        bracket_violation=bracket_violation,
        provenance=Provenance.BOUNDED_UKB)


def _probe_init(op: DiscreteOperator, params: FracParams, eps: float) -> np.ndarray:
    """Supersolution start for probe solves: a scaled linear lift of t^alpha."""
    t = op.grid.interior
    if eps > 0.0:
        return np.linalg.solve(op.W, t**params.alpha * eps**-params.gamma - op.g)
    v = np.linalg.solve(op.W, t**params.alpha)
    lam = float(np.min(v)) ** (-params.gamma / (1.0 + params.gamma))
    return lam * v


def solve_zero_exterior(params: FracParams, grid: Grid,
                        spec: Optional[SolveSpec] = None,
                        quad: Optional[QuadSpec] = None,
                        probe: bool = False) -> SolutionProfile:
    """Zero-datum solve u_b on (0, b); u = 0 on the whole complement.

    With probe=True the existence-regime guard is dropped and the iteration
    is started from a linear supersolution, so the eps-regularized ladder of
    the nonexistence probes can run on any parameters.
    """
    spec = spec or SolveSpec()
    op = assemble(grid, ZERO_TAIL, params.s, quad)
    t = grid.interior
    if probe:
        u = _probe_init(op, params, spec.floor_schedule[0])
    else:
        _check_exists(params)
        hom = homogeneous_solution(params, quad)
        floor = positive_floor(params) * t**params.beta
        u = np.maximum(hom.c0 * t**params.beta, floor)
    res = np.inf
    for eps in spec.floor_schedule:
        u, res = _newton_solve(op, params, eps, u, spec)
    return SolutionProfile(
        params=params, K=0.0, grid=grid, values=u, boundary_value=0.0,
        exterior=ZERO_TAIL, residual_sup=res,
        bracket_violation=max(0.0, float(-np.min(u))),
        provenance=Provenance.ZERO_EXTERIOR_UB)


@dataclass(eq=False)
class EpsLevel:
    eps: float
    values: np.ndarray
    residual_sup: float


def solve_epsilon_levels(params: FracParams, grid: Grid,
                         schedule: Sequence[float],
                         spec: Optional[SolveSpec] = None,
                         quad: Optional[QuadSpec] = None) -> list[EpsLevel]:
    """Solve the eps-regularized problem along a decreasing schedule.

    Warm starts each level from the previous one. Works in any regime; this
    is the computational engine of the alpha-low nonexistence probe, where
    the interesting signal is how the levels fail to stabilize.
    """
    spec = spec or SolveSpec()
    if len(schedule) == 0 or any(e <= 0.0 for e in schedule):
        raise ValueError("schedule must be nonempty with positive entries")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        pass  # decreasing is the intended use but not a hard requirement
    op = assemble(grid, ZERO_TAIL, params.s, quad)
    u = _probe_init(op, params, schedule[0])
    out = []
    for eps in schedule:
        u, res = _newton_solve(op, params, eps, u, spec)
        out.append(EpsLevel(eps=float(eps), values=u.copy(), residual_sup=res))
    return out


@dataclass(eq=False)
class ContinuationResult:
    profiles: list            # BoundedUKb at b0, 2 b0, ...
    final: SolutionProfile    # ExtrapolatedUK, restricted to (0, b_final/2)
    mono_violation: float     # worst nodewise increase seen between levels
    stopped_early: bool


def _extend_grid(grid: Grid, ext_refine: float) -> Grid:
    """Double b keeping the old nodes verbatim and appending a geometric run.

    The ratio is chosen so the first appended cell is about 1/ext_refine of
    the last existing cell; a power-graded prefix cannot be re-expressed as a
    finer power grid after doubling, so extension is the only way to keep the
    comparison float-exact.
    """
    t = grid.nodes
    h_last = t[-1] - t[-2]
    eta = h_last / (ext_refine * grid.b)
    M = max(8, int(np.ceil(np.log(2.0) / np.log1p(eta))))
    ratio = 2.0 ** (1.0 / M)
    ext = grid.b * ratio ** np.arange(1, M + 1)
    ext[-1] = 2.0 * grid.b
    return Grid.from_nodes(np.concatenate([t, ext]), grading_q=grid.grading_q)


def continue_in_b(params: FracParams, K: float, b0: float, doublings: int,
                  n_cells0: int, grading_q: Optional[float] = None,
                  spec: Optional[SolveSpec] = None,
                  quad: Optional[QuadSpec] = None,
                  ext_refine: float = 2.0,
                  mono_tol: Optional[float] = None) -> ContinuationResult:
    """Solve u_{K,b} on b0, 2 b0, ..., 2^doublings b0 and extrapolate.

    Successive grids share the previous nodes exactly, so the comparison
    principle's prediction -- u_{K, 2b} <= u_{K, b} nodewise -- is checked
    float-exactly. A violation beyond 10x mono_tol (default 1e-6 relative to
    sup u) raises. Stops early when the shared-window change drops below
    stop_tol = 1e-8 (1 + sup u). The returned final profile is the b -> inf
    estimate restricted to t <= b_final / 2.
    """
    spec = spec or SolveSpec()
    if grading_q is None:
        grading_q = default_grading(params)
    grid = Grid.make(b0, n_cells0, grading_q)
    profiles = [solve_bounded(params, K, grid, spec, quad)]
    mono_viol = 0.0
    stopped = False
    for _ in range(doublings):
        prev = profiles[-1]
        grid = _extend_grid(prev.grid, ext_refine)
        cur = solve_bounded(params, K, grid, spec, quad)
        n_shared = prev.values.size
        diff = cur.values[:n_shared] - prev.values
        sup = float(np.max(prev.values))
        tol = mono_tol if mono_tol is not None else 1e-6 * sup
        mono_viol = max(mono_viol, float(np.max(diff)))
        if mono_viol > 10.0 * tol:
            raise SolverError(
                f"monotone decrease in b violated by {mono_viol:.3e} "
                f"(tolerance {tol:.3e}): discretization inconsistency")
        profiles.append(cur)
        shared_t = prev.grid.interior
        window = shared_t <= prev.grid.b / 2.0
        change = float(np.max(np.abs(diff[window])))
        if change <= 1e-8 * (1.0 + sup):
            stopped = True
            break

    last = profiles[-1]
    final = restrict_profile(last, last.grid.b / 2.0)
    final.provenance = Provenance.EXTRAPOLATED_UK
    return ContinuationResult(profiles=profiles, final=final,
                              mono_violation=mono_viol, stopped_early=stopped)


# ---------------------------------------------------------------------------
# serialization


def _atomic_write(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_profile(profile: SolutionProfile, csv_path: str, json_path: str,
                 extra: Optional[dict] = None) -> None:
    """Write the t,u curve and the metadata sidecar (atomically, repr floats).

    Floats are serialized with repr and parse back bit-identical, so checks
    that run on saved profiles are pure functions of the files.
    """
    t, u = profile.full_curve()
    lines = ["t,u"]
    lines.extend(f"{float(ti)!r},{float(ui)!r}" for ti, ui in zip(t, u))
    _atomic_write(csv_path, "\n".join(lines) + "\n")

    meta = {
        "s": float(profile.params.s),
        "alpha": float(profile.params.alpha),
        "gamma": float(profile.params.gamma),
        "K": float(profile.K),
        "b": float(profile.grid.b),
        "n_cells": int(profile.grid.n_cells),
        "grading_q": float(profile.grid.grading_q),
        "residual_sup": float(profile.residual_sup),
        "bracket_violation": float(profile.bracket_violation),
        "provenance": profile.provenance.value,
        "exterior_terms": [[float(c), float(rho)]
                           for c, rho in profile.exterior.terms],
        "boundary_value": float(profile.boundary_value),
    }
    if extra:
        meta.update(extra)
    _atomic_write(json_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_profile(csv_path: str, json_path: str) -> SolutionProfile:
    with open(json_path) as fh:
        meta = json.load(fh)
    raw = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    t, u = raw[:, 0], raw[:, 1]
    grid = Grid.from_nodes(t, grading_q=float(meta["grading_q"]))
    params = classify_regime(meta["s"], meta["alpha"], meta["gamma"])
    return SolutionProfile(
        params=params, K=float(meta["K"]), grid=grid, values=u[1:-1],
        boundary_value=float(meta["boundary_value"]),
        exterior=PowerTail(tuple((float(c), float(r))
                                 for c, r in meta["exterior_terms"])),
        residual_sup=float(meta["residual_sup"]),
        bracket_violation=float(meta["bracket_violation"]),
        provenance=Provenance(meta["provenance"]))
