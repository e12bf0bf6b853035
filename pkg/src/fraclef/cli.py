"""Batch driver: every operation as a subcommand with reproducible outputs.

Configs come from a JSON file plus flag overrides; every output embeds the
effective config, its sha256, and the package version, so a report can be
traced to the exact run that produced it. No timestamps and no unordered
dicts anywhere: identical configs produce byte-identical files.

Exit codes: 0 success / all checks pass, 1 numerical failure (a tolerance
exceeded, solver or quadrature breakdown), 2 invalid or guarded input.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    CheckResult,
    VerificationReport,
    check_minimality,
    check_monotone_t,
    check_sandwich,
    check_scaling,
    check_slope_continuity,
    extract_slope,
    hash_artifact,
    nonexistence_probe,
)
from .fracop import Grid, PowerTail
from .green import green_rhs, reduce_check, u0_green_identity
from .homogeneous import (
    Regime,
    classify_regime,
    homogeneous_solution,
    k_beta,
    pv_oracle_power,
    scaling_exponents,
)
from .quadrature import QuadSpec, QuadratureError
from .solver import (
    Provenance,
    SolutionProfile,
    SolveSpec,
    SolverError,
    continue_in_b,
    default_grading,
    profile_interp,
    solve_bounded,
    solve_zero_exterior,
)

_CHECK_NAMES = ("sandwich", "monotone", "scaling", "slope_continuity",
                "minimality", "slope")
_DEFAULT_ONLY = "sandwich,monotone,scaling,slope_continuity"


@dataclasses.dataclass
class RunConfig:
    s: float = 0.5
    alpha: float = 0.0
    gamma: float = 2.0
    K: tuple = (1.0,)
    b0: float = 4.0
    doublings: int = 0
    n_cells: int = 256
    grading_q: Optional[float] = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    newton_tol: float = 1e-10
    lam: float = 2.0
    seed: int = 0
    out_dir: str = "."


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in dataclasses.fields(RunConfig)}
        bad = sorted(set(data) - known)
        if bad:
            raise ValueError(f"unknown config keys: {', '.join(bad)}")
        if "K" in data:
            data["K"] = tuple(float(k) for k in data["K"])
        cfg = dataclasses.replace(cfg, **data)
    overrides = {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = v
    if "K" in overrides:
        overrides["K"] = tuple(float(k) for k in
                               str(overrides["K"]).split(","))
    return dataclasses.replace(cfg, **overrides)


def _config_dict(cfg: RunConfig) -> dict:
    # out_dir has no numerical effect; leaving it out keeps reports
    # byte-comparable across output locations
    d = dataclasses.asdict(cfg)
    d["K"] = list(cfg.K)
    del d["out_dir"]
    return d


def _config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(_config_dict(cfg), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _quad(cfg: RunConfig) -> QuadSpec:
    return QuadSpec(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)


def _solvespec(cfg: RunConfig, floor: tuple = (0.0,)) -> SolveSpec:
    return SolveSpec(newton_tol=cfg.newton_tol, floor_schedule=floor)


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta_path(csv_path: str) -> str:
    base = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return base + ".meta.json"


def write_profile(csv_path: str, profile: SolutionProfile,
                  cfg: RunConfig, extra: Optional[dict] = None) -> None:
    """Plot-ready CSV (t, u, K t^s, U0, lower, upper) + metadata sidecar.

    The sidecar JSON carries everything load_profile needs to rebuild the
    SolutionProfile exactly, plus the run's config echo. Floats go through
    repr, which round-trips binary64.
    """
    p = profile.params
    t, u = profile.full_curve()
    kts = profile.K * t**p.s
    cols: dict = {"t": t, "u": u, "Kts": kts}
    if p.regime is Regime.EXISTS:
        u0 = homogeneous_solution(p).u0(t)
        if profile.provenance is Provenance.EXTRAPOLATED_UK:
            lower, upper = np.maximum(kts, u0), kts + u0
        elif profile.provenance is Provenance.ZERO_EXTERIOR_UB:
            lower, upper = np.zeros_like(u0), u0
        else:
            lower, upper = kts, kts + u0
        cols.update({"U0": u0, "lower": lower, "upper": upper})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(cols)
    if p.regime is not Regime.EXISTS:
        header += ["U0", "lower", "upper"]
    w.writerow(header)
    for i in range(t.size):
        row = [repr(float(c[i])) for c in cols.values()]
        if p.regime is not Regime.EXISTS:
            row += ["", "", ""]
        w.writerow(row)
    _atomic_write(csv_path, buf.getvalue())
    meta = {
        "version": __version__,
        "config": _config_dict(cfg),
        "config_sha256": _config_hash(cfg),
        "profile": {
            "s": p.s, "alpha": p.alpha, "gamma": p.gamma, "beta": p.beta,
            "regime": p.regime.value,
            "K": profile.K,
            "grading_q": profile.grid.grading_q,
            "boundary_value": profile.boundary_value,
            "exterior": [[c, rho] for c, rho in profile.exterior.terms],
            "residual_sup": profile.residual_sup,
            "bracket_violation": profile.bracket_violation,
            "provenance": profile.provenance.value,
        },
    }
    if extra:
        meta.update(extra)
    _atomic_write(_meta_path(csv_path),
                  json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_profile(csv_path: str) -> SolutionProfile:
    """Rebuild a SolutionProfile from a profile CSV and its sidecar."""
    with open(_meta_path(csv_path), encoding="utf-8") as fh:
        pm = json.load(fh)["profile"]
    ts, us = [], []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        next(rd)
        for row in rd:
            ts.append(float(row[0]))
            us.append(float(row[1]))
    nodes = np.array(ts)
    grid = Grid.from_nodes(nodes, grading_q=pm["grading_q"])
    params = classify_regime(pm["s"], pm["alpha"], pm["gamma"])
    return SolutionProfile(
        params=params, K=float(pm["K"]), grid=grid,
        values=np.array(us[1:-1]), boundary_value=float(us[-1]),
        exterior=PowerTail(tuple((float(c), float(r))
                                 for c, r in pm["exterior"])),
        residual_sup=float(pm["residual_sup"]),
        bracket_violation=float(pm["bracket_violation"]),
        provenance=Provenance(pm["provenance"]))


def _print_check(r: CheckResult) -> None:
    tag = "PASS" if r.passed else "FAIL"
    print(f"{tag}  {r.name}: measured {r.measured:.6g} vs "
          f"tolerance {r.tolerance:.6g}")


def cmd_kbeta(args) -> int:
    s = args.s
    if args.beta is not None:
        beta = args.beta
        if args.alpha is not None or args.gamma is not None:
            raise ValueError("give either --beta or --alpha/--gamma")
    else:
        if args.alpha is None or args.gamma is None:
            raise ValueError("need --beta, or both --alpha and --gamma")
        beta = classify_regime(s, args.alpha, args.gamma).beta
        print(f"beta = (alpha + 2s)/(1 + gamma) = {beta!r}")
    kb = k_beta(s, beta)
    sign = "zero" if beta == s else ("positive" if beta < s else "negative")
    print(f"K_beta(s={s:g}, beta={beta!r}) = {kb!r}")
    print(f"sign class: {sign}")
    pv = pv_oracle_power(s, beta, 1.0)
    if sign == "zero":
        dev = abs(pv - kb)
        print(f"pv cross-check: {pv!r} (abs dev {dev:.3e})")
        return 0 if dev <= 1e-8 else 1
    dev = abs(pv - kb) / abs(kb)
    print(f"pv cross-check: {pv!r} (rel dev {dev:.3e})")
    return 0 if dev <= 1e-6 else 1


def _build_profile(params, K: float, cfg: RunConfig):
    """One family member per config: direct bounded solve, or continuation."""
    q = cfg.grading_q if cfg.grading_q is not None else default_grading(params)
    if K == 0.0 or cfg.doublings == 0:
        prof = solve_bounded(params, K, Grid.make(cfg.b0, cfg.n_cells, q),
                             _solvespec(cfg), _quad(cfg))
        return prof, {}
    cont = continue_in_b(params, K, cfg.b0, cfg.doublings, cfg.n_cells,
                         grading_q=q, spec=_solvespec(cfg), quad=_quad(cfg))
    extra = {"continuation": {
        "levels": [cfg.b0 * 2.0**j for j in range(cfg.doublings + 1)],
        "mono_violation": cont.mono_violation,
        "stopped_early": cont.stopped_early,
    }}
    return cont.final, extra


def cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    params = classify_regime(cfg.s, cfg.alpha, cfg.gamma)
    os.makedirs(cfg.out_dir, exist_ok=True)
    if params.regime is not Regime.EXISTS:
        if not args.probe:
            print(f"refusing to solve: regime {params.regime.value} has no "
                  f"solution family; pass --probe for a regularized "
                  f"diagnostic solve", file=sys.stderr)
            return 2
        if args.eps <= 0.0:
            raise ValueError("--eps must be positive for a probe solve")
        q = cfg.grading_q if cfg.grading_q is not None else 2.0
        prof = solve_zero_exterior(
            params, Grid.make(cfg.b0, cfg.n_cells, q),
            _solvespec(cfg, floor=(args.eps,)), _quad(cfg), probe=True)
        path = os.path.join(cfg.out_dir, "probe_profile.csv")
        write_profile(path, prof, cfg, {"probe_eps": args.eps})
        print(f"wrote {path} (regularized, eps={args.eps:g}, "
              f"regime {params.regime.value})")
        return 0
    rc = 0
    for K in cfg.K:
        prof, extra = _build_profile(params, K, cfg)
        if K == 0.0:
            t = prof.grid.interior
            w = (t >= 0.1 * prof.grid.b) & (t <= 0.9 * prof.grid.b)
            u0 = homogeneous_solution(params).u0(t[w])
            dev = float(np.max(np.abs(prof.values[w] - u0) / u0))
            extra["u0_max_rel_dev"] = dev
            print(f"K=0: max rel deviation from the homogeneous solution "
                  f"on [0.1 b, 0.9 b]: {dev:.3e}")
            if dev > 1e-2:
                rc = 1
        path = os.path.join(cfg.out_dir, f"profile_K{K:g}.csv")
        write_profile(path, prof, cfg, extra)
        print(f"wrote {path} ({prof.provenance.value}, b={prof.grid.b:g})")
    return rc


def _battery(params, cfg: RunConfig, only: set) -> list:
    checks = []
    profiles = {}
    for K in cfg.K:
        profiles[K], _ = _build_profile(params, K, cfg)
    if "sandwich" in only:
        checks += [check_sandwich(profiles[K]) for K in cfg.K]
    if "monotone" in only:
        for K in cfg.K:
            r = check_monotone_t(profiles[K])
            checks.append(dataclasses.replace(r, name=f"monotone_t[K={K:g}]"))
    if "scaling" in only:
        kb = cfg.K[0]
        _, e_arg = scaling_exponents(params)
        q = (cfg.grading_q if cfg.grading_q is not None
             else default_grading(params))
        hi = solve_bounded(params, kb,
                           Grid.make(cfg.b0 * cfg.lam**e_arg, cfg.n_cells, q),
                           _solvespec(cfg), _quad(cfg))
        lo = solve_bounded(params, cfg.lam * kb,
                           Grid.make(cfg.b0, max(64, (3 * cfg.n_cells) // 4),
                                     q),
                           _solvespec(cfg), _quad(cfg))
        checks.append(check_scaling(hi, lo, cfg.lam))
    if "slope_continuity" in only:
        k1 = cfg.K[0]
        k2 = cfg.K[1] if len(cfg.K) > 1 else (1.25 * k1 if k1 > 0 else 0.25)
        checks.append(check_slope_continuity(
            params, min(k1, k2), max(k1, k2), cfg.b0, cfg.n_cells,
            cfg.grading_q, spec=_solvespec(cfg), quad=_quad(cfg)))
    if "minimality" in only:
        sched = [cfg.b0 * 2.0**j for j in range(max(1, cfg.doublings) + 1)]
        t_star = 1.0 if cfg.b0 > 1.0 else cfg.b0 / 2.0
        checks += check_minimality(params, sched, cfg.n_cells, cfg.grading_q,
                                   t_star=t_star, spec=_solvespec(cfg),
                                   quad=_quad(cfg))
    if "slope" in only:
        checks += _slope_checks(params, [(K, profiles[K]) for K in cfg.K])
    return checks


def _slope_checks(params, pairs) -> list:
    out = []
    c0 = homogeneous_solution(params).c0
    for K, prof in pairs:
        sf = extract_slope(prof)
        ctx = (f"K_est={sf.K_est!r}, c_est={sf.c_est!r}, window "
               f"[{sf.window[0]:g}, {sf.window[1]:g}], "
               f"{sf.n_points} nodes, rms {sf.fit_residual:.3e}")
        if K == 0.0:
            out.append(CheckResult("slope_K[K=0]", abs(sf.K_est),
                                   1e-3 * c0, ctx))
            out.append(CheckResult("slope_c[K=0]", abs(sf.c_est - c0) / c0,
                                   1e-2, ctx))
        else:
            out.append(CheckResult(f"slope_K[K={K:g}]",
                                   abs(sf.K_est - K) / K, 1e-2, ctx))
    return out


def cmd_verify(args) -> int:
    cfg = _config_from_args(args)
    params = classify_regime(cfg.s, cfg.alpha, cfg.gamma)
    if params.regime is not Regime.EXISTS:
        print(f"regime {params.regime.value}: nothing to verify; "
              f"use the probe subcommand", file=sys.stderr)
        return 2
    only = set((args.only or _DEFAULT_ONLY).split(","))
    bad = only - set(_CHECK_NAMES)
    if bad:
        raise ValueError(f"unknown checks: {', '.join(sorted(bad))}; "
                         f"choose from {', '.join(_CHECK_NAMES)}")
    rep = VerificationReport(params={
        "s": params.s, "alpha": params.alpha, "gamma": params.gamma,
        "beta": params.beta, "regime": params.regime.value,
        "version": __version__, "config_sha256": _config_hash(cfg),
        "config": _config_dict(cfg),
    })
    if args.profile:
        for path in args.profile:
            prof = load_profile(path)
            rep.artifacts[os.path.basename(path)] = hash_artifact(path)
            base = os.path.basename(path)
            if "sandwich" in only:
                r = check_sandwich(prof)
                rep.add(dataclasses.replace(r, name=f"{r.name}@{base}"))
            if "monotone" in only:
                r = check_monotone_t(prof)
                rep.add(dataclasses.replace(r, name=f"{r.name}@{base}"))
            if "slope" in only:
                for r in _slope_checks(prof.params, [(prof.K, prof)]):
                    rep.add(dataclasses.replace(r, name=f"{r.name}@{base}"))
    else:
        rep.add(*_battery(params, cfg, only))
    os.makedirs(cfg.out_dir, exist_ok=True)
    _atomic_write(os.path.join(cfg.out_dir, "report.json"), rep.to_json())
    _atomic_write(os.path.join(cfg.out_dir, "report.csv"), rep.to_csv())
    for r in rep.checks:
        _print_check(r)
    print(f"report: {os.path.join(cfg.out_dir, 'report.json')}")
    return 0 if rep.all_passed else 1


def cmd_green(args) -> int:
    if not (args.reduce or args.identity or args.residual):
        raise ValueError("nothing to do: pass --reduce, --identity, "
                         "and/or --residual")
    rc = 0
    results = []
    if args.reduce:
        for n in ([args.n] if args.n else [2, 3]):
            lhs, rhs, rel = reduce_check(n, args.s, args.xn, args.zn)
            ok = rel <= 1e-4
            rc = rc or (0 if ok else 1)
            results.append({"check": f"reduce_n{n}", "lhs": lhs, "rhs": rhs,
                            "rel_err": rel, "passed": ok})
            print(f"{'PASS' if ok else 'FAIL'}  reduction n={n}: "
                  f"lateral integral {lhs:.9e} vs c_n * g1 {rhs:.9e} "
                  f"(rel err {rel:.3e})")
    if args.identity:
        if args.alpha is None or args.gamma is None:
            raise ValueError("--identity needs --alpha and --gamma")
        params = classify_regime(args.s, args.alpha, args.gamma)
        val = u0_green_identity(params)
        dev = abs(val - 1.0)
        ok = dev <= 1e-3
        rc = rc or (0 if ok else 1)
        results.append({"check": "u0_identity", "value": val,
                        "deviation": dev, "passed": ok})
        print(f"{'PASS' if ok else 'FAIL'}  representation moment: "
              f"{val!r} (|.-1| = {dev:.3e})")
    if args.residual:
        prof = load_profile(args.residual)
        b = prof.grid.b
        ts = ([float(x) for x in args.t.split(",")] if args.t
              else [b / 8.0, b / 4.0])
        for t in ts:
            u_t = float(profile_interp(prof, t))
            rhs = green_rhs(prof, t)
            rel = abs(rhs - u_t) / abs(u_t)
            ok = rel <= args.res_tol
            rc = rc or (0 if ok else 1)
            results.append({"check": f"residual_t{t:g}", "u": u_t,
                            "rhs": rhs, "rel_err": rel, "passed": ok})
            print(f"{'PASS' if ok else 'FAIL'}  representation at t={t:g}: "
                  f"u {u_t:.9e} vs rhs {rhs:.9e} (rel err {rel:.3e})")
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        payload = {"version": __version__, "results": results}
        _atomic_write(os.path.join(args.out_dir, "green_report.json"),
                      json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return rc


def cmd_probe(args) -> int:
    cfg = _config_from_args(args)
    r = nonexistence_probe(
        cfg.s, cfg.alpha, cfg.gamma,
        b0=args.b0,
        doublings=args.doublings if args.doublings is not None else 5,
        n_cells=args.n_cells, grading_q=cfg.grading_q,
        spec=_solvespec(cfg), quad=_quad(cfg))
    regime = classify_regime(cfg.s, cfg.alpha, cfg.gamma).regime
    print(f"regime: {regime.value}")
    _print_check(r)
    print(f"  {r.context}")
    if args.out_dir:
        rep = VerificationReport(params={
            "s": cfg.s, "alpha": cfg.alpha, "gamma": cfg.gamma,
            "regime": regime.value, "version": __version__,
            "config_sha256": _config_hash(cfg), "config": _config_dict(cfg),
        })
        rep.add(r)
        os.makedirs(args.out_dir, exist_ok=True)
        _atomic_write(os.path.join(args.out_dir, "probe_report.json"),
                      rep.to_json())
        _atomic_write(os.path.join(args.out_dir, "probe_report.csv"),
                      rep.to_csv())
    return 0 if r.passed else 1


def _add_config_flags(p: argparse.ArgumentParser, with_k: bool = True):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    if with_k:
        p.add_argument("--K", default=None,
                       help="comma-separated family parameters, e.g. 0.5,1,2")
    p.add_argument("--b0", type=float, default=None)
    p.add_argument("--doublings", type=int, default=None)
    p.add_argument("--n-cells", dest="n_cells", type=int, default=None)
    p.add_argument("--grading-q", dest="grading_q", type=float, default=None)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    p.add_argument("--newton-tol", dest="newton_tol", type=float,
                   default=None)
    p.add_argument("--lam", type=float, default=None,
                   help="scaling factor for the scaling check")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="fraclef",
        description="Construct and verify the one-parameter solution "
                    "family of the singular fractional equation on the "
                    "half line.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kbeta", help="fractional derivative constant of "
                                     "a power, with independent cross-check")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(func=cmd_kbeta)

    p = sub.add_parser("solve", help="solve family members and write "
                                     "profile CSVs")
    _add_config_flags(p)
    p.add_argument("--probe", action="store_true",
                   help="allow a regularized solve in a no-solution regime")
    p.add_argument("--eps", type=float, default=1e-3,
                   help="regularization floor for --probe solves")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the check battery, write "
                                      "report.json/report.csv")
    _add_config_flags(p)
    p.add_argument("--profile", action="append", default=None,
                   help="verify stored profile CSVs instead of solving "
                        "(repeatable)")
    p.add_argument("--only", default=None,
                   help=f"comma-separated subset of: "
                        f"{', '.join(_CHECK_NAMES)} "
                        f"(default: {_DEFAULT_ONLY})")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("green", help="kernel reduction, representation "
                                     "identity, and profile residuals")
    p.add_argument("--reduce", action="store_true")
    p.add_argument("--n", type=int, choices=(2, 3), default=None)
    p.add_argument("--xn", type=float, default=1.0)
    p.add_argument("--zn", type=float, default=2.0)
    p.add_argument("--identity", action="store_true")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--residual", default=None, metavar="PROFILE_CSV")
    p.add_argument("--t", default=None,
                   help="comma-separated evaluation points for --residual")
    p.add_argument("--res-tol", dest="res_tol", type=float, default=2e-2)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("probe", help="nonexistence diagnostics (or the "
                                     "convergent control)")
    _add_config_flags(p, with_k=False)
    p.set_defaults(func=cmd_probe)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (SolverError, QuadratureError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
