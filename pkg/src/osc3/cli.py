"""Command line interface.

Four subcommands: `check` evaluates the theorem conditions and writes a
JSON report (optionally a CSV of criterion trajectories), `verify`
integrates the equation directly and classifies solutions, `sweep` runs
the checks over a parameter grid and writes one CSV row per point, and
`riccati` runs the comparison harness on a named fixture.

Reports carry the full effective configuration and the package version so
a run can be reproduced from its own output.  All output is deterministic:
no timestamps, sorted JSON keys, fixed seeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .coeffs import ModelError, SignReport, build_model, make_split, p_minus
from .expr import ExprError, compile_fn, parse
from .fixtures import FIXTURES, get_fixture
from .kamenev import (
    Check33fReport,
    GeometricGrid,
    LimsupPolicy,
    TheoremReport,
    Verdict,
    theorem_verdict,
)
from .ode import OdeControls, count_zeros, integrate_third_order, oscillation_report, state_at
from .riccati import AS_WRITTEN, LINEARIZED, RiccatiProblem, comparison_check

_THEOREM_KEYS = {"lazer": "LAZER", "thm31": "THM31", "thm32": "THM32", "thm33": "THM33"}
_CANONICAL_ORDER = ("LAZER", "THM31", "THM32", "THM33")


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ValueError(f"--param expects name=value, got {item!r}")
        name, _, val = item.partition("=")
        name = name.strip()
        if not name:
            raise ValueError(f"--param expects name=value, got {item!r}")
        out[name] = float(val)
    return out


def _parse_theorems(text: str | None, default: tuple) -> list:
    if not text or text.strip().lower() == "all":
        chosen = list(default)
    else:
        chosen = []
        for piece in text.split(","):
            key = piece.strip().lower()
            if key not in _THEOREM_KEYS:
                raise ValueError(f"unknown theorem {piece!r}; use thm31, thm32, thm33, lazer, or all")
            chosen.append(_THEOREM_KEYS[key])
    ordered = [t for t in _CANONICAL_ORDER if t in chosen]
    return ordered


def _dump_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _status_dict(cs) -> dict:
    return {"holds": cs.holds, "witness_t": cs.witness_t, "witness_value": cs.witness_value}


def _sign_dict(sr: SignReport) -> dict:
    return {
        "holds": sr.holds,
        "r_positive": _status_dict(sr.r_positive),
        "q_nonpositive": _status_dict(sr.q_nonpositive),
        "n_samples": sr.n_samples,
        "span": sr.span,
    }


def _condition_dict(obj) -> dict:
    if isinstance(obj, Verdict):
        return obj.as_dict()
    if isinstance(obj, SignReport):
        return _sign_dict(obj)
    if isinstance(obj, Check33fReport):
        return obj.as_dict()
    if isinstance(obj, dict):
        return obj
    raise TypeError(f"cannot serialize condition result {type(obj).__name__}")


def _theorem_dict(rep: TheoremReport) -> dict:
    return {
        "theorem": rep.theorem,
        "alpha": rep.alpha,
        "overall": rep.overall,
        "conditions": {k: _condition_dict(v) for k, v in rep.condition_results.items()},
        "grid": rep.grid.as_dict(),
        "policy": rep.policy.as_dict(),
        "warnings": list(rep.warnings),
    }


def _write_trajectory_csv(path: str, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(["t", "S", "criterion_id", "alpha"])
        for rep in reports:
            for letter in sorted(rep.trajectories):
                traj = rep.trajectories[letter]
                for t, s in zip(traj.t, traj.values):
                    writer.writerow([repr(float(t)), repr(float(s)), traj.criterion_id,
                                     "" if traj.alpha is None else repr(float(traj.alpha))])


class _Problem:
    """Resolved inputs shared by check/verify/sweep: model sources, params,
    fixture extras (override, split, grid, breakpoints)."""

    def __init__(self, args, need_sources=True):
        self.params = _parse_params(getattr(args, "param", None))
        self.fixture = None
        if getattr(args, "fixture", None):
            self.fixture = get_fixture(args.fixture)
            self.p_src = self.fixture.p_src
            self.q_src = self.fixture.q_src
            self.r_src = self.fixture.r_src
            self.t0 = self.fixture.t0
            self.params = self.fixture.params_with(self.params)
            self.d_src = self.fixture.d_src
            self.split_srcs = self.fixture.split_srcs
        else:
            if need_sources and (args.p is None or args.q is None or args.r is None):
                raise ValueError("--p, --q, --r are required unless --fixture is given")
            self.p_src = args.p
            self.q_src = args.q
            self.r_src = args.r
            self.t0 = args.t0
            self.d_src = getattr(args, "d_override", None)
            p1 = getattr(args, "split_p1", None)
            p2 = getattr(args, "split_p2", None)
            self.split_srcs = (p1, p2) if (p1 is not None or p2 is not None) else None
        if getattr(args, "d_override", None) and self.fixture:
            self.d_src = args.d_override

    def build_model(self):
        return build_model(self.p_src, self.q_src, self.r_src, self.params, t0=self.t0)

    def build_ode_model(self):
        if self.fixture:
            return self.fixture.build_ode_model(self.params)
        return self.build_model()

    def d_fn(self):
        if not self.d_src:
            return None
        ast = parse(self.d_src, param_names=tuple(self.params))
        return compile_fn(ast, self.params)

    def grid(self, args) -> GeometricGrid:
        if self.fixture and args.grid_count is None and args.grid_ratio is None:
            return self.fixture.grid()
        ratio = args.grid_ratio if args.grid_ratio is not None else 1.15
        count = args.grid_count if args.grid_count is not None else 120
        return GeometricGrid(self.t0, ratio, count)

    def breakpoints(self, t_end: float):
        return self.fixture.breakpoints(t_end) if self.fixture else None

    def feature_windows(self, t_end: float):
        return self.fixture.feature_windows(t_end) if self.fixture else None

    def split_for(self, model):
        if self.split_srcs is None:
            return make_split(model)
        return make_split(model, p1_src=self.split_srcs[0], p2_src=self.split_srcs[1])

    def config(self, extra: dict) -> dict:
        cfg = {
            "fixture": self.fixture.name if self.fixture else None,
            "p": self.p_src,
            "q": self.q_src,
            "r": self.r_src,
            "t0": self.t0,
            "params": dict(sorted(self.params.items())),
            "d_override": self.d_src,
            "split": list(self.split_srcs) if self.split_srcs else None,
        }
        cfg.update(extra)
        return cfg


def _alphas(args, problem) -> tuple:
    """Base alpha (THM31/THM32) and the alpha used for THM33."""
    if args.alpha is not None:
        base = args.alpha
    elif problem.fixture:
        base = problem.fixture.alpha
    else:
        base = 1.0
    if getattr(args, "alpha33", None) is not None:
        a33 = args.alpha33
    elif args.alpha is not None and args.alpha > 1.0:
        a33 = args.alpha
    elif problem.fixture:
        a33 = problem.fixture.alpha33
    else:
        a33 = 2.0
    return base, a33


def cmd_check(args) -> int:
    problem = _Problem(args)
    model = problem.build_model()
    theorems = _parse_theorems(
        args.theorem, problem.fixture.theorems if problem.fixture else _CANONICAL_ORDER
    )
    grid = problem.grid(args)
    policy = LimsupPolicy(
        theta_scale=args.theta_scale if args.theta_scale is not None else 1e3,
        growth_rho=args.growth_rho if args.growth_rho is not None else 2.0,
    )
    base_alpha, alpha33 = _alphas(args, problem)
    d_fn = problem.d_fn()
    breakpoints = problem.breakpoints(grid.t_end)
    reports = []
    for theorem in theorems:
        if theorem == "THM33":
            target = problem.split_for(model)
            alpha = alpha33
        else:
            target = model
            alpha = None if theorem == "LAZER" else base_alpha
        reports.append(
            theorem_verdict(
                target,
                theorem,
                alpha=alpha,
                grid=grid,
                policy=policy,
                d_fn=d_fn,
                breakpoints=breakpoints,
            )
        )
    if args.csv:
        _write_trajectory_csv(args.csv, reports)
    payload = {
        "config": problem.config(
            {
                "command": "check",
                "theorems": theorems,
                "alpha": base_alpha,
                "alpha33": alpha33,
                "grid": grid.as_dict(),
                "policy": policy.as_dict(),
            }
        ),
        "theorem_reports": [_theorem_dict(r) for r in reports],
        "trajectories_ref": args.csv,
        "warnings": sorted({w for r in reports for w in r.warnings}),
        "version": __version__,
    }
    _dump_json(payload, args.out)
    return 0


def cmd_verify(args) -> int:
    problem = _Problem(args)
    model = problem.build_ode_model()
    controls = OdeControls(
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        h_max=args.h_max,
        blow_up=args.blow_up,
        feature_windows=problem.feature_windows(args.tmax),
    )
    report = oscillation_report(
        model, args.tmax, n_random=args.combos, seed=args.seed, controls=controls,
        min_zeros=args.min_zeros,
    )
    payload = {
        "config": problem.config(
            {
                "command": "verify",
                "t_max": args.tmax,
                "combos": args.combos,
                "seed": args.seed,
                "min_zeros": args.min_zeros,
                "controls": controls.as_dict(),
            }
        ),
        "has_oscillatory_evidence": report.has_oscillatory_evidence,
        "solutions": [
            {
                "label": s.label,
                "initial": list(s.initial),
                "zero_count": s.zero_count,
                "last_zero": s.last_zero,
                "classification": s.classification,
                "status": s.status,
                "t_end": s.t_end,
            }
            for s in report.solutions
        ],
        "warnings": list(report.warnings),
        "version": __version__,
    }
    _dump_json(payload, args.out)
    return 0


def _parse_sweep_spec(spec: str):
    if "=" not in spec:
        raise ValueError(f"--sweep expects name=start:stop:step, got {spec!r}")
    name, _, rng = spec.partition("=")
    parts = rng.split(":")
    if len(parts) != 3:
        raise ValueError(f"--sweep expects name=start:stop:step, got {spec!r}")
    start, stop, step = (float(x) for x in parts)
    if step <= 0:
        raise ValueError(f"sweep step must be positive in {spec!r}")
    values = []
    k = 0
    while True:
        v = start + k * step
        if v > stop + 1e-9 * max(1.0, abs(step)):
            break
        values.append(v)
        k += 1
    if not values:
        raise ValueError(f"sweep range {spec!r} is empty")
    return name.strip(), values


def _sweep_point(payload):
    (p_src, q_src, r_src, t0, params, theorems, base_alpha, alpha33, grid_dict,
     d_src, split_srcs, combo, tmax, blow_up) = payload
    model = build_model(p_src, q_src, r_src, params, t0=t0)
    grid = GeometricGrid(**grid_dict)
    d_fn = None
    if d_src:
        d_fn = compile_fn(parse(d_src, param_names=tuple(params)), params)
    row = []
    for theorem in theorems:
        if theorem == "THM33":
            target = make_split(model, p1_src=split_srcs[0], p2_src=split_srcs[1]) if split_srcs else make_split(model)
            alpha = alpha33
        else:
            target = model
            alpha = None if theorem == "LAZER" else base_alpha
        rep = theorem_verdict(target, theorem, alpha=alpha, grid=grid, d_fn=d_fn)
        row.append(rep.overall)
    traj = integrate_third_order(model, combo, tmax, OdeControls(blow_up=blow_up))
    row.append(str(len(count_zeros(traj))))
    return row


def cmd_sweep(args) -> int:
    problem = _Problem(args)
    theorems = _parse_theorems(
        args.theorem, problem.fixture.theorems if problem.fixture else _CANONICAL_ORDER
    )
    base_alpha, alpha33 = _alphas(args, problem)
    grid = problem.grid(args)
    sweeps = [_parse_sweep_spec(s) for s in args.sweep]
    for name, _ in sweeps:
        if problem.fixture and name not in problem.params:
            raise ValueError(f"sweep parameter {name!r} unknown to fixture {problem.fixture.name}")
    rng = np.random.default_rng(args.seed)
    v = rng.normal(size=3)
    combo = tuple(float(x) for x in v / np.linalg.norm(v))

    points = [()]
    for _, values in sweeps:
        points = [prev + (val,) for prev in points for val in values]
    payloads = []
    for point in points:
        params = dict(problem.params)
        for (name, _), val in zip(sweeps, point):
            params[name] = val
        payloads.append(
            (problem.p_src, problem.q_src, problem.r_src, problem.t0, params,
             tuple(theorems), base_alpha, alpha33, grid.as_dict(), problem.d_src,
             problem.split_srcs, combo, args.tmax, args.blow_up)
        )
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        rows = [_sweep_point(p) for p in payloads]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    header = [name for name, _ in sweeps]
    header += [f"{t.lower()}_overall" for t in theorems]
    header += ["zero_count"]
    writer.writerow(header)
    for point, row in zip(points, rows):
        writer.writerow([repr(float(v)) for v in point] + row)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_comparison_fixture(name: str):
    """Named input bundles for the comparison harness.

    identity: the same problem twice, equality throughout.
    linear: both f == 0; y1 ramps away from y2 == 0 at unit rate.
    thm32-usage: u' + (3/2)u^2 + p_- u = 0 against the equation satisfied
    by y = phi'/phi of an integrated growing solution, with the remainder
    folded into h2.
    """
    if name == "identity":
        prob1 = RiccatiProblem(1.0, 0.0, 0.0, 0.0, 1.0)
        prob2 = RiccatiProblem(1.0, 0.0, 0.0, 0.0, 1.0)
        return {"prob1": prob1, "prob2": prob2, "eta1": 1.0, "eta2": 1.0,
                "gamma": 1.0, "t_max": 5.0}
    if name == "linear":
        prob1 = RiccatiProblem(0.0, 0.0, -1.0, 0.0, 0.0)
        prob2 = RiccatiProblem(0.0, 0.0, 0.0, 0.0, 0.0)
        return {"prob1": prob1, "prob2": prob2, "eta1": (lambda t: t), "eta2": 0.0,
                "gamma": 0.0, "t_max": 5.0}
    if name == "thm32-usage":
        fix = get_fixture("example31")
        model = fix.build()
        t1, t_hi = 1.2, 2.4
        traj = integrate_third_order(
            model, (1.0, 1.0, 1.0), t_hi + 0.2, OdeControls(rel_tol=1e-10, abs_tol=1e-12)
        )

        def y_fn(t):
            st = state_at(traj, t, model)
            return st[1] / st[0]

        def h2_fn(t):
            st = state_at(traj, t, model)
            y = st[1] / st[0]
            yp = st[2] / st[0] - y * y
            return -(yp + 1.5 * y * y + p_minus(model, t) * y)

        pm = lambda t: p_minus(model, t)
        y_t1 = y_fn(t1)
        gamma = y_t1 + 0.5
        m_val = model.params["M"]
        g_val = model.params["gamma"]

        def eta1(t):
            return gamma * math.exp(m_val * (t ** (g_val + 1.0) - t1 ** (g_val + 1.0)) / (g_val + 1.0))

        prob1 = RiccatiProblem(1.5, pm, 0.0, t1, gamma)
        prob2 = RiccatiProblem(1.5, pm, h2_fn, t1, y_t1)
        return {"prob1": prob1, "prob2": prob2, "eta1": eta1, "eta2": y_fn,
                "gamma": gamma, "t_max": t_hi}
    raise ValueError(f"unknown comparison fixture {name!r}; use identity, linear, or thm32-usage")


def cmd_riccati(args) -> int:
    variant = AS_WRITTEN if args.variant == "as-written" else LINEARIZED
    bundle = build_comparison_fixture(args.comparison)
    t_max = args.t_end if args.t_end is not None else bundle["t_max"]
    report = comparison_check(
        bundle["prob1"],
        bundle["prob2"],
        bundle["eta1"],
        bundle["eta2"],
        bundle["gamma"],
        t_max,
        variant,
        n_grid=args.n_grid,
    )
    payload = {
        "config": {
            "command": "riccati",
            "comparison": args.comparison,
            "variant": args.variant,
            "t_end": t_max,
            "n_grid": args.n_grid,
        },
        "report": report.to_dict(),
        "version": __version__,
    }
    _dump_json(payload, args.out)
    return 0


def _add_model_flags(sp, with_d=True):
    sp.add_argument("--fixture", choices=sorted(FIXTURES), help="named coefficient fixture")
    sp.add_argument("--p", help="source for p(t)")
    sp.add_argument("--q", help="source for q(t)")
    sp.add_argument("--r", help="source for r(t)")
    sp.add_argument("--t0", type=float, default=1.0, help="left endpoint (default 1)")
    sp.add_argument("--param", action="append", metavar="NAME=VALUE",
                    help="bind a parameter; repeatable")
    if with_d:
        sp.add_argument("--d-override", metavar="EXPR",
                        help="expression for the minimum function D, replacing the computed one")


def _add_grid_flags(sp):
    sp.add_argument("--grid-ratio", type=float, default=None, help="geometric grid ratio (default 1.15)")
    sp.add_argument("--grid-count", type=int, default=None, help="geometric grid length (default 120)")
    sp.add_argument("--theta-scale", type=float, default=None, help="divergence threshold scale (default 1e3)")
    sp.add_argument("--growth-rho", type=float, default=None, help="window growth factor for DIVERGES (default 2)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osc3",
        description="Oscillation criteria for phi''' + p phi'' + q phi' + r phi = 0",
    )
    parser.add_argument("--version", action="version", version=f"osc3 {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="evaluate theorem conditions")
    _add_model_flags(check)
    check.add_argument("--theorem", default=None,
                       help="comma list of thm31,thm32,thm33,lazer or 'all' (default: all)")
    check.add_argument("--alpha", type=float, default=None, help="alpha for the weighted criteria")
    check.add_argument("--alpha33", type=float, default=None, help="alpha for the alpha>1 criterion (default 2)")
    check.add_argument("--split-p1", help="source for the integrable part of p_-")
    check.add_argument("--split-p2", help="source for the bounded part of p_-")
    _add_grid_flags(check)
    check.add_argument("--csv", help="write criterion trajectories to this CSV path")
    check.add_argument("--out", help="write the JSON report here (default stdout)")
    check.set_defaults(func=cmd_check)

    verify = sub.add_parser("verify", help="integrate the equation and classify solutions")
    _add_model_flags(verify, with_d=False)
    verify.add_argument("--tmax", type=float, default=100.0)
    verify.add_argument("--combos", type=int, default=5, help="random unit-vector initial states")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--min-zeros", type=int, default=5)
    verify.add_argument("--rel-tol", type=float, default=1e-9)
    verify.add_argument("--abs-tol", type=float, default=1e-12)
    verify.add_argument("--h-max", type=float, default=0.1)
    verify.add_argument("--blow-up", type=float, default=1e30)
    verify.add_argument("--out", help="write the JSON report here (default stdout)")
    verify.set_defaults(func=cmd_verify)

    sweep = sub.add_parser("sweep", help="evaluate checks over a parameter grid")
    _add_model_flags(sweep)
    sweep.add_argument("--sweep", action="append", required=True, metavar="NAME=START:STOP:STEP")
    sweep.add_argument("--theorem", default=None)
    sweep.add_argument("--alpha", type=float, default=None)
    sweep.add_argument("--alpha33", type=float, default=None)
    _add_grid_flags(sweep)
    sweep.add_argument("--tmax", type=float, default=30.0, help="horizon for the zero-count column")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--blow-up", type=float, default=1e30)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--out", help="write the CSV here (default stdout)")
    sweep.set_defaults(func=cmd_sweep)

    ricc = sub.add_parser("riccati", help="run the comparison harness on a named fixture")
    ricc.add_argument("--comparison", default="identity",
                      choices=("identity", "linear", "thm32-usage"))
    ricc.add_argument("--variant", default="as-written", choices=("as-written", "linearized"))
    ricc.add_argument("--t-end", type=float, default=None)
    ricc.add_argument("--n-grid", type=int, default=400)
    ricc.add_argument("--out", help="write the JSON report here (default stdout)")
    ricc.set_defaults(func=cmd_riccati)
    return parser


# flags whose values are expressions and may legitimately begin with "-"
_EXPR_FLAGS = ("--p", "--q", "--r", "--d-override", "--split-p1", "--split-p2")


def _absorb_expression_values(argv):
    """Rewrite ["--p", "-t^2"] as ["--p=-t^2"].

    argparse reads a value starting with a dash as another option, which
    would reject perfectly good sources like -M*t^gamma in the natural
    space-separated spelling.
    """
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _EXPR_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(tok + "=" + argv[i + 1])
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_absorb_expression_values(list(argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ExprError, ModelError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
