"""Weighted-average oscillation criteria and the numerical verdict engine.

The criteria all reduce to a scalar function S(t) sampled along a geometric
grid: either a plain running integral of the minimum function D, or a
weighted average of the form (1/t^m) int (t-tau)^m [...] dtau.  A limsup or
liminf statement about S is then replaced by a documented finite-horizon
classification (DIVERGES / BOUNDED / INCONCLUSIVE) with its evidence
attached, since no finite computation can decide a limsup.

For integer exponents the weighted averages expand binomially into
cumulative moment integrals int tau^j g(tau) dtau, so a whole grid of S
values costs one pass over [t0, t_end] instead of one quadrature per grid
point.  Non-integer exponents fall back to an independent adaptive
quadrature per point.  Both paths agree to quadrature tolerance and the
tests hold them to that.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .coeffs import (
    CoefficientModel,
    SignReport,
    SplitModel,
    check_condition_a,
    d_closed,
    p_minus,
    sample_points,
)
from .quad import cumulative, integrate_adaptive

THM31B = "THM31B"
THM32C = "THM32C"
THM32D = "THM32D"
THM33E = "THM33E"
THM33G = "THM33G"
LAZER = "LAZER"

DIVERGES = "DIVERGES"
BOUNDED = "BOUNDED"
INCONCLUSIVE = "INCONCLUSIVE"

APPLIES = "APPLIES"
DOES_NOT_APPLY = "DOES_NOT_APPLY"

LAZER_CONST = 2.0 / (3.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class GeometricGrid:
    """Sample points t_k = t_start * ratio^k, k = 0 .. count-1."""

    t_start: float
    ratio: float = 1.15
    count: int = 120

    def __post_init__(self):
        if self.t_start <= 0.0:
            raise ValueError(f"t_start must be positive, got {self.t_start!r}")
        if self.ratio <= 1.0:
            raise ValueError(f"ratio must exceed 1, got {self.ratio!r}")
        if self.count < 16:
            raise ValueError(f"count must be at least 16, got {self.count!r}")

    def points(self) -> np.ndarray:
        return self.t_start * self.ratio ** np.arange(self.count)

    @property
    def t_end(self) -> float:
        return float(self.t_start * self.ratio ** (self.count - 1))

    def as_dict(self) -> dict:
        return {"t_start": self.t_start, "ratio": self.ratio, "count": self.count}


@dataclass(frozen=True)
class LimsupPolicy:
    """Finite-horizon stand-in for limsup = +infinity.

    The threshold is theta_scale * (1 + |S at the reference index|), so a
    criterion whose early samples are already large is judged on growth
    beyond that scale rather than on an absolute number.
    """

    theta_scale: float = 1e3
    growth_rho: float = 2.0
    window_fraction: float = 0.25
    bounded_rel: float = 0.05
    theta_ref_index: int = 4

    def as_dict(self) -> dict:
        return {
            "theta_scale": self.theta_scale,
            "growth_rho": self.growth_rho,
            "window_fraction": self.window_fraction,
            "bounded_rel": self.bounded_rel,
            "theta_ref_index": self.theta_ref_index,
        }


@dataclass
class Verdict:
    kind: str
    evidence: dict

    def as_dict(self) -> dict:
        return {"kind": self.kind, "evidence": self.evidence}


def classify_limsup(samples, policy: LimsupPolicy | None = None) -> Verdict:
    """Classify whether a sampled S(t_k) looks like limsup = +infinity.

    DIVERGES: the last-window max exceeds the threshold and grew by at
    least growth_rho over the previous window (or rose from <= 0).
    BOUNDED: everything stays under the threshold and the window maxima
    have either stabilized (within bounded_rel) or are declining, meaning
    the running sup was already attained.  Anything else is INCONCLUSIVE.
    """
    policy = policy or LimsupPolicy()
    s = np.asarray(samples, dtype=float)
    if len(s) < 16:
        raise ValueError(f"need at least 16 samples, got {len(s)}")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    ref = abs(float(s[min(policy.theta_ref_index, len(s) - 1)]))
    theta = policy.theta_scale * (1.0 + ref)
    w = max(int(len(s) * policy.window_fraction), 4)
    m_last = float(np.max(s[-w:]))
    m_prev = float(np.max(s[-2 * w : -w]))
    run = float(np.max(s))
    growth = m_last / m_prev if m_prev > 0.0 else None
    evidence = {
        "running_max": run,
        "max_last_window": m_last,
        "max_prev_window": m_prev,
        "growth_factor": growth,
        "threshold": theta,
        "window_size": w,
        "n_samples": int(len(s)),
    }
    if m_last > theta and (m_prev <= 0.0 or m_last >= policy.growth_rho * m_prev):
        return Verdict(DIVERGES, evidence)
    if run < theta:
        scale = max(abs(m_last), abs(m_prev), 1e-12)
        if abs(m_last - m_prev) <= policy.bounded_rel * scale:
            return Verdict(BOUNDED, evidence)
        if m_last < m_prev:
            return Verdict(BOUNDED, evidence)
    return Verdict(INCONCLUSIVE, evidence)


def classify_bounded_below(samples, policy: LimsupPolicy | None = None) -> Verdict:
    """Classify whether S(t_k) stays bounded below (liminf finite).

    BOUNDED means established; DIVERGES means the samples are marching to
    minus infinity; INCONCLUSIVE otherwise.  Implemented as classify_limsup
    of the negated samples with the evidence relabeled.
    """
    neg = classify_limsup(np.negative(np.asarray(samples, dtype=float)), policy)
    ev = neg.evidence
    growth = ev["growth_factor"]
    evidence = {
        "running_min": -ev["running_max"],
        "min_last_window": -ev["max_last_window"],
        "min_prev_window": -ev["max_prev_window"],
        "decline_factor": growth,
        "lower_threshold": -ev["threshold"],
        "window_size": ev["window_size"],
        "n_samples": ev["n_samples"],
    }
    return Verdict(neg.kind, evidence)


@dataclass
class CriterionTrajectory:
    criterion_id: str
    alpha: float | None
    t: np.ndarray
    values: np.ndarray
    verdict: Verdict
    warnings: list = field(default_factory=list)

    @property
    def samples(self) -> list:
        return [(float(a), float(b)) for a, b in zip(self.t, self.values)]


def kamenev_transform(f: Callable[[float], float], T: float, alpha: float, t: float, *, tol: float = 1e-9) -> float:
    """Weighted average (alpha(alpha+1)/t^(alpha+1)) int_T^t (t-tau)^(alpha-1) f dtau.

    For alpha < 1 the endpoint factor is singular at tau = t, so the
    integral is computed after the substitution s = (t-tau)^alpha, which
    flattens it to (1/alpha) int_0^{(t-T)^alpha} f(t - s^(1/alpha)) ds.
    """
    if T <= 0.0:
        raise ValueError(f"T must be positive, got {T!r}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if t <= T:
        raise ValueError(f"t={t!r} must exceed T={T!r}")
    if alpha >= 1.0:
        res = integrate_adaptive(lambda tau: (t - tau) ** (alpha - 1.0) * f(tau), T, t, tol)
        integral = res.value
    else:
        s_max = (t - T) ** alpha
        inv = 1.0 / alpha
        res = integrate_adaptive(lambda s: f(t - s ** inv), 0.0, s_max, tol)
        integral = res.value / alpha
    if res.warning:
        _warnings.warn(f"quadrature depth cap reached in kamenev_transform at t={t:.6g}", RuntimeWarning)
    return alpha * (alpha + 1.0) / t ** (alpha + 1.0) * integral


def _as_base(model_or_split) -> CoefficientModel:
    if isinstance(model_or_split, SplitModel):
        return model_or_split.base
    return model_or_split


def _d_fn_for(model: CoefficientModel, d_fn) -> Callable[[float], float]:
    if d_fn is not None:
        return d_fn
    return lambda t: d_closed(model, t)


def _interior(breakpoints, a, b):
    if not breakpoints:
        return None
    picked = [x for x in breakpoints if a < x < b]
    return picked or None


def _cumulative_at(f, a, pts, tol, breakpoints):
    """Values of int_a^{t_k} f for every grid point, plus the warning flag."""
    tab = cumulative(f, a, list(pts), tol, breakpoints=_interior(breakpoints, a, pts[-1]))
    return np.asarray(tab.values[-len(pts):], dtype=float), tab.warning


def _moment_series(g, a, pts, m_int, tol, breakpoints):
    """int_a^{t_k} (t_k - tau)^m g(tau) dtau via the binomial moment expansion."""
    warn = False
    moments = []
    for j in range(m_int + 1):
        def fj(tau, _j=j):
            return tau ** _j * g(tau)

        vals, w = _cumulative_at(fj, a, pts, tol, breakpoints)
        warn = warn or w
        moments.append(vals)
    out = np.zeros(len(pts))
    for j in range(m_int + 1):
        out += math.comb(m_int, j) * (-1.0) ** j * pts ** (m_int - j) * moments[j]
    return out, warn


def _direct_series(g, a, pts, m, tol, breakpoints):
    """Same integrals, one adaptive quadrature per grid point."""
    out = np.zeros(len(pts))
    warn = False
    for k, t in enumerate(pts):
        if t <= a:
            continue
        res = integrate_adaptive(
            lambda tau, _t=t: (_t - tau) ** m * g(tau), a, float(t), tol,
            breakpoints=_interior(breakpoints, a, float(t)),
        )
        out[k] = res.value
        warn = warn or res.warning
    return out, warn


def _weighted_series(g, a, pts, m, tol, breakpoints, force_direct=False):
    m_int = int(round(m))
    if not force_direct and abs(m - m_int) < 1e-12 and m_int >= 0:
        return _moment_series(g, a, pts, m_int, tol, breakpoints)
    return _direct_series(g, a, pts, m, tol, breakpoints)


def cumulative_D(
    model: CoefficientModel,
    grid: GeometricGrid,
    criterion_id: str = THM32C,
    *,
    d_fn=None,
    breakpoints=None,
    tol: float = 1e-9,
    policy: LimsupPolicy | None = None,
) -> CriterionTrajectory:
    """Running integral S(t_k) = int_{t0}^{t_k} D, classified per criterion.

    THM32C asks for divergence to +infinity; THM33E only for boundedness
    below, so the two share samples but not verdict logic.
    """
    if criterion_id not in (THM32C, THM33E):
        raise ValueError(f"criterion_id must be {THM32C} or {THM33E}, got {criterion_id!r}")
    pts = grid.points()
    if pts[0] < model.t0:
        raise ValueError(f"grid starts at {pts[0]!r} before t0={model.t0!r}")
    d = _d_fn_for(model, d_fn)
    vals, warn = _cumulative_at(d, model.t0, pts, tol, breakpoints)
    warnings = ["quadrature depth cap reached"] if warn else []
    if criterion_id == THM32C:
        verdict = classify_limsup(vals, policy)
    else:
        verdict = classify_bounded_below(vals, policy)
    return CriterionTrajectory(criterion_id, None, pts, vals, verdict, warnings)


def criterion_kamenev(
    model_or_split,
    alpha: float,
    mode: str,
    grid: GeometricGrid,
    *,
    d_fn=None,
    breakpoints=None,
    tol: float = 1e-9,
    policy: LimsupPolicy | None = None,
    force_direct: bool = False,
) -> CriterionTrajectory:
    """Weighted-average criteria sampled along the grid.

    THM31B: S(t) = t^-(a+1) int (t-tau)^a [(t-tau) D - ((a+1)/9) p_-^2] dtau, a > 0
    THM32D: same weight with -(a+1) p_- in place of -((a+1)/9) p_-^2, a > 0
    THM33G: S(t) = t^-a int (t-tau)^a D dtau, a > 1

    The exponent conventions differ between the modes on purpose; each is
    evaluated exactly as displayed.
    """
    model = _as_base(model_or_split)
    if mode in (THM31B, THM32D):
        if alpha <= 0.0:
            raise ValueError(f"{mode} needs alpha > 0, got {alpha!r}")
    elif mode == THM33G:
        if alpha <= 1.0:
            raise ValueError(f"{THM33G} needs alpha > 1, got {alpha!r}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    pts = grid.points()
    if pts[0] < model.t0:
        raise ValueError(f"grid starts at {pts[0]!r} before t0={model.t0!r}")
    a0 = model.t0
    d = _d_fn_for(model, d_fn)
    warnings = []
    if mode == THM33G:
        series, warn = _weighted_series(d, a0, pts, alpha, tol, breakpoints, force_direct)
        vals = series / pts ** alpha
    else:
        d_part, warn_d = _weighted_series(d, a0, pts, alpha + 1.0, tol, breakpoints, force_direct)
        if mode == THM31B:
            def pen(tau):
                v = p_minus(model, tau)
                return v * v

            coeff = (alpha + 1.0) / 9.0
        else:
            def pen(tau):
                return p_minus(model, tau)

            coeff = alpha + 1.0
        p_part, warn_p = _weighted_series(pen, a0, pts, alpha, tol, breakpoints, force_direct)
        vals = (d_part - coeff * p_part) / pts ** (alpha + 1.0)
        warn = warn_d or warn_p
    if warn:
        warnings.append("quadrature depth cap reached")
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{mode} produced non-finite samples")
    verdict = classify_limsup(vals, policy)
    return CriterionTrajectory(mode, float(alpha), pts, vals, verdict, warnings)


def lazer_integrand(model: CoefficientModel) -> Callable[[float], float]:
    """r(t) - (2/(3 sqrt 3)) (-q(t))^(3/2), with -q clamped at 0."""

    def fn(t: float) -> float:
        q = model.q_at(t)
        neg_q = -q if q < 0.0 else 0.0
        return model.r_at(t) - LAZER_CONST * neg_q ** 1.5

    return fn


def criterion_lazer(
    model: CoefficientModel,
    grid: GeometricGrid,
    *,
    tol: float = 1e-9,
    policy: LimsupPolicy | None = None,
    breakpoints=None,
) -> CriterionTrajectory:
    """Classical integral test: S(t) = int_{t0}^t [r - (2/(3 sqrt 3))(-q)^(3/2)].

    Meaningful when p is identically zero; sampled violations of that (and
    of q <= 0) are attached as warnings rather than raised, so the verdict
    still reports what the integral does.
    """
    pts = grid.points()
    if pts[0] < model.t0:
        raise ValueError(f"grid starts at {pts[0]!r} before t0={model.t0!r}")
    warnings = []
    probe = sample_points(model.t0, span=grid.t_end - model.t0, n=512)
    p_abs = np.array([abs(model.p_at(t)) for t in probe])
    scale = 1.0 + float(
        np.max([abs(model.q_at(t)) + abs(model.r_at(t)) for t in probe[:: max(len(probe) // 32, 1)]])
    )
    if float(np.max(p_abs)) > 1e-9 * scale:
        k = int(np.argmax(p_abs))
        warnings.append(
            f"p is not identically zero (|p({probe[k]:.6g})| = {p_abs[k]:.3g}); "
            "the integral test assumes p == 0"
        )
    if any(model.q_at(t) > 1e-9 * scale for t in probe[:: max(len(probe) // 64, 1)]):
        warnings.append("q takes positive values; (-q)^(3/2) clamped at 0 there")
    vals, warn = _cumulative_at(lazer_integrand(model), model.t0, pts, tol, breakpoints)
    if warn:
        warnings.append("quadrature depth cap reached")
    verdict = classify_limsup(vals, policy)
    return CriterionTrajectory(LAZER, None, pts, vals, verdict, warnings)


@dataclass
class Check33fReport:
    holds: bool
    integrable_ok: bool
    integral_verdict: Verdict
    integral_tail: float
    bounded_ok: bool
    sup_by_decade: list
    horizon: float

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "integrable_ok": self.integrable_ok,
            "integral_verdict": self.integral_verdict.as_dict(),
            "integral_tail": self.integral_tail,
            "bounded_ok": self.bounded_ok,
            "sup_by_decade": self.sup_by_decade,
            "horizon": self.horizon,
        }


def check_33f(
    split: SplitModel,
    horizon: float = 1e4,
    *,
    breakpoints=None,
    tol: float = 1e-9,
    policy: LimsupPolicy | None = None,
) -> Check33fReport:
    """Split-coefficient condition: int |p1| finite and p2 bounded.

    Integrability is judged by running int |p1| out to the horizon on a
    geometric grid and requiring the BOUNDED classification; boundedness of
    p2 samples the sup per decade and requires the last decade's sup not to
    exceed the earlier ones by more than 5%.
    """
    model = split.base
    t0 = max(model.t0, 1e-6)
    ratio = 1.15
    count = max(int(math.ceil(math.log(horizon / t0) / math.log(ratio))) + 1, 16)
    grid = GeometricGrid(t0, ratio, count)
    pts = grid.points()

    def abs_p1(t: float) -> float:
        return abs(split.p1_at(t))

    vals, warn = _cumulative_at(abs_p1, model.t0, pts, tol, breakpoints)
    verdict = classify_limsup(vals, policy)
    integrable_ok = verdict.kind == BOUNDED

    decades = max(int(math.ceil(math.log10(horizon / t0))), 1)
    sups = []
    lo = t0
    for _ in range(decades):
        hi = min(lo * 10.0, t0 * horizon)
        seg = sample_points(lo, span=hi - lo, n=256)
        sups.append(float(np.max([abs(split.p2_at(t)) for t in seg])))
        lo = hi
    finite = all(math.isfinite(s) for s in sups)
    if len(sups) > 1:
        prev_max = max(sups[:-1])
        stable = sups[-1] <= 1.05 * prev_max + 1e-12
    else:
        stable = True
    bounded_ok = finite and stable
    return Check33fReport(
        integrable_ok and bounded_ok,
        integrable_ok,
        verdict,
        float(vals[-1]),
        bounded_ok,
        sups,
        float(horizon),
    )


@dataclass
class TheoremReport:
    theorem: str
    alpha: float | None
    condition_results: dict
    overall: str
    grid: GeometricGrid
    policy: LimsupPolicy
    trajectories: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


_THEOREMS = ("THM31", "THM32", "THM33", "LAZER")
_DEFAULT_ALPHA = {"THM31": 1.0, "THM32": 1.0, "THM33": 2.0, "LAZER": None}


def _positive(letter: str, result) -> bool:
    if letter == "a":
        return bool(result.holds)
    if letter in ("b", "c", "d", "g", "integral"):
        return result.kind == DIVERGES
    if letter == "e":
        return result.kind == BOUNDED
    if letter == "f":
        return bool(result.holds)
    if letter == "p_zero":
        return bool(result["holds"])
    raise KeyError(letter)


def _negative(letter: str, result) -> bool:
    if letter == "a":
        return not result.holds
    if letter in ("b", "c", "d", "g", "integral"):
        return result.kind == BOUNDED
    if letter == "e":
        return result.kind == DIVERGES
    if letter == "f":
        return not result.holds
    if letter == "p_zero":
        return not result["holds"]
    raise KeyError(letter)


def _p_zero_check(model: CoefficientModel, span: float) -> dict:
    probe = sample_points(model.t0, span=span, n=512)
    worst_t, worst = model.t0, 0.0
    scale = 1.0
    for t in probe:
        v = abs(model.p_at(t))
        scale = max(scale, abs(model.q_at(t)) + abs(model.r_at(t)))
        if v > worst:
            worst, worst_t = v, t
    holds = worst <= 1e-9 * (1.0 + scale)
    return {"holds": holds, "max_abs_p": worst, "at": float(worst_t)}


def theorem_verdict(
    model_or_split,
    theorem: str,
    *,
    alpha: float | None = None,
    grid: GeometricGrid | None = None,
    policy: LimsupPolicy | None = None,
    d_fn=None,
    breakpoints=None,
    sign_span: float = 1e4,
    horizon_33f: float = 1e4,
    tol: float = 1e-9,
) -> TheoremReport:
    """Evaluate every condition of one theorem and combine the verdicts.

    Required conditions: THM31 needs (a),(b); THM32 needs (a),(c),(d);
    THM33 needs (a),(e),(f),(g) and a SplitModel; LAZER needs p == 0, (a),
    and the divergent integral.  Overall is APPLIES only when every piece
    is positively established, DOES_NOT_APPLY when any piece is
    definitively refuted, INCONCLUSIVE otherwise.
    """
    if theorem not in _THEOREMS:
        raise ValueError(f"theorem must be one of {_THEOREMS}, got {theorem!r}")
    split = model_or_split if isinstance(model_or_split, SplitModel) else None
    model = _as_base(model_or_split)
    if theorem == "THM33" and split is None:
        raise ValueError("THM33 requires a SplitModel (conditions on p1, p2)")
    if alpha is None:
        alpha = _DEFAULT_ALPHA[theorem]
    grid = grid or GeometricGrid(model.t0)
    policy = policy or LimsupPolicy()
    conditions: dict = {}
    trajectories: dict = {}
    warnings: list = []

    conditions["a"] = check_condition_a(model, span=sign_span)

    def run(letter, traj):
        trajectories[letter] = traj
        conditions[letter] = traj.verdict
        warnings.extend(f"({letter}) {w}" for w in traj.warnings)

    if theorem == "THM31":
        run("b", criterion_kamenev(model, alpha, THM31B, grid, d_fn=d_fn, breakpoints=breakpoints, tol=tol, policy=policy))
    elif theorem == "THM32":
        run("c", cumulative_D(model, grid, THM32C, d_fn=d_fn, breakpoints=breakpoints, tol=tol, policy=policy))
        run("d", criterion_kamenev(model, alpha, THM32D, grid, d_fn=d_fn, breakpoints=breakpoints, tol=tol, policy=policy))
    elif theorem == "THM33":
        run("e", cumulative_D(model, grid, THM33E, d_fn=d_fn, breakpoints=breakpoints, tol=tol, policy=policy))
        conditions["f"] = check_33f(split, horizon_33f, breakpoints=breakpoints, tol=tol, policy=policy)
        run("g", criterion_kamenev(model, alpha, THM33G, grid, d_fn=d_fn, breakpoints=breakpoints, tol=tol, policy=policy))
    else:
        conditions["p_zero"] = _p_zero_check(model, sign_span)
        traj = criterion_lazer(model, grid, tol=tol, policy=policy, breakpoints=breakpoints)
        trajectories["integral"] = traj
        conditions["integral"] = traj.verdict
        warnings.extend(f"(integral) {w}" for w in traj.warnings)

    if all(_positive(k, v) for k, v in conditions.items()):
        overall = APPLIES
    elif any(_negative(k, v) for k, v in conditions.items()):
        overall = DOES_NOT_APPLY
    else:
        overall = INCONCLUSIVE
    return TheoremReport(theorem, alpha, conditions, overall, grid, policy, trajectories, warnings)
