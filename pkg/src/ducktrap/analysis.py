"""Derived objects of the canard and fold problems.

Critical parameter values, the equilibrium curve, the conserved quantity of
chart K2, half cycles, the separating line P_c, slow-manifold expansions and
the orbit classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .blowup import Region, RegionLabel, USetConfig, classify_U, collar_halfwidths, in_V, nullcline_x
from .core import PlanePoint, PointLike, SystemSpec, _xy, equilibrium_point
from .errors import (BracketFailure, DomainError, NoCycle, PreconditionError, RootLost,
                     Unclassifiable)
from .integrate import (Event, EventKind, HybridTrajectory, Regime, Section, StopPolicy, integrate,
                        transition_map_fold)

__all__ = [
    "lambda_H_leading",
    "lambda_c_leading",
    "lambda_H_numeric",
    "lambda_c_numeric",
    "lambda_sc_numeric",
    "lambda_star_numeric",
    "CriticalValues",
    "critical_values",
    "equilibrium_height",
    "gamma_e",
    "H_value",
    "c_of_h",
    "gamma_c2",
    "return_map_linearized",
    "slow_manifold_x",
    "slow_manifold_numeric",
    "left_return",
    "HalfCycle",
    "half_cycle",
    "has_cycle",
    "find_Pc",
    "Outcome",
    "OrbitClass",
    "classify_orbit",
    "fold_exit_heights",
    "fold_scaling_fit",
]


# leading-order critical values ---------------------------------------------

def lambda_H_leading(params) -> float:
    """Hopf value to leading order, -(a2/2) eps.  Any object with a2, eps works."""
    return -0.5 * params.a2 * params.eps


def lambda_c_leading(params) -> float:
    """Maximal-canard value to leading order, (a1 - a2)/4 eps."""
    return 0.25 * (params.a1 - params.a2) * params.eps


def _trace_at_equilibrium(spec: SystemSpec) -> float:
    pe = equilibrium_point(spec)
    d = 1e-7
    gy = (spec.gval(pe.x, pe.y + d) - spec.gval(pe.x, pe.y - d)) / (2 * d)
    return 2.0 * pe.x + spec.eps * gy


def lambda_H_numeric(spec: SystemSpec) -> float:
    """Hopf detector: lambda where the trace of the classical Jacobian at p_e vanishes."""
    lo = 4.0 * lambda_H_leading(spec.params) - spec.eps
    hi = -0.25 * lambda_H_leading(spec.params) + spec.eps
    lim = spec.params.lambda0
    lo, hi = max(lo, -lim), min(hi, lim)
    f = lambda lam: _trace_at_equilibrium(spec.with_lambda(lam))  # noqa: E731
    if f(lo) * f(hi) > 0:
        raise BracketFailure("trace does not change sign on the Hopf bracket")
    return brentq(f, lo, hi, xtol=1e-15, rtol=1e-14)


# equilibria ----------------------------------------------------------------

def equilibrium_height(spec: SystemSpec, x: float, guess: Optional[float] = None) -> float:
    """u with g(x, u, lam) = 0, searched outward from the guess."""
    f = lambda u: spec.gval(x, u)  # noqa: E731
    u0 = x * x if guess is None else guess
    f0 = f(u0)
    if f0 == 0.0:
        return u0
    w = 1e-3
    while w < 1e3:
        for a, b in ((u0 - w, u0), (u0, u0 + w)):
            if f(a) * f(b) <= 0:
                return brentq(f, a, b, xtol=1e-15, rtol=1e-15)
        w *= 2.0
    raise RootLost(f"no equilibrium height at x = {x}")


def gamma_e(spec: SystemSpec, x_grid: Sequence[float]) -> np.ndarray:
    """Nodes (x, u_e(x)) of the equilibrium curve that lie in C0 and in V."""
    out = []
    guess = None
    P = spec.params
    for x in x_grid:
        u = equilibrium_height(spec, float(x), guess)
        guess = u
        if u >= x * x and in_V((x, u), P.eps, P):
            out.append((float(x), u))
    return np.array(out, dtype=float).reshape(-1, 2)


# chart K2 conserved quantity ---------------------------------------------

def H_value(x2: float, y2: float) -> float:
    return 0.5 * math.exp(-2.0 * y2) * (y2 - x2 * x2 + 0.5)


def c_of_h(h: float) -> float:
    if not 0.0 < h <= 0.25:
        raise DomainError(f"c(h) needs h in (0, 1/4], got {h}")
    return -0.5 * math.log(4.0 * h)


def gamma_c2(t2: float) -> tuple[float, float]:
    return 0.5 * t2, 0.25 * t2 * t2 - 0.5


def return_map_linearized(r2: float, lambda2: float, a2: float, c: float) -> tuple[float, float]:
    """Linearized exterior passage in K2: (reentry x2 = lambda2 + c, flight time pi/k)."""
    if not c > 0:
        raise DomainError("c must be positive")
    disc = (2.0 * lambda2 - r2 * a2) ** 2
    if not disc < 4.0:
        raise DomainError("(2 lambda2 - r2 a2)^2 must stay below 4")
    k = 0.5 * math.sqrt(abs(disc - 4.0))
    return lambda2 + c, math.pi / k


# slow manifolds -------------------------------------------------------------

def slow_manifold_x(y: float, branch: str, params) -> float:
    """First-order slow manifold abscissa x = -+sqrt(y) + eps/(4y)(-+sqrt(y) + (a1+a2)y - lam)."""
    eps = params.eps
    if y < eps:
        raise DomainError(f"expansion needs y >= eps, got y = {y}")
    if branch == "attracting":
        sg = -1.0
    elif branch == "repelling":
        sg = 1.0
    else:
        raise ValueError(f"branch must be 'attracting' or 'repelling', got {branch!r}")
    r = math.sqrt(y)
    return sg * r + eps / (4.0 * y) * (sg * r + (params.a1 + params.a2) * y - params.lam)


def slow_manifold_numeric(spec: SystemSpec, ys: Sequence[float], y_start: Optional[float] = None,
                          rtol: float = 1e-12, atol: float = 1e-14) -> np.ndarray:
    """Abscissae of the attracting slow manifold at the heights ys.

    The classical system is integrated forward from the expansion point at
    y_start above the window; the exponential attraction damps the O(eps^2)
    initial offset before the window is reached.
    """
    ys = np.sort(np.asarray(ys, dtype=float))[::-1]
    y0 = y_start if y_start is not None else 2.0 * spec.params.rho ** 2
    x0 = slow_manifold_x(y0, "attracting", spec.params)
    secs = [Section(f"y{k}", (lambda x, y, c=c: y - c), -1, terminal=(k == len(ys) - 1))
            for k, c in enumerate(ys)]
    traj = integrate(spec.classical(), (x0, y0),
                     StopPolicy(domain=None, sections=tuple(secs), rtol=rtol, atol=atol,
                                t_max=1e3 / spec.eps))
    hit = {e.name: e.point.x for e in traj.events if e.kind is EventKind.SECTION}
    if len(hit) != len(ys):
        raise RootLost("attracting manifold did not reach every height")
    return np.array([hit[f"y{k}"] for k in range(len(ys))])[::-1]


# return map and half cycles -------------------------------------------------

def _return_policy(spec: SystemSpec) -> StopPolicy:
    return StopPolicy(t_max=50.0 / spec.eps, stop_after={"ExitC0": 1})


def left_return(spec: SystemSpec, s: float) -> tuple[Optional[float], HybridTrajectory]:
    """Next downward parabola crossing of the classical orbit from (s, s^2), or None."""
    traj = integrate(spec.classical(), (s, s * s), _return_policy(spec))
    ev = traj.final_event
    if ev.kind is EventKind.EXIT_C0:
        return ev.point.x, traj
    return None, traj


@dataclass(frozen=True)
class HalfCycle:
    """Exterior part of the attracting classical cycle and its vertical extensions."""

    lam: float
    arc: np.ndarray
    p_minus: PlanePoint
    p_plus: PlanePoint
    piecewise_gap: float

    @property
    def P_minus(self) -> float:
        return self.p_minus.x

    @property
    def P_plus(self) -> float:
        return self.p_plus.x


def _inside(spec: SystemSpec, s: float) -> bool:
    r, _ = left_return(spec, s)
    return r is not None and r < s


def half_cycle(spec: SystemSpec, lam: Optional[float] = None, tol: float = 1e-10) -> HalfCycle:
    """Locate the attracting cycle via the left parabola return map R(s).

    Starts left of the cycle return further right (or leave V), starts inside
    return further left; the cycle is the boundary between the two, found by
    bisection.
    """
    sp = spec if lam is None else spec.with_lambda(lam)
    cl = sp.classical()
    xe = equilibrium_point(sp).x
    rho = sp.params.rho
    inner = None
    for d in (1e-3, 3e-4, 1e-4, 3e-5):
        if _inside(cl, xe - d):
            inner = xe - d
            break
    if inner is None:
        raise NoCycle(f"focus at lambda = {sp.lam} does not repel; no cycle")
    outer = -rho
    if _inside(cl, outer):
        raise NoCycle("return map has no fixed point inside V")
    while inner - outer > tol:
        mid = 0.5 * (inner + outer)
        if _inside(cl, mid):
            inner = mid
        else:
            outer = mid
    r, traj = left_return(cl, inner)
    if r is None or abs(r - inner) > 1e-8:
        raise NoCycle(f"no closed orbit inside V at lambda = {sp.lam}")
    ext = traj.arcs[0]
    enter = traj.first(EventKind.ENTER_C0)
    pw = integrate(sp.piecewise(), (inner, inner * inner), StopPolicy(stop_after={"EnterC0": 1}))
    pw_enter = pw.first(EventKind.ENTER_C0)
    gap = math.inf if pw_enter is None else abs(pw_enter.point.x - enter.point.x)
    return HalfCycle(sp.lam, ext.points(), PlanePoint(inner, inner * inner), enter.point, gap)


def has_cycle(spec: SystemSpec, s0: Optional[float] = None, max_rev: int = 400,
              tol: float = 1e-8) -> tuple[bool, float]:
    """Forward-iterate the return map; True if it settles on a cycle inside V."""
    cl = spec.classical()
    xe = equilibrium_point(spec).x
    s = max(xe - 0.02, -spec.params.rho + 1e-3) if s0 is None else s0
    for _ in range(max_rev):
        r, _ = left_return(cl, s)
        if r is None:
            return False, s
        if abs(r - s) < tol:
            return abs(r - xe) > 1e-4, r
        s = r
    return False, s


# critical values ------------------------------------------------------------

def _attracting_start(spec: SystemSpec) -> tuple[float, float]:
    y = spec.params.rho ** 2
    return slow_manifold_x(y, "attracting", spec.params), y


def _escapes_below(spec: SystemSpec) -> bool:
    traj = integrate(spec.piecewise(), _attracting_start(spec), StopPolicy(stop_after={"EnterC0": 1}))
    ev = traj.final_event
    return ev.kind is EventKind.EXIT_V and traj.final_arc.regime is Regime.EXTERIOR


def _bisect_lambda(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    plo, phi = pred(lo), pred(hi)
    if plo == phi:
        raise BracketFailure(f"predicate does not change on [{lo:.6g}, {hi:.6g}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid) == plo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambda_c_numeric(spec: SystemSpec, bracket: Optional[tuple[float, float]] = None,
                     tol: float = 1e-12) -> float:
    """Maximal canard value: the orbit on the attracting branch switches from reentering C0 to escaping below."""
    P = spec.params
    if bracket is None:
        lo = lambda_H_leading(P)
        hi = 2.0 * lambda_c_leading(P) + P.eps ** 1.5
        lo, hi = max(lo, -P.lambda0), min(hi, P.lambda0)
    else:
        lo, hi = bracket
    if not lo < hi:
        raise BracketFailure(f"empty bracket [{lo}, {hi}]")
    pred = lambda lam: _escapes_below(spec.with_lambda(lam))  # noqa: E731
    if pred(lo) or not pred(hi):
        raise BracketFailure(f"no reenter/escape switch on [{lo:.6g}, {hi:.6g}]")
    return _bisect_lambda(pred, lo, hi, tol)


def lambda_sc_numeric(spec: SystemSpec, lambda_c: Optional[float] = None,
                      bracket: Optional[tuple[float, float]] = None, tol: float = 1e-12) -> float:
    """Largest lambda with an attracting cycle inside V."""
    if bracket is None:
        lc = lambda_c if lambda_c is not None else lambda_c_numeric(spec)
        lh = lambda_H_numeric(spec)
        lo, hi = 0.5 * (lh + lc), lc + 1e-9
    else:
        lo, hi = bracket
    if not lo < hi:
        raise BracketFailure(f"inverted bracket [{lo}, {hi}]")
    state = {"s": None}

    def pred(lam):
        ok, s = has_cycle(spec.with_lambda(lam), s0=state["s"])
        if ok:
            state["s"] = s + 1e-7
        return ok

    if not pred(lo):
        raise BracketFailure(f"no cycle at lower end {lo:.6g}")
    s_keep = state["s"]
    if pred(hi):
        raise BracketFailure(f"cycle persists at upper end {hi:.6g}")
    state["s"] = s_keep
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _p_plus_outside_collar(spec: SystemSpec, cfg: USetConfig) -> bool:
    try:
        hc = half_cycle(spec)
    except NoCycle:
        return False
    p = hc.p_plus
    xs = nullcline_x(spec, p.y)
    if xs is None:
        return True
    _, right = collar_halfwidths(spec, USetConfig(C5=cfg.C5, C6=cfg.C6, lambda_star=-math.inf))
    return (p.x - xs) / math.sqrt(spec.eps) >= right


def lambda_star_numeric(spec: SystemSpec, cfg: USetConfig = USetConfig(),
                        lambda_sc: Optional[float] = None, tol: float = 1e-9) -> float:
    """lambda where p+ of the half cycle leaves the narrow collar around the nullcline."""
    lh = lambda_H_numeric(spec)
    hi = lambda_sc if lambda_sc is not None else lambda_c_leading(spec.params)
    pred = lambda lam: _p_plus_outside_collar(spec.with_lambda(lam), cfg)  # noqa: E731
    return _bisect_lambda(pred, lh, hi, tol)


@dataclass(frozen=True)
class CriticalValues:
    lambda_H: float
    lambda_c: float
    lambda_sc: Optional[float] = None
    lambda_star: Optional[float] = None
    methods: dict = field(default_factory=dict)

    def ordered(self) -> bool:
        vals = [self.lambda_H, self.lambda_star, self.lambda_sc, self.lambda_c]
        if any(v is None for v in vals):
            return False
        return vals[0] < vals[1] < vals[2] < vals[3]


def critical_values(spec: SystemSpec, numeric: bool = True, cfg: USetConfig = USetConfig()) -> CriticalValues:
    P = spec.params
    if not numeric:
        return CriticalValues(lambda_H_leading(P), lambda_c_leading(P),
                              methods={"lambda_H": "LeadingOrder", "lambda_c": "LeadingOrder"})
    lc = lambda_c_numeric(spec)
    lh = lambda_H_numeric(spec)
    lsc = lambda_sc_numeric(spec, lambda_c=lc)
    ls = lambda_star_numeric(spec, cfg, lambda_sc=lsc)
    tags = {k: "Numerical" for k in ("lambda_H", "lambda_c", "lambda_sc", "lambda_star")}
    return CriticalValues(lh, lc, lsc, ls, tags)


# separating line P_c --------------------------------------------------------

def _collar_left_edge_on_parabola(spec: SystemSpec, cfg: USetConfig) -> float:
    """Largest s < x_e with (s, s^2) labelled Uminus."""
    xe = equilibrium_point(spec).x
    lab = lambda s: classify_U((s, s * s), spec, cfg).region  # noqa: E731
    d = 1e-6
    while lab(xe - d) is not Region.UMINUS:
        d *= 2.0
        if xe - d < -spec.params.rho:
            raise DomainError("no Uminus point on the parabola inside V")
    a, b = xe - d, xe - 0.5 * d
    while b - a > 1e-12:
        m = 0.5 * (a + b)
        if lab(m) is Region.UMINUS:
            a = m
        else:
            b = m
    return a


def _exits_below_from(spec: SystemSpec, s: float) -> bool:
    traj = integrate(spec.piecewise(), (s, s * s), StopPolicy(stop_after={"EnterC0": 1}))
    return traj.final_event.kind is EventKind.EXIT_V and traj.final_arc.regime is Regime.EXTERIOR


def find_Pc(spec: SystemSpec, lam: Optional[float] = None, lambda_c: Optional[float] = None,
            cfg: USetConfig = USetConfig(), tol: float = 1e-8) -> float:
    """Abscissa p_c^x separating escaping (left) from reentering (right) starts on the parabola.

    Returns -inf when every start in U0minus reenters and +inf when none does.
    """
    sp = spec if lam is None else spec.with_lambda(lam)
    lc = lambda_c if lambda_c is not None else lambda_c_numeric(sp)
    if not sp.lam > lc:
        raise PreconditionError(f"P_c needs lambda > lambda_c = {lc:.6g}")
    rho = sp.params.rho
    s_lo = -rho
    s_hi = _collar_left_edge_on_parabola(sp, cfg)
    if not _exits_below_from(sp, s_lo):
        return -math.inf
    if _exits_below_from(sp, s_hi):
        return math.inf
    a, b = s_lo, s_hi
    while b - a > tol:
        m = 0.5 * (a + b)
        if _exits_below_from(sp, m):
            a = m
        else:
            b = m
    return 0.5 * (a + b)


# classifier -----------------------------------------------------------------

class Outcome(str, Enum):
    EXITS_IN_U0PLUS = "ExitsInU0plus"
    EXITS_BELOW_C0 = "ExitsBelowC0"
    CONVERGES_TO_EQUILIBRIUM_SIDE = "ConvergesToEquilibriumSide"
    HALF_CYCLE_EXTERIOR = "HalfCycleExterior"
    HALF_CYCLE_INTERIOR = "HalfCycleInterior"
    MAXIMAL_CANARD_SHADOW = "MaximalCanardShadow"


@dataclass
class OrbitClass:
    outcome: Outcome
    exit: Event
    crossed: list[RegionLabel]
    relations: dict[str, bool] = field(default_factory=dict)
    half_cycle_relation: Optional[Outcome] = None
    trajectory: Optional[HybridTrajectory] = None


def _repelling_track_extent(spec: SystemSpec, traj: HybridTrajectory, tol: float) -> float:
    P = spec.params
    best = 0.0
    for arc in traj.arcs:
        if arc.regime is not Regime.EXTERIOR:
            continue
        run_lo = None
        run_hi = None
        for x, y in zip(arc.x, arc.y):
            ok = x > 0 and P.eps <= y < P.rho ** 2 and abs(x - slow_manifold_x(y, "repelling", P)) < tol
            if ok:
                run_lo = x if run_lo is None else min(run_lo, x)
                run_hi = x if run_hi is None else max(run_hi, x)
                best = max(best, run_hi - run_lo)
            else:
                run_lo = run_hi = None
    return best


def classify_orbit(spec: SystemSpec, p0: PointLike, cfg: USetConfig = USetConfig(),
                   half: Optional[HalfCycle] = None, p_c: Optional[float] = None,
                   stop: StopPolicy = StopPolicy(), keep_trajectory: bool = False,
                   margin: float = 1e-8) -> OrbitClass:
    """Integrate the piecewise canard from p0 and classify where it leaves V."""
    if spec.kind.value != "piecewise-canard":
        raise PreconditionError("classify_orbit needs the piecewise canard system")
    x0, y0 = _xy(p0)
    start = classify_U((x0, y0), spec, cfg)
    if start.region is Region.UZERO:
        raise PreconditionError(f"start ({x0}, {y0}) lies in the U0 collar")
    traj = integrate(spec, (x0, y0), stop)
    crossed = [start]
    for ev in traj.events:
        if ev.kind in (EventKind.ENTER_C0, EventKind.EXIT_C0):
            crossed.append(classify_U(ev.point, spec, cfg))
    ev = traj.final_event
    rel: dict[str, bool] = {}
    hc_rel = None
    if ev.kind in (EventKind.EQUILIBRIUM, EventKind.MAX_TIME):
        outcome = Outcome.CONVERGES_TO_EQUILIBRIUM_SIDE
    elif ev.kind is not EventKind.EXIT_V:
        raise Unclassifiable(f"trajectory stopped with {ev.kind.value}")
    elif traj.final_arc.regime is Regime.INTERIOR:
        lab = classify_U(_pull_inside(ev.point, spec), spec, cfg)
        crossed.append(lab)
        if lab.region is Region.UPLUS:
            outcome = Outcome.EXITS_IN_U0PLUS
        else:
            raise Unclassifiable(f"left V inside C0 with label {lab} at ({ev.point.x:.6g}, {ev.point.y:.6g})")
    else:
        ext = _repelling_track_extent(spec, traj, spec.eps)
        if ext > 0.5 * spec.params.rho:
            outcome = Outcome.MAXIMAL_CANARD_SHADOW
        else:
            outcome = Outcome.EXITS_BELOW_C0
    xe = ev.point.x
    if half is not None:
        rel["right_of_P_plus"] = xe > half.P_plus + margin
        rel["left_of_P_plus"] = xe < half.P_plus - margin
        rel["right_of_P_minus"] = xe > half.P_minus + margin
        rel["left_of_P_minus"] = xe < half.P_minus - margin
        if outcome is Outcome.EXITS_IN_U0PLUS:
            if rel["right_of_P_plus"]:
                hc_rel = Outcome.HALF_CYCLE_EXTERIOR
            elif rel["right_of_P_minus"] and rel["left_of_P_plus"]:
                hc_rel = Outcome.HALF_CYCLE_INTERIOR
    if p_c is not None:
        rel["start_left_of_P_c"] = x0 < p_c
    return OrbitClass(outcome, ev, crossed, rel, hc_rel, traj if keep_trajectory else None)


def _pull_inside(p: PlanePoint, spec: SystemSpec) -> tuple[float, float]:
    # exit points sit on the boundary of V; nudge inward for labelling
    P = spec.params
    x, y = p.x, p.y
    if not in_V((x, y), P.eps, P):
        y = min(y, P.rho ** 2)
        if not in_V((x, y), P.eps, P):
            x *= 1.0 - 1e-9
    return x, y


# fold scaling ----------------------------------------------------------------

def fold_exit_heights(spec: SystemSpec, eps_list: Sequence[float], x_in: Optional[float] = None) -> np.ndarray:
    x0 = -spec.params.rho - 0.1 if x_in is None else x_in
    return np.array([transition_map_fold(spec.with_eps(float(e)), x0) for e in eps_list])


def fold_scaling_fit(spec: SystemSpec, eps_list: Sequence[float], x_in: Optional[float] = None) -> float:
    """Least-squares slope of log|y_out| against log(eps)."""
    e = np.asarray(sorted(set(float(v) for v in eps_list)))
    if len(e) < 2 or math.log10(e[-1] / e[0]) < 1.5:
        raise PreconditionError("eps_list must span at least 1.5 decades")
    y = fold_exit_heights(spec, e, x_in)
    return float(np.polyfit(np.log(e), np.log(np.abs(y)), 1)[0])
