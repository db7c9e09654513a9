"""Event-driven hybrid integration across the switching parabola y = x^2.

The stepper is scipy's DOP853 driven one step at a time.  After every step
the event functions are scanned on the dense output, the earliest sign change
is localized by bisection (1e-12 in time) plus one Newton polish, and the
trajectory is split into arcs at parabola crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Protocol, Union

import numpy as np
from scipy.integrate import DOP853

from .blowup import rhs_y2, v_margin
from .core import GFamily, PlanePoint, PointLike, SystemSpec, _s, _xy
from .errors import NonFinite, PreconditionError, SectionNotReached, StepSizeUnderflow

__all__ = [
    "Regime",
    "EventKind",
    "Event",
    "Arc",
    "HybridTrajectory",
    "Section",
    "StopPolicy",
    "ChartK2System",
    "fold_box_margin",
    "integrate",
    "transition_map_fold",
    "detect_trapping",
]

FieldFn = Callable[[float, float], tuple[float, float]]
MarginFn = Callable[[float, float], tuple[float, str]]


class Regime(str, Enum):
    INTERIOR = "int"
    EXTERIOR = "ext"


class EventKind(str, Enum):
    ENTER_C0 = "EnterC0"
    EXIT_C0 = "ExitC0"
    EXIT_V = "ExitV"
    SECTION = "ReachSection"
    EQUILIBRIUM = "Equilibrium"
    MAX_TIME = "MaxTime"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    time: float
    point: PlanePoint
    name: Optional[str] = None  # section name, or exit side for ExitV
    residual: float = 0.0


@dataclass
class Arc:
    regime: Regime
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def start(self) -> PlanePoint:
        return PlanePoint(float(self.x[0]), float(self.y[0]))

    @property
    def end(self) -> PlanePoint:
        return PlanePoint(float(self.x[-1]), float(self.y[-1]))

    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


@dataclass
class HybridTrajectory:
    arcs: list[Arc]
    events: list[Event]

    @property
    def final_event(self) -> Event:
        return self.events[-1]

    @property
    def final_arc(self) -> Arc:
        return self.arcs[-1]

    def events_of(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def first(self, kind: EventKind) -> Optional[Event]:
        for e in self.events:
            if e.kind is kind:
                return e
        return None

    def rows(self):
        """(t, x, y, regime) rows in time order; arc junctions appear in both arcs."""
        for arc in self.arcs:
            for t, x, y in zip(arc.t, arc.x, arc.y):
                yield float(t), float(x), float(y), arc.regime.value

    def points(self) -> np.ndarray:
        return np.vstack([a.points() for a in self.arcs])


@dataclass(frozen=True)
class Section:
    """Zero set of fn(x, y); direction +1 fires on increase, -1 on decrease, 0 both."""

    name: str
    fn: Callable[[float, float], float]
    direction: int = 0
    terminal: bool = True


@dataclass(frozen=True)
class StopPolicy:
    t_max: float = 1e6
    sections: tuple[Section, ...] = ()
    domain: Union[str, None, MarginFn] = "auto"
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = math.inf
    stop_after: Mapping[str, int] = field(default_factory=dict)
    eq_tol: float = 1e-14
    max_steps: int = 500_000
    subsamples: int = 4


class HybridSystem(Protocol):
    def field(self, interior: bool) -> FieldFn: ...


@dataclass(frozen=True)
class ChartK2System:
    """The piecewise canard in chart K2 with frozen r2, lam2 (eps = 1 there)."""

    r2: float
    lam2: float
    g: GFamily

    def field(self, interior: bool) -> FieldFn:
        r2, l2, g = self.r2, self.lam2, self.g
        if interior:
            return lambda x, y: (0.0, rhs_y2(x, y, r2, l2, g))
        return lambda x, y: (x * x - y, rhs_y2(x, y, r2, l2, g))


def fold_box_margin(spec: SystemSpec) -> MarginFn:
    P = spec.params
    xr, yr = P.x10 * P.rho, P.rho * P.rho

    def m(x, y):
        return min((xr - abs(x), "left" if x < 0 else "right"), (y + yr, "bottom"), (yr - y, "top"))
    return m


def _default_domain(system) -> Optional[MarginFn]:
    if isinstance(system, SystemSpec):
        if system.kind.is_canard:
            P = system.params
            return lambda x, y: v_margin(x, y, P.eps, P)
        return fold_box_margin(system)
    return None


def _bisect(fun: Callable[[float], bool], ta: float, tb: float) -> float:
    """Smallest-ish t in (ta, tb] with fun(t) True, given fun(ta) False and fun(tb) True."""
    while True:
        tol = max(1e-12, 4 * math.ulp(max(abs(ta), abs(tb))))
        if tb - ta <= tol:
            return tb
        tm = 0.5 * (ta + tb)
        if tm <= ta or tm >= tb:
            return tb
        if fun(tm):
            tb = tm
        else:
            ta = tm


class _Watch:
    """One event function with a trigger predicate on its value."""

    __slots__ = ("key", "fn", "trigger", "terminal", "name")

    def __init__(self, key, fn, trigger, terminal, name=None):
        self.key, self.fn, self.trigger, self.terminal, self.name = key, fn, trigger, terminal, name


def _section_trigger(direction: int):
    if direction > 0:
        return lambda prev, v: prev < 0 <= v
    if direction < 0:
        return lambda prev, v: prev > 0 >= v
    return lambda prev, v: (prev < 0 <= v) or (prev > 0 >= v)


def integrate(system, p0: PointLike, stop: StopPolicy = StopPolicy()) -> HybridTrajectory:
    """Integrate a (piecewise) planar system from p0 until a terminal event."""
    x, y = _xy(p0)
    domain = _default_domain(system) if stop.domain == "auto" else stop.domain
    f_int, f_ext = system.field(True), system.field(False)

    s0 = _s(x, y)
    if s0 != 0.0 and abs(s0) <= 4e-16 * max(1.0, abs(y)):
        y, s0 = x * x, 0.0  # rounding-level offset: start on the parabola
    if s0 > 0:
        interior = True
    elif s0 < 0:
        interior = False
    else:
        vx, vy = f_int(x, y)
        interior = (vy - 2 * x * vx) >= 0.0  # tie-break: keep the interior branch unless it points out

    arcs: list[Arc] = []
    events: list[Event] = []
    counts: dict[str, int] = {}
    t = 0.0
    n_steps = 0
    last_switch_t = None

    def finish(kind, te, xe, ye, name=None, residual=0.0):
        events.append(Event(kind, float(te), PlanePoint(float(xe), float(ye)), name, float(residual)))

    if domain is not None and domain(x, y)[0] < 0:
        arcs.append(Arc(Regime.INTERIOR if interior else Regime.EXTERIOR,
                        np.array([t]), np.array([x]), np.array([y])))
        finish(EventKind.EXIT_V, t, x, y, domain(x, y)[1], domain(x, y)[0])
        return HybridTrajectory(arcs, events)

    while True:
        f = f_int if interior else f_ext
        regime = Regime.INTERIOR if interior else Regime.EXTERIOR
        ts, xs, ys = [t], [x], [y]

        vx, vy = f(x, y)
        if math.hypot(vx, vy) <= stop.eq_tol:
            arcs.append(Arc(regime, np.array(ts), np.array(xs), np.array(ys)))
            finish(EventKind.EQUILIBRIUM, t, x, y)
            return HybridTrajectory(arcs, events)

        def rhs(_t, u, f=f):
            return np.array(f(u[0], u[1]))

        solver = DOP853(rhs, t, np.array([x, y]), stop.t_max, rtol=stop.rtol, atol=stop.atol,
                        max_step=stop.max_step)

        watches = [
            _Watch("switch", _s,
                   (lambda prev, v: prev >= 0 > v) if interior else (lambda prev, v: prev <= 0 < v),
                   True),
        ]
        if domain is not None:
            watches.append(_Watch("domain", lambda a, b: domain(a, b)[0],
                                  lambda prev, v: prev >= 0 > v, True))
        for sec in stop.sections:
            watches.append(_Watch("section", sec.fn, _section_trigger(sec.direction), sec.terminal, sec.name))
        prev_vals = [w.fn(x, y) for w in watches]

        switched = False
        while not switched:
            if solver.status == "finished" or n_steps >= stop.max_steps:
                arcs.append(Arc(regime, np.array(ts), np.array(xs), np.array(ys)))
                finish(EventKind.MAX_TIME, ts[-1], xs[-1], ys[-1])
                return HybridTrajectory(arcs, events)
            msg = solver.step()
            n_steps += 1
            if solver.status == "failed":
                raise StepSizeUnderflow(str(msg))
            t0, t1 = solver.t_old, solver.t
            u1 = solver.y
            if not np.all(np.isfinite(u1)):
                raise NonFinite(f"state became non-finite at t = {t1}")
            dense = solver.dense_output()

            # scan sub-samples for the earliest trigger of each watch
            grid = np.linspace(t0, t1, stop.subsamples + 2)[1:]
            pts = [dense(tt) for tt in grid[:-1]] + [u1]
            hits = []
            for k, w in enumerate(watches):
                prev = prev_vals[k]
                ta = t0
                for tt, u in zip(grid, pts):
                    v = w.fn(u[0], u[1])
                    if w.trigger(prev, v):
                        fv = w.fn
                        trig = w.trigger
                        pv = prev
                        te = _bisect(lambda s_: trig(pv, fv(*dense(s_))), ta, tt)
                        te = _polish(fv, dense, te, ta, tt)
                        hits.append((te, k))
                        break
                    prev, ta = v, tt
            if not hits:
                ts.append(t1)
                xs.append(float(u1[0]))
                ys.append(float(u1[1]))
                prev_vals = [w.fn(u1[0], u1[1]) for w in watches]
                vx, vy = f(float(u1[0]), float(u1[1]))
                if math.hypot(vx, vy) <= stop.eq_tol:
                    arcs.append(Arc(regime, np.array(ts), np.array(xs), np.array(ys)))
                    finish(EventKind.EQUILIBRIUM, t1, float(u1[0]), float(u1[1]))
                    return HybridTrajectory(arcs, events)
                continue

            hits.sort()
            # non-terminal sections fire in order until the first terminal one
            for te, k in hits:
                w = watches[k]
                ue = dense(te)
                xe, ye = float(ue[0]), float(ue[1])
                if w.key == "section" and not w.terminal:
                    finish(EventKind.SECTION, te, xe, ye, w.name, w.fn(xe, ye))
                    continue
                ts.append(te)
                if w.key == "switch":
                    res = _s(xe, ye)
                    ye = xe * xe  # snap onto the parabola
                    xs.append(xe)
                    ys.append(ye)
                    arcs.append(Arc(regime, np.array(ts), np.array(xs), np.array(ys)))
                    kind = EventKind.EXIT_C0 if interior else EventKind.ENTER_C0
                    finish(kind, te, xe, ye, None, res)
                    counts[kind.value] = counts.get(kind.value, 0) + 1
                    if last_switch_t is not None and te - last_switch_t <= 1e-12:
                        raise StepSizeUnderflow(f"unresolved tangency with the parabola at t = {te}")
                    last_switch_t = te
                    lim = stop.stop_after.get(kind.value)
                    if lim is not None and counts[kind.value] >= lim:
                        return HybridTrajectory(arcs, events)
                    interior = not interior
                    t, x, y = te, xe, ye
                    switched = True
                    break
                xs.append(xe)
                ys.append(ye)
                arcs.append(Arc(regime, np.array(ts), np.array(xs), np.array(ys)))
                if w.key == "domain":
                    m, side = domain(xe, ye)
                    finish(EventKind.EXIT_V, te, xe, ye, side, m)
                else:
                    finish(EventKind.SECTION, te, xe, ye, w.name, w.fn(xe, ye))
                return HybridTrajectory(arcs, events)
            else:
                # only non-terminal sections fired in this step
                ts.append(t1)
                xs.append(float(u1[0]))
                ys.append(float(u1[1]))
                prev_vals = [w.fn(u1[0], u1[1]) for w in watches]


def _polish(fn, dense, te: float, ta: float, tb: float) -> float:
    """One Newton step on fn(dense(t)) using a central difference in t."""
    u = dense(te)
    v = fn(u[0], u[1])
    d = max(1e-9 * (tb - ta), 1e-14 * max(1.0, abs(te)))
    up, um = dense(te + d), dense(te - d)
    dv = (fn(up[0], up[1]) - fn(um[0], um[1])) / (2 * d)
    if dv == 0.0 or not math.isfinite(dv):
        return te
    tn = te - v / dv
    if not (ta <= tn <= tb):
        return te
    un = dense(tn)
    return tn if abs(fn(un[0], un[1])) <= abs(v) else te


def transition_map_fold(spec: SystemSpec, x_in: float, stop: Optional[StopPolicy] = None) -> float:
    """Height at which the orbit from (x_in, rho^2) reaches the section x = rho."""
    if spec.kind.is_canard:
        raise PreconditionError("transition_map_fold needs a fold system")
    rho = spec.params.rho
    if not x_in < -rho:
        raise PreconditionError(f"x_in = {x_in} must lie left of -rho = {-rho}")
    base = stop or StopPolicy(rtol=1e-11, atol=1e-13)
    pol = StopPolicy(t_max=base.t_max, rtol=base.rtol, atol=base.atol, max_step=base.max_step,
                     domain=base.domain, sections=(Section("out", lambda x, y: x - rho, +1),))
    traj = integrate(spec, (x_in, rho * rho), pol)
    ev = traj.final_event
    if ev.kind is not EventKind.SECTION:
        raise SectionNotReached(f"stopped with {ev.kind.value} at ({ev.point.x:.6g}, {ev.point.y:.6g})")
    return ev.point.y


def detect_trapping(traj: HybridTrajectory) -> bool:
    """True iff the orbit leaves V from inside C0."""
    return traj.final_arc.regime is Regime.INTERIOR and traj.final_event.kind is EventKind.EXIT_V
