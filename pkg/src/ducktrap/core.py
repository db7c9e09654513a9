"""Planar fast-slow vector fields with the critical region C0 = {y >= x^2}.

Two families live here:

* fold:   x' = -y + x^2 (below C0) or h(x, y) (inside C0),  y' = -eps
* canard: x' = -y + x^2 (below C0) or 0 (inside C0),        y' = eps*g(x, y, lam)

with g = x*g1 - lam*g2 + y*g3.  The classical variants use -y + x^2 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .errors import NoRootInWindow, NonFinite

__all__ = [
    "Params",
    "GFamily",
    "SystemKind",
    "SystemSpec",
    "PlanePoint",
    "switching_value",
    "eval_rhs",
    "equilibrium_point",
    "relative_position",
    "paper_fig_family",
    "linear_family",
    "canard_spec",
    "fold_spec",
]

Scalar3 = Callable[[float, float, float], float]
Scalar2 = Callable[[float, float], float]


@dataclass(frozen=True)
class Params:
    """Small parameters and the size of the working box.

    Defaults for rho, mu, x10, lambda0 and r_disc are engineering choices;
    they reproduce the window x in [-0.3, 0.2], y in [-0.01, 0.09].
    """

    eps: float
    lam: float = 0.0
    a1: float = 1.0
    a2: float = 0.9
    rho: float = 0.3
    mu: float = 0.3
    x10: float = 3.0
    lambda0: float = 0.05
    r_disc: float = 4.0

    def __post_init__(self):
        vals = (self.eps, self.lam, self.a1, self.a2, self.rho, self.mu,
                self.x10, self.lambda0, self.r_disc)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("Params must be finite")
        for name in ("rho", "mu", "x10", "lambda0", "r_disc", "a1", "a2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.eps <= self.eps0:
            raise ValueError(f"need 0 < eps <= rho^2 = {self.eps0}, got {self.eps}")
        if abs(self.lam) > self.lambda0:
            raise ValueError(f"|lambda| = {abs(self.lam)} exceeds lambda0 = {self.lambda0}")

    @property
    def eps0(self) -> float:
        return self.rho * self.rho


def _one(x, y, lam):
    return 1.0


@dataclass(frozen=True)
class GFamily:
    """g = x*g1 - lam*g2 + y*g3 with g1(0,0,0) = g2(0,0,0) = 1."""

    g1: Scalar3
    g2: Scalar3 = _one
    g3: Scalar3 = _one
    name: str = "custom"

    def g(self, x: float, y: float, lam: float) -> float:
        return x * self.g1(x, y, lam) - lam * self.g2(x, y, lam) + y * self.g3(x, y, lam)

    def check(self, params: Params, tol: float = 1e-12, fd_tol: float = 1e-6) -> None:
        """Check the normalization at the origin against a1, a2 in params."""
        if abs(self.g1(0.0, 0.0, 0.0) - 1.0) > tol:
            raise ValueError("g1(0,0,0) must equal 1")
        if abs(self.g2(0.0, 0.0, 0.0) - 1.0) > tol:
            raise ValueError("g2(0,0,0) must equal 1")
        d = 1e-6
        dg1 = (self.g1(d, 0.0, 0.0) - self.g1(-d, 0.0, 0.0)) / (2 * d)
        if abs(dg1 - params.a1) > fd_tol * max(1.0, abs(params.a1)):
            raise ValueError(f"d/dx g1(0,0,0) = {dg1:.8g} inconsistent with a1 = {params.a1}")
        if abs(self.g3(0.0, 0.0, 0.0) - params.a2) > tol * max(1.0, abs(params.a2)):
            raise ValueError(f"g3(0,0,0) inconsistent with a2 = {params.a2}")


def paper_fig_family(a1: float = 1.0, a2: float = 0.9) -> GFamily:
    """The 'paper-fig' preset: g1 = (1+x)^a1, g2 = 1, g3 = a2."""
    if a1 == 1.0:
        g1 = lambda x, y, lam: 1.0 + x  # noqa: E731  (exact, no pow)
    else:
        g1 = lambda x, y, lam: (1.0 + x) ** a1  # noqa: E731
    return GFamily(g1=g1, g2=_one, g3=lambda x, y, lam: a2, name="paper-fig")


def linear_family(a1: float = 1.0, a2: float = 0.9) -> GFamily:
    """g1 = 1 + a1*x, g2 = 1, g3 = a2 (agrees with paper-fig when a1 = 1)."""
    return GFamily(g1=lambda x, y, lam: 1.0 + a1 * x, g2=_one,
                   g3=lambda x, y, lam: a2, name="linear")


class SystemKind(str, Enum):
    CLASSICAL_FOLD = "classical-fold"
    PIECEWISE_FOLD = "piecewise-fold"
    CLASSICAL_CANARD = "classical-canard"
    PIECEWISE_CANARD = "piecewise-canard"

    @property
    def is_canard(self) -> bool:
        return self in (SystemKind.CLASSICAL_CANARD, SystemKind.PIECEWISE_CANARD)

    @property
    def is_piecewise(self) -> bool:
        return self in (SystemKind.PIECEWISE_FOLD, SystemKind.PIECEWISE_CANARD)


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise NonFinite(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


PointLike = Union[PlanePoint, Sequence[float]]


def _xy(p: PointLike) -> tuple[float, float]:
    if isinstance(p, PlanePoint):
        return p.x, p.y
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise NonFinite(f"non-finite point ({x}, {y})")
    return x, y


def _s(x: float, y: float) -> float:
    # the one discriminator used everywhere (eval_rhs, integrator, events)
    return y - x * x


def switching_value(p: PointLike) -> float:
    """Signed vertical distance to the parabola: >0 inside C0, <0 below."""
    x, y = _xy(p)
    return _s(x, y)


@dataclass(frozen=True)
class SystemSpec:
    kind: SystemKind
    params: Params
    g: Optional[GFamily] = None
    h: Optional[Scalar2] = None  # None means h == 0
    h_name: str = field(default="zero", compare=False)

    def __post_init__(self):
        if self.kind.is_canard:
            if self.g is None:
                raise ValueError("canard systems need a GFamily")
            self.g.check(self.params)
        elif self.g is not None:
            raise ValueError("fold systems take no GFamily")
        if self.h is not None and self.kind is not SystemKind.PIECEWISE_FOLD:
            raise ValueError("h applies only to the piecewise fold")

    # convenience -----------------------------------------------------------
    @property
    def eps(self) -> float:
        return self.params.eps

    @property
    def lam(self) -> float:
        return self.params.lam

    def with_lambda(self, lam: float) -> "SystemSpec":
        return replace(self, params=replace(self.params, lam=lam))

    def with_eps(self, eps: float) -> "SystemSpec":
        return replace(self, params=replace(self.params, eps=eps))

    def with_kind(self, kind: SystemKind) -> "SystemSpec":
        return replace(self, kind=kind, h=None if kind is not SystemKind.PIECEWISE_FOLD else self.h)

    def classical(self) -> "SystemSpec":
        k = SystemKind.CLASSICAL_CANARD if self.kind.is_canard else SystemKind.CLASSICAL_FOLD
        return replace(self, kind=k, h=None, h_name="zero")

    def piecewise(self) -> "SystemSpec":
        k = SystemKind.PIECEWISE_CANARD if self.kind.is_canard else SystemKind.PIECEWISE_FOLD
        return replace(self, kind=k)

    def gval(self, x: float, y: float, lam: Optional[float] = None) -> float:
        return self.g.g(x, y, self.params.lam if lam is None else lam)

    def field(self, interior: bool) -> Callable[[float, float], tuple[float, float]]:
        """Branch field (dx, dy) as a plain function of (x, y)."""
        eps, lam = self.params.eps, self.params.lam
        kind = self.kind
        if kind.is_canard:
            gg = self.g.g
            if interior and kind is SystemKind.PIECEWISE_CANARD:
                return lambda x, y: (0.0, eps * gg(x, y, lam))
            return lambda x, y: (x * x - y, eps * gg(x, y, lam))
        if interior and kind is SystemKind.PIECEWISE_FOLD:
            h = self.h
            if h is None:
                return lambda x, y: (0.0, -eps)
            return lambda x, y: (h(x, y), -eps)
        return lambda x, y: (x * x - y, -eps)


def eval_rhs(spec: SystemSpec, p: PointLike) -> tuple[float, float]:
    """Fast-time velocity (dx/dt, dy/dt); on the parabola the interior branch is used."""
    x, y = _xy(p)
    return spec.field(_s(x, y) >= 0.0)(x, y)


def canard_spec(eps: float = 0.01, lam: float = 0.0, *, a1: float = 1.0, a2: float = 0.9,
                piecewise: bool = True, family: Optional[GFamily] = None, **box) -> SystemSpec:
    """Canard system with the paper-fig g-family unless another family is given."""
    params = Params(eps=eps, lam=lam, a1=a1, a2=a2, **box)
    kind = SystemKind.PIECEWISE_CANARD if piecewise else SystemKind.CLASSICAL_CANARD
    return SystemSpec(kind, params, g=family or paper_fig_family(a1, a2))


def fold_spec(eps: float = 0.001, *, h: Optional[Scalar2] = None, h_name: str = "zero",
              piecewise: bool = True, **box) -> SystemSpec:
    params = Params(eps=eps, **box)
    kind = SystemKind.PIECEWISE_FOLD if piecewise else SystemKind.CLASSICAL_FOLD
    return SystemSpec(kind, params, h=h if piecewise else None, h_name=h_name)


def equilibrium_point(spec: SystemSpec, tol: float = 1e-12) -> PlanePoint:
    """The equilibrium on the parabola: g(x, x^2, lam) = 0 with x in [-rho, rho]."""
    if not spec.kind.is_canard:
        raise ValueError("equilibrium_point needs a canard system")
    rho = spec.params.rho
    q = lambda x: spec.gval(x, x * x)  # noqa: E731
    qa, qb = q(-rho), q(rho)
    if qa == 0.0:
        return PlanePoint(-rho, rho * rho)
    if qb == 0.0:
        return PlanePoint(rho, rho * rho)
    if qa * qb > 0:
        raise NoRootInWindow(f"g(x, x^2, {spec.lam}) has no sign change on [-{rho}, {rho}]")
    x = brentq(q, -rho, rho, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # one Newton polish
    d = 1e-7 * max(1.0, abs(x))
    dq = (q(x + d) - q(x - d)) / (2 * d)
    if dq != 0.0:
        xn = x - q(x) / dq
        if abs(q(xn)) < abs(q(x)):
            x = xn
    if abs(q(x)) >= tol:
        raise NoRootInWindow(f"equilibrium residual {abs(q(x)):.3g} above {tol}")
    return PlanePoint(x, x * x)


# relative position of point sets -------------------------------------------

def _segments(P: np.ndarray):
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    if len(P) == 1:
        P = np.vstack([P, P])
    a, b = P[:-1], P[1:]
    return a, b


def _locally_left(A: np.ndarray, B: np.ndarray, tol: float) -> bool:
    """On every horizontal line meeting both polylines, A-abscissae <= B-abscissae."""
    a0, a1 = _segments(A)
    b0, b1 = _segments(B)
    ay_lo = np.minimum(a0[:, 1], a1[:, 1])[:, None]
    ay_hi = np.maximum(a0[:, 1], a1[:, 1])[:, None]
    by_lo = np.minimum(b0[:, 1], b1[:, 1])[None, :]
    by_hi = np.maximum(b0[:, 1], b1[:, 1])[None, :]
    lo = np.maximum(ay_lo, by_lo)
    hi = np.minimum(ay_hi, by_hi)
    ok = lo <= hi
    if not ok.any():
        return True

    def xs(p0, p1, c, upper):
        # abscissa of segment at height c; horizontal segments give their extreme
        dy = (p1[:, 1] - p0[:, 1])[:, None] if p0.ndim == 2 else None
        x0, y0 = p0[:, 0][:, None], p0[:, 1][:, None]
        x1 = p1[:, 0][:, None]
        flat = dy == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(flat, 0.0, (c - y0) / np.where(flat, 1.0, dy))
        t = np.clip(t, 0.0, 1.0)
        x = x0 + t * (x1 - x0)
        ext = np.maximum(x0, x1) if upper else np.minimum(x0, x1)
        return np.where(flat, ext, x)

    for c in (lo, hi):
        xa = xs(a0, a1, c, upper=True)
        xb = xs(b0, b1, c.T, upper=False).T
        bad = ok & (xa - xb > tol)
        if bad.any():
            return False
    return True


def relative_position(A, B, mode: str = "left", scope: str = "local", tol: float = 1e-12) -> bool:
    """Is polyline A located to the left of (or below) polyline B?

    ``scope='local'`` compares abscissae on every common horizontal line
    (vertical lines for ``mode='below'``); ``scope='total'`` asks for a
    separating vertical (horizontal) line.  Vacuously true if the sets share
    no line.
    """
    A = np.asarray(A, dtype=float).reshape(-1, 2)
    B = np.asarray(B, dtype=float).reshape(-1, 2)
    if mode == "below":
        A, B = A[:, ::-1], B[:, ::-1]
    elif mode != "left":
        raise ValueError(f"mode must be 'left' or 'below', got {mode!r}")
    if scope == "total":
        return bool(A[:, 0].max() <= B[:, 0].min() + tol)
    if scope != "local":
        raise ValueError(f"scope must be 'local' or 'total', got {scope!r}")
    return _locally_left(A, B, tol)
