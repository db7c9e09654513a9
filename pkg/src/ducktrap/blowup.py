"""Blow-up charts, desingularized fields, the neighbourhood V_eps and U-sets.

Canard charts (weights 1,2,2,1):
    K1: x = r1*x1, y = r1^2, eps = r1^2*eps1, lam = r1*lam1
    K2: x = r2*x2, y = r2^2*y2, eps = r2^2, lam = r2*lam2
Fold charts (weights 1,2,3):
    K1f: x = r1*x1, y = r1^2,    eps = r1^3*eps1
    K2f: x = r2*x2, y = r2^2*y2, eps = r2^3
    K3f: x = r3,    y = r3^2*y3, eps = r3^3*eps3
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .core import Params, PointLike, SystemSpec, _s, _xy
from .errors import DomainError, UnboundedInteriorTerm

__all__ = [
    "ChartPointK1",
    "ChartPointK2",
    "FoldChartPoint",
    "phi1_push",
    "phi1_pull",
    "phi2_push",
    "phi2_pull",
    "fold_push",
    "fold_pull",
    "in_V",
    "v_margin",
    "in_V1",
    "in_V2",
    "k1_F",
    "k1_canard_field",
    "rhs_y2",
    "k2_canard_field",
    "fold_chart_fields",
    "USetConfig",
    "Region",
    "RegionLabel",
    "nullcline_x",
    "collar_halfwidths",
    "classify_U",
]


@dataclass(frozen=True)
class ChartPointK1:
    x1: float
    r1: float
    eps1: float
    lam1: float = 0.0


@dataclass(frozen=True)
class ChartPointK2:
    x2: float
    y2: float
    r2: float
    lam2: float = 0.0


@dataclass(frozen=True)
class FoldChartPoint:
    chart: str  # "K1f" | "K2f" | "K3f"
    coords: tuple[float, float, float]


def phi1_push(q: ChartPointK1) -> tuple[float, float, float, float]:
    r = q.r1
    return (r * q.x1, r * r, r * r * q.eps1, r * q.lam1)


def phi1_pull(x: float, y: float, eps: float, lam: float) -> ChartPointK1:
    if not y > 0:
        raise DomainError(f"chart K1 needs y > 0, got {y}")
    r = math.sqrt(y)
    return ChartPointK1(x / r, r, eps / y, lam / r)


def phi2_push(q: ChartPointK2) -> tuple[float, float, float, float]:
    r = q.r2
    return (r * q.x2, r * r * q.y2, r * r, r * q.lam2)


def phi2_pull(x: float, y: float, eps: float, lam: float) -> ChartPointK2:
    if not eps > 0:
        raise DomainError(f"chart K2 needs eps > 0, got {eps}")
    r = math.sqrt(eps)
    return ChartPointK2(x / r, y / eps, r, lam / r)


def fold_push(q: FoldChartPoint) -> tuple[float, float, float]:
    a, b, c = q.coords
    if q.chart == "K1f":
        x1, r1, e1 = a, b, c
        return (r1 * x1, r1 * r1, r1 ** 3 * e1)
    if q.chart == "K2f":
        x2, y2, r2 = a, b, c
        return (r2 * x2, r2 * r2 * y2, r2 ** 3)
    if q.chart == "K3f":
        r3, y3, e3 = a, b, c
        return (r3, r3 * r3 * y3, r3 ** 3 * e3)
    raise ValueError(f"unknown fold chart {q.chart!r}")


def fold_pull(chart: str, x: float, y: float, eps: float) -> FoldChartPoint:
    if chart == "K1f":
        if not y > 0:
            raise DomainError("chart K1f needs y > 0")
        r = math.sqrt(y)
        out = (x / r, r, eps / r ** 3) if r ** 3 > 0 else (math.inf,) * 3
    elif chart == "K2f":
        if not eps > 0:
            raise DomainError("chart K2f needs eps > 0")
        r = eps ** (1.0 / 3.0)
        out = (x / r, y / (r * r), r)
    elif chart == "K3f":
        if not x > 0:
            raise DomainError("chart K3f needs x > 0")
        out = (x, y / (x * x), eps / x ** 3) if x ** 3 > 0 else (math.inf,) * 3
    else:
        raise ValueError(f"unknown fold chart {chart!r}")
    if not all(math.isfinite(v) for v in out):
        raise DomainError(f"chart {chart} coordinates overflow at ({x}, {y}, {eps})")
    return FoldChartPoint(chart, out)


# neighbourhoods -------------------------------------------------------------

def _strip_margin(x: float, y: float, eps: float, P: Params) -> tuple[float, str]:
    if y <= 0:
        return -math.inf, "bottom"
    parts = (
        (y - eps, "bottom"),
        (P.rho * P.rho - y, "top"),
        (P.x10 * math.sqrt(y) - abs(x), "left" if x < 0 else "right"),
    )
    return min(parts)


def _ellipse_margin(x: float, y: float, eps: float, P: Params) -> float:
    return eps * (P.r_disc - math.hypot(x / math.sqrt(eps), y / eps))


def v_margin(x: float, y: float, eps: float, P: Params) -> tuple[float, str]:
    """Signed margin to the boundary of V_eps (>0 inside) and the nearest side."""
    ms, side = _strip_margin(x, y, eps, P)
    me = _ellipse_margin(x, y, eps, P)
    if me > ms:
        return me, "ellipse"
    return ms, side


def in_V(p: PointLike, eps: float, params: Optional[Params] = None) -> bool:
    """Membership in V_eps = strip {eps < y <= rho^2, |x| < x10 sqrt(y)} union the K2 ellipse."""
    if not eps > 0:
        raise DomainError(f"need eps > 0, got {eps}")
    P = params or Params(eps=eps)
    if not eps <= P.rho * P.rho:
        raise DomainError(f"need eps <= rho^2, got {eps}")
    x, y = _xy(p)
    ms, _ = _strip_margin(x, y, eps, P)
    strip = ms > 0 or (ms == 0 and y == P.rho * P.rho and y > eps and abs(x) < P.x10 * math.sqrt(y))
    return bool(strip or _ellipse_margin(x, y, eps, P) > 0)


def in_V1(q: ChartPointK1, P: Params) -> bool:
    return (-P.x10 < q.x1 < P.x10 and abs(q.r1) <= P.rho and 0 <= q.eps1 < 1
            and -P.mu < q.lam1 < P.mu)


def in_V2(q: ChartPointK2, P: Params) -> bool:
    return (math.hypot(q.x2, q.y2) < P.r_disc and 0 <= q.r2 <= P.rho
            and -P.mu < q.lam2 < P.mu)


# canard charts --------------------------------------------------------------

def k1_F(x1: float, r1: float, lam1: float, g) -> float:
    """g(r1 x1, r1^2, r1 lam1) / r1, evaluated without the division."""
    X, Y, L = r1 * x1, r1 * r1, r1 * lam1
    return x1 * g.g1(X, Y, L) - lam1 * g.g2(X, Y, L) + r1 * g.g3(X, Y, L)


def k1_canard_field(q: ChartPointK1, spec: SystemSpec, check_domain: bool = True) -> np.ndarray:
    """Desingularized K1 field (x1', r1', eps1', lam1')."""
    if check_domain and not in_V1(q, spec.params):
        raise DomainError(f"{q} outside V1")
    x1, r1, e1, l1 = q.x1, q.r1, q.eps1, q.lam1
    F = k1_F(x1, r1, l1, spec.g)
    if abs(x1) > 1.0:
        dx1 = -1.0 + x1 * x1 - 0.5 * e1 * x1 * F
    else:
        dx1 = -0.5 * e1 * x1 * F
    return np.array([dx1, 0.5 * r1 * e1 * F, -e1 * e1 * F, -0.5 * l1 * e1 * F])


def rhs_y2(x2: float, y2: float, r2: float, lam2: float, g) -> float:
    """y2' in chart K2: g(r2 x2, r2^2 y2, r2 lam2) / r2, evaluated without the division."""
    X, Y, L = r2 * x2, r2 * r2 * y2, r2 * lam2
    return x2 * g.g1(X, Y, L) - lam2 * g.g2(X, Y, L) + r2 * y2 * g.g3(X, Y, L)


def k2_canard_field(q: ChartPointK2, spec: SystemSpec, check_domain: bool = True) -> np.ndarray:
    """Desingularized K2 field (x2', y2'); r2 and lam2 are constants."""
    if check_domain and not in_V2(q, spec.params):
        raise DomainError(f"{q} outside V2")
    x2, y2 = q.x2, q.y2
    dx2 = x2 * x2 - y2 if _s(x2, y2) < 0 else 0.0
    return np.array([dx2, rhs_y2(x2, y2, q.r2, q.lam2, spec.g)])


# fold charts ---------------------------------------------------------------

def _h_over_r2(h, r: float, X: float, Y: float) -> float:
    if h is None:
        return 0.0
    if abs(r) < 1e-10:
        raise UnboundedInteriorTerm("interior term h/r^2 is unbounded as r -> 0")
    return h(X, Y) / (r * r)


def fold_chart_fields(chart: str, coords, h: Optional[Callable[[float, float], float]] = None) -> np.ndarray:
    """Desingularized fold fields in K1f, K2f, K3f (each divided by its radius).

    The interior branch carries h/r^2 in every chart; with h = None (h == 0)
    it is bounded everywhere.
    """
    a, b, c = (float(v) for v in coords)
    if chart == "K1f":
        x1, r1, e1 = a, b, c
        if abs(x1) > 1.0:
            dx1 = -1.0 + x1 * x1 + 0.5 * e1 * x1
        else:
            dx1 = _h_over_r2(h, r1, r1 * x1, r1 * r1) + 0.5 * e1 * x1
        return np.array([dx1, -0.5 * r1 * e1, 1.5 * e1 * e1])
    if chart == "K2f":
        x2, y2, r2 = a, b, c
        if y2 < x2 * x2:
            dx2 = -y2 + x2 * x2
        else:
            dx2 = _h_over_r2(h, r2, r2 * x2, r2 * r2 * y2)
        return np.array([dx2, -1.0, 0.0])
    if chart == "K3f":
        r3, y3, e3 = a, b, c
        if y3 < 1.0:
            w = 1.0 - y3
            return np.array([r3 * w, -e3 - 2.0 * y3 * w, -3.0 * e3 * w])
        H = _h_over_r2(h, r3, r3, r3 * r3 * y3)
        return np.array([r3 * H, -e3 - 2.0 * y3 * H, -3.0 * e3 * H])
    raise ValueError(f"unknown fold chart {chart!r}")


# U-sets --------------------------------------------------------------------

@dataclass(frozen=True)
class USetConfig:
    """Collar constants around the slow nullcline.  None for lambda_star means lambda_H (leading)."""

    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0
    C4: float = 1.0
    C5: float = 2.0
    C6: float = 1.0
    C7: float = 3.0
    lambda_star: Optional[float] = None

    def __post_init__(self):
        for k in ("C1", "C2", "C3", "C4", "C5", "C6", "C7"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be positive")

    def check(self, eps: float, lam: float) -> bool:
        """The wide collar must beat the narrow one: C6(r + r|l2|) > C5(r^2 + r|l2|)."""
        r = math.sqrt(eps)
        l2 = abs(lam) / r
        return self.C6 * (r + r * l2) > self.C5 * (r * r + r * l2)

    def lambda_star_for(self, params: Params) -> float:
        if self.lambda_star is not None:
            return self.lambda_star
        return -0.5 * params.a2 * params.eps


class Region(str, Enum):
    UMINUS = "Uminus"
    UZERO = "Uzero"
    UPLUS = "Uplus"


@dataclass(frozen=True)
class RegionLabel:
    region: Region
    in_c0: bool

    @property
    def restricted(self) -> Optional[str]:
        """'U0minus' etc. when the point is in C0, else None."""
        if not self.in_c0:
            return None
        return "U0" + self.region.value[1:]

    def __str__(self) -> str:
        return self.restricted or self.region.value


def nullcline_x(spec: SystemSpec, y: float) -> Optional[float]:
    """Abscissa of the slow nullcline g(x, y, lam) = 0 at height y nearest x = lam - a2*y."""
    P = spec.params
    f = lambda x: spec.gval(x, y)  # noqa: E731
    guess = P.lam - P.a2 * y
    w = 1e-3 + abs(guess)
    f0 = f(guess)
    if f0 == 0.0:
        return guess
    lim = P.x10 * P.rho + P.r_disc * P.rho
    while w < lim:
        lo, hi = guess - w, guess + w
        flo, fhi = f(lo), f(hi)
        if flo * f0 <= 0:
            return brentq(f, lo, guess, xtol=1e-15, rtol=1e-15)
        if fhi * f0 <= 0:
            return brentq(f, guess, hi, xtol=1e-15, rtol=1e-15)
        w *= 2.0
    return None


def collar_halfwidths(spec: SystemSpec, cfg: USetConfig) -> tuple[float, float]:
    """(left, right) collar half-widths of the K2 part, in x2 units."""
    P = spec.params
    lam, eps = P.lam, P.eps
    right = cfg.C5 * (eps + abs(lam))
    if lam < cfg.lambda_star_for(P):
        left = cfg.C6 * (math.sqrt(eps) + abs(lam))
    else:
        left = right
    return left, right


def classify_U(p: PointLike, spec: SystemSpec, cfg: USetConfig = USetConfig()) -> RegionLabel:
    """Label p as left of (Uminus), inside (Uzero) or right of (Uplus) the nullcline collar."""
    if not spec.kind.is_canard:
        raise ValueError("classify_U needs a canard system")
    x, y = _xy(p)
    P = spec.params
    eps, lam = P.eps, P.lam
    if not in_V((x, y), eps, P):
        raise DomainError(f"({x}, {y}) outside V")
    in_c0 = _s(x, y) >= 0.0
    xs = nullcline_x(spec, y)
    inside = False
    if xs is not None:
        # K1 part (strip)
        if eps < y <= P.rho ** 2 and abs(x) < P.x10 * math.sqrt(y):
            if abs(x - xs) <= cfg.C1 * y * y + cfg.C2 * abs(lam) * y:
                inside = True
        # K2 part (ellipse)
        if not inside and _ellipse_margin(x, y, eps, P) > 0:
            left, right = collar_halfwidths(spec, cfg)
            off = (x - xs) / math.sqrt(eps)
            if -left < off < right:
                inside = True
    if inside:
        return RegionLabel(Region.UZERO, in_c0)
    gv = spec.gval(x, y)
    if gv == 0.0:
        return RegionLabel(Region.UZERO, in_c0)
    return RegionLabel(Region.UPLUS if gv > 0 else Region.UMINUS, in_c0)
