"""Acceptance checks: one PASS/FAIL line per criterion, printed to the terminal."""

import itertools
import math
import time

import numpy as np
import pytest

from ducktrap import analysis as an
from ducktrap.blowup import (ChartPointK1, Region, USetConfig, classify_U, fold_chart_fields,
                             fold_pull, fold_push, k1_canard_field, k2_canard_field, phi1_pull, phi1_push,
                             phi2_pull, phi2_push)
from ducktrap.core import Params, canard_spec, fold_spec, paper_fig_family
from ducktrap.integrate import ChartK2System, EventKind, Regime, StopPolicy, integrate, transition_map_fold

G = paper_fig_family()


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return emit


def test_criterion_1_figure_reproduction(report):
    t0 = time.perf_counter()
    sp = canard_spec(0.01, -6.75e-3)
    tr = integrate(sp, (-0.2, 0.09))
    dt = time.perf_counter() - t0
    enter = tr.first(EventKind.ENTER_C0)
    fin = tr.final_event
    x_re = enter.point.x if enter else math.nan
    ok = (enter is not None and abs(x_re - 0.1564) <= 0.01 and fin.kind is EventKind.EXIT_V
          and fin.name == "top" and fin.point.x == x_re and dt < 5.0)
    report(1, ok, f"reentry x = {x_re:.6f} (target 0.1564 +- 0.01), exit {fin.name} at x = {fin.point.x:.6f}, "
                  f"{dt:.3f} s")
    assert ok


def test_reference_run_small_lambda():
    # reference run at lambda = 0.2 lambda_c (leading order) reenters at 0.15638
    tr = integrate(canard_spec(0.01, 0.2 * 2.5e-4), (-0.2, 0.09))
    enter = tr.first(EventKind.ENTER_C0)
    assert abs(enter.point.x - 0.15638) < 0.01
    assert tr.final_event.name == "top" and tr.final_event.point.x == enter.point.x


def test_criterion_2_critical_values(report):
    P = Params(eps=0.01)
    exact = an.lambda_H_leading(P) == pytest.approx(-4.5e-3, abs=1e-17) and \
        an.lambda_c_leading(P) == pytest.approx(2.5e-4, abs=1e-17)
    gaps = {}
    for eps in (0.02, 0.01, 0.005):
        lc = an.lambda_c_numeric(canard_spec(eps))
        gaps[eps] = abs(lc - an.lambda_c_leading(Params(eps=eps)))
    within = gaps[0.01] < 1e-3
    linear = gaps[0.01] <= 0.5 * gaps[0.02] and gaps[0.005] <= 0.5 * gaps[0.01]
    ok = exact and within and linear
    report(2, ok, "gaps " + ", ".join(f"eps={e}: {g:.3e}" for e, g in gaps.items()))
    assert ok


def test_criterion_3_fold_scaling(report):
    sp = fold_spec(1e-3)
    slope = an.fold_scaling_fit(sp, [1e-4, 3e-4, 1e-3, 3e-3, 1e-2], x_in=-0.4)
    ya = transition_map_fold(sp, -0.4)
    yb = transition_map_fold(sp, -0.35)
    ok = abs(slope - 2 / 3) <= 0.05 and abs(ya - yb) < 1e-8
    report(3, ok, f"slope = {slope:.4f}, |dy_out| = {abs(ya - yb):.2e}")
    assert ok


def test_criterion_4_invariance(report):
    rng = np.random.default_rng(20240601)
    hs = [None, lambda x, y: 0.3 * math.sin(7 * x) + y, lambda x, y: x * x - y + 0.1]
    t0 = time.perf_counter()
    worst = -math.inf
    for k in range(200):
        eps = (1e-2, 1e-3, 1e-4)[k % 3]
        sp = fold_spec(eps, h=hs[k % len(hs)])
        x = rng.uniform(-0.85, 0.85)
        y = rng.uniform(-0.085, min(x * x, 0.09))
        P = integrate(sp, (x, y)).points()
        worst = max(worst, float(np.max(P[:, 1] - P[:, 0] ** 2)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt < 60.0
    report(4, ok, f"max(y - x^2) = {worst:.3e} over 200 runs, {dt:.1f} s")
    assert ok


def test_criterion_5_conserved_quantity(report):
    drift = 0.0
    err = 0.0
    for h in (0.05, 0.1, 0.2):
        c = an.c_of_h(h)
        tr = integrate(ChartK2System(0.0, 0.0, G), (-math.sqrt(c), c),
                       StopPolicy(domain=None, t_max=50.0, stop_after={"EnterC0": 1}, rtol=1e-10, atol=1e-12))
        for arc in tr.arcs:
            if arc.regime is Regime.EXTERIOR and arc.t[-1] > arc.t[0]:
                H = np.array([an.H_value(x, y) for x, y in zip(arc.x, arc.y)])
                drift = max(drift, float(np.max(np.abs(H - H[0]))) / (arc.t[-1] - arc.t[0]))
        err = max(err, abs(tr.final_event.point.x - math.sqrt(c)))
    ok = drift < 1e-8 and err < 1e-6
    report(5, ok, f"|dH|/t = {drift:.2e}, reentry error = {err:.2e}")
    assert ok


def test_criterion_6_return_map(report):
    worst = 0.0
    ok = True
    for r2, l2, c in itertools.product((0.05, 0.1), repeat=3):
        x0 = l2 - c
        tr = integrate(ChartK2System(r2, l2, G), (x0, x0 * x0),
                       StopPolicy(domain=None, t_max=50.0, stop_after={"EnterC0": 1}, rtol=1e-12, atol=1e-14))
        xr, _ = an.return_map_linearized(r2, l2, 0.9, c)
        bound = 5 * (r2 * r2 + r2 * abs(l2) + l2 * l2)
        e = abs(tr.final_event.point.x - xr)
        ok &= tr.final_event.kind is EventKind.ENTER_C0 and e < bound
        worst = max(worst, e / bound)
    report(6, ok, f"max error / bound = {worst:.3f} over 8 grid points")
    assert ok


def _u0minus_starts(sp, cfg, n, rng, x_hi=0.1):
    out = []
    while len(out) < n:
        x = rng.uniform(-0.28, x_hi)
        y = rng.uniform(max(x * x, 0.0), 0.09)
        if y <= sp.eps and abs(x) > 0.3:
            continue
        try:
            lab = classify_U((x, y), sp, cfg)
        except ValueError:
            continue
        if lab.restricted == "U0minus":
            out.append((x, y))
    return out


@pytest.mark.slow
def test_criterion_7_classifier_consistency(report):
    rng = np.random.default_rng(7)
    base = canard_spec(0.01)
    lh = an.lambda_H_leading(base.params)
    notes = []

    # below the Hopf value every U0minus start is trapped
    sp = base.with_lambda(1.5 * lh)
    cfg = USetConfig()
    outs = [an.classify_orbit(sp, p, cfg).outcome for p in _u0minus_starts(sp, cfg, 50, rng)]
    ok1 = all(o is an.Outcome.EXITS_IN_U0PLUS for o in outs)
    notes.append(f"below lambda_H {sum(o is an.Outcome.EXITS_IN_U0PLUS for o in outs)}/50")

    # lambda in (lambda_H, lambda_sc): position relative to the half cycle
    lc = an.lambda_c_numeric(base)
    lsc = an.lambda_sc_numeric(base, lambda_c=lc)
    lam = 0.5 * lh
    ls = an.lambda_star_numeric(base, USetConfig(), lambda_sc=lsc)
    cfg2 = USetConfig(lambda_star=ls)
    sp = base.with_lambda(lam)
    hc = an.half_cycle(sp)
    bad = 0
    starts = _u0minus_starts(sp, cfg2, 50, rng, x_hi=hc.P_plus)
    for p in starts:
        oc = an.classify_orbit(sp, p, cfg2, half=hc)
        if p[0] < hc.P_minus:
            bad += not (oc.outcome is an.Outcome.EXITS_IN_U0PLUS and oc.relations["right_of_P_plus"])
        else:
            bad += not (oc.outcome is an.Outcome.EXITS_IN_U0PLUS and oc.relations["left_of_P_plus"])
    ok2 = lh < lam < lsc and bad == 0
    notes.append(f"half cycle {len(starts) - bad}/{len(starts)}")

    # lambda > lambda_c: P_c separates escape from reentry
    sp = base.with_lambda(0.002)
    pc = an.find_Pc(sp, lambda_c=lc)
    ok3 = math.isfinite(pc)
    wrong = 0
    if ok3:
        for s in (pc - 1e-6, pc + 1e-6):
            oc = an.classify_orbit(sp, (s, s * s), p_c=pc)
            below = oc.outcome in (an.Outcome.EXITS_BELOW_C0, an.Outcome.MAXIMAL_CANARD_SHADOW)
            wrong += below != (s < pc)
        for s in np.linspace(-0.29, -0.01, 50):
            if abs(s - pc) < 1e-4:
                continue
            if classify_U((s, s * s), sp).region is not Region.UMINUS:
                continue
            oc = an.classify_orbit(sp, (s, s * s), p_c=pc)
            below = oc.outcome in (an.Outcome.EXITS_BELOW_C0, an.Outcome.MAXIMAL_CANARD_SHADOW)
            wrong += below != oc.relations["start_left_of_P_c"]
    ok3 = ok3 and wrong == 0
    notes.append(f"P_c = {pc:.6f}, mismatches {wrong}")

    ok = ok1 and ok2 and ok3
    report(7, ok, "; ".join(notes))
    assert ok


def test_criterion_8_charts(report):
    rng = np.random.default_rng(8)
    rt = 0.0
    fc = 0.0
    for _ in range(100):
        x = rng.uniform(-0.6, 0.6)
        y = rng.uniform(1e-3, 0.09)
        eps = rng.uniform(1e-3, 0.09)
        lam = rng.uniform(-0.02, 0.02)
        for push, pull in ((phi1_push, phi1_pull), (phi2_push, phi2_pull)):
            back = push(pull(x, y, eps, lam))
            rt = max(rt, max(abs(a - b) / abs(b) for a, b in zip(back, (x, y, eps, lam))))
        for ch in ("K1f", "K2f", "K3f") if x > 0 else ("K1f", "K2f"):
            back = fold_push(fold_pull(ch, x, y, eps))
            rt = max(rt, max(abs(a - b) / abs(b) for a, b in zip(back, (x, y, eps))))
        # K1 and K2 fields, transported to the plane, must coincide
        sp = canard_spec(eps, lam)
        q1, q2 = phi1_pull(x, y, eps, lam), phi2_pull(x, y, eps, lam)
        v1 = k1_canard_field(q1, sp, check_domain=False)
        v2 = k2_canard_field(q2, sp, check_domain=False)
        r1, r2 = q1.r1, q2.r2
        p1 = r1 * np.array([r1 * v1[0] + q1.x1 * v1[1], 2 * r1 * v1[1]])
        p2 = r2 * np.array([r2 * v2[0], r2 * r2 * v2[1]])
        fc = max(fc, float(np.max(np.abs(p1 - p2))))
    inv = (k1_canard_field(ChartPointK1(1.5, 0.0, 0.3, 0.1), canard_spec(0.01))[1] == 0.0
           and np.all(k1_canard_field(ChartPointK1(1.5, 0.2, 0.0, 0.1), canard_spec(0.01))[1:] == 0.0)
           and k1_canard_field(ChartPointK1(0.5, 0.2, 0.3, 0.0), canard_spec(0.01))[3] == 0.0
           and fold_chart_fields("K1f", (2.0, 0.0, 0.1))[1] == 0.0
           and fold_chart_fields("K1f", (2.0, 0.1, 0.0))[2] == 0.0
           and fold_chart_fields("K3f", (0.0, 0.5, 0.0))[[0, 2]].tolist() == [0.0, 0.0])
    ok = rt <= 1e-14 and fc <= 1e-8 and inv
    report(8, ok, f"round trip rel err = {rt:.2e}, overlap field err = {fc:.2e}, hyperplanes invariant = {inv}")
    assert ok


def test_criterion_9_slow_manifold(report):
    sep = True
    for lam in np.linspace(-0.05, 2.5e-4, 21):
        P = Params(eps=0.01, lam=float(lam))
        for y in np.linspace(0.0101, 0.09, 50):
            for br in ("attracting", "repelling"):
                sep &= an.slow_manifold_x(y, br, P) ** 2 - y > 0
    ys = np.linspace(0.01, 0.09, 17)

    def dev(eps):
        sp = canard_spec(eps, 0.0, piecewise=False)
        xs = an.slow_manifold_numeric(sp, ys)
        exp = np.array([an.slow_manifold_x(y, "attracting", sp.params) for y in ys])
        return float(np.max(np.abs(xs - exp)))

    ratios = {e: dev(e) / e ** 2 for e in (0.01, 0.005, 0.0025)}
    C = max(ratios.values())
    stable = C / min(ratios.values()) <= 1.25
    halved = dev(0.00125) <= 1.25 * C * 0.00125 ** 2
    ok = bool(sep) and stable and halved
    report(9, ok, f"separation = {bool(sep)}, dev/eps^2 = "
                  + ", ".join(f"{v:.2f}" for v in ratios.values()) + f", C = {C:.2f}, halving ok = {halved}")
    assert ok
