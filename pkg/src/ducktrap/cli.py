"""Command-line front end.

Subcommands: simulate, sweep, criticals, fold-scaling, charts.
Exit codes: 0 success, 2 configuration error, 3 integration or bisection failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional, Sequence

from . import analysis as an
from .blowup import (ChartPointK1, ChartPointK2, FoldChartPoint, fold_pull, fold_push, phi1_pull,
                     phi1_push, phi2_pull, phi2_push)
from .config import (ConfigError, ScenarioConfig, parse_config, parse_lambda_grid, parse_point,
                     serialize_config)
from .errors import DucktrapError, NoCycle
from .integrate import StopPolicy, integrate
from .io import SCHEMA, dump_json, trajectory_csv, trajectory_json

EXIT_OK, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3

SWEEP_COLUMNS = ("lambda", "x0", "y0", "outcome", "exit_x", "exit_y", "exit_side", "half_cycle",
                 "P_minus", "P_plus", "P_c", "start_left_of_P_c", "error")


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI scenario file; flags override its values")
    p.add_argument("--system", dest="family", choices=("canard", "fold"))
    p.add_argument("--classical", action="store_true", help="use the smooth (classical) variant")
    p.add_argument("--preset", choices=("paper-fig", "linear"))
    p.add_argument("--h", choices=("zero", "parabola", "sine"))
    for name, dest in (("eps", "eps"), ("lambda", "lam"), ("a1", "a1"), ("a2", "a2"), ("rho", "rho"),
                       ("mu", "mu"), ("x10", "x10"), ("lambda0", "lambda0"), ("r-disc", "r_disc"),
                       ("t-max", "t_max"), ("rtol", "rtol"), ("atol", "atol"),
                       ("lambda-star", "lambda_star"), ("x-in", "x_in")):
        p.add_argument(f"--{name}", dest=dest, type=str)
    p.add_argument("--start", action="append", help="x,y (repeatable)")
    p.add_argument("--lambda-grid", help="comma list; entries like -6.75e-3, 1.5*lH, 0.2*lc")
    p.add_argument("--eps-list", help="comma list of eps values")
    p.add_argument("--seed", type=str)
    p.add_argument("--csv", help="CSV output path ('-' for stdout)")
    p.add_argument("--json", help="JSON output path ('-' for stdout)")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")


def _load_config(args) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    upd = {}
    for name in ("family", "preset", "h"):
        v = getattr(args, name, None)
        if v is not None:
            upd[name] = v
    if getattr(args, "classical", False):
        upd["piecewise"] = False
    for name in ("eps", "lam", "a1", "a2", "rho", "mu", "x10", "lambda0", "r_disc", "t_max",
                 "rtol", "atol", "lambda_star", "x_in"):
        v = getattr(args, name, None)
        if v is not None:
            try:
                upd[name] = float(v)
            except ValueError as exc:
                raise ConfigError(f"--{name} expects a number, got {v!r}") from exc
    if getattr(args, "seed", None) is not None:
        try:
            upd["seed"] = int(args.seed)
        except ValueError as exc:
            raise ConfigError("--seed expects an integer") from exc
    if getattr(args, "start", None):
        upd["starts"] = tuple(parse_point(s) for s in args.start)
    if getattr(args, "lambda_grid", None) is not None:
        upd["lambda_grid"] = tuple(t.strip() for t in args.lambda_grid.split(",") if t.strip())
    if getattr(args, "eps_list", None) is not None:
        try:
            upd["eps_list"] = tuple(float(t) for t in args.eps_list.split(",") if t.strip())
        except ValueError as exc:
            raise ConfigError("malformed --eps-list") from exc
    for name in ("csv", "json"):
        v = getattr(args, name, None)
        if v is not None:
            upd[name] = v
    return replace(cfg, **upd).validate()


def _open_out(path: str):
    if path in ("", "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _stop(cfg: ScenarioConfig) -> StopPolicy:
    return StopPolicy(t_max=cfg.t_max, rtol=cfg.rtol, atol=cfg.atol)


def cmd_simulate(cfg: ScenarioConfig) -> int:
    if not cfg.starts:
        raise ConfigError("simulate needs a start point (--start x,y)")
    spec = cfg.spec()
    traj = integrate(spec, cfg.starts[0], _stop(cfg))
    meta = {"family": cfg.family, "piecewise": cfg.piecewise, "eps": cfg.eps, "lambda": cfg.lam,
            "start": list(cfg.starts[0])}
    wrote = False
    if cfg.json:
        fh, close = _open_out(cfg.json)
        dump_json(trajectory_json(traj, meta), fh)
        if close:
            fh.close()
        wrote = True
    if cfg.csv or not wrote:
        fh, close = _open_out(cfg.csv)
        trajectory_csv(traj, fh)
        if close:
            fh.close()
    for ev in traj.events:
        print(f"{ev.kind.value:12s} t={ev.time:.10g} x={ev.point.x:.10g} y={ev.point.y:.10g}"
              + (f" [{ev.name}]" if ev.name else ""), file=sys.stderr)
    return EXIT_OK


def _sweep_rows(cfg: ScenarioConfig, lams: Sequence[float]) -> list[dict]:
    base = cfg.spec(0.0)
    uset = cfg.uset()
    stop = _stop(cfg)
    lam_c: Optional[float] = None
    try:
        lam_c = an.lambda_c_numeric(base)
    except DucktrapError:
        pass

    per_lambda = {}
    for lam in lams:
        sp = base.with_lambda(lam)
        hc = None
        try:
            hc = an.half_cycle(sp)
        except (NoCycle, DucktrapError):
            pass
        pc = None
        if lam_c is not None and lam > lam_c:
            try:
                pc = an.find_Pc(sp, lambda_c=lam_c, cfg=uset)
            except DucktrapError:
                pass
        per_lambda[lam] = (sp, hc, pc)

    def row(job):
        lam, (x0, y0) = job
        sp, hc, pc = per_lambda[lam]
        r = {k: "" for k in SWEEP_COLUMNS}
        r.update({"lambda": repr(lam), "x0": repr(x0), "y0": repr(y0),
                  "half_cycle": "yes" if hc else "no",
                  "P_minus": repr(hc.P_minus) if hc else "", "P_plus": repr(hc.P_plus) if hc else "",
                  "P_c": repr(pc) if pc is not None else ""})
        try:
            oc = an.classify_orbit(sp, (x0, y0), uset, half=hc, p_c=pc, stop=stop)
        except (DucktrapError, ValueError) as exc:
            r["outcome"] = "ERROR"
            r["error"] = f"{type(exc).__name__}: {exc}"
            return r
        r["outcome"] = oc.outcome.value
        r["exit_x"] = repr(oc.exit.point.x)
        r["exit_y"] = repr(oc.exit.point.y)
        r["exit_side"] = oc.exit.name or ""
        if oc.half_cycle_relation is not None:
            r["half_cycle"] = oc.half_cycle_relation.value
        if "start_left_of_P_c" in oc.relations:
            r["start_left_of_P_c"] = str(oc.relations["start_left_of_P_c"]).lower()
        return r

    jobs = [(lam, s) for lam in lams for s in cfg.starts]
    n = max(1, int(os.environ.get("DUCKTRAP_THREADS", "1") or 1))
    if n == 1:
        return [row(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(row, jobs))


def cmd_sweep(cfg: ScenarioConfig) -> int:
    if cfg.family != "canard" or not cfg.piecewise:
        raise ConfigError("sweep classifies the piecewise canard system")
    lams = parse_lambda_grid(cfg)
    if not lams:
        raise ConfigError("sweep needs a non-empty lambda grid")
    if not cfg.starts:
        raise ConfigError("sweep needs at least one start")
    for lam in lams:
        try:
            cfg.params(lam)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    rows = _sweep_rows(cfg, lams)
    fh, close = _open_out(cfg.csv)
    w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if close:
        fh.close()
    return EXIT_OK


def cmd_criticals(cfg: ScenarioConfig, leading_only: bool = False) -> int:
    if cfg.family != "canard":
        raise ConfigError("criticals needs the canard family")
    spec = cfg.spec(0.0)
    P = spec.params
    doc = {
        "schema": SCHEMA,
        "params": {"eps": P.eps, "a1": P.a1, "a2": P.a2, "rho": P.rho, "lambda0": P.lambda0},
        "uset": {k: getattr(cfg, k) for k in ("C1", "C2", "C3", "C4", "C5", "C6", "C7")},
        "lambda_H": {"LeadingOrder": an.lambda_H_leading(P)},
        "lambda_c": {"LeadingOrder": an.lambda_c_leading(P)},
    }
    if not leading_only:
        doc["lambda_H"]["Numerical"] = an.lambda_H_numeric(spec)
        lc = an.lambda_c_numeric(spec)
        doc["lambda_c"]["Numerical"] = lc
        lsc = an.lambda_sc_numeric(spec, lambda_c=lc)
        doc["lambda_sc"] = {"Numerical": lsc}
        doc["lambda_star"] = {"Numerical": an.lambda_star_numeric(spec, cfg.uset(), lambda_sc=lsc)}
        if cfg.lam > lc:
            pc = an.find_Pc(spec.with_lambda(cfg.lam), lambda_c=lc, cfg=cfg.uset())
            doc["P_c"] = {"lambda": cfg.lam, "x": pc if math.isfinite(pc) else str(pc)}
    fh, close = _open_out(cfg.json)
    dump_json(doc, fh)
    if close:
        fh.close()
    return EXIT_OK


def cmd_fold_scaling(cfg: ScenarioConfig) -> int:
    if cfg.family != "fold":
        cfg = replace(cfg, family="fold", lam=0.0)
    eps_list = cfg.eps_list or (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)
    spec = cfg.spec()
    x_in = cfg.x_in if cfg.x_in is not None else -cfg.rho - 0.1
    try:
        slope = an.fold_scaling_fit(spec, eps_list, x_in)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    ys = an.fold_exit_heights(spec, sorted(eps_list), x_in)
    doc = {"schema": SCHEMA, "x_in": x_in, "rho": cfg.rho, "slope": slope,
           "rows": [{"eps": e, "y_out": float(y)} for e, y in zip(sorted(eps_list), ys)]}
    fh, close = _open_out(cfg.json)
    dump_json(doc, fh)
    if close:
        fh.close()
    return EXIT_OK


def cmd_charts(args) -> int:
    try:
        vals = [float(v) for v in args.point.split(",")]
    except ValueError as exc:
        raise ConfigError(f"malformed --point {args.point!r}") from exc
    chart = args.chart
    need = 3 if chart.endswith("f") else 4
    if len(vals) != need:
        raise ConfigError(f"chart {chart} needs {need} coordinates")
    if args.direction == "pull":
        if chart == "K1":
            q = phi1_pull(*vals)
            out = {"x1": q.x1, "r1": q.r1, "eps1": q.eps1, "lambda1": q.lam1}
        elif chart == "K2":
            q = phi2_pull(*vals)
            out = {"x2": q.x2, "y2": q.y2, "r2": q.r2, "lambda2": q.lam2}
        else:
            out = {"coords": list(fold_pull(chart, *vals).coords)}
    else:
        if chart == "K1":
            out = dict(zip(("x", "y", "eps", "lambda"), phi1_push(ChartPointK1(*vals))))
        elif chart == "K2":
            out = dict(zip(("x", "y", "eps", "lambda"), phi2_push(ChartPointK2(*vals))))
        else:
            out = dict(zip(("x", "y", "eps"), fold_push(FoldChartPoint(chart, tuple(vals)))))
    dump_json({"schema": SCHEMA, "chart": chart, "direction": args.direction, "result": out}, sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ducktrap", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "integrate one trajectory and write CSV/JSON"),
                        ("sweep", "classify starts over a lambda grid (CSV table)"),
                        ("criticals", "critical parameter values (JSON)"),
                        ("fold-scaling", "fit the exit-height exponent of the fold (JSON)")):
        p = sub.add_parser(name, help=help_)
        _add_scenario_flags(p)
        if name == "criticals":
            p.add_argument("--leading-only", action="store_true")
    p = sub.add_parser("charts", help="push/pull coordinates through blow-up charts")
    p.add_argument("direction", choices=("push", "pull"))
    p.add_argument("--chart", required=True, choices=("K1", "K2", "K1f", "K2f", "K3f"))
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "charts":
            return cmd_charts(args)
        cfg = _load_config(args)
        if args.dump_config:
            sys.stdout.write(serialize_config(cfg))
            return EXIT_OK
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "criticals":
            return cmd_criticals(cfg, leading_only=args.leading_only)
        return cmd_fold_scaling(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DucktrapError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
