"""Command-line runner: ``simplexlab run|validate|report``.

Exit codes: 0 ok, 1 a numeric invariant failed, 2 bad configuration or I/O.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import identities, scan, singular, structured
from .config import load_config, resolved
from .errors import ConfigError, SimplexLabError
from .forms import check_uniform_decay, fit_decay_exponent
from .rng import Stream
from .sets import build as build_set
from .simplex import product_shape

OK, INVARIANT, CONFIG = 0, 1, 2
RESULT = "result.json"
PLOT = "plot.csv"
METADATA = "metadata.json"


@dataclass
class Outcome:
    result: dict
    checks: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    plot: list = field(default_factory=list)  # (x, y, sigma)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _dump(path: Path, obj):
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _cell(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])


def _setup(cfg):
    simplices = cfg.build_simplices()
    shape = product_shape(simplices)
    spec = cfg.set.model_dump()
    try:
        A = build_set(spec, shape, cfg.resolution)
    except (ValueError, SimplexLabError) as exc:
        raise ConfigError("set", str(exc)) from None
    return simplices, A


def _singular_set(cfg):
    """Sets for the singular forms live on prod_i [0,1]^(k_i+1)."""
    return _setup(cfg)[1]


# -- experiments -------------------------------------------------------------

def run_scan(cfg, stream, workers) -> Outcome:
    simplices, A = _setup(cfg)
    sched = scan.schedule(cfg.delta, A.shape, cfg.C1, cfg.C2, cfg.C3)
    rep = scan.scan_lambda(A, simplices, cfg.lambda_min, cfg.lambda_max, cfg.grid_points,
                           cfg.samples, stream.child("scan"), workers, cfg.max_witnesses, sched)
    result = rep.to_record()
    result["set_density"] = A.density
    checks = {"witnesses_verify": rep.witnesses_verified}
    if cfg.oracle is not None:
        feas = scan.oracle_feasible(A, simplices, rep.lambdas, cfg.oracle.rotation_samples,
                                    cfg.oracle.base_grid, stream.child("oracle"))
        result["oracle_feasible"] = feas
        agree = endpoints_agree(rep.detected, feas)
        result["oracle_agreement"] = agree
        checks["oracle_endpoints_within_one_step"] = agree
    rows = [(iv.lo, iv.hi, iv.min_value, iv.witnesses) for iv in rep.intervals]
    plot = [(lam, e.value, e.stderr) for lam, e in zip(rep.lambdas, rep.estimates)]
    return Outcome(result, checks, {"intervals": (["lambda_lo", "lambda_hi", "min_value", "witnesses"], rows)}, plot)


def endpoints_agree(detected, feasible, steps: int = 1) -> bool:
    """Detected and oracle-feasible sets share a nonempty run with endpoints within ``steps``."""
    d = [i for i, f in enumerate(detected) if f]
    o = [i for i, f in enumerate(feasible) if f]
    if not d or not o:
        return False
    return abs(d[0] - o[0]) <= steps and abs(d[-1] - o[-1]) <= steps


def run_structured(cfg, stream, workers) -> Outcome:
    simplices, A = _setup(cfg)
    ch = structured.jensen_chain(A, cfg.lam)
    result = {"m": ch.m, "kappa": ch.kappa, "measure": str(A.measure),
              "lhs": str(ch.lhs), "power_mean": str(ch.power_mean), "rhs": str(ch.rhs),
              "lhs_float": float(ch.lhs), "power_mean_float": float(ch.power_mean),
              "rhs_float": float(ch.rhs), "per_cube_ok": ch.per_cube_ok,
              "per_cube_equal": ch.per_cube_equal}
    plot = [(float(r.index), float(r.integral), 0.0) for r in ch.per_cube]
    if cfg.samples:
        fl = structured.structured_floor(A, simplices, cfg.lam, cfg.samples, stream.child("floor"), workers)
        result["estimate"] = fl.to_record()
    rows = [(r.index, str(r.average), str(r.kappa_power), str(r.integral)) for r in ch.per_cube]
    return Outcome(result, {"jensen_chain": ch.holds},
                   {"cubes": (["cube", "average", "kappa_power", "integral"], rows)}, plot)


HEAT_TOL, CONV_TOL = 1e-4, 1e-3


def run_identities(cfg, stream, workers) -> Outcome:
    rows = []
    for d in cfg.heat.dims:
        r = identities.check_heat_identity(cfg.heat.t, cfg.heat.lam, d)
        rows.append(("heat", d, r, HEAT_TOL, r <= HEAT_TOL))
    c = cfg.conv
    for d in c.dims:
        rep = identities.check_conv_identities(c.s, c.t, c.lam_j, d)
        rows.append(("gkh", d, rep.gkh_residual, CONV_TOL, rep.gkh_residual <= CONV_TOL))
        rows.append(("khhconv", d, rep.khh_residual, CONV_TOL, rep.khh_residual <= CONV_TOL))
    ok = all(r[-1] for r in rows)
    result = {"residuals": [dict(zip(("check", "dim", "residual", "tolerance", "ok"), r)) for r in rows]}
    plot = [(float(d), float(res), 0.0) for _, d, res, _, _ in rows]
    return Outcome(result, {"identities_within_tolerance": ok},
                   {"residuals": (["check", "dim", "residual", "tolerance", "ok"], rows)}, plot)


def run_telescoping(cfg, stream, workers) -> Outcome:
    A = _singular_set(cfg)
    reps, rows = [], []
    for ratio in cfg.ratios:
        rep = singular.check_telescoping(cfg.L, cfg.a, cfg.a * ratio, cfg.alpha, A, cfg.samples,
                                         stream.child("ratio", repr(float(ratio))), workers)
        reps.append({"ratio": ratio, **rep.to_record(), "holds": rep.holds()})
        rows.append((float(ratio), rep.theta_sum, rep.xi_a, rep.xi_b, rep.residual, rep.stderr,
                     rep.holds()))
    plot = [(r[0], r[4], r[5]) for r in rows]
    return Outcome({"reports": reps}, {"telescoping_within_3_sigma": all(r["holds"] for r in reps)},
                   {"telescoping": (["ratio", "theta_sum", "xi_a", "xi_b", "residual", "stderr", "holds"], rows)},
                   plot)


def run_growth(cfg, stream, workers) -> Outcome:
    simplices, A = _setup(cfg)
    rep = singular.growth_probe(A, simplices, cfg.epsilon, cfg.J, cfg.samples, stream, workers,
                                cfg.bootstrap)
    result = {"epsilon": rep.epsilon, "lambdas": list(rep.lambdas), "exponent": rep.exponent,
              "ci_low": rep.ci_low, "ci_high": rep.ci_high, "upper95": rep.upper95,
              "fitted_J": list(rep.fitted_J), "target_exponent": rep.target,
              "rows": list(rep.rows())}
    ok = math.isfinite(rep.upper95) and rep.upper95 <= 1.0
    rows = [(r["J"], r["sum"], r["stderr"], r["fitted"]) for r in rep.rows()]
    plot = [(float(J), S, se) for J, S, se, _ in rows]
    return Outcome(result, {"sublinear_at_95": ok},
                   {"growth": (["J", "sum", "stderr", "fitted"], rows)}, plot)


def run_decay(cfg, stream, workers) -> Outcome:
    simplices, A = _setup(cfg)
    pts = check_uniform_decay(A, simplices, cfg.lam, cfg.epsilons, cfg.samples, stream, workers)
    expo = fit_decay_exponent(pts)
    sig = [p for p in pts if p.significant()]
    monotone = all(a.difference > b.difference for a, b in zip(sig, sig[1:]))
    result = {"lam": cfg.lam, "exponent": expo, "set_density": A.density,
              "points": [vars(p) | {"significant": p.significant()} for p in pts]}
    rows = [(p.epsilon, p.difference, p.stderr, p.n0, p.neps, p.significant()) for p in pts]
    plot = [(p.epsilon, p.difference, p.stderr) for p in pts]
    checks = {"monotone_decay": monotone,
              "exponent_at_least_min": math.isfinite(expo) and expo >= cfg.min_exponent}
    return Outcome(result, checks,
                   {"decay": (["epsilon", "difference", "stderr", "n0", "neps", "significant"], rows)},
                   plot)


RUNNERS = {"scan": run_scan, "structured": run_structured, "identities": run_identities,
           "telescoping": run_telescoping, "growth": run_growth, "uniform-decay": run_decay}


def execute(cfg, out_dir: Path, workers: int | None = None) -> Outcome:
    """Run one experiment and write its artifacts into ``out_dir``."""
    workers = workers if workers is not None else cfg.workers
    stream = Stream(cfg.seed).child(cfg.experiment)
    started = _dt.datetime.now(_dt.timezone.utc)
    outcome = RUNNERS[cfg.experiment](cfg, stream, workers)
    finished = _dt.datetime.now(_dt.timezone.utc)

    out_dir.mkdir(parents=True, exist_ok=True)
    _dump(out_dir / "config.json", resolved(cfg))
    _dump(out_dir / RESULT, {"experiment": cfg.experiment, "seed": cfg.seed,
                             "checks": outcome.checks, "ok": all(outcome.checks.values()),
                             "result": outcome.result})
    for name, (header, rows) in outcome.tables.items():
        _write_csv(out_dir / f"{name}.csv", header, rows)
    _write_csv(out_dir / PLOT, ["x", "y", "sigma"], outcome.plot)
    _dump(out_dir / METADATA, {"started": started.isoformat(), "finished": finished.isoformat(),
                               "seconds": (finished - started).total_seconds(), "workers": workers,
                               "python": platform.python_version(), "numpy": np.__version__})
    return outcome


def _out_dir(cfg, config_path: Path, override) -> Path:
    if override:
        return Path(override)
    p = Path(cfg.output)
    return p if p.is_absolute() else config_path.parent / p


def cmd_run(args) -> int:
    path = Path(args.config)
    cfg = load_config(path)
    print(json.dumps({"resolved_config": resolved(cfg)}, sort_keys=True))
    out = _out_dir(cfg, path, args.out)
    outcome = execute(cfg, out, args.workers)
    for name, ok in outcome.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"results written to {out}")
    return OK if all(outcome.checks.values()) else INVARIANT


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps(resolved(cfg), indent=2, sort_keys=True))
    return OK


def cmd_report(args) -> int:
    root = Path(args.results)
    if not root.is_dir():
        raise ConfigError("<results-dir>", f"{root} is not a directory")
    files = sorted(root.rglob(RESULT))
    if not files:
        print(f"no results under {root}")
        return OK
    status = OK
    for f in files:
        rec = json.loads(f.read_text())
        checks = rec.get("checks", {})
        flag = "ok" if rec.get("ok") else "FAILED"
        detail = ", ".join(f"{k}={'pass' if v else 'fail'}" for k, v in sorted(checks.items()))
        print(f"{f.parent}: {rec.get('experiment')} seed={rec.get('seed')} {flag} [{detail}]")
        if not rec.get("ok"):
            status = INVARIANT
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simplexlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: config's output key)")
    r.add_argument("--workers", type=int, help="worker threads; never changes results")
    r.set_defaults(fn=cmd_run)
    v = sub.add_parser("validate", help="validate a config and print it fully resolved")
    v.add_argument("config")
    v.set_defaults(fn=cmd_validate)
    rp = sub.add_parser("report", help="summarise result directories")
    rp.add_argument("results")
    rp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG
    except (OSError, SimplexLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG


if __name__ == "__main__":
    sys.exit(main())
