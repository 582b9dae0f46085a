"""Command line: closed-form bounds, two-user regions, sweeps and simulations.

    dofcast region   --N 1 --gamma 1 --dm 0
    dofcast sumdof   --K 3 --gamma 1 --dm 1
    dofcast sweep    --K 3 --variable d_m --start 0 --stop 7 --steps 64 --out results/
    dofcast simulate --K 2 --dm 2 --scheme optimal --grid-db 30,40,50,60 --trials 200

Exit status: 0 when every verdict passes, 1 on a tolerance failure,
2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import (SystemConfig, channel_aggregation_sum_dof,
                       full_csit_sum_dof, lower_bound_sum_dof, two_user_region,
                       upper_bound_sum_dof)
from .channel import DEFAULT_SEED
from .errors import DomainError
from .exact import fmt, fraction_to_json, to_fraction
from .schemes.plans import SCHEMES, make_plan
from .sim import (DEFAULT_GRID_DB, DEFAULT_TRIALS, compare_to_analysis, db_to_power,
                  estimate_dof, experiment_betas, verify_sample_path)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SWEEP_COLUMNS = ("variable", "lower", "upper", "aggregation", "full_csit", "tight")


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    K: int = 2
    N: int = 1
    M: int | None = None
    gamma: Fraction = Fraction(1)
    d_m: Fraction = Fraction(0)
    scheme: str = "optimal"
    L: int | None = None
    corner: str | None = None
    grid_db: tuple = DEFAULT_GRID_DB
    trials: int = DEFAULT_TRIALS
    seed: int = DEFAULT_SEED
    tol: float = 0.15
    out: str | None = None
    variable: str = "d_m"
    start: Fraction | None = None
    stop: Fraction | None = None
    steps: int = 50
    workers: int = 1
    exact: bool = False

    RATIONAL = ("gamma", "d_m", "start", "stop")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        return cls().merged(doc)

    def merged(self, values: dict) -> "ExperimentConfig":
        clean = {}
        for key, val in values.items():
            if val is None:
                continue
            if key in self.RATIONAL:
                val = _rational(val)
            elif key == "grid_db":
                val = parse_grid(val)
            clean[key] = val
        return replace(self, **clean)

    def system(self) -> SystemConfig:
        try:
            return SystemConfig(self.K, self.N, self.gamma, self.d_m, self.M)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc

    def to_json(self) -> dict:
        doc = asdict(self)
        for key in self.RATIONAL:
            if doc[key] is not None:
                doc[key] = fraction_to_json(doc[key])
        doc["grid_db"] = list(self.grid_db)
        return doc


def _rational(val):
    if isinstance(val, dict):
        return Fraction(int(val["num"]), int(val["den"]))
    try:
        return to_fraction(val)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def parse_grid(val) -> tuple:
    if isinstance(val, str):
        parts = [p for p in val.split(",") if p.strip()]
    else:
        parts = list(val)
    try:
        grid = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"bad grid {val!r}") from exc
    return grid


def jq(value: Fraction) -> dict:
    return fraction_to_json(value)


def dec(value) -> str:
    return repr(float(value))


def cell(value, exact: bool) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return fmt(value) if exact else dec(value)


def write_csv(path: Path | None, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


def write_manifest(out: Path, doc: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def _base_manifest(command: str, exp: ExperimentConfig) -> dict:
    return {"command": command, "version": __version__, "config": exp.to_json(),
            "seed": exp.seed}


# -- commands ----------------------------------------------------------------

def cmd_region(exp: ExperimentConfig) -> int:
    cfg = exp.system()
    if cfg.K != 2:
        raise UsageError(f"region is defined for K=2 only (got K={cfg.K})")
    reg = two_user_region(cfg)
    print(f"two-user DoF region  N={cfg.N} gamma={fmt(cfg.gamma)} d_m={fmt(cfg.d_m)}")
    print("vertices:")
    for v in reg.vertices:
        print(f"  ({fmt(v[0])}, {fmt(v[1])})  ~ ({float(v[0]):.4f}, {float(v[1]):.4f})")
    print("corners:")
    for name, v in reg.corners.items():
        print(f"  {name}: ({fmt(v[0])}, {fmt(v[1])})")
    print("inequalities:")
    for a, b, rhs in reg.inequalities:
        print(f"  {fmt(a)}*d1 + {fmt(b)}*d2 <= {fmt(rhs)}")
    if exp.out:
        out = Path(exp.out)
        rows = [[i, cell(v[0], exp.exact), cell(v[1], exp.exact)]
                for i, v in enumerate(reg.vertices)]
        write_csv(out / "region.csv", ["vertex", "d1", "d2"], rows)
        doc = _base_manifest("region", exp)
        doc["vertices"] = [[jq(v[0]), jq(v[1])] for v in reg.vertices]
        doc["corners"] = {k: [jq(v[0]), jq(v[1])] for k, v in reg.corners.items()}
        doc["inequalities"] = [[jq(a), jq(b), jq(r)] for a, b, r in reg.inequalities]
        write_manifest(out, doc)
    return EXIT_OK


def bounds_row(cfg: SystemConfig, variable) -> dict:
    lo = lower_bound_sum_dof(cfg)
    up = upper_bound_sum_dof(cfg)
    return {
        "variable": Fraction(variable),
        "lower": lo.value,
        "upper": up.value,
        "aggregation": channel_aggregation_sum_dof(cfg),
        "full_csit": full_csit_sum_dof(cfg),
        "tight": lo.value == up.value,
        "lower_regime": lo.regime,
        "upper_regime": up.regime,
        "warnings": list(lo.warnings),
    }


def cmd_sumdof(exp: ExperimentConfig) -> int:
    cfg = exp.system()
    row = bounds_row(cfg, cfg.d_m)
    print(f"sum DoF  K={cfg.K} N={cfg.N} M={cfg.M} gamma={fmt(cfg.gamma)} d_m={fmt(cfg.d_m)}")
    for key in ("lower", "upper", "aggregation", "full_csit"):
        print(f"  {key:<12} {fmt(row[key]):>10}  ({float(row[key]):.6f})")
    print(f"  lower regime  {row['lower_regime']}")
    print(f"  upper regime  {row['upper_regime']}")
    print(f"  tight         {row['tight']}" + ("" if row["tight"] else "  (gap)"))
    for w in row["warnings"]:
        print(f"  warning: {w}")
    if exp.out:
        out = Path(exp.out)
        write_csv(out / "sumdof.csv", SWEEP_COLUMNS,
                  [[cell(row[c], exp.exact) for c in SWEEP_COLUMNS]])
        doc = _base_manifest("sumdof", exp)
        doc["result"] = {k: (jq(v) if isinstance(v, Fraction) else v) for k, v in row.items()}
        write_manifest(out, doc)
    return EXIT_OK


def sweep_values(start: Fraction, stop: Fraction, steps: int) -> list:
    if steps < 1 or stop < start or (steps > 1 and stop == start):
        raise UsageError("sweep needs start <= stop and steps >= 1 (start < stop when steps > 1)")
    if steps == 1:
        return [start]
    return [start + (stop - start) * Fraction(i, steps - 1) for i in range(steps)]


def cmd_sweep(exp: ExperimentConfig) -> int:
    var = exp.variable.replace("-", "_").lower()
    if var in ("dm", "d_m"):
        var = "d_m"
    elif var != "gamma":
        raise UsageError("sweep variable must be d_m or gamma")
    base = exp.system()
    start = exp.start if exp.start is not None else Fraction(0)
    if exp.stop is not None:
        stop = exp.stop
    elif var == "gamma":
        stop = Fraction(1)
    else:
        stop = base.K * (base.K - 1) * base.N * base.gamma + 1
    rows = []
    for v in sweep_values(start, stop, exp.steps):
        try:
            cfg = replace(base, **{var: v})
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
        r = bounds_row(cfg, v)
        rows.append([cell(r[c], exp.exact) for c in SWEEP_COLUMNS])
    out = Path(exp.out) if exp.out else None
    text = write_csv(out / "sweep.csv" if out else None, SWEEP_COLUMNS, rows)
    if out:
        doc = _base_manifest("sweep", exp)
        doc["variable"] = var
        doc["rows"] = len(rows)
        doc["columns"] = list(SWEEP_COLUMNS)
        write_manifest(out, doc)
        print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _beta_json(betas: dict) -> dict:
    return {str(j): {"real": np.real(b).tolist(), "imag": np.imag(b).tolist()}
            for j, b in betas.items()}


def cmd_simulate(exp: ExperimentConfig) -> int:
    cfg = exp.system()
    try:
        plan = make_plan(cfg, exp.scheme, L=exp.L, corner=exp.corner)
    except DomainError as exc:
        raise UsageError(f"scheme {exp.scheme!r} cannot run at this configuration: {exc}")
    grid = [db_to_power(x) for x in exp.grid_db]
    t0 = time.perf_counter()
    try:
        est = estimate_dof(cfg, plan, grid, exp.trials, exp.seed, workers=exp.workers)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    elapsed = time.perf_counter() - t0
    verdict = compare_to_analysis(cfg, plan, est, tol=exp.tol)
    paths = verify_sample_path(plan, grid[-1], exp.seed)
    print(f"simulate {plan.name}  K={cfg.K} N={cfg.N} M={cfg.M} gamma={fmt(cfg.gamma)} "
          f"d_m={fmt(cfg.d_m)}  trials={exp.trials} seed={exp.seed} backend={kernels.BACKEND}")
    for row in plan.describe():
        print(f"  {row}")
    print(f"  {'P_dB':>6} {'sum_rate':>10} {'stderr':>8}")
    for db, p in zip(exp.grid_db, est.points):
        print(f"  {db:>6g} {p.sum_rate:>10.3f} {p.sum_stderr:>8.3f}")
    for line in verdict.lines:
        print(f"  {line}")
    print(f"  verdict: {verdict.status}  ({elapsed:.2f}s)")
    if exp.out:
        out = Path(exp.out)
        K = cfg.K
        header = ["P_db", "P", "log2_P"] + [f"rate_user{k + 1}" for k in range(K)] + \
            ["sum_rate", "sum_stderr", "quant_var", "clipped", "resampled"]
        rows = []
        for db, p in zip(exp.grid_db, est.points):
            rows.append([repr(float(db)), repr(p.P), repr(float(np.log2(p.P)))]
                        + [repr(float(r)) for r in p.per_user_rate]
                        + [repr(p.sum_rate), repr(p.sum_stderr),
                           "" if p.quant_var is None else repr(p.quant_var),
                           p.outage["clipped"], p.outage["resampled"]])
        write_csv(out / "rates.csv", header, rows)
        doc = _base_manifest("simulate", exp)
        doc["backend"] = kernels.BACKEND
        doc["plan"] = {
            "name": plan.name, "T_c": plan.T_c, "segments": plan.describe(),
            "predicted_sum": jq(plan.predicted_sum),
            "predicted_per_user": [jq(v) for v in plan.predicted_per_user()],
        }
        if plan.params is not None:
            doc["plan"]["params"] = {"delta": jq(plan.params.delta),
                                     "theta": jq(plan.params.theta),
                                     "eta": jq(plan.params.eta), "L": plan.params.L}
        doc["beta"] = _beta_json(experiment_betas(cfg, exp.seed))
        doc["slopes"] = {
            "sum": est.sum_slope, "per_user": [float(s) for s in est.per_user_slope],
            "intercepts": [float(c) for c in est.intercepts],
            "sum_intercept": est.sum_intercept,
            "residuals": [float(r) for r in est.residuals],
        }
        doc["verdict"] = {
            "status": verdict.status, "passed": verdict.passed,
            "residual_ok": verdict.residual_ok, "tol": verdict.tol,
            "predicted": jq(verdict.predicted), "measured": verdict.measured,
            "lower": jq(verdict.lower), "upper": jq(verdict.upper),
            "aggregation": jq(verdict.aggregation), "lines": verdict.lines,
        }
        doc["sample_path"] = {str(k): v for k, v in paths.items()}
        doc["elapsed_s"] = elapsed
        write_manifest(out, doc)
    return EXIT_OK if verdict.passed else EXIT_FAIL


COMMANDS = {"region": cmd_region, "sumdof": cmd_sumdof, "sweep": cmd_sweep,
            "simulate": cmd_simulate}


# -- argument parsing --------------------------------------------------------

def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text}") from exc
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="JSON experiment config; flags override it")
    g.add_argument("--seed", type=_u64, help=f"master seed (default {DEFAULT_SEED})")
    g.add_argument("--out", help="directory for CSV and manifest.json")
    g.add_argument("--tol", type=float, help="slope tolerance (default 0.15)")
    g.add_argument("--K", type=int, help="number of users")
    g.add_argument("--N", type=int, help="receive antennas per user")
    g.add_argument("--M", type=int, help="transmit antennas (default K*N)")
    g.add_argument("--gamma", help="CSI delay share of a block, p/q or decimal")
    g.add_argument("--dm", dest="d_m", help="multicast pipe DoF, p/q or decimal")
    g.add_argument("--exact", action="store_const", const=True,
                   help="write rationals as p/q in CSV instead of decimals")

    p = argparse.ArgumentParser(prog="dofcast", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("region", parents=[common], help="two-user DoF region")
    sub.add_parser("sumdof", parents=[common], help="sum-DoF bounds at one point")
    sw = sub.add_parser("sweep", parents=[common], help="bounds over a d_m or gamma range")
    sw.add_argument("--variable", help="d_m or gamma")
    sw.add_argument("--start", help="first value")
    sw.add_argument("--stop", help="last value")
    sw.add_argument("--steps", type=int, help="number of rows")
    sim = sub.add_parser("simulate", parents=[common], help="Monte-Carlo DoF slope")
    sim.add_argument("--scheme", choices=SCHEMES, help="transmission plan (default optimal)")
    sim.add_argument("--L", type=int, help="order depth for --scheme mat")
    sim.add_argument("--corner", choices=list("ABCEF"), type=str.upper,
                     help="corner for --scheme corner")
    sim.add_argument("--grid-db", dest="grid_db", help="comma list of SNRs in dB")
    sim.add_argument("--trials", type=int, help="blocks per grid point")
    sim.add_argument("--workers", type=int, help="threads for trial evaluation")
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    exp = ExperimentConfig()
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        exp = ExperimentConfig.from_dict(doc)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    exp = exp.merged(overrides)
    if exp.trials < 1:
        raise UsageError("--trials must be positive")
    return exp


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        exp = load_config(args)
        return COMMANDS[args.command](exp)
    except (UsageError, DomainError) as exc:
        print(f"dofcast {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
