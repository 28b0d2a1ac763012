"""Command line entry point: ``ris run|sweep|compare|truncate``.

Exit codes: 0 success (certificate PASS), 1 solver failure or bad input,
2 a certificate or sweep check FAILed.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .grid import ScalarField, edge_lipschitz, read_field, write_field
from .kinematics import ciarlet_necas_defect
from .rothe import Trajectory, lipschitz_truncate
from .verify.certificates import check_separately_global_certificate
from .verify.sweep import tau_sweep, worker_count
from .verify.toy import compare_solution_concepts

EXIT_OK, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2

TRAJECTORY_COLUMNS = ["k", "t", "E", "H", "R", "cumulative_dissipation", "theta",
                      "det_lower_bound", "cn_defect"]


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _output_dir(cfg: RunConfig, override) -> Path:
    out = Path(override) if override else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _header(cfg: RunConfig, **extra) -> dict:
    return {"config_sha256": cfg.content_hash, "scenario": cfg.name,
            "ris_version": __version__, **extra}


def trajectory_rows(traj: Trajectory, cn_enabled: bool, cn_resolution: int) -> list[dict]:
    cum = traj.cumulative_dissipation()
    rows = []
    for k in range(traj.num_steps + 1):
        cn = float(ciarlet_necas_defect(traj.ys[k], cn_resolution).defect) if cn_enabled else None
        rows.append({"k": k, "t": traj.t(k), "E": traj.E[k], "H": traj.H[k], "R": traj.R[k],
                     "cumulative_dissipation": float(cum[k]), "theta": traj.theta[k],
                     "det_lower_bound": traj.det_min[k], "cn_defect": cn})
    return rows


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg, flush=True)


# -- commands -------------------------------------------------------------------
def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if cfg.scenario is None:
        raise ConfigError("`ris run` needs a field scenario; use `ris compare` for [toy] configs")
    sc = cfg.scenario
    out = _output_dir(cfg, args.output)

    def progress(k, traj):
        _say(args, f"step {k}/{sc.time.N} E={traj.E[-1]:.10g} H={traj.H[-1]:.3g} "
                   f"R={traj.R[-1]:.3g} det_min={traj.det_min[-1]:.6g}")

    traj = sc.run(progress)
    v = sc.verify
    _write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS,
               trajectory_rows(traj, v.cn_enabled, v.cn_resolution))
    snaps = sc.snapshot_steps(traj.num_steps)
    fdir = out / "fields"
    fdir.mkdir(exist_ok=True)
    for k in snaps:
        write_field(fdir / f"step_{k}.risfield", traj.zs[k])
        write_field(fdir / f"step_{k}_y.risfield", traj.ys[k])
    bundle = check_separately_global_certificate(traj, v, sc.rothe.y, snapshots=snaps)
    bundle.write(out / "certificate.txt",
                 _header(cfg, N=sc.time.N, T=_fmt(sc.time.T), seed=sc.seed))
    n_fail = sum(not r.passed for r in bundle.records)
    _say(args, f"wrote {out}/trajectory.csv, certificate.txt, {len(snaps)} snapshots")
    if traj.failure is not None:
        _say(args, f"solver failure: {traj.failure}")
        return EXIT_SOLVER
    _say(args, f"CERTIFICATE {'PASS' if bundle.passed else 'FAIL'} "
               f"({len(bundle.records)} checks, {n_fail} failed)")
    return EXIT_OK if bundle.passed else EXIT_CHECK


def _parse_taus(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"--taus expects comma-separated step counts, got {text!r}") from None


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    if cfg.scenario is None:
        raise ConfigError("`ris sweep` needs a field scenario")
    Ns = _parse_taus(args.taus)
    out = _output_dir(cfg, args.output)
    try:
        rep = tau_sweep(cfg.scenario, Ns, worker_count(cfg.scenario.workers))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cols = ["N", "tau", "final_energy", "max_H", "H0", "det_min", "total_dissipation",
            "field_diff_to_previous", "failure"]
    _write_csv(out / "sweep.csv", cols, rep.rows())
    curve_cols = ["t"] + [f"N={N}" for N in rep.Ns]
    curve_rows = [{"t": t, **{f"N={N}": c[i] for N, c in zip(rep.Ns, rep.dissipation_curves)}}
                  for i, t in enumerate(rep.probe_times)]
    _write_csv(out / "sweep_dissipation.csv", curve_cols, curve_rows)
    factors = rep.H0_rate_factors(cfg.scenario.params.kappa)
    for r in rep.rows():
        _say(args, f"N={r['N']} max_H={r['max_H']:.6g} H0={r['H0']:.6g} "
                   f"det_min={r['det_min']:.6g} diss={r['total_dissipation']:.6g}")
    _say(args, f"uniform det bound {rep.uniform_det_bound:.6g}; max H strictly decreasing: "
               f"{rep.max_H_strictly_decreasing}; H0 rate factors "
               + ", ".join(f"{f:.4g}" for f in factors))
    if rep.failures:
        return EXIT_SOLVER
    ok = rep.max_H_strictly_decreasing and rep.uniform_det_bound > 0
    return EXIT_OK if ok else EXIT_CHECK


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    if cfg.toy is None:
        raise ConfigError("`ris compare` needs a config with a [toy] section")
    out = _output_dir(cfg, args.output)
    rec = compare_solution_concepts(cfg.toy)
    rows = rec.rows()
    _write_csv(out / "compare.csv", list(rows[0]), rows)
    summary = {"config_sha256": cfg.content_hash, **rec.summary()}
    with open(out / "compare_summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        for key, val in summary.items():
            fh.write(f"{key} {_fmt(val) if val is not None else 'none'}\n")
    _say(args, f"onset energetic={rec.onset_energetic} alternating={rec.onset_alternating} "
               f"paths_differ={rec.paths_differ} ordering_holds={rec.ordering_holds} "
               f"oracle_agrees={rec.oracle_agrees}")
    return EXIT_OK if rec.ordering_holds and rec.oracle_agrees else EXIT_CHECK


def cmd_truncate(args) -> int:
    if not (args.lam > 0 and math.isfinite(args.lam)):
        raise ConfigError(f"--lambda must be a positive number, got {args.lam!r}")
    src = Path(args.field)
    if not src.is_file():
        raise ConfigError(f"field file not found: {src}")
    f = read_field(src)
    if not isinstance(f, ScalarField):
        raise ConfigError("truncation applies to scalar fields only")
    res = lipschitz_truncate(f, args.lam, clamp=args.clamp)
    dst = Path(args.output) if args.output else src.with_name(src.stem + ".truncated.risfield")
    write_field(dst, res.truncated)
    _say(args, f"wrote {dst}: lambda={args.lam:.17g} mismatch_nodes={len(res.mismatch_nodes)} "
               f"edge_lipschitz={edge_lipschitz(f.grid, res.truncated.values):.17g}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ris", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ris {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-o", "--output", help="output directory (default: from the config)")
        p.add_argument("-q", "--quiet", action="store_true")

    p = sub.add_parser("run", help="run a scenario and certify the trajectory")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="time-step refinement sweep")
    p.add_argument("config")
    p.add_argument("--taus", required=True, help="nested step counts, e.g. 10,20,40,80")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="energetic vs separately global toy comparison")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("truncate", help="Lipschitz truncation of a scalar field file")
    p.add_argument("field")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--clamp", action="store_true", help="clamp the result to [0, 1]")
    p.add_argument("-o", "--output", help="output file (default: <field>.truncated.risfield)")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_truncate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"ris {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
