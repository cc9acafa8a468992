"""Command-line front end.

    coldlimits --config run.json [--mode MODE] [--out PATH] [--threads N] [--seed N]

Exit codes: 0 success, 1 failed validation check or unexpected error,
2 configuration error, 3 numerical accuracy error, 4 instability or regime
error. Errors are also written to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import __version__, bounds, cooling, currents, floquet, validation
from .config import (MODES, RunConfig, build_cooling, build_dos, build_objects, build_task,
                     parse_config, _semantic_checks)
from .errors import AccuracyError, ColdLimitsError, ConfigError, InstabilityError

UNIT_NOTE = "natural units, hbar = k_B = 1"
BOUNDS_COLUMNS = ("name", "bound", "value", "log_value", "regime_valid", "note")
VALIDATE_COLUMNS = ("check", "passed", "seconds", "detail")


def header_lines(cfg: RunConfig) -> list:
    return [f"coldlimits {__version__} mode={cfg.mode}",
            f"config_sha256={cfg.digest()}",
            f"unit_note={UNIT_NOTE}"]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.12e}"
    return str(x)


def _csv(rows, columns, headers) -> str:
    buf = io.StringIO()
    for line in headers:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _threads(cfg: RunConfig) -> int:
    t = cfg.numerics["threads"]
    return os.cpu_count() or 1 if t == "auto" else int(t)


# bounds -------------------------------------------------------------------


def _bound_row(i, t, seed):
    kind = t["bound"]
    row = {"name": t.get("name", f"task{i}"), "bound": kind, "regime_valid": True, "note": ""}
    task = build_task(t["task"]) if "task" in t else None
    if kind == "masanes":
        mb = bounds.masanes_error_bound(task, build_dos(t["dos"]))
        row.update(value=mb.epsilon_min, log_value=mb.log_epsilon, regime_valid=mb.regime_valid,
                   note=f"E0={mb.E0:.10g}")
    elif kind == "bath_family":
        eps = bounds.bath_family_error_bound(task, t["a"], t["nu"], t["V"])
        row.update(value=eps, log_value=math.log(eps) if eps > 0 else -math.inf)
    elif kind == "radiation":
        val = bounds.radiation_temperature_bound(task, t["V"])
        row.update(value=val, log_value=math.log(val),
                   regime_valid=bounds.radiation_regime_flag(task, t["V"]))
    elif kind == "time_scaling":
        val = bounds.time_scaling_bound(task, t["t"], t["w_rate"], t["c_speed"])
        row.update(value=val, log_value=math.log(val))
    elif kind == "temperature_from_error":
        val = bounds.temperature_from_error(task, t["epsilon"])
        row.update(value=val, log_value=math.log(val))
    elif kind == "landauer":
        val = bounds.landauer_purity_bound(t["lambda_min"], t["beta"], t["J_B"])
        row.update(value=val, log_value=math.log(val))
    elif kind == "landauer_oracle":
        rep = bounds.landauer_brute_force_oracle(t.get("dim_S", 2), t.get("dim_B", 3), t["beta"],
                                                 t.get("trials", 1000), seed=seed)
        row.update(value=float(rep.violations), log_value=math.nan, regime_valid=rep.violations == 0,
                   note=f"trials={rep.trials} min_slack={rep.min_slack:.6e}")
    elif kind == "scharlau":
        val = bounds.scharlau_bound(t["T"], t["delta"], t["J_B"], t["d_B"])
        row.update(value=val, log_value=math.log(val))
    elif kind == "allahverdyan":
        val = bounds.allahverdyan_bound(t["T"], t["delta"], t["J_B"])
        row.update(value=val, log_value=math.log(val))
    elif kind == "work_qubit":
        ok = bounds.work_qubit_cooling_possible(t["W"], t["H_S"], t["beta"])
        row.update(value=float(ok), log_value=math.nan, note="1 = cooling possible")
    return row


def run_bounds(cfg: RunConfig, seed: int) -> str:
    rows = [_bound_row(i, t, seed + i) for i, t in enumerate(cfg.bounds_tasks)]
    return _csv(rows, BOUNDS_COLUMNS, header_lines(cfg))


# simulate / coolscan / validate ---------------------------------------------


def run_simulate(cfg: RunConfig) -> str:
    net, res, damping = build_objects(cfg)
    K = cfg.numerics["floquet_K"]
    sol = floquet.solve(net, damping, method=cfg.numerics["floquet_method"],
                        K=None if K == "auto" else int(K))
    if not sol.stable:
        raise InstabilityError("driven dynamics is not stable: " + "; ".join(sol.stability.notes))
    rtol = cfg.numerics["quad_rel_tol"]
    report = currents.heat_currents(sol, res, rtol=rtol)
    currents.average_power(report, res)
    if not report.meta["first_law_ok"]:
        raise AccuracyError("first-law closure failed",
                            {"residual": report.meta["first_law_residual"]})
    return report.to_csv(header_lines(cfg) + [f"K={sol.K} method={sol.method}"])


def run_coolscan(cfg: RunConfig):
    setup = build_cooling(cfg)
    c = cfg.cooling
    result = cooling.optimize_drive_frequency(setup, c.get("omega_d_range"), cfg.numerics["scan_steps"],
                                              c.get("method", "weak"), threads=_threads(cfg))
    heads = header_lines(cfg)
    return result.scan_csv(heads), result.summary_csv(heads)


def run_validate(cfg: RunConfig, seed: int):
    results = validation.run_suite(seed)
    rows = [{"check": r.name, "passed": r.passed, "seconds": round(r.seconds, 3), "detail": r.detail}
            for r in results]
    return results, _csv(rows, VALIDATE_COLUMNS, header_lines(cfg))


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary" + (out.suffix or ".csv"))


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def run(cfg: RunConfig, out=None, seed=None) -> int:
    """Execute one configured run and write its CSV artifacts. Returns the exit code."""
    out = out or cfg.output.get("path")
    seed = cfg.numerics["seed"] if seed is None else seed
    if cfg.mode == "bounds":
        _write(run_bounds(cfg, seed), out)
    elif cfg.mode == "simulate":
        _write(run_simulate(cfg), out)
    elif cfg.mode == "coolscan":
        scan, summary = run_coolscan(cfg)
        if out is None:
            sys.stdout.write(scan + "\n" + summary)
        else:
            Path(out).write_text(scan)
            _summary_path(Path(out)).write_text(summary)
    else:
        results, table = run_validate(cfg, seed)
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        if out is not None:
            Path(out).write_text(table)
        return 0 if all(r.passed for r in results) else 1
    return 0


def error_record(exc: BaseException) -> dict:
    rec = {"error": type(exc).__name__, "exit_code": getattr(exc, "exit_code", 1), "message": str(exc)}
    if isinstance(exc, ConfigError):
        rec["errors"] = [{"path": p, "message": m} for p, m in exc.errors]
    if isinstance(exc, AccuracyError) and exc.diagnostics:
        rec["diagnostics"] = exc.diagnostics
    return rec


def _parser():
    p = argparse.ArgumentParser(prog="coldlimits", description="Cooling limits and third-law bounds.")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--mode", choices=MODES, help="override the configured mode")
    p.add_argument("--out", help="output CSV path (default: config output.path, else stdout)")
    p.add_argument("--threads", type=int, help="worker threads for scans")
    p.add_argument("--seed", type=int, help="seed for oracle sampling")
    p.add_argument("--version", action="version", version=f"coldlimits {__version__}")
    return p


def load(args) -> RunConfig:
    if args.config is None:
        if args.mode != "validate":
            raise ConfigError([("--config", "a configuration file is required for this mode")])
        cfg = parse_config(json.dumps({"version": __version__, "mode": "validate"}))
    else:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise ConfigError([("--config", f"cannot read {args.config}: {e.strerror}")]) from None
        cfg = parse_config(text)
    if args.mode:
        cfg.mode = args.mode
        _semantic_checks(cfg)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError([("--threads", "must be >= 1")])
        cfg.numerics["threads"] = args.threads
    if args.seed is not None:
        cfg.numerics["seed"] = args.seed
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load(args)
        return run(cfg, args.out)
    except ColdLimitsError as exc:
        sys.stderr.write(json.dumps(error_record(exc), default=str) + "\n")
        return exc.exit_code
    except Exception as exc:
        sys.stderr.write(json.dumps(error_record(exc), default=str) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
