"""Command-line front end.

Subcommands write into a run directory (``--out`` or ``output_dir``)::

    csf3d simulate --config run.cfg --out runs/a
    csf3d verify-identity --set scenario.name=twisted_circle --set scenario.n=256
    csf3d check-zelenjak --samples 100 --seed 42
    csf3d convergence --config twisted.cfg --levels 3
    csf3d list-scenarios

Exit status: 0 pass, 1 verification failed, 2 configuration error,
3 runtime or I/O error.
"""

import argparse
import csv
import json
import logging
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, config, pipeline, plotting, zelenjak
from .errors import ConfigError, CSFError, DegenerateParametrizationError, InflectionDegeneracyError
from .scenarios import scenario_names, scenario_params

log = logging.getLogger("csf3d")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class RunIOError(CSFError):
    """An output file could not be written."""


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows):
    """CSV with a header row; floats as 17 significant digits."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise RunIOError(f"cannot write {path}: {exc}") from exc
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise RunIOError(f"cannot write {path}: {exc}") from exc
    return path


def versions():
    import matplotlib

    return {
        "csf3d": __version__,
        "numpy": np.__version__,
        "matplotlib": matplotlib.__version__,
        "python": platform.python_version(),
    }


def _meta(command, cfg, **extra):
    return {
        "command": command,
        "config": config.effective_flat(cfg),
        "seed": cfg.seed,
        "versions": versions(),
        **extra,
    }


# ---- config assembly -------------------------------------------------------


def _flat_from_args(args, config_path):
    flat = config.load_file(config_path) if config_path else {}
    flat.update(config.parse_overrides(args.set))
    if args.seed is not None:
        flat["seed"] = args.seed
    if args.plots:
        flat["emit_plots"] = True
    return flat


def _run_dir(args, cfg, config_path, multi):
    base = Path(args.out) if args.out else cfg.output_dir
    if multi:
        base = base / Path(config_path).stem
    return base


# ---- subcommands -----------------------------------------------------------


def cmd_simulate(cfg, out):
    """Run the scenario in its own mode and write the trajectory files."""
    if cfg.stop is None:
        raise ConfigError("simulate needs at least one stop.* key")
    traj = pipeline.simulate(cfg)
    rows = pipeline.trajectory_rows(traj, cfg.control.scheme)
    write_csv(out / "trajectory.csv", ("clock", "length", "max_curvature", "min_speed"), rows)
    stride = int(cfg.section("snapshots")["stride"])
    if stride:
        last = len(traj) - 1
        for k, snap in enumerate(traj.snapshots):
            if k % stride == 0 or k == last:
                write_csv(out / "snapshots" / f"{k:04d}.csv", ("x", "y", "z"), snap.curve.nodes)
    if cfg.emit_plots:
        plotting.trajectory_plot(rows, out / "plots" / "trajectory.svg")
    final = traj.snapshots[-1]
    write_json(
        out / "meta.json",
        _meta(
            "simulate",
            cfg,
            stop_reason=traj.stop_reason,
            snapshots=len(traj),
            final_clock=final.clock,
            steps=final.steps,
        ),
    )
    log.info("simulate: %d snapshots, stop=%s, clock=%.6g", len(traj), traj.stop_reason, final.clock)
    return EXIT_PASS


def _energy_rows(reports):
    return [(r.tau, r.E, r.Pi, r.D, r.dE_dtau_fd, r.residual) for r in reports]


ENERGY_HEADER = ("tau", "E", "Pi", "D", "dE_dtau_fd", "residual")


def _degenerate_verdict(exc):
    return {"pass": False, "error": type(exc).__name__, "message": str(exc)}


def cmd_verify_identity(cfg, out):
    """Rescaled run plus energy-balance and ``Pi <= -dE/dtau`` checks."""
    try:
        result, start = pipeline.verify_from_config(cfg)
    except (InflectionDegeneracyError, DegenerateParametrizationError) as exc:
        write_json(out / "verdict.json", _degenerate_verdict(exc))
        write_json(out / "meta.json", _meta("verify-identity", cfg, stop_reason="degenerate"))
        log.error("verify-identity: %s", exc)
        return EXIT_FAIL
    write_csv(out / "energy.csv", ENERGY_HEADER, _energy_rows(result.reports))
    verdict = result.verdict()
    write_json(out / "verdict.json", verdict)
    if cfg.emit_plots:
        plotting.energy_plot(result.reports, out / "plots" / "energy.svg")
        plotting.residual_plot(result.reports, out / "plots" / "residual.svg")
    write_json(
        out / "meta.json",
        _meta("verify-identity", cfg, stop_reason=result.trajectory.stop_reason, rescale=start.describe()),
    )
    log.info(
        "verify-identity: max|res|/E=%.3e corollary2=%s -> %s",
        result.max_rel_residual,
        result.corollary2_ok,
        "pass" if result.passed else "FAIL",
    )
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_convergence(cfg, out, levels=None):
    """Identity check at ``dtau, dtau/2, ...`` from one shared rescaled start."""
    levels = int(cfg.section("convergence")["levels"]) if levels is None else levels
    if levels < 2:
        raise ConfigError("convergence needs at least 2 levels")
    try:
        start = pipeline.rescaled_start(cfg)
        results = []
        for level in range(levels):
            dtau = cfg.snapshot_dtau / 2**level
            result, _ = pipeline.verify_from_config(cfg, dtau=dtau, start=start)
            write_csv(out / f"level_{level}" / "energy.csv", ENERGY_HEADER, _energy_rows(result.reports))
            results.append((dtau, result))
    except (InflectionDegeneracyError, DegenerateParametrizationError) as exc:
        write_json(out / "verdict.json", _degenerate_verdict(exc))
        write_json(out / "meta.json", _meta("convergence", cfg, stop_reason="degenerate"))
        log.error("convergence: %s", exc)
        return EXIT_FAIL
    residuals = [r.max_abs_residual for _, r in results]
    orders = pipeline.observed_orders(residuals)
    rows = []
    for k, (dtau, r) in enumerate(results):
        rows.append((k, dtau, r.max_abs_residual, r.max_rel_residual, "" if k == 0 else orders[k - 1]))
    write_csv(out / "convergence.csv", ("level", "dtau", "max_abs_residual", "max_rel_residual", "observed_order"), rows)
    passed = all(r.passed for _, r in results)
    write_json(
        out / "verdict.json",
        {
            "pass": passed,
            "levels": [{"dtau": d, **r.verdict()} for d, r in results],
            "observed_orders": orders,
        },
    )
    if cfg.emit_plots:
        plotting.convergence_plot([d for d, _ in results], residuals, out / "plots" / "convergence.svg")
    write_json(
        out / "meta.json",
        _meta("convergence", cfg, stop_reason=results[-1][1].trajectory.stop_reason, rescale=start.describe(), levels=levels),
    )
    log.info("convergence: residuals %s orders %s", residuals, orders)
    return EXIT_PASS if passed else EXIT_FAIL


ZELENJAK_CHECKS = tuple(zelenjak.DEFAULT_TOLERANCES)


def zelenjak_settings(flat):
    """``(samples, seed, tolerances)`` from the ``zelenjak.*`` and ``seed`` keys.

    ``zelenjak.tolerance`` sets all four tolerances; per-check keys such as
    ``zelenjak.hessian`` take precedence.  Other keys are ignored.
    """
    allowed = config.SECTION_KEYS["zelenjak"]
    for key in flat:
        if key.startswith("zelenjak.") and key.split(".", 1)[1] not in allowed:
            raise ConfigError(f"unknown config key {key!r}")
    samples = flat.get("zelenjak.samples", config.SECTION_DEFAULTS["zelenjak"]["samples"])
    seed = flat.get("seed", 0)
    for name, value in (("zelenjak.samples", samples), ("seed", seed)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
    if samples < 1:
        raise ConfigError("zelenjak.samples must be >= 1")
    tol = {}
    for check in ZELENJAK_CHECKS:
        value = flat.get(f"zelenjak.{check}", flat.get("zelenjak.tolerance"))
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"zelenjak.{check} tolerance must be a nonnegative number, got {value!r}")
        tol[check] = float(value)
    return samples, seed, tol


def cmd_check_zelenjak(samples, seed, tolerances=None, out=None):
    report = zelenjak.run_checks(samples, seed, tolerances)
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    print(text)
    if out is not None:
        write_json(out / "verdict.json", report)
        write_json(out / "meta.json", {"command": "check-zelenjak", "seed": seed, "samples": samples, "versions": versions()})
    return EXIT_PASS if report["ok"] else EXIT_FAIL


def cmd_list_scenarios():
    for name in scenario_names():
        defaults, required = scenario_params(name)
        parts = [f"{k}={v}" for k, v in defaults.items()] + [f"{k} (required)" for k in required]
        print(f"{name}: {', '.join(parts)}")
    return EXIT_PASS


# ---- dispatch --------------------------------------------------------------

_CONFIG_COMMANDS = {
    "simulate": lambda cfg, out, args: cmd_simulate(cfg, out),
    "verify-identity": lambda cfg, out, args: cmd_verify_identity(cfg, out),
    "convergence": lambda cfg, out, args: cmd_convergence(cfg, out, args.levels),
}


def _guarded(fn, *a):
    try:
        return fn(*a)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (CSFError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


def _build_config(args, config_path):
    flat = _flat_from_args(args, config_path)
    if args.command == "convergence" and args.levels is not None:
        flat["convergence.levels"] = args.levels
    return config.build(flat, require_stop=args.command == "simulate")


def _one_config(args, config_path, multi):
    cfg = _build_config(args, config_path)
    out = _run_dir(args, cfg, config_path, multi)
    log.info("%s -> %s", args.command, out)
    return _CONFIG_COMMANDS[args.command](cfg, out, args)


def _run_config_job(args, config_path, multi):
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return _guarded(_one_config, args, config_path, multi)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", default=[], metavar="PATH", help="config file (repeatable)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--out", metavar="DIR", help="run directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel runs over several --config files")
    common.add_argument("--plots", action="store_true", help="write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="csf3d", description="Curve shortening flow of closed space curves.")
    parser.add_argument("--version", action="version", version=f"csf3d {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the flow and write trajectory files")
    sub.add_parser("verify-identity", parents=[common], help="check the rescaled energy balance")
    p = sub.add_parser("check-zelenjak", parents=[common], help="pointwise weight identities")
    p.add_argument("--samples", type=int)
    p = sub.add_parser("convergence", parents=[common], help="observed order of the energy-balance residual")
    p.add_argument("--levels", type=int)
    sub.add_parser("list-scenarios", help="list scenarios and their parameters")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    verbose = getattr(args, "verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-scenarios":
        return cmd_list_scenarios()

    if args.command == "check-zelenjak":

        def job():
            flat = {}
            for path in args.config:
                flat.update(config.load_file(path))
            flat.update(config.parse_overrides(args.set))
            if args.seed is not None:
                flat["seed"] = args.seed
            if args.samples is not None:
                flat["zelenjak.samples"] = args.samples
            samples, seed, tol = zelenjak_settings(flat)
            return cmd_check_zelenjak(samples, seed, tol, Path(args.out) if args.out else None)

        return _guarded(job)

    if args.jobs < 1:
        log.error("configuration error: --jobs must be >= 1")
        return EXIT_CONFIG
    paths = args.config or [None]
    multi = len(paths) > 1
    if args.jobs == 1 or not multi:
        codes = [_guarded(_one_config, args, p, multi) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_config_job, [args] * len(paths), paths, [multi] * len(paths)))
    return max(codes)


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
