"""Command-line interface: ``fluidq <analyze|simulate|compare|scale-fn>``.

Exit codes: 0 success, 1 comparison gate failure, 2 configuration or model
validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .compare import (
    _g17,
    analytic_quantities,
    comparison_rows,
    gate_passes,
    write_rows_csv,
)
from .config import PRESET_NAMES, ConfigError, ExperimentConfig, load_config, load_preset
from .errors import AssumptionError, DomainError, FluidQError
from .levy_model import require_valid, validate_assumptions

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
SUMMARY_SCHEMA = "fluidq.summary/1"
ERROR_SCHEMA = "fluidq.error/1"

log = logging.getLogger("fluidq")


class _ConfigStageError(Exception):
    """Wraps any error raised while loading or validating the configuration."""


def _json_default(x):
    if hasattr(x, "to_dict"):
        return x.to_dict()
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def _clean(x):
    """Replace non-finite floats by strings so the output stays strict JSON."""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def _dump(obj) -> str:
    text = json.dumps(obj, default=_json_default, sort_keys=True)
    return json.dumps(_clean(json.loads(text)), indent=2, sort_keys=True,
                      allow_nan=False) + "\n"


def _error_report(exc: Exception, stage: str) -> dict:
    rep = {"schema": ERROR_SCHEMA, "stage": stage, "error": type(exc).__name__,
           "message": str(exc)}
    if isinstance(exc, AssumptionError):
        rep["failed_checks"] = list(exc.failed)
    return rep


def _resolve_config(args) -> ExperimentConfig:
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.preset:
            cfg = load_preset(args.preset)
        else:
            raise ConfigError("give --config FILE or --preset NAME")
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        for key in ("horizon", "n_reps", "dt"):
            val = getattr(args, key, None)
            if val is not None:
                cfg = replace(cfg, **{key: val})
        require_valid(cfg.model)
        return cfg
    except (FluidQError, ValueError, TypeError) as exc:
        raise _ConfigStageError(exc) from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _envelope(cfg: ExperimentConfig, command: str) -> dict:
    return {
        "schema": SUMMARY_SCHEMA,
        "command": command,
        "version": __version__,
        "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.to_dict(),
    }


# --- subcommands ------------------------------------------------------------------------

def cmd_analyze(cfg: ExperimentConfig, out: Path) -> int:
    quantities = analytic_quantities(cfg.model, cfg)
    report = _envelope(cfg, "analyze")
    report["validation"] = validate_assumptions(cfg.model).to_dict()
    report["quantities"] = quantities
    (out / cfg.outputs.summary).write_text(_dump(report))
    with open(out / "analysis.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("quantity", "value"))
        for k, v in quantities.items():
            w.writerow((k, _g17(v)))
    for k, v in quantities.items():
        print(f"{k},{_g17(v)}")
    return EXIT_OK


def _simulation_estimates(cfg: ExperimentConfig, result) -> dict:
    from .errors import FluidQError as _E
    from .simulator import estimators as est

    out = {}

    def put(name, fn):
        try:
            out[name] = fn()
        except _E as exc:
            out[name] = {"error": type(exc).__name__, "message": str(exc)}

    put("local_time_rate", lambda: est.local_time_rate(result))
    for a in cfg.a_grid:
        put(f"P(Q0>{a:g})", lambda a=a: est.tail_probability(result, a))
        put(f"P_L(Q0>{a:g})", lambda a=a: est.palm_tail(result, a))
    put("P(X0=0)", lambda: est.atom_of_X(result))
    put("period_rate", lambda: est.period_rate(result))
    for kind in ("idle", "busy"):
        put(f"typical_{kind}_mean", lambda k=kind: est.typical_mean(result, k))
        put(f"observed_{kind}_mean", lambda k=kind: est.observed_mean(result, k))
        for a in cfg.alpha_grid:
            put(f"typical_{kind}_lt({a:g})", lambda k=kind, a=a: est.typical_lt(result, k, a))
    for a in cfg.alpha_grid:
        put(f"E[exp(-{a:g} D)]", lambda a=a: est.D_transform(result, a))
        put(f"observed_idle_lt({a:g},0)", lambda a=a: est.observed_lt(result, "idle", a, 0.0))
    for a, b in cfg.dg_pairs:
        put(f"E[exp(-{a:g} D + {b:g} G)]", lambda a=a, b=b: est.DG_transform(result, a, b))
    put("independence", lambda: est.independence_checks(result))
    return out


def _run_simulation(cfg: ExperimentConfig):
    from .simulator import simulate

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = simulate(cfg.model, cfg.simulation_config())
    notes = [str(w.message) for w in caught]
    for n in notes:
        log.warning(n)
    return result, notes


def _write_path(cfg: ExperimentConfig, out: Path) -> None:
    from .simulator.paths import simulate_path, write_path_csv

    if cfg.outputs.path:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = simulate_path(cfg.model, cfg.dt, cfg.outputs.path_horizon, cfg.seed)
        write_path_csv(p, out / cfg.outputs.path)


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    result, notes = _run_simulation(cfg)
    report = _envelope(cfg, "simulate")
    report.update({
        "regime": result.regime.name,
        "exact_local_time": result.regime.exact,
        "burn_in": result.burn_in,
        "mark_scale": result.mark_scale,
        "warnings": notes,
        "estimates": _simulation_estimates(cfg, result),
    })
    (out / cfg.outputs.summary).write_text(_dump(report))
    _write_path(cfg, out)
    lt = report["estimates"]["local_time_rate"]
    print(f"local_time_rate,{_g17(lt.value)},{_g17(lt.std_error)}")
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, out: Path) -> int:
    result, notes = _run_simulation(cfg)
    rows = comparison_rows(cfg, result)
    write_rows_csv(rows, out / cfg.outputs.comparison)
    ok = gate_passes(rows)
    report = _envelope(cfg, "compare")
    report.update({
        "regime": result.regime.name,
        "exact_local_time": result.regime.exact,
        "burn_in": result.burn_in,
        "mark_scale": result.mark_scale,
        "warnings": notes,
        "gate_passed": ok,
        "rows": [dict(r.__dict__) for r in rows],
    })
    (out / cfg.outputs.summary).write_text(_dump(report))
    _write_path(cfg, out)
    for r in rows:
        flag = "PASS" if r.passed else ("FAIL" if r.hard else "SOFT-FAIL")
        print(f"{flag:9s} {r.quantity:34s} analytic={r.analytic_value:.6g} "
              f"mc={r.mc_estimate:.6g} se={r.std_error:.3g} z={r.z_score:+.2f}")
    if not ok:
        failing = [r.quantity for r in rows if r.hard and not r.passed]
        print("gate failed: " + ", ".join(failing), file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_scale_fn(cfg: ExperimentConfig, out: Path, q: float, xs, method: str) -> int:
    from .scale_functions import ScaleFunctionSpec, W_q, Z_q, exit_down_lt

    spec = ScaleFunctionSpec(cfg.model, q, method)
    rows = [(x, W_q(spec, x), Z_q(spec, x), exit_down_lt(spec, x)) for x in xs]
    report = _envelope(cfg, "scale-fn")
    report.update({"q": q, "method": spec.method.value,
                   "values": [{"x": x, "W": w, "Z": z, "exit_down_lt": e}
                              for x, w, z, e in rows]})
    (out / cfg.outputs.summary).write_text(_dump(report))
    print("x,W,Z,exit_down_lt")
    for r in rows:
        print(",".join(_g17(v) for v in r))
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluidq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fluidq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment JSON file")
        sp.add_argument("--preset", choices=PRESET_NAMES, help="shipped preset config")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", default=".", help="output directory (default: .)")
        sp.add_argument("-v", "--verbose", action="store_true")

    for name in ("analyze", "simulate", "compare"):
        sp = sub.add_parser(name)
        common(sp)
        if name != "analyze":
            sp.add_argument("--horizon", type=float, help="override the config horizon")
            sp.add_argument("--n-reps", dest="n_reps", type=int, help="override n_reps")
    sp = sub.add_parser("scale-fn", help="tabulate W^(q), Z^(q) and the exit transform")
    common(sp)
    sp.add_argument("--q", type=float, default=0.0)
    sp.add_argument("--x", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    sp.add_argument("--method", choices=("talbot", "euler", "both"), default="both")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
        out = _out_dir(args)
    except _ConfigStageError as exc:
        print(_dump(_error_report(exc.__cause__, "config")), file=sys.stderr, end="")
        return EXIT_CONFIG
    except OSError as exc:
        print(_dump(_error_report(exc, "config")), file=sys.stderr, end="")
        return EXIT_CONFIG
    try:
        if args.command == "analyze":
            return cmd_analyze(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "compare":
            return cmd_compare(cfg, out)
        if any(x < 0 for x in args.x) or args.q < 0:
            raise DomainError("scale-fn needs q >= 0 and x >= 0")
        return cmd_scale_fn(cfg, out, args.q, args.x, args.method)
    except DomainError as exc:
        print(_dump(_error_report(exc, "validation")), file=sys.stderr, end="")
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the exit-code contract covers everything
        log.debug("runtime failure", exc_info=True)
        print(_dump(_error_report(exc, "runtime")), file=sys.stderr, end="")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
