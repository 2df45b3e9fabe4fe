"""Command-line entry point: ``hcqnc <command> [options]``."""

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .metrics import amplification_band, sensitivity, signal_improvement, signal_response
from .optimize import n_min, optimize
from .oracle import SingularSystem, psd_numeric
from .params import CONSTANTS, ConfigError, config_to_dict, parse_config
from .spectra import SingularQuadrature, breakdown, sql
from .sweep import FIGURES, SweepError, SweepSpec, figure_preset, metadata, run, write_table

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalError(RuntimeError):
    pass


def _load(args):
    """Resolve --config into a Config; accepts a plain config or a JSON output document."""
    if args.config is None:
        return parse_config({}, args.allow_large_n)
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    if isinstance(data, dict) and "artifact_version" in data and "config" in data:
        data = data["config"]
    return parse_config(data, args.allow_large_n)


def _omega_grid(args, params):
    if args.omega_offset is not None:
        return np.array([params.omega_m + args.omega_offset * params.gamma_m])
    try:
        lo, hi, n = args.omega.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError("--omega expects min:max:points") from None
    if n < 1 or (n > 1 and not lo < hi):
        raise ConfigError("--omega needs min < max and points >= 1")
    return params.omega_m * (np.linspace(lo, hi, n) if n > 1 else np.array([lo]))


def _theta_arg(text):
    if text in ("opt", "zero"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("theta must be 'opt', 'zero' or radians") from None


def _resolve_theta(args, omega, cfg, mode):
    if args.theta == "opt":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = optimize(omega, cfg.params, cfg.squeezing, mode, not args.exact_chi_a)
        valid = np.broadcast_to(res.valid, omega.shape)
        if not np.all(valid) and not args.allow_fallback:
            raise NumericalError("L' <= 0 at some frequencies: no optimal angle (use --allow-fallback)")
        return np.broadcast_to(res.theta_opt, omega.shape), valid
    th = 0.0 if args.theta == "zero" else args.theta
    return np.full(omega.shape, th), np.ones(omega.shape, dtype=bool)


def _rows_from_cols(cols):
    n = len(next(iter(cols.values())))
    rows = []
    for i in range(n):
        row = {}
        for k, v in cols.items():
            x = v[i]
            row[k] = bool(x) if isinstance(x, (bool, np.bool_)) else (x if isinstance(x, str) else float(x))
        rows.append(row)
    return rows


def cmd_spectrum(args, cfg):
    p, mode = cfg.params, args.mode
    w = _omega_grid(args, p)
    theta, valid = _resolve_theta(args, w, cfg, mode)
    br = breakdown(w, p, cfg.squeezing, theta, mode, not args.exact_chi_a, args.thermal)
    rows = br.as_rows()
    for r, s, v in zip(rows, sql(w, p), valid):
        r["s_sql"] = float(s)
        r["fallback"] = not bool(v)
    return rows


def cmd_advantage(args, cfg):
    p = cfg.params
    w = _omega_grid(args, p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = optimize(w, p, cfg.squeezing, args.mode, not args.exact_chi_a, args.thermal)
    valid = np.broadcast_to(res.valid, w.shape)
    if not np.all(valid) and not args.allow_fallback:
        raise NumericalError("L' <= 0 at some frequencies: no optimal angle (use --allow-fallback)")
    b = lambda a: np.broadcast_to(a, w.shape)  # noqa: E731
    return _rows_from_cols({"omega": w, "theta_opt": b(res.theta_opt), "s_min": b(res.s_min),
                            "s_theta0": b(res.s_theta0), "advantage_db": b(res.advantage_db), "valid": valid})


def cmd_sensitivity(args, cfg):
    p = cfg.params
    w = _omega_grid(args, p)
    theta, valid = _resolve_theta(args, w, cfg, args.mode)
    approx = not args.exact_chi_a
    s = sensitivity(w, p, cfg.squeezing, theta, args.mode, approx)
    s0 = sensitivity(w, p, cfg.squeezing, 0.0, args.mode, approx)
    return _rows_from_cols({"omega": w, "theta": theta, "sensitivity": s, "sensitivity_theta0": s0,
                            "improvement_percent": 100 * (1 - s / s0), "valid": valid})


def cmd_signal(args, cfg):
    p = cfg.params
    w = _omega_grid(args, p)
    theta, valid = _resolve_theta(args, w, cfg, args.mode)
    approx = not args.exact_chi_a
    return _rows_from_cols({"omega": w, "theta": theta,
                            "R_c": signal_response(w, p, theta, args.mode, approx),
                            "R_c_theta0": signal_response(w, p, 0.0, args.mode, approx),
                            "improvement": signal_improvement(theta, p.y), "valid": valid})


def cmd_bands(args, cfg):
    bands = amplification_band(cfg.params, cfg.squeezing, args.theta, args.criterion, args.mode,
                               not args.exact_chi_a, span_gamma=args.span, step_gamma=args.step)
    wm = cfg.params.omega_m
    return [{"criterion": b.criterion, "center_over_omega_m": b.center / wm, "lower_over_omega_m": b.lower / wm,
             "upper_over_omega_m": b.upper / wm, "bandwidth_gamma_m": b.bandwidth_gamma_m} for b in bands]


def cmd_nmin(args, cfg):
    p = cfg.params
    off = 4.0 if args.omega_offset is None else args.omega_offset
    w = p.omega_m + off * p.gamma_m
    try:
        res = n_min(w, p, args.n_cap, mode=args.mode, thermal=args.thermal)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return [{"omega_offset": off, "n_min": res.n_min, "has_threshold": res.has_threshold}]


def cmd_oracle_check(args, cfg):
    p, sq = cfg.params, cfg.squeezing
    w = _omega_grid(args, p)
    theta, _ = _resolve_theta(args, w, cfg, args.mode)
    rows = []
    tiers = {"approx": 1e-9, "exact": args.tolerance}
    worst = {}
    for tier, tol in tiers.items():
        approx = tier == "approx"
        # the oracle solves the physical system, so compare with the general closed form
        ana = breakdown(w, p, sq, theta, "general", True, args.thermal).total
        ref = np.array([psd_numeric(wi, p, sq, ti, approx) for wi, ti in zip(w, theta)])
        err = np.abs(ana - ref) / np.abs(ref)
        worst[tier] = float(np.max(err))
        for wi, ti, e in zip(w, theta, err):
            rows.append({"tier": tier, "omega": float(wi), "theta": float(ti), "rel_error": float(e)})
    report = {"tiers": {t: {"tolerance": tol, "max_error": worst[t], "pass": worst[t] <= tol}
                        for t, tol in tiers.items()}, "points": rows}
    report["pass"] = all(v["pass"] for v in report["tiers"].values())
    return report


def cmd_sweep(args, cfg):
    try:
        with open(args.spec) as fh:
            spec = SweepSpec.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        raise ConfigError(f"sweep spec: {exc}") from None
    return [spec], run(spec, cfg.params)


def cmd_figure(args, cfg):
    specs = figure_preset(args.id)
    rows = []
    for s in specs:
        rows.extend(run(s, cfg.params))
    return specs, rows


def _open(out):
    return sys.stdout if out == "-" else open(out, "w", newline="")


def _emit(args, cfg, rows):
    fh = _open(args.out)
    try:
        if args.format == "json":
            doc = {"artifact_version": __version__, "command": args.command,
                   "config": config_to_dict(cfg.raw, cfg.squeezing, cfg.phase_spec), "rows": rows}
            fh.write(json.dumps(doc) + "\n")
        else:
            write_table(rows, fh, "csv")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _emit_table(args, cfg, specs, rows):
    fh = _open(args.out)
    try:
        write_table(rows, fh, args.format)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.out != "-":
        meta = metadata(specs, cfg.params, config_to_dict(cfg.raw, cfg.squeezing, cfg.phase_spec))
        with open(args.out + ".meta.json", "w") as mf:
            json.dump(meta, mf, indent=1)


def _common(sp):
    sp.add_argument("--config", help="JSON parameter file (omit for the default parameter set)")
    sp.add_argument("--out", default="-", help="output path, - for stdout")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--mode", choices=("general", "perfect"), default="general")
    sp.add_argument("--exact-chi-a", action="store_true", help="keep the full cavity susceptibility")
    sp.add_argument("--thermal", choices=("exact", "high_T"), default="exact")
    sp.add_argument("--allow-fallback", action="store_true", help="use theta=0 where no optimum exists")
    sp.add_argument("--allow-large-n", action="store_true", help="permit N above 25")


def _freq(sp, default="0.9:1.1:201"):
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--omega", default=default, help="min:max:points in units of omega_m")
    g.add_argument("--omega-offset", type=float, help="single frequency omega_m + k gamma_m")


def build_parser():
    ap = argparse.ArgumentParser(prog="hcqnc", description="Hybrid CQNC force-sensor noise budget")
    ap.add_argument("--version", action="store_true", help="print version and physical constants")
    sub = ap.add_subparsers(dest="command")

    for name in ("spectrum", "sensitivity", "signal"):
        sp = sub.add_parser(name)
        _common(sp)
        _freq(sp)
        sp.add_argument("--theta", type=_theta_arg, default="zero", help="opt, zero or radians")
    sp = sub.add_parser("advantage")
    _common(sp)
    _freq(sp)
    sp = sub.add_parser("bands")
    _common(sp)
    sp.add_argument("--theta", type=_theta_arg, default="zero")
    sp.add_argument("--criterion", choices=("Rc>1", "R<1"), default="Rc>1")
    sp.add_argument("--span", type=float, default=5e4, help="half-width of the scan in gamma_m")
    sp.add_argument("--step", type=float, default=0.1, help="scan step in gamma_m")
    sp = sub.add_parser("nmin")
    _common(sp)
    sp.add_argument("--omega-offset", type=float, default=None)
    sp.add_argument("--n-cap", type=float, default=25.0)
    sp = sub.add_parser("oracle-check")
    _common(sp)
    _freq(sp, "0.9:1.1:21")
    sp.add_argument("--theta", type=_theta_arg, default="zero")
    sp.add_argument("--tolerance", type=float, default=0.05, help="exact-susceptibility tier tolerance")
    sp = sub.add_parser("sweep")
    _common(sp)
    sp.add_argument("--spec", required=True, help="JSON sweep specification")
    sp = sub.add_parser("figure")
    _common(sp)
    sp.add_argument("id", choices=FIGURES)
    return ap


COMMANDS = {"spectrum": cmd_spectrum, "advantage": cmd_advantage, "sensitivity": cmd_sensitivity,
            "signal": cmd_signal, "bands": cmd_bands, "nmin": cmd_nmin}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.version:
        print(f"hcqnc {__version__}")
        for k, v in CONSTANTS.items():
            print(f"{k} = {v!r}")
        return EXIT_OK
    if not args.command:
        ap.print_help(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args)
        if args.command in ("sweep", "figure"):
            specs, rows = (cmd_sweep if args.command == "sweep" else cmd_figure)(args, cfg)
            _emit_table(args, cfg, specs, rows)
            return EXIT_OK
        if args.command == "oracle-check":
            report = cmd_oracle_check(args, cfg)
            fh = _open(args.out)
            try:
                fh.write(json.dumps(report) + "\n")
            finally:
                if fh is not sys.stdout:
                    fh.close()
            return EXIT_OK if report["pass"] else EXIT_NUMERIC
        _emit(args, cfg, COMMANDS[args.command](args, cfg))
        return EXIT_OK
    except (ConfigError, SweepError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SingularQuadrature, SingularSystem) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
