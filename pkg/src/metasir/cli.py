"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure
(or a failed ``validate`` suite), 3 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import __version__, analytics, mc
from .config import (
    COMMANDS,
    FORMATS,
    INFO_MODES,
    METHODS,
    SUITES,
    ConfigError,
    RunConfig,
    build_run_config,
    load_config,
    merge,
)
from .errors import MetaSirError
from .model import ReliabilityTarget

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config; flags override its values")
    common.add_argument("--lambda", dest="lam", type=float, help="transmitter density")
    common.add_argument("--alpha", type=float, help="path-loss exponent (> 2)")
    common.add_argument("--R", dest="R", type=float, help="link distance")
    th = common.add_mutually_exclusive_group()
    th.add_argument("--theta", type=float, help="SIR threshold (linear)")
    th.add_argument("--theta-db", type=float, help="SIR threshold in dB")
    tg = common.add_mutually_exclusive_group()
    tg.add_argument("--nu", type=float, help="target reliability")
    tg.add_argument("--eps", type=float, help="target outage 1 - nu")
    common.add_argument("--k", type=_int_list, help="nearest-interferer count(s), e.g. 1,3")
    common.add_argument("--samples", type=int, help="Monte Carlo realizations")
    common.add_argument("--seed", type=int, help="master seed (64-bit unsigned)")
    common.add_argument("--workers", type=int, help=f"worker processes (fallback: ${mc.WORKERS_ENV})")
    common.add_argument("--tol", type=float, help="window truncation tolerance")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--info", choices=INFO_MODES, help="threshold estimator for tdist --method mc")
    common.add_argument("--moments", type=int, help="binomial-mixture order")
    common.add_argument("--densities", type=_float_list, help="fig2 densities, e.g. 0.25,1")
    common.add_argument("--suite", choices=SUITES, help="validate suite")
    common.add_argument("--window", type=_float_list, help="realization rectangle W,H")
    common.add_argument("--x-grid", help="start:stop:count:scale")
    common.add_argument("--t-grid", help="start:stop:count:scale")
    common.add_argument("--theta-grid", help="start:stop:count:scale")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=FORMATS)

    parser = _Parser(prog="metasir", description="SIR meta distribution and rate-control toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "md": "meta distribution of the conditional success probability",
        "tdist": "ccdf of the rate-control SIR threshold",
        "throughput": "throughput densities against the SIR threshold",
        "interference": "ccdf of fading-free interference",
        "realization": "per-link reliability and threshold in one network draw",
        "fig2": "threshold ccdf curves: exact, approximation and k-nearest estimates",
        "fig3": "throughput curves, rate control vs fixed threshold",
        "validate": "analytic-vs-simulation checks",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _flag_settings(args) -> dict:
    theta = args.theta
    if args.theta_db is not None:
        theta = 10.0 ** (args.theta_db / 10.0)
    target = None
    if args.nu is not None:
        target = {"nu": args.nu}
    elif args.eps is not None:
        target = {"epsilon": args.eps}
    grids = {"x": args.x_grid, "t": args.t_grid, "theta": args.theta_grid}
    return {
        "network": {"lambda": args.lam, "alpha": args.alpha, "R": args.R},
        "target": target,
        "theta": theta,
        "method": args.method,
        "info": args.info,
        "k": args.k,
        "moments": args.moments,
        "densities": args.densities,
        "suite": args.suite,
        "window": args.window,
        "grids": {k: v for k, v in grids.items() if v is not None},
        "mc": {
            "samples": args.samples, "seed": args.seed,
            "truncation_tol": args.tol, "workers": args.workers,
        },
        "output": {"path": args.out, "format": args.format},
    }


def resolve(args) -> RunConfig:
    """Merge flags over the config file over defaults."""
    data = {}
    if args.config:
        try:
            data = load_config(args.config)
        except FileNotFoundError:
            raise ConfigError("config", f"no such file {args.config}") from None
    flags = _flag_settings(args)
    if flags["target"] is not None:
        data.pop("target", None)
    network = {k: v for k, v in flags["network"].items() if v is not None}
    if network or "network" in data:
        flags["network"] = network
    else:
        flags.pop("network")
    return build_run_config(args.command, merge(data, flags))


def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def render_table(rows, columns, fmt: str, manifest: dict) -> str:
    if fmt == "json":
        clean = [[int(v) if isinstance(v, (int, np.integer)) else float(v) for v in row] for row in rows]
        doc = {"manifest": manifest, "columns": list(columns), "rows": clean}
        return json.dumps(doc, sort_keys=True) + "\n"
    buf = io.StringIO(newline="\n")
    buf.write("# manifest " + json.dumps(manifest, sort_keys=True) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        if len(row) != len(columns):
            raise ValueError("rows must match the column count")
        buf.write(",".join(_format_value(v) for v in row) + "\n")
    return buf.getvalue()


def emit_table(rows, columns, fmt: str, path: str | None, manifest: dict) -> None:
    """Write CSV (17 significant digits, LF endings, manifest comment line) or JSON."""
    text = render_table(rows, columns, fmt, manifest)
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _curve_rows(curve, name: str):
    columns = [curve_abscissa_name(curve), name]
    if curve.std_errors is not None:
        columns.append(f"{name}_se")
        return columns, [list(r) for r in zip(curve.abscissa, curve.values, curve.std_errors)]
    return columns, [list(r) for r in zip(curve.abscissa, curve.values)]


def curve_abscissa_name(curve) -> str:
    return {"md": "x", "threshold": "t", "interference": "x"}[curve.quantity]


def run_md(cfg: RunConfig):
    theta = cfg.require_theta()
    x = cfg.grid("x")
    method = cfg.method or "gilpelaez"
    if method == "gilpelaez":
        curve = analytics.md_gil_pelaez_curve(cfg.network, theta, x)
    elif method == "binomial":
        curve = analytics.md_binomial_mixture_curve(cfg.network, theta, x, cfg.moments)
    elif method == "mc":
        curve = mc.estimate_md(cfg.network, theta, x, cfg.mc)
    else:
        raise ConfigError("method", f"md supports gilpelaez, binomial, mc; got {method}")
    return _curve_rows(curve, "md")


def run_tdist(cfg: RunConfig):
    target = cfg.require_target()
    t = cfg.grid("t")
    method = cfg.method or "gilpelaez"
    if method == "gilpelaez":
        return _curve_rows(analytics.threshold_ccdf_exact(cfg.network, target, t), "ccdf")
    if method == "mc":
        k = None
        if cfg.info == "k_nearest":
            if len(cfg.k) != 1:
                raise ConfigError("k", "k_nearest needs exactly one --k")
            k = cfg.k[0]
        curve = mc.estimate_threshold_ccdf(cfg.network, target, t, cfg.mc, info=cfg.info, k=k)
        return _curve_rows(curve, "ccdf")
    if method == "ultrarel":
        values = analytics.threshold_ccdf_ultrareliable(cfg.network, target, t)
    elif method == "partial":
        values = analytics.threshold_ccdf_partial_info(cfg.network, target, t)
    else:
        raise ConfigError("method", f"tdist does not support {method}")
    return ["t", "ccdf"], [[a, b] for a, b in zip(t, np.atleast_1d(values))]


def run_throughput(cfg: RunConfig):
    target = cfg.require_target()
    method = cfg.method or "gilpelaez"
    if method not in ("gilpelaez", "mc"):
        raise ConfigError("method", "throughput supports gilpelaez or mc")
    table = mc.figure3_data(cfg.network, target, cfg.grid("theta"), cfg.mc if method == "mc" else None)
    return table.columns, table.rows


def run_interference(cfg: RunConfig):
    x = cfg.grid("x")
    curve = mc.estimate_interference_ccdf(cfg.network, x, cfg.mc)
    columns, rows = _curve_rows(curve, "ccdf")
    if cfg.network.path_loss_exponent == 4:
        levy = analytics.levy_interference_ccdf(cfg.network.density, x)
        columns.append("levy")
        rows = [row + [float(v)] for row, v in zip(rows, np.atleast_1d(levy))]
    return columns, rows


def run_realization(cfg: RunConfig):
    records = mc.realization_report(
        cfg.network, cfg.require_theta(), cfg.require_target(), cfg.window, cfg.mc
    )
    columns = ["tx_x", "tx_y", "rx_x", "rx_y", "reliability", "threshold"]
    rows = [[*r.tx, *r.rx, r.reliability, r.threshold] for r in records]
    return columns, rows


def run_fig2(cfg: RunConfig):
    if cfg.target is None:
        raise ConfigError("target", "fig2 needs an explicit --nu or --eps")
    table = mc.figure2_data(cfg.network, cfg.target, cfg.densities, cfg.k, cfg.grid("t"), cfg.mc)
    return table.columns, table.rows


def run_fig3(cfg: RunConfig):
    table = mc.figure3_data(cfg.network, cfg.require_target(), cfg.grid("theta"), cfg.mc)
    return table.columns, table.rows


class ValidationFailed(Exception):
    def __init__(self, columns, rows, message):
        super().__init__(message)
        self.columns, self.rows = columns, rows


def _validate_duality(cfg: RunConfig):
    thetas = [cfg.theta] if cfg.theta is not None else [0.5, 1.0, 4.0]
    targets = [cfg.target] if cfg.target is not None else [
        ReliabilityTarget.from_nu(v) for v in (0.5, 0.9, 0.99)
    ]
    reports = mc.verify_duality_grid(cfg.network, thetas, targets, cfg.mc)
    rows = [[rep.theta, rep.nu, rep.n, rep.violations, rep.guard_excluded] for rep in reports]
    columns = ["theta", "nu", "n", "violations", "guard_excluded"]
    return columns, rows, all(r[3] == 0 for r in rows)


def _validate_md(cfg: RunConfig):
    theta, x = cfg.require_theta(), cfg.grid("x")
    exact = analytics.md_gil_pelaez_curve(cfg.network, theta, x).values
    sim = mc.estimate_md(cfg.network, theta, x, cfg.mc)
    diff = np.abs(exact - sim.values)
    # a proportion cannot resolve below one sample in n
    ok = bool(np.all(diff <= 3 * np.maximum(sim.std_errors, 1.0 / sim.n) + 1e-6))
    rows = [list(r) for r in zip(x, exact, sim.values, sim.std_errors, diff)]
    return ["x", "gilpelaez", "mc", "mc_se", "abs_diff"], rows, ok


def _validate_interference(cfg: RunConfig):
    analytics._require_alpha4(cfg.network, "interference validation")
    x = cfg.grid("x")
    sim = mc.estimate_interference_ccdf(cfg.network, x, cfg.mc)
    levy = np.atleast_1d(analytics.levy_interference_ccdf(cfg.network.density, x))
    diff = np.abs(levy - sim.values)
    rows = [list(r) for r in zip(x, levy, sim.values, sim.std_errors, diff)]
    return ["x", "levy", "mc", "mc_se", "abs_diff"], rows, bool(diff.max() <= 0.02)


def _validate_throughput(cfg: RunConfig):
    target = cfg.require_target()
    thetas = cfg.grid("theta")
    sim = mc.estimate_throughput(cfg.network, target, thetas, cfg.mc)
    rows, ok = [], True
    for j, th in enumerate(thetas):
        det = analytics.throughput_deterministic(cfg.network, float(th), target)
        s, r = sim.deterministic_S[j], sim.deterministic_S_rel[j]
        # one realization in n is the finest resolvable step
        floor = cfg.network.density * np.log1p(th) / cfg.mc.n_realizations
        ok &= abs(det.S - s.value) <= 3 * max(s.std_error, floor) + 1e-6
        ok &= abs(det.S_rel - r.value) <= 3 * max(r.std_error, floor) + 1e-6
        rows.append([th, det.S, s.value, s.std_error, det.S_rel, r.value, r.std_error])
    columns = ["theta", "S_det", "S_det_mc", "S_det_se", "Srel_det", "Srel_det_mc", "Srel_det_se"]
    return columns, rows, bool(ok)


_SUITES = {
    "duality": _validate_duality,
    "md": _validate_md,
    "interference": _validate_interference,
    "throughput": _validate_throughput,
}


def run_validate(cfg: RunConfig):
    if cfg.suite is None:
        raise ConfigError("suite", f"--suite is required ({', '.join(SUITES)})")
    columns, rows, ok = _SUITES[cfg.suite](cfg)
    print(f"validate {cfg.suite}: {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    if not ok:
        raise ValidationFailed(columns, rows, f"validation suite {cfg.suite} failed")
    return columns, rows


_RUNNERS = {
    "md": run_md,
    "tdist": run_tdist,
    "throughput": run_throughput,
    "interference": run_interference,
    "realization": run_realization,
    "fig2": run_fig2,
    "fig3": run_fig3,
    "validate": run_validate,
}


def dispatch(cfg: RunConfig) -> int:
    manifest = cfg.manifest(__version__)
    print("manifest " + json.dumps(manifest, sort_keys=True), file=sys.stderr)
    status = EXIT_OK
    try:
        columns, rows = _RUNNERS[cfg.command](cfg)
    except ValidationFailed as exc:
        columns, rows, status = exc.columns, exc.rows, EXIT_NUMERIC
    try:
        emit_table(rows, columns, cfg.output.format, cfg.output.path, manifest)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        return dispatch(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MetaSirError, RuntimeError, ArithmeticError) as exc:
        if isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
