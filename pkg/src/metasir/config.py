"""Run configuration: JSON schema, grid strings and precedence.

Values are resolved in the order command-line flag, then config file, then
built-in default.  The config file is a JSON object with these keys, all
optional unless a command needs them::

    {
      "command": "md",                       # must match the invoked command
      "version": "0.1.0",                    # informational
      "network": {"lambda": 1, "alpha": 4, "R": 0.5},
      "target": {"nu": 0.9} | {"epsilon": 0.01},
      "theta": 1.0,
      "method": "gilpelaez",
      "info": "full",
      "k": [1, 3],
      "moments": 20,
      "densities": [0.25, 1],
      "suite": "duality",
      "window": [100, 100],
      "grids": {"x": "0.01:0.99:99:linear", "t": ..., "theta": ...},
      "mc": {"samples": 10000, "seed": 0, "truncation_tol": 1e-4, "workers": 4},
      "output": {"path": "out.csv", "format": "csv"}
    }

Unknown keys anywhere are rejected.  A run manifest has the same shape, so
feeding one back through ``--config`` repeats the run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .mc import McConfig
from .model import NetworkParams, ReliabilityTarget
from .point_process import DEFAULT_TRUNCATION_TOL

COMMANDS = ("md", "tdist", "throughput", "interference", "realization", "fig2", "fig3", "validate")
METHODS = ("gilpelaez", "binomial", "mc", "ultrarel", "partial")
INFO_MODES = ("full", "k_nearest", "partial_info_limit")
SUITES = ("duality", "md", "interference", "throughput")
FORMATS = ("csv", "json")

DEFAULT_SAMPLES = 10_000


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ValueError("grid count must be at least 2")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"grid scale must be linear or log, got {self.scale!r}")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ValueError("log grids need positive endpoints")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """``"start:stop:count[:scale]"``, e.g. ``"0.01:100:41:log"``."""
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValueError(f"grid must be start:stop:count[:scale], got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"bad number in grid {text!r}") from None
        return cls(start, stop, count, parts[3] if len(parts) == 4 else "linear")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self) -> str:
        return f"{self.start!r}:{self.stop!r}:{self.count}:{self.scale}"


DEFAULT_GRIDS = {
    "md": {"x": "0.01:0.99:99:linear"},
    "tdist": {"t": "0.01:100:41:log"},
    "throughput": {"theta": "0.01:100:41:log"},
    "interference": {"x": "0.1:100:31:log"},
    "fig2": {"t": "0.001:10:41:log"},
    "fig3": {"theta": "0.01:100:41:log"},
    "validate": {"x": "0.05:0.95:19:linear", "theta": "0.01:100:5:log"},
}

# Figure parameters used when the network is not given explicitly.
FIGURE_NETWORK = {"lambda": 1.0, "alpha": 4.0, "R": 0.5}
FIGURE_DEFAULTS = {
    "fig2": {"network": FIGURE_NETWORK, "densities": [0.25, 1.0], "k": [1, 3]},
    "fig3": {"network": FIGURE_NETWORK, "target": {"epsilon": 0.01}},
}

SCHEMA = {
    "command": str,
    "version": str,
    "network": {"lambda": float, "alpha": float, "R": float},
    "target": {"nu": float, "epsilon": float},
    "theta": float,
    "method": str,
    "info": str,
    "k": list,
    "moments": int,
    "densities": list,
    "suite": str,
    "window": list,
    "grids": {"x": str, "t": str, "theta": str},
    "mc": {"samples": int, "seed": int, "truncation_tol": float, "workers": int},
    "output": {"path": str, "format": str},
}


def _check_schema(data, schema, path=""):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(where, "unknown key")
        kind = schema[key]
        if isinstance(kind, dict):
            _check_schema(value, kind, where)
        elif value is None and key == "workers":
            continue
        elif kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(where, "expected a number")
        elif kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(where, "expected an integer")
        elif kind is str and where.startswith("grids."):
            if not isinstance(value, (str, dict)):
                raise ConfigError(where, "expected a grid string or object")
        elif not isinstance(value, kind):
            raise ConfigError(where, f"expected {kind.__name__}")


def merge(base: dict, override: dict) -> dict:
    """Recursive dict merge; ``None`` values in ``override`` are skipped."""
    out = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, dict):
            base_value = out.get(key)
            out[key] = merge(base_value if isinstance(base_value, dict) else {}, value)
        else:
            out[key] = value
    return out


def load_config(path: str) -> dict:
    """Read and schema-check a JSON config file; returns the raw nested dict."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{path} is not valid JSON: {exc}") from None
    _check_schema(data, SCHEMA)
    return data


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass
class RunConfig:
    command: str
    network: NetworkParams
    mc: McConfig
    output: OutputSpec
    target: ReliabilityTarget | None = None
    theta: float | None = None
    grids: dict[str, GridSpec] = field(default_factory=dict)
    method: str | None = None
    info: str = "full"
    k: tuple[int, ...] = ()
    moments: int = 20
    densities: tuple[float, ...] = ()
    suite: str | None = None
    window: tuple[float, float] = (100.0, 100.0)
    target_key: str = "nu"

    def grid(self, name: str) -> np.ndarray:
        if name not in self.grids:
            raise ConfigError(f"grids.{name}", "grid required for this command")
        return self.grids[name].values()

    def require_theta(self) -> float:
        if self.theta is None:
            raise ConfigError("theta", "--theta or --theta-db is required")
        return self.theta

    def require_target(self) -> ReliabilityTarget:
        if self.target is None:
            raise ConfigError("target", "--nu or --eps is required")
        return self.target

    def manifest(self, version: str) -> dict:
        """Every setting that affects the output, in config-file form.

        The worker count is left out: results do not depend on it.
        """
        m = {
            "command": self.command,
            "version": version,
            "network": {
                "lambda": self.network.density,
                "alpha": self.network.path_loss_exponent,
                "R": self.network.link_distance,
            },
            "grids": {name: str(g) for name, g in sorted(self.grids.items())},
            "mc": {
                "samples": self.mc.n_realizations,
                "seed": self.mc.master_seed,
                "truncation_tol": self.mc.truncation_tol,
            },
            "output": {"format": self.output.format},
        }
        if self.target is not None:
            m["target"] = {self.target_key: getattr(self.target, self.target_key)}
        if self.theta is not None:
            m["theta"] = self.theta
        if self.method is not None:
            m["method"] = self.method
        if self.command == "tdist":
            m["info"] = self.info
        if self.k:
            m["k"] = list(self.k)
        if self.command in ("md", "validate") and self.method == "binomial":
            m["moments"] = self.moments
        if self.densities:
            m["densities"] = list(self.densities)
        if self.suite is not None:
            m["suite"] = self.suite
        if self.command == "realization":
            m["window"] = list(self.window)
        return m


def _number(data: dict, key: str, where: str) -> float:
    value = data.get(key)
    if value is None:
        raise ConfigError(where, "required")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    return value


def _grid(value, where: str) -> GridSpec:
    try:
        if isinstance(value, dict):
            extra = set(value) - {"start", "stop", "count", "scale"}
            if extra:
                raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown key")
            return GridSpec(
                float(value["start"]), float(value["stop"]), int(value["count"]),
                value.get("scale", "linear"),
            )
        return GridSpec.parse(value)
    except KeyError as exc:
        raise ConfigError(f"{where}.{exc.args[0]}", "required") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from None


def build_run_config(command: str, data: dict) -> RunConfig:
    """Validate a merged settings dict into a :class:`RunConfig`."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    _check_schema(data, SCHEMA)
    if data.get("command", command) != command:
        raise ConfigError("command", f"config is for {data['command']!r}, not {command!r}")
    defaults = dict(FIGURE_DEFAULTS.get(command, {}))
    if "target" in data:
        defaults.pop("target", None)
    data = merge(defaults, data)
    data = merge({"grids": DEFAULT_GRIDS.get(command, {})}, data)

    net = data.get("network")
    if net is None:
        raise ConfigError("network", "--lambda, --alpha and --R are required")
    network = NetworkParams(
        _number(net, "lambda", "network.lambda"),
        _number(net, "alpha", "network.alpha"),
        _number(net, "R", "network.R"),
    )

    target, target_key = None, "nu"
    tg = data.get("target")
    if tg:
        if "nu" in tg and "epsilon" in tg:
            raise ConfigError("target", "give nu or epsilon, not both")
        if "epsilon" in tg:
            target = ReliabilityTarget.from_epsilon(_number(tg, "epsilon", "target.epsilon"))
            target_key = "epsilon"
        else:
            target = ReliabilityTarget.from_nu(_number(tg, "nu", "target.nu"))

    theta = data.get("theta")
    if theta is not None:
        theta = float(theta)
        if not (math.isfinite(theta) and theta >= 0):
            raise ConfigError("theta", "SIR threshold must be non-negative")

    grids = {name: _grid(v, f"grids.{name}") for name, v in data.get("grids", {}).items()}

    mc = data.get("mc", {})
    try:
        mc_cfg = McConfig(
            n_realizations=int(mc.get("samples", DEFAULT_SAMPLES)),
            master_seed=int(mc.get("seed", 0)),
            truncation_tol=float(mc.get("truncation_tol", DEFAULT_TRUNCATION_TOL)),
            worker_hint=mc.get("workers"),
        )
    except ValueError as exc:
        raise ConfigError("mc", str(exc)) from None
    if not 0 <= mc_cfg.master_seed < 2**64:
        raise ConfigError("mc.seed", "must be a 64-bit unsigned integer")
    if not mc_cfg.truncation_tol > 0:
        raise ConfigError("mc.truncation_tol", "must be positive")

    out = data.get("output", {})
    fmt = out.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError("output.format", f"must be one of {', '.join(FORMATS)}")

    method = data.get("method")
    if method is not None and method not in METHODS:
        raise ConfigError("method", f"must be one of {', '.join(METHODS)}")
    info = data.get("info", "full")
    if info not in INFO_MODES:
        raise ConfigError("info", f"must be one of {', '.join(INFO_MODES)}")
    suite = data.get("suite")
    if suite is not None and suite not in SUITES:
        raise ConfigError("suite", f"must be one of {', '.join(SUITES)}")

    k = tuple(int(v) for v in data.get("k", ()))
    if any(v < 1 for v in k):
        raise ConfigError("k", "must be positive integers")
    densities = tuple(float(v) for v in data.get("densities", ()))
    if any(not v > 0 for v in densities):
        raise ConfigError("densities", "must be positive")
    window = tuple(float(v) for v in data.get("window", (100.0, 100.0)))
    if len(window) != 2 or any(not v > 0 for v in window):
        raise ConfigError("window", "must be two positive numbers")
    moments = int(data.get("moments", 20))

    return RunConfig(
        command=command,
        network=network,
        mc=mc_cfg,
        output=OutputSpec(out.get("path"), fmt),
        target=target,
        theta=theta,
        grids=grids,
        method=method,
        info=info,
        k=k,
        moments=moments,
        densities=densities,
        suite=suite,
        window=window,
        target_key=target_key,
    )
