"""Command-line front end.

    hslimit <command> [--config FILE] [--out DIR] [--jobs N] [key=value ...]

Exit status: 0 when every verdict passes, 1 on a failed verdict or a run
that could not finish, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .measures import DiscreteDensity, Grid, read_density_csv
from .models import ModelSpec, model_from_keys, parse_potential
from .rates import (EXPECT_EVOLUTION_POWER, EXPECT_EVOLUTION_SINGULAR, STATIONARY_COLUMNS,
                    default_stationary_grid, evolution_rate_power, evolution_rate_singular,
                    stationary_rate)
from .solver import SolveConfig, solve
from .stationary import dm_density_l1, support_threshold

COMMANDS = ("simulate", "rates-evolution", "rates-singular", "rates-stationary",
            "threshold", "self-test")

MODEL_KEYS = ("pressure", "m", "epsilon", "V", "W", "d", "L", "N")
RUN_KEYS = ("command", "m_list", "eps_list", "T", "snapshots", "init", "metric",
            "expect", "cfl", "out", "jobs")
KNOWN_KEYS = MODEL_KEYS + RUN_KEYS

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "simulate": {"T": "1", "init": "uniform:-0.5,0.5"},
    "rates-evolution": {"T": "2", "init": "uniform:-0.5,0.5", "m_list": "8,16,32,64"},
    "rates-singular": {"T": "2", "init": "uniform:-0.5555555555555556,0.5555555555555556,0.9",
                       "eps_list": "0.2,0.1,0.05,0.025"},
    "rates-stationary": {"metric": "L1", "m_list": "20,40,80,160,320,640,1280"},
    "threshold": {},
    "self-test": {},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: Optional[str] = None
    keys: dict = field(default_factory=dict)

    def merged(self, other: RunConfig) -> RunConfig:
        keys = dict(self.keys)
        keys.update(other.keys)
        return RunConfig(other.command or self.command, keys)

    def get(self, key: str, default=None):
        if key in self.keys:
            return self.keys[key]
        return DEFAULTS.get(self.command, {}).get(key, default)

    def floats(self, key: str) -> list:
        raw = self.get(key)
        if raw is None:
            raise ConfigError(f"{key} is required")
        try:
            return [float(s) for s in str(raw).split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"{key}: not a comma list of numbers: {raw!r}") from None

    def number(self, key: str, default=None, kind=float):
        raw = self.get(key, default)
        try:
            return kind(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: not a number: {raw!r}") from None

    def expected(self, fallback):
        raw = self.get("expect")
        if raw is None:
            return fallback
        vals = self.floats("expect")
        if len(vals) != 2 or not vals[0] <= vals[1]:
            raise ConfigError(f"expect needs lo,hi with lo <= hi, got {raw!r}")
        return tuple(vals)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if "m_list" in self.keys and any(m <= 1 for m in self.floats("m_list")):
            raise ConfigError("m values must exceed 1")
        if "eps_list" in self.keys and any(e <= 0 for e in self.floats("eps_list")):
            raise ConfigError("epsilon values must be positive")
        if "m" in self.keys and self.number("m") <= 1:
            raise ConfigError("m must exceed 1")
        if "epsilon" in self.keys and self.number("epsilon") <= 0:
            raise ConfigError("epsilon must be positive")


def _assign(cfg: RunConfig, text: str, where: str) -> None:
    key, sep, value = text.partition("=")
    key, value = key.strip(), value.strip()
    if not sep or not key:
        raise ConfigError(f"{where}: expected key=value: {text!r}")
    if key not in KNOWN_KEYS:
        raise ConfigError(f"{where}: unknown key {key!r}: {text!r}")
    if key == "command":
        cfg.command = value
    else:
        cfg.keys[key] = value


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines; ``#`` starts a comment and later keys win."""
    cfg = RunConfig()
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            _assign(cfg, body, f"line {number}")
    return cfg


def parse_overrides(items) -> RunConfig:
    cfg = RunConfig()
    for item in items:
        _assign(cfg, item, "argument")
    return cfg


def _model(cfg: RunConfig, **forced) -> ModelSpec:
    keys = {k: cfg.keys[k] for k in MODEL_KEYS if k in cfg.keys}
    keys.update(forced)
    try:
        return model_from_keys(keys)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _initial(cfg: RunConfig, model: ModelSpec) -> DiscreteDensity:
    spec = str(cfg.get("init"))
    kind, _, args = spec.partition(":")
    try:
        if kind == "uniform":
            vals = [float(s) for s in args.split(",")]
            if len(vals) not in (2, 3):
                raise ValueError("uniform needs a,b[,height]")
            return DiscreteDensity.uniform(model.grid, *vals)
        if kind == "csv":
            return read_density_csv(args, model.grid)
    except (ValueError, OSError) as exc:
        raise ConfigError(f"init={spec}: {exc}") from None
    raise ConfigError(f"unknown initial data {spec!r}")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _manifest(cfg: RunConfig, out: Path, argv) -> None:
    import numba
    import scipy

    _write_json(out / "manifest.json", {
        "command": cfg.command,
        "inputs": dict(sorted(cfg.keys.items())),
        "defaults": DEFAULTS.get(cfg.command, {}),
        "argv": list(argv),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "versions": {
            "hslimit": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    })


def _report_exit(report, out: Path, columns, echo) -> int:
    report.write(out, columns)
    s = report.summary()
    echo(f"{s['theorem_tag']}: exponent {s['exponent']:.4f}  r^2 {s['r_squared']:.4f}  "
         f"expected {report.expected}  {s['verdict'].upper()}")
    return EXIT_OK if report.verdict else EXIT_FAIL


def _snapshots(cfg: RunConfig) -> int:
    return cfg.number("snapshots", 41, int)


def cmd_simulate(cfg, out, workers, echo) -> int:
    model = _model(cfg)
    T = cfg.number("T")
    traj = solve(model, _initial(cfg, model),
                 SolveConfig(T, cfl_safety=cfg.number("cfl", 0.5),
                             snapshot_times=list(np.linspace(0.0, T, _snapshots(cfg)))))
    traj.export(out)
    mass = traj.column("mass")
    _write_json(out / "summary.json", {
        "steps": traj.steps,
        "mass_drift": float(np.max(np.abs(mass - mass[0]))),
        "final_energy": float(traj.column("energy")[-1]),
        "max_density": float(traj.column("max_density").max()),
    })
    echo(f"{traj.steps} steps, mass drift {np.max(np.abs(mass - mass[0])):.2e}")
    return EXIT_OK


def cmd_rates_evolution(cfg, out, workers, echo) -> int:
    if cfg.get("pressure", "power") != "power":
        raise ConfigError("rates-evolution uses the power law")
    model = _model(cfg)
    report = evolution_rate_power(
        model, _initial(cfg, model), cfg.floats("m_list"), cfg.number("T"),
        snapshots=_snapshots(cfg), expected=cfg.expected(EXPECT_EVOLUTION_POWER),
        workers=workers, config=dict(cfg.keys), cfl=cfg.number("cfl", 0.5),
    )
    return _report_exit(report, out, ("m", "sup_w2", "partner"), echo)


def cmd_rates_singular(cfg, out, workers, echo) -> int:
    if cfg.get("pressure", "singular") != "singular":
        raise ConfigError("rates-singular uses the singular law")
    model = _model(cfg, pressure="singular")
    report = evolution_rate_singular(
        model, _initial(cfg, model), cfg.floats("eps_list"), cfg.number("T"),
        snapshots=_snapshots(cfg), expected=cfg.expected(EXPECT_EVOLUTION_SINGULAR),
        workers=workers, config=dict(cfg.keys), cfl=cfg.number("cfl", 0.5),
    )
    return _report_exit(report, out, ("epsilon", "sup_w2", "max_density"), echo)


def cmd_rates_stationary(cfg, out, workers, echo) -> int:
    try:
        V = parse_potential(str(cfg.get("V", "quadratic:1.0")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    d = cfg.number("d", 1, int)
    metric = str(cfg.get("metric")).upper()
    if metric not in ("L1", "W2"):
        raise ConfigError(f"metric must be L1 or W2, got {metric!r}")
    cells = cfg.number("N", None, int) if "N" in cfg.keys else None
    grid = default_stationary_grid(d, cells)
    if "L" in cfg.keys:
        L = cfg.number("L")
        grid = Grid.line(L, grid.cell_count) if d == 1 else Grid.radial(L, grid.cell_count, d)
    m_list = cfg.floats("m_list")
    report = stationary_rate(V, d, m_list, metric, grid=grid,
                             expected=cfg.expected(None),
                             config=dict(cfg.keys))
    report.details["columns"]["dm_l1"] = [dm_density_l1(V, m, d) for m, _ in report.sweep]
    if "inclusion" in report.details:
        echo(f"support inclusion: {report.details['inclusion']}")
    return _report_exit(report, out, STATIONARY_COLUMNS, echo)


def cmd_threshold(cfg, out, workers, echo) -> int:
    d = cfg.number("d", 1, int)
    value = support_threshold(d)
    echo(f"{value:.6f}")
    if out is not None:
        _write_json(out / "summary.json", {"d": d, "threshold": value})
    return EXIT_OK


def cmd_self_test(cfg, out, workers, echo) -> int:
    from . import selftest

    return EXIT_OK if selftest.run(echo) else EXIT_FAIL


HANDLERS = {
    "simulate": cmd_simulate,
    "rates-evolution": cmd_rates_evolution,
    "rates-singular": cmd_rates_singular,
    "rates-stationary": cmd_rates_stationary,
    "threshold": cmd_threshold,
    "self-test": cmd_self_test,
}

WRITES_FILES = {"simulate", "rates-evolution", "rates-singular", "rates-stationary"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hslimit", description=__doc__.split("\n\n")[0])
    p.add_argument("command", nargs="?", help=" | ".join(COMMANDS))
    p.add_argument("overrides", nargs="*", metavar="key=value")
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--jobs", type=int, default=None, help="concurrent solver runs")
    return p


def run(argv=None, echo=print) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig()
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            cfg = cfg.merged(parse_config(text))
        overrides = list(args.overrides)
        if args.command and "=" in args.command:
            overrides.insert(0, args.command)
        elif args.command:
            cfg.command = args.command
        cfg = cfg.merged(parse_overrides(overrides))
        if cfg.command is None:
            raise ConfigError("no command given")
        cfg.validate()
        workers = args.jobs if args.jobs is not None else cfg.number("jobs", 1, int)
        out = args.out or (Path(cfg.keys["out"]) if "out" in cfg.keys else None)
        if cfg.command in WRITES_FILES:
            out = out or Path("hslimit-out") / cfg.command
            out.mkdir(parents=True, exist_ok=True)
        elif out is not None:
            out.mkdir(parents=True, exist_ok=True)
        code = HANDLERS[cfg.command](cfg, out, workers, echo)
    except ConfigError as exc:
        echo(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (ValueError, RuntimeError) as exc:
        echo(f"run failed: {exc}")
        return EXIT_FAIL
    if out is not None:
        _manifest(cfg, out, argv)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
