"""Experiment runner: flat dotted-key configs in, CSV artifacts + manifest out.

Config format — one `key = value` per line, `#` comments, blank lines ignored:

    model.name     = allen_cahn
    model.modes    = 64
    noise.mu       = 0.2
    noise.lambda   = 0.15
    scheme.dt      = 1e-3
    scheme.t_final = 1.0
    scheme.method  = explicit
    scheme.seed    = 7
    run.n_grid     = 1,4,16,64,256
    run.paths      = 200

Every run writes the requested CSVs plus ``manifest.json`` recording the
config hash, effective seed, and per-artifact SHA-256 checksums.  Artifacts
are byte-identical across reruns and across ``--threads`` settings (threads
only split path batches; reduction order is fixed).

Exit codes: 0 success, 2 configuration error, 3 numerical failure (blow-ups;
whatever reports were computed are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import BlowUpError, ReflectSPDEError
from .hypotheses import run_all_audits
from .localtime import inequality_study
from .models import REGISTRY, ModelBundle, build_model
from .montecarlo import (
    cauchy_study,
    oracle_compare_1d,
    run_estimates,
    write_csv,
)
from .penalize import SchemeConfig

__all__ = ["ExperimentConfig", "load_config", "run_experiment", "main"]

SUBCOMMANDS = ("estimates", "cauchy", "inequality", "hypotheses", "oracle1d", "all")

INEQUALITY_HEADER = ("n", "path_index", "total_variation", "min_gap", "boundary_leak")
HYPOTHESES_HEADER = ("hypothesis", "margin", "constant", "seed")

# master schema: dotted key -> (type caster, default); None default = required
# or builder-defaulted.
_INT = int
_FLOAT = float
_STR = str


def _float_list(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return [float(t) for t in items]


_SCHEMA = {
    "model.name": _STR,
    "model.modes": _INT,
    "model.p": _FLOAT,
    "model.nu": _FLOAT,
    "model.taming_n": _FLOAT,
    "model.kappa": _FLOAT,
    "model.sigma": _FLOAT,
    "model.x0_radius": _FLOAT,
    "noise.modes": _INT,
    "noise.mu": _FLOAT,
    "noise.lambda": _FLOAT,
    "noise.q_decay": _FLOAT,
    "scheme.dt": _FLOAT,
    "scheme.t_final": _FLOAT,
    "scheme.method": _STR,
    "scheme.seed": _INT,
    "run.n_grid": _float_list,
    "run.paths": _INT,
    "run.delta": _FLOAT,
    "run.test_paths": _INT,
    "run.ineq_paths": _INT,
    "run.samples": _INT,
    "run.h1_samples": _INT,
    "run.out": _STR,
    "oracle.kappa": _FLOAT,
    "oracle.sigma": _FLOAT,
}

# config key -> model-builder keyword, per model
_MODEL_KEYS = {
    "allen_cahn": {
        "model.modes": "modes",
        "model.x0_radius": "x0_radius",
        "noise.modes": "noise_modes",
        "noise.mu": "mu",
        "noise.lambda": "lam",
        "noise.q_decay": "q_decay",
    },
    "p_laplacian": {
        "model.modes": "modes",
        "model.p": "p",
        "model.x0_radius": "x0_radius",
        "noise.modes": "noise_modes",
        "noise.mu": "mu",
        "noise.lambda": "lam",
        "noise.q_decay": "q_decay",
    },
    "oracle_1d": {
        "model.kappa": "kappa",
        "model.sigma": "sigma",
    },
    "tamed_nse": {
        "model.modes": "modes",
        "model.nu": "nu",
        "model.taming_n": "taming_n",
        "model.x0_radius": "x0_radius",
        "noise.modes": "noise_modes",
        "noise.mu": "mu",
        "noise.lambda": "lam",
        "noise.q_decay": "q_decay",
    },
}


class ConfigError(Exception):
    """Raised with a field-level diagnostic; maps to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict
    raw_bytes: bytes

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise ConfigError(f"{key}: required key is missing")
        return self.values[key]


def parse_config_text(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key in entries:
            raise ConfigError(f"{key}: duplicate key (line {lineno})")
        entries[key] = value
    return entries


def load_config(path) -> ExperimentConfig:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    entries = parse_config_text(raw.decode("utf-8"))
    values = {}
    for key, text in entries.items():
        if key not in _SCHEMA:
            raise ConfigError(f"{key}: unknown key")
        try:
            values[key] = _SCHEMA[key](text)
        except ValueError as exc:
            raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None
    if "model.name" in values and values["model.name"] not in REGISTRY:
        raise ConfigError(
            f"model.name: unknown model {values['model.name']!r}; "
            f"available: {sorted(REGISTRY)}"
        )
    return ExperimentConfig(values=values, raw_bytes=raw)


def _build_bundle(config: ExperimentConfig) -> ModelBundle:
    name = config.require("model.name")
    keymap = _MODEL_KEYS[name]
    for key in config.values:
        if key.startswith(("model.", "noise.")) and key not in keymap and key != "model.name":
            raise ConfigError(f"{key}: not a parameter of model {name!r}")
    kwargs = {arg: config.values[key] for key, arg in keymap.items() if key in config.values}
    try:
        return build_model(name, **kwargs)
    except ReflectSPDEError as exc:
        raise ConfigError(f"model.name: cannot build {name!r}: {exc}") from None


def _build_scheme(config: ExperimentConfig, seed_override, n_grid) -> SchemeConfig:
    dt = float(config.require("scheme.dt"))
    t_final = float(config.require("scheme.t_final"))
    if dt <= 0 or t_final <= 0:
        raise ConfigError("scheme.dt/scheme.t_final: must be positive")
    steps = int(round(t_final / dt))
    if steps < 1:
        raise ConfigError("scheme.t_final: horizon shorter than one step")
    method = config.get("scheme.method", "explicit")
    seed = int(seed_override if seed_override is not None else config.get("scheme.seed", 0))
    if method == "explicit":
        worst = max(n_grid) * dt
        if worst > 1.0 + 1e-12:
            raise ConfigError(
                f"run.n_grid: n*dt = {worst:g} > 1 is unstable under scheme.method = "
                "explicit; shrink scheme.dt or use scheme.method = splitting"
            )
    try:
        return SchemeConfig(dt=dt, steps=steps, n=n_grid[0], method=method, seed=seed)
    except ReflectSPDEError as exc:
        raise ConfigError(f"scheme: {exc}") from None


def _threads(cli_value) -> int:
    if cli_value is not None:
        return max(1, int(cli_value))
    env = os.environ.get("REFLECTSPDE_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"REFLECTSPDE_THREADS: cannot parse {env!r}") from None
    return 1


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _n_grid(config: ExperimentConfig) -> list[float]:
    grid = [float(n) for n in config.require("run.n_grid")]
    if any(n < 0 for n in grid):
        raise ConfigError("run.n_grid: penalization levels must be nonnegative")
    return grid


def run_experiment(config: ExperimentConfig, subcommand: str, out_dir, threads: int = 1, seed=None):
    """Run one subcommand; returns (exit_code, artifact paths)."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; choose from {SUBCOMMANDS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = SUBCOMMANDS[:-1] if subcommand == "all" else (subcommand,)
    artifacts: list[Path] = []
    failures = 0
    effective_seed = int(seed if seed is not None else config.get("scheme.seed", 0))

    for task in wanted:
        if task == "estimates":
            bundle = _build_bundle(config)
            n_grid = _n_grid(config)
            cfg = _build_scheme(config, seed, n_grid)
            report = run_estimates(
                bundle.model,
                None,
                cfg,
                n_grid,
                int(config.require("run.paths")),
                x0=bundle.x0,
                threads=threads,
            )
            path = out / "estimates.csv"
            report.to_csv(path)
            artifacts.append(path)
            failures += int(sum(r.failures for r in report.rows))
        elif task == "cauchy":
            bundle = _build_bundle(config)
            n_grid = _n_grid(config)
            cfg = _build_scheme(config, seed, n_grid)
            report = cauchy_study(
                bundle.model,
                None,
                cfg,
                n_grid,
                int(config.require("run.paths")),
                x0=bundle.x0,
                threads=threads,
            )
            path = out / "cauchy.csv"
            report.to_csv(path)
            artifacts.append(path)
        elif task == "inequality":
            bundle = _build_bundle(config)
            n_grid = _n_grid(config)
            cfg = _build_scheme(config, seed, n_grid)
            rows, failed = inequality_study(
                bundle.model,
                None,
                cfg,
                bundle.x0,
                n_grid,
                paths=int(config.get("run.ineq_paths", 3)),
                test_count=int(config.get("run.test_paths", 200)),
                delta=float(config.get("run.delta", 0.1)),
            )
            path = out / "inequality.csv"
            write_csv(path, INEQUALITY_HEADER, [(n, int(i), tv, g, lk) for n, i, tv, g, lk in rows])
            artifacts.append(path)
            failures += failed
        elif task == "hypotheses":
            bundle = _build_bundle(config)
            reports = run_all_audits(
                bundle.model,
                seed=effective_seed,
                count=int(config.get("run.samples", 1000)),
                h1_count=int(config.get("run.h1_samples", 0)) or None,
            )
            path = out / "hypotheses.csv"
            write_csv(
                path,
                HYPOTHESES_HEADER,
                [(r.hypothesis, r.worst_margin, r.constant, int(r.seed)) for r in reports],
            )
            artifacts.append(path)
        elif task == "oracle1d":
            n_grid = _n_grid(config)
            cfg = _build_scheme(config, seed, n_grid)
            if config.get("model.name") == "oracle_1d":
                kappa = float(config.get("model.kappa", 0.5))
                sigma = float(config.get("model.sigma", 0.5))
            else:
                kappa = float(config.get("oracle.kappa", 1.0))
                sigma = float(config.get("oracle.sigma", 0.5))
            report = oracle_compare_1d(
                kappa, sigma, cfg, n_grid, int(config.require("run.paths")), threads=threads
            )
            path = out / "oracle1d.csv"
            report.to_csv(path)
            artifacts.append(path)

    manifest = {
        "config_sha256": hashlib.sha256(config.raw_bytes).hexdigest(),
        "seed": effective_seed,
        "subcommand": subcommand,
        "artifacts": {p.name: _sha256(p) for p in artifacts},
    }
    manifest_path = out / "manifest.json"
    with open(manifest_path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    artifacts.append(manifest_path)
    return (3 if failures else 0), artifacts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="reflectspde",
        description="Penalized simulation and verification suite for ball-reflected SPDEs.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} study")
        p.add_argument("--config", required=True, help="flat dotted-key config file")
        p.add_argument("--out", default=None, help="output directory (default: run.out or .)")
        p.add_argument("--seed", type=int, default=None, help="override scheme.seed")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="path-batch worker threads (fallback: REFLECTSPDE_THREADS, then 1)",
        )
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        threads = _threads(args.threads)
        out_dir = args.out or config.get("run.out", ".")
        code, _ = run_experiment(
            config, args.subcommand, out_dir, threads=threads, seed=args.seed
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ReflectSPDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if code == 3:
        print("numerical failure: some paths blew up; reports written with failure counts",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
