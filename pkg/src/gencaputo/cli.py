"""Command-line front end.

Usage::

    gencaputo {derivative,solve,convergence,weights,stability} CONFIG [--output-dir DIR]

``CONFIG`` is a TOML file, or a ``*.manifest.json`` written by an earlier run.
Each run writes ``<name>.csv`` and ``<name>.manifest.json``.  The manifest
embeds the fully resolved configuration, so passing it back as ``CONFIG``
reproduces the CSV.  Exit status is 0 on success, 2 for configuration errors
and 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .analysis import (
    ConvergenceReport,
    error_inf,
    error_l2,
    format_float,
    run_refinement_study,
    stability_check,
)
from .exceptions import ConfigError, GCFDError, UnsupportedOracleError
from .functions import GridFunction1D, ScaleWeightPair, SpaceGrid, TimeGrid, validate_pair
from .gcfd import gcfd_apply, weighted_power_reference
from .pde import recover_original, time_march, transform_problem
from .problems import BUILTIN_NAMES, builtin_problem
from .weights import lambda_table, lambda_weights

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("derivative", "solve", "convergence", "weights", "stability")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_REQUIRED = object()


def _num(key: str) -> Callable[[Any], float]:
    def conv(v: Any) -> float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"key '{key}': expected a number, got {v!r}")
        return float(v)

    return conv


def _int(key: str) -> Callable[[Any], int]:
    def conv(v: Any) -> int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"key '{key}': expected an integer, got {v!r}")
        return v

    return conv


def _choice(key: str, options: Sequence[str]) -> Callable[[Any], str]:
    def conv(v: Any) -> str:
        if v not in options:
            raise ConfigError(f"key '{key}': expected one of {list(options)}, got {v!r}")
        return v

    return conv


def _function(key: str) -> Callable[[Any], dict]:
    def conv(v: Any) -> dict:
        try:
            return GridFunction1D.from_config(v).to_config()
        except ConfigError as exc:
            raise ConfigError(f"key '{key}': {exc}") from None

    return conv


def _int_list(key: str) -> Callable[[Any], list[int]]:
    def conv(v: Any) -> list[int]:
        if not isinstance(v, list) or not v:
            raise ConfigError(f"key '{key}': expected a non-empty list of integers")
        out = [_int(key)(x) for x in v]
        for prev, nxt in zip(out, out[1:]):
            if nxt != 2 * prev:
                raise ConfigError(f"key '{key}': resolutions must double, got {prev} then {nxt}")
        return out

    return conv


def _bool(key: str) -> Callable[[Any], bool]:
    def conv(v: Any) -> bool:
        if not isinstance(v, bool):
            raise ConfigError(f"key '{key}': expected true or false, got {v!r}")
        return v

    return conv


def _opt(conv: Callable[[Any], Any]) -> Callable[[Any], Any]:
    return lambda v: None if v is None else conv(v)


_IDENTITY = GridFunction1D.identity().to_config()
_ONE = GridFunction1D.constant(1.0).to_config()
_PDE_NAMES = tuple(n for n in BUILTIN_NAMES if n != "ex51")

# Allowed keys per command: key -> (converter, default).
SCHEMAS: dict[str, dict[str, tuple[Callable[[Any], Any], Any]]] = {
    "weights": {
        "name": (str, "weights"),
        "alpha": (_num("alpha"), _REQUIRED),
        "scale": (_function("scale"), _IDENTITY),
        "weight": (_function("weight"), _ONE),
        "T": (_num("T"), 1.0),
        "N": (_int("N"), _REQUIRED),
        "levels": (_opt(lambda v: [_int("levels")(x) for x in v]), None),
    },
    "derivative": {
        "name": (str, "derivative"),
        "alpha": (_num("alpha"), _REQUIRED),
        "scale": (_function("scale"), _IDENTITY),
        "weight": (_function("weight"), _ONE),
        "T": (_num("T"), 1.0),
        "N": (_int("N"), _REQUIRED),
        "exponent": (_opt(_num("exponent")), None),
    },
    "solve": {
        "name": (str, "solve"),
        "alpha": (_num("alpha"), _REQUIRED),
        "problem": (_choice("problem", _PDE_NAMES), _REQUIRED),
        "scale": (_function("scale"), _IDENTITY),
        "weight": (_function("weight"), _ONE),
        "N": (_int("N"), _REQUIRED),
        "M": (_int("M"), _REQUIRED),
        "zero_data": (_bool("zero_data"), False),
    },
    "convergence": {
        "name": (str, "convergence"),
        "alpha": (_num("alpha"), _REQUIRED),
        "problem": (_choice("problem", BUILTIN_NAMES), _REQUIRED),
        "scale": (_function("scale"), _IDENTITY),
        "weight": (_function("weight"), _ONE),
        "axis": (_choice("axis", ("time", "space")), "time"),
        "resolutions": (_int_list("resolutions"), _REQUIRED),
        "fixed": (_opt(_int("fixed")), None),
        "l2_level": (_choice("l2_level", ("final", "previous")), "final"),
    },
    "stability": {
        "name": (str, "stability"),
        "lambda0": (_num("lambda0"), _REQUIRED),
        "lambda1": (_num("lambda1"), _REQUIRED),
        "D": (_num("D"), _REQUIRED),
        "A": (_num("A"), _REQUIRED),
        "h": (_num("h"), _REQUIRED),
        "M": (_int("M"), _REQUIRED),
    },
}


def load_config(command: str, path: Path) -> dict[str, Any]:
    """Read and validate a TOML config or a previous run's manifest."""
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            manifest = json.loads(raw_bytes)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        if manifest.get("command") != command:
            raise ConfigError(f"{path} was written by '{manifest.get('command')}', not '{command}'")
        raw = manifest.get("config")
    else:
        try:
            raw = tomllib.loads(raw_bytes.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: configuration must be a table")
    return resolve_config(command, raw)


def resolve_config(command: str, raw: dict[str, Any]) -> dict[str, Any]:
    """Apply defaults and converters; reject unknown and missing keys."""
    schema = SCHEMAS[command]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for '{command}': {', '.join(unknown)}")
    cfg: dict[str, Any] = {}
    for key, (conv, default) in schema.items():
        if key in raw:
            cfg[key] = conv(raw[key])
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key '{key}' for '{command}'")
        else:
            cfg[key] = default
    if "alpha" in cfg and not 0 < cfg["alpha"] < 1:
        raise ConfigError(f"key 'alpha': must lie in (0, 1), got {cfg['alpha']}")
    for key in ("N", "M", "T"):
        if key in cfg and not cfg[key] > 0:
            raise ConfigError(f"key '{key}': must be positive, got {cfg[key]}")
    return cfg


def _pair(cfg: dict[str, Any], grid: TimeGrid) -> ScaleWeightPair:
    return ScaleWeightPair.on_grid(
        GridFunction1D.from_config(cfg["scale"]), GridFunction1D.from_config(cfg["weight"]), grid
    )


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _exact_derivative(q: float, alpha: float, pair: ScaleWeightPair) -> np.ndarray | None:
    try:
        return weighted_power_reference(q, alpha, pair)
    except UnsupportedOracleError:
        return None


def cmd_weights(cfg: dict[str, Any]) -> tuple[str, dict[str, Any], int]:
    pair = _pair(cfg, TimeGrid(cfg["T"], cfg["N"]))
    levels = cfg["levels"] or list(range(1, cfg["N"] + 1))
    rows = []
    provenance = {}
    for n in levels:
        lw = lambda_weights(n, pair, cfg["alpha"])
        provenance[str(n)] = lw.provenance
        rows.extend((n, l, format_float(v)) for l, v in enumerate(lw.values))
    violations = [v._asdict() for v in validate_pair(pair)]
    return _csv(("n", "l", "lambda"), rows), {"provenance": provenance, "violations": violations}, EXIT_OK


def cmd_derivative(cfg: dict[str, Any]) -> tuple[str, dict[str, Any], int]:
    alpha = cfg["alpha"]
    grid = TimeGrid(cfg["T"], cfg["N"])
    pair = _pair(cfg, grid)
    q = cfg["exponent"] if cfg["exponent"] is not None else 4 + alpha
    series = gcfd_apply(grid.nodes**q, pair, alpha)
    exact = _exact_derivative(q, alpha, pair)
    rows = []
    for n in range(1, grid.N + 1):
        approx = series.values[n - 1]
        ex = None if exact is None else exact[n - 1]
        err = None if ex is None else abs(approx - ex)
        rows.append((n, format_float(grid.nodes[n]), format_float(approx), format_float(ex), format_float(err)))
    extra = {"exponent": q, "oracle": exact is not None}
    if exact is not None:
        extra["max_abs_error"] = float(np.max(np.abs(series.values - exact)))
    return _csv(("n", "t", "approx", "exact", "abs_error"), rows), extra, EXIT_OK


def _stability_summary(tp, table) -> dict[str, Any]:
    h, M = tp.space.h, tp.space.M
    verdicts = [stability_check(lw.values[0], lw.values[1], tp.D, tp.A, h, M) for lw in table]
    failing = [i + 1 for i, v in enumerate(verdicts) if not v.holds]
    last = verdicts[-1]
    return {
        "holds_every_level": not failing,
        "failing_levels": failing,
        "final_level": {"lhs": last.lhs, "rhs": last.rhs, "log_rhs": last.log_rhs},
    }


def _builtin(cfg: dict[str, Any]):
    bp = builtin_problem(
        cfg["problem"],
        cfg["alpha"],
        GridFunction1D.from_config(cfg["scale"]),
        GridFunction1D.from_config(cfg["weight"]),
    )
    return bp


def cmd_solve(cfg: dict[str, Any]) -> tuple[str, dict[str, Any], int]:
    bp = _builtin(cfg)
    if cfg["zero_data"]:
        bp = bp.homogeneous()
    space, grid = SpaceGrid(bp.problem.a, cfg["M"]), TimeGrid(bp.problem.T, cfg["N"])
    tp = transform_problem(bp.problem, space, grid)
    table = lambda_table(tp.pair, cfg["alpha"])
    field = recover_original(time_march(tp, table), bp.problem)
    rows = [
        (format_float(x), format_float(t), format_float(field.values[i, n]))
        for n, t in enumerate(grid.nodes)
        for i, x in enumerate(space.nodes)
    ]
    extra: dict[str, Any] = {"stability": _stability_summary(tp, table)}
    if bp.exact is not None:
        extra["E_inf"] = error_inf(field, bp.exact)
        extra["E_2"] = error_l2(field, bp.exact)
    return _csv(("x", "t", "U"), rows), extra, EXIT_OK


def _derivative_errors(cfg: dict[str, Any], q: float) -> Callable[[int], tuple[float, float]]:
    def errors(N: int) -> tuple[float, float]:
        grid = TimeGrid(1.0, N)
        pair = _pair(cfg, grid)
        exact = weighted_power_reference(q, cfg["alpha"], pair)
        e = gcfd_apply(grid.nodes**q, pair, cfg["alpha"]).values - exact
        return float(np.max(np.abs(e))), math.sqrt(grid.tau * math.fsum(e * e))

    return errors


def _pde_errors(cfg: dict[str, Any], bp) -> Callable[[int], tuple[float, float]]:
    level_shift = 1 if cfg["l2_level"] == "previous" else 0

    def errors(res: int) -> tuple[float, float]:
        N, M = (res, cfg["fixed"]) if cfg["axis"] == "time" else (cfg["fixed"], res)
        space, grid = SpaceGrid(bp.problem.a, M), TimeGrid(bp.problem.T, N)
        tp = transform_problem(bp.problem, space, grid)
        field = recover_original(time_march(tp), bp.problem)
        return error_inf(field, bp.exact), error_l2(field, bp.exact, level=N - level_shift)

    return errors


def cmd_convergence(cfg: dict[str, Any]) -> tuple[str, dict[str, Any], int]:
    bp = _builtin(cfg)
    if bp.kind == "derivative":
        if cfg["axis"] != "time" or cfg["fixed"] is not None:
            raise ConfigError("problem 'ex51' only supports axis = \"time\" without 'fixed'")
        grid = TimeGrid(1.0, cfg["resolutions"][0])
        if _exact_derivative(bp.exponent, cfg["alpha"], _pair(cfg, grid)) is None:
            raise ConfigError("no exact reference for this scale and weight")
        errors = _derivative_errors(cfg, bp.exponent)
        fixed: dict[str, Any] = {}
    else:
        if bp.exact is None:
            raise ConfigError(f"'{bp.name}' has an exact solution only for zeta = t and constant omega")
        if cfg["fixed"] is None:
            raise ConfigError("key 'fixed' is required for PDE studies (M for time, N for space)")
        errors = _pde_errors(cfg, bp)
        fixed = {"M" if cfg["axis"] == "time" else "N": cfg["fixed"]}
    report: ConvergenceReport = run_refinement_study(
        errors, cfg["axis"], cfg["resolutions"], fixed, {"problem": bp.name, "alpha": cfg["alpha"]}
    )
    extra = {"report": report.to_json()}
    return report.to_csv(), extra, EXIT_OK if report.ok else EXIT_NUMERICAL


def cmd_stability(cfg: dict[str, Any]) -> tuple[str, dict[str, Any], int]:
    v = stability_check(cfg["lambda0"], cfg["lambda1"], cfg["D"], cfg["A"], cfg["h"], cfg["M"])
    print(f"holds={str(v.holds).lower()} lhs={format_float(v.lhs)} rhs={format_float(v.rhs)}")
    row = (str(v.holds).lower(), format_float(v.lhs), format_float(v.rhs), format_float(v.log_rhs))
    return _csv(("holds", "lhs", "rhs", "log_rhs"), [row]), {"holds": v.holds}, EXIT_OK


HANDLERS = {
    "weights": cmd_weights,
    "derivative": cmd_derivative,
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "stability": cmd_stability,
}


def run(command: str, config_path: Path, output_dir: Path) -> int:
    """Execute one command and write its outputs; returns the exit status."""
    try:
        cfg = load_config(command, config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        text, extra, status = HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GCFDError as exc:
        print(f"numerical failure in '{command}': {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    elapsed = time.perf_counter() - start
    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / f"{cfg['name']}.csv"
    csv_path.write_text(text)
    manifest = {
        "command": command,
        "config": cfg,
        "version": __version__,
        "outputs": {"csv": csv_path.name},
        "results": extra,
        "timings": {"seconds": elapsed},
    }
    (output_dir / f"{cfg['name']}.manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    if status != EXIT_OK:
        print(f"'{command}' finished with failed rows; see the manifest", file=sys.stderr)
    return status


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gencaputo", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", type=Path, help="TOML config or a previous manifest")
    parser.add_argument("--output-dir", type=Path, default=Path("."), help="where to write outputs")
    args = parser.parse_args(argv)
    return run(args.command, args.config, args.output_dir)


if __name__ == "__main__":
    raise SystemExit(main())
