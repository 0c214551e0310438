"""Command-line front end: ``tdmfair {solve,sweep,compare}``.

Exit status: 0 success, 1 usage or configuration error, 2 a solve did not
converge, 3 solver and grid oracle disagree beyond the discretization bound.

Scenario files are flat JSON objects using the keys in ``CONFIG_KEYS``; flags
given on the command line override file values. Relative output paths are
resolved against ``$TDMFAIR_OUTPUT_DIR`` when that variable is set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import TdmFairError
from .experiments import (
    DEFAULT_ETA_VALUES,
    DEFAULT_N_VALUES,
    DEFAULT_POWER_VALUES,
    SweepSpec,
    csv_text,
    run_sweep,
)
from .model import AREA_MODELS, NetworkConfig, voronoi_areas
from .oracle import OracleSpec, discretization_bound, grid_oracle
from .solvers import (
    CombinedOrder,
    SolverOptions,
    Strategy,
    parse_scheme,
    power_adaptation_powers,
    solve,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NONCONVERGED = 2
EXIT_MISMATCH = 3

OUTPUT_DIR_ENV = "TDMFAIR_OUTPUT_DIR"

# key -> (type, accepts a list)
CONFIG_KEYS = {
    "n": (int, True),
    "eta": (float, True),
    "power": (float, True),
    "total_power": (float, False),
    "spacing": (float, False),
    "strategy": (str, True),
    "area_model": (str, False),
    "output": (str, False),
    "rate_tolerance": (float, False),
    "root_tolerance": (float, False),
    "max_iterations": (int, False),
    "placement_restarts": (int, False),
    "seed": (int, False),
    "backend": (str, False),
    "resolution": (float, False),
}

DEFAULTS = {
    "n": 2,
    "eta": 2.0,
    "power": 1.0,
    "total_power": None,
    "spacing": 1.0,
    "strategy": "BR",
    "area_model": "voronoi",
    "output": None,
    "rate_tolerance": SolverOptions.rate_tolerance,
    "root_tolerance": SolverOptions.root_tolerance,
    "max_iterations": SolverOptions.max_iterations,
    "placement_restarts": SolverOptions.placement_restarts,
    "seed": SolverOptions.placement_seed,
    "backend": None,
    "resolution": None,
}

SWEEP_DEFAULTS = {
    "strategy": [s.value for s in (*Strategy, *CombinedOrder) if s is not Strategy.BASE_REFERENCE],
    "n": list(DEFAULT_N_VALUES),
    "power": list(DEFAULT_POWER_VALUES),
    "eta": list(DEFAULT_ETA_VALUES),
}

_PLACEMENT_SCHEMES = (Strategy.NODE_PLACEMENT, *CombinedOrder)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _coerce(key, value, allow_list):
    kind, listable = CONFIG_KEYS[key]
    if isinstance(value, list):
        if not (listable and allow_list):
            raise UsageError(f"config key {key!r} does not take a list")
        return [_coerce(key, v, False) for v in value]
    if value is None:
        return None
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if not isinstance(value, str):
            raise ValueError
        return value
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r}: expected {kind.__name__}, got {value!r}") from None


def load_config(path) -> dict:
    """Read and validate a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    out = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r} in {path}")
        out[key] = _coerce(key, value, allow_list=True)
    return out


def _add_common(p, multi=False):
    nargs = "+" if multi else None
    p.add_argument("--config", help="JSON scenario file")
    if multi:
        p.add_argument("--n-list", dest="n", type=int, nargs="+", help="node counts")
    else:
        p.add_argument("--n", type=int, help="node count")
    p.add_argument("--eta", type=float, nargs=nargs, help="path-loss exponent")
    p.add_argument("--power", type=float, nargs=nargs, help="per-node average power P")
    p.add_argument("--spacing", type=float, help="distance of the nearest node")
    if multi:
        p.add_argument("--strategy", action="append", help="strategy or combined order (repeatable)")
    else:
        p.add_argument("--total-power", dest="total_power", type=float,
                       help="network power budget (default n*P)")
        p.add_argument("--strategy", help="BR, TA, PA, TAPA, NP, PA-then-NP, NP-then-PA, joint-PA-NP")
    p.add_argument("--rate-tolerance", dest="rate_tolerance", type=float)
    p.add_argument("--root-tolerance", dest="root_tolerance", type=float)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--restarts", dest="placement_restarts", type=int)
    p.add_argument("--seed", type=int, help="placement restart seed")
    p.add_argument("--backend", choices=("cython", "python"), help="kernel backend")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdmfair", description="Max-min fair TDM throughput allocation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    p = sub.add_parser("solve", help="solve one scenario and print the allocation")
    _add_common(p)
    p.add_argument("--area-model", dest="area_model", choices=AREA_MODELS)
    p.add_argument("--json", dest="output", help="also write the report as JSON here")
    p = sub.add_parser("sweep", help="ratio table against the base reference, as CSV")
    _add_common(p, multi=True)
    p.add_argument("--out", dest="output", help="CSV path (default standard output)")
    p = sub.add_parser("compare", help="solver against the brute-force grid oracle (n <= 3)")
    _add_common(p)
    p.add_argument("--resolution", type=float, help="grid step")
    p.add_argument("--json", dest="output", help="also write the comparison as JSON here")
    return parser


def resolve(args) -> dict:
    """Defaults, then the config file, then command-line flags."""
    values = dict(DEFAULTS)
    if args.command == "sweep":
        values.update(SWEEP_DEFAULTS)
    if args.config:
        values.update(load_config(args.config))
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return values


def _options(values) -> SolverOptions:
    try:
        return SolverOptions(
            rate_tolerance=values["rate_tolerance"], root_tolerance=values["root_tolerance"],
            max_iterations=values["max_iterations"],
            placement_restarts=values["placement_restarts"],
            placement_seed=values["seed"], backend=values["backend"])
    except TdmFairError as exc:
        raise UsageError(str(exc)) from None


def _scalar(values, key):
    v = values[key]
    if isinstance(v, list):
        if len(v) != 1:
            raise UsageError(f"{key!r} takes a single value for this command")
        return v[0]
    return v


def _network(values) -> NetworkConfig:
    return NetworkConfig(n=_scalar(values, "n"), eta=_scalar(values, "eta"),
                         per_node_power=_scalar(values, "power"),
                         total_power=values["total_power"], spacing=values["spacing"])


def _output_path(path) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _write(path, text):
    p = _output_path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {p}: {exc.strerror or exc}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _echo(values, cfg=None, opts=None) -> dict:
    out = {k: values[k] for k in sorted(CONFIG_KEYS) if k != "output"}
    if cfg is not None:
        out["network"] = cfg.as_dict()
    if opts is not None:
        out["solver_options"] = opts.as_dict()
    out["version"] = __version__
    return out


def _fmt(x) -> str:
    return f"{x:.9g}"


def report_text(result, areas, area_model, echo) -> str:
    """Human-readable allocation report."""
    lines = ["# configuration"]
    lines += [f"#   {k} = {json.dumps(echo[k], sort_keys=True)}" for k in sorted(echo)]
    lines.append(f"strategy: {result.strategy}")
    header = ["i", "d_i", "t_i", "P_i", "C_i"]
    if areas is not None:
        header += ["A_i", "C_i/A_i"]
    rows = []
    for i in range(result.config.n):
        row = [str(i + 1), _fmt(result.placement.distances[i]), _fmt(result.allocation.times[i]),
               _fmt(result.allocation.powers[i]), _fmt(result.rates[i])]
        if areas is not None:
            row += [_fmt(areas[i]), _fmt(result.rates[i] / areas[i])]
        rows.append(row)
    widths = [max(len(r[j]) for r in rows + [header]) for j in range(len(header))]
    for r in [header] + rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    label = "min rate per area" if result.areas is not None else "min rate"
    lines.append(f"objective ({label}): {_fmt(result.objective)}")
    if areas is not None and result.areas is None:
        lines.append(f"min rate per area ({area_model}): {_fmt(float(np.min(result.rates / areas)))}")
    d = result.diagnostics
    lines.append(f"diagnostics: iterations={d.iterations} residual={d.residual:.3g} "
                 f"converged={'yes' if d.converged else 'no'} backend={d.backend}"
                 + (f" ({d.notes})" if d.notes else ""))
    return "\n".join(lines) + "\n"


def cmd_solve(values, out) -> int:
    cfg = _network(values)
    opts = _options(values)
    scheme = parse_scheme(_scalar(values, "strategy"))
    area_model = values["area_model"]
    if area_model not in AREA_MODELS:
        raise UsageError(f"config key 'area_model': expected one of {AREA_MODELS}")
    if area_model != "voronoi" and scheme in _PLACEMENT_SCHEMES:
        raise UsageError(f"area model {area_model!r} cannot drive a placement search; "
                         "use it with BR, TA, PA or TAPA")
    result = solve(cfg, scheme, opts)
    if result.areas is not None:
        areas = result.areas
    elif area_model != "voronoi":
        areas = voronoi_areas(result.placement, area_model).areas
    else:
        areas = None
    echo = _echo(values, cfg, opts)
    out.write(report_text(result, areas, area_model, echo))
    if values["output"]:
        doc = result.to_dict()
        doc["configuration"] = echo
        if areas is not None:
            doc["areas"] = np.asarray(areas).tolist()
            doc["area_model"] = area_model if result.areas is None else "voronoi"
        _write(values["output"], _dumps(doc))
    return EXIT_OK if result.diagnostics.converged else EXIT_NONCONVERGED


def _listed(values, key):
    v = values[key]
    return v if isinstance(v, list) else [v]


def cmd_sweep(values, out) -> int:
    strategies = _listed(values, "strategy")
    spec = SweepSpec(strategies=tuple(strategies), n_values=tuple(sorted(_listed(values, "n"))),
                     power_values=tuple(_listed(values, "power")),
                     eta_values=tuple(_listed(values, "eta")), spacing=values["spacing"])
    if values["total_power"] is not None:
        raise UsageError("sweeps take per-node powers; 'total_power' is not used")
    opts = _options(values)
    table = run_sweep(spec, opts)
    text = csv_text(table)
    if values["output"]:
        _write(values["output"], text)
        meta = {"configuration": _echo(values, opts=opts), "sweep": spec.as_dict(),
                "rows": len(table.rows)}
        _write(str(values["output"]) + ".meta.json", _dumps(meta))
    else:
        out.write(text)
    return EXIT_OK if all(r.converged for r in table.rows) else EXIT_NONCONVERGED


def oracle_spec_for(cfg, scheme, resolution=None) -> OracleSpec:
    """Grid-oracle formulation of ``scheme`` on ``cfg``."""
    if scheme is Strategy.BASE_REFERENCE:
        variables, fixed = (), {}
    elif scheme is Strategy.TIME_ADAPTATION:
        variables, fixed = ("times",), {}
    elif scheme is Strategy.POWER_ADAPTATION:
        variables, fixed = ("powers",), {}
    elif scheme is Strategy.JOINT_TIME_POWER:
        variables, fixed = ("times", "powers"), {}
    elif scheme is Strategy.NODE_PLACEMENT:
        variables, fixed = ("distances",), {}
    elif scheme is CombinedOrder.PA_THEN_NP:
        powers = power_adaptation_powers(cfg.regular_placement().distances, cfg.eta, cfg.total_power)
        variables, fixed = ("distances",), {"powers": tuple(powers)}
    elif scheme is CombinedOrder.JOINT_PA_NP:
        variables, fixed = ("distances", "powers"), {}
    else:
        raise UsageError(f"{scheme.value} has no grid-oracle formulation")
    return OracleSpec(cfg, frozenset(variables), resolution, fixed)


def cmd_compare(values, out) -> int:
    cfg = _network(values)
    opts = _options(values)
    scheme = parse_scheme(_scalar(values, "strategy"))
    spec = oracle_spec_for(cfg, scheme, values["resolution"])
    oracle = grid_oracle(spec)
    result = solve(cfg, scheme, opts)
    bound = discretization_bound(spec, result)
    gap = result.objective - oracle.objective
    ok = abs(gap) <= bound or gap == 0
    lines = [f"strategy: {scheme.value}",
             f"solver objective: {_fmt(result.objective)}",
             f"oracle objective: {_fmt(oracle.objective)} (step {spec.step:g}, "
             f"{oracle.diagnostics.iterations} points)",
             f"gap (solver - oracle): {gap:.3e}  relative {gap / oracle.objective:.3e}",
             f"discretization bound: {bound:.3e}",
             f"verdict: {'agree' if ok else 'MISMATCH'}"]
    out.write("\n".join(lines) + "\n")
    if values["output"]:
        doc = {"configuration": _echo(values, cfg, opts), "solver": result.to_dict(),
               "oracle": oracle.to_dict(), "gap": gap, "bound": bound, "agree": ok}
        _write(values["output"], _dumps(doc))
    if not ok:
        return EXIT_MISMATCH
    return EXIT_OK if result.diagnostics.converged else EXIT_NONCONVERGED


_COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: solve, sweep or compare")
        values = resolve(args)
        return _COMMANDS[args.command](values, out)
    except (UsageError, TdmFairError) as exc:
        err.write(f"tdmfair: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
