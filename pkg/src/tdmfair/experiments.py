"""Parameter sweeps producing throughput ratios against the base reference."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgumentError
from .model import NetworkConfig
from .solvers import SolverOptions, Strategy, parse_scheme, solve

CSV_HEADER = ("strategy", "n", "P", "eta", "objective", "base_objective", "ratio", "converged")

DEFAULT_N_VALUES = tuple(range(1, 31)) + (40, 50, 75, 100, 150, 200)
DEFAULT_POWER_VALUES = (0.1, 1.0, 10.0)
DEFAULT_ETA_VALUES = (2.0, 3.0, 4.0)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of scenarios to solve.

    Parameters
    ----------
    strategies : sequence
        Strategy or combined-order tags (aliases accepted). The base
        reference is always solved as the ratio denominator; listing it
        adds rows with ratio 1.
    n_values : sequence of int
        Node counts, ascending.
    power_values : sequence of float
        Per-node average power ``P``; the network budget is ``n * P``.
    eta_values : sequence of float
        Path-loss exponents.
    spacing : float
        Distance of the nearest node.
    """

    strategies: tuple = ("TA",)
    n_values: tuple = DEFAULT_N_VALUES
    power_values: tuple = DEFAULT_POWER_VALUES
    eta_values: tuple = DEFAULT_ETA_VALUES
    spacing: float = 1.0

    def __post_init__(self):
        schemes = tuple(parse_scheme(s) for s in self.strategies)
        object.__setattr__(self, "strategies", schemes)
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "power_values", tuple(float(p) for p in self.power_values))
        object.__setattr__(self, "eta_values", tuple(float(e) for e in self.eta_values))
        for name in ("strategies", "n_values", "power_values", "eta_values"):
            if not getattr(self, name):
                raise InvalidArgumentError(f"{name} must be non-empty")
        if list(self.n_values) != sorted(self.n_values):
            raise InvalidArgumentError("n_values must be sorted ascending")
        if min(self.n_values) < 1:
            raise InvalidArgumentError("n_values must be >= 1")

    def as_dict(self) -> dict:
        return {
            "strategies": [s.value for s in self.strategies],
            "n_values": list(self.n_values),
            "power_values": list(self.power_values),
            "eta_values": list(self.eta_values),
            "spacing": self.spacing,
        }


@dataclass(frozen=True)
class RatioRow:
    strategy: str
    n: int
    P: float
    eta: float
    objective: float
    base_objective: float
    ratio: float
    converged: bool


@dataclass
class RatioTable:
    rows: List[RatioRow]
    metadata: dict = field(default_factory=dict)

    def select(self, strategy=None, n=None, P=None, eta=None) -> List[RatioRow]:
        """Rows matching every given key."""
        tag = parse_scheme(strategy).value if strategy is not None else None
        return [r for r in self.rows
                if (tag is None or r.strategy == tag)
                and (n is None or r.n == n)
                and (P is None or r.P == P)
                and (eta is None or r.eta == eta)]


def _config(n, P, eta, spacing):
    return NetworkConfig(n=n, eta=eta, per_node_power=P, spacing=spacing)


def run_sweep(spec: SweepSpec, opts: Optional[SolverOptions] = None) -> RatioTable:
    """Solve every ``(strategy, n, P, eta)`` of ``spec``.

    Rows come out ordered by the listed strategy order, then ``n``, ``P`` and
    ``eta``. Unconverged solves are kept and flagged.
    """
    opts = opts or SolverOptions()
    base = {}
    for n in spec.n_values:
        for P in spec.power_values:
            for eta in spec.eta_values:
                cfg = _config(n, P, eta, spec.spacing)
                base[n, P, eta] = solve(cfg, Strategy.BASE_REFERENCE, opts).objective
    rows = []
    for scheme in spec.strategies:
        for n in spec.n_values:
            for P in spec.power_values:
                for eta in spec.eta_values:
                    res = solve(_config(n, P, eta, spec.spacing), scheme, opts)
                    b = base[n, P, eta]
                    rows.append(RatioRow(scheme.value, n, P, eta, res.objective, b,
                                         res.objective / b, res.diagnostics.converged))
    metadata = {
        "spec": spec.as_dict(),
        "solver_options": opts.as_dict(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return RatioTable(rows, metadata)


def format_number(x: float) -> str:
    """Decimal notation with 12 significant digits."""
    return np.format_float_positional(float(x), precision=12, unique=False,
                                      fractional=False, trim="-")


def _lines(table: RatioTable) -> Iterable[str]:
    yield ",".join(CSV_HEADER)
    for r in table.rows:
        yield ",".join([
            r.strategy, str(r.n), format_number(r.P), format_number(r.eta),
            format_number(r.objective), format_number(r.base_objective),
            format_number(r.ratio), "true" if r.converged else "false",
        ])


def csv_text(table: RatioTable) -> str:
    return "".join(line + "\n" for line in _lines(table))


def emit_csv(table: RatioTable, destination: Union[str, os.PathLike, io.TextIOBase]) -> int:
    """Write ``table`` as CSV to a path or open text stream.

    Returns
    -------
    int
        Number of bytes written (UTF-8).

    Raises
    ------
    OSError
        When the destination cannot be written; the message names it.
    """
    text = csv_text(table)
    data = text.encode("utf-8")
    if hasattr(destination, "write"):
        try:
            destination.write(text)
        except OSError as exc:
            name = getattr(destination, "name", repr(destination))
            raise OSError(exc.errno, f"cannot write CSV to {name}: {exc.strerror or exc}") from exc
        return len(data)
    try:
        with open(destination, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {os.fspath(destination)}: "
                                 f"{exc.strerror or exc}") from exc
    return len(data)


def read_csv(source: Union[str, os.PathLike, io.TextIOBase]) -> RatioTable:
    """Parse CSV written by :func:`emit_csv`."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise InvalidArgumentError(f"unexpected CSV header {header!r}")
    rows = []
    for rec in reader:
        s, n, P, eta, obj, base, ratio, conv = rec
        rows.append(RatioRow(s, int(n), float(P), float(eta), float(obj), float(base),
                             float(ratio), conv == "true"))
    return RatioTable(rows)


def pa_ratio_reference(n: int, P: float) -> float:
    """Power-adaptation ratio for ``eta = 2`` on a regular placement, in closed form."""
    return float(np.log1p(6 * n * P / ((n + 1) * (2 * n + 1))) / np.log1p(P / n))


def shape_checks(table: RatioTable) -> dict:
    """Qualitative trends of the ratio curves, each as ``(ok, detail)``.

    Checks only what the table has rows for.
    """
    out = {}
    by = {(r.strategy, r.n, r.P, r.eta): r.ratio for r in table.rows}
    keys = sorted({(r.n, r.P, r.eta) for r in table.rows})

    def have(tag):
        return any(k[0] == tag for k in by)

    if have("TA"):
        bad = [k for k in keys if ("TA",) + k in by and by[("TA",) + k] < 1 - 1e-12]
        for P in {k[1] for k in keys}:
            ns = sorted(k[0] for k in keys if k[1] == P and k[2] == 2.0 and k[0] >= 5
                        and ("TA",) + k in by)
            seq = [by["TA", n, P, 2.0] for n in ns]
            bad += [("TA", ns[i + 1], P) for i in range(len(seq) - 1) if seq[i + 1] > seq[i] + 1e-12]
        out["TA ratio >= 1 and non-increasing for n >= 5"] = (not bad, bad)
    if have("TAPA"):
        bad = [k for k in keys if ("TAPA",) + k in by and (
            by[("TAPA",) + k] < by.get(("PA",) + k, -np.inf) - 1e-8
            or by[("TAPA",) + k] < by.get(("TA",) + k, -np.inf) - 1e-8)]
        out["TAPA >= PA and TA"] = (not bad, bad)
    if have("NP"):
        bad = [k for k in keys if ("NP",) + k in by and by[("NP",) + k] < 1 - 1e-12]
        out["NP ratio >= 1"] = (not bad, bad)
    if have("joint-PA-NP"):
        bad = [k for k in keys if ("joint-PA-NP",) + k in by and (
            by[("joint-PA-NP",) + k] < by.get(("PA-then-NP",) + k, -np.inf) - 1e-6
            or by[("joint-PA-NP",) + k] < by.get(("NP-then-PA",) + k, -np.inf) - 1e-6)]
        out["joint PA+NP >= both sequential orders"] = (not bad, bad)
    return out


__all__ = [
    "CSV_HEADER",
    "SweepSpec",
    "RatioRow",
    "RatioTable",
    "run_sweep",
    "emit_csv",
    "csv_text",
    "read_csv",
    "format_number",
    "pa_ratio_reference",
    "shape_checks",
]
