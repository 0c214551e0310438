"""Brute-force grid maximizer for small instances (n <= 3).

Used only to check the solvers, so it shares no code with the kernels: rates
are evaluated directly with numpy over the whole grid at once.

Grids
-----
times
    frame fractions ``k * resolution`` with every share >= one step; the last
    node takes the remainder of the frame.
powers
    shares ``k * resolution`` of the power budget, last node takes the rest.
distances
    ``d_1 < ... < d_{n-1}`` on multiples of ``resolution`` strictly inside
    ``(0, L)``; the farthest node stays at ``L``.

When powers are searched together with times or distances, the power split
is not gridded: for each grid point the budget-spending split that equalizes
every node is found by vectorized Newton steps on the common value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import InstanceTooLargeError, InvalidArgumentError
from .model import Allocation, Diagnostics, NetworkConfig, Placement, SolveResult

FAMILIES = ("times", "powers", "distances")
MAX_POINTS = 10_000_000
MAX_NODES = 3

_SUPPORTED = {
    frozenset(),
    frozenset({"times"}),
    frozenset({"powers"}),
    frozenset({"times", "powers"}),
    frozenset({"distances"}),
    frozenset({"distances", "powers"}),
}


@dataclass(frozen=True)
class OracleSpec:
    cfg: NetworkConfig
    variables: frozenset = frozenset()
    resolution: Optional[float] = None
    fixed: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        variables = frozenset(self.variables)
        object.__setattr__(self, "variables", variables)
        unknown = variables - set(FAMILIES)
        if unknown:
            raise InvalidArgumentError(f"unknown variable families {sorted(unknown)}")
        if variables not in _SUPPORTED:
            raise InvalidArgumentError(f"unsupported variable combination {sorted(variables)}")
        if self.cfg.n > MAX_NODES:
            raise InstanceTooLargeError(f"grid oracle handles n <= {MAX_NODES}, got n={self.cfg.n}")
        if self.resolution is not None and not self.resolution > 0:
            raise InvalidArgumentError("resolution must be > 0")
        bad = set(self.fixed) - set(FAMILIES)
        if bad:
            raise InvalidArgumentError(f"unknown fixed families {sorted(bad)}")

    @property
    def uses_areas(self) -> bool:
        return "distances" in self.variables

    @property
    def step(self) -> float:
        if self.resolution is not None:
            return float(self.resolution)
        if self.uses_areas:
            return 0.01 * self.cfg.domain_length
        return 0.005

    def fixed_value(self, family) -> np.ndarray:
        cfg = self.cfg
        if family in self.fixed:
            return np.asarray(self.fixed[family], dtype=float)
        if family == "times":
            return np.full(cfg.n, 1.0 / cfg.n)
        if family == "powers":
            return np.full(cfg.n, cfg.per_node_power)
        return cfg.spacing * np.arange(1, cfg.n + 1, dtype=float)


def _simplex_count(steps: int, n: int) -> int:
    # compositions of `steps` into n parts, each part >= 1
    return math.comb(steps - 1, n - 1) if steps >= n else 0


def _simplex_grid(steps: int, n: int) -> np.ndarray:
    """Integer compositions of ``steps`` into ``n`` positive parts, lexicographic."""
    if n == 1:
        return np.array([[steps]])
    if n == 2:
        k = np.arange(1, steps)
        return np.column_stack([k, steps - k])
    k1, k2 = np.meshgrid(np.arange(1, steps), np.arange(1, steps), indexing="ij")
    keep = k1 + k2 <= steps - 1
    k1, k2 = k1[keep], k2[keep]
    return np.column_stack([k1, k2, steps - k1 - k2])


def _interior_count(spec) -> int:
    return int(math.ceil(spec.cfg.domain_length / spec.step - 1e-9)) - 1


def grid_size(spec: OracleSpec) -> int:
    n = spec.cfg.n
    if spec.uses_areas:
        return math.comb(max(_interior_count(spec), 0), n - 1)
    if spec.variables & {"times", "powers"}:
        return _simplex_count(int(round(1.0 / spec.step)), n)
    return 1


def _distance_grid(spec) -> np.ndarray:
    n = spec.cfg.n
    L = spec.cfg.domain_length
    m = _interior_count(spec)
    pts = spec.step * np.arange(1, m + 1)
    pts = pts[pts < L]
    if n == 1:
        return np.full((1, 1), L)
    if n == 2:
        free = pts[:, None]
    else:
        i, j = np.triu_indices(pts.size, k=1)
        free = np.column_stack([pts[i], pts[j]])
    return np.column_stack([free, np.full(free.shape[0], L)])


def _areas(D, L):
    """Voronoi cell lengths on ``[0, L]`` for each row of ``D``."""
    mids = 0.5 * (D[:, :-1] + D[:, 1:])
    bounds = np.column_stack([np.zeros(D.shape[0]), mids, np.full(D.shape[0], L)])
    return np.diff(bounds, axis=1)


def _rates(T, Pw, D, eta):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = T * np.log1p(Pw / (T * D ** eta))
    return np.where((T > 0) & (Pw > 0), r, 0.0)


def _newton_from_right(spend, slope, pbar, hi, iterations=200):
    """Root of ``spend(c) = pbar`` per row, from an upper bracket ``hi``.

    ``spend`` is convex and increasing in ``c``, so Newton iterates started
    at or above the root decrease monotonically onto it.
    """
    c = hi.copy()
    for _ in range(iterations):
        step = (spend(c) - pbar) / slope(c)
        step = np.maximum(step, 0.0)
        c = c - step
        if np.all(step <= 1e-15 * c):
            break
    return c


def _equalizing_powers_times(T, G, pbar):
    """Powers giving every node the same rate for each row of times ``T``."""
    # c is below every node's solo rate, which keeps each expm1 finite
    hi = np.min(T * np.log1p(pbar / (T * G)), axis=1)
    c = _newton_from_right(
        lambda c: np.sum(T * G * np.expm1(c[:, None] / T), axis=1),
        lambda c: np.sum(G * np.exp(c[:, None] / T), axis=1),
        pbar, hi)
    Pw = T * G * np.expm1(c[:, None] / T)
    return Pw * (pbar / Pw.sum(axis=1))[:, None]


def _equalizing_powers_areas(D, A, eta, pbar):
    """Powers giving every node the same rate per area with frame shares ``1/n``."""
    n = D.shape[1]
    G = D ** eta
    hi = np.min(np.log1p(n * pbar / G) / (n * A), axis=1)
    c = _newton_from_right(
        lambda c: np.sum(G / n * np.expm1(n * c[:, None] * A), axis=1),
        lambda c: np.sum(G * A * np.exp(n * c[:, None] * A), axis=1),
        pbar, hi)
    Pw = G / n * np.expm1(n * c[:, None] * A)
    return Pw * (pbar / Pw.sum(axis=1))[:, None]


def _evaluate(spec):
    """All grid points as ``(T, P, D, objective per point)``."""
    cfg = spec.cfg
    n = cfg.n
    v = spec.variables
    L = cfg.domain_length
    if v & {"times", "powers"} and not spec.uses_areas:
        steps = int(round(1.0 / spec.step))
        K = _simplex_grid(steps, n) / steps
    if spec.uses_areas:
        D = _distance_grid(spec)
        T = np.broadcast_to(spec.fixed_value("times"), D.shape)
        A = _areas(D, L)
        if "powers" in v:
            Pw = _equalizing_powers_areas(D, A, cfg.eta, cfg.total_power)
        else:
            Pw = np.broadcast_to(spec.fixed_value("powers"), D.shape)
        obj = np.min(_rates(T, Pw, D, cfg.eta) / A, axis=1)
        return T, Pw, D, obj
    D = np.broadcast_to(spec.fixed_value("distances"), (1, n))
    if "times" in v:
        T = K
        if "powers" in v:
            Pw = _equalizing_powers_times(T, D ** cfg.eta, cfg.total_power)
        else:
            Pw = np.broadcast_to(spec.fixed_value("powers"), T.shape)
    elif "powers" in v:
        Pw = K * cfg.total_power
        T = np.broadcast_to(spec.fixed_value("times"), Pw.shape)
    else:
        T = spec.fixed_value("times")[None, :]
        Pw = spec.fixed_value("powers")[None, :]
    D = np.broadcast_to(D, T.shape)
    return T, Pw, D, np.min(_rates(T, Pw, D, cfg.eta), axis=1)


def grid_oracle(spec: OracleSpec) -> SolveResult:
    """Best grid point of the max-min objective described by ``spec``.

    Ties go to the lexicographically smallest grid point (first in
    enumeration order).
    """
    size = grid_size(spec)
    if size > MAX_POINTS:
        raise InstanceTooLargeError(f"grid has {size} points, limit is {MAX_POINTS}")
    if size == 0:
        raise InvalidArgumentError("resolution too coarse: the grid is empty")
    T, Pw, D, obj = _evaluate(spec)
    k = int(np.argmax(obj))
    t, p, d = np.array(T[k]), np.array(Pw[k]), np.array(D[k])
    cfg = spec.cfg
    placement = Placement(d, cfg.domain_length if spec.uses_areas else cfg.n * cfg.spacing)
    r = _rates(t, p, d, cfg.eta)
    areas = _areas(d[None, :], placement.domain_length)[0] if spec.uses_areas else None
    name = "oracle:" + "+".join(sorted(spec.variables) or ["fixed"])
    diag = Diagnostics(int(obj.size), spec.step, True, "numpy", f"{obj.size} grid points")
    return SolveResult(name, cfg, Allocation(t, p), placement, r, float(obj[k]), diag, areas)


def _terms(spec, t, p, d):
    cfg = spec.cfg
    r = _rates(t, p, d, cfg.eta)
    if spec.uses_areas:
        return r / _areas(d[None, :], cfg.domain_length)[0]
    return r


def discretization_bound(spec: OracleSpec, result: SolveResult, factor: float = 5.0) -> float:
    """``factor * step * slope``, slope being the steepest per-node term along a grid direction.

    Grid directions move one free coordinate while the remainder coordinate
    (last time or power share) or the pinned far node absorbs the change.
    Slopes come from central differences at ``result``'s point.
    """
    t = np.array(result.allocation.times)
    p = np.array(result.allocation.powers)
    d = np.array(result.placement.distances)
    n = spec.cfg.n
    if n == 1 or not spec.variables:
        return 0.0
    slope = 0.0
    if spec.uses_areas:
        family, vec, scale = "distances", d, 1.0
    elif "times" in spec.variables:
        family, vec, scale = "times", t, 1.0
    else:
        family, vec, scale = "powers", p, spec.cfg.total_power
    h = 1e-7 * scale
    for j in range(n - 1):
        e = np.zeros(n)
        e[j] = h
        if family != "distances":
            e[-1] = -h
        vals = []
        for sgn in (1.0, -1.0):
            x = vec + sgn * e
            args = {"times": t, "powers": p, "distances": d}
            args[family] = x
            vals.append(_terms(spec, args["times"], args["powers"], args["distances"]))
        slope = max(slope, float(np.max(np.abs(vals[0] - vals[1]) / (2 * h))) * scale)
    return factor * spec.step * slope
