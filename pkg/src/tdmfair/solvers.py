"""Max-min fair throughput solvers for each cross-layer strategy."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, RateUnachievableError
from .model import (
    Allocation,
    Diagnostics,
    NetworkConfig,
    Placement,
    SolveResult,
    capacity_sup,
    rates,
    regular_placement,
    voronoi_areas,
)
from .placement import joint_placement, maximin_placement, powers_for_placement

__all__ = [
    "Strategy",
    "CombinedOrder",
    "SolverOptions",
    "solve_strategy",
    "solve_combined",
    "solve",
    "min_time_for_rate",
    "min_power_for_rate",
    "ta_upper_bound",
    "parse_scheme",
]


class Strategy(str, Enum):
    BASE_REFERENCE = "BR"
    TIME_ADAPTATION = "TA"
    POWER_ADAPTATION = "PA"
    JOINT_TIME_POWER = "TAPA"
    NODE_PLACEMENT = "NP"


class CombinedOrder(str, Enum):
    PA_THEN_NP = "PA-then-NP"
    NP_THEN_PA = "NP-then-PA"
    JOINT_PA_NP = "joint-PA-NP"


Scheme = Union[Strategy, CombinedOrder]

_ALIASES = {
    "br": Strategy.BASE_REFERENCE, "base": Strategy.BASE_REFERENCE,
    "ta": Strategy.TIME_ADAPTATION, "time": Strategy.TIME_ADAPTATION,
    "pa": Strategy.POWER_ADAPTATION, "power": Strategy.POWER_ADAPTATION,
    "tapa": Strategy.JOINT_TIME_POWER, "joint-time-power": Strategy.JOINT_TIME_POWER,
    "np": Strategy.NODE_PLACEMENT, "placement": Strategy.NODE_PLACEMENT,
    "pa-then-np": CombinedOrder.PA_THEN_NP, "pa-np": CombinedOrder.PA_THEN_NP,
    "np-then-pa": CombinedOrder.NP_THEN_PA, "np-pa": CombinedOrder.NP_THEN_PA,
    "joint-pa-np": CombinedOrder.JOINT_PA_NP, "joint": CombinedOrder.JOINT_PA_NP,
    "pa+np": CombinedOrder.JOINT_PA_NP,
}


def parse_scheme(name) -> Scheme:
    """Strategy or combined order from its tag or a case-insensitive alias."""
    if isinstance(name, (Strategy, CombinedOrder)):
        return name
    key = str(name).strip().lower().replace("_", "-")
    for tag in (*Strategy, *CombinedOrder):
        if key == tag.value.lower():
            return tag
    try:
        return _ALIASES[key]
    except KeyError:
        raise InvalidArgumentError(f"unknown strategy {name!r}") from None


@dataclass(frozen=True)
class SolverOptions:
    rate_tolerance: float = 1e-10
    root_tolerance: float = 1e-12
    max_iterations: int = 200
    placement_restarts: int = 16
    placement_seed: int = 0
    backend: Optional[str] = None

    def __post_init__(self):
        if not (self.rate_tolerance > 0 and self.root_tolerance > 0):
            raise InvalidArgumentError("tolerances must be > 0")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be a positive integer")
        if int(self.placement_restarts) != self.placement_restarts or self.placement_restarts < 1:
            raise InvalidArgumentError("placement_restarts must be a positive integer")

    def as_dict(self) -> dict:
        return {
            "rate_tolerance": self.rate_tolerance,
            "root_tolerance": self.root_tolerance,
            "max_iterations": self.max_iterations,
            "placement_restarts": self.placement_restarts,
            "placement_seed": self.placement_seed,
        }


def min_time_for_rate(c: float, p: float, d: float, eta: float,
                      opts: Optional[SolverOptions] = None) -> float:
    """Frame fraction at which a node with power ``p`` at distance ``d`` reaches rate ``c``."""
    opts = opts or SolverOptions()
    if not c >= 0:
        raise InvalidArgumentError(f"rate must be >= 0, got {c!r}")
    sup = capacity_sup(p, d, eta)
    if c >= sup:
        raise RateUnachievableError(f"rate {c!r} is not below the supremum {sup!r}")
    t, _ = kernels.get(opts.backend).min_time_for_rate(c, sup, opts.max_iterations)
    return t


def min_power_for_rate(c: float, t: float, d: float, eta: float) -> float:
    """Average power reaching rate ``c`` in frame fraction ``t``: ``t d^eta (e^{c/t} - 1)``."""
    if not c >= 0:
        raise InvalidArgumentError(f"rate must be >= 0, got {c!r}")
    if not d > 0:
        raise InvalidArgumentError(f"distance must be > 0, got {d!r}")
    if c == 0:
        return 0.0
    if not t > 0:
        raise InvalidArgumentError("a positive rate needs a positive time fraction")
    return t * d ** eta * math.expm1(c / t)


def ta_upper_bound(cfg: NetworkConfig) -> float:
    """Rate of the farthest node when it owns the whole frame."""
    return math.log1p(cfg.per_node_power / (cfg.n * cfg.spacing) ** cfg.eta)


def _result(name, cfg, times, powers, placement, diag, with_areas=False):
    times = np.asarray(times, dtype=float)
    powers = np.asarray(powers, dtype=float)
    r = rates(times, powers, placement.distances, cfg.eta)
    areas = None
    if with_areas:
        areas = voronoi_areas(placement).areas
        objective = float(np.min(r / areas))
    else:
        objective = float(np.min(r))
    return SolveResult(name, cfg, Allocation(times, powers), placement, r, objective, diag, areas)


def _single_node(cfg, name, opts, with_areas=False, power=None):
    if with_areas:
        placement = Placement([cfg.domain_length], cfg.domain_length)
    else:
        placement = regular_placement(1, cfg.spacing)
    diag = Diagnostics(0, 0.0, True, kernels.get(opts.backend).name, "single node")
    power = cfg.total_power if power is None else power
    return _result(name, cfg, [1.0], [power], placement, diag, with_areas)


def _base_reference(cfg, opts, kern):
    n = cfg.n
    placement = cfg.regular_placement()
    diag = Diagnostics(0, 0.0, True, kern.name, "closed form")
    return _result(Strategy.BASE_REFERENCE.value, cfg, np.full(n, 1.0 / n),
                   np.full(n, cfg.per_node_power), placement, diag)


def _time_adaptation(cfg, opts, kern):
    n = cfg.n
    placement = cfg.regular_placement()
    a = cfg.per_node_power / placement.distances ** cfg.eta
    c, times, it, residual = kern.ta_equalize(a, opts.rate_tolerance, opts.max_iterations)
    # unused frame goes to the longest slot, whose rate is flattest in t
    k = int(np.argmax(times))
    times[k] += 1.0 - times.sum()
    diag = Diagnostics(it, residual, residual <= opts.rate_tolerance, kern.name)
    return _result(Strategy.TIME_ADAPTATION.value, cfg, times,
                   np.full(n, cfg.per_node_power), placement, diag)


def power_adaptation_powers(distances, eta, total_power) -> np.ndarray:
    """Closed-form max-min powers with equal frame shares: proportional to ``d_i**eta``."""
    g = np.asarray(distances, dtype=float) ** eta
    return g * (total_power / g.sum())


def _power_adaptation(cfg, opts, kern):
    n = cfg.n
    placement = cfg.regular_placement()
    powers = power_adaptation_powers(placement.distances, cfg.eta, cfg.total_power)
    diag = Diagnostics(0, 0.0, True, kern.name, "closed form")
    return _result(Strategy.POWER_ADAPTATION.value, cfg, np.full(n, 1.0 / n), powers,
                   placement, diag)


def _joint_time_power(cfg, opts, kern):
    placement = cfg.regular_placement()
    g = placement.distances ** cfg.eta
    c, times, powers, it, residual = kern.tapa_equalize(g, cfg.total_power, opts.max_iterations)
    times = times / times.sum()
    powers = powers * (cfg.total_power / powers.sum())
    diag = Diagnostics(it, residual, residual <= opts.rate_tolerance, kern.name)
    return _result(Strategy.JOINT_TIME_POWER.value, cfg, times, powers, placement, diag)


def _placement_result(name, cfg, powers, outcome, kern, notes=""):
    n = cfg.n
    placement = Placement(outcome.distances, cfg.domain_length)
    diag = Diagnostics(outcome.iterations, outcome.residual, outcome.converged, kern.name,
                       notes or outcome.method)
    return _result(name, cfg, np.full(n, 1.0 / n), powers, placement, diag, with_areas=True)


def _node_placement(cfg, opts, kern):
    powers = np.full(cfg.n, cfg.per_node_power)
    outcome = maximin_placement(powers, cfg.eta, cfg.domain_length, opts, kern)
    return _placement_result(Strategy.NODE_PLACEMENT.value, cfg, powers, outcome, kern)


_STRATEGIES = {
    Strategy.BASE_REFERENCE: _base_reference,
    Strategy.TIME_ADAPTATION: _time_adaptation,
    Strategy.POWER_ADAPTATION: _power_adaptation,
    Strategy.JOINT_TIME_POWER: _joint_time_power,
    Strategy.NODE_PLACEMENT: _node_placement,
}


def solve_strategy(cfg: NetworkConfig, strategy, opts: Optional[SolverOptions] = None) -> SolveResult:
    """Max-min allocation for one of the single-dimension strategies.

    Placement-based strategies report the smallest rate per unit service area;
    the others report the smallest rate. Rates and objective are recomputed from
    the returned allocation and placement.
    """
    opts = opts or SolverOptions()
    strategy = parse_scheme(strategy)
    if not isinstance(strategy, Strategy):
        raise InvalidArgumentError(f"{strategy.value} is a combined order; use solve_combined")
    kern = kernels.get(opts.backend)
    if cfg.n == 1 and strategy is not Strategy.BASE_REFERENCE:
        fixed = strategy in (Strategy.TIME_ADAPTATION, Strategy.NODE_PLACEMENT)
        return _single_node(cfg, strategy.value, opts, strategy is Strategy.NODE_PLACEMENT,
                            cfg.per_node_power if fixed else None)
    return _STRATEGIES[strategy](cfg, opts, kern)


def _merge(*diags):
    return Diagnostics(
        sum(d.iterations for d in diags),
        max(d.residual for d in diags),
        all(d.converged for d in diags),
        diags[0].backend,
        "; ".join(d.notes for d in diags if d.notes),
    )


def _pa_then_np(cfg, opts, kern):
    powers = power_adaptation_powers(cfg.regular_placement().distances, cfg.eta, cfg.total_power)
    outcome = maximin_placement(powers, cfg.eta, cfg.domain_length, opts, kern)
    return _placement_result(CombinedOrder.PA_THEN_NP.value, cfg, powers, outcome, kern)


def _np_then_pa(cfg, opts, kern):
    equal = np.full(cfg.n, cfg.total_power / cfg.n)
    outcome = maximin_placement(equal, cfg.eta, cfg.domain_length, opts, kern)
    powers, c, it, width = powers_for_placement(
        outcome.distances, cfg.eta, cfg.domain_length, cfg.total_power, opts, kern)
    res = _placement_result(CombinedOrder.NP_THEN_PA.value, cfg, powers, outcome, kern)
    power_diag = Diagnostics(it, width, width <= opts.rate_tolerance, kern.name, "power bisection")
    return replace(res, diagnostics=_merge(res.diagnostics, power_diag))


def _joint_pa_np(cfg, opts, kern):
    seeds = [_pa_then_np(cfg, opts, kern).placement.distances,
             _np_then_pa(cfg, opts, kern).placement.distances]
    outcome = joint_placement(cfg.eta, cfg.domain_length, cfg.total_power, cfg.n, opts,
                              seeds, kern)
    return _placement_result(CombinedOrder.JOINT_PA_NP.value, cfg, outcome.powers, outcome, kern)


_ORDERS = {
    CombinedOrder.PA_THEN_NP: _pa_then_np,
    CombinedOrder.NP_THEN_PA: _np_then_pa,
    CombinedOrder.JOINT_PA_NP: _joint_pa_np,
}


def solve_combined(cfg: NetworkConfig, order, opts: Optional[SolverOptions] = None) -> SolveResult:
    """Power adaptation combined with node placement, equal frame shares throughout."""
    opts = opts or SolverOptions()
    order = parse_scheme(order)
    if not isinstance(order, CombinedOrder):
        raise InvalidArgumentError(f"{order.value} is not a combined order; use solve_strategy")
    kern = kernels.get(opts.backend)
    if cfg.n == 1:
        return _single_node(cfg, order.value, opts, with_areas=True)
    return _ORDERS[order](cfg, opts, kern)


def solve(cfg: NetworkConfig, scheme, opts: Optional[SolverOptions] = None) -> SolveResult:
    """Dispatch to :func:`solve_strategy` or :func:`solve_combined`."""
    scheme = parse_scheme(scheme)
    if isinstance(scheme, CombinedOrder):
        return solve_combined(cfg, scheme, opts)
    return solve_strategy(cfg, scheme, opts)
