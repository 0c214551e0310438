"""Network model for a linear, single-hop, TDM data-aggregating network.

All quantities are normalized: frame time, bandwidth and noise power are 1,
so a node scheduled for a fraction ``t`` of the frame with average power ``p``
at distance ``d`` from the sink achieves ``t * log(1 + (p / t) / d**eta)``
nats per frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegeneratePlacementError, InvalidArgumentError

__all__ = [
    "NetworkConfig",
    "Placement",
    "Allocation",
    "ServiceAreas",
    "Diagnostics",
    "SolveResult",
    "AREA_MODELS",
    "capacity",
    "capacity_sup",
    "rates",
    "regular_placement",
    "voronoi_areas",
]

AREA_MODELS = ("voronoi", "extended")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidArgumentError("expected a one-dimensional vector")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class NetworkConfig:
    """Scenario parameters.

    ``total_power`` defaults to ``n * per_node_power``. ``frame_time``,
    ``bandwidth`` and ``noise_power`` exist only to be rejected when they
    differ from 1.
    """

    n: int
    eta: float = 2.0
    per_node_power: float = 1.0
    total_power: Optional[float] = None
    spacing: float = 1.0
    frame_time: float = 1.0
    bandwidth: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.eta >= 2:
            raise InvalidArgumentError(f"eta must be >= 2, got {self.eta!r}")
        if not self.per_node_power > 0:
            raise InvalidArgumentError(
                f"per_node_power must be > 0, got {self.per_node_power!r}")
        if self.total_power is None:
            object.__setattr__(self, "total_power", self.n * float(self.per_node_power))
        if not self.total_power > 0:
            raise InvalidArgumentError(f"total_power must be > 0, got {self.total_power!r}")
        if not self.spacing > 0:
            raise InvalidArgumentError(f"spacing must be > 0, got {self.spacing!r}")
        for name in ("frame_time", "bandwidth", "noise_power"):
            if getattr(self, name) != 1.0:
                raise InvalidArgumentError(
                    f"{name} must be 1.0 in the normalized model, got {getattr(self, name)!r}")
        for name in ("eta", "per_node_power", "total_power", "spacing"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def domain_length(self) -> float:
        return self.n * self.spacing

    def regular_placement(self) -> "Placement":
        return regular_placement(self.n, self.spacing)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "eta": self.eta,
            "per_node_power": self.per_node_power,
            "total_power": self.total_power,
            "spacing": self.spacing,
        }


@dataclass(frozen=True, eq=False)
class Placement:
    """Ordered node distances from the sink on the segment ``[0, domain_length]``."""

    distances: np.ndarray
    domain_length: Optional[float] = None

    def __post_init__(self):
        d = _frozen(self.distances)
        object.__setattr__(self, "distances", d)
        if d.size == 0:
            raise InvalidArgumentError("placement needs at least one node")
        if self.domain_length is None:
            object.__setattr__(self, "domain_length", float(d.size))
        L = float(self.domain_length)
        object.__setattr__(self, "domain_length", L)
        if not np.all(np.isfinite(d)) or d[0] <= 0:
            raise InvalidArgumentError("distances must be finite and strictly positive")
        if np.any(np.diff(d) < 0):
            raise InvalidArgumentError("distances must be non-decreasing")
        if d[-1] > L:
            raise InvalidArgumentError(
                f"farthest node at {d[-1]!r} lies beyond the domain length {L!r}")

    @property
    def n(self) -> int:
        return self.distances.size

    def __eq__(self, other):
        if not isinstance(other, Placement):
            return NotImplemented
        return (self.domain_length == other.domain_length
                and np.array_equal(self.distances, other.distances))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Allocation:
    """Per-node frame fractions and average powers."""

    times: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        t = _frozen(self.times)
        p = _frozen(self.powers)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "powers", p)
        if t.shape != p.shape:
            raise InvalidArgumentError("times and powers must have the same length")
        if np.any(t < 0) or np.any(p < 0):
            raise InvalidArgumentError("times and powers must be non-negative")
        if t.sum() > 1 + 1e-9:
            raise InvalidArgumentError(f"time fractions sum to {t.sum()!r} > 1")

    def within_budget(self, total_power: float, tol: float = 1e-9) -> bool:
        return bool(self.powers.sum() <= total_power * (1 + tol))


@dataclass(frozen=True, eq=False)
class ServiceAreas:
    areas: np.ndarray
    domain_length: float

    def __post_init__(self):
        object.__setattr__(self, "areas", _frozen(self.areas))


@dataclass(frozen=True)
class Diagnostics:
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    backend: str = ""
    notes: str = ""


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of one solve.

    ``objective`` is the smallest per-node rate, or the smallest rate per unit
    service area when ``areas`` is set (placement strategies).
    """

    strategy: str
    config: NetworkConfig
    allocation: Allocation
    placement: Placement
    rates: np.ndarray
    objective: float
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    areas: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "rates", _frozen(self.rates))
        if self.areas is not None:
            object.__setattr__(self, "areas", _frozen(self.areas))

    @property
    def per_node_objective(self) -> np.ndarray:
        if self.areas is None:
            return self.rates
        return self.rates / self.areas

    def to_dict(self) -> dict:
        out = {
            "strategy": self.strategy,
            "config": self.config.as_dict(),
            "distances": self.placement.distances.tolist(),
            "domain_length": self.placement.domain_length,
            "times": self.allocation.times.tolist(),
            "powers": self.allocation.powers.tolist(),
            "rates": self.rates.tolist(),
            "objective": self.objective,
            "diagnostics": {
                "iterations": self.diagnostics.iterations,
                "residual": self.diagnostics.residual,
                "converged": self.diagnostics.converged,
                "backend": self.diagnostics.backend,
                "notes": self.diagnostics.notes,
            },
        }
        if self.areas is not None:
            out["areas"] = self.areas.tolist()
        return out


def _check_rate_args(p, d):
    if not d > 0:
        raise InvalidArgumentError(f"distance must be > 0, got {d!r}")
    if not p >= 0:
        raise InvalidArgumentError(f"power must be >= 0, got {p!r}")


def capacity(t: float, p: float, d: float, eta: float) -> float:
    """Rate ``t * log(1 + (p / t) / d**eta)`` in nats, 0 when ``t`` or ``p`` is 0."""
    _check_rate_args(p, d)
    if not t >= 0:
        raise InvalidArgumentError(f"time fraction must be >= 0, got {t!r}")
    if t == 0 or p == 0:
        return 0.0
    a = p / d ** eta
    return t * math.log1p(a / t)


def capacity_sup(p: float, d: float, eta: float) -> float:
    """Supremum of :func:`capacity` over ``t``, i.e. ``p / d**eta``."""
    _check_rate_args(p, d)
    return p / d ** eta


def rates(times, powers, distances, eta: float) -> np.ndarray:
    """Vectorized :func:`capacity` over nodes."""
    t = np.asarray(times, dtype=float)
    p = np.asarray(powers, dtype=float)
    d = np.asarray(distances, dtype=float)
    a = p / d ** eta
    active = (t > 0) & (p > 0)
    out = np.zeros(np.broadcast(t, p, d).shape)
    ts = np.broadcast_to(t, out.shape)[active]
    out[active] = ts * np.log1p(np.broadcast_to(a, out.shape)[active] / ts)
    return out


def regular_placement(n: int, spacing: float = 1.0) -> Placement:
    """Nodes at ``spacing, 2*spacing, ..., n*spacing`` on a domain of length ``n*spacing``."""
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    if not spacing > 0:
        raise InvalidArgumentError(f"spacing must be > 0, got {spacing!r}")
    return Placement(spacing * np.arange(1, int(n) + 1, dtype=float), n * spacing)


def voronoi_areas(placement: Placement, model: str = "voronoi") -> ServiceAreas:
    """Lengths of the 1-D Voronoi cells of each node.

    With ``model="voronoi"`` the cells tile ``[0, L]``: interior boundaries sit
    at midpoints between neighbours, the first cell starts at the sink and the
    last one ends at ``L``.

    With ``model="extended"`` the two outer boundaries are reflected instead:
    the first cell starts half a gap before ``d_1`` and the last one ends half a
    gap after ``d_n``, so a regular placement gets unit-length cells. A single
    node uses its distance to the sink as the gap.
    """
    d = placement.distances
    n = d.size
    if model == "voronoi":
        bounds = np.empty(n + 1)
        bounds[0] = 0.0
        bounds[1:n] = 0.5 * (d[:-1] + d[1:])
        bounds[n] = placement.domain_length
        length = placement.domain_length
    elif model == "extended":
        if n == 1:
            first_gap = last_gap = d[0]
        else:
            first_gap = d[1] - d[0]
            last_gap = d[-1] - d[-2]
        bounds = np.empty(n + 1)
        bounds[0] = max(0.0, d[0] - 0.5 * first_gap)
        bounds[1:n] = 0.5 * (d[:-1] + d[1:])
        bounds[n] = d[-1] + 0.5 * last_gap
        length = bounds[n] - bounds[0]
    else:
        raise InvalidArgumentError(f"unknown area model {model!r}; expected one of {AREA_MODELS}")
    areas = np.diff(bounds)
    if np.any(areas <= 0):
        raise DegeneratePlacementError(
            f"placement {d.tolist()} leaves a zero-length service cell")
    return ServiceAreas(areas, float(length))
