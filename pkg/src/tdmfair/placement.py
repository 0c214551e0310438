"""Placement search for the rate-per-area objectives.

Nodes keep equal frame shares ``1/n``. The farthest node is pinned at the end
of the serviced segment; without that pin every node could crowd the sink and
the rate per area would grow without bound.

Two routes are used:

* exact equalization: walk back from the pinned node giving every cell the
  area that makes its rate per area equal to a common value, and bisect on
  that value until the cells tile the segment (``kernels.np_equalize``);
* an epigraph formulation solved with SLSQP from several starts, used when
  no ordered equalizing placement exists.

The joint power/placement problem is smooth once powers are eliminated and
runs L-BFGS from several starts.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import DegeneratePlacementError
from .model import Placement, voronoi_areas

@dataclass
class PlacementOutcome:
    distances: np.ndarray
    objective: float
    iterations: int
    residual: float
    converged: bool
    method: str
    powers: Optional[np.ndarray] = None


def area_matrix(n: int, length: float):
    """``(K, k0)`` such that the Voronoi cell lengths are ``K @ d + k0``."""
    K = np.zeros((n, n))
    k0 = np.zeros(n)
    for i in range(n):
        if i < n - 1:
            K[i, i] += 0.5
            K[i, i + 1] += 0.5
        else:
            k0[i] += length
        if i > 0:
            K[i, i - 1] -= 0.5
            K[i, i] -= 0.5
    return K, k0


def node_rates(distances, powers, eta):
    """Rates with equal frame shares ``1/n``."""
    n = len(distances)
    return np.log1p(n * np.asarray(powers) / np.asarray(distances) ** eta) / n


def min_rate_per_area(distances, powers, eta, length) -> float:
    try:
        areas = voronoi_areas(Placement(distances, length)).areas
    except (DegeneratePlacementError, ValueError):
        return -np.inf
    return float(np.min(node_rates(distances, powers, eta) / areas))


def _pick(candidates):
    """Best objective; near-ties go to the lexicographically smallest placement."""
    best = max(c.objective for c in candidates)
    tol = 1e-12 * abs(best)
    tied = [c for c in candidates if c.objective >= best - tol]
    return min(tied, key=lambda c: tuple(c.distances.tolist()))


def _starts(n, length, restarts, seed):
    """Regular placement plus ``restarts - 1`` seeded gap perturbations, far node pinned."""
    regular = length * np.arange(1, n + 1) / n
    out = [regular]
    rng = np.random.default_rng(seed)
    for _ in range(restarts - 1):
        gaps = np.exp(0.5 * rng.standard_normal(n))
        out.append(length * np.cumsum(gaps) / gaps.sum())
    for d in out:
        d[-1] = length
    return out


def _ordering_constraints(n, length):
    """Linear constraints ``d_1 <= ... <= d_{n-1} <= length`` on the free coordinates."""
    m = n - 1
    A = np.zeros((m, m + 1))
    b = np.zeros(m)
    for j in range(m - 1):
        A[j, j] = -1.0
        A[j, j + 1] = 1.0
    A[m - 1, m - 1] = -1.0
    b[m - 1] = length
    return {"type": "ineq", "fun": lambda y: A @ y + b, "jac": lambda y: A}


def _slsqp(fun, x0, **kw):
    with warnings.catch_warnings():
        # SLSQP clips trial points to the bounds and warns each time
        warnings.simplefilter("ignore", RuntimeWarning)
        return minimize(fun, x0, method="SLSQP", **kw)


def _epigraph(powers, eta, length, start, opts):
    """Maximize the smallest rate per area from ``start`` with SLSQP."""
    powers = np.asarray(powers, dtype=float)
    n = powers.size
    K, k0 = area_matrix(n, length)
    s_ref = min_rate_per_area(start, powers, eta, length)
    if not np.isfinite(s_ref) or s_ref <= 0:
        return None

    def full(y):
        return np.append(y[:-1], length)

    def cons(y):
        d = full(y)
        return (node_rates(d, powers, eta) - y[-1] * s_ref * (K @ d + k0)) / s_ref

    def cons_jac(y):
        d = full(y)
        dC = -eta * powers / (d * (d ** eta + n * powers))
        J = np.empty((n, n))
        J[:, :-1] = -y[-1] * K[:, :-1]
        J[np.arange(n - 1), np.arange(n - 1)] += dC[:-1] / s_ref
        J[:, -1] = -(K @ d + k0)
        return J

    y0 = np.append(start[:-1], 1.0)
    bounds = [(1e-12 * length, length)] * (n - 1) + [(0.0, None)]
    res = _slsqp(
        lambda y: -y[-1], y0,
        jac=lambda y: np.append(np.zeros(n - 1), -1.0),
        bounds=bounds,
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac},
                     _ordering_constraints(n, length)],
        options={"maxiter": max(opts.max_iterations, 20 * n), "ftol": 1e-12},
    )
    d = np.maximum.accumulate(np.clip(full(res.x), 1e-12 * length, length))
    return PlacementOutcome(d, min_rate_per_area(d, powers, eta, length),
                            int(res.nit), float(abs(res.fun + res.x[-1])),
                            bool(res.success), "slsqp")


def maximin_placement(powers, eta, length, opts, kern=None) -> PlacementOutcome:
    """Placement maximizing the smallest rate per area for frozen powers."""
    kern = kern or kernels.default
    powers = np.asarray(powers, dtype=float)
    n = powers.size
    if n == 1:
        d = np.array([length])
        return PlacementOutcome(d, min_rate_per_area(d, powers, eta, length), 0, 0.0, True, "pinned")
    c, d, it, width, status = kern.np_equalize(powers, eta, length, opts.max_iterations)
    if status == kernels.EQUALIZED:
        return PlacementOutcome(d, min_rate_per_area(d, powers, eta, length), it, width,
                                width <= opts.rate_tolerance, "equalized")
    candidates = []
    for start in _starts(n, length, opts.placement_restarts, opts.placement_seed):
        out = _epigraph(powers, eta, length, start, opts)
        if out is not None and np.isfinite(out.objective):
            out.iterations += it
            candidates.append(out)
    return _pick(candidates)


def powers_for_placement(distances, eta, length, pbar, opts, kern=None):
    """Power split equalizing rate per area on a fixed placement.

    Returns ``(powers, common value, iterations, relative bracket width)``.
    """
    kern = kern or kernels.default
    d = np.asarray(distances, dtype=float)
    areas = voronoi_areas(Placement(d, length)).areas
    c, p, it, width = kern.powers_for_areas(d ** eta, areas, pbar, opts.max_iterations)
    return p, c, it, width


def _joint_local(eta, length, pbar, start, opts, kern):
    """Maximize the optimal-power common value over placements.

    For a placement with cells ``A`` the best common value ``s`` spends the
    budget exactly: ``sum_i (d_i**eta / n) * expm1(n s A_i) = pbar``. That
    defines ``s(d)`` smoothly, with its gradient from implicit
    differentiation. Gaps are ``length * softmax(z)``, which keeps the nodes
    ordered and the far node at ``length``; L-BFGS runs on ``z``.
    """
    n = start.size
    K, k0 = area_matrix(n, length)
    gaps0 = np.diff(np.concatenate([[0.0], start]))
    if np.any(gaps0 <= 0):
        return None
    z0 = np.log(gaps0 / length)
    _, s_ref, _, _ = powers_for_placement(start, eta, length, pbar, opts, kern)
    if not s_ref > 0:
        return None
    iters = [0]

    def placement(z):
        w = np.exp(z - z.max())
        w /= w.sum()
        gaps = length * w
        d = np.cumsum(gaps)
        d[-1] = length
        return d, gaps, w

    def value_and_grad(z):
        d, gaps, w = placement(z)
        A = K @ d + k0
        if np.any(A <= 0):
            return 1.0, np.zeros(n)
        g = d ** eta
        s, _, it, _ = kern.powers_for_areas(g, A, pbar, opts.max_iterations)
        iters[0] += it
        e = np.exp(n * s * A)
        dF_dd = eta * d ** (eta - 1) * np.expm1(n * s * A) / n + s * (g * e) @ K
        dF_ds = np.sum(g * A * e)
        ds_dd = -dF_dd / dF_ds
        R = np.cumsum(ds_dd[::-1])[::-1]
        grad_z = gaps * R - w * np.dot(gaps, R)
        return -s / s_ref, -grad_z / s_ref

    res = minimize(value_and_grad, z0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max(opts.max_iterations, 20 * n),
                            "ftol": 1e-15, "gtol": 1e-12})
    d = placement(res.x)[0]
    try:
        powers, s, it, width = powers_for_placement(d, eta, length, pbar, opts, kern)
    except DegeneratePlacementError:
        return None
    objective = min_rate_per_area(d, powers, eta, length)
    # a failed line search at a vanishing gradient means s(d) hit its
    # rounding floor, which is as converged as the objective can get
    stalled = res.status == 2 and np.max(np.abs(res.jac)) <= math.sqrt(np.finfo(float).eps)
    return PlacementOutcome(d, objective, int(res.nit) + iters[0] + it, width,
                            bool(res.success or stalled), "joint-lbfgs", powers)


def joint_placement(eta, length, pbar, n, opts, seeds: Sequence[np.ndarray] = (),
                    kern=None) -> PlacementOutcome:
    """Placement and powers maximizing the smallest rate per area together.

    ``seeds`` are extra starting placements (e.g. the sequential schemes'
    results). Each start is scored as is and after local optimization, so the
    answer is never worse than any seed with optimal powers.
    """
    kern = kern or kernels.default
    if n == 1:
        d = np.array([length])
        p = np.array([pbar])
        return PlacementOutcome(d, min_rate_per_area(d, p, eta, length), 0, 0.0, True, "pinned", p)
    starts = [np.asarray(s, dtype=float) for s in seeds]
    starts += _starts(n, length, opts.placement_restarts, opts.placement_seed)
    candidates = []
    for start in starts:
        powers, s, it, width = powers_for_placement(start, eta, length, pbar, opts, kern)
        candidates.append(PlacementOutcome(
            start.copy(), min_rate_per_area(start, powers, eta, length), it, width, True,
            "seed", powers))
        out = _joint_local(eta, length, pbar, start, opts, kern)
        if out is not None and np.isfinite(out.objective):
            candidates.append(out)
    best = _pick(candidates)
    best.iterations = sum(c.iterations for c in candidates)
    return best
