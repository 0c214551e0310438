import math

import numpy as np
import pytest
from scipy.optimize import brentq

from tdmfair import kernels
from tdmfair.errors import InvalidArgumentError, RateUnachievableError
from tdmfair.model import NetworkConfig, Placement, capacity, voronoi_areas
from tdmfair.placement import min_rate_per_area
from tdmfair.solvers import (
    CombinedOrder,
    SolverOptions,
    Strategy,
    min_power_for_rate,
    min_time_for_rate,
    parse_scheme,
    solve,
    solve_combined,
    solve_strategy,
    ta_upper_bound,
)

SINGLE = list(Strategy)
ORDERS = list(CombinedOrder)
CONFIGS = [NetworkConfig(n, eta, P) for n in (2, 3, 7, 25) for eta in (2.0, 3.5) for P in (0.1, 10.0)]


def spread(v):
    return (v.max() - v.min()) / v.min()


@pytest.mark.parametrize("s", [Strategy.BASE_REFERENCE, Strategy.TIME_ADAPTATION,
                               Strategy.POWER_ADAPTATION, Strategy.JOINT_TIME_POWER])
def test_single_node_gets_everything(s):
    r = solve_strategy(NetworkConfig(1), s)
    assert r.objective == pytest.approx(math.log(2), rel=1e-15)
    assert r.allocation.times.tolist() == [1.0]


def test_power_adaptation_two_nodes():
    r = solve_strategy(NetworkConfig(2, 2.0, 1.0, total_power=2.0), "PA")
    np.testing.assert_allclose(r.allocation.powers, [0.4, 1.6], rtol=1e-15)
    assert r.objective == pytest.approx(0.5 * math.log(1.8), rel=1e-14)
    assert r.objective == pytest.approx(0.293893, abs=5e-7)


def test_power_adaptation_three_nodes():
    r = solve_strategy(NetworkConfig(3), "PA")
    np.testing.assert_allclose(r.allocation.powers, np.array([3, 12, 27]) / 14, rtol=1e-15)
    assert r.objective == pytest.approx(math.log(1 + 9 / 14) / 3, rel=1e-14)


def test_time_adaptation_two_nodes_against_scalar_root():
    f = lambda t: t * math.log1p(1 / t) - (1 - t) * math.log1p(1 / (4 * (1 - t)))
    t1 = brentq(f, 1e-9, 0.5, xtol=1e-15)
    r = solve_strategy(NetworkConfig(2), "TA")
    assert r.allocation.times[0] == pytest.approx(t1, rel=1e-8)
    assert r.objective == pytest.approx(t1 * math.log1p(1 / t1), rel=1e-9)
    # about 0.0878 and 0.2209
    assert abs(r.allocation.times[0] - 0.0878) < 1e-4 and abs(r.objective - 0.2209) < 1e-4


def test_base_reference_two_nodes():
    r = solve_strategy(NetworkConfig(2), "BR")
    assert r.objective == pytest.approx(0.5 * math.log(1.5), rel=1e-15)


def test_base_reference_formula():
    for cfg in CONFIGS:
        n, P, eta = cfg.n, cfg.per_node_power, cfg.eta
        expected = math.log1p(n * P / (n * cfg.spacing) ** eta) / n
        assert solve(cfg, "BR").objective == pytest.approx(expected, rel=1e-14)


def test_node_placement_two_nodes_against_scalar_root():
    # far node pinned at 2; equalize rate per area in d_1
    r2 = math.log1p(2 / 4) / 2

    def f(x):
        return math.log1p(2 / x ** 2) / 2 / ((x + 2) / 2) - r2 / ((2 - x) / 2)

    x = brentq(f, 1e-6, 2 - 1e-9, xtol=1e-15)
    r = solve_strategy(NetworkConfig(2), "NP")
    assert r.placement.distances[0] == pytest.approx(x, rel=1e-9)
    assert r.objective == pytest.approx(r2 / ((2 - x) / 2), rel=1e-9)


def test_min_time_for_rate_examples():
    assert min_time_for_rate(0.0, 1, 1, 2) == 0.0
    assert min_time_for_rate(math.log(2), 1, 1, 2) == pytest.approx(1.0, rel=1e-12)
    t = min_time_for_rate(0.9999, 1, 1, 2)
    assert 1e3 < t < 1e4
    assert abs(capacity(t, 1, 1, 2) - 0.9999) <= 1e-12
    with pytest.raises(RateUnachievableError):
        min_time_for_rate(1.0, 1, 1, 2)
    with pytest.raises(InvalidArgumentError):
        min_time_for_rate(-0.1, 1, 1, 2)


def test_min_power_for_rate_examples():
    assert min_power_for_rate(0, 0.5, 1, 2) == 0
    assert min_power_for_rate(math.log(2), 1, 1, 2) == pytest.approx(1.0, rel=1e-15)
    assert min_power_for_rate(0.5 * math.log(2), 0.5, 1, 2) == pytest.approx(0.5, rel=1e-15)
    p = min_power_for_rate(0.3, 0.2, 2.5, 3.0)
    assert capacity(0.2, p, 2.5, 3.0) == pytest.approx(0.3, rel=1e-14)
    with pytest.raises(InvalidArgumentError):
        min_power_for_rate(0.1, 0.0, 1, 2)


@pytest.mark.parametrize("n,P,expected", [(2, 1, math.log(1.25)), (1, 1, math.log(2)),
                                          (10, 10, math.log(1.1))])
def test_ta_upper_bound(n, P, expected):
    assert ta_upper_bound(NetworkConfig(n, 2.0, P)) == pytest.approx(expected, rel=1e-15)


def test_ta_upper_bound_values():
    assert ta_upper_bound(NetworkConfig(2)) == pytest.approx(0.223144, abs=5e-7)
    assert ta_upper_bound(NetworkConfig(10, 2.0, 10.0)) == pytest.approx(0.095310, abs=5e-7)


@pytest.mark.parametrize("cfg", CONFIGS, ids=str)
def test_equalization_and_tightness(cfg):
    ta = solve(cfg, "TA")
    assert ta.diagnostics.converged
    assert spread(ta.rates) <= 1e-6
    assert abs(ta.allocation.times.sum() - 1) <= 1e-8
    tapa = solve(cfg, "TAPA")
    assert tapa.diagnostics.converged
    assert spread(tapa.rates) <= 1e-6
    assert abs(tapa.allocation.times.sum() - 1) <= 1e-8
    assert abs(tapa.allocation.powers.sum() - cfg.total_power) <= 1e-8 * cfg.total_power
    pa = solve(cfg, "PA")
    assert abs(pa.allocation.powers.sum() - cfg.total_power) <= 1e-8 * cfg.total_power
    for order in ("NP-then-PA", "joint-PA-NP"):
        r = solve(cfg, order)
        assert spread(r.per_node_objective) <= 1e-6
        assert abs(r.allocation.powers.sum() - cfg.total_power) <= 1e-8 * cfg.total_power


@pytest.mark.parametrize("cfg", CONFIGS, ids=str)
def test_ordering(cfg):
    assert np.all(np.diff(solve(cfg, "TA").allocation.times) >= 0)
    assert np.all(np.diff(solve(cfg, "PA").allocation.powers) >= 0)
    tapa = solve(cfg, "TAPA")
    assert np.all(np.diff(tapa.allocation.times) >= 0)
    assert np.all(np.diff(tapa.allocation.powers) >= 0)


@pytest.mark.parametrize("cfg", CONFIGS, ids=str)
def test_dominance_and_sandwich(cfg):
    br, ta, pa, tapa = (solve(cfg, s).objective for s in ("BR", "TA", "PA", "TAPA"))
    assert ta >= br and pa >= br
    assert tapa >= max(ta, pa) - 1e-8
    assert ta <= ta_upper_bound(cfg)
    joint = solve(cfg, "joint").objective
    assert joint >= max(solve(cfg, "pa-np").objective, solve(cfg, "np-pa").objective) - 1e-6


def test_node_placement_with_equal_powers_beats_regular():
    for cfg in CONFIGS:
        r = solve(cfg, "NP")
        reg = min_rate_per_area(cfg.regular_placement().distances,
                                np.full(cfg.n, cfg.per_node_power), cfg.eta, cfg.domain_length)
        assert r.objective >= reg
        assert r.diagnostics.converged


def test_pa_then_np_two_nodes():
    cfg = NetworkConfig(2, 2.0, 1.0, total_power=2.0)
    r = solve_combined(cfg, CombinedOrder.PA_THEN_NP)
    np.testing.assert_allclose(r.allocation.powers, [0.4, 1.6], rtol=1e-15)
    reg = min_rate_per_area([1.0, 2.0], [0.4, 1.6], 2.0, 2.0)
    assert r.objective - reg >= 0


def test_joint_dominates_two_nodes():
    cfg = NetworkConfig(2, 2.0, 1.0, total_power=2.0)
    vals = {o: solve_combined(cfg, o).objective for o in ORDERS}
    assert vals[CombinedOrder.JOINT_PA_NP] >= max(vals[CombinedOrder.PA_THEN_NP],
                                                  vals[CombinedOrder.NP_THEN_PA]) - 1e-6


@pytest.mark.parametrize("order", ORDERS)
def test_single_node_combined_pins_node_at_domain_end(order):
    cfg = NetworkConfig(1, 2.0, 1.0)
    r = solve_combined(cfg, order)
    assert r.placement.distances.tolist() == [cfg.domain_length]
    assert r.objective == pytest.approx(math.log(2) / cfg.domain_length, rel=1e-15)


def test_np_then_pa_with_equal_budget_matches_np():
    for cfg in CONFIGS[:4]:
        assert solve(cfg, "np-pa").objective == pytest.approx(solve(cfg, "NP").objective, rel=1e-9)


def test_objective_recomputed_from_first_principles():
    for cfg in CONFIGS[:6]:
        for s in SINGLE + ORDERS:
            r = solve(cfg, s)
            t, p, d = r.allocation.times, r.allocation.powers, r.placement.distances
            rt = np.array([capacity(*x, cfg.eta) for x in zip(t, p, d)])
            if r.areas is not None:
                rt = rt / voronoi_areas(Placement(d, r.placement.domain_length)).areas
            assert r.objective == pytest.approx(rt.min(), rel=1e-9)
            if r.diagnostics.converged and s in (Strategy.TIME_ADAPTATION,
                                                 Strategy.JOINT_TIME_POWER):
                assert r.diagnostics.residual <= SolverOptions().rate_tolerance


def test_placement_structure_report(capsys):
    """Gaps and cells shrink away from the sink; reported, not asserted."""
    lines = []
    for n in range(2, 9):
        for P in (0.1, 1.0, 10.0):
            r = solve(NetworkConfig(n, 2.0, P), "NP")
            gaps = np.diff(np.concatenate([[0.0], r.placement.distances]))
            ok_g = bool(np.all(np.diff(gaps) < 0))
            ok_a = bool(np.all(np.diff(r.areas) < 0))
            lines.append(f"n={n} P={P}: gaps decreasing={ok_g} areas decreasing={ok_a}")
    print("\n".join(lines))


def test_deterministic():
    for s in SINGLE + ORDERS:
        a = solve(NetworkConfig(6, 3.0, 2.0), s, SolverOptions(placement_seed=7)).to_dict()
        b = solve(NetworkConfig(6, 3.0, 2.0), s, SolverOptions(placement_seed=7)).to_dict()
        assert a == b


def test_backends_give_same_results():
    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled extension not built")
    for s in SINGLE + ORDERS:
        a = solve(NetworkConfig(5, 2.0, 1.0), s, SolverOptions(backend="python"))
        b = solve(NetworkConfig(5, 2.0, 1.0), s, SolverOptions(backend="cython"))
        assert a.objective == pytest.approx(b.objective, rel=1e-13)


def test_nonconvergence_is_flagged():
    r = solve(NetworkConfig(5), "TA", SolverOptions(max_iterations=3))
    assert not r.diagnostics.converged
    assert r.diagnostics.residual > SolverOptions().rate_tolerance


def test_placement_fallback_when_no_equalizing_placement():
    # power-adaptation powers on many nodes: no ordered equalizing placement
    cfg = NetworkConfig(12, 2.0, 1.0)
    r = solve(cfg, "pa-np", SolverOptions(placement_restarts=4))
    assert np.isfinite(r.objective) and r.objective > 0


@pytest.mark.parametrize("name,expected", [
    ("ta", Strategy.TIME_ADAPTATION), ("TAPA", Strategy.JOINT_TIME_POWER),
    ("pa-np", CombinedOrder.PA_THEN_NP), ("NP_then_PA", CombinedOrder.NP_THEN_PA),
    ("joint", CombinedOrder.JOINT_PA_NP), ("BR", Strategy.BASE_REFERENCE)])
def test_parse_scheme(name, expected):
    assert parse_scheme(name) is expected


def test_wrong_entry_point():
    with pytest.raises(InvalidArgumentError):
        solve_strategy(NetworkConfig(2), "joint")
    with pytest.raises(InvalidArgumentError):
        solve_combined(NetworkConfig(2), "TA")
    with pytest.raises(InvalidArgumentError):
        parse_scheme("waterfill")


def test_options_validation():
    for bad in (dict(rate_tolerance=0), dict(root_tolerance=-1), dict(max_iterations=0),
                dict(placement_restarts=0)):
        with pytest.raises(InvalidArgumentError):
            SolverOptions(**bad)
