import copy
import logging
import math

import numpy as np
import pytest

from esg_merton.core import AllocationManager, MarketModel, WelManager
from esg_merton.errors import DomainError
from esg_merton.managers import MonteCarloOracle
from esg_merton.models import ModelParams, RiskAversionProfile


def moderate_params(rng: np.random.Generator) -> ModelParams:
    """对数效用的离散度保持在样本标准误可信的范围内"""
    return ModelParams(
        r=float(rng.uniform(0.0, 0.001)),
        lambda1=float(rng.uniform(2.0, 6.0)),
        lambda_g=float(rng.uniform(-1.0, 1.0)),
        lambda_b=float(rng.uniform(-1.5, 1.5)),
        sigma1=float(rng.uniform(0.03, 0.05)),
        sigma2=float(rng.uniform(0.05, 0.12)),
        sigma3=float(rng.uniform(0.05, 0.12)),
        rho12=float(rng.uniform(-0.3, 0.5)),
        rho13=float(rng.uniform(-0.3, 0.5)),
    )


def oracle_with(settings, **simulation):
    config = copy.deepcopy(settings)
    config["SIMULATION"].update(simulation)
    market = MarketModel(config)
    allocation = AllocationManager(config, market=market)
    return MonteCarloOracle(config, market=market, allocation=allocation,
                            wel=WelManager(config, allocation=allocation))


def test_value_function_matches_simulation(oracle):
    rng = np.random.default_rng(31)
    for k in range(5):
        params = moderate_params(rng)
        profile = RiskAversionProfile(*(float(a) for a in rng.uniform(-3.0, -1.0, size=3)))
        report = oracle.verify(params, profile, horizon_t=12.0, n_paths=100000, seed=100 + k)
        assert report.label == "optimal"
        assert report.passed, report.to_dict()
        assert report.closed_form < 0


def test_fixed_weight_value_matches_simulation(oracle, idt_params, shen_params):
    rng = np.random.default_rng(47)
    for k in range(10):
        params = idt_params if k % 2 == 0 else shen_params
        profile = RiskAversionProfile(*(float(a) for a in rng.uniform(-3.0, -1.0, size=3)))
        optimal = np.array(oracle.allocation.optimal_weights(params, profile).weights)
        weights = optimal + rng.uniform(-0.4, 0.4, size=3)
        report = oracle.verify(params, profile, weights=weights, horizon_t=12.0, n_paths=100000,
                               seed=700 + k, label=f"strategy-{k}")
        assert abs(report.z_score) <= 3.0, report.to_dict()


def test_zero_weights_are_deterministic(oracle, idt_params, profile):
    mc = oracle.expected_utility_mc(idt_params, profile, (0.0, 0.0, 0.0), 12.0, 1000, seed=1)
    exact = oracle.closed_form_utility(idt_params, profile, (0.0, 0.0, 0.0), 12.0)
    assert mc.standard_error == 0.0
    assert mc.estimate == pytest.approx(exact, rel=1e-12)

    report = oracle.verify(idt_params, profile, weights=(0.0, 0.0, 0.0), n_paths=1000, seed=1)
    assert report.z_score == 0.0
    assert report.passed


def test_path_count_validation(oracle, idt_params, profile):
    with pytest.raises(DomainError):
        oracle.expected_utility_mc(idt_params, profile, (1.0, 0.1, 0.5), 12.0, 99, seed=0)
    mc = oracle.expected_utility_mc(idt_params, profile, (1.0, 0.1, 0.5), 12.0, 1001, seed=0)
    assert mc.n_paths == 1002


def test_seed_reproducibility_and_worker_independence(settings, idt_params, profile):
    weights = (1.0, 0.2, 0.6)
    single = oracle_with(settings, BLOCK_SIZE=1024, WORKERS=1)
    threaded = oracle_with(settings, BLOCK_SIZE=1024, WORKERS=3)
    a = single.expected_utility_mc(idt_params, profile, weights, 12.0, 10000, seed=5)
    b = single.expected_utility_mc(idt_params, profile, weights, 12.0, 10000, seed=5)
    c = threaded.expected_utility_mc(idt_params, profile, weights, 12.0, 10000, seed=5)
    d = single.expected_utility_mc(idt_params, profile, weights, 12.0, 10000, seed=6)
    assert a == b == c
    assert a.estimate != d.estimate


def test_closed_form_log_utility_consistency(oracle, idt_params, profile):
    weights = (1.0, 0.2, 0.6)
    log_abs, sign = oracle.closed_form_log_utility(idt_params, profile, weights, 12.0, x0=(1.1, 0.9, 1.2))
    value = oracle.closed_form_utility(idt_params, profile, weights, 12.0, x0=(1.1, 0.9, 1.2))
    assert sign * math.exp(log_abs) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("coordinate, lo, hi, n_paths", [
    ("pi2", 0.10, 0.32, 200000),
    ("pi3", 0.76, 0.98, 1000000),
    ("pi1", 1.02, 1.24, 1000000),
])
def test_grid_search_finds_closed_form(oracle, idt_params, coordinate, lo, hi, n_paths):
    profile = RiskAversionProfile.uniform(-2.5)
    grid = {coordinate: np.round(np.arange(lo, hi + 1e-9, 0.01), 10)}
    result = oracle.grid_search_optimal(idt_params, profile, 12.0, grid, n_paths=n_paths, seed=2024)
    assert not result.on_boundary
    assert result.within_one_step()
    assert result.max_steps[coordinate] == pytest.approx(0.01)
    assert list(result.table.columns) == ["pi1", "pi2", "pi3", "estimate", "standardError", "logAbsEstimate"]
    assert len(result.table) == len(grid[coordinate])


def test_grid_search_single_point_and_boundary(oracle, idt_params, caplog):
    profile = RiskAversionProfile.uniform(-2.5)
    single = oracle.grid_search_optimal(idt_params, profile, 12.0, {"pi2": [0.2]}, n_paths=1000, seed=1)
    assert single.weights[1] == 0.2
    assert single.weights[0] == single.closed_form_weights[0]
    assert not single.on_boundary
    assert single.within_one_step()

    caplog.set_level(logging.WARNING, logger="esg_merton")
    edge = oracle.grid_search_optimal(idt_params, profile, 12.0, {"pi2": [0.0, 0.05, 0.1]},
                                      n_paths=20000, seed=1)
    assert edge.on_boundary
    assert edge.weights[1] == 0.1
    assert any("边界" in record.getMessage() for record in caplog.records)

    with pytest.raises(DomainError):
        oracle.grid_search_optimal(idt_params, profile, 12.0, {"pi4": [0.1]}, n_paths=1000, seed=1)


def test_gwel_definition_check(oracle, idt_params, profile):
    sub = oracle.allocation.restricted_weights(idt_params, profile, pi2=0.0).weights
    check = oracle.gwel_definition_check(idt_params, profile, sub, 12.0, n_paths=200000, seed=9)
    assert check["report"].q > 0
    assert check["passed"], check["z_score"]


def test_standard_error_shrinks_with_path_count(oracle, idt_params, profile):
    weights = (1.0, 0.2, 0.6)
    small = oracle.expected_utility_mc(idt_params, profile, weights, 12.0, 100000, seed=12)
    large = oracle.expected_utility_mc(idt_params, profile, weights, 12.0, 200000, seed=12)
    ratio = small.standard_error / large.standard_error
    assert ratio == pytest.approx(math.sqrt(2.0), rel=0.1)


def test_closed_form_ranking_matches_simulation(oracle, idt_params, profile):
    optimal = oracle.allocation.optimal_weights(idt_params, profile)
    candidates = [(optimal.pi1, pi2, optimal.pi3) for pi2 in np.linspace(-0.8, 1.2, 9)]
    candidates += [(pi1, optimal.pi2, optimal.pi3) for pi1 in (0.0, 0.5, 2.0, 3.0)]

    b_star = [oracle.allocation.fixed_weight_value(idt_params, profile, w) for w in candidates]
    estimates = [oracle.expected_utility_mc(idt_params, profile, w, 12.0, 100000, seed=33)
                 for w in candidates]

    separated = 0
    for i in range(len(candidates)):
        for j in range(i + 1, len(candidates)):
            a, b = estimates[i], estimates[j]
            joint_se = math.hypot(a.standard_error, b.standard_error)
            if abs(a.estimate - b.estimate) <= 5 * joint_se:
                continue
            separated += 1
            # 效用为负，b* 越小期望效用越高
            assert (a.estimate > b.estimate) == (b_star[i] < b_star[j]), (candidates[i], candidates[j])
    assert separated > 0


def test_one_step_sampling_agrees_with_stepped_paths(oracle, idt_params, profile):
    weights = (1.0, 0.2, 0.6)
    bundle = oracle.market.simulate_paths(idt_params, weights, 12.0, 12, 100000, seed=81)
    utility = oracle.allocation.preferences.utility_eval(profile, *bundle.terminal_ratios())
    stepped_se = utility.std(ddof=1) / math.sqrt(len(utility))

    mc = oracle.expected_utility_mc(idt_params, profile, weights, 12.0, 100000, seed=82)
    assert abs(utility.mean() - mc.estimate) < 4 * math.hypot(stepped_se, mc.standard_error)
