"""Test the decay fit, on exact, synthetic and simulated success rates.

To run the tests, use the following command:
    `python3 -m pytest --import-mode importlib src/`
"""
import math

import numpy as np
import pytest

from ..dataset import GenerationParams, assemble_instance
from ..env import render_actions
from .bins import BinSeries, aggregate_bins
from .fit import InsufficientData, NonDecaying, fit_decay, fit_l0
from .metrics import score_run
from .synthetic import binomial_bins, corrupting_solver


def test_exact_decay():
    depths = list(range(10, 81))
    rates = [math.exp(-depth / 50) for depth in depths]
    result = fit_decay(depths, rates)

    assert result.l0_ols == pytest.approx(50, abs=1e-9)
    assert result.l0_wls == pytest.approx(50, abs=1e-9)
    assert result.r_squared == pytest.approx(1.0)
    assert result.bins_used == len(depths)
    assert result.bins_dropped_zero == 0
    assert result.intercept is None


def test_exact_decay_with_intercept():
    depths = list(range(10, 81, 5))
    rates = [math.exp(-depth / 30) for depth in depths]
    result = fit_decay(depths, rates, intercept=True)

    assert result.l0_wls == pytest.approx(30, rel=1e-6)
    assert result.intercept == pytest.approx(0, abs=1e-6)


def test_binomial_recovery():
    depths = list(range(5, 101))
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        result = fit_l0(binomial_bins(50, depths, 200, rng))
        hits += abs(result.l0_wls - 50) <= 5
    assert hits >= 95


def test_trial_scaling_invariance():
    bins = binomial_bins(40, list(range(5, 60)), 100, np.random.default_rng(0))
    scaled = [
        BinSeries(b.bin_key, b.width, b.trials * 7, b.successes * 7, b.mean_key)
        for b in bins
    ]
    assert fit_l0(scaled) == fit_l0(bins)


def test_zero_bins_are_dropped():
    bins = [
        BinSeries(10, 1, 100, 80, 10),
        BinSeries(20, 1, 100, 0, 20),
        BinSeries(30, 1, 100, 50, 30),
    ]
    result = fit_l0(bins)
    assert result.bins_used == 2
    assert result.bins_dropped_zero == 1


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_l0([BinSeries(10, 1, 100, 80, 10), BinSeries(20, 1, 100, 0, 20)])
    with pytest.raises(InsufficientData):
        fit_l0([])


def test_non_decaying():
    bins = [BinSeries(depth, 1, 50, 50, depth) for depth in range(5, 20)]
    with pytest.raises(NonDecaying):
        fit_l0(bins)


def test_corrupting_solver_rate():
    instance = assemble_instance(GenerationParams(6, 6, 1), seed=3)
    truth = list(instance.ground_truth.actions)
    rng = np.random.default_rng(0)

    assert corrupting_solver(truth, 0.0, rng) == truth
    assert all(a != b for a, b in zip(corrupting_solver(truth, 1.0, rng), truth))

    intact = sum(corrupting_solver(truth, 0.05, rng) == truth for _ in range(2000))
    expected = 0.95 ** len(truth)
    assert abs(intact / 2000 - expected) < 0.05


def test_corrupted_runs_decay():
    epsilon = 0.02
    instances = {}
    for seed in range(60):
        params = GenerationParams(8, 8, seed % 4)
        instance = assemble_instance(params, seed)
        instances[instance.id] = instance

    rng = np.random.default_rng(1)
    results = []
    for instance in instances.values():
        truth = list(instance.ground_truth.actions)
        for run_index in range(150):
            answer = corrupting_solver(truth, epsilon, rng)
            raw_text = "Solution: " + render_actions(answer)
            results.append(score_run(instance, raw_text, run_index))

    result = fit_l0(aggregate_bins(results, instances))
    expected = -1 / math.log(1 - epsilon)
    assert abs(result.l0_wls - expected) <= 0.1 * expected
