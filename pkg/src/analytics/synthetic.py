"""Scripted solvers and synthetic success series, to validate the analysis
without any model endpoint.
"""
import math

import numpy as np

from ..env import Action
from .bins import BinSeries


def corrupting_solver(
    ground_truth: list[Action], epsilon: float, rng: np.random.Generator
) -> list[Action]:
    """Replay the ground truth, replacing each action with probability `epsilon`
    by another action of the same plan.

    A plan survives untouched with probability `(1 - epsilon) ** len(plan)`.
    """
    assert 0 <= epsilon <= 1
    distinct = list(dict.fromkeys(action.normalized() for action in ground_truth))

    answer = []
    for action in ground_truth:
        others = [other for other in distinct if other != action.normalized()]
        if others and rng.random() < epsilon:
            action = others[rng.integers(len(others))]
        answer.append(action)
    return answer


def binomial_bins(
    l0: float, depths: list[int], trials: int, rng: np.random.Generator
) -> list[BinSeries]:
    """One bin per depth, successes drawn from `Binomial(trials, exp(-L / l0))`."""
    return [
        BinSeries(
            bin_key=float(depth),
            width=1.0,
            trials=trials,
            successes=int(rng.binomial(trials, math.exp(-depth / l0))),
            mean_key=float(depth),
        )
        for depth in depths
    ]
