"""Aggregation of run results into parameter bins and violation tables."""
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np
import pandas as pd

from ..dataset import TaskInstance
from ..env import VIOLATION_CATEGORIES
from .metrics import RunResult

BIN_KEYS = ("logical_depth", "b_effective", "noise_target", "shuffle_ratio")
CSV_COLUMNS = [
    "bin_key",
    "trials",
    "p",
    "mean_progress",
    "mean_precision",
    "mean_recall",
    "mean_tokens",
]


class UnknownInstance(ValueError):
    pass


class HasFirstViolation(Protocol):
    first_violation_step: int | None


@dataclass(frozen=True)
class BinSeries:
    bin_key: float
    width: float
    trials: int
    successes: int
    mean_key: float
    mean_progress: float = float("nan")
    mean_precision: float = float("nan")
    mean_recall: float = float("nan")
    mean_tokens: float = float("nan")

    def __post_init__(self):
        assert 0 <= self.successes <= self.trials

    @property
    def p(self) -> float:
        return self.successes / self.trials


def annotate_results(
    results: list[RunResult], instances: dict[str, TaskInstance]
) -> pd.DataFrame:
    """One row per run, joined with the annotations of its instance."""
    rows = []
    for result in results:
        if result.instance_id not in instances:
            raise UnknownInstance(f"No instance {result.instance_id!r}")
        instance = instances[result.instance_id]
        row = result.to_record()
        row.update({key: getattr(instance, key) for key in BIN_KEYS})
        rows.append(row)

    return pd.DataFrame(rows)


def aggregate_bins(
    results: list[RunResult],
    instances: dict[str, TaskInstance],
    key: str = "logical_depth",
    bin_width: float = 1,
) -> list[BinSeries]:
    """Pool the runs of every bin of `key` and compute Pass@1 and the mean metrics.

    Runs are pooled: a bin counts instances times runs trials. Tokens are
    averaged over the runs whose count is known.

    ---
    Raises:
        UnknownInstance: A result refers to an instance not in `instances`.
    """
    if key not in BIN_KEYS:
        raise ValueError(f"Unknown bin key: {key}")
    assert bin_width > 0
    if not results:
        return []

    df = annotate_results(results, instances)
    df["bin_key"] = np.floor(df[key] / bin_width + 1e-9) * bin_width
    df["known_tokens"] = df["output_tokens"].where(df["output_tokens"] >= 0)

    grouped = df.groupby("bin_key").agg(
        trials=("exact_match", "size"),
        successes=("exact_match", "sum"),
        mean_key=(key, "mean"),
        mean_progress=("progress", "mean"),
        mean_precision=("precision", "mean"),
        mean_recall=("recall", "mean"),
        mean_tokens=("known_tokens", "mean"),
    )
    return [
        BinSeries(
            bin_key=float(bin_key),
            width=float(bin_width),
            trials=int(row.trials),
            successes=int(row.successes),
            mean_key=float(row.mean_key),
            mean_progress=float(row.mean_progress),
            mean_precision=float(row.mean_precision),
            mean_recall=float(row.mean_recall),
            mean_tokens=float(row.mean_tokens),
        )
        for bin_key, row in grouped.iterrows()
    ]


def bins_to_frame(bins: list[BinSeries]) -> pd.DataFrame:
    df = pd.DataFrame(
        {
            "bin_key": [b.bin_key for b in bins],
            "trials": [b.trials for b in bins],
            "p": [b.p for b in bins],
            "mean_progress": [b.mean_progress for b in bins],
            "mean_precision": [b.mean_precision for b in bins],
            "mean_recall": [b.mean_recall for b in bins],
            "mean_tokens": [b.mean_tokens for b in bins],
        },
        columns=CSV_COLUMNS,
    )
    return df


def write_bins_csv(bins: list[BinSeries], path: Path):
    bins_to_frame(bins).to_csv(path, index=False, float_format="%.6g")


def first_violation_histogram(
    reports: Iterable[HasFirstViolation], normalize: bool = False
) -> dict[int, float]:
    """Count the first violation steps, clean reports excluded."""
    counts = Counter(
        report.first_violation_step
        for report in reports
        if report.first_violation_step is not None
    )
    total = sum(counts.values())
    if normalize and total > 0:
        return {step: counts[step] / total for step in sorted(counts)}
    return {step: counts[step] for step in sorted(counts)}


def grouped_first_violation_histograms(
    results: list[RunResult],
    instances: dict[str, TaskInstance],
    key: str = "logical_depth",
    bin_width: float = 1,
    normalize: bool = True,
) -> dict[float, dict[int, float]]:
    """First violation histograms, one per bin of an instance annotation."""
    if key not in BIN_KEYS:
        raise ValueError(f"Unknown bin key: {key}")

    groups: dict[float, list[RunResult]] = {}
    for result in results:
        if result.instance_id not in instances:
            raise UnknownInstance(f"No instance {result.instance_id!r}")
        value = getattr(instances[result.instance_id], key)
        bin_key = float(np.floor(value / bin_width + 1e-9) * bin_width)
        groups.setdefault(bin_key, []).append(result)

    return {
        bin_key: first_violation_histogram(groups[bin_key], normalize)
        for bin_key in sorted(groups)
    }


def violation_map(results: Iterable[RunResult]) -> pd.DataFrame:
    """Violation counts indexed by step, one column per category."""
    rows = [
        {"step": step, "category": category}
        for result in results
        for step, category in result.violations
    ]
    if not rows:
        return pd.DataFrame(columns=list(VIOLATION_CATEGORIES), dtype=int).rename_axis(
            "step"
        )

    df = pd.DataFrame(rows)
    table = pd.crosstab(df["step"], df["category"])
    return table.reindex(columns=list(VIOLATION_CATEGORIES), fill_value=0).rename_axis(
        columns=None
    )
