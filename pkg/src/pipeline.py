"""Bodies of the command-line subcommands.

Every function reads and writes plain files, so that a sweep can be run stage
by stage: generate, prompt or run (or simulate), evaluate, then report.
"""
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import wandb
from tqdm import tqdm

from .analytics import (
    FitResult,
    InsufficientData,
    RunResult,
    aggregate_bins,
    corrupting_solver,
    fit_l0,
    score_run,
    violation_map,
    write_bins_csv,
)
from .dataset import (
    GenerationParams,
    RecordError,
    TaskInstance,
    assemble_instance,
    read_jsonl,
    select_depth_bins,
    write_jsonl,
)
from .draw import draw_success_decay
from .env import render_actions
from .prompt import build_prompt
from .runner import (
    BatchSummary,
    ConfigError,
    EndpointConfig,
    ModelResponse,
    Runner,
    read_responses,
)
from .task import (
    DEFAULT_MAX_STATES,
    MAX_BACKTRACKS,
    StateSpaceTooLarge,
    bfs_optimal,
    derive_seed,
    oracle_feasible,
)

log = logging.getLogger(__name__)


class OracleMismatch(ValueError):
    pass


@dataclass(frozen=True)
class OracleSummary:
    checked: int
    skipped: int
    mismatches: tuple[tuple[str, int, int], ...]


def report_path(out_prefix: Path, suffix: str) -> Path:
    out_prefix = Path(out_prefix)
    return out_prefix.with_name(f"{out_prefix.name}_{suffix}")


def load_tasks(path: Path) -> dict[str, TaskInstance]:
    return {instance.id: instance for instance in read_jsonl(path)}


def write_results(results: list[RunResult], path: Path) -> int:
    with open(path, "w", encoding="utf-8") as file:
        for result in results:
            file.write(json.dumps(result.to_record()) + "\n")
    return len(results)


def read_results(path: Path) -> list[RunResult]:
    results = []
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                results.append(RunResult.from_record(json.loads(line)))
            except json.JSONDecodeError as error:
                raise RecordError(line_number, "json", error.msg) from error
            except (KeyError, TypeError) as error:
                raise RecordError(line_number, "verdict", str(error)) from error

    return results


def generate(
    out: Path,
    n: int,
    m: int,
    backtracks: int,
    noise: float = 0.0,
    shuffle: float = 0.0,
    count: int = 1,
    seed: int = 0,
    max_backtracks: int = MAX_BACKTRACKS,
    max_attempts: int = 20,
    misleading_open_doors: bool = False,
    workers: int = 1,
) -> int:
    """Generate `count` instances sharing the same parameters.

    The seed of the instance `i` is derived from `(seed, i)`. With more than
    one worker, the instances are built in a process pool.

    ---
    Raises:
        ConfigError: A parameter is out of range.
    """
    if n < 1 or m < 1:
        raise ConfigError(f"Invalid grid size: {n}x{m}")
    if not 0 <= backtracks <= max_backtracks:
        raise ConfigError(
            f"Backtracks must be in [0, {max_backtracks}], got {backtracks}"
        )
    if noise < 0:
        raise ConfigError(f"Invalid noise ratio: {noise}")
    if not 0 <= shuffle <= 1:
        raise ConfigError(f"Invalid shuffle ratio: {shuffle}")
    if count < 0:
        raise ConfigError(f"Invalid count: {count}")
    if workers < 1:
        raise ConfigError(f"Invalid number of workers: {workers}")

    params = GenerationParams(n, m, backtracks, noise, shuffle)
    build = partial(
        assemble_instance,
        params,
        max_attempts=max_attempts,
        max_backtracks=max_backtracks,
        misleading_open_doors=misleading_open_doors,
    )
    seeds = [derive_seed(seed, index) for index in range(count)]

    if workers == 1:
        instances = map(build, seeds)
        written = write_jsonl(tqdm(instances, total=count, desc="Generating"), out)
    else:
        # Ordered map, so the file does not depend on the number of workers.
        with ProcessPoolExecutor(max_workers=workers) as executor:
            instances = executor.map(build, seeds, chunksize=64)
            written = write_jsonl(tqdm(instances, total=count, desc="Generating"), out)

    log.info(f"Wrote {written} instances to {out}")
    return written


def prompt(
    tasks: Path, out: Path, include_guidance: bool = True, n_few_shot: int = 3
) -> int:
    if not 0 <= n_few_shot <= 3:
        raise ConfigError(f"Invalid number of few-shot examples: {n_few_shot}")

    count = 0
    with open(out, "w", encoding="utf-8") as file:
        for instance in read_jsonl(tasks):
            bundle = build_prompt(instance, include_guidance, n_few_shot)
            record = {"id": instance.id, "prompt": bundle.assembled}
            file.write(json.dumps(record) + "\n")
            count += 1
    return count


def run(
    tasks: Path,
    out: Path,
    endpoint: EndpointConfig,
    k_runs: int = 5,
    include_guidance: bool = True,
    n_few_shot: int = 3,
) -> BatchSummary:
    if k_runs < 0:
        raise ConfigError(f"Invalid number of runs: {k_runs}")

    runner = Runner(endpoint, include_guidance, n_few_shot)
    return runner.run_batch(read_jsonl(tasks), k_runs, out)


def simulate(
    tasks: Path, out: Path, epsilon: float, k_runs: int = 5, seed: int = 0
) -> int:
    """Write a response file from the scripted corrupting solver.

    Stands in for `run`, so that the rest of the pipeline can be checked
    without any endpoint.
    """
    if not 0 <= epsilon <= 1:
        raise ConfigError(f"Invalid epsilon: {epsilon}")

    rng = np.random.default_rng(seed)
    count = 0
    with open(out, "w", encoding="utf-8") as file:
        for instance in tqdm(read_jsonl(tasks), desc="Simulating"):
            truth = list(instance.ground_truth.actions)
            for run_index in range(k_runs):
                answer = corrupting_solver(truth, epsilon, rng)
                response = ModelResponse(
                    instance_id=instance.id,
                    run_index=run_index,
                    raw_text="Solution: " + render_actions(answer),
                    prompt_tokens=-1,
                    output_tokens=-1,
                    latency_ms=0.0,
                    attempts=0,
                )
                file.write(json.dumps(response.to_record()) + "\n")
                count += 1
    return count


def evaluate(tasks: Path, responses: Path, out: Path) -> list[RunResult]:
    """Score every response against the ground truth of its instance.

    Responses of unknown instances are reported and skipped.
    """
    instances = load_tasks(tasks)
    results = []
    orphans = 0
    for response in tqdm(read_responses(responses), desc="Evaluating"):
        instance = instances.get(response.instance_id)
        if instance is None:
            orphans += 1
            log.warning(f"Orphan response: no instance {response.instance_id!r}")
            continue
        results.append(
            score_run(
                instance, response.raw_text, response.run_index, response.output_tokens
            )
        )

    write_results(results, out)
    log.info(f"{len(results)} verdicts, {orphans} orphan(s) skipped")
    return results


def report(
    verdicts: Path,
    tasks: Path,
    out_prefix: Path,
    bin_key: str = "logical_depth",
    bin_width: float = 1,
    intercept: bool = False,
) -> FitResult:
    """Write the bin table, the violation map, the figure and the fit summary.

    The tables and the figure are written even when the fit fails.

    ---
    Raises:
        InsufficientData: No verdicts, or less than two bins with a success.
        NonDecaying: The success rate does not decrease with the bin key.
    """
    results = read_results(verdicts)
    if not results:
        raise InsufficientData(f"No verdicts in {verdicts}")

    instances = load_tasks(tasks)
    bins = aggregate_bins(results, instances, bin_key, bin_width)
    write_bins_csv(bins, report_path(out_prefix, "bins.csv"))
    violation_map(results).to_csv(report_path(out_prefix, "violations.csv"))

    try:
        fit = fit_l0(bins, intercept)
    except ValueError:
        draw_success_decay(bins, None, report_path(out_prefix, "decay.svg"))
        raise

    draw_success_decay(bins, fit, report_path(out_prefix, "decay.svg"))
    summary = fit.summary()
    report_path(out_prefix, "fit.txt").write_text(summary + "\n")
    log.info(f"Fit over {bin_key}:\n{summary}")
    return fit


def oracle_check(tasks: Path, max_states: int = DEFAULT_MAX_STATES) -> OracleSummary:
    """Compare the stored depth of every small enough instance with the BFS optimum.

    ---
    Raises:
        OracleMismatch: At least one instance has a shorter solution.
    """
    checked, skipped, mismatches = 0, 0, []
    for instance in tqdm(read_jsonl(tasks), desc="Checking"):
        world = instance.world
        if not oracle_feasible(world, max_states):
            skipped += 1
            continue
        try:
            optimum = bfs_optimal(world, max_states)
        except StateSpaceTooLarge:
            skipped += 1
            continue

        checked += 1
        if optimum != instance.logical_depth:
            mismatches.append((instance.id, instance.logical_depth, optimum))
            log.error(
                f"{instance.id}: depth {instance.logical_depth}, optimum {optimum}"
            )

    summary = OracleSummary(checked, skipped, tuple(mismatches))
    log.info(f"{checked} instance(s) certified, {skipped} too large for the oracle")
    if mismatches:
        raise OracleMismatch(f"{len(mismatches)} instance(s) are not optimal")
    return summary


def select(
    tasks: Path, out: Path, per_bin: int, l_min: int, l_max: int, seed: int = 0
) -> int:
    if per_bin < 1:
        raise ConfigError(f"Invalid bin size: {per_bin}")
    if l_min > l_max:
        raise ConfigError(f"Empty depth range: [{l_min}, {l_max}]")

    selected = select_depth_bins(read_jsonl(tasks), per_bin, l_min, l_max, seed)
    return write_jsonl(selected, out)


def publish(
    metrics: dict[str, Any],
    config: dict[str, Any],
    project: str,
    group: str,
    mode: str = "disabled",
    bins_csv: Path | None = None,
):
    """Send the final numbers of a subcommand to Weights & Biases."""
    with wandb.init(project=project, group=group, config=config, mode=mode) as run:
        if bins_csv is not None and bins_csv.exists():
            run.log({"bins": wandb.Table(dataframe=pd.read_csv(bins_csv))})
        run.summary.update(metrics)
