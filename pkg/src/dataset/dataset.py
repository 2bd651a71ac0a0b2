"""Annotated task instances and their JSON-Lines storage.

Each record is self-describing: the world, the facts shown to the model and
the ground-truth plan are all stored, so that a file can be verified and
evaluated without regenerating anything.
"""
import json
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from ..env import Action, World, execute
from ..facts import (
    Fact,
    FactList,
    compile_supporting_facts,
    inject_noise,
    shuffle_facts,
)
from ..maze import CellLabel, MazeGraph, build_maze, make_edge
from ..task import (
    MAX_BACKTRACKS,
    GroundTruth,
    RewindResult,
    derive_ground_truth,
    derive_seed,
    sample_exact,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RECORD_KEYS = (
    "schema",
    "id",
    "seed",
    "n",
    "m",
    "b_target",
    "b_effective",
    "noise_target",
    "noise_effective",
    "shuffle_ratio",
    "logical_depth",
    "facts",
    "ground_truth",
    "edges",
    "doors",
    "keys",
    "start",
    "goal",
)

# One sub-seed per generation phase.
MAZE_STAGE, TASK_STAGE, NOISE_STAGE, SHUFFLE_STAGE = range(4)

ID_PATTERN = re.compile(
    r"^(\d+)x(\d+)-b(\d+)-nz([0-9.e+-]+?)-sh([0-9.e+-]+?)-([0-9a-f]+)$"
)


class GeneratorSelfCheckError(ValueError):
    pass


class RecordError(ValueError):
    def __init__(self, line: int, field: str, message: str):
        super().__init__(f"Line {line}, field {field!r}: {message}")
        self.line = line
        self.field = field


@dataclass(frozen=True)
class GenerationParams:
    n: int
    m: int
    b_target: int
    noise_target: float = 0.0
    shuffle_ratio: float = 0.0

    def __post_init__(self):
        assert self.n >= 1 and self.m >= 1, f"Invalid grid {self.n}x{self.m}"
        assert self.noise_target >= 0, f"Negative noise ratio: {self.noise_target}"
        assert 0 <= self.shuffle_ratio <= 1, f"Invalid shuffle: {self.shuffle_ratio}"


@dataclass(frozen=True)
class TaskInstance:
    id: str
    seed: int
    params: GenerationParams
    facts: FactList
    ground_truth: GroundTruth
    world: World

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def b_target(self) -> int:
        return self.params.b_target

    @property
    def noise_target(self) -> float:
        return self.params.noise_target

    @property
    def shuffle_ratio(self) -> float:
        return self.params.shuffle_ratio

    @property
    def b_effective(self) -> int:
        return self.ground_truth.backtracks_effective

    @property
    def noise_effective(self) -> Fraction:
        return self.facts.noise_effective

    @property
    def logical_depth(self) -> int:
        return self.ground_truth.logical_depth

    def to_record(self) -> dict:
        world = self.world
        return {
            "schema": SCHEMA_VERSION,
            "id": self.id,
            "seed": self.seed,
            "n": self.n,
            "m": self.m,
            "b_target": self.b_target,
            "b_effective": self.b_effective,
            "noise_target": self.noise_target,
            "noise_effective": str(self.noise_effective),
            "shuffle_ratio": self.shuffle_ratio,
            "logical_depth": self.logical_depth,
            "facts": [
                {
                    "role": fact.role,
                    "kind": fact.kind,
                    "text": fact.text,
                    "params": list(fact.params),
                }
                for fact in self.facts.facts
            ],
            "ground_truth": [
                [action.verb, action.argument] for action in self.ground_truth.actions
            ],
            "edges": [[str(a), str(b)] for a, b in sorted(world.maze.edges)],
            "doors": [
                [str(a), str(b), key_id]
                for (a, b), key_id in sorted(world.doors.items())
            ],
            "keys": [
                [key_id, str(room)] for key_id, room in sorted(world.keys.items())
            ],
            "start": str(world.start),
            "goal": str(world.goal),
        }

    @classmethod
    def from_record(cls, record: dict, line: int = 0) -> "TaskInstance":
        """Rebuild an instance and check every stored annotation.

        ---
        Raises:
            RecordError: A field is missing, malformed or inconsistent.
        """
        if not isinstance(record, dict):
            raise RecordError(line, "record", "not a JSON object")
        for key in RECORD_KEYS:
            if key not in record:
                raise RecordError(line, key, "missing")
        for key in record:
            if key not in RECORD_KEYS:
                raise RecordError(line, key, "unexpected")
        if record["schema"] != SCHEMA_VERSION:
            raise RecordError(line, "schema", f"unsupported version {record['schema']}")

        field = "n"
        try:
            params = GenerationParams(
                record["n"],
                record["m"],
                record["b_target"],
                record["noise_target"],
                record["shuffle_ratio"],
            )

            field = "facts"
            facts = []
            for entry in record["facts"]:
                fact = Fact(entry["role"], entry["kind"], tuple(entry["params"]))
                if fact.text != entry["text"]:
                    raise ValueError(f"{entry['text']!r} does not match its params")
                facts.append(fact)
            facts = FactList(tuple(facts), record["shuffle_ratio"])

            field = "edges"
            edges = frozenset(_edge(a, b) for a, b in record["edges"])
            maze = MazeGraph(params.n, params.m, edges)

            field = "doors"
            doors = {_edge(a, b): int(key_id) for a, b, key_id in record["doors"]}
            field = "keys"
            keys = {
                int(key_id): CellLabel.parse(room) for key_id, room in record["keys"]
            }
            field = "start"
            start = CellLabel.parse(record["start"])
            field = "goal"
            goal = CellLabel.parse(record["goal"])
            field = "doors"
            world = World(maze=maze, doors=doors, keys=keys, start=start, goal=goal)

            field = "ground_truth"
            actions = tuple(
                Action(verb, argument) for verb, argument in record["ground_truth"]
            )
            if not actions or actions[0].verb != "start":
                raise ValueError("must begin with start")
            if actions[-1].verb != "rescue":
                raise ValueError("must end with rescue")
            ground_truth = GroundTruth(actions, start, goal)
        except (AssertionError, KeyError, TypeError, ValueError) as error:
            raise RecordError(line, field, str(error)) from error

        report = execute(list(actions), world)
        if report.violations or not report.goal_reached:
            raise RecordError(line, "ground_truth", "does not solve the stored world")

        instance = cls(record["id"], record["seed"], params, facts, ground_truth, world)
        annotations = {
            "b_effective": instance.b_effective,
            "logical_depth": instance.logical_depth,
            "noise_effective": str(instance.noise_effective),
        }
        for key, value in annotations.items():
            if record[key] != value:
                raise RecordError(line, key, f"stored {record[key]!r}, found {value!r}")

        return instance


def _edge(a: str, b: str):
    return make_edge(CellLabel.parse(a), CellLabel.parse(b))


def instance_id(params: GenerationParams, seed: int) -> str:
    return (
        f"{params.n}x{params.m}-b{params.b_target}-nz{float(params.noise_target)}"
        f"-sh{float(params.shuffle_ratio)}-{seed:x}"
    )


def parse_instance_id(text: str) -> tuple[GenerationParams, int]:
    found = ID_PATTERN.match(text)
    if found is None:
        raise ValueError(f"Malformed instance id: {text!r}")

    n, m, b_target, noise, shuffle, seed = found.groups()
    params = GenerationParams(
        int(n), int(m), int(b_target), float(noise), float(shuffle)
    )
    return params, int(seed, 16)


def annotate_instance(
    params: GenerationParams,
    seed: int,
    maze: MazeGraph,
    rewind: RewindResult,
    misleading_open_doors: bool = False,
) -> TaskInstance:
    """Derive the plan, describe the world and self-check the result."""
    ground_truth = derive_ground_truth(maze, rewind.doors, rewind.keys, rewind.skeleton)
    world = rewind.world(maze)

    facts = compile_supporting_facts(world)
    facts = inject_noise(
        facts,
        params.noise_target,
        derive_seed(seed, NOISE_STAGE),
        grid=(params.n, params.m),
        misleading_open_doors=misleading_open_doors,
    )
    facts = shuffle_facts(facts, params.shuffle_ratio, derive_seed(seed, SHUFFLE_STAGE))

    actions = list(ground_truth.actions)
    report = execute(actions, world, actions)
    if report.violations or not report.exact_match:
        raise GeneratorSelfCheckError(
            f"Ground truth of seed {seed:x} fails: {report.violations}"
        )

    return TaskInstance(
        id=instance_id(params, seed),
        seed=seed,
        params=params,
        facts=facts,
        ground_truth=ground_truth,
        world=world,
    )


def assemble_instance(
    params: GenerationParams,
    seed: int,
    max_attempts: int = 20,
    max_backtracks: int = MAX_BACKTRACKS,
    misleading_open_doors: bool = False,
) -> TaskInstance:
    """Generate one instance: maze, rewind construction, ground truth, then facts.

    ---
    Args:
        params: Grid size, backtracking, noise and shuffle targets.
        seed: Master seed of the instance. Every phase draws from its own
            sub-seed, so changing the noise leaves the maze untouched.
        max_attempts: Resampling budget to reach exactly `params.b_target`.
        max_backtracks: Largest accepted `params.b_target`.
        misleading_open_doors: Also draw open-connection distractors.

    ---
    Returns:
        The annotated instance.

    ---
    Raises:
        DistractorPoolExhausted: The grid is too small for the requested noise.
        GeneratorSelfCheckError: The ground truth does not solve the world.
    """
    maze = build_maze(params.n, params.m, derive_seed(seed, MAZE_STAGE))
    rewind = sample_exact(
        maze,
        params.b_target,
        derive_seed(seed, TASK_STAGE),
        max_attempts,
        max_backtracks,
    )
    return annotate_instance(params, seed, maze, rewind, misleading_open_doors)


def write_jsonl(instances: Iterable[TaskInstance], path: Path) -> int:
    """Write one record per line, return the number of records written."""
    count = 0
    with open(path, "w", encoding="utf-8") as file:
        for instance in instances:
            file.write(json.dumps(instance.to_record()) + "\n")
            count += 1
    return count


def read_jsonl(path: Path) -> list[TaskInstance]:
    instances = []
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as error:
                raise RecordError(line_number, "json", error.msg) from error
            instances.append(TaskInstance.from_record(record, line_number))

    return instances


def select_depth_bins(
    instances: list[TaskInstance],
    per_bin: int,
    l_min: int,
    l_max: int,
    seed: int,
) -> list[TaskInstance]:
    """Sample up to `per_bin` instances for every logical depth in `[l_min, l_max]`.

    Bins with fewer instances are kept whole and reported.
    """
    assert per_bin >= 1
    if not instances:
        return []

    rng = np.random.default_rng(seed)
    df = pd.DataFrame({"logical_depth": [task.logical_depth for task in instances]})
    df = df[(df["logical_depth"] >= l_min) & (df["logical_depth"] <= l_max)]

    selected = []
    for depth, group in df.groupby("logical_depth"):
        if len(group) < per_bin:
            log.warning(f"Depth {depth}: only {len(group)}/{per_bin} instances")
        sample = group.sample(n=min(per_bin, len(group)), random_state=rng)
        selected.extend(sorted(sample.index))

    return [instances[index] for index in selected]

