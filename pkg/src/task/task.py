"""Rewind construction of key-door tasks.

Working backward from a random goal, each iteration hides a key somewhere
reachable and locks a door on the way back, so that every generated task is
solvable by construction and its backtracking count is controlled.
"""
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..env import RESCUE_TARGET, Action, World
from ..maze import (
    CellLabel,
    Edge,
    MazeGraph,
    make_edge,
    reachable_cells,
    tree_path,
)

log = logging.getLogger(__name__)

MAX_BACKTRACKS = 7


class InconsistentSkeleton(ValueError):
    pass


class Tag(str, Enum):
    START = "START"
    MOVE = "MOVE"
    PICKUP = "PICKUP"
    UNLOCK = "UNLOCK"
    GOAL = "GOAL"


@dataclass(frozen=True)
class Door:
    edge: Edge
    key_id: int


@dataclass(frozen=True)
class KeyInfo:
    key_id: int
    location: CellLabel
    opens: Edge


@dataclass(frozen=True)
class SkeletonStep:
    tag: Tag
    cells: tuple[CellLabel, ...]
    key_id: int | None = None


@dataclass(frozen=True)
class PathSkeleton:
    steps: tuple[SkeletonStep, ...]

    def __post_init__(self):
        assert self.steps[0].tag == Tag.START
        assert self.steps[-1].tag == Tag.GOAL


@dataclass(frozen=True)
class GroundTruth:
    actions: tuple[Action, ...]
    start: CellLabel
    goal: CellLabel

    def __post_init__(self):
        assert self.actions[0].verb == "start"
        assert self.actions[-1].verb == "rescue"

    @property
    def logical_depth(self) -> int:
        return len(self.actions)

    @property
    def backtracks_effective(self) -> int:
        return sum(action.verb == "unlock_and_open_door_to" for action in self.actions)


@dataclass(frozen=True)
class RewindResult:
    doors: tuple[Door, ...]
    keys: tuple[KeyInfo, ...]
    skeleton: PathSkeleton
    start: CellLabel
    goal: CellLabel

    @property
    def b_effective(self) -> int:
        return len(self.doors)

    def world(self, maze: MazeGraph) -> World:
        return World(
            maze=maze,
            doors={door.edge: door.key_id for door in self.doors},
            keys={key.key_id: key.location for key in self.keys},
            start=self.start,
            goal=self.goal,
        )


def derive_seed(*entropy: int) -> int:
    """Deterministic 64-bit seed mixed from the given integers."""
    state = np.random.SeedSequence(list(entropy)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _choice(rng: np.random.Generator, items: list):
    return items[rng.integers(len(items))]


def rewind_construct(
    maze: MazeGraph,
    b_target: int,
    seed: int,
    max_backtracks: int = MAX_BACKTRACKS,
    goal: CellLabel | None = None,
) -> RewindResult:
    """Build the path skeleton backward from the goal.

    ---
    Args:
        maze: The spanning-tree maze.
        b_target: Number of key-door detours to place.
        seed: Seed of every random choice of the construction.
        max_backtracks: Upper bound accepted for `b_target`.
        goal: Force Alice's room instead of drawing it.

    ---
    Returns:
        The doors, keys, skeleton and endpoints. Fewer than `b_target` doors
        are placed when the current cell gets isolated by locked doors.
    """
    if not 0 <= b_target <= max_backtracks:
        raise ValueError(f"b_target must be in [0, {max_backtracks}], got {b_target}")

    rng = np.random.default_rng(seed)
    goal = goal if goal is not None else _choice(rng, maze.cells)
    assert maze.contains(goal)

    x = goal
    doors, keys = [], []
    locked: set[Edge] = set()
    steps = deque([SkeletonStep(Tag.GOAL, (goal,))])

    while len(doors) < b_target:
        accessible = [cell for cell in reachable_cells(maze, x, locked) if cell != x]
        if not accessible:
            break

        c_key = _choice(rng, accessible)
        # Forward orientation: from the key room back to x.
        segment = tree_path(maze, c_key, x)
        candidates = [
            make_edge(a, b)
            for a, b in zip(segment, segment[1:])
            if make_edge(a, b) not in locked
        ]
        if not candidates:
            break

        door_edge = _choice(rng, candidates)
        key_id = len(doors) + 1
        locked.add(door_edge)
        doors.append(Door(door_edge, key_id))
        keys.append(KeyInfo(key_id, c_key, door_edge))

        steps.appendleft(SkeletonStep(Tag.MOVE, tuple(segment)))
        steps.appendleft(SkeletonStep(Tag.UNLOCK, door_edge, key_id))
        steps.appendleft(SkeletonStep(Tag.PICKUP, (c_key,), key_id))
        x = c_key

    # Approach segment from a start that reaches x without any locked door.
    start = _choice(rng, reachable_cells(maze, x, locked))
    steps.appendleft(SkeletonStep(Tag.MOVE, tuple(tree_path(maze, start, x))))
    steps.appendleft(SkeletonStep(Tag.START, (start,)))

    return RewindResult(
        doors=tuple(doors),
        keys=tuple(keys),
        skeleton=PathSkeleton(tuple(steps)),
        start=start,
        goal=goal,
    )


def sample_exact(
    maze: MazeGraph,
    b_target: int,
    seed: int,
    max_attempts: int,
    max_backtracks: int = MAX_BACKTRACKS,
) -> RewindResult:
    """Resample the rewind construction until exactly `b_target` doors are placed.
    The first attempt uses `seed` itself. Keeps the last attempt if none succeeds.
    """
    assert max_attempts >= 1

    for attempt in range(max_attempts):
        attempt_seed = seed if attempt == 0 else derive_seed(seed, attempt)
        result = rewind_construct(maze, b_target, attempt_seed, max_backtracks)
        if result.b_effective == b_target:
            return result

    log.warning(
        f"Only {result.b_effective}/{b_target} backtracks placed "
        f"after {max_attempts} attempts"
    )
    return result


def derive_ground_truth(
    maze: MazeGraph,
    doors: tuple[Door, ...],
    keys: tuple[KeyInfo, ...],
    skeleton: PathSkeleton,
) -> GroundTruth:
    """Walk the skeleton forward and emit the action sequence.

    A locked door met on a MOVE segment is crossed with `use_key`,
    `unlock_and_open_door_to` then `move_to`.

    ---
    Raises:
        InconsistentSkeleton: The skeleton refers to unknown doors or keys,
            or is not a connected walk.
    """
    door_keys = {door.edge: door.key_id for door in doors}
    key_rooms = {key.key_id: key.location for key in keys}
    for key in keys:
        if door_keys.get(key.opens) != key.key_id:
            raise InconsistentSkeleton(f"Key {key.key_id} does not open {key.opens}")

    actions: list[Action] = []
    room: CellLabel | None = None
    held: set[int] = set()
    opened: set[Edge] = set()

    for step in skeleton.steps:
        match step.tag:
            case Tag.START:
                room = step.cells[0]
                actions.append(Action("start", str(room)))

            case Tag.MOVE:
                if step.cells[0] != room:
                    raise InconsistentSkeleton(
                        f"Segment starts at {step.cells[0]}, not {room}"
                    )
                for target in step.cells[1:]:
                    edge = make_edge(room, target)
                    if edge not in maze.edges:
                        raise InconsistentSkeleton(
                            f"{room} and {target} are not connected"
                        )
                    if edge in door_keys and edge not in opened:
                        key_id = door_keys[edge]
                        if key_id not in held:
                            raise InconsistentSkeleton(
                                f"Key {key_id} needed at {edge} is not held"
                            )
                        actions.append(Action("use_key", str(key_id)))
                        actions.append(Action("unlock_and_open_door_to", str(target)))
                        opened.add(edge)
                    actions.append(Action("move_to", str(target)))
                    room = target

            case Tag.PICKUP:
                if key_rooms.get(step.key_id) != room:
                    raise InconsistentSkeleton(f"Key {step.key_id} is not in {room}")
                actions.append(Action("pick_up_key", str(step.key_id)))
                held.add(step.key_id)

            case Tag.UNLOCK:
                if door_keys.get(step.cells) != step.key_id:
                    raise InconsistentSkeleton(
                        f"No door {step.cells} for key {step.key_id}"
                    )

            case Tag.GOAL:
                if room != step.cells[0]:
                    raise InconsistentSkeleton(
                        f"Walk ends at {room}, not {step.cells[0]}"
                    )
                actions.append(Action("rescue", RESCUE_TARGET))

            case _:
                raise ValueError(f"Unknown tag: {step.tag}")

    if opened != set(door_keys):
        raise InconsistentSkeleton("Some doors are never crossed")

    return GroundTruth(
        actions=tuple(actions),
        start=skeleton.steps[0].cells[0],
        goal=skeleton.steps[-1].cells[0],
    )
