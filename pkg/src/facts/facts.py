"""Natural language facts describing a task world.

Supporting facts describe the true world. Distracting facts are inert by
construction: phantom doors sit on walls of the maze and require keys that
are never placed, spurious keys open nothing.
"""
import logging
import math
import re
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from ..env import World
from ..maze import (
    CellLabel,
    MazeGraph,
    are_grid_adjacent,
    grid_walls,
    make_edge,
)
from ..task import bfs_optimal, oracle_feasible

log = logging.getLogger(__name__)

SUPPORTING = "supporting"
DISTRACTING = "distracting"
ROLES = (SUPPORTING, DISTRACTING)

TEMPLATES = {
    "open_connection": "Room {0} and {1} are connected by an open door.",
    "locked_connection": "Room {0} and {1} are connected by a closed and locked door.",
    "requires_key": "The locked door between {0} and {1} requires key {2}.",
    "key_location": "Key {0} is in room {1}.",
    "agent_start": "Bob is in room {0}.",
    "agent_goal": "Alice is in room {0}.",
}

ROOM = r"([A-Z]+[1-9][0-9]*)"
PATTERNS = {
    "open_connection": re.compile(
        rf"Room {ROOM} and {ROOM} are connected by an open door\."
    ),
    "locked_connection": re.compile(
        rf"Room {ROOM} and {ROOM} are connected by a closed and locked door\."
    ),
    # The short "Door between" wording shows up in hand-written examples.
    "requires_key": re.compile(
        rf"(?:The locked door|Door) between {ROOM} and {ROOM} requires key ([0-9]+)\."
    ),
    "key_location": re.compile(rf"Key ([0-9]+) is in room {ROOM}\."),
    "agent_start": re.compile(rf"Bob is in room {ROOM}\."),
    "agent_goal": re.compile(rf"Alice is in room {ROOM}\."),
}
FACTS_PREFIX = "Maze Structure:"


class DistractorPoolExhausted(ValueError):
    pass


class FactParseError(ValueError):
    pass


@dataclass(frozen=True)
class Fact:
    role: str
    kind: str
    params: tuple

    def __post_init__(self):
        assert self.role in ROLES, f"Unknown role: {self.role}"
        assert self.kind in TEMPLATES, f"Unknown kind: {self.kind}"

    @property
    def text(self) -> str:
        return TEMPLATES[self.kind].format(*self.params)


@dataclass(frozen=True)
class FactList:
    facts: tuple[Fact, ...]
    shuffle_ratio: float = 0.0

    @property
    def n_supporting(self) -> int:
        return sum(fact.role == SUPPORTING for fact in self.facts)

    @property
    def n_distracting(self) -> int:
        return sum(fact.role == DISTRACTING for fact in self.facts)

    @property
    def noise_effective(self) -> Fraction:
        return Fraction(self.n_distracting, self.n_supporting)

    @property
    def texts(self) -> list[str]:
        return [fact.text for fact in self.facts]

    def __len__(self) -> int:
        return len(self.facts)


def as_fraction(ratio: float) -> Fraction:
    """Decimal reading of a ratio given as a float, e.g. 0.2 -> 1/5."""
    return Fraction(ratio).limit_denominator(10_000)


def compile_supporting_facts(world: World) -> FactList:
    """Describe the world, one atomic fact per sentence.

    Edges are listed in canonical order. A locked door is described by
    three consecutive facts: the locked connection, the key it requires,
    and where that key lies. Bob and Alice come last.
    """
    key_rooms = world.keys
    facts = []
    for a, b in sorted(world.maze.edges):
        rooms = (str(a), str(b))
        if (a, b) not in world.doors:
            facts.append(Fact(SUPPORTING, "open_connection", rooms))
            continue

        key_id = world.doors[(a, b)]
        facts.append(Fact(SUPPORTING, "locked_connection", rooms))
        facts.append(Fact(SUPPORTING, "requires_key", rooms + (key_id,)))
        if key_id in key_rooms:
            location = (key_id, str(key_rooms[key_id]))
            facts.append(Fact(SUPPORTING, "key_location", location))

    facts.append(Fact(SUPPORTING, "agent_start", (str(world.start),)))
    facts.append(Fact(SUPPORTING, "agent_goal", (str(world.goal),)))
    return FactList(tuple(facts))


def inject_noise(
    facts: FactList,
    noise_target: float,
    seed: int,
    grid: tuple[int, int] | None = None,
    misleading_open_doors: bool = False,
) -> FactList:
    """Add `round(noise_target * S)` distracting facts, S being the number of
    supporting facts. Halves are rounded up.

    Distractors are drawn as units: a phantom locked door (two facts) or a
    spurious key (one fact). When `misleading_open_doors` is set, open
    connections through walls are also drawn, and kept only if they leave
    the optimal solution length unchanged. The units are interleaved at
    random positions among the supporting facts.

    ---
    Args:
        facts: Supporting facts only.
        noise_target: Target ratio of distracting over supporting facts.
        seed: Seed of the draws.
        grid: Size `(n, m)` of the grid. Inferred from the facts if None.
        misleading_open_doors: Also draw open connections through walls.

    ---
    Returns:
        The noisy fact list.

    ---
    Raises:
        DistractorPoolExhausted: The grid is too small for the requested count.
    """
    assert facts.n_distracting == 0, "Noise is only injected into supporting facts"
    assert 0 <= noise_target, f"Negative noise ratio: {noise_target}"

    n_supporting = len(facts)
    n_target = math.floor(as_fraction(noise_target) * n_supporting + Fraction(1, 2))
    if n_target == 0:
        return facts

    rng = np.random.default_rng(seed)
    world = world_from_facts(facts, grid)
    walls = [
        wall
        for wall in grid_walls(world.maze.n, world.maze.m)
        if wall not in world.maze.edges
    ]
    key_rooms = set(world.keys.values())
    free_rooms = [cell for cell in world.maze.cells if cell not in key_rooms]
    next_key_id = max([*world.keys, *world.doors.values(), 0]) + 1

    baseline = None
    units: list[list[Fact]] = []
    remaining = n_target
    while remaining > 0:
        kinds = []
        if remaining >= 2 and walls:
            kinds.append("phantom_door")
        if free_rooms:
            kinds.append("spurious_key")
        if misleading_open_doors and walls:
            kinds.append("misleading_open_door")
        if not kinds:
            raise DistractorPoolExhausted(
                f"Only {n_target - remaining}/{n_target} distracting facts fit "
                f"in a {world.maze.n}x{world.maze.m} grid"
            )

        match kinds[rng.integers(len(kinds))]:
            case "phantom_door":
                a, b = walls.pop(rng.integers(len(walls)))
                rooms = (str(a), str(b))
                units.append(
                    [
                        Fact(DISTRACTING, "locked_connection", rooms),
                        Fact(DISTRACTING, "requires_key", rooms + (next_key_id,)),
                    ]
                )
                next_key_id += 1
            case "spurious_key":
                room = free_rooms.pop(rng.integers(len(free_rooms)))
                location = (next_key_id, str(room))
                units.append([Fact(DISTRACTING, "key_location", location)])
                next_key_id += 1
            case "misleading_open_door":
                a, b = walls.pop(rng.integers(len(walls)))
                if not oracle_feasible(world):
                    log.debug(f"Skipping open door {a}-{b}: too large for the oracle")
                    continue
                if baseline is None:
                    baseline = bfs_optimal(world)
                edges = world.maze.edges | {(a, b)}
                maze = MazeGraph(world.maze.n, world.maze.m, edges)
                augmented = replace(world, maze=maze)
                if bfs_optimal(augmented) != baseline:
                    continue
                world = augmented
                units.append([Fact(DISTRACTING, "open_connection", (str(a), str(b)))])
            case _:
                raise ValueError("Unknown distractor kind")

        remaining -= len(units[-1])

    slots = rng.integers(0, n_supporting + 1, size=len(units))
    merged = []
    for index in range(n_supporting + 1):
        for unit, slot in zip(units, slots):
            if slot == index:
                merged.extend(unit)
        if index < n_supporting:
            merged.append(facts.facts[index])

    return FactList(tuple(merged), facts.shuffle_ratio)


def shuffle_facts(facts: FactList, shuffle_ratio: float, seed: int) -> FactList:
    """Permute the facts found at `ceil(shuffle_ratio * len(facts))` random
    positions, leaving the others in place.
    """
    assert 0 <= shuffle_ratio <= 1, f"Shuffle ratio outside [0, 1]: {shuffle_ratio}"

    n_shuffled = math.ceil(as_fraction(shuffle_ratio) * len(facts))
    rng = np.random.default_rng(seed)
    positions = rng.choice(len(facts), size=n_shuffled, replace=False)
    sources = rng.permutation(positions)

    shuffled = list(facts.facts)
    for position, source in zip(positions, sources):
        shuffled[position] = facts.facts[source]

    return FactList(tuple(shuffled), shuffle_ratio)


def parse_facts(text: str, role: str = SUPPORTING) -> FactList:
    """Read back a fact list from its sentences, keeping their order and the
    order of the rooms inside each sentence.
    """
    text = text.strip()
    if text.startswith(FACTS_PREFIX):
        text = text[len(FACTS_PREFIX) :]

    facts = []
    for sentence in re.split(r"(?<=\.)\s+", text.strip()):
        if not sentence:
            continue
        for kind, pattern in PATTERNS.items():
            found = pattern.fullmatch(sentence)
            if found is not None:
                break
        else:
            raise FactParseError(f"Unrecognised fact: {sentence!r}")

        groups = found.groups()
        match kind:
            case "requires_key":
                params = (groups[0], groups[1], int(groups[2]))
            case "key_location":
                params = (int(groups[0]), groups[1])
            case _:
                params = groups
        facts.append(Fact(role, kind, tuple(params)))

    return FactList(tuple(facts))


def world_from_facts(facts: FactList, grid: tuple[int, int] | None = None) -> World:
    """Rebuild the world described by any fact list, distractors included.

    A locked connection without a matching key requirement is given key id 0,
    which no key ever has.
    """
    edges, doors, keys = set(), {}, {}
    start = goal = None
    labels = []

    def room(label: str) -> CellLabel:
        cell = CellLabel.parse(label)
        labels.append(cell)
        return cell

    def connection(a: str, b: str):
        cell_a, cell_b = room(a), room(b)
        if not are_grid_adjacent(cell_a, cell_b):
            raise FactParseError(f"Rooms {a} and {b} are not adjacent")
        return make_edge(cell_a, cell_b)

    for fact in facts.facts:
        match fact.kind:
            case "open_connection":
                edges.add(connection(*fact.params))
            case "locked_connection":
                edge = connection(*fact.params)
                edges.add(edge)
                doors.setdefault(edge, 0)
            case "requires_key":
                edge = connection(*fact.params[:2])
                edges.add(edge)
                doors[edge] = fact.params[2]
            case "key_location":
                keys[fact.params[0]] = room(fact.params[1])
            case "agent_start":
                start = room(fact.params[0])
            case "agent_goal":
                goal = room(fact.params[0])
            case _:
                raise ValueError(f"Unknown fact kind: {fact.kind}")

    if start is None or goal is None:
        raise FactParseError("Facts must place both Bob and Alice")

    if grid is None:
        grid = (
            max(cell.column for cell in labels) + 1,
            max(cell.row for cell in labels),
        )
    maze = MazeGraph(grid[0], grid[1], frozenset(edges))
    return World(maze=maze, doors=doors, keys=keys, start=start, goal=goal)
