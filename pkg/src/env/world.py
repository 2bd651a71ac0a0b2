"""World description, action schema and per-verb semantics.

The same `transition` function drives the gymnasium environment, the
verifier and the BFS oracle, so the three never disagree on what is legal.
"""
from dataclasses import dataclass, field, replace
from typing import Mapping

from ..maze import CellLabel, Edge, LabelParseError, MazeGraph, make_edge

VERBS = (
    "start",
    "move_to",
    "pick_up_key",
    "use_key",
    "unlock_and_open_door_to",
    "rescue",
)
ROOM_VERBS = ("start", "move_to", "unlock_and_open_door_to")
KEY_VERBS = ("pick_up_key", "use_key")
RESCUE_TARGET = "Alice"

VIOLATION_CATEGORIES = (
    "start",
    "adjacency",
    "locked_door",
    "key_usage",
    "unlock_sequence",
    "rescue",
    "parse",
)


@dataclass(frozen=True)
class Action:
    verb: str
    argument: str

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ValueError(f"Unknown verb: {self.verb}")

    def normalized(self) -> "Action":
        argument = self.argument.strip().strip("'\"‘’“”").strip()
        return Action(self.verb.strip(), argument)

    def __str__(self) -> str:
        return f"('{self.verb}', '{self.argument}')"


@dataclass(frozen=True)
class World:
    """Everything needed to execute a plan.

    `maze.edges` holds every connection, open or locked. A door whose key is
    never placed stays locked forever, and a key opening no door is inert.
    """

    maze: MazeGraph
    doors: Mapping[Edge, int]
    keys: Mapping[int, CellLabel]
    start: CellLabel
    goal: CellLabel

    def __post_init__(self):
        for edge in self.doors:
            assert edge in self.maze.edges, f"Door {edge} is not a maze edge"

    def doors_around(self, room: CellLabel) -> list[Edge]:
        return [
            make_edge(room, neighbour)
            for neighbour in self.maze.adjacency[room]
            if make_edge(room, neighbour) in self.doors
        ]


@dataclass(frozen=True)
class WorldState:
    current_room: CellLabel
    held_keys: frozenset[int] = frozenset()
    opened_doors: frozenset[Edge] = frozenset()
    pending_unlock: Edge | None = None
    rescued: bool = False
    step: int = 0

    @classmethod
    def initial(cls, world: World) -> "WorldState":
        return cls(current_room=world.start)

    @property
    def search_key(self) -> tuple:
        """The state without its step counter, for graph search."""
        return (
            self.current_room,
            self.held_keys,
            self.opened_doors,
            self.pending_unlock,
            self.rescued,
        )


@dataclass(frozen=True)
class Violation:
    step: int
    category: str
    detail: str = field(default="", compare=False)

    def __post_init__(self):
        assert self.category in VIOLATION_CATEGORIES, self.category


def _parse_room(world: World, argument: str) -> CellLabel | None:
    try:
        room = CellLabel.parse(argument)
    except LabelParseError:
        return None
    return room if world.maze.contains(room) else None


def _parse_key(argument: str) -> int | None:
    try:
        return int(argument.strip())
    except ValueError:
        return None


def transition(
    world: World, state: WorldState, action: Action
) -> tuple[WorldState, Violation | None]:
    """Apply one action.

    Illegal actions are skipped: the returned state only differs from the
    input by its step counter, and the violation describes why.

    ---
    Args:
        world: The world the agent lives in.
        state: The current state.
        action: The action to apply.

    ---
    Returns:
        next_state: The state after the action.
        violation: None if the action was legal.
    """
    step = state.step
    room = state.current_room
    # Any action consumes a pending use_key.
    skipped = replace(state, step=step + 1, pending_unlock=None)

    def illegal(category: str, detail: str) -> tuple[WorldState, Violation]:
        return skipped, Violation(step, category, detail)

    if step == 0 and action.verb != "start":
        return illegal("start", f"first action is {action.verb}, not start")

    match action.verb:
        case "start":
            if step != 0:
                return illegal("start", "start is only allowed as the first action")
            if _parse_room(world, action.argument) != world.start:
                message = f"Bob is in {world.start}, not {action.argument}"
                return illegal("start", message)
            return skipped, None

        case "move_to":
            target = _parse_room(world, action.argument)
            if target is None or not world.maze.has_edge(room, target):
                message = f"{room} and {action.argument} are not connected"
                return illegal("adjacency", message)
            edge = make_edge(room, target)
            if edge in world.doors and edge not in state.opened_doors:
                return illegal("locked_door", f"door {room}-{target} is locked")
            return replace(skipped, current_room=target), None

        case "pick_up_key":
            key_id = _parse_key(action.argument)
            if key_id is None or world.keys.get(key_id) != room:
                return illegal("key_usage", f"key {action.argument} is not in {room}")
            if key_id in state.held_keys:
                return illegal("key_usage", f"key {key_id} is already held")
            return replace(skipped, held_keys=state.held_keys | {key_id}), None

        case "use_key":
            key_id = _parse_key(action.argument)
            if key_id is None or key_id not in state.held_keys:
                return illegal("key_usage", f"key {action.argument} is not held")
            for edge in world.doors_around(room):
                if world.doors[edge] == key_id and edge not in state.opened_doors:
                    return replace(skipped, pending_unlock=edge), None
            message = f"key {key_id} opens no locked door around {room}"
            return illegal("key_usage", message)

        case "unlock_and_open_door_to":
            target = _parse_room(world, action.argument)
            pending = state.pending_unlock
            if pending is None or target is None or make_edge(room, target) != pending:
                return illegal(
                    "unlock_sequence",
                    f"unlocking {action.argument} must directly follow its use_key",
                )
            return replace(skipped, opened_doors=state.opened_doors | {pending}), None

        case "rescue":
            if action.argument.strip() != RESCUE_TARGET or room != world.goal:
                return illegal("rescue", f"Alice is in {world.goal}, Bob is in {room}")
            return replace(skipped, rescued=True), None

        case _:
            raise ValueError(f"Unknown verb: {action.verb}")
