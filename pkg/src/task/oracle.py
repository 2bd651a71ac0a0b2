"""Brute-force optimality oracle.

Breadth-first search over world states (room, held keys, opened doors,
pending unlock) where every one of the six verbs costs one action.
"""
from collections import deque

from ..env import RESCUE_TARGET, Action, World, WorldState, transition

DEFAULT_MAX_STATES = 2_000_000


class UnreachableGoal(ValueError):
    pass


class StateSpaceTooLarge(ValueError):
    pass


def candidate_actions(world: World, state: WorldState) -> list[Action]:
    """Actions worth trying from `state`. Illegal ones are filtered by `transition`."""
    room = state.current_room
    actions = [Action("rescue", RESCUE_TARGET)]

    if state.pending_unlock is not None:
        a, b = state.pending_unlock
        actions.append(Action("unlock_and_open_door_to", str(b if a == room else a)))

    for neighbour in world.maze.adjacency[room]:
        actions.append(Action("move_to", str(neighbour)))
    for key_id, location in world.keys.items():
        if location == room and key_id not in state.held_keys:
            actions.append(Action("pick_up_key", str(key_id)))
    for key_id in sorted(state.held_keys):
        actions.append(Action("use_key", str(key_id)))

    return actions


def bfs_optimal(world: World, max_states: int = DEFAULT_MAX_STATES) -> int:
    """Length of the shortest valid action sequence, `start` and `rescue` included.

    ---
    Args:
        world: The task world.
        max_states: Abort when more states than this have been visited.

    ---
    Returns:
        The minimal number of actions.

    ---
    Raises:
        UnreachableGoal: Alice cannot be rescued.
        StateSpaceTooLarge: The search exceeded `max_states`.
    """
    state, violation = transition(
        world, WorldState.initial(world), Action("start", str(world.start))
    )
    assert violation is None

    frontier = deque([(state, 1)])
    seen = {state.search_key}
    while frontier:
        state, cost = frontier.popleft()
        for action in candidate_actions(world, state):
            next_state, violation = transition(world, state, action)
            if violation is not None:
                continue
            if next_state.rescued:
                return cost + 1

            key = next_state.search_key
            if key in seen:
                continue
            seen.add(key)
            if len(seen) > max_states:
                raise StateSpaceTooLarge(f"More than {max_states:,} states visited")
            frontier.append((next_state, cost + 1))

    raise UnreachableGoal(f"Alice in {world.goal} cannot be reached from {world.start}")


def oracle_feasible(world: World, max_states: int = DEFAULT_MAX_STATES) -> bool:
    """Cheap upper bound of the state space, to skip hopeless searches."""
    n_cells = world.maze.n * world.maze.m
    n_doors = len(world.doors)
    n_keys = len(world.keys)
    return n_cells * 2 ** (n_keys + n_doors) <= max_states
