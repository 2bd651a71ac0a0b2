"""Test the world semantics, the gymnasium env and the verifier.

To run the tests, use the following command:
    `python3 -m pytest --import-mode importlib src/`
"""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ..maze import CellLabel, MazeGraph, make_edge
from .env import MazeEnv
from .verifier import (
    SolutionParseError,
    exact_match,
    execute,
    parse_solution,
    render_actions,
    verify,
)
from .world import VERBS, Action, World, WorldState, transition


def room(label: str) -> CellLabel:
    return CellLabel.parse(label)


def edge(a: str, b: str):
    return make_edge(room(a), room(b))


def key_door_world() -> World:
    """One locked door between C1 and C2, opened by key 1 lying in A2."""
    pairs = [("A1", "A2"), ("A2", "B2"), ("B1", "B2"), ("B1", "C1"), ("C1", "C2")]
    maze = MazeGraph(3, 2, frozenset(edge(a, b) for a, b in pairs))
    return World(
        maze=maze,
        doors={edge("C1", "C2"): 1},
        keys={1: room("A2")},
        start=room("A1"),
        goal=room("C2"),
    )


KEY_DOOR_SOLUTION = (
    "Solution: [('start', 'A1'), ('move_to', 'A2'), ('pick_up_key', '1'), "
    "('move_to', 'B2'), ('move_to', 'B1'), ('move_to', 'C1'), ('use_key', '1'), "
    "('unlock_and_open_door_to', 'C2'), ('move_to', 'C2'), ('rescue', 'Alice')]"
)


def test_transition_skips_illegal_actions():
    world = key_door_world()
    state = WorldState.initial(world)

    state, violation = transition(world, state, Action("start", "A1"))
    assert violation is None and state.step == 1

    # A1 and B1 are neighbours on the grid, but a wall separates them.
    next_state, violation = transition(world, state, Action("move_to", "B1"))
    assert violation.category == "adjacency"
    assert violation.step == 1
    assert next_state.current_room == room("A1")
    assert next_state.step == 2

    next_state, violation = transition(world, state, Action("rescue", "Alice"))
    assert violation.category == "rescue"


def test_start_must_come_first():
    world = key_door_world()
    state = WorldState.initial(world)

    _, violation = transition(world, state, Action("move_to", "A2"))
    assert violation.category == "start"

    _, violation = transition(world, state, Action("start", "B1"))
    assert violation.category == "start"

    state, _ = transition(world, state, Action("start", "A1"))
    _, violation = transition(world, state, Action("start", "A1"))
    assert violation.category == "start"


def test_locked_door_and_unlock_sequence():
    world = key_door_world()
    actions = parse_solution(KEY_DOOR_SOLUTION)

    state = WorldState.initial(world)
    for action in actions[:6]:
        state, violation = transition(world, state, action)
        assert violation is None
    assert state.current_room == room("C1")

    _, violation = transition(world, state, Action("move_to", "C2"))
    assert violation.category == "locked_door"

    _, violation = transition(world, state, Action("unlock_and_open_door_to", "C2"))
    assert violation.category == "unlock_sequence"

    # Any action between use_key and the unlock consumes the pending use.
    used, violation = transition(world, state, Action("use_key", "1"))
    assert violation is None
    assert used.pending_unlock == edge("C1", "C2")
    waited, violation = transition(world, used, Action("pick_up_key", "1"))
    assert violation.category == "key_usage"
    _, violation = transition(world, waited, Action("unlock_and_open_door_to", "C2"))
    assert violation.category == "unlock_sequence"


@pytest.mark.parametrize(
    "removed, category, step",
    [
        (2, "key_usage", 5),  # use_key without the key
        (6, "unlock_sequence", 6),  # unlock without use_key
        (1, "key_usage", 1),  # pick_up_key in A1
        (9, None, None),  # no rescue: legal, but the goal is missed
    ],
)
def test_removed_action(removed: int, category: str | None, step: int | None):
    world = key_door_world()
    actions = parse_solution(KEY_DOOR_SOLUTION)
    del actions[removed]

    report = execute(actions, world)
    if category is None:
        assert report.violations == ()
        assert not report.goal_reached
        return

    assert report.violations[0].category == category
    assert report.first_violation_step == step
    assert not report.goal_reached


def test_key_door_solution_verifies():
    world = key_door_world()
    ground_truth = parse_solution(KEY_DOOR_SOLUTION)

    actions, report = verify("Let me think.\n" + KEY_DOOR_SOLUTION, world, ground_truth)
    assert actions == ground_truth
    assert report.parsed_ok
    assert report.violations == ()
    assert report.first_violation_step is None
    assert report.goal_reached
    assert report.exact_match
    assert not report.legal_suboptimal


def test_legal_suboptimal():
    world = key_door_world()
    ground_truth = parse_solution(KEY_DOOR_SOLUTION)
    detour = ground_truth[:2] + [Action("move_to", "A1"), Action("move_to", "A2")]
    detour += ground_truth[2:]

    report = execute(detour, world, ground_truth)
    assert report.goal_reached
    assert report.violations == ()
    assert not report.exact_match
    assert report.legal_suboptimal


def test_adjacency_jump():
    world = key_door_world()
    actions = [Action("start", "A1"), Action("move_to", "C1")]
    report = execute(actions, world)
    assert [v.category for v in report.violations] == ["adjacency"]
    assert report.first_violation_step == 1


def test_execution_continues_after_violation():
    world = key_door_world()
    actions = parse_solution(KEY_DOOR_SOLUTION)
    actions.insert(1, Action("move_to", "C2"))

    report = execute(actions, world)
    assert [v.step for v in report.violations] == [1]
    assert report.goal_reached


@pytest.mark.parametrize(
    "raw_text",
    [
        KEY_DOOR_SOLUTION,
        KEY_DOOR_SOLUTION.replace("'", '"'),
        KEY_DOOR_SOLUTION.replace("'", "’"),
        "solution:\n```python\n" + KEY_DOOR_SOLUTION[len("Solution: ") :] + "\n```",
        "Solution: [] is wrong, so here is the answer.\n" + KEY_DOOR_SOLUTION,
        KEY_DOOR_SOLUTION.replace("')]", "'),]"),
        KEY_DOOR_SOLUTION.replace(", (", ",\n  ("),
    ],
)
def test_parse_variants(raw_text: str):
    assert parse_solution(raw_text) == parse_solution(KEY_DOOR_SOLUTION)


@pytest.mark.parametrize(
    "raw_text",
    [
        "I could not find a way out.",
        "Solution: ('start', 'A1')",
        "Solution: [('start', 'A1'), ('teleport', 'C2')]",
        "Solution: [('start', 'A1') ('move_to', 'A2')]",
        "Solution: [('start', 'A1'), ('move_to', 'A2'",
    ],
)
def test_parse_failures(raw_text: str):
    with pytest.raises(SolutionParseError):
        parse_solution(raw_text)

    actions, report = verify(raw_text, key_door_world(), [])
    assert actions is None
    assert not report.parsed_ok
    assert [v.category for v in report.violations] == ["parse"]
    assert report.first_violation_step == 0


def test_render_then_parse():
    actions = parse_solution(KEY_DOOR_SOLUTION)
    assert "Solution: " + render_actions(actions) == KEY_DOOR_SOLUTION
    assert parse_solution("Solution: " + render_actions(actions)) == actions


def test_exact_match_normalization():
    truth = [Action("start", "A1"), Action("rescue", "Alice")]
    assert exact_match([Action("start", " A1 "), Action("rescue", "'Alice'")], truth)
    assert not exact_match([Action("start", "A1")], truth)
    assert not exact_match([Action("start", "A2"), Action("rescue", "Alice")], truth)


def test_env_episode():
    world = key_door_world()
    env = MazeEnv(world, max_steps=20)
    observation, infos = env.reset(seed=0)

    assert env.observation_space.contains(observation)
    assert infos["violation"] is None
    assert observation["held_keys"].tolist() == [0]

    rewards = []
    for action in parse_solution(KEY_DOOR_SOLUTION):
        observation, reward, terminated, truncated, infos = env.step(action)
        assert infos["violation"] is None
        assert not truncated
        rewards.append(reward)

    assert terminated
    assert rewards == [0.0] * 9 + [1.0]
    assert observation["held_keys"].tolist() == [1]
    assert observation["opened_doors"].tolist() == [1]
    # C2 is column 2, row 2 of a grid with 2 rows.
    assert observation["room"] == 2 * 2 + 1


def test_env_truncation():
    env = MazeEnv(key_door_world(), max_steps=2)
    env.reset()
    env.step(Action("start", "A1"))
    _, _, terminated, truncated, _ = env.step(Action("move_to", "A2"))
    assert truncated and not terminated


def test_env_without_doors():
    maze = MazeGraph(2, 1, frozenset({edge("A1", "B1")}))
    world = World(maze=maze, doors={}, keys={}, start=room("A1"), goal=room("A1"))
    env = MazeEnv(world)
    observation, _ = env.reset()
    assert env.observation_space.contains(observation)

    violations = env.rollout([Action("start", "A1"), Action("rescue", "Alice")])
    assert violations == []
    assert env.state.rescued


actions = st.builds(
    Action,
    st.sampled_from(VERBS),
    st.sampled_from(["A1", "A2", "B1", "B2", "C1", "C2", "D7", "1", "2", "Alice"]),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(actions, max_size=20), st.integers(min_value=0, max_value=10))
def test_rollout_violation_steps(noise: list[Action], cut: int):
    # Correct steps interleaved with arbitrary ones.
    plan = parse_solution(KEY_DOOR_SOLUTION)
    sequence = plan[:cut] + noise + plan[cut:]

    env = MazeEnv(key_door_world())
    violations = env.rollout(sequence)
    steps = [violation.step for violation in violations]

    assert all(a < b for a, b in zip(steps, steps[1:]))
    assert all(0 <= step < len(sequence) for step in steps)
    for end in range(len(sequence) + 1):
        prefix_steps = [v.step for v in env.rollout(sequence[:end])]
        assert prefix_steps == [step for step in steps if step < end]
