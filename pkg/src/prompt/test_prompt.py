"""Test the prompt assembly and the worked examples it ships with.

To run the tests, use the following command:
    `python3 -m pytest --import-mode importlib src/`
"""
import pytest

from ..dataset import GenerationParams, TaskInstance, assemble_instance
from ..env import VERBS, execute, parse_solution
from ..task import GroundTruth, bfs_optimal
from .prompt import (
    FEW_SHOT_FILES,
    GUIDANCE_FILE,
    INSTRUCTIONS_FILE,
    CanonicalExample,
    build_prompt,
    canonical_examples,
    load_resource,
)


def as_instance(example: CanonicalExample) -> TaskInstance:
    world = example.world
    ground_truth = GroundTruth(example.solution, world.start, world.goal)
    backtracks = ground_truth.backtracks_effective
    params = GenerationParams(world.maze.n, world.maze.m, backtracks)
    return TaskInstance(example.name, 0, params, example.facts, ground_truth, world)


def input_line(name: str) -> str:
    text = load_resource(name)
    return text.split("INPUT:\n")[1].split("\nOUTPUT:")[0]


def test_canonical_examples_verify():
    examples = canonical_examples()
    assert [len(example.solution) for example in examples] == [8, 10, 18]

    for example in examples:
        solution = list(example.solution)
        report = execute(solution, example.world, solution)
        assert report.violations == ()
        assert report.exact_match
        assert bfs_optimal(example.world) == len(solution)


def test_problem_reproduces_example_input():
    first, second, _ = canonical_examples()

    bundle = build_prompt(as_instance(first))
    assert bundle.problem_facts == input_line(FEW_SHOT_FILES[0]) + "\nYOUR SOLUTION:"

    # The second example words its key requirement differently.
    bundle = build_prompt(as_instance(second))
    expected = input_line(FEW_SHOT_FILES[1]).replace(
        "Door between", "The locked door between"
    )
    assert bundle.problem_facts == expected + "\nYOUR SOLUTION:"


def test_assembled_layout():
    instance = as_instance(canonical_examples()[2])
    bundle = build_prompt(instance)

    assert bundle.assembled.count("EXAMPLE:") == 3
    assert bundle.assembled.startswith(load_resource("prompt_instructions.txt"))
    assert bundle.assembled.endswith("\nYOUR SOLUTION:")
    assert bundle.few_shot == tuple(load_resource(name) for name in FEW_SHOT_FILES)
    positions = [
        bundle.assembled.index(part)
        for part in [bundle.instructions, *bundle.few_shot, bundle.guidance]
    ]
    assert positions == sorted(positions)


def test_without_guidance():
    instance = as_instance(canonical_examples()[1])
    with_guidance = build_prompt(instance, include_guidance=True)
    without = build_prompt(instance, include_guidance=False)

    assert without.guidance is None
    assert with_guidance.guidance not in without.assembled
    assert without.instructions == with_guidance.instructions
    assert without.few_shot == with_guidance.few_shot
    assert without.problem_facts == with_guidance.problem_facts


@pytest.mark.parametrize("n_few_shot", [0, 1, 2, 3])
def test_few_shot_count(n_few_shot: int):
    instance = assemble_instance(GenerationParams(5, 5, 1, 0.4, 0.5), seed=11)
    bundle = build_prompt(instance, n_few_shot=n_few_shot)
    assert bundle.assembled.count("EXAMPLE:") == n_few_shot


def test_prompt_is_deterministic():
    instance = assemble_instance(GenerationParams(6, 6, 2, 0.2, 0.0), seed=5)
    assert build_prompt(instance).assembled == build_prompt(instance).assembled


def test_instructions_cover_every_verb():
    instructions = load_resource(INSTRUCTIONS_FILE)
    for verb in VERBS:
        assert f"('{verb}', '" in instructions

    # The answer format is spelled out, and parses once filled in.
    format_line = instructions.splitlines()[-1]
    assert format_line.startswith("Solution: [('start', 'ROOM')")
    filled = format_line.replace(", ...,", ",").replace("ROOM", "A1")
    assert [action.verb for action in parse_solution(filled)] == [
        "start",
        "move_to",
        "rescue",
    ]

    guidance = load_resource(GUIDANCE_FILE)
    assert "..." not in guidance and "…" not in guidance
