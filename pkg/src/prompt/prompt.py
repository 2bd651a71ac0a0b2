"""Four-part evaluation prompt: instructions, few-shot examples, optional
guidance, then the facts of the problem.

The fixed parts are resource files read as they are, without any
normalisation, so that every prompt of a run is byte-identical.
"""
from dataclasses import dataclass
from functools import cache
from pathlib import Path

from ..dataset import TaskInstance
from ..env import Action, World, parse_solution
from ..facts import FACTS_PREFIX, FactList, parse_facts, world_from_facts

RESOURCES = Path(__file__).parent / "resources"
# Reconstructed texts: the published versions abridge some passages.
INSTRUCTIONS_FILE = "prompt_instructions.txt"
GUIDANCE_FILE = "prompt_guidance.txt"
FEW_SHOT_FILES = ("few_shot_1.txt", "few_shot_2.txt", "few_shot_3.txt")
SOLUTION_LINE = "YOUR SOLUTION:"
SEPARATOR = "\n\n"


@cache
def load_resource(name: str) -> str:
    return (RESOURCES / name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class PromptBundle:
    instructions: str
    few_shot: tuple[str, ...]
    guidance: str | None
    problem_facts: str

    @property
    def assembled(self) -> str:
        parts = [self.instructions, *self.few_shot]
        if self.guidance is not None:
            parts.append(self.guidance)
        parts.append(self.problem_facts)
        return SEPARATOR.join(parts)


@dataclass(frozen=True)
class CanonicalExample:
    name: str
    facts: FactList
    world: World
    solution: tuple[Action, ...]


def render_problem(facts: FactList) -> str:
    return f"{FACTS_PREFIX} {' '.join(facts.texts)}\n{SOLUTION_LINE}"


def build_prompt(
    instance: TaskInstance, include_guidance: bool = True, n_few_shot: int = 3
) -> PromptBundle:
    """Assemble the prompt of an instance.

    ---
    Args:
        instance: The task to describe.
        include_guidance: Add the step-by-step reasoning hints.
        n_few_shot: Number of worked examples, taken in increasing complexity.

    ---
    Returns:
        The prompt components and their concatenation.
    """
    assert 0 <= n_few_shot <= len(FEW_SHOT_FILES), f"Invalid n_few_shot: {n_few_shot}"

    return PromptBundle(
        instructions=load_resource(INSTRUCTIONS_FILE),
        few_shot=tuple(load_resource(name) for name in FEW_SHOT_FILES[:n_few_shot]),
        guidance=load_resource(GUIDANCE_FILE) if include_guidance else None,
        problem_facts=render_problem(instance.facts),
    )


def canonical_examples() -> list[CanonicalExample]:
    """Read back the worked examples: their facts, world and solution."""
    examples = []
    for name in FEW_SHOT_FILES:
        text = load_resource(name)
        _, _, rest = text.partition("INPUT:\n")
        facts_text, _, solution_text = rest.partition("\nOUTPUT:\n")
        facts = parse_facts(facts_text)
        examples.append(
            CanonicalExample(
                name=name,
                facts=facts,
                world=world_from_facts(facts),
                solution=tuple(parse_solution(solution_text)),
            )
        )

    return examples
