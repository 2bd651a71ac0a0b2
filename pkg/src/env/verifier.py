"""Parse model answers and check them against the world semantics."""
import re
from dataclasses import dataclass

from .env import MazeEnv
from .world import VERBS, Action, Violation, World

MARKER = re.compile(r"solution\s*:", re.IGNORECASE)
QUOTE = "['\"‘’“”]"
UNQUOTED = "[^'\"‘’“”]*"
TUPLE = re.compile(
    rf"\(\s*{QUOTE}({UNQUOTED}){QUOTE}\s*,\s*{QUOTE}({UNQUOTED}){QUOTE}\s*\)"
)
# Whitespace and markdown code fences between the marker and the list.
FILLER = re.compile(r"(?:\s|```[A-Za-z]*)*")


class SolutionParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class VerificationReport:
    parsed_ok: bool
    violations: tuple[Violation, ...]
    first_violation_step: int | None
    goal_reached: bool
    exact_match: bool

    def __post_init__(self):
        if self.exact_match:
            assert not self.violations and self.goal_reached

    @property
    def legal_suboptimal(self) -> bool:
        """A valid rescue that is not the optimal plan."""
        return self.goal_reached and not self.violations and not self.exact_match


def parse_solution(raw_text: str) -> list[Action]:
    """Extract the action list following the last "Solution:" marker.

    Accepts single, double and typographic quotes, and code fences around
    the list.

    ---
    Args:
        raw_text: The model output, untouched.

    ---
    Returns:
        The parsed actions.

    ---
    Raises:
        SolutionParseError: No marker, malformed tuple or unknown verb.
    """
    markers = list(MARKER.finditer(raw_text))
    if not markers:
        raise SolutionParseError("No 'Solution:' marker", 0)

    position = FILLER.match(raw_text, markers[-1].end()).end()
    if not raw_text.startswith("[", position):
        raise SolutionParseError("Expected '['", position)
    position += 1

    actions = []
    while True:
        position = FILLER.match(raw_text, position).end()
        if raw_text.startswith("]", position):
            return actions

        match = TUPLE.match(raw_text, position)
        if match is None:
            raise SolutionParseError("Malformed action tuple", position)

        verb, argument = match.group(1).strip(), match.group(2).strip()
        if verb not in VERBS:
            raise SolutionParseError(f"Unknown verb {verb!r}", position)
        actions.append(Action(verb, argument))

        position = FILLER.match(raw_text, match.end()).end()
        if raw_text.startswith(",", position):
            position += 1
        elif not raw_text.startswith("]", position):
            raise SolutionParseError("Expected ',' or ']'", position)


def render_actions(actions: list[Action]) -> str:
    return "[" + ", ".join(str(action) for action in actions) + "]"


def exact_match(predicted: list[Action], ground_truth: list[Action]) -> bool:
    if len(predicted) != len(ground_truth):
        return False
    return all(
        pred.normalized() == truth.normalized()
        for pred, truth in zip(predicted, ground_truth)
    )


def execute(
    actions: list[Action],
    world: World,
    ground_truth: list[Action] | None = None,
) -> VerificationReport:
    """Run the actions in the world and collect every violation.

    Illegal actions are skipped and the execution carries on, so the report
    holds the full violation profile while `first_violation_step` keeps the
    halt-at-first-error view.
    """
    env = MazeEnv(world)
    violations = env.rollout(actions)
    goal_reached = env.state.rescued

    return VerificationReport(
        parsed_ok=True,
        violations=tuple(violations),
        first_violation_step=violations[0].step if violations else None,
        goal_reached=goal_reached,
        exact_match=(
            ground_truth is not None
            and not violations
            and goal_reached
            and exact_match(actions, ground_truth)
        ),
    )


def verify(
    raw_text: str, world: World, ground_truth: list[Action]
) -> tuple[list[Action] | None, VerificationReport]:
    """Parse then execute a raw model answer.
    Unparseable answers get a single parse violation at step 0.
    """
    try:
        actions = parse_solution(raw_text)
    except SolutionParseError as error:
        report = VerificationReport(
            parsed_ok=False,
            violations=(Violation(0, "parse", str(error)),),
            first_violation_step=0,
            goal_reached=False,
            exact_match=False,
        )
        return None, report

    return actions, execute(actions, world, ground_truth)
