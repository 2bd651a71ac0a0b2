from .env import MazeEnv
from .verifier import (
    SolutionParseError,
    VerificationReport,
    exact_match,
    execute,
    parse_solution,
    render_actions,
    verify,
)
from .world import (
    KEY_VERBS,
    RESCUE_TARGET,
    ROOM_VERBS,
    VERBS,
    VIOLATION_CATEGORIES,
    Action,
    Violation,
    World,
    WorldState,
    transition,
)
