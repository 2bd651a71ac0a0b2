from .prompt import (
    FEW_SHOT_FILES,
    SOLUTION_LINE,
    CanonicalExample,
    PromptBundle,
    build_prompt,
    canonical_examples,
    load_resource,
    render_problem,
)
