from .oracle import (
    DEFAULT_MAX_STATES,
    StateSpaceTooLarge,
    UnreachableGoal,
    bfs_optimal,
    oracle_feasible,
)
from .task import (
    MAX_BACKTRACKS,
    Door,
    GroundTruth,
    InconsistentSkeleton,
    KeyInfo,
    PathSkeleton,
    RewindResult,
    SkeletonStep,
    Tag,
    derive_ground_truth,
    derive_seed,
    rewind_construct,
    sample_exact,
)
