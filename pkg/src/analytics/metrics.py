"""Per-run scores of a model answer against the ground truth."""
from dataclasses import dataclass

from ..dataset import TaskInstance
from ..env import Action, verify

CRITICAL_VERBS = ("pick_up_key", "use_key", "unlock_and_open_door_to")


@dataclass(frozen=True)
class RunResult:
    instance_id: str
    run_index: int
    parsed_ok: bool
    exact_match: bool
    goal_reached: bool
    progress: float
    precision: float
    recall: float
    first_violation_step: int | None
    output_tokens: int
    missed_critical: int = 0
    violations: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.exact_match:
            assert self.progress == self.precision == self.recall == 1.0

    @property
    def legal_suboptimal(self) -> bool:
        return self.goal_reached and not self.violations and not self.exact_match

    @classmethod
    def from_record(cls, record: dict) -> "RunResult":
        record = dict(record)
        record.pop("legal_suboptimal", None)
        record["violations"] = tuple(
            (step, category) for step, category in record["violations"]
        )
        return cls(**record)

    def to_record(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "run_index": self.run_index,
            "parsed_ok": self.parsed_ok,
            "exact_match": self.exact_match,
            "goal_reached": self.goal_reached,
            "legal_suboptimal": self.legal_suboptimal,
            "progress": self.progress,
            "precision": self.precision,
            "recall": self.recall,
            "first_violation_step": self.first_violation_step,
            "output_tokens": self.output_tokens,
            "missed_critical": self.missed_critical,
            "violations": [list(violation) for violation in self.violations],
        }


def _normalize(actions: list[Action]) -> list[Action]:
    return [action.normalized() for action in actions]


def progress_ratio(predicted: list[Action] | None, ground_truth: list[Action]) -> float:
    """Length of the common prefix over the length of the ground truth."""
    assert len(ground_truth) > 0
    if predicted is None:
        return 0.0

    k = 0
    for pred, truth in zip(_normalize(predicted), _normalize(ground_truth)):
        if pred != truth:
            break
        k += 1
    return k / len(ground_truth)


def lcs_matches(
    predicted: list[Action], ground_truth: list[Action]
) -> list[tuple[int, int]]:
    """Index pairs `(i_pred, i_truth)` of a longest common subsequence."""
    pred, truth = _normalize(predicted), _normalize(ground_truth)
    n, m = len(pred), len(truth)

    # lengths[i][j] = LCS of pred[i:] and truth[j:].
    lengths = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if pred[i] == truth[j]:
                lengths[i][j] = lengths[i + 1][j + 1] + 1
            else:
                lengths[i][j] = max(lengths[i + 1][j], lengths[i][j + 1])

    matches = []
    i = j = 0
    while i < n and j < m:
        if pred[i] == truth[j]:
            matches.append((i, j))
            i, j = i + 1, j + 1
        elif lengths[i + 1][j] >= lengths[i][j + 1]:
            i += 1
        else:
            j += 1
    return matches


def precision_recall(
    predicted: list[Action] | None, ground_truth: list[Action]
) -> tuple[float, float]:
    assert len(ground_truth) > 0
    if not predicted:
        return 0.0, 0.0

    matched = len(lcs_matches(predicted, ground_truth))
    return matched / len(predicted), matched / len(ground_truth)


def missed_critical(predicted: list[Action] | None, ground_truth: list[Action]) -> int:
    """Key and door actions of the ground truth left out of the best alignment."""
    matched = set()
    if predicted:
        matched = {j for _, j in lcs_matches(predicted, ground_truth)}

    return sum(
        action.verb in CRITICAL_VERBS and index not in matched
        for index, action in enumerate(ground_truth)
    )


def score_run(
    instance: TaskInstance,
    raw_text: str | None,
    run_index: int = 0,
    output_tokens: int = -1,
) -> RunResult:
    """Verify one answer and compute all of its metrics.

    A missing answer (failed request) is scored as a parse failure.
    """
    ground_truth = list(instance.ground_truth.actions)
    predicted, report = verify(raw_text or "", instance.world, ground_truth)
    precision, recall = precision_recall(predicted, ground_truth)

    return RunResult(
        instance_id=instance.id,
        run_index=run_index,
        parsed_ok=report.parsed_ok,
        exact_match=report.exact_match,
        goal_reached=report.goal_reached,
        progress=progress_ratio(predicted, ground_truth),
        precision=precision,
        recall=recall,
        first_violation_step=report.first_violation_step,
        output_tokens=output_tokens,
        missed_critical=missed_critical(predicted, ground_truth),
        violations=tuple((v.step, v.category) for v in report.violations),
    )
