"""Scoring: accuracy for retrieval tasks, balanced-accuracy AUC for knowledge
tasks, validity accounting, and relative gain between two scores.

Invalid outputs count against accuracy but are excluded from the AUC
confusion matrix; both effects are tracked through n_invalid. A score
degenerates to NoValidOutput once more than half the outputs are invalid
(threshold configurable).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .answers import GradeOutcome
from .tasks import TaskId

DEFAULT_INVALID_THRESHOLD = 0.5


class MetricError(ValueError):
    pass


class EmptyInputError(MetricError):
    pass


class SingleClassGoldsError(MetricError):
    pass


class NoScorablePositionError(MetricError):
    pass


class BaseAtCeilingError(MetricError):
    pass


class MetricKind(enum.Enum):
    ACC = "ACC"
    AUC = "AUC"


class _NoValidOutput:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoValidOutput"


NO_VALID_OUTPUT = _NoValidOutput()

ScoreValue = Union[float, _NoValidOutput]


@dataclass(frozen=True)
class TaskScore:
    metric_kind: MetricKind
    value: ScoreValue
    n_total: int
    n_invalid: int
    task: Optional[TaskId] = None

    @property
    def is_valid(self) -> bool:
        return not isinstance(self.value, _NoValidOutput)


def metric_kind_for(task: TaskId) -> MetricKind:
    return MetricKind.AUC if task.value.startswith("K") else MetricKind.ACC


def _threshold_fires(n_invalid: int, n_total: int, threshold: float) -> bool:
    return n_invalid > threshold * n_total


def accuracy(
    outcomes: Sequence[GradeOutcome],
    task: Optional[TaskId] = None,
    invalid_threshold: float = DEFAULT_INVALID_THRESHOLD,
) -> TaskScore:
    """Percent of Correct outcomes; Invalid stays in the denominator."""
    if not outcomes:
        raise EmptyInputError("no outcomes to score")
    n = len(outcomes)
    n_invalid = sum(1 for o in outcomes if o is GradeOutcome.INVALID)
    if _threshold_fires(n_invalid, n, invalid_threshold):
        return TaskScore(MetricKind.ACC, NO_VALID_OUTPUT, n, n_invalid, task)
    n_correct = sum(1 for o in outcomes if o is GradeOutcome.CORRECT)
    return TaskScore(MetricKind.ACC, 100.0 * n_correct / n, n, n_invalid, task)


def _is_binary(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value in (0, 1)


def _balanced_value(golds: Sequence[int], preds: Sequence[int]) -> float:
    """Mean of per-class recall; a class with no valid members scores 0."""
    recalls = []
    for cls in (1, 0):
        total = sum(1 for g in golds if g == cls)
        if total == 0:
            recalls.append(0.0)
            continue
        hit = sum(1 for g, p in zip(golds, preds) if g == cls and p == cls)
        recalls.append(hit / total)
    return 100.0 * (recalls[0] + recalls[1]) / 2


def balanced_auc(
    golds: Sequence[int],
    preds: Sequence,
    task: Optional[TaskId] = None,
    invalid_threshold: float = DEFAULT_INVALID_THRESHOLD,
) -> TaskScore:
    """Balanced accuracy over the valid predictions."""
    if not golds:
        raise EmptyInputError("no golds to score")
    if len(golds) != len(preds):
        raise MetricError("golds and preds differ in length")
    if not all(_is_binary(g) for g in golds):
        raise MetricError("golds must be 0/1")
    if len(set(golds)) < 2:
        raise SingleClassGoldsError("golds contain a single class")
    n = len(golds)
    pairs = [(g, p) for g, p in zip(golds, preds) if _is_binary(p)]
    n_invalid = n - len(pairs)
    if _threshold_fires(n_invalid, n, invalid_threshold):
        return TaskScore(MetricKind.AUC, NO_VALID_OUTPUT, n, n_invalid, task)
    value = _balanced_value([g for g, _ in pairs], [p for _, p in pairs])
    return TaskScore(MetricKind.AUC, value, n, n_invalid, task)


def multilabel_auc(
    golds: Sequence[Sequence[int]],
    preds: Sequence,
    task: Optional[TaskId] = None,
    invalid_threshold: float = DEFAULT_INVALID_THRESHOLD,
) -> TaskScore:
    """Macro mean of per-position balanced accuracy.

    Positions whose golds hold a single class are unscorable and skipped; a
    prediction that is not a full 0/1 vector of the right width is invalid
    and drops out of every position.
    """
    if not golds:
        raise EmptyInputError("no golds to score")
    if len(golds) != len(preds):
        raise MetricError("golds and preds differ in length")
    width = len(golds[0])
    if width == 0 or any(len(g) != width for g in golds):
        raise MetricError("gold vectors must share a positive width")

    def vector_valid(p) -> bool:
        if not isinstance(p, (list, tuple)):
            return False
        return len(p) == width and all(_is_binary(b) for b in p)

    n = len(golds)
    kept = [(g, p) for g, p in zip(golds, preds) if vector_valid(p)]
    n_invalid = n - len(kept)
    if _threshold_fires(n_invalid, n, invalid_threshold):
        return TaskScore(MetricKind.AUC, NO_VALID_OUTPUT, n, n_invalid, task)
    position_scores = []
    for pos in range(width):
        col_golds = [g[pos] for g, _ in kept]
        if len(set(col_golds)) < 2:
            continue
        col_preds = [p[pos] for _, p in kept]
        position_scores.append(_balanced_value(col_golds, col_preds))
    if not position_scores:
        raise NoScorablePositionError("no label position has both classes")
    value = sum(position_scores) / len(position_scores)
    return TaskScore(MetricKind.AUC, value, n, n_invalid, task)


def relative_gain(base: Union[TaskScore, float], method: Union[TaskScore, float]) -> float:
    """Percent of the remaining headroom that the method closed, floored at 0."""
    base_value = base.value if isinstance(base, TaskScore) else base
    method_value = method.value if isinstance(method, TaskScore) else method
    for v in (base_value, method_value):
        if isinstance(v, _NoValidOutput):
            raise MetricError("cannot compare a NoValidOutput score")
    if base_value == 100:
        raise BaseAtCeilingError("base score is already at the ceiling")
    gain = 100.0 * (method_value - base_value) / (100.0 - base_value)
    return max(gain, 0.0)


def score_line(
    score: TaskScore,
    task: TaskId,
    flavor: str,
    model: str,
    fmt: str,
    k_shot: int,
) -> dict:
    """One report record; value serializes as the string "NoValidOutput"."""
    value = score.value if score.is_valid else "NoValidOutput"
    return {
        "task": task.value,
        "flavor": flavor,
        "model": model,
        "format": fmt,
        "k_shot": k_shot,
        "metric_kind": score.metric_kind.value,
        "value": value,
        "n_invalid": score.n_invalid,
    }
