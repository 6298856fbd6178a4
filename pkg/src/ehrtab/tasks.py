"""Task taxonomy, gold answers, and output contracts.

Eleven task ids cross two table flavors. Each (task, flavor) pair fixes an
output contract: what a well-formed final answer line looks like and at what
numeric scale it is graded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Optional, Union

from .table import Table


class Flavor(Enum):
    SYNTHEA = "synthea"
    EICU = "eicu"


class Scenario(Enum):
    DATA = "data-driven"
    KNOWLEDGE = "knowledge-driven"


class Level(Enum):
    UNDERSTANDING = "understanding"
    REASONING = "reasoning"


class MetricKind(Enum):
    ACCURACY = "accuracy"
    AUC = "auc"
    MULTILABEL_AUC = "multilabel_auc"


class TaskId(Enum):
    D_U1 = "D-U1"
    D_U2 = "D-U2"
    D_R1 = "D-R1"
    D_R2 = "D-R2"
    D_R3 = "D-R3"
    D_R4 = "D-R4"
    D_R5 = "D-R5"
    K_U1 = "K-U1"
    K_R1 = "K-R1"
    K_R2 = "K-R2"
    K_R3 = "K-R3"


# (scenario, level, category) per task id.
TAXONOMY: dict[TaskId, tuple[Scenario, Level, str]] = {
    TaskId.D_U1: (Scenario.DATA, Level.UNDERSTANDING, "information retrieval"),
    TaskId.D_U2: (Scenario.DATA, Level.UNDERSTANDING, "information retrieval"),
    TaskId.D_R1: (Scenario.DATA, Level.REASONING, "data aggregation"),
    TaskId.D_R2: (Scenario.DATA, Level.REASONING, "data aggregation"),
    TaskId.D_R3: (Scenario.DATA, Level.REASONING, "data aggregation"),
    TaskId.D_R4: (Scenario.DATA, Level.REASONING, "arithmetic computation"),
    TaskId.D_R5: (Scenario.DATA, Level.REASONING, "arithmetic computation"),
    TaskId.K_U1: (Scenario.KNOWLEDGE, Level.UNDERSTANDING, "clinical identification"),
    TaskId.K_R1: (Scenario.KNOWLEDGE, Level.REASONING, "diagnostic assessment"),
    TaskId.K_R2: (Scenario.KNOWLEDGE, Level.REASONING, "diagnostic assessment"),
    TaskId.K_R3: (Scenario.KNOWLEDGE, Level.REASONING, "treatment planning"),
}

D_TASKS = [t for t in TaskId if t.value.startswith("D-")]
K_TASKS = [t for t in TaskId if t.value.startswith("K-")]


def metric_kind(task: TaskId, flavor: Flavor) -> MetricKind:
    if task in D_TASKS:
        return MetricKind.ACCURACY
    if task in (TaskId.K_R2, TaskId.K_R3) and flavor is Flavor.EICU:
        return MetricKind.MULTILABEL_AUC
    return MetricKind.AUC


# ---------------------------------------------------------------------------
# Gold answers


@dataclass(frozen=True)
class IdSetGold:
    """Ordered id list; graded as an order-insensitive set."""

    ids: tuple[str, ...]


@dataclass(frozen=True)
class NumberGold:
    """Exact decimal at the task's mandated scale."""

    value: Decimal
    scale: int


@dataclass(frozen=True)
class BinaryGold:
    value: int  # 0 or 1


@dataclass(frozen=True)
class WordGold:
    """One of two words, e.g. Alive/Expired."""

    word: str


@dataclass(frozen=True)
class BitsGold:
    bits: tuple[int, ...]  # exactly 10 entries of 0/1


GoldAnswer = Union[IdSetGold, NumberGold, BinaryGold, WordGold, BitsGold]


# ---------------------------------------------------------------------------
# Output contracts


@dataclass(frozen=True)
class IdListContract:
    """Line '<tag>: id,id,...'; the NULL token (any case) means empty set."""

    tag: str


@dataclass(frozen=True)
class NumberContract:
    """Number at a fixed scale; tag prefix optional when tag is None."""

    scale: int
    tag: Optional[str] = None


@dataclass(frozen=True)
class BinaryLabelContract:
    """Line '<label>: 0|1', label matched case-insensitively."""

    label: str


@dataclass(frozen=True)
class AliveExpiredContract:
    """Single word Alive or Expired."""


@dataclass(frozen=True)
class TenBitsContract:
    """Exactly ten 0/1 values, separators tolerated."""


OutputContract = Union[
    IdListContract,
    NumberContract,
    BinaryLabelContract,
    AliveExpiredContract,
    TenBitsContract,
]


def number_scale(task: TaskId, flavor: Flavor) -> int:
    """Mandated rounding scale for numeric tasks."""
    if task is TaskId.D_R1:
        return 0
    if task is TaskId.D_R2:
        return 1
    if task is TaskId.D_R3:
        return 0 if flavor is Flavor.SYNTHEA else 1
    if task in (TaskId.D_R4, TaskId.D_R5):
        return 2 if flavor is Flavor.SYNTHEA else 1
    raise ValueError(f"{task} is not a numeric task")


def contract_for(task: TaskId, flavor: Flavor, label: Optional[str] = None) -> OutputContract:
    """Output contract for (task, flavor); label names the K-U1 concept."""
    if task in (TaskId.D_U1, TaskId.D_U2):
        return IdListContract(tag=task.value)
    if task in (TaskId.D_R1, TaskId.D_R2, TaskId.D_R3, TaskId.D_R4, TaskId.D_R5):
        tag = task.value if flavor is Flavor.SYNTHEA else None
        return NumberContract(scale=number_scale(task, flavor), tag=tag)
    if task is TaskId.K_U1:
        if not label:
            raise ValueError("K-U1 contract needs the concept label")
        return BinaryLabelContract(label=label)
    if flavor is Flavor.SYNTHEA:
        fixed = {TaskId.K_R1: "Death", TaskId.K_R2: "Disorder", TaskId.K_R3: "Recommend"}
        return BinaryLabelContract(label=fixed[task])
    if task is TaskId.K_R1:
        return AliveExpiredContract()
    return TenBitsContract()


def contract_tag(contract: OutputContract) -> str:
    """Stable one-line descriptor used in instance records."""
    if isinstance(contract, IdListContract):
        return f"idlist:{contract.tag}"
    if isinstance(contract, NumberContract):
        return f"number:{contract.tag or '-'}:{contract.scale}"
    if isinstance(contract, BinaryLabelContract):
        return f"binary:{contract.label}"
    if isinstance(contract, AliveExpiredContract):
        return "word:alive-expired"
    return "bits:10"


def parse_contract_tag(tag: str) -> OutputContract:
    kind, _, rest = tag.partition(":")
    if kind == "idlist":
        return IdListContract(tag=rest)
    if kind == "number":
        prefix, _, scale = rest.rpartition(":")
        return NumberContract(scale=int(scale), tag=None if prefix == "-" else prefix)
    if kind == "binary":
        return BinaryLabelContract(label=rest)
    if kind == "word":
        return AliveExpiredContract()
    if kind == "bits":
        return TenBitsContract()
    raise ValueError(f"bad contract tag {tag!r}")


# ---------------------------------------------------------------------------
# Task parameters and instances


@dataclass(frozen=True)
class TaskParams:
    """Everything the oracle needs beyond the table itself.

    Which fields are set depends on the task: D-U tasks use the condition
    fields, D-R tasks use patient_id, K-U1 uses concept_key.
    """

    patient_id: Optional[str] = None
    selector_column: Optional[str] = None  # D-U equality conjunct column
    selector_value: Optional[str] = None
    threshold: Optional[int] = None  # D-U numeric conjunct
    extra_equals: tuple[tuple[str, str], ...] = field(default_factory=tuple)
    concept_key: Optional[str] = None  # K-U1


@dataclass(frozen=True)
class TaskInstance:
    """One benchmark item: table, rendered instruction, contract, gold."""

    task: TaskId
    flavor: Flavor
    table: Table
    instruction: str
    contract: OutputContract
    gold: GoldAnswer
    instance_id: str
    seed: int
    params: TaskParams = field(default_factory=TaskParams)
