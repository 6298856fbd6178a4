"""Ground-truth answers computed directly from a table.

All arithmetic is exact decimal arithmetic; rounding is half-up at the scale
each task mandates. Ages render either as a numeral or as the literal token
"> 89", which compares as 90.
"""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .table import Cell, Row, Table
from .tasks import (
    BinaryGold,
    BitsGold,
    Flavor,
    GoldAnswer,
    IdSetGold,
    NumberGold,
    TaskId,
    TaskParams,
    WordGold,
    number_scale,
)
from .templates import target_concepts

AGE_CAP_TOKEN = "> 89"
AGE_CAP_VALUE = 90


class OracleError(ValueError):
    pass


class MissingTargetError(OracleError):
    """The queried patient has no rows the question is about."""


def effective_age(cell: Cell) -> int:
    if isinstance(cell, str) and cell.strip() == AGE_CAP_TOKEN:
        return AGE_CAP_VALUE
    return int(str(cell))


def _quantized(value: Decimal, scale: int) -> Decimal:
    return value.quantize(Decimal(1).scaleb(-scale), rounding=ROUND_HALF_UP)


def _as_decimal(cell: Cell) -> Decimal:
    if isinstance(cell, Decimal):
        return cell
    if isinstance(cell, int):
        return Decimal(cell)
    return Decimal(str(cell).strip())


def _du_match_ids(task: TaskId, flavor: Flavor, table: Table, params: TaskParams) -> tuple[str, ...]:
    greater = task is TaskId.D_U1

    def keep(row: Row) -> bool:
        if flavor is Flavor.SYNTHEA:
            if row[params.selector_column] != params.selector_value:
                return False
            income = int(row["INCOME"])
            return income > params.threshold if greater else income < params.threshold
        for col, expected in params.extra_equals:
            if str(row[col]).strip().lower() != expected.lower():
                return False
        age = effective_age(row["age"])
        return age > params.threshold if greater else age < params.threshold

    id_col = "ID" if flavor is Flavor.SYNTHEA else "patientunitstayid"
    return tuple(str(row[id_col]) for row in table if keep(row))


def _target_values(flavor: Flavor, table: Table, params: TaskParams) -> list[Decimal]:
    description = "Pain severity" if flavor is Flavor.SYNTHEA else "Temperature"
    out = []
    for row in table:
        if str(row["PATIENT"]) == params.patient_id and row["DESCRIPTION"] == description:
            out.append(_as_decimal(row["VALUE"]))
    return out


def _patient_rows(table: Table, id_col: str, patient_id: Optional[str]) -> list[Row]:
    rows = [row for row in table if str(row[id_col]) == patient_id]
    if not rows:
        raise MissingTargetError(f"no rows for patient {patient_id}")
    return rows


def compute_gold(
    task: TaskId,
    flavor: Flavor,
    table: Table,
    params: TaskParams,
    truth=None,
) -> GoldAnswer:
    """Answer for one instance. K-R label tasks read the planted truth."""
    if task in (TaskId.D_U1, TaskId.D_U2):
        return IdSetGold(ids=_du_match_ids(task, flavor, table, params))

    if task in (TaskId.D_R1, TaskId.D_R2, TaskId.D_R3):
        scale = number_scale(task, flavor)
        values = _target_values(flavor, table, params)
        if task is TaskId.D_R1:
            return NumberGold(value=Decimal(len(values)), scale=scale)
        if not values:
            raise MissingTargetError(f"no target rows for patient {params.patient_id}")
        if task is TaskId.D_R2:
            mean = sum(values, Decimal(0)) / Decimal(len(values))
            return NumberGold(value=_quantized(mean, scale), scale=scale)
        return NumberGold(value=_quantized(sum(values, Decimal(0)), scale), scale=scale)

    if task in (TaskId.D_R4, TaskId.D_R5):
        scale = number_scale(task, flavor)
        if flavor is Flavor.SYNTHEA:
            row = _patient_rows(table, "ID", params.patient_id)[0]
            income = _as_decimal(row["INCOME"])
            healthcare = _as_decimal(row["HEALTHCARE"])
            value = income - healthcare if task is TaskId.D_R4 else income + healthcare
            return NumberGold(value=_quantized(value, scale), scale=scale)
        rows = _patient_rows(table, "patientunitstayid", params.patient_id)
        rows.sort(key=lambda r: int(r["unitvisitnumber"]))
        if task is TaskId.D_R4:
            change = _as_decimal(rows[-1]["dischargeweight"]) - _as_decimal(rows[0]["admissionweight"])
            return NumberGold(value=_quantized(change, scale), scale=scale)
        total = sum((_as_decimal(r["cost"]) for r in rows), Decimal(0))
        return NumberGold(value=_quantized(total, scale), scale=scale)

    if task is TaskId.K_U1:
        concept = target_concepts()[params.concept_key or ""]
        codes = {str(row["CODE"]) for row in table}
        return BinaryGold(value=1 if codes & concept.codes else 0)

    if truth is None:
        raise OracleError(f"{task.value} needs the planted truth")
    if task is TaskId.K_R1:
        if flavor is Flavor.SYNTHEA:
            return BinaryGold(value=_require(truth.mortality_label, task))
        return WordGold(word=_require(truth.mortality_word, task))
    if task is TaskId.K_R2:
        if flavor is Flavor.SYNTHEA:
            return BinaryGold(value=_require(truth.disorder_label, task))
        return BitsGold(bits=_require(truth.disease_vector, task))
    if task is TaskId.K_R3:
        if flavor is Flavor.SYNTHEA:
            return BinaryGold(value=_require(truth.recommend_label, task))
        return BitsGold(bits=_require(truth.drug_vector, task))
    raise OracleError(f"unhandled task {task}")


def _require(value, task: TaskId):
    if value is None:
        raise OracleError(f"planted truth lacks the {task.value} label")
    return value
