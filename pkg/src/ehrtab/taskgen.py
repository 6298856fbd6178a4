"""Instance synthesis: seeded benchmark construction and serialization.

Seeds derive per instance as stream_seed(root, task, flavor, index, purpose).
The purpose label separates populations drawn from one root seed: "eval" for
benchmark instances, "finetune" for training exports, "pool" for few-shot
exemplars. Serialized records carry the instance seed, so a reader can
regenerate the table and verify the stored bytes.
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Optional, TextIO

from .answers import render_gold
from .oracle import compute_gold
from .rng import stream_seed
from .synth import (
    GeneratorConfig,
    LatentTruth,
    gen_clinical_profile,
    gen_condition_codes,
    gen_demographics,
    gen_observations,
    gen_weight_cost,
)
from .table import Table, parse_tsv, render_tsv, table_hash
from .tasks import (
    Flavor,
    IdSetGold,
    NumberGold,
    TaskId,
    TaskInstance,
    contract_for,
    contract_tag,
    parse_contract_tag,
)
from .templates import render_instruction, target_concepts
from .synth import schema_hints

EVAL_PURPOSE = "eval"
FINETUNE_PURPOSE = "finetune"
POOL_PURPOSE = "pool"

EVAL_INSTANCES_PER_TASK = 100
FINETUNE_INSTANCES_PER_TASK = 30

_GENERATORS: dict[TaskId, Callable[[GeneratorConfig], tuple[Table, LatentTruth]]] = {
    TaskId.D_U1: gen_demographics,
    TaskId.D_U2: gen_demographics,
    TaskId.D_R1: gen_observations,
    TaskId.D_R2: gen_observations,
    TaskId.D_R3: gen_observations,
    TaskId.D_R4: gen_weight_cost,
    TaskId.D_R5: gen_weight_cost,
    TaskId.K_U1: gen_condition_codes,
    TaskId.K_R1: gen_clinical_profile,
    TaskId.K_R2: gen_clinical_profile,
    TaskId.K_R3: gen_clinical_profile,
}


class IntegrityError(ValueError):
    """A serialized record disagrees with its regenerated content."""


def _generate(task: TaskId, flavor: Flavor, inst_seed: int) -> tuple[Table, LatentTruth]:
    config = GeneratorConfig(seed=inst_seed, flavor=flavor, task=task)
    return _GENERATORS[task](config)


def _concept_label(params) -> Optional[str]:
    if params.concept_key is None:
        return None
    return target_concepts()[params.concept_key].display


def _cross_check(task: TaskId, gold, truth: LatentTruth) -> None:
    if isinstance(gold, IdSetGold):
        if gold.ids != truth.match_ids:
            raise IntegrityError(f"{task.value}: oracle ids {gold.ids} != planted {truth.match_ids}")
    if task is TaskId.D_R1 and isinstance(gold, NumberGold):
        if int(gold.value) != len(truth.target_values):
            raise IntegrityError(f"{task.value}: count {gold.value} != planted {len(truth.target_values)}")
    if task is TaskId.K_U1:
        if bool(gold.value) != truth.target_present:
            raise IntegrityError(f"{task.value}: oracle {gold.value} != planted {truth.target_present}")


def build_instance(
    task: TaskId, flavor: Flavor, root_seed: int, index: int, purpose: str = EVAL_PURPOSE
) -> TaskInstance:
    inst_seed = stream_seed(root_seed, task.value, flavor.value, index, purpose)
    table, truth = _generate(task, flavor, inst_seed)
    gold = compute_gold(task, flavor, table, truth.params, truth)
    _cross_check(task, gold, truth)
    contract = contract_for(task, flavor, label=_concept_label(truth.params))
    instruction = render_instruction(task, flavor, render_tsv(table), truth.params)
    return TaskInstance(
        task=task,
        flavor=flavor,
        table=table,
        instruction=instruction,
        contract=contract,
        gold=gold,
        instance_id=f"{task.value}.{flavor.value}.{purpose}.{index:04d}",
        seed=inst_seed,
        params=truth.params,
    )


def synthesize(
    task: TaskId, flavor: Flavor, seed: int, n: int, purpose: str = EVAL_PURPOSE
) -> list[TaskInstance]:
    """n deterministic instances for one (task, flavor)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return [build_instance(task, flavor, seed, i, purpose) for i in range(n)]


def full_eval_set(seed: int, per_task: int = EVAL_INSTANCES_PER_TASK) -> list[TaskInstance]:
    """All 11 tasks over both flavors; 2,200 instances at the default size."""
    out = []
    for task in TaskId:
        for flavor in Flavor:
            out.extend(synthesize(task, flavor, seed, per_task))
    return out


def export_finetune_set(
    task: TaskId,
    flavor: Flavor,
    seed: int,
    avoid_hashes: Optional[set[str]] = None,
    n: int = FINETUNE_INSTANCES_PER_TASK,
) -> list[TaskInstance]:
    """n training instances drawn from the finetune stream.

    Candidates whose table hash appears in avoid_hashes are skipped, so the
    export provably shares no table with the evaluation set.
    """
    avoid = avoid_hashes or set()
    out: list[TaskInstance] = []
    index = 0
    while len(out) < n:
        inst = build_instance(task, flavor, seed, index, FINETUNE_PURPOSE)
        index += 1
        if table_hash(inst.table) in avoid:
            continue
        out.append(inst)
    return out


def full_finetune_set(seed: int, flavor: Flavor, avoid_hashes: Optional[set[str]] = None) -> list[TaskInstance]:
    """Multi-task export: 11 tasks x 30 = 330 instances for one flavor."""
    out = []
    for task in TaskId:
        out.extend(export_finetune_set(task, flavor, seed, avoid_hashes))
    return out


def finetune_pairs(instances: Iterable[TaskInstance]) -> list[dict]:
    return [
        {"instruction": inst.instruction, "response": render_gold(inst.gold, inst.contract)}
        for inst in instances
    ]


# ---------------------------------------------------------------------------
# Serialization: line-delimited JSON records

RECORD_KEYS = (
    "instance_id",
    "task",
    "flavor",
    "seed",
    "table_tsv",
    "instruction",
    "contract_tag",
    "gold_rendered",
)


def instance_to_record(inst: TaskInstance) -> dict:
    return {
        "instance_id": inst.instance_id,
        "task": inst.task.value,
        "flavor": inst.flavor.value,
        "seed": inst.seed,
        "table_tsv": render_tsv(inst.table),
        "instruction": inst.instruction,
        "contract_tag": contract_tag(inst.contract),
        "gold_rendered": render_gold(inst.gold, inst.contract),
    }


def record_to_instance(record: dict) -> TaskInstance:
    """Rebuild an instance, verifying the stored bytes against regeneration."""
    missing = set(RECORD_KEYS) - set(record)
    if missing:
        raise IntegrityError(f"record lacks keys {sorted(missing)}")
    task = TaskId(record["task"])
    flavor = Flavor(record["flavor"])
    table, truth = _generate(task, flavor, int(record["seed"]))
    if render_tsv(table) != record["table_tsv"]:
        raise IntegrityError(f"{record['instance_id']}: stored table differs from regeneration")
    gold = compute_gold(task, flavor, table, truth.params, truth)
    contract = parse_contract_tag(record["contract_tag"])
    expected = contract_for(task, flavor, label=_concept_label(truth.params))
    if contract != expected:
        raise IntegrityError(f"{record['instance_id']}: contract tag mismatch")
    if render_gold(gold, contract) != record["gold_rendered"]:
        raise IntegrityError(f"{record['instance_id']}: stored gold differs from oracle")
    return TaskInstance(
        task=task,
        flavor=flavor,
        table=table,
        instruction=record["instruction"],
        contract=contract,
        gold=gold,
        instance_id=record["instance_id"],
        seed=int(record["seed"]),
        params=truth.params,
    )


def record_table(record: dict) -> Table:
    """Parse just the stored table, without regeneration."""
    task = TaskId(record["task"])
    flavor = Flavor(record["flavor"])
    return parse_tsv(record["table_tsv"], hints=schema_hints(task, flavor))


def write_instances(fp: TextIO, instances: Iterable[TaskInstance]) -> int:
    n = 0
    for inst in instances:
        fp.write(json.dumps(instance_to_record(inst), sort_keys=True) + "\n")
        n += 1
    return n


def read_instances(fp: TextIO) -> list[TaskInstance]:
    return [record_to_instance(json.loads(line)) for line in fp if line.strip()]


# ---------------------------------------------------------------------------
# Fixed mixed suite used by the pipeline end-to-end checks

SUITE_TASKS = (TaskId.D_U1, TaskId.D_R1, TaskId.D_R2, TaskId.D_R3, TaskId.D_R5)


def dtask_suite(seed: int, per_cell: int = 5) -> list[TaskInstance]:
    """50 instances: 5 executable D-tasks x both flavors x per_cell."""
    out = []
    for task in SUITE_TASKS:
        for flavor in Flavor:
            out.extend(synthesize(task, flavor, seed, per_cell, purpose="suite"))
    return out
