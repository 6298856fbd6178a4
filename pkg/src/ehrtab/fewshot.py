"""Deterministic k-shot prompt assembly from a held-out exemplar pool.

Demonstrations use distinct tables drawn from a dedicated pool population,
never the query instance, and show the gold answer rendered exactly per the
task's output contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .answers import render_gold
from .backend import ChatRequest
from .formats import InputFormat, prompt_text
from .rng import Stream, stream_seed
from .table import table_hash
from .taskgen import POOL_PURPOSE, build_instance
from .tasks import Flavor, TaskId, TaskInstance

K_SHOT_CHOICES = (0, 1, 3, 5)
DEFAULT_POOL_SIZE = 8

EVAL_SYSTEM_TEXT = (
    "You answer questions about a small clinical table. "
    "Reply with the answer line in exactly the requested format and nothing else."
)


class PoolTooSmallError(ValueError):
    pass


@dataclass(frozen=True)
class ExemplarPool:
    task: TaskId
    flavor: Flavor
    pool_seed: int
    instances: tuple[TaskInstance, ...]


def build_pool(
    task: TaskId,
    flavor: Flavor,
    pool_seed: int,
    size: int = DEFAULT_POOL_SIZE,
    avoid_hashes: frozenset = frozenset(),
) -> ExemplarPool:
    """Draw pool instances from their own seed stream, skipping any table
    whose hash collides with avoid_hashes or an earlier pool table."""
    instances = []
    seen = set(avoid_hashes)
    index = 0
    while len(instances) < size:
        inst = build_instance(task, flavor, pool_seed, index, purpose=POOL_PURPOSE)
        index += 1
        h = table_hash(inst.table)
        if h in seen:
            continue
        seen.add(h)
        instances.append(inst)
    return ExemplarPool(task=task, flavor=flavor, pool_seed=pool_seed, instances=tuple(instances))


def _demonstration_order(pool: ExemplarPool) -> list[int]:
    order = list(range(len(pool.instances)))
    rng = Stream(stream_seed(pool.pool_seed, pool.task.value, pool.flavor.value, 0, "shot-order"))
    rng.shuffle(order)
    return order


def demonstration_block(instance: TaskInstance, fmt: InputFormat) -> str:
    gold_line = render_gold(instance.gold, instance.contract)
    return prompt_text(instance, fmt) + "\n" + gold_line


def assemble(
    instance: TaskInstance,
    k: int,
    pool: Optional[ExemplarPool],
    fmt: InputFormat,
    model_name: str = "local-model",
) -> ChatRequest:
    """Build the single-turn request: k demonstrations then the query.

    Zero-shot needs no exemplars, so pool may be None when k is 0.
    """
    if k not in K_SHOT_CHOICES:
        raise ValueError(f"k must be one of {K_SHOT_CHOICES}, got {k}")
    blocks = []
    if k > 0:
        if pool is None:
            raise PoolTooSmallError("k-shot assembly needs an exemplar pool")
        if (pool.task, pool.flavor) != (instance.task, instance.flavor):
            raise ValueError("pool and instance disagree on task or flavor")
        if k > len(pool.instances):
            raise PoolTooSmallError(f"pool holds {len(pool.instances)} exemplars, need {k}")
        order = _demonstration_order(pool)
        blocks = [demonstration_block(pool.instances[i], fmt) for i in order[:k]]
    blocks.append(prompt_text(instance, fmt))
    return ChatRequest(
        system_text=EVAL_SYSTEM_TEXT,
        user_text="\n\n".join(blocks),
        model_name=model_name,
    )
