"""Exemplar pool and k-shot assembly tests."""

import pytest

from ehrtab.fewshot import (
    EVAL_SYSTEM_TEXT,
    ExemplarPool,
    PoolTooSmallError,
    assemble,
    build_pool,
)
from ehrtab.formats import InputFormat, prompt_text
from ehrtab.table import table_hash
from ehrtab.tasks import Flavor, TaskId
from ehrtab.taskgen import build_instance, synthesize

POOL = build_pool(TaskId.D_R1, Flavor.SYNTHEA, pool_seed=42)
QUERY = build_instance(TaskId.D_R1, Flavor.SYNTHEA, 42, 0)


def test_zero_shot_is_bare_prompt():
    req = assemble(QUERY, 0, POOL, InputFormat.PLAIN)
    assert req.user_text == prompt_text(QUERY, InputFormat.PLAIN)
    assert req.system_text == EVAL_SYSTEM_TEXT


def test_three_shot_prefix_of_five_shot():
    three = assemble(QUERY, 3, POOL, InputFormat.PLAIN).user_text
    five = assemble(QUERY, 5, POOL, InputFormat.PLAIN).user_text
    prefix = three[: three.rfind(prompt_text(QUERY, InputFormat.PLAIN))]
    assert five.startswith(prefix)
    assert three.endswith(prompt_text(QUERY, InputFormat.PLAIN))
    assert five.endswith(prompt_text(QUERY, InputFormat.PLAIN))


def test_demonstrations_show_contract_rendered_gold():
    req = assemble(QUERY, 1, POOL, InputFormat.PLAIN)
    demo_part = req.user_text.split("\n\n")[0:-1]
    joined = "\n\n".join(demo_part)
    assert "D-R1: " in joined


def test_prompt_length_strictly_increases_with_k():
    for fmt in InputFormat:
        sizes = [len(assemble(QUERY, k, POOL, fmt).user_text) for k in (0, 1, 3, 5)]
        assert sizes == sorted(set(sizes)), fmt


def test_determinism():
    a = assemble(QUERY, 5, POOL, InputFormat.SPECIAL)
    b = assemble(QUERY, 5, POOL, InputFormat.SPECIAL)
    assert a == b
    rebuilt_pool = build_pool(TaskId.D_R1, Flavor.SYNTHEA, pool_seed=42)
    c = assemble(QUERY, 5, rebuilt_pool, InputFormat.SPECIAL)
    assert a == c


def test_k_validation_and_pool_too_small():
    with pytest.raises(ValueError):
        assemble(QUERY, 2, POOL, InputFormat.PLAIN)
    small = ExemplarPool(TaskId.D_R1, Flavor.SYNTHEA, 1, POOL.instances[:2])
    with pytest.raises(PoolTooSmallError):
        assemble(QUERY, 3, small, InputFormat.PLAIN)


def test_pool_mismatch_rejected():
    other = build_instance(TaskId.D_R2, Flavor.SYNTHEA, 42, 0)
    with pytest.raises(ValueError):
        assemble(other, 1, POOL, InputFormat.PLAIN)


def test_pool_disjoint_from_eval_instances():
    eval_hashes = {
        table_hash(inst.table) for inst in synthesize(TaskId.D_R1, Flavor.SYNTHEA, 42, 100)
    }
    pool_hashes = {table_hash(inst.table) for inst in POOL.instances}
    assert len(pool_hashes) == len(POOL.instances)
    assert not (eval_hashes & pool_hashes)
    avoided = build_pool(
        TaskId.D_R1, Flavor.SYNTHEA, 42, size=4, avoid_hashes=frozenset(eval_hashes)
    )
    assert not (eval_hashes & {table_hash(i.table) for i in avoided.instances})


def test_demonstrations_never_include_query():
    count = 0
    for seed in range(10):
        pool = build_pool(TaskId.K_U1, Flavor.EICU, seed)
        for idx in range(20):
            query = build_instance(TaskId.K_U1, Flavor.EICU, seed, idx)
            req = assemble(query, 5, pool, InputFormat.PLAIN)
            demo_hashes = {table_hash(i.table) for i in pool.instances}
            assert table_hash(query.table) not in demo_hashes
            assert req.user_text.count(query.instruction.strip()) == 1
            count += 5
    assert count == 1000
