"""Three-stage staged-reasoning pipeline: plan, align, decide-and-execute.

Each stage is one completion. The execution decision is rule-based by
default; a model-asked mode exists behind decision_mode="model". The code
path needs an executor object; without one, enabled fallback routes to the
direct-reasoning prompt. All stage prompts come from packaged templates and
tests pin their anchor wording byte-for-byte.
"""

from __future__ import annotations

import enum
import json
import re
import time
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Optional, Protocol, Tuple

from .answers import (
    Invalid,
    ParsedAnswer,
    parse_answer,
    parsed_from_jsonable,
    parsed_to_jsonable,
    render_gold,
)
from .backend import Backend, BackendError, ChatRequest, complete
from .table import Table, render_tsv
from .tasks import (
    AliveExpiredContract,
    BinaryGold,
    BinaryLabelContract,
    BitsGold,
    IdListContract,
    IdSetGold,
    NumberContract,
    NumberGold,
    TaskId,
    TaskInstance,
    TenBitsContract,
    WordGold,
)
from .templates import stage_template

STAGE_SYSTEM_TEXT = "Complete the stage exactly as instructed."

PLAN_TEMPLATE_NAMES = {"DU": "plan_du", "DR": "plan_dr", "KU": "plan_ku", "KR": "plan_kr"}


class PipelineError(Exception):
    pass


class ExecutorUnavailableError(PipelineError):
    pass


class PlanKind(enum.Enum):
    DU = "DU"
    DR = "DR"
    KU = "KU"
    KR = "KR"


class Decision(enum.Enum):
    CODE = "Code"
    DIRECT = "Direct"


def plan_kind_for(task: TaskId) -> PlanKind:
    """Scenario and level alone pick the planning template."""
    if task in (TaskId.D_U1, TaskId.D_U2):
        return PlanKind.DU
    if task in (TaskId.D_R1, TaskId.D_R2, TaskId.D_R3, TaskId.D_R4, TaskId.D_R5):
        return PlanKind.DR
    if task is TaskId.K_U1:
        return PlanKind.KU
    return PlanKind.KR


def rule_decision(task: TaskId) -> Decision:
    """Default heuristic: data tasks and code lookups execute, clinical
    judgment answers directly."""
    if task in (TaskId.K_R1, TaskId.K_R2, TaskId.K_R3):
        return Decision.DIRECT
    return Decision.CODE


@dataclass(frozen=True)
class ExecutionResult:
    ok: bool
    value: str = ""
    error: str = ""


class Executor(Protocol):
    def execute(self, table_tsv: str, code: str, timeout_ms: int) -> ExecutionResult: ...


@dataclass
class PipelineTrace:
    instance_id: str
    plan_text: str = ""
    aligned_text: str = ""
    decision: Optional[Decision] = None
    code_text: Optional[str] = None
    execution_result: Optional[str] = None
    fallback_used: bool = False
    final_answer: Optional[ParsedAnswer] = None
    stage_latencies: dict = None

    def __post_init__(self):
        if self.stage_latencies is None:
            self.stage_latencies = {}


def trace_to_json(trace: PipelineTrace) -> str:
    payload = {
        "instance_id": trace.instance_id,
        "plan_text": trace.plan_text,
        "aligned_text": trace.aligned_text,
        "decision": trace.decision.value if trace.decision else None,
        "code_text": trace.code_text,
        "execution_result": trace.execution_result,
        "fallback_used": trace.fallback_used,
        "final_answer": parsed_to_jsonable(trace.final_answer) if trace.final_answer else None,
        "stage_latencies": trace.stage_latencies,
    }
    return json.dumps(payload, sort_keys=True)


def trace_from_json(text: str) -> PipelineTrace:
    data = json.loads(text)
    return PipelineTrace(
        instance_id=data["instance_id"],
        plan_text=data["plan_text"],
        aligned_text=data["aligned_text"],
        decision=Decision(data["decision"]) if data["decision"] else None,
        code_text=data["code_text"],
        execution_result=data["execution_result"],
        fallback_used=data["fallback_used"],
        final_answer=parsed_from_jsonable(data["final_answer"]) if data["final_answer"] else None,
        stage_latencies=data["stage_latencies"],
    )


# ---------------------------------------------------------------------------
# Stage prompts


def plan_prompt(instance: TaskInstance) -> str:
    name = PLAN_TEMPLATE_NAMES[plan_kind_for(instance.task).value]
    return stage_template(name).format(task=instance.instruction)


def align_prompt(plan_text: str, table: Table) -> str:
    return stage_template("align").format(logic=plan_text, table=render_tsv(table).rstrip("\n"))


def code_prompt(instance: TaskInstance, aligned_text: str) -> str:
    return stage_template("code").format(
        task=instance.instruction,
        logic=aligned_text,
        table=render_tsv(instance.table).rstrip("\n"),
    )


def direct_prompt(instance: TaskInstance, aligned_text: str) -> str:
    return stage_template("direct").format(
        task=instance.instruction,
        logic=aligned_text,
        table=render_tsv(instance.table).rstrip("\n"),
    )


def decide_prompt(instance: TaskInstance, aligned_text: str) -> str:
    return stage_template("decide").format(task=instance.instruction, logic=aligned_text)


def _ask(backend: Backend, user_text: str, model_name: str) -> str:
    request = ChatRequest(
        system_text=STAGE_SYSTEM_TEXT, user_text=user_text, model_name=model_name
    )
    return complete(backend, request)


# ---------------------------------------------------------------------------
# Stages


def plan(instance: TaskInstance, backend: Backend, model_name: str = "local-model") -> str:
    return _ask(backend, plan_prompt(instance), model_name)


def align(
    plan_text: str, table: Table, backend: Backend, model_name: str = "local-model"
) -> str:
    if not plan_text.strip():
        raise PipelineError("plan text is empty")
    return _ask(backend, align_prompt(plan_text, table), model_name)


def alignment_unknown_tokens(aligned_text: str, table: Table) -> list[str]:
    """Quoted tokens in the aligned logic that are not schema columns."""
    quoted = re.findall(r"'([^']+)'|\"([^\"]+)\"", aligned_text)
    tokens = [a or b for a, b in quoted]
    known = set(table.schema.columns)
    cell_texts = {c for row in table.rows for c in (str(v) for v in row if v is not None)}
    return [t for t in tokens if t not in known and t not in cell_texts]


def _strip_code_fences(text: str) -> str:
    lines = text.strip().split("\n")
    if lines and lines[0].startswith("```"):
        lines = lines[1:]
    if lines and lines[-1].strip() == "```":
        lines = lines[:-1]
    return "\n".join(lines).strip()


def render_execution_value(value_text: str, instance: TaskInstance) -> str:
    """Shape a raw executor value into the instance's output contract."""
    contract = instance.contract
    text = value_text.strip()
    if isinstance(contract, IdListContract):
        if text.upper() in ("", "NULL", "NONE"):
            ids: tuple = ()
        else:
            ids = tuple(p.strip() for p in text.replace("\n", ",").split(",") if p.strip())
        return render_gold(IdSetGold(ids=tuple(sorted(set(ids)))), contract)
    if isinstance(contract, NumberContract):
        value = Decimal(text)
        return render_gold(NumberGold(value=value, scale=contract.scale), contract)
    if isinstance(contract, BinaryLabelContract):
        normalized = text.strip().lower()
        if normalized in ("1", "true", "yes"):
            return render_gold(BinaryGold(value=1), contract)
        if normalized in ("0", "false", "no"):
            return render_gold(BinaryGold(value=0), contract)
        raise ValueError(f"not a binary value: {text!r}")
    if isinstance(contract, AliveExpiredContract):
        word = text.strip().capitalize()
        if word not in ("Alive", "Expired"):
            raise ValueError(f"not an alive/expired word: {text!r}")
        return render_gold(WordGold(word=word), contract)
    if isinstance(contract, TenBitsContract):
        bits = tuple(int(b) for b in text.replace(",", " ").split())
        if len(bits) != 10 or any(b not in (0, 1) for b in bits):
            raise ValueError(f"not a ten-bit vector: {text!r}")
        return render_gold(BitsGold(bits=bits), contract)
    raise TypeError(f"unknown contract {contract!r}")


DEFAULT_TIMEOUT_MS = 5000


def decide_and_execute(
    aligned_text: str,
    instance: TaskInstance,
    backend: Backend,
    executor: Optional[Executor] = None,
    trace: Optional[PipelineTrace] = None,
    decision_mode: str = "rule",
    fallback: bool = True,
    model_name: str = "local-model",
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> Tuple[Decision, str]:
    """Pick Code or Direct, run the chosen path, return the raw answer text."""
    if not aligned_text.strip():
        raise PipelineError("aligned text is empty")
    if trace is None:
        trace = PipelineTrace(instance_id=instance.instance_id)

    if decision_mode == "model":
        verdict = _ask(backend, decide_prompt(instance, aligned_text), model_name)
        first = verdict.strip().split()[0].lower() if verdict.strip() else ""
        if first.startswith("code"):
            decision = Decision.CODE
        elif first.startswith("direct"):
            decision = Decision.DIRECT
        else:
            decision = rule_decision(instance.task)
    elif decision_mode == "rule":
        decision = rule_decision(instance.task)
    else:
        raise ValueError(f"unknown decision mode {decision_mode!r}")
    trace.decision = decision

    if decision is Decision.DIRECT:
        return decision, _ask(backend, direct_prompt(instance, aligned_text), model_name)

    if executor is None and not fallback:
        raise ExecutorUnavailableError("code decision with no executor and fallback disabled")

    code = _strip_code_fences(_ask(backend, code_prompt(instance, aligned_text), model_name))
    trace.code_text = code

    if executor is not None:
        table_tsv = render_tsv(instance.table)
        outcome = executor.execute(table_tsv, code, timeout_ms)
        if not outcome.ok:
            # One regeneration with the error shown, then give up on code.
            retry_prompt = (
                code_prompt(instance, aligned_text)
                + "\n\nThe previous program failed with this error:\n"
                + outcome.error
                + "\n\nWrite a corrected program."
            )
            code = _strip_code_fences(_ask(backend, retry_prompt, model_name))
            trace.code_text = code
            outcome = executor.execute(table_tsv, code, timeout_ms)
        if outcome.ok:
            trace.execution_result = outcome.value
            try:
                return decision, render_execution_value(outcome.value, instance)
            except (ValueError, InvalidOperation, ArithmeticError):
                pass
        if not fallback:
            raise ExecutorUnavailableError(f"execution failed without fallback: {outcome.error}")

    trace.fallback_used = True
    return decision, _ask(backend, direct_prompt(instance, aligned_text), model_name)


def run_pipeline(
    instance: TaskInstance,
    backend: Backend,
    executor: Optional[Executor] = None,
    decision_mode: str = "rule",
    fallback: bool = True,
    model_name: str = "local-model",
    timeout_ms: int = DEFAULT_TIMEOUT_MS,
) -> Tuple[ParsedAnswer, PipelineTrace]:
    """Full pipeline; backend failures become Invalid answers, not crashes."""
    trace = PipelineTrace(instance_id=instance.instance_id)

    def timed(name: str, fn):
        start = time.perf_counter()
        try:
            return fn()
        finally:
            trace.stage_latencies[name] = (time.perf_counter() - start) * 1000.0

    trace.raw_answer = None  # final-stage text, carried for run logs, not serialized
    try:
        trace.plan_text = timed("plan", lambda: plan(instance, backend, model_name))
        trace.aligned_text = timed(
            "align", lambda: align(trace.plan_text, instance.table, backend, model_name)
        )
        _, raw = timed(
            "execute",
            lambda: decide_and_execute(
                trace.aligned_text,
                instance,
                backend,
                executor=executor,
                trace=trace,
                decision_mode=decision_mode,
                fallback=fallback,
                model_name=model_name,
                timeout_ms=timeout_ms,
            ),
        )
    except BackendError as exc:
        trace.final_answer = Invalid(reason=f"stage failure: {exc}")
        return trace.final_answer, trace

    trace.raw_answer = raw
    trace.final_answer = parse_answer(instance.contract, raw)
    return trace.final_answer, trace
