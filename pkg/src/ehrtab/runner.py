"""Run orchestration: instance generation, evaluation sweeps, append-only run
logs, score reports, and finetune export.

Storage is line-delimited JSON throughout. A run is identified by a hash of
the semantic config fields, so rerunning the same config resumes the same
log and already-evaluated combinations are skipped.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .answers import (
    GradeOutcome,
    Invalid,
    Leniency,
    grade,
    parse_answer,
    parsed_to_jsonable,
    render_gold,
)
from .backend import BackendError, HttpBackend, MockBackend, ReplayBackend, complete
from .fewshot import DEFAULT_POOL_SIZE, assemble, build_pool
from .formats import format_from_selector
from .metrics import TaskScore, accuracy, balanced_auc, multilabel_auc, relative_gain, score_line
from .metrics import MetricError
from .pipeline import run_pipeline, trace_to_json
from .table import table_hash
from .taskgen import (
    EVAL_INSTANCES_PER_TASK,
    finetune_pairs,
    full_finetune_set,
    read_instances,
    synthesize,
    write_instances,
)
from .tasks import (
    BinaryGold,
    Flavor,
    MetricKind,
    TaskId,
    WordGold,
    metric_kind,
)

PIPELINE_MODES = ("bare", "staged")
K_SHOT_ALLOWED = (0, 1, 3, 5)
NVO_MARKER = "NVO"

CANONICAL_TASK_ORDER = (
    TaskId.D_U1,
    TaskId.D_U2,
    TaskId.D_R1,
    TaskId.D_R2,
    TaskId.D_R3,
    TaskId.D_R4,
    TaskId.D_R5,
    TaskId.K_U1,
    TaskId.K_R1,
    TaskId.K_R2,
    TaskId.K_R3,
)


class ConfigError(ValueError):
    pass


class EmptyLogError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    out_dir: str
    tasks: tuple[TaskId, ...] = CANONICAL_TASK_ORDER
    flavors: tuple[Flavor, ...] = (Flavor.SYNTHEA, Flavor.EICU)
    formats: tuple[str, ...] = ("plain",)
    k_shots: tuple[int, ...] = (0,)
    pipeline: str = "bare"
    model_name: str = "local-model"
    backend: dict = field(default_factory=lambda: {"kind": "gold-mock"})
    eval_seed: int = 42
    pool_seed: int = 7
    n_per_task: int = EVAL_INSTANCES_PER_TASK
    leniency: str = "loose"
    concurrency: int = 1

    def __post_init__(self):
        if self.pipeline not in PIPELINE_MODES:
            raise ConfigError(f"pipeline must be one of {PIPELINE_MODES}")
        for k in self.k_shots:
            if k not in K_SHOT_ALLOWED:
                raise ConfigError(f"k_shot {k} not in {K_SHOT_ALLOWED}")
        for f in self.formats:
            try:
                format_from_selector(f)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.leniency not in ("strict", "normal", "loose"):
            raise ConfigError(f"unknown leniency {self.leniency!r}")
        if self.n_per_task < 1 or self.concurrency < 1:
            raise ConfigError("n_per_task and concurrency must be positive")
        if self.backend.get("kind") not in ("gold-mock", "http", "replay"):
            raise ConfigError(f"unknown backend kind {self.backend.get('kind')!r}")


_CONFIG_KEYS = {
    "out_dir",
    "tasks",
    "flavors",
    "formats",
    "k_shots",
    "pipeline",
    "model_name",
    "backend",
    "eval_seed",
    "pool_seed",
    "n_per_task",
    "leniency",
    "concurrency",
}


def config_from_dict(data: dict) -> RunConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "out_dir" not in data:
        raise ConfigError("config needs out_dir")
    kwargs = dict(data)
    try:
        if "tasks" in kwargs:
            kwargs["tasks"] = tuple(TaskId(t) for t in kwargs["tasks"])
        if "flavors" in kwargs:
            kwargs["flavors"] = tuple(Flavor(f) for f in kwargs["flavors"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for key in ("formats", "k_shots"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return RunConfig(**kwargs)


def run_id_of(config: RunConfig) -> str:
    """Hash of the semantic fields; out_dir and concurrency do not matter."""
    payload = asdict(config)
    payload.pop("out_dir")
    payload.pop("concurrency")
    payload["tasks"] = [t.value for t in config.tasks]
    payload["flavors"] = [f.value for f in config.flavors]
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def build_backend(spec: dict):
    kind = spec.get("kind")
    if kind == "gold-mock":
        return None  # resolved per instance inside the eval loop
    if kind == "http":
        if "endpoint" not in spec:
            raise ConfigError("http backend needs an endpoint")
        return HttpBackend(
            spec["endpoint"],
            credential_env=spec.get("credential_env"),
            timeout_s=float(spec.get("timeout_s", 60.0)),
            max_retries=int(spec.get("max_retries", 3)),
            max_in_flight=int(spec.get("max_in_flight", 4)),
        )
    if kind == "replay":
        if "cache_path" not in spec:
            raise ConfigError("replay backend needs a cache_path")
        fallback = build_backend(spec["fallback"]) if spec.get("fallback") else None
        return ReplayBackend(spec["cache_path"], fallback=fallback)
    raise ConfigError(f"unknown backend kind {kind!r}")


# ---------------------------------------------------------------------------
# Paths and the append-only log


def instances_path(out_dir: str, task: TaskId, flavor: Flavor) -> str:
    return os.path.join(out_dir, "instances", f"{task.value}_{flavor.value}.jsonl")


def run_log_path(out_dir: str, run_id: str) -> str:
    return os.path.join(out_dir, "runs", f"{run_id}.jsonl")


def trace_log_path(out_dir: str, run_id: str) -> str:
    return os.path.join(out_dir, "runs", f"{run_id}.traces.jsonl")


class LogWriter:
    """Append-only JSONL sink; one line per record, fsynced in batches."""

    def __init__(self, path: str, fsync_every: int = 16):
        os.makedirs(os.path.dirname(path), exist_ok=True)
        self._fh = open(path, "a", encoding="utf-8")
        self._lock = threading.Lock()
        self._fsync_every = fsync_every
        self._pending = 0

    def write(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            self._pending += 1
            if self._pending >= self._fsync_every:
                os.fsync(self._fh.fileno())
                self._pending = 0

    def close(self) -> None:
        with self._lock:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path: str) -> list[dict]:
    if not os.path.exists(path):
        return []
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def record_key(record: dict) -> str:
    return "|".join(
        [
            record["instance_id"],
            record["model"],
            record["format"],
            str(record["k_shot"]),
            record["pipeline"],
        ]
    )


# ---------------------------------------------------------------------------
# gen


def cmd_gen(config: RunConfig) -> int:
    """Write the evaluation instance files; returns the instance count."""
    total = 0
    for task in config.tasks:
        for flavor in config.flavors:
            instances = synthesize(task, flavor, config.eval_seed, config.n_per_task)
            path = instances_path(config.out_dir, task, flavor)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                total += write_instances(fh, instances)
    return total


def load_eval_instances(config: RunConfig, task: TaskId, flavor: Flavor):
    path = instances_path(config.out_dir, task, flavor)
    if not os.path.exists(path):
        raise ConfigError(f"missing instance file {path}; run gen first")
    with open(path, "r", encoding="utf-8") as fh:
        return read_instances(fh)


# ---------------------------------------------------------------------------
# eval


def _gold_mock_for(instance) -> MockBackend:
    return MockBackend([("", render_gold(instance.gold, instance.contract))])


def _eval_bare(instance, combo, config: RunConfig, backend, pool) -> tuple[dict, bool]:
    fmt_name, k_shot = combo
    fmt = format_from_selector(fmt_name)
    request = assemble(instance, k_shot, pool, fmt, model_name=config.model_name)
    leniency = Leniency[config.leniency.upper()]
    start = time.perf_counter()
    failed = False
    try:
        raw = complete(backend, request)
        parsed = parse_answer(instance.contract, raw, leniency)
    except BackendError as exc:
        raw = ""
        parsed = Invalid(reason=f"backend failure: {exc}")
        failed = True
    latency_ms = (time.perf_counter() - start) * 1000.0
    outcome = grade(instance.gold, parsed).outcome
    record = {
        "instance_id": instance.instance_id,
        "model": config.model_name,
        "format": fmt_name,
        "k_shot": k_shot,
        "pipeline": "bare",
        "raw_output": raw,
        "parsed": parsed_to_jsonable(parsed),
        "outcome": outcome.value,
        "latency_ms": round(latency_ms, 3),
        "trace_ref": None,
    }
    return record, failed


def _eval_staged(instance, config: RunConfig, backend, executor, trace_writer, run_id) -> tuple[dict, bool]:
    start = time.perf_counter()
    parsed, trace = run_pipeline(
        instance, backend, executor=executor, model_name=config.model_name
    )
    latency_ms = (time.perf_counter() - start) * 1000.0
    failed = isinstance(parsed, Invalid) and parsed.reason.startswith("stage failure")
    outcome = grade(instance.gold, parsed).outcome
    key = "|".join([instance.instance_id, config.model_name, "plain", "0", "staged"])
    trace_writer.write({"key": key, "trace": json.loads(trace_to_json(trace))})
    record = {
        "instance_id": instance.instance_id,
        "model": config.model_name,
        "format": "plain",
        "k_shot": 0,
        "pipeline": "staged",
        "raw_output": trace.raw_answer or "",
        "parsed": parsed_to_jsonable(parsed),
        "outcome": outcome.value,
        "latency_ms": round(latency_ms, 3),
        "trace_ref": f"{run_id}.traces.jsonl#{key}",
    }
    return record, failed


def cmd_eval(config: RunConfig, executor=None) -> tuple[int, int]:
    """Evaluate every missing (instance, combination); returns
    (records written, backend failures)."""
    run_id = run_id_of(config)
    log_path = run_log_path(config.out_dir, run_id)
    done = {record_key(r) for r in read_jsonl(log_path)}
    shared_backend = build_backend(config.backend)
    gold_mock = config.backend.get("kind") == "gold-mock"

    if config.pipeline == "staged":
        combos = [("plain", 0)]
    else:
        combos = [(f, k) for f in config.formats for k in config.k_shots]

    pools: dict = {}

    def pool_for(task: TaskId, flavor: Flavor, instances):
        if (task, flavor) not in pools:
            avoid = frozenset(table_hash(i.table) for i in instances)
            pools[(task, flavor)] = build_pool(
                task, flavor, config.pool_seed, size=DEFAULT_POOL_SIZE, avoid_hashes=avoid
            )
        return pools[(task, flavor)]

    work = []
    for task in config.tasks:
        for flavor in config.flavors:
            instances = load_eval_instances(config, task, flavor)
            needs_pool = config.pipeline == "bare" and any(k > 0 for _, k in combos)
            pool = pool_for(task, flavor, instances) if needs_pool else None
            for instance in instances:
                for combo in combos:
                    key = "|".join(
                        [
                            instance.instance_id,
                            config.model_name,
                            combo[0],
                            str(combo[1]),
                            config.pipeline,
                        ]
                    )
                    if key in done:
                        continue
                    work.append((instance, combo, pool))

    n_failures = 0
    written = 0
    with LogWriter(log_path) as writer, LogWriter(trace_log_path(config.out_dir, run_id)) as traces:

        def run_one(item):
            instance, combo, pool = item
            backend = _gold_mock_for(instance) if gold_mock else shared_backend
            if config.pipeline == "staged":
                return _eval_staged(instance, config, backend, executor, traces, run_id)
            return _eval_bare(instance, combo, config, backend, pool)

        if config.concurrency == 1:
            results = map(run_one, work)
            for record, failed in results:
                writer.write(record)
                written += 1
                n_failures += int(failed)
        else:
            with ThreadPoolExecutor(max_workers=config.concurrency) as pool_exec:
                for record, failed in pool_exec.map(run_one, work):
                    writer.write(record)
                    written += 1
                    n_failures += int(failed)
    return written, n_failures


# ---------------------------------------------------------------------------
# report


def _task_flavor_of(instance_id: str) -> tuple[TaskId, Flavor]:
    task_text, flavor_text = instance_id.split(".")[:2]
    return TaskId(task_text), Flavor(flavor_text)


def _binary_of_gold(gold) -> Optional[int]:
    if isinstance(gold, BinaryGold):
        return gold.value
    if isinstance(gold, WordGold):
        return 1 if gold.word.lower() == "expired" else 0
    return None


def _binary_of_parsed(parsed_data: dict) -> Optional[int]:
    if parsed_data["kind"] == "binary":
        return parsed_data["value"]
    if parsed_data["kind"] == "word":
        return 1 if parsed_data["word"].lower() == "expired" else 0
    return None


def score_group(task: TaskId, flavor: Flavor, records: list[dict], golds: dict) -> TaskScore:
    kind = metric_kind(task, flavor)
    if kind is MetricKind.ACCURACY:
        outcomes = [GradeOutcome(r["outcome"]) for r in records]
        return accuracy(outcomes, task=task)
    if kind is MetricKind.AUC:
        gold_bits = [_binary_of_gold(golds[r["instance_id"]]) for r in records]
        preds = [_binary_of_parsed(r["parsed"]) for r in records]
        preds = [p if p is not None else Invalid(reason="invalid") for p in preds]
        return balanced_auc(gold_bits, preds, task=task)
    gold_vecs = [list(golds[r["instance_id"]].bits) for r in records]
    pred_vecs = [
        r["parsed"]["bits"] if r["parsed"]["kind"] == "bits" else None for r in records
    ]
    return multilabel_auc(gold_vecs, pred_vecs, task=task)


def _score_cell(score: TaskScore) -> str:
    return NVO_MARKER if not score.is_valid else f"{score.value:.1f}"


def cmd_report(config: RunConfig, run_id: Optional[str] = None) -> dict:
    """Score a run log; writes scores JSONL and a plain-text matrix."""
    run_id = run_id or run_id_of(config)
    records = read_jsonl(run_log_path(config.out_dir, run_id))
    if not records:
        raise EmptyLogError(f"run log for {run_id} is empty")

    golds: dict = {}
    needed = {_task_flavor_of(r["instance_id"]) for r in records}
    for task, flavor in needed:
        for inst in load_eval_instances(config, task, flavor):
            golds[inst.instance_id] = inst.gold

    groups: dict = {}
    for r in records:
        task, flavor = _task_flavor_of(r["instance_id"])
        row = (r["model"], r["pipeline"], r["format"], r["k_shot"])
        groups.setdefault((row, task, flavor), []).append(r)

    score_rows: dict = {}
    lines = []
    for (row, task, flavor), recs in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][2].value, kv[0][1].value)
    ):
        try:
            score = score_group(task, flavor, recs, golds)
        except MetricError as exc:
            score = None
            lines.append(
                {
                    "task": task.value,
                    "flavor": flavor.value,
                    "model": row[0],
                    "format": row[2],
                    "k_shot": row[3],
                    "metric_kind": "AUC",
                    "value": f"unscorable: {exc}",
                    "n_invalid": sum(1 for r in recs if r["outcome"] == "Invalid"),
                    "pipeline": row[1],
                }
            )
            continue
        score_rows.setdefault(row, {})[(task, flavor)] = score
        line = score_line(score, task, flavor.value, row[0], row[2], row[3])
        line["pipeline"] = row[1]
        lines.append(line)

    scores_dir = os.path.join(config.out_dir, "scores")
    os.makedirs(scores_dir, exist_ok=True)
    scores_path = os.path.join(scores_dir, f"{run_id}.scores.jsonl")
    with open(scores_path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line, sort_keys=True) + "\n")

    report_path = os.path.join(scores_dir, f"{run_id}.report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(render_report(score_rows))

    return {"scores_path": scores_path, "report_path": report_path, "n_groups": len(lines)}


def _row_label(row: tuple) -> str:
    model, pipeline, fmt, k = row
    return f"{model}/{pipeline}/{fmt}/{k}-shot"


def render_report(score_rows: dict) -> str:
    """Plain-text matrices: one per flavor, then a relative-gain section."""
    out = []
    flavors = sorted(
        {fl for cells in score_rows.values() for _, fl in cells}, key=lambda f: f.value
    )
    rows = sorted(score_rows, key=_row_label)
    for flavor in flavors:
        tasks = [
            t
            for t in CANONICAL_TASK_ORDER
            if any((t, flavor) in cells for cells in score_rows.values())
        ]
        if not tasks:
            continue
        out.append(f"== {flavor.value} ==")
        header = ["setting".ljust(40)] + [t.value.rjust(7) for t in tasks]
        out.append(" ".join(header))
        for row in rows:
            cells = score_rows[row]
            rendered = [
                _score_cell(cells[(t, flavor)]).rjust(7) if (t, flavor) in cells else "   ----"
                for t in tasks
            ]
            out.append(" ".join([_row_label(row).ljust(40)] + rendered))
        out.append("")

    if len(rows) > 1:
        base_row = rows[0]
        for candidate in rows:
            if candidate[1] == "bare" and candidate[2] == "plain" and candidate[3] == 0:
                base_row = candidate
                break
        out.append(f"== relative gain vs {_row_label(base_row)} (% of headroom closed) ==")
        for flavor in flavors:
            tasks = [
                t
                for t in CANONICAL_TASK_ORDER
                if (t, flavor) in score_rows.get(base_row, {})
            ]
            if not tasks:
                continue
            out.append(f"-- {flavor.value} --")
            header = ["setting".ljust(40)] + [t.value.rjust(7) for t in tasks]
            out.append(" ".join(header))
            for row in rows:
                if row == base_row:
                    continue
                rendered = []
                for t in tasks:
                    base = score_rows[base_row].get((t, flavor))
                    method = score_rows[row].get((t, flavor))
                    if base is None or method is None or not base.is_valid or not method.is_valid:
                        rendered.append("    n/a".rjust(7))
                    elif base.value == 100:
                        rendered.append("ceiling".rjust(7))
                    else:
                        rendered.append(f"{relative_gain(base, method):.1f}".rjust(7))
                out.append(" ".join([_row_label(row).ljust(40)] + rendered))
            out.append("")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# trace and finetune export


def cmd_trace(config: RunConfig, instance_id: str, run_id: Optional[str] = None) -> list[dict]:
    run_id = run_id or run_id_of(config)
    entries = read_jsonl(trace_log_path(config.out_dir, run_id))
    return [e["trace"] for e in entries if e["trace"]["instance_id"] == instance_id]


def cmd_export_finetune(config: RunConfig) -> dict:
    """Write per-flavor finetune pair files, disjoint from the eval tables."""
    os.makedirs(os.path.join(config.out_dir, "finetune"), exist_ok=True)
    counts = {}
    for flavor in config.flavors:
        avoid: set = set()
        for task in CANONICAL_TASK_ORDER:
            for inst in synthesize(task, flavor, config.eval_seed, config.n_per_task):
                avoid.add(table_hash(inst.table))
        instances = full_finetune_set(config.eval_seed, flavor, avoid_hashes=avoid)
        path = os.path.join(config.out_dir, "finetune", f"{flavor.value}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for pair in finetune_pairs(instances):
                fh.write(json.dumps(pair, sort_keys=True) + "\n")
        counts[flavor.value] = len(instances)
    return counts
