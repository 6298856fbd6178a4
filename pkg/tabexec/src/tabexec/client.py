"""Adapter matching the evaluation harness's duck-typed executor protocol."""

import uuid
from dataclasses import dataclass
from typing import Optional

from tabexec.supervisor import ExecRequest, WorkerPool


@dataclass(frozen=True)
class ExecOutcome:
    ok: bool
    value: str = ""
    error: str = ""


class SandboxExecutor:
    """execute(table_tsv, code, timeout_ms) -> outcome with ok/value/error."""

    def __init__(self, pool: Optional[WorkerPool] = None):
        self.pool = pool or WorkerPool()

    def execute(self, table_tsv: str, code: str, timeout_ms: int) -> ExecOutcome:
        request = ExecRequest(
            id=uuid.uuid4().hex,
            table_tsv=table_tsv,
            code=code,
            timeout_ms=int(timeout_ms),
        )
        response = self.pool.submit(request)
        if response.ok:
            return ExecOutcome(ok=True, value=response.result or "")
        error = response.error or {}
        kind = error.get("kind", "Unknown")
        return ExecOutcome(ok=False, error=f"{kind}: {error.get('message', '')}")

    def close(self):
        self.pool.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
