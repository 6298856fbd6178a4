"""Warm worker pool: spawn, handshake, deadline enforcement, crash recovery.

Every submitted request yields exactly one response. A worker that misses
its deadline is killed and the caller gets a Timeout error; a worker that
dies mid-request yields a synthesized Resource error. Either way a fresh
worker replaces the dead one, so the pool size is stable.
"""

import json
import logging
import os
import queue
import subprocess
import sys
import threading
from dataclasses import dataclass
from typing import Optional

from tabexec import PROTOCOL_NAME, PROTOCOL_VERSION

log = logging.getLogger(__name__)

GRACE_MS = 500
HANDSHAKE_TIMEOUT_S = 30.0
DEFAULT_POOL_SIZE = 2


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExecRequest:
    id: str
    table_tsv: str
    code: str
    timeout_ms: int


@dataclass(frozen=True)
class ExecResponse:
    id: Optional[str]
    ok: bool
    result: Optional[str]
    error: Optional[dict]


class _Worker:
    """One subprocess plus a reader thread feeding a line queue."""

    def __init__(self):
        env = dict(os.environ, PYTHONHASHSEED="0")
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "tabexec.worker"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            env=env,
        )
        self.lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        status, line = self._next_line(HANDSHAKE_TIMEOUT_S)
        if status != "line":
            self.kill()
            raise ProtocolError(f"worker produced no handshake ({status})")
        hello = json.loads(line)
        if hello.get("protocol") != PROTOCOL_NAME or hello.get("version") != PROTOCOL_VERSION:
            self.kill()
            raise ProtocolError(f"unexpected handshake: {hello}")

    def _pump(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def _next_line(self, timeout_s: float):
        try:
            line = self.lines.get(timeout=timeout_s)
        except queue.Empty:
            return "deadline", None
        if line is None:
            return "eof", None
        return "line", line

    def request(self, payload: dict, deadline_s: float):
        """("line", text) | ("eof", None) | ("deadline", None)."""
        try:
            self.proc.stdin.write(json.dumps(payload, sort_keys=True) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            return "eof", None
        return self._next_line(deadline_s)

    def kill(self):
        try:
            self.proc.kill()
        except OSError:
            pass
        self.proc.wait()


class WorkerPool:
    """Bounded pool; each request checks out one worker for its duration."""

    def __init__(self, size: int = DEFAULT_POOL_SIZE):
        if size < 1:
            raise ValueError("pool size must be positive")
        self.size = size
        self._idle: "queue.Queue[_Worker]" = queue.Queue()
        for _ in range(size):
            self._idle.put(_Worker())
        self._closed = False

    def submit(self, request: ExecRequest) -> ExecResponse:
        if self._closed:
            raise RuntimeError("pool is closed")
        worker = self._idle.get()
        healthy = True
        try:
            response, healthy = self._run_on(worker, request)
        except BaseException:
            healthy = False
            raise
        finally:
            if not healthy:
                worker.kill()
                worker = _Worker()
            self._idle.put(worker)
        return response

    def _run_on(self, worker: _Worker, request: ExecRequest):
        payload = {
            "id": request.id,
            "table_tsv": request.table_tsv,
            "code": request.code,
            "timeout_ms": request.timeout_ms,
        }
        deadline_s = (request.timeout_ms + GRACE_MS) / 1000.0
        status, line = worker.request(payload, deadline_s)
        if status == "deadline":
            log.warning("worker missed deadline for request %s; killing", request.id)
            error = {
                "kind": "Timeout",
                "message": f"no response within {request.timeout_ms} ms plus grace",
            }
            return ExecResponse(request.id, False, None, error), False
        if status == "eof":
            log.warning("worker died during request %s", request.id)
            error = {"kind": "Resource", "message": "worker terminated during execution"}
            return ExecResponse(request.id, False, None, error), False
        try:
            data = json.loads(line)
        except json.JSONDecodeError:
            error = {"kind": "Resource", "message": "worker wrote a malformed response"}
            return ExecResponse(request.id, False, None, error), False
        if data.get("id") != request.id:
            error = {"kind": "Resource", "message": "response id mismatch"}
            return ExecResponse(request.id, False, None, error), False
        return ExecResponse(data["id"], data["ok"], data.get("result"), data.get("error")), True

    def close(self):
        self._closed = True
        while True:
            try:
                worker = self._idle.get_nowait()
            except queue.Empty:
                break
            worker.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_default_pool: Optional[WorkerPool] = None
_default_lock = threading.Lock()


def execute(request: ExecRequest) -> ExecResponse:
    """Run one request on a shared default pool."""
    global _default_pool
    with _default_lock:
        if _default_pool is None:
            _default_pool = WorkerPool()
        pool = _default_pool
    return pool.submit(request)
