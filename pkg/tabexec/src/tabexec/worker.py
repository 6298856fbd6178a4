"""Stdio worker: handshake line, then one JSON response per request line.

Runs as `python -m tabexec.worker`. The real stdout carries only protocol
lines; anything the executed program prints is captured and discarded.
"""

import json
import resource
import signal
import sys

from tabexec import PROTOCOL_NAME, PROTOCOL_VERSION
from tabexec.runtime import ExecError, TimeoutInterrupt, run_code

MEMORY_LIMIT_BYTES = 512 * 1024 * 1024
REQUIRED_FIELDS = ("id", "table_tsv", "code", "timeout_ms")


def _on_alarm(signum, frame):
    raise TimeoutInterrupt()


def _error(req_id, kind: str, message: str) -> dict:
    return {
        "id": req_id,
        "ok": False,
        "result": None,
        "error": {"kind": kind, "message": message},
    }


def handle_line(line: str) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return _error(None, "Static", f"malformed request: {exc}")
    if not isinstance(request, dict):
        return _error(None, "Static", "request must be a JSON object")
    req_id = request.get("id")
    missing = [f for f in REQUIRED_FIELDS if f not in request]
    if missing:
        return _error(req_id, "Static", f"request missing fields: {missing}")
    timeout_ms = request["timeout_ms"]
    if not isinstance(timeout_ms, int) or isinstance(timeout_ms, bool) or timeout_ms <= 0:
        return _error(req_id, "Static", "timeout_ms must be a positive integer")
    signal.setitimer(signal.ITIMER_REAL, timeout_ms / 1000.0)
    try:
        text = run_code(request["table_tsv"], request["code"])
        return {"id": req_id, "ok": True, "result": text, "error": None}
    except TimeoutInterrupt:
        return _error(req_id, "Timeout", f"execution exceeded {timeout_ms} ms")
    except ExecError as exc:
        return _error(req_id, exc.kind, exc.message)
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0.0)


def _respond(out, payload: dict) -> None:
    out.write(json.dumps(payload, sort_keys=True) + "\n")
    out.flush()


def main() -> int:
    signal.signal(signal.SIGALRM, _on_alarm)
    try:
        resource.setrlimit(resource.RLIMIT_AS, (MEMORY_LIMIT_BYTES, MEMORY_LIMIT_BYTES))
    except (ValueError, OSError):
        pass  # environment forbids lowering; the supervisor deadline still holds
    out = sys.stdout
    _respond(out, {"protocol": PROTOCOL_NAME, "version": PROTOCOL_VERSION})
    for line in sys.stdin:
        if not line.strip():
            continue
        _respond(out, handle_line(line))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
