"""Wire protocol and worker pool tests against real subprocesses."""

import json
import os
import subprocess
import sys
import threading
import time

import pytest

from tabexec import PROTOCOL_NAME, PROTOCOL_VERSION
from tabexec.client import SandboxExecutor
from tabexec.supervisor import ExecRequest, WorkerPool, _Worker

SMALL_TSV = "ID\tVALUE\n001\t2\n002\t5\n003\t4\n"


@pytest.fixture(scope="module")
def pool():
    with WorkerPool(size=2) as shared:
        yield shared


def make_request(req_id, code, timeout_ms=5000):
    return ExecRequest(id=req_id, table_tsv=SMALL_TSV, code=code, timeout_ms=timeout_ms)


def test_handshake_line():
    proc = subprocess.Popen(
        [sys.executable, "-m", "tabexec.worker"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
    )
    try:
        hello = json.loads(proc.stdout.readline())
        assert hello == {"protocol": PROTOCOL_NAME, "version": PROTOCOL_VERSION}
    finally:
        proc.kill()
        proc.wait()


def test_raw_request_response_cycle():
    proc = subprocess.Popen(
        [sys.executable, "-m", "tabexec.worker"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
    )
    try:
        proc.stdout.readline()
        request = {
            "id": "raw-1",
            "table_tsv": SMALL_TSV,
            "code": "result = df['VALUE'].sum()",
            "timeout_ms": 2000,
        }
        proc.stdin.write(json.dumps(request) + "\n")
        proc.stdin.flush()
        response = json.loads(proc.stdout.readline())
        assert response == {"id": "raw-1", "ok": True, "result": "11", "error": None}

        proc.stdin.write("this is not json\n")
        proc.stdin.flush()
        response = json.loads(proc.stdout.readline())
        assert response["ok"] is False
        assert response["error"]["kind"] == "Static"

        request["id"] = "raw-2"
        request["timeout_ms"] = 0
        proc.stdin.write(json.dumps(request) + "\n")
        proc.stdin.flush()
        response = json.loads(proc.stdout.readline())
        assert response["id"] == "raw-2"
        assert response["error"]["kind"] == "Static"
    finally:
        proc.kill()
        proc.wait()


def test_missing_fields_rejected():
    proc = subprocess.Popen(
        [sys.executable, "-m", "tabexec.worker"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
    )
    try:
        proc.stdout.readline()
        proc.stdin.write(json.dumps({"id": "m1", "code": "result = 1"}) + "\n")
        proc.stdin.flush()
        response = json.loads(proc.stdout.readline())
        assert response["id"] == "m1"
        assert response["ok"] is False
        assert response["error"]["kind"] == "Static"
        assert "missing" in response["error"]["message"]
    finally:
        proc.kill()
        proc.wait()


def test_pool_roundtrip(pool):
    response = pool.submit(make_request("p1", "result = df['VALUE'].sum()"))
    assert response.id == "p1"
    assert response.ok is True
    assert response.result == "11"
    assert response.error is None


def test_pool_error_paths(pool):
    response = pool.submit(make_request("p2", "import os\nresult = 1"))
    assert response.ok is False
    assert response.error["kind"] == "Static"

    response = pool.submit(make_request("p3", "result = df['NOPE'].sum()"))
    assert response.ok is False
    assert response.error["kind"] == "Runtime"


def test_pool_in_worker_timeout(pool):
    start = time.monotonic()
    response = pool.submit(make_request("p4", "while True:\n    pass", timeout_ms=600))
    elapsed = time.monotonic() - start
    assert response.ok is False
    assert response.error["kind"] == "Timeout"
    assert elapsed < 1.1
    # The worker survives an interpreted-loop timeout and stays warm.
    follow = pool.submit(make_request("p5", "result = 1"))
    assert follow.ok is True


def test_pool_deadline_backstop(pool):
    # A bare except swallows the in-worker alarm, so only the supervisor
    # deadline can end this one.
    code = (
        "while True:\n"
        "    try:\n"
        "        while True:\n"
        "            pass\n"
        "    except:\n"
        "        pass\n"
    )
    start = time.monotonic()
    response = pool.submit(make_request("p6", code, timeout_ms=500))
    elapsed = time.monotonic() - start
    assert response.ok is False
    assert response.error["kind"] == "Timeout"
    assert elapsed < 1.6
    follow = pool.submit(make_request("p7", "result = 2"))
    assert follow.ok is True
    assert follow.result == "2"


def test_worker_crash_is_resource():
    with WorkerPool(size=1) as lone:
        worker = lone._idle.queue[0]
        timer = threading.Timer(0.3, os.kill, (worker.proc.pid, 9))
        timer.start()
        try:
            response = lone.submit(
                make_request("c1", "result = sum(range(10 ** 9))", timeout_ms=30000)
            )
        finally:
            timer.cancel()
        assert response.ok is False
        assert response.error["kind"] == "Resource"
        # A replacement worker takes over.
        follow = lone.submit(make_request("c2", "result = 3"))
        assert follow.ok is True
        assert follow.result == "3"


def test_memory_limit_is_reported():
    with WorkerPool(size=1) as lone:
        response = lone.submit(
            make_request("m2", "result = len(' ' * (2 ** 31))", timeout_ms=20000)
        )
        assert response.ok is False
        assert response.error["kind"] in ("Resource", "Timeout")


def test_determinism_same_request_twice(pool):
    code = "result = list(set(df['ID']))"
    first = pool.submit(make_request("d1", code))
    second = pool.submit(make_request("d1", code))
    assert first == second
    assert first.ok is True


def test_pool_rejects_after_close():
    lone = WorkerPool(size=1)
    lone.close()
    with pytest.raises(RuntimeError):
        lone.submit(make_request("x1", "result = 1"))


def test_client_adapter():
    with SandboxExecutor() as executor:
        outcome = executor.execute(SMALL_TSV, "result = df['VALUE'].sum()", 5000)
        assert outcome.ok is True
        assert outcome.value == "11"
        assert outcome.error == ""

        outcome = executor.execute(SMALL_TSV, "import os\nresult = 1", 5000)
        assert outcome.ok is False
        assert outcome.value == ""
        assert outcome.error.startswith("Static: ")


def test_worker_unit_eof():
    worker = _Worker()
    worker.proc.stdin.close()
    status, line = worker._next_line(5.0)
    assert status == "eof"
    assert line is None
    worker.kill()
