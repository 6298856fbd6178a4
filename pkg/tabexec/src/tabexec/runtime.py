"""In-worker execution: table loading, restricted globals, result rendering.

The table is preloaded as a pandas DataFrame named ``df``. A column becomes
numeric only when every non-empty cell survives an exact Decimal round-trip
(str(Decimal(cell)) == cell), so zero-padded identifiers like "001" and
tokens like "> 89" stay strings while measure columns carry Decimal values
at their printed scale. Aggregates over Decimal cells therefore render at
natural scale with no float artifacts.
"""

import io
from contextlib import redirect_stdout
from decimal import Decimal, InvalidOperation
from typing import Optional

import pandas as pd

from tabexec.screen import screen

FRAME_NAME = "df"
RESULT_NAME = "result"


class ExecError(Exception):
    """Execution failure with one of the wire error kinds."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind
        self.message = message


class TimeoutInterrupt(BaseException):
    """Raised by the worker's timer signal; BaseException so user code's
    `except Exception` cannot swallow it."""


SAFE_BUILTINS = {
    "abs": abs,
    "all": all,
    "any": any,
    "bool": bool,
    "dict": dict,
    "divmod": divmod,
    "enumerate": enumerate,
    "filter": filter,
    "float": float,
    "frozenset": frozenset,
    "int": int,
    "isinstance": isinstance,
    "len": len,
    "list": list,
    "map": map,
    "max": max,
    "min": min,
    "print": print,
    "range": range,
    "repr": repr,
    "reversed": reversed,
    "round": round,
    "set": set,
    "sorted": sorted,
    "str": str,
    "sum": sum,
    "tuple": tuple,
    "zip": zip,
    "Decimal": Decimal,
    "Exception": Exception,
    "ValueError": ValueError,
    "TypeError": TypeError,
    "KeyError": KeyError,
    "IndexError": IndexError,
    "ZeroDivisionError": ZeroDivisionError,
    "StopIteration": StopIteration,
}


def _exact_decimal(text: str) -> Optional[Decimal]:
    try:
        value = Decimal(text)
    except InvalidOperation:
        return None
    return value if str(value) == text else None


def load_frame(table_tsv: str) -> pd.DataFrame:
    lines = [line for line in table_tsv.split("\n") if line != ""]
    if not lines:
        raise ExecError("Runtime", "empty table")
    header = lines[0].split("\t")
    rows = [line.split("\t") for line in lines[1:]]
    for row in rows:
        if len(row) != len(header):
            raise ExecError("Runtime", "ragged table row")
    data = {}
    for i, column in enumerate(header):
        cells = [row[i] for row in rows]
        non_empty = [c for c in cells if c != ""]
        if non_empty and all(_exact_decimal(c) is not None for c in non_empty):
            data[column] = [Decimal(c) if c != "" else None for c in cells]
        else:
            data[column] = cells
    return pd.DataFrame(data, columns=header)


def _scalar_text(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, float, Decimal, str)):
        return str(value)
    item = getattr(value, "item", None)  # numpy scalars
    if callable(item):
        return _scalar_text(value.item())
    raise ExecError("Runtime", f"unsupported result type {type(value).__name__}")


def render_result(value) -> str:
    """Wire text for the result variable: scalars verbatim, sequences comma-joined."""
    if value is None:
        raise ExecError("Runtime", "result is None")
    if isinstance(value, (bool, int, float, Decimal, str)):
        return _scalar_text(value)
    if isinstance(value, dict):
        raise ExecError("Runtime", "unsupported result type dict")
    try:
        items = list(value)
    except TypeError:
        return _scalar_text(value)
    return ",".join(_scalar_text(v) for v in items)


def run_code(table_tsv: str, code: str) -> str:
    """Screen, execute, and render; raises ExecError carrying the error kind."""
    rejection = screen(code)
    if rejection is not None:
        raise ExecError("Static", rejection)
    frame = load_frame(table_tsv)
    env = {"__builtins__": dict(SAFE_BUILTINS), FRAME_NAME: frame}
    sink = io.StringIO()
    try:
        with redirect_stdout(sink):
            exec(compile(code, "<program>", "exec"), env)
    except TimeoutInterrupt:
        raise
    except ExecError:
        raise
    except MemoryError:
        raise ExecError("Resource", "memory limit exceeded") from None
    except Exception as exc:
        raise ExecError("Runtime", f"{type(exc).__name__}: {exc}") from None
    if RESULT_NAME not in env:
        raise ExecError("Runtime", "code did not assign a variable named result")
    return render_result(env[RESULT_NAME])
