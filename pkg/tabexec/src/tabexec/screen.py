"""Static screen that rejects programs before they reach the interpreter."""

import ast
from typing import Optional

FORBIDDEN_NAMES = frozenset(
    {
        "__import__",
        "open",
        "eval",
        "exec",
        "compile",
        "input",
        "breakpoint",
        "globals",
        "locals",
        "vars",
        "getattr",
        "setattr",
        "delattr",
        "memoryview",
        "exit",
        "quit",
        "os",
        "sys",
        "subprocess",
        "socket",
        "shutil",
        "pathlib",
        "ctypes",
        "importlib",
        "builtins",
        "urllib",
        "requests",
    }
)

# pandas I/O entry points; the worker has no business touching disk
FORBIDDEN_ATTRS = frozenset(
    {
        "to_csv",
        "to_json",
        "to_pickle",
        "to_parquet",
        "to_excel",
        "to_hdf",
        "to_sql",
        "to_feather",
        "to_stata",
        "to_clipboard",
        "read_csv",
        "read_json",
        "read_pickle",
        "read_table",
        "read_parquet",
        "eval",
        "query",
    }
)


def screen(code: str) -> Optional[str]:
    """Rejection message for code that may not run, None when it may."""
    try:
        tree = ast.parse(code)
    except SyntaxError as exc:
        return f"syntax error: {exc.msg} (line {exc.lineno})"
    for node in ast.walk(tree):
        if isinstance(node, (ast.Import, ast.ImportFrom)):
            return "import statements are not allowed"
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            return "definitions are not allowed; write all code at the top level"
        if isinstance(node, ast.Name):
            if node.id in FORBIDDEN_NAMES:
                return f"use of {node.id!r} is not allowed"
            if node.id.startswith("__") and node.id.endswith("__"):
                return f"dunder name {node.id!r} is not allowed"
        if isinstance(node, ast.Attribute):
            if node.attr.startswith("__") and node.attr.endswith("__"):
                return f"dunder attribute {node.attr!r} is not allowed"
            if node.attr in FORBIDDEN_ATTRS:
                return f"attribute {node.attr!r} is not allowed"
    return None
