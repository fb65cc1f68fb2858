"""Scripted CLI session used by the determinism checks."""

from __future__ import annotations

import contextlib
import io
import shutil
from pathlib import Path

from trajkit.cli import main

SCRIPT = [
    ["init", "--sample"],
    ["segment", "MH-01"],
    ["segment", "MH-02"],
    ["relate", "MH-01", "MH-02"],
    ["region", "MH-01", "clinic-zone"],
    ["region", "MH-02", "lake"],
    ["timeline", "MH-01"],
    ["reconcile", "MH-01"],
    ["reconcile", "MH-02"],
    ["records", "add", "Hedi", "--field", "age=61"],
    ["records", "examine", "P000002", "N1", "pulse 80", "--at", "2010-03-01T10:00:00Z"],
    ["records", "consult", "Hedi"],
    ["profile", "export", "--format", "structured"],
    ["segment", "nobody"],
]


def run(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = main(argv)
        except SystemExit as exc:
            code = exc.code
    return code, out.getvalue(), err.getvalue()


def snapshot(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != ".lock"}


def session(root: Path) -> tuple[list[tuple[int, str, str]], dict[str, bytes]]:
    """Run the script on a fresh sample workspace at ``root``."""
    if root.exists():
        shutil.rmtree(root)
    results = [run(["--workspace", str(root), *argv]) for argv in SCRIPT]
    return results, snapshot(root)


def determinism_check(root: Path) -> bool:
    first = session(root)
    second = session(root)
    return first == second and all(code == 0 for code, _, _ in first[0][:-1]) and first[0][-1][0] == 1
