"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

import time
from contextlib import contextmanager

LINES: list[str] = []


@contextmanager
def criterion(number: int, title: str):
    """Record a result line for the enclosed check; ``detail`` entries are appended to it."""
    detail: dict = {}
    start = time.perf_counter()
    try:
        yield detail
    except BaseException as exc:
        _emit(number, "FAIL", title, detail, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
        raise
    _emit(number, "PASS", title, detail, time.perf_counter() - start)


def _emit(number, status, title, detail, elapsed, error=None):
    parts = [f"{k}={v}" for k, v in detail.items()]
    if error:
        parts.append(error.splitlines()[0][:160])
    line = f"criterion {number}: {status}  {title}  ({elapsed:.2f}s)" + (f"  {'; '.join(parts)}" if parts else "")
    LINES.append(line)
    print(line, flush=True)
