"""
Helpers for library code that reports through ``print`` when ``debug`` is set.

Workflows capture that output with ``redirect_print_report`` and forward it to
their logger, so library functions never touch logging themselves.
"""

import contextlib
import io
import threading
import warnings
from typing import Iterable, Iterator, TypeVar

# Try to import alive_progress for progress bars
try:
    from alive_progress import alive_bar
    HAS_ALIVE_BAR = True
except ImportError:
    HAS_ALIVE_BAR = False

T = TypeVar("T")


def redirect_print_report(func, *args, **kwargs):
    """
    Call ``func`` and return ``(result, captured_stdout)``.

    Only the main thread swaps ``sys.stdout``. Prints from worker threads
    started by ``func`` land in the same buffer; a call made from any other
    thread runs uncaptured and returns an empty string.
    """
    if threading.current_thread() is not threading.main_thread():
        return func(*args, **kwargs), ""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        result = func(*args, **kwargs)
    output = buf.getvalue()
    return result, output


def progress(items: Iterable[T], total: int, title: str, enabled: bool = False) -> Iterator[T]:
    """
    Iterate ``items`` with an alive-progress bar when ``enabled``.

    Falls back to plain iteration (with a one-time hint) if alive-progress is
    not installed.
    """
    if not enabled or total == 0:
        yield from items
        return
    if not HAS_ALIVE_BAR:
        warnings.warn("alive_progress not available. Install with: pip install alive-progress")
        yield from items
        return
    with alive_bar(total, title=title) as bar:
        for item in items:
            yield item
            bar()
