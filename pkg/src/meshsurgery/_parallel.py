"""Chunked thread-pool helper.

Work is split into contiguous index ranges and the per-chunk results are
returned in range order, so callers that concatenate them get the same
output for any thread count.
"""

from __future__ import annotations

import contextlib
from concurrent.futures import ThreadPoolExecutor

_threads = 1
_chunk_override = None
split_calls = 0  # calls that actually ran on more than one chunk


def get_threads() -> int:
    return _threads


def set_threads(n: int) -> None:
    global _threads
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _threads = int(n)


@contextlib.contextmanager
def threads(n: int, min_chunk: int | None = None):
    """Run the block with ``n`` workers; ``min_chunk`` overrides every call site's chunk floor."""
    global _chunk_override
    previous, previous_chunk = _threads, _chunk_override
    set_threads(n)
    _chunk_override = min_chunk
    try:
        yield
    finally:
        set_threads(previous)
        _chunk_override = previous_chunk


def map_chunks(fn, n_items: int, min_chunk: int = 4096) -> list:
    """Call ``fn(start, stop)`` over a partition of ``range(n_items)``.

    Returns the list of chunk results ordered by ``start``.
    """
    global split_calls
    workers = _threads
    if _chunk_override is not None:
        min_chunk = _chunk_override
    if workers == 1 or n_items <= min_chunk:
        return [fn(0, n_items)]
    n_chunks = min(workers, max(1, n_items // min_chunk))
    if n_chunks > 1:
        split_calls += 1
    bounds = [n_items * i // n_chunks for i in range(n_chunks + 1)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, bounds[i], bounds[i + 1]) for i in range(n_chunks)]
        return [f.result() for f in futures]
