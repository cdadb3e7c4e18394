from __future__ import annotations

import logging
import os
from collections.abc import Callable, Iterable
from itertools import pairwise
from typing import TypeVar

from joblib import Parallel, delayed

from mzi_pigeonhole._errors import InvalidInputError

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "MZI_PIGEONHOLE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def thread_count(override: int | None = None) -> int:
    """Worker threads for grid and sweep evaluation: ``override``, else the env var, else 1."""
    raw = override if override is not None else os.environ.get(THREADS_ENV_VAR, "1")
    try:
        threads = int(raw)
    except ValueError as e:
        msg = f"{THREADS_ENV_VAR} must be an integer, got {raw!r}"
        logger.error(msg)
        raise InvalidInputError(msg) from e
    if threads < 1:
        msg = f"thread count must be at least 1, got {threads = }"
        logger.error(msg)
        raise InvalidInputError(msg)
    return threads


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order."""
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug(f"dispatching {len(items)} tasks over {threads = }")
    return list(Parallel(n_jobs=threads, prefer="threads")(delayed(fn)(item) for item in items))


def blocks(n_items: int, threads: int) -> list[range]:
    """Split ``range(n_items)`` into contiguous blocks, a few per thread."""
    n_blocks = max(1, min(n_items, 4 * threads))
    bounds = [n_items * i // n_blocks for i in range(n_blocks + 1)]
    return [range(lo, hi) for lo, hi in pairwise(bounds) if hi > lo]
