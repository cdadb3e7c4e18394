from contextlib import nullcontext

import pytest

from mzi_pigeonhole import InvalidInputError
from mzi_pigeonhole._parallel import THREADS_ENV_VAR, blocks, ordered_map, thread_count


@pytest.mark.parametrize(
    ("env", "override", "expected", "expected_context"),
    [
        pytest.param(None, None, 1, nullcontext(), id="default"),
        pytest.param("3", None, 3, nullcontext(), id="from the environment"),
        pytest.param("3", 2, 2, nullcontext(), id="flag wins"),
        pytest.param("many", None, None, pytest.raises(InvalidInputError), id="not a number"),
        pytest.param(None, 0, None, pytest.raises(InvalidInputError), id="zero threads"),
    ],
)
def test_thread_count(monkeypatch, env, override, expected, expected_context):
    if env is None:
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    else:
        monkeypatch.setenv(THREADS_ENV_VAR, env)
    with expected_context:
        assert thread_count(override) == expected


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_ordered_map_keeps_input_order(threads):
    assert ordered_map(lambda x: x * x, range(20), threads) == [x * x for x in range(20)]


@pytest.mark.parametrize(
    ("n_items", "threads"),
    [pytest.param(257, 1), pytest.param(257, 8), pytest.param(3, 8), pytest.param(1, 1)],
)
def test_blocks_cover_every_row_once(n_items, threads):
    rows = [i for block in blocks(n_items, threads) for i in block]
    assert rows == list(range(n_items))
