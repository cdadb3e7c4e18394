import json
from contextlib import nullcontext

import pytest

from mzi_pigeonhole import Domain, InvalidInputError, get_fake_adapter, load_tolerances, run_checks
from mzi_pigeonhole._verify import CHECKS, DEFAULT_TOLERANCES, TOLERANCES_ENV_VAR


@pytest.fixture(autouse=True)
def _no_env_override(monkeypatch):
    monkeypatch.delenv(TOLERANCES_ENV_VAR, raising=False)


def test_defaults_without_overrides():
    assert load_tolerances() == DEFAULT_TOLERANCES


def test_environment_wins_over_the_file(monkeypatch):
    adapter = get_fake_adapter(
        Domain.VERIFY, files={"tol.json": {"moment_atol": 1e-5, "large_d_atol": 1e-2}}
    )
    monkeypatch.setenv(TOLERANCES_ENV_VAR, json.dumps({"moment_atol": 1e-4}))
    tolerances = load_tolerances(adapter, "tol.json")
    assert tolerances["moment_atol"] == 1e-4
    assert tolerances["large_d_atol"] == 1e-2
    assert tolerances["overlap_rtol"] == DEFAULT_TOLERANCES["overlap_rtol"]


@pytest.mark.parametrize(
    ("files", "path", "env", "expected_context"),
    [
        pytest.param({"t.json": {"zero_slope_atol": 2e-3}}, "t.json", None, nullcontext(), id="valid"),
        pytest.param({}, "t.json", None, pytest.raises(InvalidInputError), id="missing file"),
        pytest.param({"t.json": [1, 2]}, "t.json", None, pytest.raises(InvalidInputError), id="not an object"),
        pytest.param({"t.json": {"slack": 1.0}}, "t.json", None, pytest.raises(InvalidInputError), id="unknown"),
        pytest.param(
            {"t.json": {"moment_atol": "tight"}}, "t.json", None, pytest.raises(InvalidInputError), id="text"
        ),
        pytest.param({}, None, "{not json", pytest.raises(InvalidInputError), id="env not json"),
        pytest.param({}, None, '{"moment": 1}', pytest.raises(InvalidInputError), id="env unknown key"),
    ],
)
def test_load_tolerances_rejects_bad_overrides(monkeypatch, files, path, env, expected_context):
    if env is not None:
        monkeypatch.setenv(TOLERANCES_ENV_VAR, env)
    with expected_context:
        load_tolerances(get_fake_adapter(Domain.VERIFY, files=files), path)


def test_quick_checks_pass():
    report = run_checks(quick=True)
    assert report["passed"]
    assert all(check["passed"] for check in report["checks"])
    assert report["checks"][0]["detail"] == {"groups": 4}


def test_failure_is_recorded_and_the_rest_still_run():
    tolerances = DEFAULT_TOLERANCES | {"overlap_rtol": -1.0, "overlap_atol": -1.0}
    report = run_checks(tolerances, quick=True)
    assert not report["passed"]
    by_name = {check["name"]: check for check in report["checks"]}
    assert by_name["branches.golden"]["passed"]
    failed = by_name["overlap.closed_form_vs_quadrature"]
    assert not failed["passed"]
    assert failed["error"].startswith("CheckFailedError")


def test_check_names_are_unique():
    names = [check.name for check in CHECKS]
    assert len(names) == len(set(names))


@pytest.mark.slow
def test_full_suite_passes():
    report = run_checks()
    failed = [check for check in report["checks"] if not check["passed"]]
    assert failed == []
    assert len(report["checks"]) == len(CHECKS)


def test_overlap_check_reports_absolute_error_and_floor_use():
    report = run_checks(quick=True)
    detail = next(c for c in report["checks"] if c["name"] == "overlap.closed_form_vs_quadrature")["detail"]
    assert 0.0 <= detail["worst_absolute"] <= 1e-8
    assert 0 <= detail["within_absolute_floor_only"] <= detail["compared"]
