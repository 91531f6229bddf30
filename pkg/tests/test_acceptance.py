"""Acceptance gate: the ten quantitative criteria, one test each.

Every test prints a PASS/FAIL line per underlying report (run with -s to
stream them) and asserts at the stated tolerances.
"""
import pytest

from klpath.verify import (
    check_closed_form_oracle,
    check_completion_identity,
    check_equidistribution,
    check_fourth_moment,
    check_finite_distributions,
    check_hensel_census,
    check_measure_moments,
    check_performance,
    check_series_self_tests,
    check_tightness,
)


def _assert_reports(criterion: str, reports) -> None:
    for rep in reports:
        tag = "PASS" if rep.passed else "FAIL"
        print(f"{tag}  {criterion} :: {rep.name} ({rep.seconds:.2f}s)", flush=True)
    failed = [rep for rep in reports if not rep.passed]
    assert not failed, "\n".join(
        f"{rep.name}: observed={rep.observed!r} tolerance={rep.tolerance!r}"
        for rep in failed
    )


def test_criterion_01_closed_form_oracle():
    reports = check_closed_form_oracle()
    _assert_reports("criterion-01 closed-form oracle", reports)
    obs = reports[0].observed
    assert obs["max_abs_diff"] <= 1e-9
    assert obs["max_imag"] <= 1e-9
    assert reports[0].params["pairs"] == 48960
    assert reports[0].seconds < 60.0


def test_criterion_02_measure_moments():
    reports = check_measure_moments()
    _assert_reports("criterion-02 measure moments", reports)
    obs = reports[0].observed
    assert abs(obs[2] - 1.0) <= 0.05
    assert abs(obs[4] - 3.0) <= 0.15
    assert abs(obs[6] - 10.0) <= 0.60
    assert abs(obs[1]) <= 0.05
    assert abs(obs[3]) <= 0.10
    assert reports[0].seconds < 30.0


def test_criterion_03_equidistribution():
    reports = check_equidistribution()
    _assert_reports("criterion-03 equidistribution", reports)
    obs = reports[0].observed
    assert obs["zero_fraction"] == 0.5
    assert obs["ks_distance"] <= 0.05


def test_criterion_04_completion_identity():
    reports = check_completion_identity(samples=200)
    _assert_reports("criterion-04 completion identity", reports)
    assert reports[0].observed["worst_scaled_error"] <= 1.0
    assert reports[0].seconds < 120.0


def test_criterion_05_hensel_census():
    reports = check_hensel_census()
    _assert_reports("criterion-05 quadratic root census", reports)
    assert reports[0].observed["mismatches"] == 0
    assert reports[0].seconds < 60.0


def test_criterion_06_fourth_moment():
    reports = check_fourth_moment()
    _assert_reports("criterion-06 fourth moment", reports)
    equality, cap = reports
    assert equality.observed["worst_relative_diff"] <= 1e-12
    assert cap.observed["max_ratio"] <= 32.0


def test_criterion_07_tightness_increment():
    reports = check_tightness()
    _assert_reports("criterion-07 tightness increment", reports)
    for rep in reports:
        assert rep.observed["max_ratio"] <= 100.0


def test_criterion_08_finite_distribution_match():
    reports = check_finite_distributions()
    _assert_reports("criterion-08 finite distributions", reports)
    obs = reports[0].observed
    for t in ("0.25", "0.5", "0.75"):
        assert abs(obs["second_moment"][t] - float(t)) <= 0.03
    assert abs(obs["joint_moment"] - obs["mc_joint_moment"]) <= 0.05


def test_criterion_09_series_self_tests():
    reports = check_series_self_tests()
    _assert_reports("criterion-09 series self-tests", reports)
    sampler, decay = reports
    assert sampler.passed
    assert -0.65 <= decay.observed["fitted_exponent"] <= -0.35


def test_criterion_10_performance():
    reports = check_performance()
    _assert_reports("criterion-10 performance", reports)
    batch, path = reports
    assert batch.observed["seconds"] < 5.0
    assert path.observed["seconds"] < 1.0
    assert path.params["vertices"] == 4422
