from fractions import Fraction

import pytest

from config import config_from_dict
from models.report import CheckStatus, VerificationReport
from services import verification
from services.verification import CHECKS, run_verification

FAST_CHECKS = [
    "spectrum_display",
    "parseval",
    "parseval_monotone",
    "orthonormality",
    "lipschitz",
    "derivative_quotient",
    "unit_variance",
    "stationarity",
    "vage",
    "bridge_shape",
    "ou_decay",
]


def _config(**sections):
    data = {"verify": {"random_points": 20, "wick_N": 8, "ito_N": 8}}
    data.update(sections)
    return config_from_dict(data)


def test_every_configured_check_is_registered():
    assert set(_config().verify.checks) == set(CHECKS)


def test_fast_checks_pass_on_default_measure():
    report = run_verification(_config(), FAST_CHECKS)
    failed = [r.to_dict() for r in report.get_all() if not r.passed]
    assert not failed
    assert report.passed
    assert {"vage_constant", "vage_inequality"} <= {r.name for r in report.get_all()}


def test_wick_ito_and_polynomial_ito_checks_pass():
    report = run_verification(_config(), ["wick_ito", "ito_polynomial"])
    assert report.passed
    wick = report.get("wick_ito")
    assert wick.extra["refinements"] >= 3
    assert len(wick.extra["table"]) == wick.extra["refinements"]
    assert report.get("ito_polynomial_x3").measured < 1e-5
    assert report.get("ito_polynomial_x2").extra["rate_source"] == "truncated"
    kernel_row = report.get("ito_polynomial_kernel_rate")
    assert kernel_row.extra["rate_source"] == "kernel"
    assert kernel_row.extra["truncation_gap"] > 0.0
    assert kernel_row.extra["residual"] == pytest.approx(kernel_row.extra["truncation_gap"], abs=1e-5)


def test_wrong_spectrum_fails_parseval():
    cfg = _config(spectrum={"explicit": ["0", "1/2", "1", "4", "5"]})
    report = run_verification(cfg, ["parseval"])
    result = report.get("parseval")
    assert result.status is CheckStatus.FAIL
    assert not report.passed


def test_service_errors_become_error_rows():
    cfg = _config(budget={"product_depth": 2, "max_product_depth": 3})
    report = run_verification(cfg, ["parseval", "spectrum_display"])
    assert report.get("parseval").status is CheckStatus.ERROR
    assert "BudgetExhaustedError" in report.get("parseval").detail
    assert report.get("spectrum_display").passed
    assert report.counts_by_status() == {"pass": 2, "fail": 0, "error": 1}
    assert not report.passed


def test_unknown_check_raises():
    with pytest.raises(KeyError):
        run_verification(_config(), ["astrology"])


def test_report_persists(tmp_path):
    report = run_verification(_config(), ["spectrum_display", "ou_decay"])
    target = tmp_path / "report.json"
    report.save(str(target))
    loaded = VerificationReport.load(str(target))
    assert [r.name for r in loaded.get_all()] == ["spectrum_display", "spectrum_display_discrepancy", "ou_decay"]
    assert loaded.get("spectrum_display_discrepancy").extra["displayed"] == "18"
    assert loaded.passed


def test_spectrum_display_reports_recorded_discrepancy():
    report = run_verification(_config(), ["spectrum_display"])
    assert report.get("spectrum_display").measured == 0
    row = report.get("spectrum_display_discrepancy")
    assert row.passed
    assert (row.extra["m"], row.extra["position"]) == (3, 4)
    assert row.extra["displayed"] == "18"
    assert row.extra["generated"] == "54"
    assert row.extra["decision"] == "digit rule"
    assert "Lambda_3[4]" in row.detail


def test_unrecorded_display_mismatch_fails(monkeypatch):
    displays = dict(verification.SPECTRUM_DISPLAYS)
    displays[2] = [Fraction(v) for v in (0, 1, 4, 5, 16, 17, 21)]
    monkeypatch.setattr(verification, "SPECTRUM_DISPLAYS", displays)
    report = run_verification(_config(), ["spectrum_display"])
    assert report.get("spectrum_display").status is CheckStatus.FAIL
    assert report.get("spectrum_display").measured == 1


def test_qsigma_norm_reports_reference_shortfall():
    cfg = _config(verify={"seed": 0, "qsigma_N": 512, "qsigma_reference_N": 256})
    report = run_verification(cfg, ["qsigma_norm"])
    row = report.get("qsigma_norm")
    assert row.extra["N"] == 512
    assert row.extra["reference_N"] == 256
    assert row.extra["reference_over_tolerance"] >= 1
    assert row.extra["reference_worst"] > row.measured
    assert "at N=256" in row.detail
    assert report.get("qsigma_bound").passed
