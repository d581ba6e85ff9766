"""
Tests for the worked-example replay
"""
from app.harness.paper_check import (
    CHARLIE_STRING,
    cmd_paper_check,
    check_scheme_b_replay,
    decode_charlie_string,
)
from app.services.statevec import BellLabel


class TestPaperCheck:
    """Every worked example reproduces exactly"""

    def test_all_checks_pass(self):
        report = cmd_paper_check()
        failed = [check.name for check in report.checks if not check.passed]
        assert failed == []
        assert report.passed

    def test_charlie_string(self):
        labels = decode_charlie_string(CHARLIE_STRING)
        assert len(labels) == 8
        assert labels[1] is BellLabel.PHI_MINUS
        assert labels[6] is BellLabel.PSI_MINUS

    def test_scheme_b_observations(self):
        observed = {check.name: check.observed for check in check_scheme_b_replay()}
        assert observed["scheme B: Alice outcomes"] == "00011010"
        assert observed["scheme B: announced deltas"] == "10001111"
        assert observed["scheme B: decoded message"] == "10010101"
