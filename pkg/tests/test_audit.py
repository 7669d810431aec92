"""Tests for the correctable-set audit engine."""
import pytest

from src.audit import AuditEngine, AuditFinding, CodeAudit
from src.recovery import default_correctable_set


class TestAudit:
    def test_five_qubit_claims_confirmed(self):
        audit = AuditEngine.audit("five_qubit")
        assert audit.passed
        assert audit.accepted_count == 11
        assert {f.status for f in audit.findings} == {"confirmed"}
        assert sorted(audit.derived_exclusions()) == sorted(audit.claimed_exclusions())
        assert len(audit.findings) == 15

    def test_six_qubit_claims_confirmed(self):
        audit = AuditEngine.audit("six_degenerate")
        assert audit.passed
        assert len(audit.findings) == 13

    def test_seven_qubit_excitation_singles(self):
        audit = AuditEngine.audit("css_seven")
        assert audit.passed
        assert audit.accepted_count == 15
        assert len(audit.findings) == 7
        assert {f.status for f in audit.findings} == {"confirmed"}
        assert {f.claimed for f in audit.findings} == {"overlap-with-weight-0"}

    def test_eight_qubit_claims_confirmed(self):
        audit = AuditEngine.audit("eight_concat")
        assert audit.passed
        assert audit.accepted_count == 37
        assert len(audit.findings) == 16
        assert sorted(audit.derived_exclusions()) == sorted(audit.claimed_exclusions())

    def test_nine_qubit_self_overlaps_confirmed(self):
        audit = AuditEngine.audit("shor_nine")
        assert audit.passed
        assert audit.accepted_count == 109
        assert len(audit.findings) == 39
        self_overlaps = [f for f in audit.findings if f.claimed == "self-overlap"]
        assert len(self_overlaps) == 27
        for f in self_overlaps:
            assert (f.status, f.derived, f.partner) == ("confirmed", "self-overlap", None)
            assert f.overlap == pytest.approx(1.0, abs=1e-9)

    def test_accepting_self_overlaps_is_reported_missing(self, monkeypatch):
        def published(code):
            cs = default_correctable_set(code)
            return cs.with_accepted([x.error for x in cs.excluded if x.reason == "self-overlap"])

        monkeypatch.setattr("src.audit.default_correctable_set", published)
        audit = AuditEngine.audit("shor_nine")
        assert audit.accepted_count == 136
        assert not audit.passed
        missing = [f for f in audit.failures if f.status == "missing"]
        assert len(missing) == 27
        assert {f.derived for f in missing} == {"self-overlap"}

    def test_unclaimed_doubles_are_informational(self):
        audit = AuditEngine.audit("nonadd_9_12_3")
        statuses = [f.status for f in audit.findings]
        assert statuses.count("unclaimed") == 36
        assert statuses.count("confirmed") == 9
        assert audit.passed

    def test_damping_only_code_has_nothing_to_audit(self):
        audit = AuditEngine.audit("leung_four")
        assert audit.regime == "AD_only"
        assert audit.findings == []
        assert audit.kl is not None
        assert audit.kl.params.epsilon == 0.0

    def test_default_kl_point_for_gad_codes(self):
        audit = AuditEngine.audit("five_qubit")
        assert (audit.kl.params.gamma, audit.kl.params.epsilon) == (0.05, 0.005)

    def test_unknown_code(self):
        with pytest.raises(ValueError, match="Unknown code"):
            AuditEngine.audit("toric")


class TestDiagnose:
    @pytest.mark.parametrize("status,severity", [
        ("missing", "critical"),
        ("spurious", "high"),
        ("confirmed", "low"),
        ("unclaimed", "info"),
    ])
    def test_severity(self, status, severity):
        finding = AuditFinding("11000", "incompatible-pair", None, status=status)
        diagnosis = AuditEngine.diagnose(finding)
        assert diagnosis.severity == severity
        assert diagnosis.category == status

    def test_failed_statuses(self):
        assert AuditFinding("1", None, None, status="missing").failed
        assert AuditFinding("1", None, None, status="spurious").failed
        assert not AuditFinding("1", None, None, status="unclaimed").failed


class TestSummary:
    def test_batch_summary(self):
        audits = AuditEngine.audit_batch(["five_qubit", "leung_four"])
        summary = AuditEngine.get_summary(audits)
        assert summary["total_codes"] == 2
        assert summary["passed"] == 2
        assert summary["failing_codes"] == []
        assert summary["status_counts"] == {"confirmed": 15}
        assert summary["diagnoses"] == []
        assert set(summary["max_kl_off_diagonal"]) == {"five_qubit", "leung_four"}

    def test_failing_code_is_reported(self):
        failing = CodeAudit("made_up", "GAD", 1, [AuditFinding("10", "overlap-with-weight-0", None, status="spurious")])
        summary = AuditEngine.get_summary({"made_up": failing})
        assert summary["failing_codes"] == ["made_up"]
        assert summary["diagnoses"][0].category == "spurious"
