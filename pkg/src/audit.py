"""
Audit engine for correctable sets.
Re-derives each code's exclusion list from image overlaps and diffs it
against the claimed list.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .channel import GadParams
from .codes import build_code
from .recovery import (
    GAD,
    ImageBank,
    KlReport,
    check_kl_conditions,
    default_correctable_set,
    find_incompatibility,
)


logger = logging.getLogger(__name__)


@dataclass
class Diagnosis:
    """Interpretation of one audit finding."""
    issue: str
    cause: str
    suggestion: str
    severity: str  # "critical", "high", "low", "info"
    category: str  # "confirmed", "compatible", "missing", "spurious", "unclaimed"


@dataclass
class AuditFinding:
    """Claimed versus derived status of one error."""
    error: str
    claimed: Optional[str]
    derived: Optional[str]
    partner: Optional[str] = None
    overlap: float = 0.0
    status: str = "compatible"

    @property
    def failed(self) -> bool:
        return self.status in ("missing", "spurious")


@dataclass
class CodeAudit:
    """All findings for one code plus the QEC-condition summary."""
    code_name: str
    regime: str
    accepted_count: int
    findings: List[AuditFinding] = field(default_factory=list)
    kl: Optional[KlReport] = None

    @property
    def failures(self) -> List[AuditFinding]:
        return [f for f in self.findings if f.failed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def derived_exclusions(self) -> List[str]:
        return [f.error for f in self.findings if f.derived is not None]

    def claimed_exclusions(self) -> List[str]:
        return [f.error for f in self.findings if f.claimed not in (None, "accepted")]


class AuditEngine:
    """Compares claimed exclusion lists with the overlap-derived ones."""

    AUDIT_RULES = {
        "confirmed": Diagnosis(
            issue="Exclusion confirmed",
            cause="The error's images overlap those of a lower-weight accepted error, or each other",
            suggestion="No action needed",
            severity="low",
            category="confirmed",
        ),
        "compatible": Diagnosis(
            issue="Accepted error is compatible",
            cause="Images are orthogonal to every lower-weight accepted error, or shared on the same codeword",
            suggestion="No action needed",
            severity="low",
            category="compatible",
        ),
        "missing": Diagnosis(
            issue="Accepted error is not correctable",
            cause="An accepted error overlaps a lower-weight accepted error, or maps two codewords onto each other",
            suggestion="Move the error to the exclusion list, or check the codewords for a transcription error.",
            severity="critical",
            category="missing",
        ),
        "spurious": Diagnosis(
            issue="Excluded error is compatible",
            cause="The claimed exclusion has no overlap with any lower-weight accepted error",
            suggestion="Accept the error, or check the per-code rule table for a typo in the label.",
            severity="high",
            category="spurious",
        ),
        "unclaimed": Diagnosis(
            issue="Outside the claimed lists",
            cause="No statement is made about this error; the derived status is informational",
            suggestion="No action needed",
            severity="info",
            category="unclaimed",
        ),
    }

    @staticmethod
    def diagnose(finding: AuditFinding) -> Diagnosis:
        """
        Interpret an audit finding.

        Args:
            finding: AuditFinding to interpret

        Returns:
            Diagnosis with issue, cause and suggestion
        """
        return AuditEngine.AUDIT_RULES[finding.status]

    @staticmethod
    def audit(code_name: str, kl_params: Optional[GadParams] = None) -> CodeAudit:
        """
        Audit one registered code's default correctable set.

        Every accepted error is checked against the accepted errors of lower
        weight, and every error in the audit scope is classified.

        Args:
            code_name: Registered code
            kl_params: Point for the QEC-condition summary; defaults to
                (0.05, 0.005) for GAD-regime codes and (0.05, 0) otherwise

        Returns:
            CodeAudit
        """
        code = build_code(code_name)
        correctable = default_correctable_set(code)
        accepted = correctable.accepted
        claimed = correctable.claimed_exclusions()
        accepted_labels = {e.label for e in accepted}
        bank = ImageBank(code)

        findings = []
        for error in accepted:
            conflict = find_incompatibility(code, error, accepted, bank)
            if conflict is not None:
                findings.append(AuditFinding(
                    error.label, "accepted", conflict.reason,
                    str(conflict.partner) if conflict.partner else None, conflict.overlap, "missing",
                ))

        for error in correctable.audit_scope:
            if error.label in accepted_labels:
                continue
            conflict = find_incompatibility(code, error, accepted, bank)
            derived = conflict.reason if conflict else None
            partner = str(conflict.partner) if conflict and conflict.partner else None
            overlap = conflict.overlap if conflict else 0.0
            if error.label not in claimed:
                status = "unclaimed"
            elif conflict is None:
                status = "spurious"
            else:
                status = "confirmed"
                if derived != claimed[error.label]:
                    logger.info(f"{code_name}: {error} tagged {claimed[error.label]}, derived {derived}")
            findings.append(AuditFinding(error.label, claimed.get(error.label), derived, partner, overlap, status))

        if kl_params is None:
            kl_params = GadParams(0.05, 0.005 if correctable.regime == GAD else 0.0)
        kl = check_kl_conditions(code, accepted, kl_params)

        result = CodeAudit(code_name, correctable.regime, len(accepted), findings, kl)
        logger.info(
            f"Audit of {code_name}: {len(findings)} findings, "
            f"{len(result.failures)} failures, {len(result.derived_exclusions())} derived exclusions"
        )
        return result

    @staticmethod
    def audit_batch(code_names: List[str]) -> Dict[str, CodeAudit]:
        """
        Audit several codes.

        Args:
            code_names: Registered code names

        Returns:
            Dictionary mapping code names to their CodeAudit
        """
        return {name: AuditEngine.audit(name) for name in code_names}

    @staticmethod
    def get_summary(audits: Dict[str, CodeAudit]) -> Dict[str, Any]:
        """
        Get summary statistics for a batch of audits.

        Args:
            audits: Output of audit_batch

        Returns:
            Summary dictionary with counts per status and failing codes
        """
        status_counts: Dict[str, int] = {}
        for audit in audits.values():
            for finding in audit.findings:
                status_counts[finding.status] = status_counts.get(finding.status, 0) + 1

        failing = [name for name, audit in audits.items() if not audit.passed]
        return {
            "total_codes": len(audits),
            "passed": len(audits) - len(failing),
            "failed": len(failing),
            "failing_codes": failing,
            "status_counts": status_counts,
            "max_kl_off_diagonal": {
                name: audit.kl.max_off_diagonal for name, audit in audits.items() if audit.kl
            },
            "diagnoses": [
                AuditEngine.diagnose(f) for audit in audits.values() for f in audit.failures
            ],
        }
