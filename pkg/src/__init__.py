"""
gadqec - Approximate QEC under Generalized Amplitude Damping
Codes, recoveries and entanglement fidelity for thermal relaxation noise.

A desk-scale simulator and CLI: GAD Kraus errors, stabilizer and nonadditive
codes, Knill-Laflamme and transpose-channel recoveries, exact and estimated
entanglement fidelity, and checks of the leading expansion coefficients.
"""

__version__ = "1.0.0"
__author__ = "Kumar"
__description__ = "gadqec - Approximate quantum error correction under generalized amplitude damping"

# Export main classes for easier imports
from .channel import ErrorIndex, GadParams, TemperaturePoint, params_from_temperature
from .codes import CODE_NAMES, QuantumCode, build_code
from .recovery import (
    CorrectableSet,
    IncompatibleErrorSet,
    RecoverySet,
    VanishingImageError,
    build_recovery,
    default_correctable_set,
)
from .fidelity import FidelityResult, SweepGrid, entanglement_fidelity, scheme_fidelity
from .series import ExpansionReport, IllConditionedFit, verify_coefficients
from .audit import AuditEngine
from .report import ReportGenerator

__all__ = [
    "ErrorIndex",
    "GadParams",
    "TemperaturePoint",
    "params_from_temperature",
    "CODE_NAMES",
    "QuantumCode",
    "build_code",
    "CorrectableSet",
    "IncompatibleErrorSet",
    "RecoverySet",
    "VanishingImageError",
    "build_recovery",
    "default_correctable_set",
    "FidelityResult",
    "SweepGrid",
    "entanglement_fidelity",
    "scheme_fidelity",
    "ExpansionReport",
    "IllConditionedFit",
    "verify_coefficients",
    "AuditEngine",
    "ReportGenerator",
]
