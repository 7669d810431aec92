"""
Leading expansion coefficients of F(gamma, epsilon).

Least-squares fits of 1 - F against monomials in gamma and epsilon, the
analytic coefficient table they are checked against, and the exact
non-truncated polynomials for the seven- and nine-qubit codes.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import GadParams
from .codes import build_code
from .fidelity import SweepGrid, run_sweep, scheme_fidelity
from .recovery import default_correctable_set


logger = logging.getLogger(__name__)

Monomial = Tuple[int, int]
Evaluator = Callable[[float, float], float]

CONDITION_LIMIT = 1e12
DEFAULT_TOLERANCE = 0.05
# Absolute bound for a coefficient whose expected value is zero
ZERO_COEFFICIENT_BOUND = 0.1

GAMMA_BASIS: List[Monomial] = [(2, 0), (3, 0), (4, 0), (5, 0)]
MIXED_BASIS: List[Monomial] = [(2, 0), (0, 2), (1, 1)]
CUBIC_NUISANCE: List[Monomial] = [(3, 0), (2, 1), (1, 2), (0, 3)]
MIXED_RAYS = (0.0, 0.5, 1.0, 2.0)

# Exact fidelity against the reference expressions: target gap and widest accepted gap
POLYNOMIAL_TOLERANCE = 1e-3
POLYNOMIAL_LIMIT = 5e-3
SCHEME_CONSISTENCY_TOL = 1e-10
POLYNOMIAL_RANGES: Dict[str, float] = {"css_seven": 0.2, "shor_nine": 0.15}


class IllConditionedFit(ValueError):
    """The scaled design matrix cannot separate the requested monomials."""


def monomial_name(m: Monomial) -> str:
    """(2, 0) -> "gamma^2", (1, 1) -> "eps*gamma", (0, 2) -> "eps^2"."""
    g, e = m
    parts = []
    if e:
        parts.append("eps" if e == 1 else f"eps^{e}")
    if g:
        parts.append("gamma" if g == 1 else f"gamma^{g}")
    return "*".join(parts) or "1"


@dataclass
class SampleBox:
    """Log-spaced gamma samples along rays epsilon = rho * gamma."""
    gamma_min: float = 1e-3
    gamma_max: float = 1e-2
    points: int = 8
    rays: Tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if not 0.0 < self.gamma_min < self.gamma_max <= 1.0:
            raise ValueError(f"invalid gamma range [{self.gamma_min}, {self.gamma_max}]")
        if self.points < 2:
            raise ValueError("a sample box needs at least two points per ray")

    def samples(self) -> List[Tuple[float, float]]:
        gammas = np.geomspace(self.gamma_min, self.gamma_max, self.points)
        return [(float(g), float(rho * g)) for rho in self.rays for g in gammas]

    def halved(self) -> "SampleBox":
        return SampleBox(self.gamma_min, self.gamma_max / 2, self.points, self.rays)


@dataclass
class ExpansionReport:
    """Fitted coefficients next to the analytic ones."""
    code_name: str
    coefficients: Dict[str, float]
    expected: Dict[str, float] = field(default_factory=dict)
    residual: float = 0.0
    condition: float = 0.0
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def relative_errors(self) -> Dict[str, float]:
        errors = {}
        for name, want in self.expected.items():
            got = self.coefficients.get(name, math.nan)
            errors[name] = abs(got) if want == 0 else abs(got - want) / abs(want)
        return errors

    def checks(self) -> Dict[str, bool]:
        """Pass/fail per expected coefficient."""
        results = {}
        for name, err in self.relative_errors.items():
            bound = ZERO_COEFFICIENT_BOUND if self.expected[name] == 0 else self.tolerance
            results[name] = bool(err <= bound)
        return results

    @property
    def passed(self) -> bool:
        return all(self.checks().values())

    def to_dict(self) -> Dict[str, object]:
        return {
            "code": self.code_name,
            "coefficients": self.coefficients,
            "expected": self.expected,
            "relative_errors": self.relative_errors,
            "checks": self.checks(),
            "residual": self.residual,
            "condition": self.condition,
            "passed": self.passed,
        }


def _evaluate_samples(evaluator: Evaluator, samples: Sequence[Tuple[float, float]], threads: int) -> np.ndarray:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda s: evaluator(*s), samples))
    else:
        values = [evaluator(g, e) for g, e in samples]
    return np.array(values, dtype=float)


def fit_expansion(
    evaluator: Evaluator,
    basis: Sequence[Monomial],
    sample_box: Optional[SampleBox] = None,
    nuisance: Sequence[Monomial] = (),
    code_name: str = "",
    threads: int = 1,
) -> ExpansionReport:
    """
    Least-squares fit of 1 - F against monomials gamma^a epsilon^b.

    Args:
        evaluator: Function (gamma, epsilon) -> F
        basis: Monomials whose coefficients are reported
        sample_box: Sample grid; defaults to the epsilon = 0 ray
        nuisance: Extra monomials fitted but not reported
        code_name: Label for the report
        threads: Parallel evaluator calls

    Returns:
        ExpansionReport keyed by monomial name

    Raises:
        IllConditionedFit: If the column-scaled design matrix has condition
            number above 1e12
    """
    box = sample_box or SampleBox()
    columns = list(basis) + [m for m in nuisance if m not in basis]
    samples = box.samples()
    g = np.array([s[0] for s in samples])
    e = np.array([s[1] for s in samples])
    design = np.column_stack([g ** a * e ** b for a, b in columns])
    scale = np.max(np.abs(design), axis=0)
    if np.any(scale == 0):
        raise IllConditionedFit(f"monomial vanishes on every sample: {columns[int(np.argmin(scale))]}")
    scaled = design / scale
    condition = float(np.linalg.cond(scaled))
    logger.debug(f"fit {code_name or 'evaluator'}: {len(samples)} samples, condition {condition:.3e}")
    if condition > CONDITION_LIMIT:
        raise IllConditionedFit(f"design matrix condition number {condition:.3e} exceeds {CONDITION_LIMIT:.0e}")

    target = 1.0 - _evaluate_samples(evaluator, samples, threads)
    solution, *_ = np.linalg.lstsq(scaled, target, rcond=None)
    coefficients = solution / scale
    residual = float(np.linalg.norm(design @ coefficients - target))
    return ExpansionReport(
        code_name=code_name,
        coefficients={monomial_name(m): float(c) for m, c in zip(columns[:len(basis)], coefficients)},
        residual=residual,
        condition=condition,
    )


# Analytic leading coefficients of 1 - F for each code's recovery scheme
EXPECTED_COEFFICIENTS: Dict[str, Dict[str, float]] = {
    "five_qubit": {"gamma^2": 2.5, "eps^2": 10.0, "eps*gamma": 10.0},
    "css_seven": {"gamma^2": 21 / 4, "eps^2": 21.0, "eps*gamma": 21.0},
    "eight_concat": {"gamma^2": 2.0, "eps^2": 28.0, "eps*gamma": 28.0},
    "six_degenerate": {"gamma^2": 2.0, "eps^2": 15.0, "eps*gamma": 15.0},
    "shor_nine": {"gamma^2": 0.0, "gamma^3": 1.5, "eps^2": 36.0, "eps*gamma": 36.0},
    "nonadd_11_2_3": {"gamma^2": 55 / 4, "eps^2": 55.0, "eps*gamma": 55.0},
    "nonadd_9_12_3": {"gamma^2": 9.0, "eps^2": 36.0, "eps*gamma": 36.0},
    "nonadd_6_5": {"gamma^2": 21 / 5},
    "nonadd_8_12": {"gamma^2": 15 / 2},
    "gottesman_833": {"gamma^2": 7.0},
    "leung_four": {"gamma^2": 2.0},
}

VERIFIED_CODES = [name for name in EXPECTED_COEFFICIENTS if name != "leung_four"]


def scheme_evaluator(code_name: str) -> Evaluator:
    """F(gamma, epsilon) of a registered code under its default recovery scheme."""
    code = build_code(code_name)
    correctable = default_correctable_set(code)
    return lambda gamma, eps: scheme_fidelity(code, correctable, GadParams(gamma, eps)).value


def verify_coefficients(
    code_name: str,
    sample_box: Optional[SampleBox] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    threads: int = 1,
) -> ExpansionReport:
    """
    Fit a code's leading coefficients and compare them to the analytic table.

    Gamma-only coefficients come from the epsilon = 0 ray with basis
    gamma^2..gamma^5; mixed ones from rays epsilon = rho * gamma with basis
    {gamma^2, eps^2, eps*gamma} plus cubic nuisance terms.

    Args:
        code_name: Registered code with an analytic estimate
        sample_box: Gamma range and sample count (rays are set here)
        tolerance: Relative tolerance per coefficient
        threads: Parallel evaluator calls

    Returns:
        ExpansionReport with pass/fail per coefficient
    """
    if code_name not in EXPECTED_COEFFICIENTS:
        raise ValueError(f"Unknown code: {code_name}")
    expected = EXPECTED_COEFFICIENTS[code_name]
    box = sample_box or SampleBox()
    evaluator = scheme_evaluator(code_name)

    gamma_fit = fit_expansion(
        evaluator, GAMMA_BASIS, SampleBox(box.gamma_min, box.gamma_max, box.points, (0.0,)),
        code_name=code_name, threads=threads,
    )
    coefficients = {k: v for k, v in gamma_fit.coefficients.items() if k in expected}
    residual, condition = gamma_fit.residual, gamma_fit.condition

    if "eps^2" in expected:
        mixed = fit_expansion(
            evaluator, MIXED_BASIS, SampleBox(box.gamma_min, box.gamma_max, box.points, MIXED_RAYS),
            nuisance=CUBIC_NUISANCE, code_name=code_name, threads=threads,
        )
        coefficients["eps^2"] = mixed.coefficients["eps^2"]
        coefficients["eps*gamma"] = mixed.coefficients["eps*gamma"]
        residual = max(residual, mixed.residual)
        condition = max(condition, mixed.condition)

    report = ExpansionReport(code_name, coefficients, dict(expected), residual, condition, tolerance)
    logger.info(f"Coefficient check for {code_name}: {'PASS' if report.passed else 'FAIL'} {coefficients}")
    return report


def second_difference_coefficient(evaluator: Evaluator, h: float = 1e-3) -> float:
    """
    Gamma^2 coefficient of 1 - F(gamma, 0) by Richardson extrapolation.

    With q(x) = (1 - F(x)) / x^2 = a + b x + c x^2 + ..., the combination
    (8 q(h) - 6 q(2h) + q(4h)) / 3 cancels the b and c terms.
    """
    q = [(1.0 - evaluator(x, 0.0)) / x ** 2 for x in (h, 2 * h, 4 * h)]
    return (8 * q[0] - 6 * q[1] + q[2]) / 3


@dataclass(frozen=True)
class ReferencePolynomial:
    """Exact polynomial F(x) = sum_k c_k x^k with rational coefficients, ascending."""
    code_name: str
    variable: str
    coefficients: Tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


def _fractions(*values: str) -> Tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


# Taylor series of the seven-qubit closed form through gamma^9
CSS_SEVEN_TAYLOR = ReferencePolynomial(
    "css_seven", "gamma",
    _fractions("1", "0", "-21/4", "35/4", "-63/8", "609/128", "-315/256", "-51/256", "-63/256", "1701/8192"),
)

# Nine-qubit scheme accounting over 136 operators, 27 of them self-overlapping; exact in gamma at epsilon = 0
SHOR_NINE_POLYNOMIAL = ReferencePolynomial(
    "shor_nine", "gamma",
    _fractions("1", "0", "0", "-3/2", "-135/8", "513/8", "-201/2", "675/8", "-297/8", "53/8"),
)


def evaluate_reference_polynomial(poly: ReferencePolynomial, x: float) -> float:
    """Horner evaluation on [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{poly.variable} must lie in [0, 1], got {x}")
    value = 0.0
    for c in reversed(poly.coefficients):
        value = value * x + float(c)
    return value


def css_seven_closed_form(gamma: float) -> float:
    """
    Non-truncated seven-qubit fidelity at epsilon = 0.

    The weight-0 term and the seven weight-1 damping terms, each a squared
    sum of the two codeword image norms.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    u = 1.0 - gamma
    identity = 0.25 * (math.sqrt((1 + 7 * u ** 4) / 8) + math.sqrt((u ** 7 + 7 * u ** 3) / 8)) ** 2
    damping = 1.75 * (math.sqrt(4 * gamma * u ** 3 / 8) + math.sqrt((gamma * u ** 6 + 3 * gamma * u ** 2) / 8)) ** 2
    return identity + damping


@dataclass
class PolynomialCheck:
    """Fidelity values against an exact expression on a gamma grid."""
    name: str
    gammas: List[float]
    numeric: List[float]
    reference: List[float]
    tolerances: List[float]

    @property
    def differences(self) -> List[float]:
        return [a - b for a, b in zip(self.numeric, self.reference)]

    @property
    def max_difference(self) -> float:
        return max(abs(d) for d in self.differences)

    @property
    def signed_max_difference(self) -> float:
        """numeric - reference where the gap is widest."""
        return max(self.differences, key=abs)

    @property
    def first_failure(self) -> Optional[float]:
        """Smallest gamma whose gap exceeds its tolerance."""
        for g, d, t in zip(self.gammas, self.differences, self.tolerances):
            if abs(d) > t:
                return g
        return None

    @property
    def passed(self) -> bool:
        return self.first_failure is None


def polynomial_checks(
    code_name: str,
    points: int = 21,
    tolerance: float = POLYNOMIAL_LIMIT,
    gamma_max: Optional[float] = None,
    threads: int = 1,
) -> List[PolynomialCheck]:
    """
    Compare a code's fidelity at epsilon = 0 with its exact expressions.

    The exact check sums the full-weight entanglement fidelity of the built
    recovery (css_seven: closed form on [0, 0.2]; shor_nine: degree-9
    polynomial on [0, 0.15]). The scheme check runs the accounting estimate
    against the same expression and must agree to rounding. css_seven also
    compares its closed form with the Taylor series (within 10 gamma^10).

    Args:
        code_name: Code with a reference expression
        points: Grid size
        tolerance: Allowed |exact - reference|
        gamma_max: Upper end of the grid; defaults to the code's range
        threads: Worker threads for the exact sums

    Returns:
        Checks in the order exact, scheme, Taylor; empty for other codes
    """
    if code_name not in POLYNOMIAL_RANGES:
        return []
    gammas = [float(g) for g in np.linspace(0.0, gamma_max or POLYNOMIAL_RANGES[code_name], points)]
    if code_name == "css_seven":
        reference = [css_seven_closed_form(g) for g in gammas]
        label = "closed form"
    else:
        reference = [evaluate_reference_polynomial(SHOR_NINE_POLYNOMIAL, g) for g in gammas]
        label = "polynomial"

    code = build_code(code_name)
    rows = run_sweep(code, SweepGrid(gammas), max_weight="full", estimator="exact", threads=threads)
    evaluator = scheme_evaluator(code_name)
    checks = [
        PolynomialCheck(f"{code_name} exact vs {label}", gammas, [r.fidelity for r in rows], reference, [tolerance] * points),
        PolynomialCheck(
            f"{code_name} scheme vs {label}", gammas, [evaluator(g, 0.0) for g in gammas], reference,
            [SCHEME_CONSISTENCY_TOL] * points,
        ),
    ]
    if code_name == "css_seven":
        taylor = [evaluate_reference_polynomial(CSS_SEVEN_TAYLOR, g) for g in gammas]
        checks.append(PolynomialCheck(
            "css_seven closed form vs Taylor series", gammas, reference, taylor,
            [10 * g ** 10 + 1e-14 for g in gammas],
        ))
    for check in checks:
        if not check.passed:
            logger.warning(
                f"{check.name}: gap {check.signed_max_difference:+.3e} exceeds "
                f"{max(check.tolerances):.1e} from gamma={check.first_failure:g}"
            )
    return checks
