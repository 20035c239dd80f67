"""
Fixed numerical tolerances for model checking, certification and reporting
These are part of the data contract and are deliberately not configurable
"""

from enum import Enum
from typing import Dict


class ToleranceKind(Enum):
    """How a reported number should be compared against its reference"""
    EXACT = "exact"            # enumeration / closed form
    STATISTICAL = "statistical"  # Monte Carlo, compared with k standard errors
    DISCRETIZATION = "discretization"  # belief-grid slack


# Kernel rows and cost entries
ROW_SUM_TOLERANCE = 1e-12
BELIEF_SUM_TOLERANCE = 1e-12

# Singular values below this fraction of the largest one count as zero
RANK_RELATIVE_THRESHOLD = 1e-10

# Residual under which a Chebyshev fit counts as exact
OBSERVABILITY_RESIDUAL = 1e-9

# Agreement between independent exact computations
ENUMERATION_AGREEMENT = 1e-10

# Number of standard errors allowed between a Monte Carlo estimate and a bound
STANDARD_ERROR_MULTIPLIER = 3.0

# Output formatting
CSV_SIGNIFICANT_DIGITS = 17

CERTIFICATION_TOLERANCES: Dict[ToleranceKind, float] = {
    ToleranceKind.EXACT: ENUMERATION_AGREEMENT,
    ToleranceKind.STATISTICAL: STANDARD_ERROR_MULTIPLIER,
    ToleranceKind.DISCRETIZATION: 0.0,
}


def certification_margin(std_error: float, grid_slack: float = 0.0) -> float:
    """
    Allowed excess of a measured quantity over a theoretical bound

    Args:
        std_error: Standard error of the measurement (0 for exact values)
        grid_slack: Discretization slack of the solved policy, if any

    Returns:
        Margin combining the statistical, exact and discretization allowances
    """
    if std_error <= 0.0:
        return CERTIFICATION_TOLERANCES[ToleranceKind.EXACT] + grid_slack
    return STANDARD_ERROR_MULTIPLIER * std_error + grid_slack + ENUMERATION_AGREEMENT


def format_number(value: float) -> str:
    """Format a float with the fixed number of significant digits used in CSV output"""
    return format(value, f".{CSV_SIGNIFICANT_DIGITS}g")


__all__ = [
    'ToleranceKind',
    'ROW_SUM_TOLERANCE',
    'BELIEF_SUM_TOLERANCE',
    'RANK_RELATIVE_THRESHOLD',
    'OBSERVABILITY_RESIDUAL',
    'ENUMERATION_AGREEMENT',
    'STANDARD_ERROR_MULTIPLIER',
    'CSV_SIGNIFICANT_DIGITS',
    'CERTIFICATION_TOLERANCES',
    'certification_margin',
    'format_number',
]
