"""
Configuration module for the filter stability toolkit
"""

from .tolerances import (
    ToleranceKind,
    ROW_SUM_TOLERANCE,
    BELIEF_SUM_TOLERANCE,
    RANK_RELATIVE_THRESHOLD,
    OBSERVABILITY_RESIDUAL,
    ENUMERATION_AGREEMENT,
    STANDARD_ERROR_MULTIPLIER,
    CSV_SIGNIFICANT_DIGITS,
    certification_margin,
    format_number,
)
from .settings import Settings, get_settings

__all__ = [
    'Settings',
    'get_settings',
    'ToleranceKind',
    'ROW_SUM_TOLERANCE',
    'BELIEF_SUM_TOLERANCE',
    'RANK_RELATIVE_THRESHOLD',
    'OBSERVABILITY_RESIDUAL',
    'ENUMERATION_AGREEMENT',
    'STANDARD_ERROR_MULTIPLIER',
    'CSV_SIGNIFICANT_DIGITS',
    'certification_margin',
    'format_number',
]
