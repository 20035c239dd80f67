"""
Dobrushin ergodicity coefficients and the filter contraction constant
alpha = (1 - min_u delta(T_u)) (2 - delta(Q)); alpha < 1 certifies exponential filter stability
"""
from typing import List

import numpy as np

from ..config.tolerances import ENUMERATION_AGREEMENT, ROW_SUM_TOLERANCE
from ..models.schemas import ContractionReport, StabilityTrace, StepRatio
from .errors import InvalidKernelError
from .logger import get_logger
from .model import BeliefLike, PomdpModel, check_absolute_continuity

logger = get_logger(__name__)


def _check_kernel(kernel: np.ndarray) -> np.ndarray:
    k = np.asarray(kernel, dtype=float)
    if k.ndim != 2 or k.shape[0] == 0 or k.shape[1] == 0:
        raise InvalidKernelError(f"kernel must be a non-empty 2-D matrix, got shape {k.shape}")
    if not np.all(np.isfinite(k)) or np.any(k < 0.0):
        raise InvalidKernelError("kernel entries must be finite and >= 0")
    sums = k.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE)
    if bad.size:
        raise InvalidKernelError(f"kernel row {int(bad[0])} sums to {sums[bad[0]]!r}, expected 1")
    return k


def dobrushin(kernel) -> float:
    """
    Dobrushin coefficient min_{x,x'} sum_z min(K[x,z], K[x',z]).

    On a finite space the infimum over partitions is attained by the singleton
    partition, so no partition search is needed. Single-row kernels return 1.

    Raises:
        InvalidKernelError: kernel is not row-stochastic
    """
    k = _check_kernel(kernel)
    if k.shape[0] == 1:
        return 1.0
    overlap = np.minimum(k[:, None, :], k[None, :, :]).sum(axis=2)
    off_diagonal = ~np.eye(k.shape[0], dtype=bool)
    return float(np.clip(overlap[off_diagonal].min(), 0.0, 1.0))


def contraction_report(model: PomdpModel) -> ContractionReport:
    """Dobrushin coefficients of every T_u and of Q, and the resulting alpha"""
    per_action = [dobrushin(matrix) for matrix in model.transition_array]
    delta_t = min(per_action)
    delta_q = dobrushin(model.observation_array)
    alpha = (1.0 - delta_t) * (2.0 - delta_q)
    report = ContractionReport(
        delta_T_per_action=per_action,
        delta_T_inf=delta_t,
        delta_Q=delta_q,
        alpha=alpha,
        exponentially_stable=alpha < 1.0,
    )
    logger.debug("contraction_report", alpha=alpha, delta_T_inf=delta_t, delta_Q=delta_q)
    return report


def envelope(alpha: float, n_max: int) -> List[float]:
    """2 alpha^n for n = 0..n_max, with alpha^0 = 1"""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return [2.0 * alpha ** n for n in range(n_max + 1)]


def contraction_envelope(model: PomdpModel, mu: BeliefLike, nu: BeliefLike, n_max: int) -> List[float]:
    """
    Upper envelope of E||pi^mu_n - pi^nu_n||_TV for n = 0..n_max.

    Raises:
        AbsoluteContinuityError: mu is not absolutely continuous w.r.t. nu
    """
    check_absolute_continuity(mu, nu)
    return envelope(contraction_report(model).alpha, n_max)


def per_step_ratios(trace: StabilityTrace, alpha: float,
                    tolerance: float = ENUMERATION_AGREEMENT) -> List[StepRatio]:
    """
    Compare consecutive expected TV values against alpha.

    A step passes when E_{n+1} <= alpha * E_n + tolerance; the ratio is None when E_n is 0.
    """
    ratios = []
    for current, following in zip(trace.rows, trace.rows[1:]):
        ratio = following.e_tv / current.e_tv if current.e_tv > 0.0 else None
        ratios.append(StepRatio(
            n=current.n,
            current=current.e_tv,
            following=following.e_tv,
            ratio=ratio,
            within_alpha=following.e_tv <= alpha * current.e_tv + tolerance,
        ))
    return ratios
