"""
One-step observability of the measurement channel
On a finite space the functions Qg span the column space of Q, so observability is a rank test
"""
import numpy as np
from scipy.optimize import linprog

from ..config.tolerances import OBSERVABILITY_RESIDUAL, RANK_RELATIVE_THRESHOLD
from ..models.schemas import GApproximation, ObservabilityReport
from .logger import get_logger
from .model import PomdpModel

logger = get_logger(__name__)


def channel_rank(q: np.ndarray) -> tuple:
    """Numerical rank with threshold 1e-10 * largest singular value, and the singular values"""
    singular = np.linalg.svd(q, compute_uv=False)
    if singular.size == 0 or singular[0] == 0.0:
        return 0, singular
    return int(np.sum(singular > RANK_RELATIVE_THRESHOLD * singular[0])), singular


def _sup_residual(q: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    return float(np.max(np.abs(f - q @ g)))


def approximate_g(model: PomdpModel, f, epsilon: float = OBSERVABILITY_RESIDUAL) -> GApproximation:
    """
    Best sup-norm approximation of f by Qg.

    Solves the Chebyshev problem min t s.t. -t <= f[x] - (Qg)[x] <= t as a linear
    program, and keeps the least-squares solution instead when its residual is smaller
    (it is exact whenever Q has full row rank).

    Args:
        model: POMDP whose observation kernel Q is used
        f: function on the states
        epsilon: success threshold on the residual

    Returns:
        GApproximation with g, the residual ||f - Qg||_inf, residual < epsilon and ||g||_inf
    """
    q = model.observation_array
    f = np.asarray(f, dtype=float)
    if f.shape != (model.num_states,):
        raise ValueError(f"f must have {model.num_states} entries")
    if not np.all(np.isfinite(f)):
        raise ValueError("f must be finite")
    num_x, num_y = q.shape

    # variables [g_0..g_{Y-1}, t]
    objective = np.zeros(num_y + 1)
    objective[-1] = 1.0
    ones = np.ones((num_x, 1))
    a_ub = np.vstack([np.hstack([-q, -ones]), np.hstack([q, -ones])])
    b_ub = np.concatenate([-f, f])
    bounds = [(None, None)] * num_y + [(0.0, None)]
    result = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")

    candidates = []
    if result.status == 0:
        candidates.append(np.asarray(result.x[:num_y]))
    candidates.append(np.linalg.lstsq(q, f, rcond=None)[0])
    g = min(candidates, key=lambda c: _sup_residual(q, f, c))
    residual = _sup_residual(q, f, g)

    return GApproximation(
        g=tuple(float(v) for v in g),
        residual=residual,
        success=residual < epsilon,
        g_sup_norm=float(np.max(np.abs(g))) if g.size else 0.0,
    )


def observability_report(model: PomdpModel) -> ObservabilityReport:
    """Rank of Q, the observability verdict and the worst coordinate-indicator residual"""
    q = model.observation_array
    rank, singular = channel_rank(q)
    fits = [approximate_g(model, indicator) for indicator in np.eye(model.num_states)]
    report = ObservabilityReport(
        rank_Q=rank,
        observable=rank == model.num_states,
        worst_residual=max(fit.residual for fit in fits),
        worst_g_sup_norm=max(fit.g_sup_norm for fit in fits),
        singular_values=tuple(float(s) for s in singular),
    )
    if report.observable and report.worst_residual > OBSERVABILITY_RESIDUAL:
        logger.warning("observable_channel_with_residual", rank=rank, residual=report.worst_residual)
    return report
