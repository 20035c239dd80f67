"""
Distances between beliefs and expected merging of mis-initialized filters
"""
from typing import Optional

import numpy as np
from scipy.special import rel_entr

from ..models.schemas import (
    DivergenceKind,
    DivergenceValue,
    Estimate,
    MartingaleCheck,
    StabilityRow,
    StabilityTrace,
    TraceForm,
)
from ..workers.partition_pool import Partition, combine_columns, run_partitions
from .contraction import contraction_report
from .filter import DEFAULT_ENUMERATION_LIMIT, all_sequences, observation_tree, state_path_joint
from .logger import get_logger
from .model import Belief, BeliefLike, PomdpModel, as_probs, check_absolute_continuity
from .policies import ControlPolicy
from .simulation import Enumerate, Method, MonteCarlo, mean_and_se, method_name, simulate

logger = get_logger(__name__)


def _vector(p) -> np.ndarray:
    return p.array if isinstance(p, Belief) else np.asarray(p, dtype=float)


def _pair(p, q):
    a, b = _vector(p), _vector(q)
    if a.shape != b.shape:
        raise ValueError(f"beliefs have different lengths: {a.shape[-1]} and {b.shape[-1]}")
    return a, b


def tv_distance(p: BeliefLike, q: BeliefLike) -> float:
    """||p - q||_TV = sum_x |p[x] - q[x]|, in [0, 2]"""
    a, b = _pair(p, q)
    return float(np.abs(a - b).sum())


def relative_entropy(p: BeliefLike, q: BeliefLike) -> float:
    """D(p || q) in nats; +inf when p puts mass where q has none"""
    a, b = _pair(p, q)
    return float(rel_entr(a, b).sum())


def default_test_functions(num_states: int) -> np.ndarray:
    """Coordinate indicators plus the state index rescaled to [-1, 1]"""
    index = np.zeros(num_states) if num_states == 1 else 2.0 * np.arange(num_states) / (num_states - 1) - 1.0
    return np.vstack([np.eye(num_states), index])


def weak_surrogate(p: BeliefLike, q: BeliefLike, test_functions: Optional[np.ndarray] = None) -> float:
    """
    max_f |sum_x f(x) (p[x] - q[x])| over a finite family of test functions.

    Raises:
        ValueError: a test function exceeds 1 in sup norm
    """
    a, b = _pair(p, q)
    family = default_test_functions(a.shape[0]) if test_functions is None else np.atleast_2d(
        np.asarray(test_functions, dtype=float))
    if family.shape[1] != a.shape[0]:
        raise ValueError("test functions must be defined on every state")
    if np.any(np.abs(family) > 1.0 + 1e-12):
        raise ValueError("test functions must be bounded by 1 in sup norm")
    return float(np.max(np.abs(family @ (a - b))))


def divergence(p: BeliefLike, q: BeliefLike, kind: DivergenceKind) -> DivergenceValue:
    """Evaluate one of the belief distances as a typed value"""
    if kind == DivergenceKind.TOTAL_VARIATION:
        value = tv_distance(p, q)
    elif kind == DivergenceKind.RELATIVE_ENTROPY:
        value = relative_entropy(p, q)
    else:
        value = weak_surrogate(p, q)
    return DivergenceValue(kind=kind, value=value)


def _row_stats(true_rows: np.ndarray, other_rows: np.ndarray):
    tv = np.abs(true_rows - other_rows).sum(axis=1)
    re = rel_entr(true_rows, other_rows).sum(axis=1)
    # rounding can leave tiny negative sums
    re = np.maximum(re, 0.0)
    return tv, re, np.sqrt(2.0 * re)


# =====================================================
# STABILITY TRACES
# =====================================================

def stability_trace(model: PomdpModel, mu: BeliefLike, nu: BeliefLike, policy: ControlPolicy,
                    horizon: int, method: Method, form: TraceForm = TraceForm.FILTER) -> StabilityTrace:
    """
    Per-step merging statistics of the filters started from mu and from nu.

    Data are generated under P^{mu, policy}. For every n = 0..horizon the trace holds
    E||pi^mu_n - pi^nu_n||_TV, its standard error, the envelope 2 alpha^n, the expected
    relative entropy and E sqrt(2 D). With form=PREDICTOR the one-step predictors are
    compared instead.

    Raises:
        AbsoluteContinuityError: mu is not absolutely continuous w.r.t. nu
        EnumerationLimitError: exact enumeration is too large
    """
    check_absolute_continuity(mu, nu)
    mu_p, nu_p = as_probs(mu, model.num_states), as_probs(nu, model.num_states)
    alpha = contraction_report(model).alpha
    use_predictor = form == TraceForm.PREDICTOR

    if isinstance(method, Enumerate):
        limit = method.limit or DEFAULT_ENUMERATION_LIMIT
        means, ses = [], []
        for layer in observation_tree(model, mu_p, policy, horizon, tracked=[nu_p], limit=limit):
            true_rows = layer.predictors if use_predictor else layer.filters
            other_rows = layer.tracked_predictors[0] if use_predictor else layer.tracked_filters[0]
            stats = _row_stats(true_rows, other_rows)
            means.append([float(layer.probabilities @ s) for s in stats])
            ses.append(0.0)
        means_arr = np.array(means)
        se_arr = np.array(ses)
        samples, seed = 0, None
    else:
        def task(partition: Partition) -> np.ndarray:
            out = np.empty((partition.size, horizon + 1, 3))
            for record in simulate(model, mu_p, policy, horizon, partition.generator(), partition.size,
                                   tracked=[mu_p, nu_p]):
                rows = record.tracked_predictors if use_predictor else record.tracked_filters
                out[:, record.t, :] = np.column_stack(_row_stats(rows[0], rows[1]))
            return out

        chunks = run_partitions(method.samples, method.seed, task,
                                partition_size=method.partition_size, workers=method.workers)
        mean, se = mean_and_se(combine_columns(chunks))
        means_arr, se_arr = mean, se[:, 0]
        samples, seed = method.samples, method.seed

    rows = [
        StabilityRow(
            n=n,
            e_tv=float(max(means_arr[n, 0], 0.0)),
            e_tv_se=float(se_arr[n]),
            envelope=2.0 * alpha ** n,
            relative_entropy=float(max(means_arr[n, 1], 0.0)),
            pinsker_rhs=float(max(means_arr[n, 2], 0.0)),
        )
        for n in range(horizon + 1)
    ]
    logger.info("stability_trace", method=method_name(method).value, horizon=horizon, alpha=alpha,
                form=form.value, final_e_tv=rows[-1].e_tv)
    return StabilityTrace(rows=rows, alpha=alpha, form=form, method=method_name(method),
                          samples=samples, seed=seed)


def expected_filter_tv(model: PomdpModel, mu: BeliefLike, nu: BeliefLike, policy: ControlPolicy,
                       n: int, method: Method) -> Estimate:
    """E^{mu, policy} ||pi^mu_n - pi^nu_n||_TV with its standard error (0 when enumerated)"""
    row = stability_trace(model, mu, nu, policy, n, method).row(n)
    return Estimate(
        value=row.e_tv,
        std_error=row.e_tv_se,
        samples=method.samples if isinstance(method, MonteCarlo) else 0,
        method=method_name(method),
    )


def tv_martingale_identity_check(model: PomdpModel, mu: BeliefLike, nu: BeliefLike,
                                 policy: ControlPolicy, n: int,
                                 limit: int = DEFAULT_ENUMERATION_LIMIT) -> MartingaleCheck:
    """
    Check E^mu||pi^mu_{n-} - pi^nu_{n-}||_TV against its martingale form under nu.

    The right side is E^nu |E^nu[h(X_0) | Y_0..Y_{n-1}, X_n] - E^nu[h(X_0) | Y_0..Y_{n-1}]|
    with h = dmu/dnu, computed from the joint law of (X_0, Y_0..Y_{n-1}, X_n) by summing
    over state paths. The left side comes from the forward recursion.
    """
    check_absolute_continuity(mu, nu)
    if n < 0:
        raise ValueError("n must be >= 0")
    mu_p, nu_p = as_probs(mu, model.num_states), as_probs(nu, model.num_states)

    lhs = 0.0
    for layer in observation_tree(model, mu_p, policy, n, tracked=[nu_p], limit=limit):
        if layer.t == n:
            tv = np.abs(layer.predictors - layer.tracked_predictors[0]).sum(axis=1)
            lhs = float(layer.probabilities @ tv)

    sequences = all_sequences(model.num_obs, n)
    actions = policy.actions_for(model, sequences)
    joint = state_path_joint(model, nu_p, sequences, actions, n, limit=limit)
    h = np.divide(mu_p, nu_p, out=np.zeros_like(mu_p), where=nu_p > 0.0)

    weighted = np.einsum("i,sij->sj", h, joint)
    marginal = joint.sum(axis=1)
    totals = marginal.sum(axis=1)
    cond_mean = np.divide(weighted.sum(axis=1), totals, out=np.zeros_like(totals), where=totals > 0.0)
    rhs = float(np.abs(weighted - cond_mean[:, None] * marginal).sum())

    return MartingaleCheck(n=n, lhs=lhs, rhs=rhs, gap=abs(lhs - rhs))
