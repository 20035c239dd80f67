"""
Belief-MDP control under a mis-specified prior
Grid value iteration, cost evaluation of the strategic measure, the three-cost
decomposition of the mismatch gap and the robustness bound evaluators
"""
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from ..config import certification_margin, get_settings
from ..config.settings import Settings
from ..models.schemas import (
    AverageCostEstimate,
    CostDecomposition,
    CostEstimate,
    Criterion,
    Estimate,
    EstimationMethod,
    PriorIndependentBound,
    RobustnessReport,
)
from ..workers.partition_pool import Partition, combine_columns, run_partitions
from .contraction import contraction_report
from .errors import BoundDomainError, ConvergenceError
from .filter import DEFAULT_ENUMERATION_LIMIT, batch_measurement_update, batch_time_update, observation_tree
from .grid import BeliefGrid
from .logger import get_logger
from .metrics import tv_distance
from .model import BeliefLike, PomdpModel, as_probs, check_absolute_continuity
from .policies import ControlPolicy, PolicyState
from .simulation import Enumerate, Method, MonteCarlo, mean_and_se, method_name, simulate

logger = get_logger(__name__)


# =====================================================
# POLICIES ON THE BELIEF GRID
# =====================================================

@dataclass
class BeliefPolicy:
    """Greedy actions and values of the discretized belief-MDP, one per grid point"""
    grid: BeliefGrid
    actions: np.ndarray
    values: np.ndarray
    discount: float
    sweeps: int = 0
    residual: float = 0.0

    def action_at(self, belief: BeliefLike) -> int:
        return int(self.actions[self.grid.project(belief)])

    def value_at(self, belief: BeliefLike) -> float:
        return float(self.values[self.grid.project(belief)])


class BeliefFeedbackPolicy(ControlPolicy):
    """
    Separated policy u_t = action_at(pi_t) where pi_t is the filter started from the
    design prior. With design_prior = nu this is gamma^nu.
    """

    name = "belief_feedback"

    def __init__(self, belief_policy: BeliefPolicy, design_prior: BeliefLike):
        self.belief_policy = belief_policy
        self.design_prior = as_probs(design_prior, belief_policy.grid.num_states)

    def start(self, model: PomdpModel, num_paths: int) -> PolicyState:
        return PolicyState.empty(num_paths, belief=np.tile(self.design_prior, (num_paths, 1)))

    def act(self, model, state, t, observations):
        filters, likelihood = batch_measurement_update(model.observation_array, state.belief, observations)
        state.impossible |= likelihood <= 0.0
        actions = self.belief_policy.actions[self.belief_policy.grid.project_many(filters)].astype(np.int64)
        state.belief = batch_time_update(model.transition_array, filters, actions)
        state.previous = actions
        return actions


def _belief_dynamics(model: PomdpModel, grid: BeliefGrid):
    """P(y | b, u) and the grid index of the projected posterior for every (u, b, y)"""
    points = grid.points
    q, t_kernel = model.observation_array, model.transition_array
    num_u, num_y = model.num_actions, model.num_obs
    likelihood = np.empty((num_u, len(grid), num_y))
    successor = np.zeros((num_u, len(grid), num_y), dtype=np.int64)
    for u in range(num_u):
        predictors = points @ t_kernel[u]
        predictors /= predictors.sum(axis=1, keepdims=True)
        for y in range(num_y):
            posteriors, lik = batch_measurement_update(q, predictors, np.full(len(grid), y))
            likelihood[u, :, y] = lik
            successor[u, :, y] = grid.project_many(posteriors)
    return likelihood, successor


def value_iteration_discounted(model: PomdpModel, grid: BeliefGrid, tolerance: Optional[float] = None,
                               max_iters: Optional[int] = None,
                               discount: Optional[float] = None) -> BeliefPolicy:
    """
    Value iteration V(b) = min_u [c_b(u) + beta sum_y P(y|b,u) V(project(update(b,u,y)))].

    Stops when the sup-norm change drops below tolerance. Greedy actions use the
    lowest index among ties; observations with P(y|b,u) = 0 contribute nothing.

    Args:
        model: POMDP
        grid: belief grid the value function lives on
        tolerance: stopping threshold (default from settings)
        max_iters: sweep limit (default from settings)
        discount: overrides the model's discount factor

    Raises:
        ConvergenceError: max_iters sweeps without reaching tolerance
    """
    settings = get_settings()
    tolerance = tolerance if tolerance is not None else settings.vi_tolerance
    max_iters = max_iters if max_iters is not None else settings.vi_max_iters
    beta = model.discount if discount is None else float(discount)
    if not 0.0 <= beta < 1.0:
        raise ValueError("discount must lie in [0, 1)")
    if grid.num_states != model.num_states:
        raise ValueError("grid and model disagree on the number of states")

    likelihood, successor = _belief_dynamics(model, grid)
    stage = (grid.points @ model.cost_array).T
    values = np.zeros(len(grid))
    residual = math.inf
    for sweep in range(1, max_iters + 1):
        q_values = stage + beta * np.einsum("uny,uny->un", likelihood, values[successor])
        updated = q_values.min(axis=0)
        residual = float(np.max(np.abs(updated - values)))
        values = updated
        if residual < tolerance:
            break
    else:
        raise ConvergenceError(max_iters, residual, tolerance)

    logger.info("value_iteration_converged", grid=grid.resolution, points=len(grid), sweeps=sweep,
                residual=residual, discount=beta)
    return BeliefPolicy(grid=grid, actions=q_values.argmin(axis=0), values=values, discount=beta,
                        sweeps=sweep, residual=residual)


def solve_policy(model: PomdpModel, resolution: int, discount: Optional[float] = None,
                 settings: Optional[Settings] = None) -> BeliefPolicy:
    """Value iteration on a fresh grid of the given resolution"""
    settings = settings or get_settings()
    return value_iteration_discounted(model, BeliefGrid(resolution, model.num_states),
                                      tolerance=settings.vi_tolerance, max_iters=settings.vi_max_iters,
                                      discount=discount)


def prior_values(model: PomdpModel, policy: BeliefPolicy, priors: np.ndarray) -> np.ndarray:
    """J*(prior) = sum_y P(y | prior) V(project(posterior)) for each row of priors (predictors)"""
    priors = np.atleast_2d(priors)
    q = model.observation_array
    total = np.zeros(priors.shape[0])
    for y in range(model.num_obs):
        posteriors, lik = batch_measurement_update(q, priors, np.full(priors.shape[0], y))
        total += np.where(lik > 0.0, lik * policy.values[policy.grid.project_many(posteriors)], 0.0)
    return total


def prior_value(model: PomdpModel, policy: BeliefPolicy, prior: BeliefLike) -> float:
    return float(prior_values(model, policy, as_probs(prior, model.num_states)[None, :])[0])


def grid_slack(model: PomdpModel, coarse: int, fine: int, discount: Optional[float] = None) -> float:
    """max over coarse grid points of |V_coarse - V_fine|"""
    return value_disagreement(solve_policy(model, coarse, discount), solve_policy(model, fine, discount))


def value_disagreement(coarse: BeliefPolicy, fine: BeliefPolicy) -> float:
    fine_values = fine.values[fine.grid.project_many(coarse.grid.points)]
    return float(np.max(np.abs(coarse.values - fine_values)))


# =====================================================
# COST EVALUATION
# =====================================================

def truncation_horizon(discount: float, tolerance_factor: float) -> int:
    """Smallest H with beta^H <= tolerance_factor (at least one stage)"""
    if discount == 0.0:
        return 1
    return max(1, math.ceil(math.log(tolerance_factor) / math.log(discount)))


@dataclass
class _PathStats:
    """Per-path (or, when enumerated, expected) cost statistics of one run"""
    total: np.ndarray
    half: np.ndarray
    partial: np.ndarray
    jstar: Optional[np.ndarray]

    @staticmethod
    def concat(parts: List["_PathStats"]) -> "_PathStats":
        return _PathStats(
            total=combine_columns([p.total for p in parts]),
            half=combine_columns([p.half for p in parts]),
            partial=combine_columns([p.partial for p in parts]),
            jstar=None if parts[0].jstar is None else combine_columns([p.jstar for p in parts]),
        )


def _simulated_stats(model, mu, policy, stages, rng, size, discount, checkpoints, value_policy) -> _PathStats:
    total, half = np.zeros(size), np.zeros(size)
    partial = np.zeros((size, checkpoints + 1))
    jstar = np.zeros((size, checkpoints + 1)) if value_policy is not None else None
    tracked = [mu] if value_policy is not None else []
    for record in simulate(model, mu, policy, stages - 1, rng, size, tracked=tracked):
        t = record.t
        if t <= checkpoints:
            partial[:, t] = total
            if jstar is not None:
                jstar[:, t] = prior_values(model, value_policy, record.tracked_predictors[0])
        weighted = discount ** t * record.costs
        total += weighted
        if t < stages // 2:
            half += weighted
    return _PathStats(total=total, half=half, partial=partial, jstar=jstar)


def _enumerated_stats(model, mu, policy, stages, limit, discount, checkpoints, value_policy) -> _PathStats:
    cost = model.cost_array
    total = half = 0.0
    partial = np.zeros((1, checkpoints + 1))
    jstar = np.zeros((1, checkpoints + 1)) if value_policy is not None else None
    for layer in observation_tree(model, mu, policy, stages - 1, limit=limit):
        t = layer.t
        if t <= checkpoints:
            partial[0, t] = total
            if jstar is not None:
                jstar[0, t] = layer.probabilities @ prior_values(model, value_policy, layer.predictors)
        expected = layer.probabilities @ (layer.filters * cost[:, layer.actions].T).sum(axis=1)
        weighted = discount ** t * expected
        total += weighted
        if t < stages // 2:
            half += weighted
    return _PathStats(total=np.array([total]), half=np.array([half]), partial=partial, jstar=jstar)


def _run_stats(model: PomdpModel, mu: np.ndarray, policies: Tuple[ControlPolicy, ...], stages: int,
               method: Method, discount: float, checkpoints: int = 0,
               value_policy: Optional[BeliefPolicy] = None) -> List[_PathStats]:
    """
    Cost statistics of each policy under P^{mu, policy}.

    Monte Carlo runs replay every partition's random stream for each policy, so the
    runs of different policies are paired path by path.
    """
    if checkpoints > stages - 1:
        raise ValueError(f"checkpoint {checkpoints} lies beyond the evaluated horizon {stages}")
    if isinstance(method, Enumerate):
        limit = method.limit or DEFAULT_ENUMERATION_LIMIT
        return [_enumerated_stats(model, mu, p, stages, limit, discount, checkpoints, value_policy)
                for p in policies]

    def task(partition: Partition) -> List[_PathStats]:
        return [_simulated_stats(model, mu, p, stages, partition.generator(), partition.size, discount,
                                 checkpoints, value_policy) for p in policies]

    parts = run_partitions(method.samples, method.seed, task,
                           partition_size=method.partition_size, workers=method.workers)
    return [_PathStats.concat([part[i] for part in parts]) for i in range(len(policies))]


def _estimate(samples: np.ndarray, method: Method) -> Estimate:
    if isinstance(method, Enumerate):
        return Estimate(value=float(samples.mean()), method=EstimationMethod.ENUMERATE)
    mean, se = mean_and_se(samples)
    return Estimate(value=float(mean), std_error=float(se), samples=samples.shape[0],
                    method=EstimationMethod.MONTE_CARLO)


def _as_control(policy: Union[BeliefPolicy, ControlPolicy], design_prior: np.ndarray) -> ControlPolicy:
    if isinstance(policy, BeliefPolicy):
        return BeliefFeedbackPolicy(policy, design_prior)
    return policy


def evaluate_cost_discounted(model: PomdpModel, mu: BeliefLike, nu: BeliefLike,
                             policy: Union[BeliefPolicy, ControlPolicy], method: Method,
                             horizon: Optional[int] = None,
                             tolerance_factor: Optional[float] = None) -> CostEstimate:
    """
    Truncated discounted cost J_beta(mu, gamma^nu) = E sum_{t<H} beta^t c(X_t, U_t).

    Nature starts from mu; a BeliefPolicy is driven by the filter started from nu.
    Without an explicit horizon, H is the smallest value with beta^H <= tolerance_factor,
    and the neglected tail beta^H ||c||/(1-beta) is reported as truncation_bound.
    """
    check_absolute_continuity(mu, nu)
    mu_p, nu_p = as_probs(mu, model.num_states), as_probs(nu, model.num_states)
    factor = tolerance_factor or get_settings().truncation_tolerance_factor
    stages = horizon if horizon is not None else truncation_horizon(model.discount, factor)
    if stages < 1:
        raise ValueError("horizon must be >= 1")

    [stats] = _run_stats(model, mu_p, (_as_control(policy, nu_p),), stages, method, model.discount)
    est = _estimate(stats.total, method)
    return CostEstimate(**est.model_dump(), horizon=stages,
                        truncation_bound=model.discount ** stages * model.trivial_bound)


def evaluate_cost_average(model: PomdpModel, mu: BeliefLike, nu: BeliefLike,
                          policy: Union[BeliefPolicy, ControlPolicy], horizon: int,
                          method: Method) -> AverageCostEstimate:
    """
    (1/T) E sum_{t<T} c(X_t, U_t) with the first-half average as a convergence diagnostic.
    """
    check_absolute_continuity(mu, nu)
    if horizon < 2:
        raise ValueError("average-cost horizon must be >= 2")
    mu_p, nu_p = as_probs(mu, model.num_states), as_probs(nu, model.num_states)

    [stats] = _run_stats(model, mu_p, (_as_control(policy, nu_p),), horizon, method, 1.0)
    est = _estimate(stats.total / horizon, method)
    half_value = float(np.mean(stats.half / (horizon // 2)))
    return AverageCostEstimate(**est.model_dump(), horizon=horizon, half_horizon_value=half_value,
                               convergence_gap=abs(est.value - half_value))


# =====================================================
# BOUNDS
# =====================================================

def bound_continuity_discounted(model: PomdpModel, mu: BeliefLike, nu: BeliefLike) -> float:
    """2 ||c|| / (1 - beta) * ||mu - nu||_TV"""
    return 2.0 * model.trivial_bound * tv_distance(as_probs(mu), as_probs(nu))


def bound_continuity_average(model: PomdpModel, mu: BeliefLike, nu: BeliefLike) -> float:
    """2 ||c|| * ||mu - nu||_TV"""
    return 2.0 * model.cost_sup * tv_distance(as_probs(mu), as_probs(nu))


def span_seminorm(model: PomdpModel, criterion: Criterion, prior_grid=None,
                  policy: Optional[BeliefPolicy] = None, settings: Optional[Settings] = None) -> float:
    """
    max - min of the optimal cost over a finite set of priors.

    This is a lower estimate of the span over all priors. For the average criterion the
    vanishing-discount values are rescaled by (1 - beta) to per-stage costs.

    Args:
        model: POMDP
        criterion: discounted or average
        prior_grid: BeliefGrid or array of priors; defaults to the solver grid
        policy: solved values to read J* from; solved on the settings grid if omitted
    """
    settings = settings or get_settings()
    if policy is None:
        discount = settings.beta_average if criterion == Criterion.AVERAGE else None
        policy = solve_policy(model, settings.grid_resolution, discount, settings)
    if prior_grid is None:
        priors = policy.grid.points
    elif isinstance(prior_grid, BeliefGrid):
        priors = prior_grid.points
    else:
        priors = np.atleast_2d(np.asarray(prior_grid, dtype=float))

    values = prior_values(model, policy, priors)
    span = float(values.max() - values.min())
    if criterion == Criterion.AVERAGE:
        span *= 1.0 - policy.discount
    return span


def _f(n, alpha: float, beta: float, rho: float):
    return beta ** n * (rho - 4.0 * alpha ** n)


def bound_prior_independent(alpha: float, beta: float, c_inf: float, span: float,
                            n_max: int = 200) -> PriorIndependentBound:
    """
    Discounted robustness bound (||c||/(1-beta)) (1 - max f(n)) with f(n) = beta^n (rho - 4 alpha^n).

    rho = 1 - span (1-beta)/||c||. The maximiser comes from the closed form
    n* = ln((rho/4) ln(beta)/(ln(alpha)+ln(beta))) / ln(alpha) when it is defined, and from
    a search over n = 0..n_max otherwise. When f is negative at the chosen n the bound is
    clamped to ||c||/(1-beta) and flagged.

    Raises:
        BoundDomainError: alpha outside [0, 1), beta outside (0, 1), negative cost or span
    """
    if not 0.0 <= alpha < 1.0:
        raise BoundDomainError("alpha", alpha, "[0, 1)")
    if not 0.0 < beta < 1.0:
        raise BoundDomainError("beta", beta, "(0, 1)")
    if c_inf < 0.0:
        raise BoundDomainError("c_inf", c_inf, "[0, inf)")
    if span < 0.0:
        raise BoundDomainError("span", span, "[0, inf)")

    trivial = c_inf / (1.0 - beta)
    if trivial == 0.0:
        return PriorIndependentBound(rho=1.0, n_star=None, n_used=0, f_value=0.0, bound=0.0,
                                     clamped=False, method="search")
    rho = (trivial - min(span, trivial)) / trivial

    n_star = None
    if alpha > 0.0 and rho > 0.0:
        argument = (rho / 4.0) * (math.log(beta) / (math.log(alpha) + math.log(beta)))
        if argument > 0.0:
            n_star = math.log(argument) / math.log(alpha)

    if n_star is not None:
        candidates = sorted({max(0, math.floor(n_star)), max(0, math.ceil(n_star))})
        n_used = max(candidates, key=lambda n: (_f(n, alpha, beta, rho), -n))
        method = "closed_form"
    else:
        grid = np.arange(n_max + 1)
        values = _f(grid.astype(float), alpha, beta, rho)
        # the least negative f is approached from the right; argmax picks the first maximiser
        n_used = int(np.argmax(values))
        method = "search"

    f_value = float(_f(n_used, alpha, beta, rho))
    clamped = f_value < 0.0
    bound = trivial if clamped else trivial * (1.0 - f_value)
    logger.debug("prior_independent_bound", alpha=alpha, beta=beta, rho=rho, n_star=n_star,
                 n_used=n_used, bound=bound, clamped=clamped)
    return PriorIndependentBound(rho=rho, n_star=n_star, n_used=n_used, f_value=f_value, bound=bound,
                                 clamped=clamped, method=method)


def bound_at_step(alpha: float, beta: float, c_inf: float, span: float, n: int) -> float:
    """
    Finite-n robustness bound ||c||(1-beta^n)/(1-beta) + beta^n span + 4||c||/(1-beta) (alpha beta)^n.

    Equals (||c||/(1-beta)) (1 - f(n)); its minimum over n is the unclamped prior-independent bound.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    trivial = c_inf / (1.0 - beta)
    return (c_inf * (1.0 - beta ** n) / (1.0 - beta) + beta ** n * span
            + 4.0 * trivial * (alpha * beta) ** n)


# =====================================================
# ROBUSTNESS EXPERIMENTS
# =====================================================

@dataclass(frozen=True)
class RobustnessSettings:
    """Solver and evaluation settings of a robustness experiment"""
    grid_resolution: int = 40
    slack_resolution: int = 80
    method: Method = field(default_factory=lambda: MonteCarlo(samples=100_000, seed=0))
    horizon: Optional[int] = None
    average_horizon: int = 2000
    beta_average: float = 0.999
    decomposition_steps: Optional[int] = 5
    truncation_tolerance_factor: float = 1e-6

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "RobustnessSettings":
        settings = settings or get_settings()
        base = cls(
            grid_resolution=settings.grid_resolution,
            slack_resolution=settings.slack_resolution,
            method=MonteCarlo(samples=settings.default_samples, seed=settings.default_seed,
                              partition_size=settings.mc_partition_size, workers=settings.mc_workers),
            average_horizon=settings.average_horizon,
            beta_average=settings.beta_average,
            decomposition_steps=settings.decomposition_steps,
            truncation_tolerance_factor=settings.truncation_tolerance_factor,
        )
        return replace(base, **overrides)


def _decompose(stats_a: _PathStats, stats_b: _PathStats, beta: float, method: Method) -> List[CostDecomposition]:
    series = []
    total = _estimate(stats_a.total - stats_b.total, method)
    for n in range(stats_a.partial.shape[1]):
        weight = beta ** n
        series.append(CostDecomposition(
            n=n,
            transient=_estimate(stats_a.partial[:, n] - stats_b.partial[:, n], method),
            strategic=_estimate(weight * (stats_a.jstar[:, n] - stats_b.jstar[:, n]), method),
            approximation=_estimate(stats_a.total - stats_a.partial[:, n] - weight * stats_a.jstar[:, n],
                                    method),
            total=total,
        ))
    return series


def cost_decomposition_series(model: PomdpModel, mu: BeliefLike, nu: BeliefLike, n_max: int,
                              method: Method, policy: Optional[BeliefPolicy] = None,
                              horizon: Optional[int] = None,
                              settings: Optional[Settings] = None) -> List[CostDecomposition]:
    """
    Transient, strategic-measure and approximation costs for n = 0..n_max.

    Run A applies gamma^nu and run B applies gamma^mu to data generated from mu, on
    paired random streams. With partial_n the discounted cost of the first n stages
    and J*(pi^mu_{n-}) read from the grid values:
        transient     = E_A partial_n - E_B partial_n
        strategic     = beta^n (E_A J*(pi^mu_{n-}) - E_B J*(pi^mu_{n-}))
        approximation = E_A (cost from n on) - beta^n E_A J*(pi^mu_{n-})
    """
    check_absolute_continuity(mu, nu)
    settings = settings or get_settings()
    mu_p, nu_p = as_probs(mu, model.num_states), as_probs(nu, model.num_states)
    policy = policy or solve_policy(model, settings.grid_resolution, settings=settings)
    stages = horizon or truncation_horizon(model.discount, settings.truncation_tolerance_factor)
    stats_a, stats_b = _run_stats(
        model, mu_p, (BeliefFeedbackPolicy(policy, nu_p), BeliefFeedbackPolicy(policy, mu_p)), stages,
        method, model.discount, checkpoints=n_max, value_policy=policy,
    )
    return _decompose(stats_a, stats_b, model.discount, method)


def cost_decomposition(model: PomdpModel, mu: BeliefLike, nu: BeliefLike, n: int, method: Method,
                       policy: Optional[BeliefPolicy] = None, horizon: Optional[int] = None,
                       settings: Optional[Settings] = None) -> CostDecomposition:
    """The three-cost decomposition at a single step n"""
    return cost_decomposition_series(model, mu, nu, n, method, policy, horizon, settings)[n]


def robustness_gap(model: PomdpModel, mu: BeliefLike, nu: BeliefLike,
                   criterion: Criterion = Criterion.DISCOUNTED,
                   settings: Optional[RobustnessSettings] = None) -> RobustnessReport:
    """
    Measure J(mu, gamma^nu) - J(mu, gamma^mu) and evaluate every applicable bound.

    Both policies come from one grid solve (the map from filters to actions does not
    depend on the prior; only the filter it is fed with does). The two costs are
    evaluated on paired random streams. Grid slack is the value disagreement with a
    finer grid; for the average criterion it also includes |gap_T - gap_{T/2}|.

    Raises:
        AbsoluteContinuityError: mu is not absolutely continuous w.r.t. nu
    """
    check_absolute_continuity(mu, nu)
    settings = settings or RobustnessSettings.from_settings()
    method = settings.method
    mu_p, nu_p = as_probs(mu, model.num_states), as_probs(nu, model.num_states)
    average = criterion == Criterion.AVERAGE
    solve_discount = settings.beta_average if average else model.discount
    scale = (1.0 - solve_discount) if average else 1.0

    policy = solve_policy(model, settings.grid_resolution, solve_discount)
    slack = 0.0
    if settings.slack_resolution:
        fine = solve_policy(model, settings.slack_resolution, solve_discount)
        slack = scale * value_disagreement(policy, fine)

    mismatched, matched = BeliefFeedbackPolicy(policy, nu_p), BeliefFeedbackPolicy(policy, mu_p)
    alpha = contraction_report(model).alpha
    truncation = 0.0
    series: List[CostDecomposition] = []

    if average:
        stages = settings.average_horizon
        stats_a, stats_b = _run_stats(model, mu_p, (mismatched, matched), stages, method, 1.0)
        cost_a = _estimate(stats_a.total / stages, method)
        cost_b = _estimate(stats_b.total / stages, method)
        gap = _estimate((stats_a.total - stats_b.total) / stages, method)
        half_gap = float(np.mean((stats_a.half - stats_b.half) / (stages // 2)))
        slack += abs(gap.value - half_gap)
    else:
        stages = settings.horizon or truncation_horizon(model.discount, settings.truncation_tolerance_factor)
        steps = settings.decomposition_steps
        checkpoints = min(steps, stages - 1) if steps is not None else 0
        stats_a, stats_b = _run_stats(model, mu_p, (mismatched, matched), stages, method, model.discount,
                                      checkpoints=checkpoints,
                                      value_policy=policy if steps is not None else None)
        cost_a, cost_b = _estimate(stats_a.total, method), _estimate(stats_b.total, method)
        gap = _estimate(stats_a.total - stats_b.total, method)
        truncation = model.discount ** stages * model.trivial_bound
        if steps is not None:
            series = _decompose(stats_a, stats_b, model.discount, method)

    span = span_seminorm(model, criterion, policy=policy)
    prior_independent = None
    if not average and alpha < 1.0 and model.discount > 0.0:
        prior_independent = bound_prior_independent(alpha, model.discount, model.cost_sup, span)

    cont_disc = bound_continuity_discounted(model, mu_p, nu_p)
    cont_avg = bound_continuity_average(model, mu_p, nu_p)
    report = RobustnessReport(
        criterion=criterion,
        tv_priors=tv_distance(mu_p, nu_p),
        alpha=alpha,
        measured_gap=gap,
        cost_mismatched=cost_a,
        cost_matched=cost_b,
        continuity_bound=cont_avg if average else cont_disc,
        continuity_bound_discounted=cont_disc,
        continuity_bound_average=cont_avg,
        prior_independent=prior_independent,
        span_estimate=span,
        grid_slack=slack,
        grid_resolution=settings.grid_resolution,
        slack_resolution=settings.slack_resolution,
        truncation_bound=truncation,
        decomposition=series[-1] if series else None,
        decomposition_series=series,
        tolerances={
            "measured_gap_std_error": gap.std_error,
            "certification_margin": certification_margin(gap.std_error, slack),
            "grid_slack": slack,
            "truncation_bound": truncation,
            "method": method_name(method).value,
        },
    )
    logger.info("robustness_gap", criterion=criterion.value, gap=gap.value, se=gap.std_error,
                continuity_bound=report.continuity_bound, span=span, slack=slack,
                prior_independent=report.prior_independent_bound)
    return report
