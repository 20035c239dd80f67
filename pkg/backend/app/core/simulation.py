"""
Vectorized path simulation of the strategic measure
One call simulates a whole partition of paths from a caller-supplied generator
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..models.schemas import EstimationMethod
from .errors import ZeroLikelihoodError
from .filter import batch_measurement_update, batch_time_update
from .model import BeliefLike, PomdpModel, as_probs

if TYPE_CHECKING:
    from .policies import ControlPolicy


@dataclass
class StepRecord:
    """Everything that happened at time t on every path of the batch"""
    t: int
    states: np.ndarray
    observations: np.ndarray
    actions: np.ndarray
    costs: np.ndarray
    tracked_predictors: List[np.ndarray]
    tracked_filters: List[np.ndarray]


def sample_rows(cdf_rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row; the clip absorbs cumulative sums that end slightly below 1"""
    idx = (uniforms[:, None] >= cdf_rows).sum(axis=1)
    return np.minimum(idx, cdf_rows.shape[1] - 1)


def simulate(model: PomdpModel, true_prior: BeliefLike, policy: "ControlPolicy", horizon: int,
             rng: np.random.Generator, num_paths: int,
             tracked: Sequence[BeliefLike] = ()) -> Iterator[StepRecord]:
    """
    Simulate num_paths paths of P^{true_prior, policy} for t = 0..horizon.

    Uniform draws are consumed in a fixed order (X_0, then per step one for Y_t and
    one for X_{t+1}), independent of the policy. Two policies run from generators in
    the same state therefore share their random numbers.

    Args:
        model: POMDP
        true_prior: law of X_0
        policy: control policy, fed with the simulated observations
        horizon: last time index simulated
        rng: generator owned by this partition
        num_paths: batch size
        tracked: priors whose filters are carried along the same observations and actions

    Raises:
        ZeroLikelihoodError: a tracked filter or the policy meets an impossible observation
    """
    num_x = model.num_states
    q, t_kernel, cost = model.observation_array, model.transition_array, model.cost_array
    q_cdf = np.cumsum(q, axis=1)
    t_cdf = np.cumsum(t_kernel, axis=2)

    states = sample_rows(np.broadcast_to(np.cumsum(as_probs(true_prior, num_x)), (num_paths, num_x)),
                         rng.random(num_paths))
    tracked_predictors = [np.tile(as_probs(b, num_x), (num_paths, 1)) for b in tracked]
    policy_state = policy.start(model, num_paths)

    for t in range(horizon + 1):
        observations = sample_rows(q_cdf[states], rng.random(num_paths))
        tracked_filters = []
        for p in tracked_predictors:
            f, lik = batch_measurement_update(q, p, observations)
            if np.any(lik <= 0.0):
                raise ZeroLikelihoodError(t, int(observations[np.flatnonzero(lik <= 0.0)[0]]))
            tracked_filters.append(f)

        actions = policy.act(model, policy_state, t, observations)
        if np.any(policy_state.impossible):
            raise ZeroLikelihoodError(t, int(observations[np.flatnonzero(policy_state.impossible)[0]]))

        yield StepRecord(t=t, states=states, observations=observations, actions=actions,
                         costs=cost[states, actions], tracked_predictors=tracked_predictors,
                         tracked_filters=tracked_filters)

        next_uniforms = rng.random(num_paths)
        if t < horizon:
            states = sample_rows(t_cdf[actions, states], next_uniforms)
            tracked_predictors = [batch_time_update(t_kernel, f, actions) for f in tracked_filters]


# =====================================================
# ESTIMATION METHODS
# =====================================================

@dataclass(frozen=True)
class Enumerate:
    """Exact evaluation over all positive-probability observation histories"""
    limit: Optional[int] = None


@dataclass(frozen=True)
class MonteCarlo:
    """Sampled evaluation; results depend only on (samples, seed, partition_size)"""
    samples: int
    seed: int
    partition_size: Optional[int] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("Monte Carlo needs at least 2 samples for a standard error")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


Method = Union[Enumerate, MonteCarlo]


def method_name(method: Method) -> EstimationMethod:
    return EstimationMethod.ENUMERATE if isinstance(method, Enumerate) else EstimationMethod.MONTE_CARLO


def mean_and_se(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Column means and standard errors std(ddof=1)/sqrt(S) of a (S, ...) sample array"""
    count = samples.shape[0]
    return samples.mean(axis=0), samples.std(axis=0, ddof=1) / np.sqrt(count)
