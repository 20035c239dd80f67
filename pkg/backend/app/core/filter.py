"""
Controlled predictor/filter recursion
Recursive Bayes updates, an exact forward enumerator over observation histories, and a
brute-force state-path oracle for the same conditional laws
"""
import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import EnumerationLimitError, ZeroLikelihoodError
from .logger import get_logger
from .model import Belief, BeliefLike, PomdpModel, as_probs

if TYPE_CHECKING:
    from .policies import ControlPolicy

logger = get_logger(__name__)

DEFAULT_ENUMERATION_LIMIT = 10_000_000
# Working-set cap (floats) for one chunk of state paths in the oracle
_CHUNK_ENTRIES = 1_000_000


class FilterState(BaseModel):
    """Predictor pi_{n-} (given y_0..y_{n-1}) and filter pi_n (given y_0..y_n) at time n"""
    model_config = ConfigDict(frozen=True)

    time: int = Field(ge=0)
    predictor: Belief
    filter: Belief


def _check_index(value: int, size: int, what: str) -> int:
    value = int(value)
    if not 0 <= value < size:
        raise ValueError(f"{what} index {value} out of range [0, {size})")
    return value


def _normalized(weights: np.ndarray) -> np.ndarray:
    return weights / weights.sum()


def _measure(q: np.ndarray, predictor: np.ndarray, y: int, time_index: Optional[int]) -> np.ndarray:
    weights = q[:, y] * predictor
    if weights.sum() <= 0.0:
        raise ZeroLikelihoodError(time_index, y)
    return _normalized(weights)


def measurement_update(model: PomdpModel, predictor: BeliefLike, y: int) -> Belief:
    """
    Condition a predictor on the observation y.

    Raises:
        ZeroLikelihoodError: sum_x Q(y|x) predictor[x] == 0; the belief is never reset
    """
    y = _check_index(y, model.num_obs, "observation")
    p = as_probs(predictor, model.num_states)
    return Belief.of(_measure(model.observation_array, p, y, None))


def time_update(model: PomdpModel, filter: BeliefLike, u: int) -> Belief:
    """Push a filter through T(.|., u) to obtain the next predictor"""
    u = _check_index(u, model.num_actions, "action")
    p = as_probs(filter, model.num_states)
    return Belief.of(_normalized(p @ model.transition_array[u]))


def run_filter(model: PomdpModel, prior: BeliefLike, observations: Sequence[int],
               actions: Sequence[int]) -> List[FilterState]:
    """
    Run the recursion pi_{0-} = prior, pi_k = measure(pi_{k-}, y_k), pi_{k+1-} = push(pi_k, u_k).

    Args:
        model: POMDP
        prior: initial predictor
        observations: y_0..y_n
        actions: u_0..u_{n-1}

    Returns:
        n+1 FilterStates; element k holds pi_{k-} and pi_k

    Raises:
        ZeroLikelihoodError: with the time index of the impossible observation
    """
    observations, actions = list(observations), list(actions)
    if len(observations) != len(actions) + 1:
        raise ValueError(
            f"need one more observation than actions, got {len(observations)} and {len(actions)}"
        )
    q, t_kernel = model.observation_array, model.transition_array
    predictor = as_probs(prior, model.num_states)
    states: List[FilterState] = []
    for k, y in enumerate(observations):
        y = _check_index(y, model.num_obs, "observation")
        filt = _measure(q, predictor, y, k)
        states.append(FilterState(time=k, predictor=Belief.of(predictor), filter=Belief.of(filt)))
        if k < len(actions):
            u = _check_index(actions[k], model.num_actions, "action")
            predictor = _normalized(filt @ t_kernel[u])
    return states


# =====================================================
# BATCHED UPDATES
# =====================================================

def batch_measurement_update(q: np.ndarray, predictors: np.ndarray,
                             observations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Measurement update of many predictors at once.

    Returns:
        (filters, likelihoods); rows with zero likelihood keep their predictor and
        must be handled by the caller
    """
    weights = predictors * q[:, observations].T
    likelihood = weights.sum(axis=1)
    ok = likelihood > 0.0
    filters = np.where(ok[:, None], weights / np.where(ok, likelihood, 1.0)[:, None], predictors)
    return filters, likelihood


def batch_time_update(transition: np.ndarray, filters: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Time update of many filters, each with its own action"""
    predictors = np.einsum("px,pxz->pz", filters, transition[actions])
    return predictors / predictors.sum(axis=1, keepdims=True)


# =====================================================
# EXACT FORWARD ENUMERATION
# =====================================================

@dataclass
class TreeLayer:
    """
    All positive-probability observation histories y_0..y_t under P^{prior, policy}.

    predictors/filters belong to the true prior; tracked_* hold the same recursion
    started from each tracked prior along the same histories and actions.
    """
    t: int
    sequences: np.ndarray
    probabilities: np.ndarray
    predictors: np.ndarray
    filters: np.ndarray
    tracked_predictors: List[np.ndarray]
    tracked_filters: List[np.ndarray]
    actions: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.probabilities.shape[0]


def observation_tree(model: PomdpModel, prior: BeliefLike, policy: "ControlPolicy", horizon: int,
                     tracked: Sequence[BeliefLike] = (),
                     limit: int = DEFAULT_ENUMERATION_LIMIT) -> Iterator[TreeLayer]:
    """
    Enumerate observation histories layer by layer for t = 0..horizon.

    Zero-probability histories are pruned, so the layer size is bounded by |Y|^{t+1}.

    Raises:
        EnumerationLimitError: a layer would exceed limit (rows x states)
        ZeroLikelihoodError: a tracked filter or the policy meets an impossible
            observation on a positive-probability history (mu not << nu)
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    num_x, num_y = model.num_states, model.num_obs
    q, t_kernel = model.observation_array, model.transition_array

    predictors = as_probs(prior, num_x)[None, :]
    tracked_predictors = [as_probs(b, num_x)[None, :] for b in tracked]
    probabilities = np.ones(1)
    sequences = np.zeros((1, 0), dtype=np.int64)
    policy_state = policy.start(model, 1)

    for t in range(horizon + 1):
        rows = probabilities.shape[0] * num_y
        if rows * num_x > limit:
            raise EnumerationLimitError(rows * num_x, limit)

        parent = np.repeat(np.arange(probabilities.shape[0]), num_y)
        ys = np.tile(np.arange(num_y), probabilities.shape[0])
        filters, likelihood = batch_measurement_update(q, predictors[parent], ys)
        joint = probabilities[parent] * likelihood
        keep = joint > 0.0

        parent, ys = parent[keep], ys[keep]
        filters = filters[keep]
        probabilities = joint[keep]
        predictors = predictors[parent]
        sequences = np.column_stack([sequences[parent], ys])

        tracked_predictors = [p[parent] for p in tracked_predictors]
        tracked_filters = []
        for p in tracked_predictors:
            f, lik = batch_measurement_update(q, p, ys)
            if np.any(lik <= 0.0):
                bad = int(np.flatnonzero(lik <= 0.0)[0])
                raise ZeroLikelihoodError(t, int(ys[bad]))
            tracked_filters.append(f)

        policy_state = policy_state.take(parent)
        actions = policy.act(model, policy_state, t, ys)
        if np.any(policy_state.impossible):
            bad = int(np.flatnonzero(policy_state.impossible)[0])
            raise ZeroLikelihoodError(t, int(ys[bad]))

        yield TreeLayer(t=t, sequences=sequences, probabilities=probabilities, predictors=predictors,
                        filters=filters, tracked_predictors=tracked_predictors,
                        tracked_filters=tracked_filters, actions=actions)

        if t < horizon:
            predictors = batch_time_update(t_kernel, filters, actions)
            tracked_predictors = [batch_time_update(t_kernel, f, actions) for f in tracked_filters]


# =====================================================
# STATE-PATH ORACLE
# =====================================================

@dataclass(frozen=True)
class OracleEntry:
    """Probability of one observation history and the exact filter after it (None if impossible)"""
    probability: float
    filter: Optional[np.ndarray]


def all_sequences(num_obs: int, length: int) -> np.ndarray:
    seqs = list(itertools.product(range(num_obs), repeat=length))
    return np.array(seqs, dtype=np.int64).reshape(len(seqs), length)


def state_path_joint(model: PomdpModel, prior: np.ndarray, sequences: np.ndarray,
                     actions: np.ndarray, steps: int,
                     limit: int = DEFAULT_ENUMERATION_LIMIT) -> np.ndarray:
    """
    Joint law P(X_0 = x0, Y_0..Y_{m-1} = seq, X_steps = x) by summing over every state path.

    Args:
        model: POMDP
        prior: law of X_0
        sequences: (S, m) observation sequences, m <= steps + 1
        actions: (S, >= steps) actions, column t applied between X_t and X_{t+1}
        steps: number of transitions
        limit: cap on |X|^{steps+1} * S

    Returns:
        (S, |X|, |X|) array indexed [sequence, x0, x_steps]
    """
    num_x = model.num_states
    num_seq, length = sequences.shape
    if length > steps + 1:
        raise ValueError("more observations than states on the path")
    requested = num_x ** (steps + 1) * num_seq
    if requested > limit:
        raise EnumerationLimitError(requested, limit)

    q, t_kernel = model.observation_array, model.transition_array
    paths = np.array(list(itertools.product(range(num_x), repeat=steps + 1)), dtype=np.int64)
    joint = np.zeros((num_seq, num_x, num_x))
    chunk = max(1, _CHUNK_ENTRIES // max(num_seq, 1))

    for start in range(0, paths.shape[0], chunk):
        block = paths[start:start + chunk]
        weights = np.broadcast_to(prior[block[:, 0]][:, None], (block.shape[0], num_seq)).copy()
        for t in range(length):
            weights *= q[block[:, t][:, None], sequences[None, :, t]]
        for t in range(steps):
            weights *= t_kernel[actions[None, :, t], block[:, t][:, None], block[:, t + 1][:, None]]
        np.add.at(joint, (slice(None), block[:, 0], block[:, -1]), weights.T)
    return joint


def enumeration_oracle(model: PomdpModel, prior: BeliefLike, policy: "ControlPolicy", horizon: int,
                       limit: int = DEFAULT_ENUMERATION_LIMIT) -> Dict[Tuple[int, ...], OracleEntry]:
    """
    Exact law of Y_0..Y_n and of X_n given them, by brute force over state paths.

    Shares no code path with run_filter: the policy is replayed on every observation
    sequence and each state path is weighted by prior * prod Q * prod T directly.

    Raises:
        EnumerationLimitError: |X|^{n+1} |Y|^{n+1} exceeds limit
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    mu = as_probs(prior, model.num_states)
    requested = (model.num_states * model.num_obs) ** (horizon + 1)
    if requested > limit:
        raise EnumerationLimitError(requested, limit)

    sequences = all_sequences(model.num_obs, horizon + 1)
    actions = policy.actions_for(model, sequences)
    joint = state_path_joint(model, mu, sequences, actions, horizon, limit=limit).sum(axis=1)
    totals = joint.sum(axis=1)

    result: Dict[Tuple[int, ...], OracleEntry] = {}
    for seq, total, row in zip(sequences, totals, joint):
        key = tuple(int(y) for y in seq)
        result[key] = OracleEntry(
            probability=float(total),
            filter=row / total if total > 0.0 else None,
        )
    logger.debug("oracle_enumerated", horizon=horizon, sequences=len(result))
    return result
