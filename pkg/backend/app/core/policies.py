"""
Admissible control policies
Every policy acts on a batch of observation histories at once and keeps its memory in a PolicyState
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .logger import get_logger
from .model import PomdpModel

logger = get_logger(__name__)


@dataclass
class PolicyState:
    """
    Per-path memory of a policy.

    belief: controller predictor rows (paths x states) for belief-tracking policies
    previous: last action per path, -1 before the first action
    impossible: paths whose observation had zero likelihood under the controller belief
    """
    belief: Optional[np.ndarray]
    previous: np.ndarray
    impossible: np.ndarray
    tables: Dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def empty(cls, num_paths: int, belief: Optional[np.ndarray] = None) -> "PolicyState":
        return cls(
            belief=belief,
            previous=np.full(num_paths, -1, dtype=np.int64),
            impossible=np.zeros(num_paths, dtype=bool),
        )

    def take(self, rows: np.ndarray) -> "PolicyState":
        """State for a re-indexed batch (rows may repeat)"""
        return PolicyState(
            belief=None if self.belief is None else self.belief[rows],
            previous=self.previous[rows],
            impossible=self.impossible[rows],
            tables=self.tables,
        )


class ControlPolicy(ABC):
    """A map from the observation history y_0..y_t (and past actions) to u_t"""

    name: str = "policy"

    @abstractmethod
    def start(self, model: PomdpModel, num_paths: int) -> PolicyState:
        """Fresh memory for num_paths independent histories"""

    @abstractmethod
    def act(self, model: PomdpModel, state: PolicyState, t: int, observations: np.ndarray) -> np.ndarray:
        """Consume y_t for every path and return u_t; updates state in place"""

    def actions_for(self, model: PomdpModel, sequences: np.ndarray) -> np.ndarray:
        """
        Actions chosen along fixed observation sequences.

        Args:
            model: POMDP the policy controls
            sequences: (paths, m) observation sequences y_0..y_{m-1}

        Returns:
            (paths, m) array whose column t is u_t; paths that hit a zero-likelihood
            observation keep acting on their last valid belief
        """
        sequences = np.asarray(sequences, dtype=np.int64)
        num_paths, length = sequences.shape
        state = self.start(model, num_paths)
        actions = np.zeros((num_paths, length), dtype=np.int64)
        for t in range(length):
            actions[:, t] = self.act(model, state, t, sequences[:, t])
        return actions


class FixedActionPolicy(ControlPolicy):
    """Always applies the same action"""

    name = "fixed_action"

    def __init__(self, action: int):
        self.action = int(action)

    def start(self, model: PomdpModel, num_paths: int) -> PolicyState:
        if not 0 <= self.action < model.num_actions:
            raise ValueError(f"action {self.action} out of range for {model.num_actions} actions")
        return PolicyState.empty(num_paths)

    def act(self, model, state, t, observations):
        actions = np.full(observations.shape[0], self.action, dtype=np.int64)
        state.previous = actions
        return actions


class UniformRandomPolicy(ControlPolicy):
    """
    Seeded history-dependent policy.

    u_t = table_t[y_t, u_{t-1}] where table_t is drawn uniformly over actions from a
    generator keyed by (seed, t). The same seed always yields the same policy, so it is
    a fixed admissible policy rather than randomized control.
    """

    name = "uniform_random"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)

    def start(self, model: PomdpModel, num_paths: int) -> PolicyState:
        return PolicyState.empty(num_paths)

    def _table(self, model: PomdpModel, state: PolicyState, t: int) -> np.ndarray:
        table = state.tables.get(t)
        if table is None:
            rng = np.random.default_rng([self.seed, t])
            table = rng.integers(model.num_actions, size=(model.num_obs, model.num_actions + 1))
            state.tables[t] = table
        return table

    def act(self, model, state, t, observations):
        table = self._table(model, state, t)
        # column num_actions stands for "no previous action"
        previous = np.where(state.previous < 0, model.num_actions, state.previous)
        actions = table[observations, previous].astype(np.int64)
        state.previous = actions
        return actions


def make_policy(kind: str, *, action: int = 0, seed: int = 0) -> ControlPolicy:
    """Build a policy that needs no solver; belief-feedback policies come from control.solve_policy"""
    if kind == FixedActionPolicy.name:
        return FixedActionPolicy(action)
    if kind == UniformRandomPolicy.name:
        return UniformRandomPolicy(seed)
    raise ValueError(f"unknown policy kind '{kind}'")
