"""
Finite POMDP data model
Immutable kernels, beliefs and sample paths, invariant validation and the JSON model file
"""
import json
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveInt,
    ValidationError,
    ValidationInfo,
    model_validator,
)

from ..config.tolerances import BELIEF_SUM_TOLERANCE, ROW_SUM_TOLERANCE
from ..models.schemas import ValidationReport, Violation
from .errors import AbsoluteContinuityError, ModelParseError, ModelValidationError
from .logger import get_logger

logger = get_logger(__name__)

Matrix = Tuple[Tuple[float, ...], ...]


class ModelLabels(BaseModel):
    """Optional display names; indices stay the identity of states, observations and actions"""
    model_config = ConfigDict(frozen=True)

    states: Optional[Tuple[str, ...]] = None
    observations: Optional[Tuple[str, ...]] = None
    actions: Optional[Tuple[str, ...]] = None


class PomdpModel(BaseModel):
    """
    A finite POMDP (X, Y, U, T, Q, c, beta).

    transition[u][x][x'] = T(x'|x,u), observation[x][y] = Q(y|x), cost[x][u] = c(x,u).
    Instances are frozen. Every construction path checks the invariants unless the
    validation context sets ``check_invariants`` to False (used to report on broken files).
    """
    model_config = ConfigDict(frozen=True)

    num_states: PositiveInt
    num_obs: PositiveInt
    num_actions: PositiveInt
    discount: float
    transition: Tuple[Matrix, ...]
    observation: Matrix
    cost: Matrix
    labels: Optional[ModelLabels] = None

    @model_validator(mode="after")
    def check_model(self, info: ValidationInfo):
        _check_shapes(self)
        context = info.context or {}
        if context.get("check_invariants", True):
            report = validate(self)
            if not report.ok:
                raise ModelValidationError(report)
        return self

    @classmethod
    def from_arrays(cls, transition, observation, cost, discount: float,
                    labels: Optional[ModelLabels] = None) -> "PomdpModel":
        """Build a model from nested sequences or arrays, inferring the sizes"""
        t = np.asarray(transition, dtype=float)
        q = np.asarray(observation, dtype=float)
        c = np.asarray(cost, dtype=float)
        if t.ndim != 3 or q.ndim != 2 or c.ndim != 2:
            raise ValueError("transition must be 3-D, observation and cost 2-D")
        return cls(
            num_states=t.shape[1],
            num_obs=q.shape[1],
            num_actions=t.shape[0],
            discount=float(discount),
            transition=t.tolist(),
            observation=q.tolist(),
            cost=c.tolist(),
            labels=labels,
        )

    # Read-only array views; callers should take them once outside inner loops

    @property
    def transition_array(self) -> np.ndarray:
        return _readonly(self.transition)

    @property
    def observation_array(self) -> np.ndarray:
        return _readonly(self.observation)

    @property
    def cost_array(self) -> np.ndarray:
        return _readonly(self.cost)

    @property
    def cost_sup(self) -> float:
        """||c||_inf"""
        return float(np.max(self.cost_array))

    @property
    def trivial_bound(self) -> float:
        """||c||_inf / (1 - beta), the largest discounted cost any policy can incur"""
        return self.cost_sup / (1.0 - self.discount)

    def with_discount(self, discount: float) -> "PomdpModel":
        """Copy of the model with another discount factor"""
        return PomdpModel.model_validate({**self.model_dump(), "discount": discount})


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_shapes(model: PomdpModel) -> None:
    x, y, u = model.num_states, model.num_obs, model.num_actions
    if len(model.transition) != u:
        raise ValueError(f"transition has {len(model.transition)} matrices, expected num_actions={u}")
    for a, matrix in enumerate(model.transition):
        if len(matrix) != x or any(len(row) != x for row in matrix):
            raise ValueError(f"transition[{a}] must be {x}x{x}")
    if len(model.observation) != x or any(len(row) != y for row in model.observation):
        raise ValueError(f"observation must be {x}x{y}")
    if len(model.cost) != x or any(len(row) != u for row in model.cost):
        raise ValueError(f"cost must be {x}x{u}")
    if model.labels is not None:
        for name, size in (("states", x), ("observations", y), ("actions", u)):
            names = getattr(model.labels, name)
            if names is not None and len(names) != size:
                raise ValueError(f"labels.{name} has {len(names)} entries, expected {size}")


def _kernel_violations(field: str, matrix: Sequence[Sequence[float]], prefix: Tuple[int, ...],
                       describe: str) -> List[Violation]:
    violations = []
    for x, row in enumerate(matrix):
        for z, value in enumerate(row):
            if not math.isfinite(value) or value < 0.0:
                violations.append(Violation(
                    field=field, location=prefix + (x, z),
                    message=f"{describe} row {x} entry {z} = {value!r} must be finite and >= 0",
                ))
        total = math.fsum(row)
        if not abs(total - 1.0) <= ROW_SUM_TOLERANCE:
            violations.append(Violation(
                field=field, location=prefix + (x,),
                message=f"{describe} row {x} sums to {total!r}, expected 1",
            ))
    return violations


def validate(model: PomdpModel) -> ValidationReport:
    """
    Check every model invariant without raising.

    Args:
        model: Model to check (may have been built with invariant checks disabled)

    Returns:
        ValidationReport, empty iff all kernel rows are stochastic within 1e-12,
        costs are finite and non-negative, and 0 <= discount < 1
    """
    violations: List[Violation] = []
    for u, matrix in enumerate(model.transition):
        violations.extend(_kernel_violations("transition", matrix, (u,), f"transition action {u}"))
    violations.extend(_kernel_violations("observation", model.observation, (), "observation"))

    for x, row in enumerate(model.cost):
        for u, value in enumerate(row):
            if not math.isfinite(value) or value < 0.0:
                violations.append(Violation(
                    field="cost", location=(x, u),
                    message=f"cost[{x}][{u}] = {value!r} must be finite and >= 0",
                ))

    beta = model.discount
    if not math.isfinite(beta):
        violations.append(Violation(field="discount", message="discount must be finite"))
    elif beta >= 1.0:
        violations.append(Violation(field="discount", message="discount must be < 1"))
    elif beta < 0.0:
        violations.append(Violation(field="discount", message="discount must be >= 0"))

    return ValidationReport(violations=violations)


# =====================================================
# BELIEFS AND PATHS
# =====================================================

class Belief(BaseModel):
    """A probability vector over the states"""
    model_config = ConfigDict(frozen=True)

    probs: Tuple[float, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def check_probability(self):
        if any(not math.isfinite(p) or p < 0.0 for p in self.probs):
            raise ValueError("belief entries must be finite and >= 0")
        total = math.fsum(self.probs)
        if not abs(total - 1.0) <= BELIEF_SUM_TOLERANCE:
            raise ValueError(f"belief sums to {total!r}, expected 1")
        return self

    @classmethod
    def of(cls, values) -> "Belief":
        return cls(probs=tuple(float(v) for v in np.asarray(values, dtype=float).ravel()))

    @classmethod
    def point_mass(cls, state: int, num_states: int) -> "Belief":
        probs = [0.0] * num_states
        probs[state] = 1.0
        return cls(probs=tuple(probs))

    @classmethod
    def uniform(cls, num_states: int) -> "Belief":
        return cls.of(np.full(num_states, 1.0 / num_states))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def __len__(self) -> int:
        return len(self.probs)


BeliefLike = Union[Belief, Sequence[float], np.ndarray]


def as_probs(belief: BeliefLike, num_states: Optional[int] = None) -> np.ndarray:
    """Coerce a Belief or a raw vector to a validated float array"""
    if isinstance(belief, Belief):
        arr = belief.array
    else:
        arr = Belief.of(belief).array
    if num_states is not None and arr.shape[0] != num_states:
        raise ValueError(f"belief has {arr.shape[0]} entries, model has {num_states} states")
    return arr


class Trajectory(BaseModel):
    """One sample path of the strategic measure: x_0..x_n, y_0..y_n, u_0..u_{n-1}"""
    model_config = ConfigDict(frozen=True)

    states: Tuple[int, ...]
    observations: Tuple[int, ...]
    actions: Tuple[int, ...]

    @model_validator(mode="after")
    def check_lengths(self):
        n = len(self.actions)
        if len(self.states) != n + 1 or len(self.observations) != n + 1:
            raise ValueError(
                f"an {n}-step trajectory needs {n + 1} states and observations, "
                f"got {len(self.states)} and {len(self.observations)}"
            )
        return self

    @property
    def horizon(self) -> int:
        return len(self.actions)


def has_full_support(belief: BeliefLike) -> bool:
    """True when every state has positive probability"""
    return bool(np.all(as_probs(belief) > 0.0))


def check_absolute_continuity(mu: BeliefLike, nu: BeliefLike) -> None:
    """
    Require mu << nu: every state with nu[x] = 0 must also have mu[x] = 0.

    Raises:
        AbsoluteContinuityError: naming the offending states
    """
    m, n = as_probs(mu), as_probs(nu)
    if m.shape != n.shape:
        raise ValueError(f"mu has {m.shape[0]} entries, nu has {n.shape[0]}")
    bad = np.flatnonzero((n == 0.0) & (m > 0.0))
    if bad.size:
        raise AbsoluteContinuityError(bad.tolist())


# =====================================================
# MODEL FILE
# =====================================================

def _read_json(path: Union[str, Path]) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ModelParseError(f"cannot read model file: {e.strerror or e}", path=str(path)) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(f"invalid JSON: {e.msg} (column {e.colno})", path=str(path),
                              line=e.lineno) from e
    if not isinstance(data, dict):
        raise ModelParseError("top level must be a JSON object", path=str(path))
    return data


def _parse(data: dict, path: Path, check_invariants: bool) -> PomdpModel:
    try:
        return PomdpModel.model_validate(data, context={"check_invariants": check_invariants})
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first["loc"]) or None
        raise ModelParseError(first["msg"], path=str(path), field=field) from e


def load_model(path: Union[str, Path]) -> PomdpModel:
    """
    Read and validate a model file.

    Raises:
        ModelParseError: unreadable file, malformed JSON, missing or mistyped field
        ModelValidationError: the file parses but violates a model invariant
    """
    path = Path(path)
    model = _parse(_read_json(path), path, check_invariants=True)
    logger.info("model_loaded", path=str(path), states=model.num_states,
                observations=model.num_obs, actions=model.num_actions)
    return model


def read_model_unchecked(path: Union[str, Path]) -> PomdpModel:
    """Parse a model file without enforcing the invariants, for reporting on broken fixtures"""
    path = Path(path)
    return _parse(_read_json(path), path, check_invariants=False)


def save_model(model: PomdpModel, path: Union[str, Path]) -> None:
    """Write a model file; floats use their shortest round-trip repr so load(save(m)) == m"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = model.model_dump(mode="json", exclude_none=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    logger.info("model_saved", path=str(path))
