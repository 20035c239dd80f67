"""
Exception hierarchy for model handling, filtering, enumeration and certification
"""
from typing import Iterable, Optional, Sequence, Tuple


class PomdpError(Exception):
    """Base class for all toolkit errors"""


class ModelParseError(PomdpError):
    """A model or config file could not be read into the expected structure"""

    def __init__(self, message: str, path: Optional[str] = None, field: Optional[str] = None,
                 line: Optional[int] = None):
        self.path = path
        self.field = field
        self.line = line
        location = ""
        if path:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        if field:
            message = f"field '{field}': {message}"
        super().__init__(location + message)


class ModelValidationError(PomdpError):
    """A structurally valid model violates the POMDP invariants"""

    def __init__(self, report):
        self.report = report
        lines = "; ".join(v.message for v in report.violations)
        super().__init__(f"model failed validation ({len(report.violations)} violations): {lines}")


class ZeroLikelihoodError(PomdpError):
    """The observation has zero probability under the current predictor"""

    def __init__(self, time_index: Optional[int], observation: int):
        self.time_index = time_index
        self.observation = observation
        when = f" at time {time_index}" if time_index is not None else ""
        super().__init__(
            f"observation {observation} has zero likelihood under the predictor{when}"
        )


class AbsoluteContinuityError(PomdpError):
    """The true prior puts mass where the design prior puts none"""

    def __init__(self, states: Sequence[int]):
        self.states = tuple(int(s) for s in states)
        super().__init__(
            f"mu is not absolutely continuous w.r.t. nu: nu[x]=0 < mu[x] for x in {list(self.states)}"
        )


class EnumerationLimitError(PomdpError):
    """An exact enumeration would visit more paths than allowed"""

    def __init__(self, requested: int, limit: int):
        self.requested = requested
        self.limit = limit
        super().__init__(f"enumeration needs {requested} joint paths, limit is {limit}")


class ConvergenceError(PomdpError):
    """Value iteration stopped before reaching its tolerance"""

    def __init__(self, sweeps: int, residual: float, tolerance: float):
        self.sweeps = sweeps
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"value iteration did not converge after {sweeps} sweeps "
            f"(residual {residual:.3e} > tolerance {tolerance:.3e})"
        )


class BoundDomainError(PomdpError):
    """A bound was requested outside the parameter domain it is stated for"""

    def __init__(self, parameter: str, value: float, domain: str):
        self.parameter = parameter
        self.value = value
        super().__init__(f"{parameter}={value} is outside {domain}")


class InvalidKernelError(PomdpError, ValueError):
    """A matrix passed as a stochastic kernel is not row-stochastic"""


class CertificationError(PomdpError):
    """An empirical quantity exceeded its theoretical bound"""

    def __init__(self, what: str, failures: Iterable[Tuple[int, float, float]]):
        self.failures = list(failures)
        detail = ", ".join(f"n={n}: {value:.6g} > {limit:.6g}" for n, value, limit in self.failures[:5])
        super().__init__(f"{what} violated at {len(self.failures)} step(s): {detail}")
