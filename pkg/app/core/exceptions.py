from typing import Any, List, Optional


class LineSimError(Exception):
    """Base exception for production-line simulation errors."""
    pass


# Model description

class ModelError(LineSimError):
    """Raised when a line model cannot be read or is invalid."""
    pass


class ParseError(ModelError):
    """Raised when a configuration document is not well-formed."""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, field: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if field:
            location.append(f"field '{field}'")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.column = column
        self.field = field


class SchemaError(ModelError):
    """Raised with every violated field of a configuration, in one pass."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# Kernel

class SimulationError(LineSimError):
    """Base exception for simulation kernel errors."""
    pass


class PastTimeError(SimulationError):
    """Raised when an event is scheduled before the current clock."""
    pass


class InvalidParamsError(SimulationError):
    """Raised when a distribution violates its family invariants."""
    pass


class QtyExceedsCapacityError(SimulationError):
    """Raised when a request can never be granted by a pool."""
    pass


class NotHeldError(SimulationError):
    """Raised when an entity releases units it does not hold."""
    pass


class DivergenceError(SimulationError):
    """Raised when a replication exceeds the event safety cap."""
    pass


# Statistics and costs

class StatsError(LineSimError):
    """Base exception for statistics errors."""
    pass


class EmptySeriesError(StatsError):
    pass


class NegativeTimeError(StatsError):
    pass


class EmptyListError(StatsError):
    pass


class MixedModelError(StatsError):
    """Raised when replications of different models are aggregated."""
    pass


class ZeroOutputError(StatsError):
    pass


# Analysis

class AnalysisError(LineSimError):
    pass


class MissingStationError(AnalysisError):
    pass


class SchemaMismatchError(AnalysisError):
    """Raised when two reports do not share a metric schema."""
    pass


# Scenarios and searches

class ScenarioError(LineSimError):
    pass


class UnknownTargetError(ScenarioError):
    """Raised when an intervention names a missing station, pool or route."""
    pass


class HeadcountViolationError(ScenarioError):
    """Raised when an intervention changes the operator headcount undeclared."""
    pass


class InfeasibleTotalError(ScenarioError):
    pass


class InfeasibleBoundsError(ScenarioError):
    pass


class BudgetExhaustedError(ScenarioError):
    """Raised when a search runs out of evaluations; carries the best-so-far."""

    def __init__(self, message: str, best: Any = None):
        super().__init__(message)
        self.best = best


# Stored runs

class RunNotFound(LineSimError):
    """Raised when a stored simulation run is not found."""
    pass
