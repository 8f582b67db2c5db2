"""Exception types shared across the pipeline."""


class PathographError(Exception):
    """Base class for all pipeline errors."""


class InvalidInput(PathographError):
    """Caller violated an operation precondition."""


class NumericalFailure(PathographError):
    """An iterative numerical routine failed to converge or produced NaN."""


class ShapeMismatch(PathographError):
    """Incompatible matrix / cohort dimensions."""


class DegenerateSignal(PathographError):
    """A time-series column has zero variance."""

    def __init__(self, column):
        super().__init__(f"zero-variance signal in column {column}")
        self.column = column


class IoError(PathographError):
    """A referenced data file is missing or unreadable."""


class UncoveredNode(PathographError):
    """A node is not covered by any atlas subgraph."""


class EmptyPathoGraph(PathographError):
    """Every subgraph scored below the whole-graph baseline."""


class MissingPlan(PathographError):
    """A subject's group has no augmentation plan."""


class AucUndefined(PathographError):
    """AUC is undefined for every class (no positives or no negatives)."""


class InvalidSpec(PathographError):
    """A synthetic-cohort spec is infeasible."""


class ConfigError(PathographError):
    """A run configuration file is malformed or contains unknown keys."""
