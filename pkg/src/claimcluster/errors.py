"""Exception types shared across the toolkit."""

from __future__ import annotations


class ClaimClusterError(Exception):
    """Base class for all toolkit errors."""


class IdenticalIds(ClaimClusterError):
    """A pair was requested between a claim and itself."""


class DimensionMismatch(ClaimClusterError):
    """Vectors of different dimension were combined."""


class ZeroVector(ClaimClusterError):
    """A zero-norm vector reached an operation that needs a direction."""


class EmptyInput(ClaimClusterError):
    """An operation that needs at least one element got none."""


class EmptyIndex(ClaimClusterError):
    """A query was issued against an index with no vectors."""


class UnknownClaimId(ClaimClusterError):
    """A claim id could not be resolved against the dataset."""


class UnknownClusterId(ClaimClusterError):
    """A cluster id could not be resolved against the partition."""


class MissingVerdict(ClaimClusterError):
    """An annotator response file lacks a verdict for a requested pair."""


class MalformedVerdict(ClaimClusterError):
    """A verdict label was not exactly 'similar' or 'dissimilar'."""


class IncompleteVerdicts(ClaimClusterError):
    """Consensus was requested for a pair missing some annotators' verdicts."""


class IdSetMismatch(ClaimClusterError):
    """Two partitions (or a partition and a claim set) cover different ids."""

    def __init__(self, message: str, only_left: set[str], only_right: set[str]):
        super().__init__(message)
        self.only_left = only_left
        self.only_right = only_right


class TooFewItems(ClaimClusterError):
    """A metric needs more items than the partitions contain."""


class WardMetricViolation(ClaimClusterError):
    """Ward linkage was configured with a non-Euclidean metric."""


class ParseError(ClaimClusterError):
    """An input file failed to parse; carries the offending line number."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
