"""
Error hierarchy.
Each error knows the exit code the command line maps it to.
"""


class HalfMaxEntError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class UsageError(HalfMaxEntError):
    """Invalid call sequence or argument (duplicate index, bad position)."""

    exit_code = 2


class DimensionError(UsageError):
    """Vector or matrix shapes do not agree."""


class DatasetError(HalfMaxEntError):
    """Input file or dataset violates its schema or invariants."""

    exit_code = 3


class UnknownKernelError(DatasetError):
    """Kernel family not known to the generator."""


class DegeneracyError(HalfMaxEntError):
    """No admissible (numerically independent) candidate is left."""

    exit_code = 4


class ConditionError(HalfMaxEntError):
    """Gram matrix is singular or too ill-conditioned for a direct solve."""

    exit_code = 4
