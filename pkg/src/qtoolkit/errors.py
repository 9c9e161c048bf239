"""Shared exception types.

Two failure classes are distinguished throughout the package and by the CLI:
invalid input (wrong shapes, violated invariants, unusable configuration) and
numerical failure (a computation that ran but did not reach its tolerance or
produced non-finite values).  The CLI maps them to exit codes 2 and 3.
"""


class ValidationError(ValueError):
    """Input or configuration violates a documented precondition."""


class NumericalError(RuntimeError):
    """A computation failed to meet its numerical contract."""
