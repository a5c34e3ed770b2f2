"""Exception types shared across the package.

Plain ``ValueError`` is raised for malformed arguments; the classes here
mark the two failure modes callers may want to catch separately.
"""


class CapacityError(ValueError):
    """A requested dense solve exceeds the configured size guard."""


class NumericError(RuntimeError):
    """A numerical routine failed to produce a usable result."""
