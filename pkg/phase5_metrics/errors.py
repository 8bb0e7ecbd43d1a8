"""
Metric errors.
"""


class MetricError(ValueError):
    """A metric was asked for on inputs it is undefined for (empty, degenerate or out of range)."""
