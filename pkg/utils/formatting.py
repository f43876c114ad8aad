"""
Formatting Utilities
Number formatting for command output and log messages.
"""

from typing import Iterable

DISTANCE_DIGITS = 12


def format_distance(value: float) -> str:
    """
    Format a distance for printing.

    Args:
        value: Distance

    Returns:
        Value with 12 significant digits, e.g. "1.41421356237"
    """
    return f"{value:.{DISTANCE_DIGITS}g}"


def format_energy_trace(trace: Iterable[float]) -> str:
    """Compact rendering of an optimizer energy trace for logs."""
    return " -> ".join(f"{value:.6g}" for value in trace)
