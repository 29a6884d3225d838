"""Central tolerance scaling.

Every numeric tolerance used by the verification paths goes through
:func:`scaled`, so the environment variable ``HEIS_ILG_TOL`` (a positive
float, default 1.0) can loosen or tighten all checks at once without
touching call sites.
"""
from __future__ import annotations

import os


def tolerance_factor() -> float:
    """Global tolerance multiplier taken from ``HEIS_ILG_TOL``."""
    raw = os.environ.get("HEIS_ILG_TOL", "1.0")
    try:
        factor = float(raw)
    except ValueError as exc:
        raise ValueError(f"HEIS_ILG_TOL must be a float, got {raw!r}") from exc
    if factor <= 0.0:
        raise ValueError(f"HEIS_ILG_TOL must be positive, got {factor}")
    return factor


def scaled(base: float) -> float:
    """A base tolerance scaled by the global factor."""
    return base * tolerance_factor()
