"""Global numerical tolerances.

All comparisons in the engine go through a single, globally configurable
set of tolerances so that scenario files and the CLI can tighten or relax
them uniformly.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Tolerance bundle used throughout the engine.

    rel       relative error for algebraic identities
    abs       absolute error for exact-zero / reality pattern checks
    singular  threshold below which a determinant counts as singular
    track     margin for square-root path tracking near a vanishing value
    """

    rel: float = 1e-9
    abs: float = 1e-10
    singular: float = 1e-12
    track: float = 1e-6

    def with_overrides(self, **kwargs: float) -> "Tolerances":
        return replace(self, **kwargs)


_current = Tolerances()


def get_tolerances() -> Tolerances:
    return _current


def set_tolerances(tols: Tolerances) -> None:
    global _current
    _current = tols


@contextlib.contextmanager
def tolerance_overrides(**kwargs: float):
    """Temporarily override selected tolerances."""
    global _current
    saved = _current
    _current = saved.with_overrides(**kwargs)
    try:
        yield _current
    finally:
        _current = saved
