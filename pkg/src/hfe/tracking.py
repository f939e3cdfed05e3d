"""Continuous square-root tracking.

Given a continuous nonvanishing path ``f(t)`` of complex numbers and an
anchor ``z0`` with ``z0**2 = f(t0)``, there is a unique continuous branch
``z(t)`` with ``z(t)**2 = f(t)``.  We realize it numerically by stepping
along the path and multiplying by the principal square root of the ratio
of consecutive values; adaptive bisection keeps every argument step below
pi/2 so the branch can never jump.
"""

from __future__ import annotations

import cmath
import math
from typing import Callable, Sequence

from .config import get_tolerances
from .errors import TrackingError

# Argument-step safety margin: a ratio with |arg| beyond this triggers
# bisection (continuous functions) or an error (discrete samples).
_MAX_ARG = 0.5 * math.pi * 0.999


def principal_sqrt(w: complex) -> complex:
    """Principal square root with Arg(result) in (-pi/2, pi/2].

    cmath.sqrt maps the negative real axis to the positive imaginary
    axis, which is exactly the (-pi/2, pi/2] convention.
    """
    return cmath.sqrt(w)


def track_sqrt(
    f: Callable[[float], complex],
    z0: complex,
    t0: float = 0.0,
    t1: float = 1.0,
    max_depth: int = 48,
    initial_steps: int = 16,
) -> complex:
    """Continue z with z**2 = f(t) from the anchor z0 at t0 to t1.

    The anchor must satisfy z0**2 = f(t0).  Raises TrackingError if the
    tracked value passes within the tracking tolerance of zero away from
    the endpoint, or if bisection cannot reduce the argument step.

    The interval is always cut into ``initial_steps`` pieces before the
    adaptive bisection: testing only endpoint ratios would miss a path
    that winds around the origin yet returns with a small total argument.
    """
    tols = get_tolerances()
    ft0 = complex(f(t0))
    if abs(z0 * z0 - ft0) > tols.rel * max(1.0, abs(ft0)) * 10:
        raise TrackingError("anchor does not square to the path start value")

    t, ft, z = t0, ft0, complex(z0)
    # Stack of pending right endpoints (top of stack is processed next);
    # seed with a uniform subdivision, finest target first.
    h = (t1 - t0) / initial_steps
    pending = [t0 + j * h for j in range(initial_steps, 0, -1)]
    depth = 0
    while pending:
        tn = pending[-1]
        fn = complex(f(tn))
        if abs(fn) <= tols.track * max(1.0, abs(ft0)) and tn < t1:
            raise TrackingError(f"tracked value vanishes near t={tn:.6g}")
        if abs(ft) == 0.0:
            raise TrackingError(f"tracked value vanishes at t={t:.6g}")
        ratio = fn / ft
        if abs(cmath.phase(ratio)) >= _MAX_ARG or abs(ratio) == 0.0:
            depth += 1
            if depth > max_depth:
                raise TrackingError("bisection depth exceeded (branch ambiguity)")
            pending.append(0.5 * (t + tn))
            continue
        z = z * principal_sqrt(ratio)
        t, ft = tn, fn
        pending.pop()
        depth = 0
    return z


def track_sqrt_samples(values: Sequence[complex], z0: complex) -> list[complex]:
    """Track a square root along a discrete sample sequence.

    Returns the branch values at every sample.  Unlike track_sqrt the
    samples cannot be refined, so an argument step of pi/2 or more is a
    hard error (the sampling is too coarse to rule out a branch jump).
    """
    if not values:
        return []
    out = [complex(z0)]
    prev = complex(values[0])
    tols = get_tolerances()
    if abs(z0 * z0 - prev) > tols.rel * max(1.0, abs(prev)) * 10:
        raise TrackingError("anchor does not square to the first sample")
    for v in values[1:]:
        v = complex(v)
        if abs(prev) == 0.0 or abs(v) == 0.0:
            raise TrackingError("sample value vanishes; branch undefined")
        ratio = v / prev
        if abs(cmath.phase(ratio)) >= _MAX_ARG:
            raise TrackingError(
                "argument step >= pi/2 between samples (edge too long)"
            )
        out.append(out[-1] * principal_sqrt(ratio))
        prev = v
    return out
