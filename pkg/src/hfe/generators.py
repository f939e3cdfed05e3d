"""Named generators for scenario data.

Scenario files describe transition functions, sections, and sampled
scalar fields as named generators with JSON parameters; this module
parses those descriptions into the callables the engine consumes.
Complex scalars are written as a number or a two-element [re, im] list;
matrices as nested lists of such scalars.
"""

from __future__ import annotations

import cmath
from typing import Any, Callable

import numpy as np

from . import ball
from .cech import SamplePoint
from .errors import ValidationError
from .frames import BallPoint, MetaLagFrame
from .groups import MlElement, MpElement, SpElement
from .tracking import principal_sqrt


def parse_complex(v: Any) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str) and v == "inf":
        return complex("inf")
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ValidationError(f"cannot parse complex scalar from {v!r}")


def parse_matrix(v: Any) -> np.ndarray:
    if not isinstance(v, (list, tuple)):
        raise ValidationError(f"cannot parse matrix from {v!r}")
    return np.array([[parse_complex(x) for x in row] for row in v], dtype=complex)


def _zeta(params: dict, det_value: complex) -> complex:
    """Anchor scalar: explicit value, or a signed principal root."""
    if "zeta" in params:
        return parse_complex(params["zeta"])
    sign = int(params.get("sheet", 1))
    return sign * principal_sqrt(det_value)


def _point_param(pt: SamplePoint, idx: int = 0) -> float:
    return pt.params[idx] if len(pt.params) > idx else 0.0


def _point_zeta(pt: SamplePoint) -> complex:
    """Sample points on a Riemann-sphere chart carry (re, im) params."""
    return complex(_point_param(pt, 0), _point_param(pt, 1))


# ---------------------------------------------------------------------------
# generator constructors; each returns a callable SamplePoint -> value
# ---------------------------------------------------------------------------

def _gen_const(params, n, k):
    M = parse_matrix(params["value"])
    return lambda pt: M


def _gen_pair_const(params, n, k):
    g1 = parse_matrix(params["first"])
    g2 = parse_matrix(params["second"])
    return lambda pt: (g1, g2)


def _gen_ml_const(params, n, k):
    A = parse_matrix(params["A"])
    el = MlElement(A, _zeta(params, np.linalg.det(A) if A.size else 1.0))
    return lambda pt: el


def _gen_mp_const(params, n, k):
    g = SpElement(parse_matrix(params["g"]).real)
    _, a0 = ball.alpha_raw(g.g, np.zeros((g.n, g.n)))
    el = MpElement(g, _zeta(params, np.linalg.det(a0) if a0.size else 1.0))
    return lambda pt: el


def _gen_mp_rotation(params, n, k):
    """n=1 rotation by theta with anchor e^{i theta/2} on the chosen sheet."""
    theta = float(params["theta"])
    sign = int(params.get("sheet", 1))
    g = SpElement(np.array([[np.cos(theta), np.sin(theta)],
                            [-np.sin(theta), np.cos(theta)]]))
    el = MpElement(g, sign * cmath.exp(0.5j * theta))
    return lambda pt: el


def _gen_const_scalar(params, n, k):
    v = parse_complex(params["value"])
    return lambda pt: v


def _gen_linear_scalar(params, n, k):
    c0 = parse_complex(params["const"])
    c1 = parse_complex(params.get("slope", 0.0))
    return lambda pt: c0 + c1 * _point_param(pt)


def _gen_mobius_ratio(params, n, k):
    """1x1 transition (zeta - w_a) / (zeta - w_b) at a Riemann-sphere
    sample point; a factor with w = "inf" is the constant 1."""
    wa = parse_complex(params["w_a"])
    wb = parse_complex(params["w_b"])

    def fn(pt):
        z = _point_zeta(pt)
        num = 1.0 + 0j if wa == complex("inf") else z - wa
        den = 1.0 + 0j if wb == complex("inf") else z - wb
        return np.array([[num / den]], dtype=complex)

    return fn


def _gen_frame_const(params, n, k):
    U = parse_matrix(params["U"])
    V = parse_matrix(params["V"])
    return lambda pt: (U, V)


def _gen_frame_phi_inv(params, n, k):
    W = parse_matrix(params["W"])
    C = parse_matrix(params["C"])
    UV = ball.phi_inv_raw(W, C)
    return lambda pt: UV


def _block_frame(A, B, Wr, Cr):
    n = A.shape[0] + Wr.shape[0]
    k = A.shape[0]
    Ur, Vr = ball.phi_inv_raw(Wr, Cr)
    U = np.zeros((n, n), dtype=complex)
    V = np.zeros((n, n), dtype=complex)
    U[:k, :k] = A
    U[:k, k:] = B
    U[k:, k:] = Ur
    V[k:, k:] = Vr
    return U, V


def _gen_frame_blocks(params, n, k):
    """D-adapted block frame with reduced part phi_inv(Wr(t), Cr), where
    Wr(t) = Wr + t * Wr_slope along the sample parameter."""
    A = parse_matrix(params["A"]).real if k else np.zeros((0, 0))
    B = parse_matrix(params["B"]) if "B" in params else np.zeros((k, n - k))
    Wr0 = parse_matrix(params["Wr"])
    Wslope = parse_matrix(params["Wr_slope"]) if "Wr_slope" in params else None
    Cr = parse_matrix(params["Cr"])

    def fn(pt):
        Wr = Wr0 if Wslope is None else Wr0 + _point_param(pt) * Wslope
        return _block_frame(A, B, Wr, Cr)

    return fn


def _meta_member(spec: dict, n: int, k: int):
    A = parse_matrix(spec["A"]).real if k else np.zeros((0, 0))
    B = parse_matrix(spec["B"]) if "B" in spec else np.zeros((k, n - k))
    Wr0 = parse_matrix(spec["Wr"])
    Wslope = parse_matrix(spec["Wr_slope"]) if "Wr_slope" in spec else None
    Cr = parse_matrix(spec["Cr"])
    zsign = int(spec.get("zsign", 1))

    def fn(pt):
        Wr = Wr0 if Wslope is None else Wr0 + _point_param(pt) * Wslope
        W = np.zeros((n, n), dtype=complex)
        W[:k, :k] = np.eye(k)
        W[k:, k:] = Wr
        C = np.zeros((n, n), dtype=complex)
        C[:k, :k] = A
        C[:k, k:] = B
        C[k:, k:] = Cr
        z = zsign * principal_sqrt(np.linalg.det(C) if n else 1.0)
        return MetaLagFrame(BallPoint(W), MlElement(C, z))

    return fn


def _gen_meta_pair_blocks(params, n, k):
    """Pair of meta frames in D-adapted block form sharing the A block."""
    f1 = _meta_member(params["first"], n, k)
    f2 = _meta_member(params["second"], n, k)
    return lambda pt: (f1(pt), f2(pt))


_REGISTRY: dict[str, Callable] = {
    "const": _gen_const,
    "pair_const": _gen_pair_const,
    "ml_const": _gen_ml_const,
    "mp_const": _gen_mp_const,
    "mp_rotation": _gen_mp_rotation,
    "const_scalar": _gen_const_scalar,
    "linear_scalar": _gen_linear_scalar,
    "mobius_ratio": _gen_mobius_ratio,
    "frame_const": _gen_frame_const,
    "frame_phi_inv": _gen_frame_phi_inv,
    "frame_blocks": _gen_frame_blocks,
    "meta_pair_blocks": _gen_meta_pair_blocks,
}


def known_generators() -> list[str]:
    return sorted(_REGISTRY)


def build_generator(spec: dict, n: int, k: int) -> Callable[[SamplePoint], Any]:
    """Instantiate a generator description {"name": ..., "params": {...}}."""
    name = spec.get("name")
    if name not in _REGISTRY:
        raise ValidationError(f"unknown generator {name!r}")
    return _REGISTRY[name](spec.get("params", {}), n, k)
