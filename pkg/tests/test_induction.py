import cmath
import math

import numpy as np
import pytest

from hfe import ball
from hfe.cech import Cocycle, Nerve, OverlapComponent, SamplePoint, lifts_equivalent
from hfe.errors import SubgroupRejection, ValidationError
from hfe.frames import BallPoint, MetaLagFrame
from hfe.groups import MlElement, MpElement, SpElement, mp_identity
from hfe.induction import (
    FrameSectionData,
    MetaplecticBundleData,
    build_delta_D_tilde,
    chart_sqrt_values,
    cross_check,
    mp_act_meta,
    recipe,
    reduce_D_adapted,
)
from hfe.scenario import builtin_scenario_path, load_scenario
from hfe.tracking import principal_sqrt

EAST = SamplePoint("east", (0.0,))
WEST = SamplePoint("west", (1.0,))


def circle_nerve():
    return Nerve(
        ("a", "b"),
        {("a", "b"): (OverlapComponent((EAST,)), OverlapComponent((WEST,)))},
    )


def _mp_rotation(theta):
    g = SpElement(np.array([[math.cos(theta), math.sin(theta)],
                            [-math.sin(theta), math.cos(theta)]]))
    el = MpElement(g, cmath.exp(0.5j * theta))
    return lambda pt: el


def rotation_bundle(theta=math.pi / 2):
    mp_c = Cocycle(
        "Mp", 1, 0,
        {("a", "b"): (lambda pt: mp_identity(1), _mp_rotation(theta))},
    )
    return MetaplecticBundleData(circle_nerve(), mp_c, d_adapted=False, k=0)


def holo_sections():
    UV = ball.phi_inv_raw(np.zeros((1, 1)), np.eye(1))
    fn = lambda pt: UV
    return FrameSectionData({"a": fn, "b": fn})


def test_recipe_rotation_anchor():
    # rotating the origin frame by a quarter turn produces the metalinear
    # transition ([i], e^{i pi/4}) on the twisted component
    r = recipe(rotation_bundle(), holo_sections())
    el = r.ml_cocycle.transitions[("a", "b")][1](WEST)
    assert abs(el.A[0, 0] - 1j) < 1e-12
    assert abs(el.z - cmath.exp(0.25j * cmath.pi)) < 1e-12
    eye = r.ml_cocycle.transitions[("a", "b")][0](EAST)
    assert abs(eye.A[0, 0] - 1.0) < 1e-12 and abs(eye.z - 1.0) < 1e-12
    assert max(r.residuals.values()) < 1e-10


def test_recipe_projection_matches_gl():
    r = recipe(rotation_bundle(theta=0.7), holo_sections())
    ml = r.ml_cocycle.transitions[("a", "b")][1](WEST)
    gl = r.gl_cocycle.transitions[("a", "b")][1](WEST)
    assert np.allclose(ml.A, gl)


def test_recipe_sheet_flip_is_coboundary():
    data = rotation_bundle()
    sections = holo_sections()
    r1 = recipe(data, sections)
    r2 = recipe(data, sections, sheet_flips={"a": -1})
    witness = lifts_equivalent(data.nerve, r1.ml_cocycle, r2.ml_cocycle)
    assert witness is not None
    assert witness["a"] * witness["b"] == -1


def test_recipe_rejects_inconsistent_sections():
    data = rotation_bundle(theta=0.0)
    UVa = ball.phi_inv_raw(np.array([[0.5]]), np.eye(1))
    UVb = ball.phi_inv_raw(np.zeros((1, 1)), np.eye(1))
    sections = FrameSectionData({"a": lambda pt: UVa, "b": lambda pt: UVb})
    with pytest.raises(ValidationError):
        recipe(data, sections)


def test_frame_sections_must_be_positive():
    anti = (np.array([[1.0]]), np.array([[-1j]]))
    with pytest.raises(ValidationError):
        FrameSectionData({"a": lambda pt: anti}).frame("a", EAST)


def test_mp_act_meta_identity():
    X = MetaLagFrame(
        BallPoint(np.zeros((1, 1))),
        MlElement(np.array([[2.0]]), principal_sqrt(2.0)),
    )
    Y = mp_act_meta(mp_identity(1), X)
    assert np.allclose(Y.W.W, X.W.W)
    assert np.allclose(Y.C.A, X.C.A)
    assert abs(Y.C.z - X.C.z) < 1e-12


def test_chart_sqrt_values_continuity():
    pts = tuple(
        SamplePoint(f"t{i}", (i / 8.0,)) for i in range(9)
    )
    comp = OverlapComponent(pts, tuple((i, i + 1) for i in range(8)))
    nerve = Nerve(("a", "b"), {("a", "b"): (comp,)})
    z = chart_sqrt_values(
        nerve, "a", lambda pt: cmath.exp(2j * cmath.pi * pt.params[0])
    )
    assert abs(z["t0"] - 1.0) < 1e-12
    assert abs(z["t8"] + 1.0) < 1e-9  # tracked onto the other sheet
    zf = chart_sqrt_values(
        nerve, "a", lambda pt: cmath.exp(2j * cmath.pi * pt.params[0]), flip=-1
    )
    assert abs(zf["t0"] + 1.0) < 1e-12


def test_reduce_D_adapted_blocks():
    Ur, Vr = ball.phi_inv_raw(np.array([[0.2]]), np.array([[1.0]]))
    U = np.zeros((2, 2), dtype=complex)
    V = np.zeros((2, 2), dtype=complex)
    U[0, 0] = 2.0
    U[0, 1] = 0.3
    U[1:, 1:] = Ur
    V[1:, 1:] = Vr
    out = reduce_D_adapted((U, V), 1)
    assert np.allclose(out["A"], [[2.0]])
    assert out["positive"] and out["reduced"].positive


def test_reduce_D_adapted_rejects_bad_pattern():
    # the holomorphic frame is Lagrangian but has no zero V-block
    with pytest.raises(SubgroupRejection):
        reduce_D_adapted((np.eye(2), 1j * np.eye(2)), 1)


def test_build_delta_D_requires_adapted_flag():
    data = rotation_bundle()  # d_adapted False
    with pytest.raises(ValidationError):
        build_delta_D_tilde(data, {})


def _load(name):
    return load_scenario(builtin_scenario_path(name))


def test_delta_D_on_nonorientable_scenario(rng):
    # the transition has a negative-determinant shared block, so the
    # gluing exercises the |det A| convention
    sc = _load("abstract_k1_nonorientable")
    data = MetaplecticBundleData(sc.nerve, sc.mp_cocycle, sc.d_adapted, sc.k)
    gt = sc.mp_cocycle.transitions[("0", "1")][1](WEST)
    assert np.linalg.det(gt.g.g[: sc.k, : sc.k]) < 0
    dt = build_delta_D_tilde(data, sc.pair_sections, rng)
    assert dt.checks["invariance"] < 1e-8
    assert dt.checks["square_identity"] < 1e-9
    assert dt.checks["translation_law"] < 1e-8


def test_cross_check_global_sign(rng):
    sc = _load("abstract_k1_nonorientable")
    data = MetaplecticBundleData(sc.nerve, sc.mp_cocycle, sc.d_adapted, sc.k)
    out = cross_check(
        data,
        FrameSectionData(sc.sections_first),
        FrameSectionData(sc.sections_second),
        rng,
    )
    assert out["ok"]
    assert out["global_sign"] in (1, -1)
    assert out["glue_residual"] < 1e-8
    assert out["restriction_residual"] < 1e-9
