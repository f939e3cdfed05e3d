import numpy as np
import pytest
from hypothesis import given, strategies as st

from hfe.cech import (
    Cocycle,
    Nerve,
    OverlapComponent,
    SamplePoint,
    SignCochain,
    TriplePoint,
    gf2_solve,
    lift_double_cover,
    lifts_equivalent,
    push_cocycle,
    validate_cocycle,
    z2_coboundary_solve,
)
from hfe.errors import TrackingError, ValidationError
from hfe.groups import MlElement


def _pt(pid, params=()):
    return SamplePoint(pid, tuple(params))


def _const(value):
    M = np.array(value, dtype=complex)
    return lambda pt: M


def triangle_nerve(points=("p",)):
    comps = (OverlapComponent(
        tuple(_pt(p) for p in points),
        tuple((i, i + 1) for i in range(len(points) - 1)),
    ),)
    overlaps = {("a", "b"): comps, ("b", "c"): comps, ("a", "c"): comps}
    triples = {
        ("a", "b", "c"): tuple(
            TriplePoint(p, {("a", "b"): (0, i), ("b", "c"): (0, i),
                            ("a", "c"): (0, i)})
            for i, p in enumerate(points)
        )
    }
    return Nerve(("a", "b", "c"), overlaps, triples)


def circle_nerve():
    comps = (
        OverlapComponent((_pt("east"),)),
        OverlapComponent((_pt("west"),)),
    )
    return Nerve(("a", "b"), {("a", "b"): comps})


def test_nerve_rejects_malformed():
    with pytest.raises(ValidationError):
        Nerve(("a", "a"))
    with pytest.raises(ValidationError):
        Nerve(("a", "b"), {("b", "a"): (OverlapComponent((_pt("p"),)),)})
    with pytest.raises(ValidationError):
        OverlapComponent((_pt("p"), _pt("q")))  # disconnected


def test_validate_cocycle_accepts_consistent_triangle():
    nerve = triangle_nerve()
    c = Cocycle("Gl", 1, 0, {
        ("a", "b"): (_const([[2.0]]),),
        ("b", "c"): (_const([[3.0]]),),
        ("a", "c"): (_const([[6.0]]),),
    })
    out = validate_cocycle(nerve, c)
    assert out["ok"] and out["max_residual"] < 1e-12


def test_validate_cocycle_flags_broken_identity():
    nerve = triangle_nerve()
    c = Cocycle("Gl", 1, 0, {
        ("a", "b"): (_const([[2.0]]),),
        ("b", "c"): (_const([[3.0]]),),
        ("a", "c"): (_const([[5.0]]),),
    })
    out = validate_cocycle(nerve, c)
    assert not out["ok"]
    assert any(f[0] == "cocycle" for f in out["failures"])


def test_cocycle_reversed_pair_is_inverse():
    c = Cocycle("Gl", 1, 0, {("a", "b"): (_const([[4.0]]),)})
    v = c.value("b", "a", 0, _pt("p"))
    assert np.allclose(v, [[0.25]])


def test_push_cocycle_det_and_pair_tags():
    c = Cocycle("Gl", 2, 0, {("a", "b"): (_const([[2.0, 1.0], [0.0, 3.0]]),)})
    d = push_cocycle(c, "det")
    assert np.allclose(d.transitions[("a", "b")][0](_pt("p")), [[6.0]])
    pc = Cocycle("Glkd", 1, 0, {
        ("a", "b"): ((lambda pt: (np.array([[2.0]]), np.array([[5.0]]))),)
    })
    first = push_cocycle(pc, "pair_first")
    assert np.allclose(first.transitions[("a", "b")][0](_pt("p")), [[2.0]])


def test_lift_double_cover_correctable_defect():
    # three -1 transitions on a triangle: principal roots give defect -1,
    # which is a coboundary of component flips
    nerve = triangle_nerve()
    c = Cocycle("Gl", 1, 0, {
        ("a", "b"): (_const([[-1.0]]),),
        ("b", "c"): (_const([[-1.0]]),),
        ("a", "c"): (_const([[1.0]]),),
    })
    lifted = lift_double_cover(nerve, c)
    assert isinstance(lifted, Cocycle) and lifted.group == "Ml"
    assert validate_cocycle(nerve, lifted)["ok"]


def _winding(pt):
    return np.array([[np.exp(2j * np.pi * pt.params[0])]])


def test_lift_double_cover_obstructed():
    # the ab transition winds once around zero between the two triple
    # points while bc and ac stay near 1, so the two sign defects put
    # contradictory demands on the same three components
    ab_pts = tuple(_pt(f"t{i}", (i / 8.0,)) for i in range(9))
    ab_comp = OverlapComponent(ab_pts, tuple((i, i + 1) for i in range(8)))
    short = OverlapComponent((ab_pts[0], ab_pts[8]), ((0, 1),))
    nerve = Nerve(
        ("a", "b", "c"),
        {("a", "b"): (ab_comp,), ("b", "c"): (short,), ("a", "c"): (short,)},
        {("a", "b", "c"): (
            TriplePoint("t0", {("a", "b"): (0, 0), ("b", "c"): (0, 0),
                               ("a", "c"): (0, 0)}),
            TriplePoint("t8", {("a", "b"): (0, 8), ("b", "c"): (0, 1),
                               ("a", "c"): (0, 1)}),
        )},
    )
    c = Cocycle("Gl", 1, 0, {
        ("a", "b"): (_winding,),
        ("b", "c"): (_const([[1.0]]),),
        ("a", "c"): (_winding,),  # equals 1 at both triple points
    })
    lifted = lift_double_cover(nerve, c)
    assert isinstance(lifted, SignCochain)
    assert set(lifted.values.values()) == {1, -1}
    assert z2_coboundary_solve(nerve, lifted) is None


def test_lift_tracks_branch_along_component():
    # a determinant winding once around zero forces the other sheet at
    # the far end of the component
    pts = tuple(_pt(f"t{i}", (i / 8.0,)) for i in range(9))
    comp = OverlapComponent(pts, tuple((i, i + 1) for i in range(8)))
    nerve = Nerve(("a", "b"), {("a", "b"): (comp,)})
    lifted = lift_double_cover(nerve, Cocycle("Gl", 1, 0, {("a", "b"): (_winding,)}))
    z_end = lifted.transitions[("a", "b")][0](pts[-1]).z
    assert abs(z_end + 1.0) < 1e-9  # continued onto the other sheet


def test_lift_rejects_too_coarse_edges():
    pts = (_pt("p", (0.0,)), _pt("q", (0.5,)))
    comp = OverlapComponent(pts, ((0, 1),))
    nerve = Nerve(("a", "b"), {("a", "b"): (comp,)})

    with pytest.raises(TrackingError):
        lift_double_cover(nerve, Cocycle("Gl", 1, 0, {("a", "b"): (_winding,)}))


def test_lifts_equivalent_witness_and_rejection():
    nerve = circle_nerve()

    def ml(sign):
        el = MlElement(np.array([[1.0]]), float(sign))
        return lambda pt: el

    base = Cocycle("Ml", 1, 0, {("a", "b"): (ml(1), ml(1))})
    both = Cocycle("Ml", 1, 0, {("a", "b"): (ml(-1), ml(-1))})
    one = Cocycle("Ml", 1, 0, {("a", "b"): (ml(-1), ml(1))})
    witness = lifts_equivalent(nerve, base, both)
    assert witness is not None
    assert witness["a"] * witness["b"] == -1
    assert lifts_equivalent(nerve, base, one) is None


def test_z2_coboundary_solve_feasible_case():
    nerve = triangle_nerve()
    cochain = SignCochain(2, {(("a", "b", "c"), "p"): -1})
    sol = z2_coboundary_solve(nerve, cochain)
    assert sol is not None and sol.degree == 1
    assert np.prod([v for v in sol.values.values()]) == -1


@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2 ** 12))
def test_gf2_solve_recovers_consistent_systems(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2, size=(m, n)).astype(np.uint8)
    x = rng.integers(0, 2, size=n).astype(np.uint8)
    b = (A @ x) & 1
    sol = gf2_solve(A, b)
    assert sol is not None
    assert np.array_equal((A @ sol) & 1, b)


def test_gf2_solve_infeasible():
    A = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    b = np.array([0, 1], dtype=np.uint8)
    assert gf2_solve(A, b) is None
