"""End-to-end acceptance criteria.

Each test covers one acceptance criterion at its stated tolerance and
prints a single pass/fail line; run with ``pytest -s`` to see the lines
on passing runs as well.
"""

import numpy as np

from hfe import ball
from hfe.frames import (
    BallPoint,
    LagFramePair,
    MetaLagFrame,
    alpha_tilde,
    delta,
    delta_L_tilde,
    gamma,
    pairing_density,
    phi,
    phi_inv,
    validate_lagrangian,
)
from hfe.groups import MlElement, ml_lift, ml_mul, mp_deck, mp_lift
from hfe.sampling import (
    random_ball_point,
    random_complex,
    random_gl,
    random_gl_real,
    random_glkd,
    random_mlkd,
    random_ml,
    random_positive_frame,
    random_sp,
)
from hfe.tracking import principal_sqrt


def _verdict(label, ok, detail=""):
    tail = f" ({detail})" if detail else ""
    print(f"[{'PASS' if ok else 'FAIL'}] {label}{tail}")
    assert ok, f"{label}{tail}"


def _block_pair(rng, n, k):
    """Frame pair in D-adapted block form sharing a real A block."""
    A = random_gl_real(rng, k)
    frames = []
    for _ in range(2):
        B = random_complex(rng, (k, n - k))
        red = random_positive_frame(rng, n - k)
        U = np.zeros((n, n), dtype=complex)
        V = np.zeros((n, n), dtype=complex)
        U[:k, :k] = A
        U[:k, k:] = B
        U[k:, k:] = red.U
        V[k:, k:] = red.V
        frames.append(validate_lagrangian(U, V))
    return frames


def test_criterion_01_metalinear_group_law():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        c = ml_mul(random_ml(rng, n), random_ml(rng, n))
        d = np.linalg.det(c.A)
        worst = max(worst, abs(c.z * c.z - d) / abs(d))
    lift_ok = True
    for _ in range(50):
        A = random_gl(rng, int(rng.integers(1, 7)))
        p, m = ml_lift(A)
        lift_ok = lift_ok and np.array_equal(p.A, A) and np.array_equal(m.A, A)
        lift_ok = lift_ok and m.z == -p.z
    _verdict(
        "criterion 1: metalinear products keep z^2 = det on 1000 draws "
        "and both lift sheets project exactly",
        worst < 1e-9 and lift_ok,
        f"worst residual {worst:.2e}",
    )


def test_criterion_02_delta_transformation_law():
    rng = np.random.default_rng(102)
    worst = 0.0
    min_abs = float("inf")
    for n in range(1, 5):
        for k in range(0, n + 1):
            for _ in range(500):
                s1, s2 = _block_pair(rng, n, k)
                base = delta(LagFramePair(s1, s2, k))
                min_abs = min(min_abs, abs(base))
                g1, g2 = random_glkd(rng, n, k)
                detA = np.linalg.det(g1[:k, :k].real) if k else 1.0
                t1 = validate_lagrangian(s1.U @ g1, s1.V @ g1)
                t2 = validate_lagrangian(s2.U @ g2, s2.V @ g2)
                moved = delta(LagFramePair(t1, t2, k))
                target = (
                    np.conj(np.linalg.det(g1))
                    * np.linalg.det(g2)
                    / (detA * detA)
                    * base
                )
                worst = max(worst, abs(moved - target) / abs(target))
    _verdict(
        "criterion 2: pairing determinant transformation law on 500 draws "
        "per (n, k), n <= 4",
        worst < 1e-9 and min_abs > 1e-12,
        f"worst residual {worst:.2e}, min |delta| {min_abs:.2e}",
    )


def test_criterion_03_ball_chart_roundtrips():
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        fr = random_positive_frame(rng, n)
        W, C = phi(fr)
        back = phi_inv(W, C)
        worst = max(
            worst,
            float(np.max(np.abs(back.U - fr.U))),
            float(np.max(np.abs(back.V - fr.V))),
        )
    for _ in range(500):
        n = int(rng.integers(1, 5))
        W = random_ball_point(rng, n)
        C = random_gl(rng, n)
        W2, C2 = phi(phi_inv(W, C))
        worst = max(
            worst,
            float(np.max(np.abs(W2.W - W.W))),
            float(np.max(np.abs(C2.A - C))),
        )
    Wa, Ca = phi((np.array([[1.0]]), np.array([[1j]])))
    anchor_ok = (
        abs(Wa.W[0, 0]) < 1e-12 and abs(Ca.A[0, 0] - 2.0) < 1e-12
    )
    _verdict(
        "criterion 3: 1000 Ball-chart roundtrips and the origin anchor "
        "(W, C) = (0, 2)",
        worst < 1e-10 and anchor_ok,
        f"worst roundtrip {worst:.2e}",
    )


def test_criterion_04_automorphy_cocycle_and_cover():
    rng = np.random.default_rng(104)
    worst = 0.0
    proj_ok = True
    deck_ok = True
    for i in range(300):
        n = int(rng.integers(1, 4))
        g, h = random_sp(rng, n), random_sp(rng, n)
        W = random_ball_point(rng, n)
        hW, ah = ball.alpha_raw(h.g, W.W)
        _, ag = ball.alpha_raw(g.g, hW)
        _, agh = ball.alpha_raw(g.g @ h.g, W.W)
        scale = max(1.0, float(np.max(np.abs(ag @ ah))))
        worst = max(worst, float(np.max(np.abs(agh - ag @ ah))) / scale)
        if i < 60:  # tracked-sheet checks on a subsample
            gt = mp_lift(g)[0]
            at = alpha_tilde(gt, W)
            _, am = ball.alpha_raw(gt.g.g, W.W)
            proj_ok = proj_ok and np.array_equal(at.A, am)
            dk = alpha_tilde(mp_deck(gt), W)
            flipped = ml_mul(at, MlElement(np.eye(n), -1.0))
            deck_ok = (
                deck_ok
                and np.array_equal(dk.A, flipped.A)
                and dk.z == flipped.z
            )
    _verdict(
        "criterion 4: automorphy cocycle identity on 300 pairs, tracked "
        "factor projects exactly, deck acts by the sheet flip",
        worst < 1e-8 and proj_ok and deck_ok,
        f"worst cocycle residual {worst:.2e}",
    )


def test_criterion_05_gamma_square_and_path_independence(corpus_reports):
    rng = np.random.default_rng(105)
    worst_sq = 0.0
    worst_path = 0.0
    for i in range(1000):
        n = int(rng.integers(1, 5))
        W1, W2 = random_ball_point(rng, n), random_ball_point(rng, n)
        v = gamma(W1, W2)
        target = np.linalg.det(0.5 * (np.eye(n) - W1.W.conj().T @ W2.W))
        worst_sq = max(worst_sq, abs(v * v - target) / max(1.0, abs(target)))
        if i < 200:
            worst_path = max(
                worst_path,
                abs(v - gamma(W1, W2, via=0.3)),
                abs(v - gamma(W1, W2, via=0.7)),
            )
    anchor_flagged = all(
        any("2^(-n/2)" in note for note in report.notes)
        for report in corpus_reports.values()
    )
    _verdict(
        "criterion 5: gamma squares to its determinant on 1000 pairs, is "
        "path independent, and the origin anchor is flagged in reports",
        worst_sq < 1e-9 and worst_path < 1e-8 and anchor_flagged,
        f"square {worst_sq:.2e}, path {worst_path:.2e}",
    )


def _check(report, check_id):
    for c in report.checks:
        if c.check_id == check_id:
            return c
    raise AssertionError(f"missing check {check_id}")


def test_criterion_06_gluing_and_lift_classes(corpus_reports):
    ok = True
    details = []
    for name, classes in (("circle_mobius", 2), ("torus_grid", 4)):
        report = corpus_reports[name]
        glue = _check(report, "delta_tilde.glue")
        count = _check(report, "lift.class-count")
        unique = _check(report, "delta_tilde.unique-class")
        ok = ok and glue.max_residual < 1e-9
        ok = ok and count.details["classes"] == classes
        ok = ok and unique.passed and count.passed
        details.append(f"{name}: glue {glue.max_residual:.2e}, "
                       f"classes {count.details['classes']}")
    _verdict(
        "criterion 6: square-root datum glues on both twisted scenarios "
        "with exhaustively enumerated lift classes 2 and 4",
        ok,
        "; ".join(details),
    )


def test_criterion_07_self_compatibility(corpus_reports):
    report = corpus_reports["trivial_r2"]
    ok = True
    for name, eps in (("eps0", 0), ("eps1", 1)):
        c = _check(report, f"self_compat.{name}")
        ok = ok and c.passed and c.details["epsilon"] == eps
        ok = ok and c.max_residual < 1e-9  # squared identity
        ok = ok and c.details["normalized_min_real"] > 0
    _verdict(
        "criterion 7: self-compatibility realizes both parity classes "
        "with the squared identity and positive normalized values",
        ok,
    )


def test_criterion_08_recipe_on_metaplectic_scenarios(corpus_reports):
    ok = True
    details = []
    for name in ("circle_mobius", "abstract_k1_nonorientable"):
        report = corpus_reports[name]
        proj = _check(report, "recipe.projection")
        sheet = _check(report, "recipe.sheet-coboundary")
        ok = ok and proj.passed and proj.max_residual < 1e-10
        ok = ok and proj.details["cocycle"] < 1e-9
        ok = ok and sheet.passed
        details.append(f"{name}: projection {proj.max_residual:.2e}")
    _verdict(
        "criterion 8: the recipe projects onto the frame transitions, "
        "yields valid metalinear cocycles, and sheet changes are "
        "coboundaries",
        ok,
        "; ".join(details),
    )


def test_criterion_09_block_datum_and_cross_check(corpus_reports):
    ok = True
    details = []
    for name in ("circle_mobius", "abstract_k1_nonorientable"):
        c = _check(corpus_reports[name], "delta_D.glue")
        ok = ok and c.passed and c.max_residual < 1e-8
        ok = ok and c.details["square_identity"] < 1e-9
        details.append(f"{name}: glue {c.max_residual:.2e}")
    cc = _check(corpus_reports["abstract_k1_nonorientable"],
                "cross_check.agreement")
    ok = ok and cc.passed and cc.details["global_sign"] in (1, -1)
    details.append(f"global sign {cc.details['global_sign']}")
    _verdict(
        "criterion 9: block-form square-root datum glues (including a "
        "negative shared determinant) and matches the compatible "
        "construction up to one global sign",
        ok,
        "; ".join(details),
    )


def test_criterion_10_obstruction(corpus_reports):
    report = corpus_reports["sphere_octa"]
    lift = _check(report, "obstruction.lift")
    fc = _check(report, "obstruction.cochain.fundamental_class")
    tv = _check(report, "obstruction.cochain.trivial")
    ok = (
        lift.passed
        and lift.details["obstructed"] is True
        and lift.details["defect_feasible"] is False
        and fc.details["verdict"] == "infeasible"
        and tv.details["verdict"] == "feasible"
    )
    _verdict(
        "criterion 10: the sphere cocycle is obstructed with an "
        "infeasible defect class while the trivial cochain is feasible",
        ok,
    )


def test_criterion_11_density_invariance():
    rng = np.random.default_rng(111)
    worst_hd = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(0, n + 1))
        s1, s2 = _block_pair(rng, n, k)
        lifts = [rng.standard_normal(2 * n) for _ in range(2 * n - k)]
        nu1, nu2 = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        preq = complex(*rng.standard_normal(2))
        v = pairing_density(preq, nu1, nu2, LagFramePair(s1, s2, k), lifts)
        g1, g2 = random_glkd(rng, n, k)
        t1 = validate_lagrangian(s1.U @ g1, s1.V @ g1)
        t2 = validate_lagrangian(s2.U @ g2, s2.V @ g2)
        v2 = pairing_density(
            preq,
            nu1 * abs(np.linalg.det(g1)) ** -0.5,
            nu2 * abs(np.linalg.det(g2)) ** -0.5,
            LagFramePair(t1, t2, k),
            lifts,
        )
        worst_hd = max(worst_hd, abs(v2 - v) / max(1.0, abs(v)))
    worst_hf = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(0, n + 1))
        A = random_gl_real(rng, k)
        metas, frames = [], []
        for _ in range(2):
            B = random_complex(rng, (k, n - k))
            Wr = random_ball_point(rng, n - k).W
            Cr = random_gl(rng, n - k)
            W = np.zeros((n, n), dtype=complex)
            W[:k, :k] = np.eye(k)
            W[k:, k:] = Wr
            C = np.zeros((n, n), dtype=complex)
            C[:k, :k] = A
            C[:k, k:] = B
            C[k:, k:] = Cr
            metas.append(
                MetaLagFrame(BallPoint(W),
                             MlElement(C, principal_sqrt(np.linalg.det(C))))
            )
            frames.append(validate_lagrangian(*ball.phi_inv_raw(W, C)))
        lifts = [rng.standard_normal(2 * n) for _ in range(2 * n - k)]
        nu1, nu2 = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
        preq = complex(*rng.standard_normal(2))
        dt = delta_L_tilde((metas[0], metas[1]), k)
        v = pairing_density(
            preq, nu1, nu2, LagFramePair(frames[0], frames[1], k), lifts,
            "half-form", delta_tilde_value=dt,
        )
        m1, m2 = random_mlkd(rng, n, k)
        moved = (
            MetaLagFrame(metas[0].W, ml_mul(metas[0].C, m1)),
            MetaLagFrame(metas[1].W, ml_mul(metas[1].C, m2)),
        )
        dt2 = delta_L_tilde(moved, k)
        moved_frames = [
            validate_lagrangian(f.U @ m.A, f.V @ m.A)
            for f, m in zip(frames, (m1, m2))
        ]
        v2 = pairing_density(
            preq, nu1 / m1.z, nu2 / m2.z,
            LagFramePair(moved_frames[0], moved_frames[1], k), lifts,
            "half-form", delta_tilde_value=dt2,
        )
        worst_hf = max(worst_hf, abs(v2 - v) / max(1.0, abs(v)))
    _verdict(
        "criterion 11: pairing densities are invariant under frame "
        "changes on 200 half-density and 200 half-form draws",
        worst_hd < 1e-9 and worst_hf < 1e-9,
        f"half-density {worst_hd:.2e}, half-form {worst_hf:.2e}",
    )
