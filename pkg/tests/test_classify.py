import numpy as np
import pytest

from paracontact import classify as C

from conftest import corpus_points, corpus_structure
from test_structures import heisenberg

# constant φ-basis (e, φe, ξ) with g = diag(−1, 1, 1)
G = np.diag([-1.0, 1.0, 1.0])
PHI = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
XI = np.array([0, 0, 1.0])
ETA = XI.copy()
UP = np.array([1, 1, 0]) / np.sqrt(2)
UM = np.array([1, -1, 0]) / np.sqrt(2)


def type_one(lam):
    return np.diag([lam, -lam, 0.0])


def type_three(lam):
    return np.array([[0, -lam, 0], [lam, 0, 0], [0, 0, 0]], dtype=float)


def type_two(c, null=UM, other=UP):
    return c * np.outer(null, G @ null) / (null @ G @ other)


def classify(h):
    return C.classify_arrays(PHI, XI, ETA, G, h)


@pytest.mark.parametrize("lam", [0.1, 0.7, 3.0])
def test_type_one_and_three(lam):
    r = classify(type_one(lam))
    assert r.htype == C.TYPE_I and r.lam == pytest.approx(lam) and r.residual < 1e-12
    r = classify(type_three(lam))
    assert r.htype == C.TYPE_III and r.lam == pytest.approx(lam) and r.residual < 1e-12


@pytest.mark.parametrize("c", [0.3, -0.3, 2.0])
@pytest.mark.parametrize("lines", [(UM, UP), (UP, UM)])
def test_type_two_on_either_null_line(c, lines):
    h = type_two(c, *lines)
    assert np.abs(h @ h).max() < 1e-15 and np.abs(h).max() > 0.1
    r = classify(h)
    assert r.htype == C.TYPE_II and r.residual < 1e-12
    assert r.lam == 0.0


def test_zero_and_invalid():
    assert classify(np.zeros((3, 3))).htype == C.ZERO
    h = type_one(0.5)
    h[0, 2] = 0.1
    with pytest.raises(C.ClassificationError):
        classify(h)


def test_adapted_frame_reproduces_canonical_form():
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = rng.uniform(-2, 2)
        # a boosted φ-basis is again a φ-basis; h keeps its type
        B = np.array([[np.cosh(t), np.sinh(t), 0], [np.sinh(t), np.cosh(t), 0], [0, 0, 1]])
        for h in (type_one(0.8), type_three(0.8)):
            hb = np.linalg.solve(B, h @ B)
            gb = B.T @ G @ B
            pb = np.linalg.solve(B, PHI @ B)
            r = C.classify_arrays(pb, XI, ETA, gb, hb)
            F = r.adapted_frame
            assert np.abs(np.linalg.solve(F, hb @ F) - r.canonical).max() < 1e-9


@pytest.mark.parametrize("name,htype", [("example41", C.TYPE_I), ("example42", C.TYPE_II),
                                        ("example43-bridge", C.TYPE_III)])
def test_corpus_types(name, htype):
    _, S = corpus_structure(name)
    reps = C.classify_points(S, corpus_points(name))
    assert {r.htype for r in reps} == {htype}
    assert max(r.residual for r in reps) < 1e-9


def test_heisenberg_is_zero_type_and_kappa_minus_one():
    S = heisenberg()
    pts = S.chart.sample(10)
    assert {r.htype for r in C.classify_points(S, pts)} == {C.ZERO}
    for f in C.fit_points(S, pts):
        assert f.kappa == pytest.approx(-1.0, abs=1e-12)
        assert f.identifiable == (True, False, False)


def test_fit_example41(ex41):
    pts = corpus_points("example41")
    z = pts.values_array[:, 2]
    fits = C.fit_points(ex41, pts)
    assert max(abs(f.kappa - (z[i] ** 2 - 1)) for i, f in enumerate(fits)) < 1e-9
    assert max(abs(f.mu - 2 * (1 - z[i])) for i, f in enumerate(fits)) < 1e-9
    assert max(abs(f.nu) for f in fits) < 1e-9


def test_fit_example42_gauge(ex42):
    fits = C.fit_points(ex42, corpus_points("example42"))
    for f in fits:
        assert f.as_tuple() == pytest.approx((-1.0, 2.0, 0.0), abs=1e-10)
        assert f.identifiable == (True, True, False)


def test_solve_nullity_identifiability():
    A = np.array([[1.0, 2.0, 2.0], [0.0, 1.0, 1.0], [3.0, 0.0, 0.0]])
    y = A @ np.array([1.0, 2.0, 3.0])
    coef, res, ident = C.solve_nullity(A, y)
    # the last column repeats the second: only μ + ν is determined
    assert ident == (True, True, False)
    assert coef[0] == pytest.approx(1.0) and coef[1] == pytest.approx(5.0) and coef[2] == 0.0
    assert res < 1e-12


@pytest.mark.parametrize("name", ["example41", "example42", "example43-bridge"])
def test_frame_route_agrees_with_fit(name):
    _, S = corpus_structure(name)
    pts = corpus_points(name, 15)
    fits = C.fit_points(S, pts)
    frame = C.kmn_from_frame_points(S, pts)
    for a, b in zip(fits, frame):
        assert abs(a.kappa - b.kappa) < 1e-6
        assert abs(a.mu - b.mu) < 1e-6
        if b.identifiable[2]:
            assert abs(a.nu - b.nu) < 1e-6


@pytest.mark.parametrize("name", ["example41", "example42", "example43-bridge"])
def test_curvature_identity_suite(name):
    _, S = corpus_structure(name)
    rep = C.nullity_identity_suite(S, corpus_points(name))
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]


@pytest.mark.parametrize("name", ["example41", "example42", "example43-bridge"])
def test_ricci_decomposition(name):
    _, S = corpus_structure(name)
    out = C.ricci_decomposition(S, corpus_points(name, 10))
    assert max(d.residual for d in out) < 1e-7


def test_eigendistributions(ex41, ex42):
    pts = corpus_points("example41", 5)
    for i in range(len(pts)):
        (pp, pm), info = C.eigendistribution_projectors(ex41, pts.point(i))
        assert info["passed"], info
    with pytest.raises(C.NotApplicableError):
        C.eigendistribution_projectors(ex42, corpus_points("example42").point(0))


def test_type_scan_clusters(ex41):
    rep, reports = C.type_constancy_scan(ex41, corpus_points("example41"))
    assert rep.passed
    assert rep.data["counts"][C.TYPE_I] == len(reports)
    # 2y + z changes sign inside the sampling box: two clusters
    assert len(rep.data["clusters"]) == 2
