from fractions import Fraction

import numpy as np
import pytest

from paracontact import deform as D
from paracontact.classify import TYPE_I, TYPE_II, classify_points
from paracontact.structures import validate

from conftest import corpus_points

ALPHAS = (0.5, 2.0, 3.0)


def test_closed_form_examples():
    assert D.kmn_transform(-1, 2, 0, 2) == (-1, 2, 0)
    assert D.kmn_transform(3, -2, 0, 2) == (0, 0, 0)
    assert D.kmn_transform(0.3, 1.7, -0.4, 1) == pytest.approx((0.3, 1.7, -0.4))


@pytest.mark.parametrize("alpha", [0, -1, float("nan")])
def test_nonpositive_alpha_rejected(ex42, alpha):
    with pytest.raises(D.DeformationError):
        D.d_homothetic(ex42, alpha)


def test_identity_deformation(ex41):
    pts = corpus_points("example41", 10)
    S1 = D.d_homothetic(ex41, 1.0)
    for key in ("phi", "xi", "eta", "g", "h"):
        assert np.abs(pts.eval(getattr(S1, key).comps) - pts.eval(getattr(ex41, key).comps)).max() == 0.0


@pytest.mark.parametrize("name", ["example41", "example42"])
@pytest.mark.parametrize("alpha", ALPHAS)
def test_laws(name, alpha, request):
    S = request.getfixturevalue("ex41" if name == "example41" else "ex42")
    pts = corpus_points(name, 20)
    rep, Db = D.deformation_report(S, alpha, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
    assert validate(Db, pts).passed
    for cid in ("connection", "curvature", "h_bar"):
        assert rep.get(cid).residual < 1e-8


@pytest.mark.parametrize("alpha", ALPHAS)
def test_type_two_is_stable(ex42, alpha):
    pts = corpus_points("example42", 20)
    assert {c.htype for c in classify_points(D.d_homothetic(ex42, alpha), pts)} == {TYPE_II}


def test_example41_deformed_lambda_tracks_kappa(ex41):
    pts = corpus_points("example41", 20)
    Db = D.d_homothetic(ex41, 2.0)
    reps = classify_points(Db, pts)
    assert {r.htype for r in reps} == {TYPE_I}
    z = pts.values_array[:, 2]
    kb, _, _ = D.kmn_transform(z ** 2 - 1, 2 * (1 - z), 0 * z, 2.0)
    # TypeI: λ̄² = 1 + κ̄
    assert np.abs(np.array([r.lam for r in reps]) ** 2 - (1 + kb)).max() < 1e-9


def test_group_law(ex41, ex42):
    for S, name in ((ex41, "example41"), (ex42, "example42")):
        assert D.group_law_check(S, 2.0, 0.5, corpus_points(name, 10)).passed
        assert D.group_law_check(S, 3.0, 1.5, corpus_points(name, 10)).passed


@pytest.mark.parametrize("triple", [(-1, 2, 0), (3, -2, 0), (Fraction(1, 3), Fraction(-5, 7), Fraction(2, 9))])
@pytest.mark.parametrize("ab", [(2, 3), (Fraction(1, 2), Fraction(7, 5))])
def test_closed_form_group_law_exact(triple, ab):
    ok, two, one = D.kmn_group_law(triple, *ab)
    assert ok and two == one
