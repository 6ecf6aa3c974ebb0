import numpy as np
import pytest

from paracontact import bridge as B
from paracontact import expr as E
from paracontact.classify import TYPE_II, TYPE_III, classify_points, fit_points, nullity_identity_suite
from paracontact.geometry import Chart

from conftest import corpus_points


def w(pts):
    x, y, z = pts.values_array.T
    return 2 * x + np.exp(y + z)


def test_contact_validation(ex43, zetamu):
    for S, name in ((ex43, "example43"), (zetamu, "zetamu-plus-1")):
        rep = B.validate_contact(S, corpus_points(name))
        assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
        assert rep.children, "frame equations should run where h != 0"


def test_flat_phi_zero_contact_invalid():
    ch = Chart("flat", "xyz")
    C = B.build_contact_from_coordinate(ch, [[0] * 3] * 3, [1, 0, 0], [1, 0, 0], np.eye(3).tolist())
    assert not B.validate_contact(C, ch.sample(5)).passed


def test_example43_contact_fit(ex43):
    pts = corpus_points("example43")
    W = w(pts)
    fits = B.fit_contact_kmn(ex43, pts)
    assert np.abs([f.kappa for f in fits] - (1 - 1 / W ** 2)).max() < 1e-9
    assert np.abs(np.array([f.mu for f in fits]) - 2).max() < 1e-9
    assert np.abs([f.nu for f in fits] + 2 / W).max() < 1e-9
    rep, _ = B.contact_identity_suite(ex43, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]


def test_boeckx_invariant():
    k, m = E.var("k"), E.var("m")
    I = B.boeckx_invariant(k, m)
    assert E.evaluate(I, {"k": 0.0, "m": 0.0}) == 1.0
    assert E.evaluate(B.boeckx_invariant(k, E.const(2.0)), {"k": 0.3}) == 0.0


def test_boeckx_values(ex43, zetamu):
    I, xiI = B.boeckx_values(ex43, corpus_points("example43"))
    assert np.abs(I).max() < 1e-9 and np.abs(xiI).max() < 1e-9
    I, xiI = B.boeckx_values(zetamu, corpus_points("zetamu-plus-1"))
    assert np.abs(I + 1).max() < 1e-9 and np.abs(xiI).max() < 1e-6


def test_example43_induced(ex43):
    pts = corpus_points("example43")
    P = B.induce_paracontact(ex43, pts)
    W = w(pts)
    reps = classify_points(P, pts)
    assert {r.htype for r in reps} == {TYPE_III}
    assert np.abs(np.array([r.lam for r in reps]) - 1 / W).max() < 1e-9
    fits = fit_points(P, pts)
    assert np.abs([f.kappa for f in fits] - (-1 - 1 / W ** 2)).max() < 1e-9
    assert np.abs(np.array([f.mu for f in fits]) - 2).max() < 1e-9
    assert np.abs([f.nu for f in fits] - 2 / W).max() < 1e-9


def test_bridge_report_example43(ex43):
    pts = corpus_points("example43")
    rep, P = B.bridge_report(ex43, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
    assert rep.data["induced_types"] == [TYPE_III]


def test_bridge_laws_zetamu(zetamu):
    pts = corpus_points("zetamu-plus-1")
    rep, P = B.bridge_report(zetamu, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
    assert rep.data["induced_types"] == [TYPE_II]
    lap, coef = B.induced_laplacian_of_xi(P, pts)
    assert np.abs(coef - 2).max() < 1e-7


def test_zetamu_induced_mirrored_type_ii_frame(zetamu):
    # here φ fixes the h-null line with eigenvalue −1, so the adapted frame is mirrored
    pts = corpus_points("zetamu-plus-1")
    P = B.induce_paracontact(zetamu, pts)
    assert {r.phi_sign for r in classify_points(P, pts)} == {-1}
    rep = nullity_identity_suite(P, pts)
    assert rep.get("nabla_xi_h_typed").passed, rep.get("nabla_xi_h_typed").residual


def test_related_connection_needs_square_root_factor(ex43):
    pts = corpus_points("example43", 10)
    P = B.induce_paracontact(ex43, pts)
    rep = B.bridge_connection_check(ex43, P, pts)
    assert rep.get("related_connection").passed
    assert rep.data["related_connection_with_factor_1_minus_kappa"] > 1e-2


@pytest.mark.parametrize("branch,sign", [("plus", 1), ("minus", -1)])
def test_zetamu_model(branch, sign):
    C = B.build_zetamu_model(branch, 1.0)
    pts = C.chart.sample(30)
    assert B.validate_contact(C, pts).passed
    rep = B.zetamu_checks(C, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
    assert rep.data["branch_observed"] == branch
    x = pts.values_array[:, 0]
    fits = B.fit_contact_kmn(C, pts)
    assert np.abs([f.kappa for f in fits] - (1 - np.exp(2 * x))).max() < 1e-8
    assert np.abs([f.mu for f in fits] - 2 * (1 + sign * np.exp(x))).max() < 1e-8
    assert np.abs(np.array([f.nu for f in fits]) - 1).max() < 1e-8


def test_zetamu_with_nontrivial_params():
    C = B.build_zetamu_model("plus", 0.5, f="z^2", r="2+sin(z)", s="z")
    pts = C.chart.sample(30)
    assert B.validate_contact(C, pts).passed
    assert B.zetamu_checks(C, pts).passed
    rep, _ = B.bridge_report(C, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]


@pytest.mark.parametrize("kw", [{"r": "0"}, {"nu": 0.0}, {"branch": "sideways"}, {"f": "x"}])
def test_zetamu_bad_params(kw):
    args = {"branch": "plus", "nu": 1.0}
    args.update(kw)
    with pytest.raises(B.StructureError):
        B.build_zetamu_model(**args)


def test_sasakian_degeneracy():
    # the model's λ = r e^{νx} is tiny at x = -30
    C = B.build_zetamu_model("plus", 1.0, bounds={"x": (-40.0, -30.0), "y": (-1, 1), "z": (-1, 1)})
    with pytest.raises(B.SasakianDegeneracyError):
        B.induce_paracontact(C, C.chart.sample(10))
