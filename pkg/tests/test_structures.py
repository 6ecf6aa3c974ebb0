import numpy as np
import pytest

from paracontact import expr as E
from paracontact.geometry import Chart, VectorField
from paracontact.structures import (
    FramePresentation, ParacontactStructure, StructureError, ValidationError, build_from_coordinate,
    build_from_frame, is_K_paracontact, is_para_sasakian_3d, require_valid, paracontact_identity_suite, validate,
)

from conftest import corpus_points, corpus_structure


def heisenberg():
    """Para-Sasakian model: ξ = ∂z and a z-invariant frame, so h = 0."""
    ch = Chart("heisenberg", "xyz")
    fr = [VectorField(ch, [E.ONE, E.ZERO, ch.parse("2*y")]), VectorField(ch, [E.ZERO, E.ONE, E.ZERO]),
          VectorField(ch, [E.ZERO, E.ZERO, E.ONE])]
    return build_from_frame(ch, FramePresentation(fr, [1, -1, 1], [[0, 1, 0], [1, 0, 0], [0, 0, 0]]), 2)


@pytest.mark.parametrize("name", ["example41", "example42", "example43-bridge"])
def test_corpus_structures_validate(name):
    _, S = corpus_structure(name)
    pts = corpus_points(name)
    rep = validate(S, pts)
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
    assert rep.get("signature").detail["value"] == [2, 1]


@pytest.mark.parametrize("name", ["example41", "example42", "example43-bridge"])
def test_identity_suite(name):
    _, S = corpus_structure(name)
    rep = paracontact_identity_suite(S, corpus_points(name))
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]


def test_heisenberg_is_para_sasakian():
    S = heisenberg()
    pts = S.chart.sample(20)
    assert validate(S, pts).passed
    k, rep = is_para_sasakian_3d(S, pts)
    assert k
    assert rep.data["curvature_identity_holds"]
    assert paracontact_identity_suite(S, pts).passed


def test_non_k_paracontact(ex41):
    k, rep = is_K_paracontact(ex41, corpus_points("example41"))
    assert not k
    assert rep.data["max_h"] > 0.1


def test_printed_metric_localizes_failing_axioms():
    _, S = corpus_structure("example42-printed")
    rep = validate(S, corpus_points("example42-printed"))
    bad = {c.id for c in rep.failures()}
    assert bad == {"metric_compatible", "contact_condition"}
    c = rep.get("metric_compatible")
    assert c.worst_point is not None and c.residual > 1e-2
    assert rep.get("eta_xi").passed and rep.get("phi_squared").passed


def test_require_valid_raises():
    _, S = corpus_structure("example42-printed")
    with pytest.raises(ValidationError) as err:
        require_valid(S, corpus_points("example42-printed"))
    assert not err.value.report.passed


def test_phi_zero_is_invalid():
    ch = Chart("flat", "xyz")
    z = [[0] * 3] * 3
    S = build_from_coordinate(ch, z, [1, 0, 0], [1, 0, 0], [[1, 0, 0], [0, 1, 0], [0, 0, -1]])
    rep = validate(S, ch.sample(5))
    assert not rep.passed
    assert not rep.get("phi_squared").passed


def test_shape_errors():
    ch = Chart("c", "xyz")
    with pytest.raises(StructureError):
        build_from_coordinate(ch, [[0, 0], [0, 0]], [1, 0, 0], [1, 0, 0], np.eye(3).tolist())
    with pytest.raises(StructureError):
        FramePresentation([VectorField(ch, [1, 0, 0])] * 2, "pseudo-orthonormal", [[0, 0], [0, 0]])
    with pytest.raises(StructureError):
        ParacontactStructure(Chart("even", "xy"), [[0, 0], [0, 0]], [1, 0], [1, 0], [[1, 0], [0, 1]])


def test_frame_presentation_recovers_gram(ex42):
    pts = corpus_points("example42")
    F = pts.eval(ex42.frame_matrix)
    g = pts.eval(ex42.g.comps)
    G = np.einsum("pai,pab,pbj->pij", F, g, F)
    want = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    assert np.abs(G - want).max() < 1e-12


def test_example42_h_in_coordinates(ex42):
    # h ∂z = ∂y, every other column zero
    h = corpus_points("example42").eval(ex42.h.comps)
    want = np.zeros((3, 3))
    want[1, 2] = 1.0
    assert np.abs(h - want).max() < 1e-12
