import numpy as np
import pytest

from paracontact import expr as E
from paracontact.classify import classify_points
from paracontact.geometry import Chart, MetricField, VectorField
from paracontact.harmonic import (
    harmonic_map_obstruction, harmonic_points, harmonicity_scan, rough_laplacian, rough_laplacian_coordinate,
)
from paracontact.structures import perturb_metric

from conftest import corpus_points, corpus_structure


def flat(signs):
    ch = Chart("flat", "xyz")
    g = np.empty((3, 3), dtype=object)
    g.fill(E.ZERO)
    for i, s in enumerate(signs):
        g[i, i] = E.const(s)
    return ch, MetricField(ch, g)


@pytest.mark.parametrize("signs,expected", [((1, 1, 1), 2.0), ((-1, 1, 1), -2.0)])
def test_flat_laplacian_sign(signs, expected):
    ch, g = flat(signs)
    V = VectorField(ch, [ch.parse("x^2"), E.ZERO, E.ZERO])
    pts = ch.sample(5)
    for lap in (rough_laplacian(g, V, pts), rough_laplacian_coordinate(g, V, pts)):
        assert np.allclose(lap, [[expected, 0, 0]] * 5)


def test_example41_laplacian(ex41):
    pts = corpus_points("example41")
    lap = rough_laplacian(ex41.g, ex41.xi, pts)
    lam = np.array([c.lam for c in classify_points(ex41, pts)])
    xi = pts.eval(ex41.xi.comps)
    assert np.abs(lap - 2 * (lam ** 2 + 1)[:, None] * xi).max() < 1e-8


def test_example42_laplacian(ex42):
    pts = corpus_points("example42")
    lap = rough_laplacian(ex42.g, ex42.xi, pts)
    assert np.abs(lap - 2 * pts.eval(ex42.xi.comps)).max() < 1e-9


@pytest.mark.parametrize("name", ["example41", "example42", "example43-bridge"])
def test_scan_passes(name):
    _, S = corpus_structure(name)
    rep, hr = harmonicity_scan(S, corpus_points(name))
    assert rep.passed, [(c.id, c.residual) for c in rep.failures()]
    assert rep.data["harmonic_vector_field"]
    assert all(h.consistent for h in hr)


def test_obstruction_vanishes_on_type_two(ex42):
    obs = harmonic_map_obstruction(ex42, corpus_points("example42"))
    assert np.abs(obs).max() < 1e-9


def test_perturbed_control_fails_both_ways(ex42):
    P = perturb_metric(ex42, 1, 1, 1e-2)
    hr = harmonic_points(P, corpus_points("example42"))
    assert not any(h.is_harmonic_vf for h in hr)
    assert all(h.ricci_eigen_defect > 1e-7 for h in hr)
    assert all(h.consistent for h in hr)
