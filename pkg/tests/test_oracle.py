import numpy as np
import pytest

from paracontact import corpus as K
from paracontact import oracle as O

from conftest import corpus_points, corpus_structure


@pytest.mark.parametrize("name", K.CORPUS)
def test_symbolic_matches_finite_differences(name):
    _, S = corpus_structure(name)
    rep = O.oracle_report(S, corpus_points(name, 50))
    assert rep.passed, [(c.id, c.residual) for c in rep.checks]


def test_fd_partial_on_polynomial():
    vals = np.array([[0.3, -0.2, 1.1], [1.0, 2.0, 3.0]])
    f = lambda v: v[:, 0] ** 3 * v[:, 1]
    assert np.allclose(O.fd_partial(f, vals, 0, 1e-3), 3 * vals[:, 0] ** 2 * vals[:, 1], atol=1e-10)


def test_oracle_catches_a_wrong_symbol(ex41):
    pts = corpus_points("example41", 10)
    geo = ex41.geometry(pts)
    fd = O.fd_christoffel_at(ex41.g, pts.values_array)
    bad = geo.gamma.copy()
    bad[:, 0, 1, 2] += 1e-3
    assert np.abs(bad - fd).max() > 5e-4
