import math

import numpy as np
import pytest

from paracontact import expr as E

XYZ = ("x", "y", "z")


def ev(text, **p):
    return E.evaluate(E.parse(text, XYZ), p)


def test_parse_shapes():
    e = E.parse("2*y+z", XYZ)
    assert e.op == "add"
    assert [a.op for a in e.args] == ["mul", "var"]
    e = E.parse("exp(y+z)", XYZ)
    assert e.op == "exp" and e.args[0].op == "add"


def test_precedence():
    assert ev("-2^2") == -4.0
    assert ev("2^3^2") == 512.0
    assert ev("8/2/2") == 2.0
    assert ev("1-2-3") == -4.0
    assert ev("2*(1+3)") == 8.0
    assert ev("-x*y", x=2, y=3) == -6.0


def test_syntax_error_offset():
    with pytest.raises(E.ParseError) as err:
        E.parse("2*(y+", XYZ)
    assert err.value.offset == 6


def test_unknown_identifier():
    with pytest.raises(E.UnknownIdentifierError) as err:
        E.parse("2*w", XYZ)
    assert err.value.name == "w"


def test_differentiate_examples():
    assert E.differentiate(E.parse("2*y+z", XYZ), "z").is_const(1.0)
    assert E.differentiate(E.parse("exp(y+z)", XYZ), "x").is_const(0.0)
    d = E.differentiate(E.parse("z^2", XYZ), "z")
    assert E.evaluate(d, {"z": 1.5}) == 3.0


def test_evaluate_examples():
    assert ev("2*y+z", x=0, y=1, z=3) == 5.0
    assert ev("exp(y+z)", y=0, z=0) == 1.0


@pytest.mark.parametrize("text,point", [
    ("1/(2*y-z)", {"x": 0, "y": 1, "z": 2}),
    ("log(x)", {"x": -1.0}),
    ("sqrt(x-1)", {"x": 0.0}),
])
def test_domain_errors(text, point):
    with pytest.raises(E.DomainError):
        E.evaluate(E.parse(text, XYZ), point)


def test_hash_consing_and_immutability():
    a = E.parse("y+z", XYZ)
    assert a is E.parse("y+z", XYZ)
    with pytest.raises(AttributeError):
        a.op = "mul"


FD_CASES = [
    "2*y+z", "exp(y+z)", "sqrt(2*x+exp(y+z))", "x^3*y-z/(1+y^2)", "log(1+x^2)*cos(y)",
    "sin(x*z)^2", "abs(y-3)", "(y^2+z^2)/2*sqrt(2*x+exp(y+z))", "z*x-y/(2*z)",
]


@pytest.mark.parametrize("text", FD_CASES)
def test_derivative_matches_central_difference(text):
    e = E.parse(text, XYZ)
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = {"x": rng.uniform(0.1, 1), "y": rng.uniform(0.2, 1), "z": rng.uniform(0.5, 1.5)}
        for v in XYZ:
            h = 1e-6
            up, dn = dict(p), dict(p)
            up[v] += h
            dn[v] -= h
            fd = (E.evaluate(e, up) - E.evaluate(e, dn)) / (2 * h)
            sym = E.evaluate(E.differentiate(e, v), p)
            assert abs(sym - fd) <= 1e-5 * max(1.0, abs(fd))


def test_vector_evaluator_matches_scalar():
    e = E.parse("sqrt(2*x+exp(y+z))*sin(z)", XYZ)
    xs = np.linspace(0.1, 1, 5)
    vals = E.Evaluator({"x": xs, "y": xs / 2, "z": -xs})(e)
    for i, x in enumerate(xs):
        assert vals[i] == pytest.approx(E.evaluate(e, {"x": x, "y": x / 2, "z": -x}), rel=1e-15)
    assert math.isfinite(float(vals.sum()))
