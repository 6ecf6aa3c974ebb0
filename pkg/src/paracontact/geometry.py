"""Pseudo-Riemannian tensor calculus on a single coordinate chart.

Fields hold symbolic component expressions (numpy object arrays of Expr).
Everything that needs derivatives is done symbolically; pointwise algebra
(contractions, frames, eigen-decompositions) is done numerically on a
PointSet, where all component arrays carry the point index first.

Index conventions: an EndField matrix T[i, j] is T^i_j, so T(X) = T @ X.
Christoffel symbols are stored as gamma[k, i, j] = Γ^k_ij, and the Riemann
tensor as riem[l, k, i, j] with R(X, Y)Z = riem[l, k, i, j] Z^k X^i Y^j, where
R(X, Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z.
"""

import itertools
import zlib

import numpy as np
from scipy.stats import qmc

from . import expr as E


class GeometryError(Exception):
    pass


class ChartMismatchError(GeometryError):
    pass


class DegenerateMetricError(GeometryError):
    pass


class SamplingError(GeometryError):
    pass


class Chart:
    """Named coordinates with domain constraints and sampling bounds.

    `constraints` is a sequence of (Expr, kind) with kind "nonzero" or
    "positive"; `bounds` maps each coordinate to a closed interval.
    """

    def __init__(self, name, coords, constraints=(), bounds=None):
        self.name = name
        self.coords = tuple(coords)
        if len(set(self.coords)) != len(self.coords):
            raise GeometryError("duplicate coordinate names")
        self.dim = len(self.coords)
        cons = []
        for c in constraints:
            e, kind = c if isinstance(c, tuple) else (c, "nonzero")
            if isinstance(e, str):
                e = E.parse(e, self.coords)
            if kind not in ("nonzero", "positive"):
                raise GeometryError(f"unknown constraint kind {kind!r}")
            cons.append((e, kind))
        self.constraints = tuple(cons)
        bounds = bounds or {c: (-1.0, 1.0) for c in self.coords}
        self.bounds = {c: (float(bounds[c][0]), float(bounds[c][1])) for c in self.coords}
        self.symbols = tuple(E.var(c) for c in self.coords)

    def __repr__(self):
        return f"Chart({self.name!r}, {self.coords})"

    def parse(self, text):
        return E.parse(text, self.coords)

    def constraint_margin(self, values):
        """Smallest constraint margin at each point (positive means inside)."""
        ev = E.Evaluator({c: values[:, i] for i, c in enumerate(self.coords)})
        margin = np.full(len(values), np.inf)
        for e, kind in self.constraints:
            v = ev(e)
            margin = np.minimum(margin, np.abs(v) if kind == "nonzero" else v)
        return margin

    def sample(self, n=100, seed=42, margin=1e-6):
        """Deterministic low-discrepancy sample of `n` interior points."""
        key = zlib.crc32(f"{self.name}:{seed}".encode()) & 0x7FFFFFFF
        engine = qmc.Halton(d=self.dim, scramble=True, seed=key)
        lo = np.array([self.bounds[c][0] for c in self.coords])
        hi = np.array([self.bounds[c][1] for c in self.coords])
        accepted = []
        drawn = 0
        while sum(len(a) for a in accepted) < n:
            if drawn > 200 * max(n, 10):
                raise SamplingError(f"chart {self.name}: too few points satisfy the constraints")
            batch = qmc.scale(engine.random(max(n, 16)), lo, hi)
            drawn += len(batch)
            if self.constraints:
                try:
                    ok = self.constraint_margin(batch) > margin
                except E.DomainError:
                    ok = np.array([self._point_ok(p, margin) for p in batch])
                batch = batch[ok]
            accepted.append(batch)
        return PointSet(self, np.concatenate(accepted)[:n])

    def _point_ok(self, p, margin):
        try:
            return bool(self.constraint_margin(p[None, :])[0] > margin)
        except E.DomainError:
            return False

    def points(self, values):
        return PointSet(self, np.atleast_2d(np.asarray(values, dtype=float)))


def _obj(shape):
    out = np.empty(shape, dtype=object)
    out.fill(E.ZERO)
    return out


def to_obj(a):
    arr = np.array(a, dtype=object)
    flat = arr.reshape(-1)
    for k, x in enumerate(flat):
        flat[k] = E.as_expr(x)
    return arr


class PointSet:
    """A batch of points of a chart with a shared evaluation cache."""

    def __init__(self, chart, values):
        self.chart = chart
        self.values_array = np.asarray(values, dtype=float)
        self.n = len(self.values_array)
        self._ev = E.Evaluator({c: self.values_array[:, i] for i, c in enumerate(chart.coords)})

    def __len__(self):
        return self.n

    def point(self, i):
        return {c: float(self.values_array[i, k]) for k, c in enumerate(self.chart.coords)}

    def subset(self, idx):
        return PointSet(self.chart, self.values_array[idx])

    def eval(self, a):
        """Numeric values of a field or Expr array, points on axis 0."""
        comps = a.comps if isinstance(a, Field) else a
        if isinstance(comps, E.Expr):
            return self._ev(comps)
        out = self._ev(np.asarray(comps, dtype=object))
        return np.moveaxis(out, -1, 0)


def grad(a, chart):
    """Symbolic partial derivatives: result[..., i] = ∂_i a[...]."""
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape + (chart.dim,), dtype=object)
    for idx in np.ndindex(arr.shape):
        for i, c in enumerate(chart.coords):
            out[idx + (i,)] = E.differentiate(arr[idx], c)
    return out


class Field:
    rank_shape = None

    def __init__(self, chart, comps):
        self.chart = chart
        comps = to_obj(comps)
        expected = self.expected_shape(chart.dim)
        if comps.shape != expected:
            raise GeometryError(f"{type(self).__name__} needs shape {expected}, got {comps.shape}")
        self.comps = comps

    @classmethod
    def expected_shape(cls, d):
        return ()

    def _check(self, other):
        if other.chart is not self.chart and other.chart.coords != self.chart.coords:
            raise ChartMismatchError(f"{self.chart} vs {other.chart}")

    def __repr__(self):
        return f"{type(self).__name__}({self.chart.name})"

    def eval(self, pts):
        return pts.eval(self.comps)


class ScalarField(Field):
    @classmethod
    def expected_shape(cls, d):
        return ()

    @property
    def expr(self):
        return self.comps[()]


class VectorField(Field):
    @classmethod
    def expected_shape(cls, d):
        return (d,)

    def __add__(self, other):
        self._check(other)
        return VectorField(self.chart, self.comps + other.comps)

    def __sub__(self, other):
        self._check(other)
        return VectorField(self.chart, self.comps - other.comps)

    def scale(self, f):
        f = E.as_expr(f)
        return VectorField(self.chart, [f * c for c in self.comps])

    def apply(self, f):
        """Directional derivative X(f) of a scalar expression."""
        return _sum(self.comps[i] * E.differentiate(E.as_expr(f), c)
                    for i, c in enumerate(self.chart.coords))


class OneForm(Field):
    @classmethod
    def expected_shape(cls, d):
        return (d,)

    def __call__(self, X):
        return _sum(a * b for a, b in zip(self.comps, X.comps))


class EndField(Field):
    @classmethod
    def expected_shape(cls, d):
        return (d, d)

    def __call__(self, X):
        self._check(X)
        return VectorField(self.chart, _matvec(self.comps, X.comps))

    def __matmul__(self, other):
        self._check(other)
        return EndField(self.chart, _matmul(self.comps, other.comps))

    def __add__(self, other):
        return EndField(self.chart, self.comps + other.comps)

    def __sub__(self, other):
        return EndField(self.chart, self.comps - other.comps)

    def scale(self, f):
        f = E.as_expr(f)
        return EndField(self.chart, _map(lambda c: f * c, self.comps))

    @classmethod
    def identity(cls, chart):
        m = _obj((chart.dim, chart.dim))
        for i in range(chart.dim):
            m[i, i] = E.ONE
        return cls(chart, m)


class MetricField(Field):
    """Symmetric nondegenerate bilinear form; caches derived quantities."""

    @classmethod
    def expected_shape(cls, d):
        return (d, d)

    def __init__(self, chart, comps):
        super().__init__(chart, comps)
        self._cache = {}

    def __call__(self, X, Y):
        return _sum(self.comps[i, j] * X.comps[i] * Y.comps[j]
                    for i in range(self.chart.dim) for j in range(self.chart.dim))

    def det(self):
        if "det" not in self._cache:
            self._cache["det"] = _det(self.comps)
        return self._cache["det"]

    def inverse(self):
        if "inv" not in self._cache:
            d = self.chart.dim
            if d > 5:
                raise GeometryError("symbolic inverse supported up to dimension 5")
            det = self.det()
            adj = _adjugate(self.comps)
            self._cache["inv"] = _map(lambda c: c / det, adj)
        return self._cache["inv"]

    def flat(self, X):
        """Metric dual one-form g(X, ·)."""
        return OneForm(self.chart, _matvec(self.comps.T, X.comps))


def _sum(terms):
    total = E.ZERO
    for t in terms:
        total = total + t
    return total


def _map(f, arr):
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = f(arr[idx])
    return out


def _matvec(m, v):
    d = len(v)
    return np.array([_sum(m[i, j] * v[j] for j in range(d)) for i in range(m.shape[0])], dtype=object)


def _matmul(a, b):
    n, k = a.shape
    m = b.shape[1]
    out = _obj((n, m))
    for i in range(n):
        for j in range(m):
            out[i, j] = _sum(a[i, t] * b[t, j] for t in range(k))
    return out


def _det(m):
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    total = E.ZERO
    for j in range(n):
        if m[0, j].is_const(0.0):
            continue
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        term = m[0, j] * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _adjugate(m):
    n = m.shape[0]
    adj = _obj((n, n))
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
            c = _det(minor)
            adj[i, j] = c if (i + j) % 2 == 0 else -c
    return adj


def symbolic_inverse(m):
    """Inverse of a small symbolic matrix via adjugate/determinant."""
    m = to_obj(m)
    det = _det(m)
    return _map(lambda c: c / det, _adjugate(m))


# ------------------------------------------------------------ symbolic ops

def lie_bracket(X, Y):
    """[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k."""
    X._check(Y)
    chart = X.chart
    comps = []
    for k in range(chart.dim):
        comps.append(X.apply(Y.comps[k]) - Y.apply(X.comps[k]))
    return VectorField(chart, comps)


def christoffel(g):
    """Γ[k, i, j] = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)."""
    if "gamma" in g._cache:
        return g._cache["gamma"]
    d = g.chart.dim
    gi = g.inverse()
    dg = grad(g.comps, g.chart)  # dg[i, j, l] = ∂_l g_ij
    first = _obj((d, d, d))  # Γ_{l, ij}
    for l in range(d):
        for i in range(d):
            for j in range(i, d):
                first[l, i, j] = first[l, j, i] = 0.5 * (dg[j, l, i] + dg[i, l, j] - dg[i, j, l])
    gamma = _obj((d, d, d))
    for k in range(d):
        for i in range(d):
            for j in range(i, d):
                gamma[k, i, j] = gamma[k, j, i] = _sum(gi[k, l] * first[l, i, j] for l in range(d))
    g._cache["gamma"] = gamma
    return gamma


def covariant_derivative(X, Y, g):
    """∇_X Y with (∇_X Y)^k = X(Y^k) + Γ^k_ij X^i Y^j."""
    X._check(Y)
    gamma = christoffel(g)
    d = g.chart.dim
    comps = [X.apply(Y.comps[k]) + _sum(gamma[k, i, j] * X.comps[i] * Y.comps[j]
                                        for i in range(d) for j in range(d))
             for k in range(d)]
    return VectorField(g.chart, comps)


def riemann(g):
    """Symbolic riem[l, k, i, j] (see module docstring)."""
    if "riem" in g._cache:
        return g._cache["riem"]
    d = g.chart.dim
    gamma = christoffel(g)
    dgam = grad(gamma, g.chart)  # dgam[k, i, j, m] = ∂_m Γ^k_ij
    riem = _obj((d, d, d, d))
    for l, k in itertools.product(range(d), repeat=2):
        for i in range(d):
            for j in range(i + 1, d):
                val = dgam[l, j, k, i] - dgam[l, i, k, j]
                val = val + _sum(gamma[l, i, m] * gamma[m, j, k] - gamma[l, j, m] * gamma[m, i, k]
                                 for m in range(d))
                riem[l, k, i, j] = val
                riem[l, k, j, i] = -val
    g._cache["riem"] = riem
    return riem


def curvature(g):
    """Return the map (X, Y, Z) -> R(X, Y)Z as symbolic vector fields."""
    riem = riemann(g)
    d = g.chart.dim

    def R(X, Y, Z):
        comps = [_sum(riem[l, k, i, j] * Z.comps[k] * X.comps[i] * Y.comps[j]
                      for k in range(d) for i in range(d) for j in range(d))
                 for l in range(d)]
        return VectorField(g.chart, comps)

    return R


def ricci(g):
    """(S, Q, r): Ricci tensor S[j, k] = trace of X -> R(X, ∂_j)∂_k, Ricci
    operator Q = g^{-1} S, and scalar curvature r = tr Q."""
    if "ricci" in g._cache:
        return g._cache["ricci"]
    d = g.chart.dim
    riem = riemann(g)
    S = _obj((d, d))
    for j in range(d):
        for k in range(j, d):
            S[j, k] = S[k, j] = _sum(riem[i, k, i, j] for i in range(d))
    Q = _matmul(g.inverse(), S)
    r = _sum(Q[i, i] for i in range(d))
    g._cache["ricci"] = (S, Q, r)
    return S, Q, r


def lie_derivative_end(X, T):
    """(L_X T)^i_j = X(T^i_j) − T^k_j ∂_k X^i + T^i_k ∂_j X^k, which is the
    coordinate form of (L_X T)Y = [X, TY] − T[X, Y]."""
    X._check(T)
    chart = X.chart
    d = chart.dim
    dX = grad(X.comps, chart)  # dX[i, k] = ∂_k X^i
    out = _obj((d, d))
    for i in range(d):
        for j in range(d):
            out[i, j] = (X.apply(T.comps[i, j])
                         - _sum(T.comps[k, j] * dX[i, k] for k in range(d))
                         + _sum(T.comps[i, k] * dX[k, j] for k in range(d)))
    return EndField(chart, out)


def lie_derivative_end_bracket(X, T):
    """Same as lie_derivative_end but assembled literally from brackets of
    coordinate fields; used as an independent cross-check."""
    chart = X.chart
    d = chart.dim
    cols = []
    for j in range(d):
        e = VectorField(chart, [E.ONE if k == j else E.ZERO for k in range(d)])
        cols.append((lie_bracket(X, T(e)) - T(lie_bracket(X, e))).comps)
    return EndField(chart, np.array(cols, dtype=object).T)


# ---------------------------------------------------------- numeric layer

class PointGeometry:
    """Numeric Levi-Civita geometry of a metric on a PointSet.

    Arrays carry the point index first: gamma[p, k, i, j], riem[p, l, k, i, j].
    """

    def __init__(self, g, pts, min_det=1e-10):
        self.metric = g
        self.pts = pts
        self.d = g.chart.dim
        self.g = pts.eval(g.comps)
        det = np.linalg.det(self.g)
        bad = np.abs(det) <= min_det
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DegenerateMetricError(f"|det g| = {abs(det[i]):.3g} at {pts.point(i)}")
        self.ginv = np.linalg.inv(self.g)
        self.gamma = pts.eval(christoffel(g))
        self._dgamma = None
        self._riem = None

    @property
    def dgamma(self):
        """dgamma[p, k, i, j, m] = ∂_m Γ^k_ij."""
        if self._dgamma is None:
            self._dgamma = self.pts.eval(grad(christoffel(self.metric), self.metric.chart))
        return self._dgamma

    @property
    def riem(self):
        if self._riem is None:
            dg, gm = self.dgamma, self.gamma
            r = (np.einsum("pljki->plkij", dg) - np.einsum("plikj->plkij", dg)
                 + np.einsum("plim,pmjk->plkij", gm, gm) - np.einsum("pljm,pmik->plkij", gm, gm))
            self._riem = r
        return self._riem

    @property
    def ricci_tensor(self):
        return np.einsum("pikij->pjk", self.riem)

    @property
    def ricci_operator(self):
        return np.einsum("pij,pjk->pik", self.ginv, self.ricci_tensor)

    @property
    def scalar_curvature(self):
        return np.trace(self.ricci_operator, axis1=1, axis2=2)

    def inner(self, X, Y):
        return np.einsum("pij,pi,pj->p", self.g, X, Y)

    def R(self, X, Y, Z):
        return np.einsum("plkij,pk,pi,pj->pl", self.riem, Z, X, Y)

    def nabla_vector(self, V, dV):
        """(∇V)[p, i, j] = (∇_{∂j} V)^i from values V and dV[p, i, j] = ∂_j V^i."""
        return dV + np.einsum("pijk,pk->pij", self.gamma, V)

    def nabla_end(self, T, dT):
        """(∇T)[p, i, j, k] = ((∇_{∂k} T))^i_j."""
        return (dT + np.einsum("pikm,pmj->pijk", self.gamma, T)
                - np.einsum("pmkj,pim->pijk", self.gamma, T))

    def nabla_form2(self, B, dB):
        """(∇B)[p, i, j, k] = (∇_{∂k} B)_{ij} for a (0,2)-tensor."""
        return (dB - np.einsum("pmki,pmj->pijk", self.gamma, B)
                - np.einsum("pmkj,pim->pijk", self.gamma, B))

    def metric_compatibility(self):
        """max |∇_k g_ij| at each point."""
        dg = self.pts.eval(grad(self.metric.comps, self.metric.chart))
        res = self.nabla_form2(self.g, dg)
        return np.abs(res).reshape(self.pts.n, -1).max(axis=1)


def signature(gvals, tol=1e-12):
    """(positive, negative) eigenvalue counts of symmetric matrices (p, d, d)."""
    w = np.linalg.eigvalsh(0.5 * (gvals + np.swapaxes(gvals, -1, -2)))
    return (w > tol).sum(axis=-1), (w < -tol).sum(axis=-1)


def coordinate_field(chart, i):
    return VectorField(chart, [E.ONE if k == i else E.ZERO for k in range(chart.dim)])


def constant_field(chart, values):
    return VectorField(chart, [E.const(v) for v in values])
