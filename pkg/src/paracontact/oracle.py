"""Central finite-difference oracles, independent of the symbolic
derivatives: Christoffel symbols via Koszul from differenced metric values,
curvature from differenced Christoffels, and expression derivatives."""

import numpy as np

from . import expr as E
from .geometry import PointSet
from .report import Report, residual_check

# fourth-order central stencil
_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
_WEIGHTS = (1.0, -8.0, 8.0, -1.0)


def fd_partial(f, values, m, step):
    """∂_m f at `values` (n, d) for f mapping (n, d) -> (n, ...)."""
    out = None
    for o, w in zip(_OFFSETS, _WEIGHTS):
        v = values.copy()
        v[:, m] += o * step
        term = w * f(v)
        out = term if out is None else out + term
    return out / (12.0 * step)


def _metric_values(g):
    chart = g.chart
    return lambda v: PointSet(chart, v).eval(g.comps)


def fd_christoffel_at(g, values, step=1e-3):
    """gamma[p, k, i, j] from differenced metric values."""
    gv = _metric_values(g)
    d = g.chart.dim
    G = gv(values)
    dg = np.stack([fd_partial(gv, values, m, step) for m in range(d)], axis=-1)  # dg[p,i,j,m] = ∂_m g_ij
    first = 0.5 * (np.einsum("pjli->plij", dg) + np.einsum("pilj->plij", dg) - np.einsum("pijl->plij", dg))
    return np.einsum("pkl,plij->pkij", np.linalg.inv(G), first)


def fd_riemann_at(g, values, step=1e-3):
    """riem[p, l, k, i, j] from differenced oracle Christoffels."""
    d = g.chart.dim
    gam = fd_christoffel_at(g, values, step)
    dgam = np.stack([fd_partial(lambda v: fd_christoffel_at(g, v, step), values, m, step)
                     for m in range(d)], axis=-1)  # dgam[p,l,j,k,i] = ∂_i Γ^l_jk
    return (np.einsum("pljki->plkij", dgam) - np.einsum("plikj->plkij", dgam)
            + np.einsum("plim,pmjk->plkij", gam, gam) - np.einsum("pljm,pmik->plkij", gam, gam))


def _relative(a, b):
    n = len(a)
    scale = np.maximum(1.0, np.abs(b).reshape(n, -1).max(axis=1))
    return np.abs(a - b).reshape(n, -1).max(axis=1) / scale


def fd_expr_check(exprs, pts, step=1e-4):
    """Largest relative gap between symbolic and differenced derivatives of
    each expression at each point; shape (n,)."""
    chart = pts.chart
    vals = pts.values_array
    worst = np.zeros(len(pts))
    for e in exprs:
        if not isinstance(e, E.Expr):
            e = E.as_expr(e)
        f = lambda v, e=e: PointSet(chart, v).eval(e) * np.ones(len(v))
        for m, c in enumerate(chart.coords):
            sym = pts.eval(E.differentiate(e, c)) * np.ones(len(pts))
            fd = fd_partial(f, vals, m, step)
            worst = np.maximum(worst, np.abs(sym - fd) / np.maximum(1.0, np.abs(fd)))
    return worst


def oracle_report(S, pts, tol=1e-5, step=1e-3):
    """Symbolic Christoffel/curvature and field derivatives against the
    finite-difference oracle."""
    rep = Report(S.name, "finite-difference oracle")
    geo = S.geometry(pts)
    vals = pts.values_array
    gam = fd_christoffel_at(S.g, vals, step)
    rep.add(residual_check("oracle_christoffel", "Christoffel symbols vs finite differences of g",
                           _relative(geo.gamma, gam), pts, tol))
    riem = fd_riemann_at(S.g, vals, step)
    rep.add(residual_check("oracle_curvature", "curvature tensor vs finite differences of Christoffels",
                           _relative(geo.riem, riem), pts, tol))
    exprs = [c for f in (S.phi, S.xi, S.eta, S.g) for c in np.asarray(f.comps, dtype=object).reshape(-1)]
    rep.add(residual_check("oracle_expr_derivatives", "symbolic partials vs finite differences",
                           fd_expr_check(exprs, pts), pts, tol))
    return rep
