"""Rough Laplacian, harmonicity of the Reeb field and the harmonic-map
obstruction tr[R(∇·ξ, ξ)·].

Sign convention: ∇*∇V = Σ ε_a (∇_{e_a}∇_{e_a}V − ∇_{∇_{e_a}e_a}V) over a
frame with g(e_a, e_a) = ε_a, which equals +tr_g ∇²V.
"""

from dataclasses import dataclass

import numpy as np

from . import expr as E
from .classify import TYPE_I, TYPE_III, classify_arrays, fit_arrays
from .geometry import DegenerateMetricError, grad
from .report import Report, flag_check, residual_check


@dataclass
class HarmonicReport:
    point: dict
    rough_laplacian_of_xi: np.ndarray
    collinearity_defect: float
    ricci_eigen_defect: float
    obstruction: np.ndarray
    eigenvalue: float
    is_harmonic_vf: bool
    is_harmonic_map_T1M: bool
    is_harmonic_map_TM: bool
    consistent: bool

    def to_dict(self):
        return {
            "point": self.point, "rough_laplacian_of_xi": self.rough_laplacian_of_xi.tolist(),
            "collinearity_defect": self.collinearity_defect, "ricci_eigen_defect": self.ricci_eigen_defect,
            "obstruction": self.obstruction.tolist(), "eigenvalue": self.eigenvalue,
            "is_harmonic_vf": self.is_harmonic_vf, "is_harmonic_map_T1M": self.is_harmonic_map_T1M,
            "is_harmonic_map_TM": self.is_harmonic_map_TM, "consistent": self.consistent,
        }


# ------------------------------------------------------------------ frames

def _candidates(d, order):
    """Constant coefficient vectors tried by Gram–Schmidt: coordinate
    fields in `order`, then pairwise sums and differences."""
    out = []
    for i in order:
        c = np.zeros(d)
        c[i] = 1.0
        out.append(c)
    for s in (1.0, -1.0):
        for a in range(d):
            for b in range(a + 1, d):
                c = np.zeros(d)
                c[order[a]] = 1.0
                c[order[b]] = s
                out.append(c)
    return out


def _numeric_pattern(gp, cands, thresh=1e-3):
    """Greedy Gram–Schmidt at one point: the chosen candidate indices and
    the sign of each frame vector."""
    d = len(gp)
    frame, eps, picks = [], [], []
    used = set()
    for _ in range(d):
        for ci, c in enumerate(cands):
            if ci in used:
                continue
            u = c.copy()
            for e, s in zip(frame, eps):
                u = u - s * (c @ gp @ e) * e
            n = u @ gp @ u
            scale = max(1.0, u @ u)
            if abs(n) > thresh * scale:
                frame.append(u / np.sqrt(abs(n)))
                eps.append(int(np.sign(n)))
                picks.append(ci)
                used.add(ci)
                break
        else:
            raise DegenerateMetricError("no non-null Gram-Schmidt pivot available")
    return tuple(picks), tuple(eps)


def _symbolic_frame(g, cands, picks, eps):
    """Frame vectors as symbolic component lists for a fixed pivot pattern."""
    d = g.chart.dim
    G = g.comps

    def inner(a, b):
        out = E.ZERO
        for i in range(d):
            for j in range(d):
                if a[i].is_const(0.0) or b[j].is_const(0.0):
                    continue
                out = out + G[i, j] * a[i] * b[j]
        return out

    frame = []
    for ci, s in zip(picks, eps):
        c = [E.const(v) for v in cands[ci]]
        u = list(c)
        for e, se in zip(frame, eps):
            coef = inner(c, e)
            u = [u[k] - se * coef * e[k] for k in range(d)]
        norm = E.sqrt(s * inner(u, u))
        frame.append([u[k] / norm for k in range(d)])
    return frame


def gram_schmidt_frames(g, pts, order=None, thresh=1e-3):
    """Group points by Gram–Schmidt pivot pattern; yields (indices, frame,
    eps) with frame a list of symbolic component lists."""
    d = g.chart.dim
    order = list(order) if order is not None else list(range(d))
    cands = _candidates(d, order)
    gvals = pts.eval(g.comps)
    groups = {}
    for p in range(len(pts)):
        key = _numeric_pattern(gvals[p], cands, thresh)
        groups.setdefault(key, []).append(p)
    cache = g._cache.setdefault("gs_frames", {})
    for (picks, eps), idx in sorted(groups.items()):
        key = (tuple(order), picks, eps)
        if key not in cache:
            cache[key] = _symbolic_frame(g, cands, picks, eps)
        yield np.array(idx), cache[key], eps


# --------------------------------------------------------------- Laplacian

def _vector_data(V, pts):
    comps = V.comps if hasattr(V, "comps") else np.asarray(V, dtype=object)
    chart = pts.chart
    dV = grad(comps, chart)
    ddV = grad(dV, chart)
    return pts.eval(comps), pts.eval(dV), pts.eval(ddV)


def _first_second(geo, Vv, dV, ddV):
    """N[p,l,j] = (∇_j V)^l and D[p,l,j,i] = ∂_i N[p,l,j]."""
    N = geo.nabla_vector(Vv, dV)
    D = (ddV + np.einsum("pljmi,pm->plji", geo.dgamma, Vv)
         + np.einsum("pljm,pmi->plji", geo.gamma, dV))
    return N, D


def rough_laplacian_coordinate(g, V, pts, geo=None):
    """+tr_g ∇²V from coordinate formulas (frame-free cross-check)."""
    from .geometry import PointGeometry
    geo = geo or PointGeometry(g, pts)
    N, D = _first_second(geo, *_vector_data(V, pts))
    hess = (np.einsum("plji->plji", D) + np.einsum("plim,pmj->plji", geo.gamma, N)
            - np.einsum("pmij,plm->plji", geo.gamma, N))
    return np.einsum("pij,plji->pl", geo.ginv, hess)


def rough_laplacian(g, V, pts, order=None, geo=None):
    """∇*∇V at each point from a Gram–Schmidt frame (coordinate order
    `order`, default as given)."""
    from .geometry import PointGeometry
    geo = geo or PointGeometry(g, pts)
    N, D = _first_second(geo, *_vector_data(V, pts))
    out = np.zeros((len(pts), g.chart.dim))
    for idx, frame, eps in gram_schmidt_frames(g, pts, order):
        sub = pts.subset(idx)
        gam = geo.gamma[idx]
        Ni, Di = N[idx], D[idx]
        for comps, s in zip(frame, eps):
            e = sub.eval(np.array(comps, dtype=object))
            de = sub.eval(grad(np.array(comps, dtype=object), g.chart))  # de[p, j, i] = ∂_i e^j
            W = np.einsum("plj,pj->pl", Ni, e)
            dW = np.einsum("plji,pj->pli", Di, e) + np.einsum("plj,pji->pli", Ni, de)
            nW = np.einsum("pli,pi->pl", dW, e) + np.einsum("plim,pi,pm->pl", gam, e, W)
            Y = np.einsum("pli,pi->pl", de, e) + np.einsum("plim,pi,pm->pl", gam, e, e)
            out[idx] += s * (nW - np.einsum("plj,pj->pl", Ni, Y))
    return out


def obstruction_trace(geo, xi, nxi):
    """tr[R(∇·ξ, ξ)·] = g^{ij} R(∇_{∂i}ξ, ξ)∂_j."""
    return np.einsum("pij,pljmk,pmi,pk->pl", geo.ginv, geo.riem, nxi, xi)


def harmonic_map_obstruction(S, pts):
    geo = S.geometry(pts)
    xi = pts.eval(S.xi.comps)
    nxi = geo.nabla_vector(xi, pts.eval(grad(S.xi.comps, S.chart)))
    return obstruction_trace(geo, xi, nxi)


def _ker_eta(v, xi, eta):
    return v - np.einsum("pi,pi->p", eta, v)[:, None] * xi


def harmonic_points(S, pts, tol=1e-7):
    """HarmonicReport at each point."""
    geo = S.geometry(pts)
    xi = pts.eval(S.xi.comps)
    eta = pts.eval(S.eta.comps)
    lap = rough_laplacian(S.g, S.xi, pts, geo=geo)
    Qxi = np.einsum("pij,pj->pi", geo.ricci_operator, xi)
    col = np.abs(_ker_eta(lap, xi, eta)).max(axis=1)
    ric = np.abs(_ker_eta(Qxi, xi, eta)).max(axis=1)
    obs = harmonic_map_obstruction(S, pts)
    out = []
    for i in range(len(pts)):
        hv = bool(col[i] < tol)
        on = float(np.abs(obs[i]).max())
        out.append(HarmonicReport(
            pts.point(i), lap[i], float(col[i]), float(ric[i]), obs[i], float(eta[i] @ lap[i]),
            hv, hv and on < tol, bool(np.abs(lap[i]).max() < tol and on < tol),
            hv == bool(ric[i] < tol)))
    return out


def is_harmonic_vector_field(S, p, tol=1e-7):
    from .classify import _as_points
    pts = _as_points(S, p)
    reps = harmonic_points(S, pts, tol)
    return reps[0] if not hasattr(p, "values_array") else reps


def harmonicity_scan(S, pts, tol=1e-7, obstruction_tol=1e-6, frame_tol=1e-7):
    """Harmonicity of ξ over a point set, with frame-independence and the
    obstruction compared against ±2λ²ν ξ from the fitted ν."""
    rep = Report(S.name, "harmonicity of the Reeb field")
    geo = S.geometry(pts)
    xi = pts.eval(S.xi.comps)
    lap1 = rough_laplacian(S.g, S.xi, pts, geo=geo)
    lap2 = rough_laplacian(S.g, S.xi, pts, order=list(reversed(range(S.dim))), geo=geo)
    lap3 = rough_laplacian_coordinate(S.g, S.xi, pts, geo=geo)
    scale = 1 + np.abs(lap1)
    rep.add(residual_check("laplacian_frame_independent", "rough Laplacian agrees in two frames",
                           (lap1 - lap2) / scale, pts, frame_tol))
    rep.add(residual_check("laplacian_trace_form", "rough Laplacian equals tr_g of the Hessian",
                           (lap1 - lap3) / scale, pts, frame_tol))
    hr = harmonic_points(S, pts, tol)
    col = np.array([h.collinearity_defect for h in hr])
    ric = np.array([h.ricci_eigen_defect for h in hr])
    agree = np.array([h.consistent for h in hr])
    rep.add(flag_check("harmonic_equivalence",
                       "nabla*nabla xi collinear to xi iff xi is a Ricci eigenvector", agree, pts))
    rep.add(residual_check("collinearity", "nabla*nabla xi collinear to xi", col, pts, tol))
    rep.add(residual_check("ricci_eigenvector", "Q xi collinear to xi", ric, pts, tol))
    rep.data["eigenvalue_range"] = [float(min(h.eigenvalue for h in hr)), float(max(h.eigenvalue for h in hr))]
    rep.data["harmonic_vector_field"] = bool(all(h.is_harmonic_vf for h in hr))
    rep.data["harmonic_map_T1M"] = bool(all(h.is_harmonic_map_T1M for h in hr))
    rep.data["harmonic_map_TM"] = bool(all(h.is_harmonic_map_TM for h in hr))

    # obstruction against ±2λ²νξ, only meaningful on (κ, μ, ν)-structures
    f = S.fields_at(pts)
    fits = fit_arrays(geo.riem, xi, f["eta"], f["h"], f["phi"] @ f["h"], pts)
    if S.sign > 0 and all(ft.residual < 1e-7 for ft in fits):
        obs = np.array([h.obstruction for h in hr])
        expected = np.zeros_like(obs)
        for i, ft in enumerate(fits):
            c = classify_arrays(f["phi"][i], xi[i], f["eta"][i], f["g"][i], f["h"][i])
            lam2 = c.lam ** 2
            if c.htype == TYPE_I:
                expected[i] = 2 * lam2 * ft.nu * xi[i]
            elif c.htype == TYPE_III:
                expected[i] = -2 * lam2 * ft.nu * xi[i]
        rep.add(residual_check("obstruction_formula", "tr[R(nabla. xi, xi).] = +-2 lambda^2 nu xi",
                               obs - expected, pts, obstruction_tol))
    return rep, hr
