"""Almost (para)contact metric structures: construction, axiom validation,
the tensor h = ½ L_ξ φ, and the basic identity suite of paracontact geometry.
"""

import numpy as np

from . import expr as E
from .geometry import (
    EndField, MetricField, OneForm, PointGeometry, VectorField,
    _matmul, _obj, grad, lie_derivative_end, signature, symbolic_inverse, to_obj,
)
from .report import Check, Report, flag_check, residual_check

PARA = 1
CONTACT = -1


class StructureError(Exception):
    """Invalid input that prevents building a structure at all."""


class ValidationError(StructureError):
    def __init__(self, report):
        bad = ", ".join(f"{c.id} ({c.residual:.2e})" for c in report.failures())
        super().__init__(f"{report.subject}: failed {bad}")
        self.report = report


class FramePresentation:
    """A frame of vector fields, its constant Gram matrix and φ on the frame.

    `gram` is either a sequence of ±1 (orthonormal frame with those signs) or
    the string "pseudo-orthonormal" (3D frame with g(e1,e2) = g(e3,e3) = 1,
    all other pairings 0). `phi_on_frame[a][b]` is the e_a-component of
    φ(e_b), so its columns are the images of the frame vectors.
    """

    def __init__(self, frame, gram, phi_on_frame):
        self.frame = list(frame)
        d = len(self.frame)
        if isinstance(gram, str):
            if gram != "pseudo-orthonormal" or d != 3:
                raise StructureError("pseudo-orthonormal frames are three-dimensional")
            G = np.zeros((3, 3))
            G[0, 1] = G[1, 0] = G[2, 2] = 1.0
            self.signature_kind = "pseudo-orthonormal"
        else:
            signs = [float(s) for s in gram]
            if len(signs) != d or any(abs(s) != 1.0 for s in signs):
                raise StructureError("frame signs must be ±1, one per frame vector")
            G = np.diag(signs)
            self.signature_kind = "orthonormal"
        self.gram = G
        self.phi_on_frame = to_obj(phi_on_frame)
        if self.phi_on_frame.shape != (d, d):
            raise StructureError("phi_on_frame must be a square matrix matching the frame")

    def matrix(self):
        """Frame-component matrix F with the frame vectors as columns."""
        return np.array([list(e.comps) for e in self.frame], dtype=object).T


class AlmostContactMetric:
    """Common data of contact (sign = -1) and paracontact (sign = +1)
    metric structures: φ² = sign·(I − η⊗ξ) and
    g(φX, φY) = −sign·(g(X, Y) − η(X)η(Y))."""

    sign = PARA
    kind = "paracontact"

    def __init__(self, chart, phi, xi, eta, g, presentation="coordinate", frame=None, name=None):
        self.chart = chart
        self.phi = phi if isinstance(phi, EndField) else EndField(chart, phi)
        self.xi = xi if isinstance(xi, VectorField) else VectorField(chart, xi)
        self.eta = eta if isinstance(eta, OneForm) else OneForm(chart, eta)
        self.g = g if isinstance(g, MetricField) else MetricField(chart, g)
        if chart.dim % 2 == 0 or chart.dim < 3:
            raise StructureError("(para)contact charts have odd dimension >= 3")
        self.presentation = presentation
        self.frame = frame
        self.name = name or chart.name
        self.n = (chart.dim - 1) // 2
        self._h = None
        self._geo = {}

    @property
    def dim(self):
        return self.chart.dim

    @property
    def h(self):
        """h = ½ L_ξ φ (computed once)."""
        if self._h is None:
            self._h = lie_derivative_end(self.xi, self.phi).scale(0.5)
        return self._h

    @property
    def phi_h(self):
        return self.phi @ self.h

    def deta(self):
        """dη(∂i, ∂j) = ½(∂_i η_j − ∂_j η_i)."""
        d = self.dim
        de = grad(self.eta.comps, self.chart)  # de[j, i] = ∂_i η_j
        out = _obj((d, d))
        for i in range(d):
            for j in range(d):
                out[i, j] = 0.5 * (de[j, i] - de[i, j])
        return out

    def geometry(self, pts):
        key = id(pts)
        if key not in self._geo:
            if len(self._geo) >= 4:
                self._geo.pop(next(iter(self._geo)))
            self._geo[key] = (pts, PointGeometry(self.g, pts))
        return self._geo[key][1]

    def fields_at(self, pts):
        """Numeric φ, ξ, η, g, h at the points."""
        return {
            "phi": pts.eval(self.phi.comps),
            "xi": pts.eval(self.xi.comps),
            "eta": pts.eval(self.eta.comps),
            "g": pts.eval(self.g.comps),
            "h": pts.eval(self.h.comps),
        }

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class ParacontactStructure(AlmostContactMetric):
    sign = PARA
    kind = "paracontact"


# ---------------------------------------------------------------- builders

def _check_shapes(chart, phi, xi, eta, g):
    d = chart.dim
    for name, arr, shape in (("phi", phi, (d, d)), ("xi", xi, (d,)), ("eta", eta, (d,)), ("g", g, (d, d))):
        a = arr.comps if hasattr(arr, "comps") else np.asarray(arr, dtype=object)
        if a.shape != shape:
            raise StructureError(f"{name} has shape {a.shape}, expected {shape}")


def build_from_coordinate(chart, phi, xi, eta, g, cls=ParacontactStructure, name=None):
    """Structure from coordinate components (strings are parsed on the chart)."""
    _check_shapes(chart, phi, xi, eta, g)
    conv = lambda a: _parse_array(chart, a)
    return cls(chart, conv(phi), conv(xi), conv(eta), conv(g), presentation="coordinate", name=name)


def _parse_array(chart, a):
    if hasattr(a, "comps"):
        return a.comps
    arr = np.array(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        v = arr[idx]
        out[idx] = chart.parse(v) if isinstance(v, str) else E.as_expr(v)
    return out


def build_from_frame(chart, fp, xi_index, eta_dual=True, cls=ParacontactStructure, name=None):
    """Structure from a frame presentation.

    g = F^{-T} G F^{-1} with F the frame matrix and G the frame Gram matrix,
    φ = F Φ F^{-1}, ξ = frame[xi_index] and η = g(ξ, ·) (the only supported
    choice; `eta_dual` must be true).
    """
    if not eta_dual:
        raise StructureError("frame presentations take η as the metric dual of ξ")
    F = fp.matrix()
    if F.shape != (chart.dim, chart.dim):
        raise StructureError("frame must have one vector per coordinate")
    Finv = symbolic_inverse(F)
    G = to_obj(fp.gram)
    g = _matmul(_matmul(Finv.T, G), Finv)
    d = chart.dim
    for i in range(d):
        for j in range(i + 1, d):
            g[i, j] = g[j, i] = 0.5 * (g[i, j] + g[j, i])
    phi = _matmul(_matmul(F, fp.phi_on_frame), Finv)
    xi = fp.frame[xi_index]
    gm = MetricField(chart, g)
    eta = gm.flat(xi)
    s = cls(chart, EndField(chart, phi), VectorField(chart, xi.comps), eta, gm,
            presentation="frame", frame=fp, name=name)
    s.frame_matrix = F
    return s


# -------------------------------------------------------------- validation

def axiom_residuals(S, pts):
    """Numeric residual arrays (points first) for the structure axioms."""
    f = S.fields_at(pts)
    phi, xi, eta, g, h = f["phi"], f["xi"], f["eta"], f["g"], f["h"]
    d = S.dim
    I = np.eye(d)[None]
    eta_xi = np.einsum("pi,pj->pij", xi, eta)  # ξ ⊗ η as an endomorphism
    etaeta = np.einsum("pi,pj->pij", eta, eta)
    phi2 = phi @ phi
    gphi = g @ phi
    out = {}
    out["eta_xi"] = np.einsum("pi,pi->p", eta, xi) - 1.0
    out["phi_squared"] = phi2 - S.sign * (I - eta_xi)
    out["phi_xi"] = np.einsum("pij,pj->pi", phi, xi)
    out["eta_phi"] = np.einsum("pi,pij->pj", eta, phi)
    out["metric_compatible"] = (np.swapaxes(phi, 1, 2) @ g @ phi) + S.sign * (g - etaeta)
    out["contact_condition"] = pts.eval(S.deta()) - gphi
    out["metric_symmetric"] = g - np.swapaxes(g, 1, 2)
    gh = g @ h
    out["h_self_adjoint"] = gh - np.swapaxes(gh, 1, 2)
    out["h_traceless"] = np.trace(h, axis1=1, axis2=2)
    out["h_xi"] = np.einsum("pij,pj->pi", h, xi)
    out["h_anticommutes_phi"] = h @ phi + phi @ h
    return out, f


_AXIOM_ANCHORS = {
    PARA: {
        "eta_xi": "eta(xi) = 1",
        "phi_squared": "phi^2 = I - eta (x) xi",
        "phi_xi": "phi xi = 0",
        "eta_phi": "eta o phi = 0",
        "metric_compatible": "g(phi X, phi Y) = -g(X,Y) + eta(X) eta(Y)",
        "contact_condition": "d eta(X,Y) = g(X, phi Y), d eta = 1/2 (X eta(Y) - Y eta(X) - eta([X,Y]))",
        "metric_symmetric": "g symmetric",
        "h_self_adjoint": "g(hX, Y) = g(X, hY)",
        "h_traceless": "tr h = 0",
        "h_xi": "h xi = 0",
        "h_anticommutes_phi": "h phi = -phi h",
    },
    CONTACT: {
        "eta_xi": "eta(xi) = 1",
        "phi_squared": "phi^2 = -I + eta (x) xi",
        "phi_xi": "phi xi = 0",
        "eta_phi": "eta o phi = 0",
        "metric_compatible": "g(phi X, phi Y) = g(X,Y) - eta(X) eta(Y)",
        "contact_condition": "d eta(X,Y) = g(X, phi Y), d eta = 1/2 (X eta(Y) - Y eta(X) - eta([X,Y]))",
        "metric_symmetric": "g symmetric",
        "h_self_adjoint": "g(hX, Y) = g(X, hY)",
        "h_traceless": "tr h = 0",
        "h_xi": "h xi = 0",
        "h_anticommutes_phi": "h phi = -phi h",
    },
}


def validate(S, pts, tol=1e-8):
    """Check every structure axiom at the points; never raises on failure."""
    rep = Report(S.name, "validation")
    try:
        res, f = axiom_residuals(S, pts)
    except E.DomainError as err:
        rep.add(Check("evaluable", "all fields evaluate on the sample set", float("inf"), tol,
                      err.point, False, {"error": str(err)}))
        return rep
    anchors = _AXIOM_ANCHORS[S.sign]
    for key in ("eta_xi", "phi_squared", "phi_xi", "eta_phi", "metric_symmetric",
                "metric_compatible", "contact_condition"):
        rep.add(residual_check(key, anchors[key], res[key], pts, tol))
    g = f["g"]
    det = np.abs(np.linalg.det(g))
    rep.add(flag_check("nondegenerate", "|det g| > 1e-10", det > 1e-10, pts,
                       value=float(det.min())))
    pos, negc = signature(g)
    n = S.n
    want = (n + 1, n) if S.sign == PARA else (2 * n + 1, 0)
    ok = (pos == want[0]) & (negc == want[1])
    rep.add(flag_check("signature", f"signature of g is {want}", ok, pts,
                       value=[int(pos[0]), int(negc[0])]))
    if S.frame is not None:
        F = pts.eval(S.frame_matrix)
        fdet = np.abs(np.linalg.det(F))
        rep.add(flag_check("frame_independent", "|det of frame matrix| > 1e-10", fdet > 1e-10, pts,
                           value=float(fdet.min())))
    for key in ("h_self_adjoint", "h_traceless", "h_xi", "h_anticommutes_phi"):
        rep.add(residual_check(key, anchors[key], res[key], pts, tol))
    return rep


def require_valid(S, pts, tol=1e-8):
    rep = validate(S, pts, tol)
    if not rep.passed:
        raise ValidationError(rep)
    return rep


# -------------------------------------------------------- identity suite

def nabla_tensors(S, pts):
    """Numeric covariant derivatives used by the identity suites.

    Returns dict with nxi[p, i, j] = (∇_{∂j} ξ)^i and nT[p, i, j, k] =
    (∇_{∂k} T)^i_j for T in phi, h, phih.
    """
    geo = S.geometry(pts)
    ch = S.chart
    xi = pts.eval(S.xi.comps)
    out = {"xi": xi, "geo": geo}
    out["nxi"] = geo.nabla_vector(xi, pts.eval(grad(S.xi.comps, ch)))
    for key, T in (("phi", S.phi), ("h", S.h), ("phih", S.phi_h)):
        out["n" + key] = geo.nabla_end(pts.eval(T.comps), pts.eval(grad(T.comps, ch)))
    return out


def metric_identity_suite(S, pts, tol=1e-8):
    """Levi-Civita checks valid for any metric: ∇g = 0, zero torsion and, in
    dimension 3, curvature determined by Ricci."""
    rep = Report(S.name, "metric identities")
    geo = S.geometry(pts)
    rep.add(residual_check("nabla_g", "nabla g = 0", geo.metric_compatibility(), pts, tol))
    rep.add(residual_check("torsion_free", "nabla_X Y - nabla_Y X = [X, Y]",
                           geo.gamma - np.swapaxes(geo.gamma, 2, 3), pts, tol))
    if S.dim == 3:
        g, Q, Ric = geo.g, geo.ricci_operator, geo.ricci_tensor
        r = geo.scalar_curvature
        I = np.eye(3)[None].repeat(len(pts), 0)
        # riem[l, k, i, j]: Z = ∂k, X = ∂i, Y = ∂j
        rhs = (np.einsum("pjk,pli->plkij", g, Q) - np.einsum("pik,plj->plkij", g, Q)
               + np.einsum("pjk,pli->plkij", Ric, I) - np.einsum("pik,plj->plkij", Ric, I)
               - 0.5 * r[:, None, None, None, None]
               * (np.einsum("pjk,pli->plkij", g, I) - np.einsum("pik,plj->plkij", g, I)))
        scale = 1.0 + np.abs(geo.riem).reshape(len(pts), -1).max(axis=1)
        rep.add(residual_check("three_dim_curvature",
                               "R(X,Y)Z = g(Y,Z)QX - g(X,Z)QY + S(Y,Z)X - S(X,Z)Y - (r/2)(g(Y,Z)X - g(X,Z)Y)",
                               (geo.riem - rhs) / scale[:, None, None, None, None], pts, tol))
    return rep


def paracontact_identity_suite(S, pts, tol=1e-8):
    """Residuals of the identities every paracontact metric manifold obeys."""
    rep = Report(S.name, "paracontact identities")
    rep.extend(metric_identity_suite(S, pts, tol))
    f = S.fields_at(pts)
    phi, eta, g, h = f["phi"], f["eta"], f["g"], f["h"]
    nt = nabla_tensors(S, pts)
    geo, xi = nt["geo"], nt["xi"]
    d = S.dim
    rep.add(residual_check("nabla_xi", "nabla xi = -phi + phi h", nt["nxi"] - (-phi + phi @ h), pts, tol))

    nxi_h = np.einsum("pijk,pk->pij", nt["nh"], xi)
    # M[p, l, a] = (R(ξ, ∂a)ξ)^l
    Rxi = np.einsum("plkia,pk,pi->pla", geo.riem, xi, xi)
    rhs = -phi + h @ h @ phi + phi @ Rxi
    rep.add(residual_check("nabla_xi_h", "(nabla_xi h)X = -phi X + h^2 phi X + phi R(xi,X)xi",
                           nxi_h - rhs, pts, tol))

    Sxx = np.einsum("pjk,pj,pk->p", geo.ricci_tensor, xi, xi)
    trh2 = np.trace(h @ h, axis1=1, axis2=2)
    rep.add(residual_check("ricci_xi_xi", "S(xi,xi) = -2n + tr h^2", Sxx - (-2 * S.n + trh2), pts, tol))

    if d == 3:
        # (∇_{∂k}φ)∂j = −g((I−h)∂k, ∂j)ξ + η_j (I−h)∂k
        Ih = np.eye(d)[None] - h
        gIh = np.einsum("pab,pak->pkb", g, Ih)  # g((I−h)∂k, ∂b)
        rhs = -np.einsum("pkj,pi->pijk", gIh, xi) + np.einsum("pj,pik->pijk", eta, Ih)
        rep.add(residual_check("nabla_phi_3d",
                               "(nabla_X phi)Y = -g(X - hX, Y) xi + eta(Y)(X - hX)",
                               nt["nphi"] - rhs, pts, tol))

    # R(∂a, ∂b)ξ = −(∇_a φ)∂b + (∇_b φ)∂a + (∇_a φh)∂b − (∇_b φh)∂a
    Rab = np.einsum("plkab,pk->plab", geo.riem, xi)
    nphi, nphih = nt["nphi"], nt["nphih"]
    rhs = (-nphi + np.swapaxes(nphi, 2, 3) + nphih - np.swapaxes(nphih, 2, 3))
    # nphi[p, i, j, k] = (∇_k φ)^i_j so (∇_a φ)∂b has index [i, b, a]
    rhs = np.swapaxes(rhs, 2, 3)
    rep.add(residual_check("curvature_xi_from_nabla_phi",
                           "R(X,Y)xi = -(nabla_X phi)Y + (nabla_Y phi)X + (nabla_X phi h)Y - (nabla_Y phi h)X",
                           Rab - rhs, pts, tol))
    return rep


def is_K_paracontact(S, pts, tol=1e-8):
    """ξ is Killing iff h vanishes identically (checked on the samples)."""
    h = pts.eval(S.h.comps)
    hnorm = np.abs(h).reshape(len(pts), -1).max(axis=1)
    rep = Report(S.name, "K-paracontact test")
    rep.add(Check("h_vanishes", "h = 0 (xi Killing)", float(hnorm.max()), tol,
                  pts.point(int(np.argmax(hnorm)))))
    rep.data["K_paracontact"] = bool(hnorm.max() < tol)
    h2 = h @ h
    rep.data["max_h"] = float(hnorm.max())
    rep.data["max_h_squared"] = float(np.abs(h2).max())
    return rep.data["K_paracontact"], rep


def is_para_sasakian_3d(S, pts, tol=1e-8):
    """In dimension 3, para-Sasakian is equivalent to K-paracontact. Also
    reports whether R(X,Y)ξ = −(η(Y)X − η(X)Y) holds, which on its own does
    not imply para-Sasakian."""
    if S.dim != 3:
        raise StructureError("the para-Sasakian test is implemented in dimension 3 only")
    k, rep = is_K_paracontact(S, pts, tol)
    rep.stage = "para-Sasakian test (3D)"
    geo = S.geometry(pts)
    xi = pts.eval(S.xi.comps)
    eta = pts.eval(S.eta.comps)
    Rab = np.einsum("plkab,pk->plab", geo.riem, xi)
    I = np.eye(3)[None]
    rhs = -(np.einsum("pb,pla->plab", eta, I.repeat(len(pts), 0))
            - np.einsum("pa,plb->plab", eta, I.repeat(len(pts), 0)))
    c = residual_check("pasa_curvature", "R(X,Y)xi = -(eta(Y)X - eta(X)Y)", Rab - rhs, pts, tol)
    rep.data["curvature_identity_residual"] = c.residual
    rep.data["curvature_identity_holds"] = bool(c.passed)
    rep.data["note"] = "the curvature identity alone does not imply para-Sasakian"
    rep.data["para_sasakian"] = k
    return k, rep


def perturb_metric(S, i, j, delta, name=None):
    """Copy of S with g_ij (and g_ji) shifted by `delta` (number or Expr);
    φ, ξ, η unchanged. Used for negative controls."""
    g = S.g.comps.copy()
    d = E.as_expr(delta)
    g[i, j] = g[i, j] + d
    if i != j:
        g[j, i] = g[j, i] + d
    return type(S)(S.chart, S.phi, S.xi, S.eta, MetricField(S.chart, g), presentation="perturbed",
                   name=name or f"{S.name}-perturbed")
