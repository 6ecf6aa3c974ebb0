"""Pointwise canonical form of h under the Lorentzian metric, extraction of
the nullity coefficients (κ, μ, ν), and the identity suites tied to them.

Canonical forms on ker η (a Lorentzian plane), with n = 1:

* Zero:    h = 0.
* TypeI:   φ-basis {e, φe, ξ}, −g(e,e) = g(φe,φe) = 1, he = λe, hφe = −λφe.
* TypeII:  pseudo-orthonormal {e1, e2, ξ}, g(e1,e2) = 1, he1 = e2, h e2 = 0.
* TypeIII: φ-basis with he = λφe, hφe = −λe.

λ is reported as a magnitude with a separate sign, because the eigenvalue
attached to the timelike vector e is intrinsic (it cannot be flipped by a
change of frame).
"""

from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .geometry import ScalarField, grad
from .report import Check, Report, residual_check
from .structures import nabla_tensors

ZERO, TYPE_I, TYPE_II, TYPE_III = "Zero", "TypeI", "TypeII", "TypeIII"
COEFFS = ("kappa", "mu", "nu")


class ClassificationError(Exception):
    """h has a pattern no valid structure can produce (h ξ ≠ 0)."""


class NotApplicableError(Exception):
    pass


@dataclass
class HTypeReport:
    point: dict
    htype: str
    lam: float
    sign: int
    adapted_frame: np.ndarray  # columns are the frame vectors
    pairing: str
    h_in_frame: np.ndarray
    canonical: np.ndarray
    residual: float
    phi_sign: int = 0  # TypeII: φ e1 = phi_sign · e1

    @property
    def lam_signed(self):
        return self.sign * self.lam

    def to_dict(self):
        return {
            "point": self.point, "htype": self.htype, "lambda": self.lam, "sign": self.sign,
            "pairing": self.pairing, "adapted_frame": self.adapted_frame.T.tolist(),
            "residual": self.residual, "phi_sign": self.phi_sign,
        }


@dataclass
class KMNFit:
    point: dict
    kappa: float
    mu: float
    nu: float
    residual: float
    identifiable: tuple = (True, True, True)
    method: str = "least-squares"
    note: str = ""

    def as_tuple(self):
        return (self.kappa, self.mu, self.nu)

    def to_dict(self):
        return {
            "point": self.point, "kappa": self.kappa, "mu": self.mu, "nu": self.nu,
            "residual": self.residual, "identifiable": dict(zip(COEFFS, self.identifiable)),
            "method": self.method, "note": self.note,
        }


@dataclass
class RicciDecomposition:
    point: dict
    htype: str
    a_coefficient: float
    b_coefficient: float
    sigma: tuple
    gauge: float
    xi_lambda: float
    residual: float
    detail: dict = field(default_factory=dict)


def _as_points(S, p):
    if hasattr(p, "values_array"):
        return p
    if isinstance(p, dict):
        return S.chart.points([[p[c] for c in S.chart.coords]])
    return S.chart.points(np.atleast_2d(p))


# ------------------------------------------------------------ point algebra

class _Pointwise:
    """Numeric fields of a structure at a PointSet."""

    def __init__(self, S, pts):
        self.S = S
        self.pts = pts
        f = S.fields_at(pts)
        self.phi, self.xi, self.eta, self.g, self.h = f["phi"], f["xi"], f["eta"], f["g"], f["h"]
        self.geo = S.geometry(pts)

    def at(self, i):
        return self.phi[i], self.xi[i], self.eta[i], self.g[i], self.h[i]


def _inner(g, a, b):
    return float(a @ g @ b)


def _seed_vector(g, phi, xi, eta):
    """A non-null vector of ker η (largest |g(w,w)| among projected axes)."""
    best, score = None, -1.0
    for i in range(len(xi)):
        w = np.zeros(len(xi))
        w[i] = 1.0
        w = w - (eta @ w) * xi
        n2 = w @ w
        if n2 < 1e-24:
            continue
        s = abs(_inner(g, w, w)) / n2
        if s > score:
            best, score = w, s
    if best is None or score < 1e-14:
        raise ClassificationError("ker eta has no non-null coordinate projection")
    return best


def _timelike_unit(g, phi, xi, eta):
    w = _seed_vector(g, phi, xi, eta)
    n = _inner(g, w, w)
    if n < 0:
        return w / np.sqrt(-n)
    v = phi @ w
    return v / np.sqrt(n)


def _canonical(htype, lam_signed, eps=1):
    C = np.zeros((3, 3))
    if htype == TYPE_I:
        C[0, 0], C[1, 1] = lam_signed, -lam_signed
    elif htype == TYPE_II:
        C[1, 0] = eps
    elif htype == TYPE_III:
        C[1, 0], C[0, 1] = lam_signed, -lam_signed
    return C


def classify_arrays(phi, xi, eta, g, h, tol_zero=1e-9, tol_eig=1e-9, point=None):
    """Classify h at one point from numeric component matrices."""
    if len(xi) != 3:
        raise ClassificationError("classification is implemented in dimension 3")
    hnorm = np.abs(h).max()
    hxi = np.abs(h @ xi).max()
    if hxi > 1e-6 * max(1.0, hnorm):
        raise ClassificationError(
            f"h xi = {hxi:.3g} != 0: TypeIV-like pattern, structure is not valid at {point}")
    if hnorm < tol_zero:
        u = _timelike_unit(g, phi, xi, eta)
        F = np.column_stack([u, phi @ u, xi])
        return HTypeReport(point, ZERO, 0.0, 0, F, "phi-orthonormal", np.zeros((3, 3)),
                           np.zeros((3, 3)), float(hnorm))
    c = 0.5 * np.trace(h @ h)
    if abs(c) <= tol_eig:
        return _type_two(phi, xi, eta, g, h, point)
    u = _timelike_unit(g, phi, xi, eta)
    pu = phi @ u
    hu = h @ u
    p = -_inner(g, hu, u)
    q = _inner(g, hu, pu)
    if c > 0:
        t = 0.5 * np.arctanh(np.clip(q / p, -1 + 1e-16, 1 - 1e-16))
        lam_s = p * np.cosh(2 * t) - q * np.sinh(2 * t)
        htype = TYPE_I
    else:
        t = 0.5 * np.arctanh(np.clip(p / q, -1 + 1e-16, 1 - 1e-16))
        lam_s = q * np.cosh(2 * t) - p * np.sinh(2 * t)
        htype = TYPE_III
    e = np.cosh(t) * u + np.sinh(t) * pu
    F = np.column_stack([e, phi @ e, xi])
    hF = np.linalg.solve(F, h @ F)
    C = _canonical(htype, lam_s)
    res = float(np.abs(hF - C).max())
    return HTypeReport(point, htype, float(abs(lam_s)), int(np.sign(lam_s)), F, "phi-orthonormal",
                       hF, C, res)


def _type_two(phi, xi, eta, g, h, point):
    w = _seed_vector(g, phi, xi, eta)
    vp, vm = w + phi @ w, w - phi @ w
    if np.abs(h @ vp).max() >= np.abs(h @ vm).max():
        v, phi_sign = vp, 1
    else:
        v, phi_sign = vm, -1
    c = _inner(g, v, h @ v)
    if abs(c) < 1e-300:
        raise ClassificationError(f"degenerate nilpotent h at {point}")
    eps = int(np.sign(c))
    e1 = v / np.sqrt(abs(c))
    e2 = eps * (h @ e1)
    F = np.column_stack([e1, e2, xi])
    hF = np.linalg.solve(F, h @ F)
    C = _canonical(TYPE_II, 0.0, eps)
    res = float(np.abs(hF - C).max())
    return HTypeReport(point, TYPE_II, 0.0, eps, F, "pseudo-orthonormal", hF, C, res, phi_sign)


def classify_h(S, p, tol_zero=1e-9, tol_eig=1e-9):
    """Canonical form of h at a single point (dict or coordinate sequence)."""
    pts = _as_points(S, p)
    pw = _Pointwise(S, pts)
    return classify_arrays(*pw.at(0), tol_zero=tol_zero, tol_eig=tol_eig, point=pts.point(0))


def classify_points(S, pts, tol_zero=1e-9, tol_eig=1e-9):
    pw = _Pointwise(S, pts)
    return [classify_arrays(*pw.at(i), tol_zero=tol_zero, tol_eig=tol_eig, point=pts.point(i))
            for i in range(len(pts))]


# ------------------------------------------------------------------ fitting

def nullity_regressors(eta, h, phih):
    """Columns of the linear system R(∂i,∂j)ξ = κ A + μ B + ν C over pairs
    i < j; arrays have points first, shape (p, equations, 3)."""
    p, d = eta.shape
    I = np.broadcast_to(np.eye(d), (p, d, d))
    cols = []
    for M in (I, h, phih):
        rows = []
        for i in range(d):
            for j in range(i + 1, d):
                rows.append(eta[:, j, None] * M[:, :, i] - eta[:, i, None] * M[:, :, j])
        cols.append(np.concatenate(rows, axis=1))
    return np.stack(cols, axis=2)


def curvature_xi_pairs(riem, xi):
    p, d = xi.shape
    rows = []
    for i in range(d):
        for j in range(i + 1, d):
            rows.append(np.einsum("plk,pk->pl", riem[:, :, :, i, j], xi))
    return np.concatenate(rows, axis=1)


def solve_nullity(A, y, tol_id=1e-9):
    """Least squares with sequential identifiability in the order κ, μ, ν.

    A column whose component orthogonal to the earlier identifiable columns
    has norm below tol_id·max(1, |column|) is unidentifiable: its coefficient
    is fixed to 0 and flagged, and the remaining coefficients are solved.
    """
    ident = []
    basis = []
    for k in range(A.shape[1]):
        c = A[:, k]
        r = c.copy()
        for q in basis:
            r = r - (q @ r) * q
        nr = np.linalg.norm(r)
        if nr > tol_id * max(1.0, np.linalg.norm(c)):
            ident.append(True)
            basis.append(r / nr)
        else:
            ident.append(False)
    coef = np.zeros(A.shape[1])
    idx = [k for k in range(A.shape[1]) if ident[k]]
    if idx:
        sol, *_ = np.linalg.lstsq(A[:, idx], y, rcond=None)
        coef[idx] = sol
    resid = float(np.abs(A @ coef - y).max()) if len(y) else 0.0
    return coef, resid, tuple(ident)


def fit_arrays(riem, xi, eta, h, phih, pts, tol_id=1e-9, method="least-squares"):
    A = nullity_regressors(eta, h, phih)
    y = curvature_xi_pairs(riem, xi)
    fits = []
    for i in range(len(xi)):
        coef, res, ident = solve_nullity(A[i], y[i], tol_id)
        fits.append(KMNFit(pts.point(i), float(coef[0]), float(coef[1]), float(coef[2]), res, ident,
                           method))
    return fits


def fit_kmn(S, p, tol_id=1e-9):
    """Pointwise least-squares (κ, μ, ν) of the nullity condition."""
    pts = _as_points(S, p)
    fits = fit_points(S, pts, tol_id)
    return fits[0] if not hasattr(p, "values_array") else fits


def fit_points(S, pts, tol_id=1e-9):
    pw = _Pointwise(S, pts)
    phih = pw.phi @ pw.h
    return fit_arrays(pw.geo.riem, pw.xi, pw.eta, pw.h, phih, pts, tol_id)


# ------------------------------------------------------- frame-based route

def _frames(S, pts, types, tol_zero, tol_eig):
    pw = _Pointwise(S, pts)
    out = []
    for i in range(len(pts)):
        out.append(classify_arrays(*pw.at(i), tol_zero=tol_zero, tol_eig=tol_eig, point=pts.point(i)))
    return out, pw


def _align(F, ref, g):
    """Flip frame columns of F to match the orientation of ref."""
    F = F.copy()
    for a in range(F.shape[1]):
        if F[:, a] @ ref[:, a] < 0:
            F[:, a] = -F[:, a]
    return F


def frame_derivatives_along_xi(S, pts, reports, step=1e-3):
    """∇_ξ of each adapted-frame vector, by central differences of the
    frame along ξ plus the Christoffel term; returns (p, 3, 3) with columns
    matching the frame columns."""
    xi = pts.eval(S.xi.comps)
    base = pts.values_array
    shifted = {k: classify_points(S, S.chart.points(base + k * step * xi)) for k in (-2, -1, 1, 2)}
    gamma = S.geometry(pts).gamma
    out = np.zeros((len(pts), 3, 3))
    for i, rep in enumerate(reports):
        if any(shifted[k][i].htype != rep.htype for k in shifted):
            out[i] = np.nan
            continue
        Fk = {k: _align(shifted[k][i].adapted_frame, rep.adapted_frame, None) for k in shifted}
        dF = (Fk[-2] - 8 * Fk[-1] + 8 * Fk[1] - Fk[2]) / (12 * step)
        out[i] = dF + np.einsum("kij,i,ja->ka", gamma[i], xi[i], rep.adapted_frame)
    return out


def _xi_log_lambda(S, pts):
    """ξ(λ)/λ from the symbolic field tr h² (λ² = |tr h²|/2)."""
    h2 = S.h @ S.h
    tr = h2.comps[0, 0] + h2.comps[1, 1] + h2.comps[2, 2]
    dtr = S.xi.apply(tr)
    t, dt = pts.eval(tr), pts.eval(dtr)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 0.5 * dt / t


def ricci_eigen_defect(S, pts):
    """Norm (Euclidean, coordinates) of the ker η part of Qξ at each point."""
    geo = S.geometry(pts)
    xi = pts.eval(S.xi.comps)
    eta = pts.eval(S.eta.comps)
    Qxi = np.einsum("pij,pj->pi", geo.ricci_operator, xi)
    proj = Qxi - np.einsum("pi,pi->p", eta, Qxi)[:, None] * xi
    return np.abs(proj).max(axis=1), Qxi


def kmn_from_frame(S, p, tol_zero=1e-9, tol_eig=1e-9, step=1e-3, eigen_tol=1e-7):
    """(κ, μ, ν) from the adapted frame: κ = S(ξ,ξ)/2 and μ from the gauge
    scalar (−2b for TypeI, −2a₂ for TypeII, −2b̃₃ for TypeIII), ν = −ξ(λ)/λ
    (ν fixed to 0 and flagged unidentifiable in TypeII)."""
    pts = _as_points(S, p)
    fits = kmn_from_frame_points(S, pts, tol_zero, tol_eig, step, eigen_tol)
    return fits[0] if not hasattr(p, "values_array") else fits


def kmn_from_frame_points(S, pts, tol_zero=1e-9, tol_eig=1e-9, step=1e-3, eigen_tol=1e-7):
    reports, pw = _frames(S, pts, None, tol_zero, tol_eig)
    geo = pw.geo
    Sxx = np.einsum("pjk,pj,pk->p", geo.ricci_tensor, pw.xi, pw.xi)
    defect, _ = ricci_eigen_defect(S, pts)
    nabla_F = frame_derivatives_along_xi(S, pts, reports, step)
    xll = _xi_log_lambda(S, pts)
    fits = []
    for i, rep in enumerate(reports):
        point = pts.point(i)
        if defect[i] > eigen_tol:
            fits.append(KMNFit(point, np.nan, np.nan, np.nan, np.inf, (False,) * 3, "frame",
                               f"xi is not a Ricci eigenvector (defect {defect[i]:.3g})"))
            continue
        kappa = 0.5 * Sxx[i]
        g = pw.g[i]
        F = rep.adapted_frame
        if rep.htype in (TYPE_I, TYPE_III):
            gauge = _inner(g, nabla_F[i][:, 0], F[:, 1])
            fits.append(KMNFit(point, float(kappa), float(-2 * gauge), float(-xll[i]), 0.0,
                               (True, True, True), "frame"))
        elif rep.htype == TYPE_II:
            gauge = _inner(g, nabla_F[i][:, 0], F[:, 1])
            fits.append(KMNFit(point, float(kappa), float(-2 * gauge), 0.0, 0.0,
                               (True, True, False), "frame"))
        else:
            fits.append(KMNFit(point, float(kappa), 0.0, 0.0, 0.0, (True, False, False), "frame"))
    return fits


def gauge_scalars(S, pts, reports, step=1e-3):
    """b (TypeI), a₂ (TypeII) or b̃₃ (TypeIII) at each point."""
    nabla_F = frame_derivatives_along_xi(S, pts, reports, step)
    g = pts.eval(S.g.comps)
    return np.array([_inner(g[i], nabla_F[i][:, 0], rep.adapted_frame[:, 1])
                     if rep.htype != ZERO else 0.0 for i, rep in enumerate(reports)])


# -------------------------------------------------- symbolic (κ, μ, ν) fields

def _trace(M):
    return sum((M[i, i] for i in range(M.shape[0])), E.ZERO)


def _frob(A, B):
    return sum((A[idx] * B[idx] for idx in np.ndindex(A.shape)), E.ZERO)


def nabla_xi_end(S, T):
    """Symbolic ∇_ξ T for an EndField T."""
    from .geometry import christoffel, EndField, _obj
    gamma = christoffel(S.g)
    d = S.dim
    xi = S.xi.comps
    out = _obj((d, d))
    for i in range(d):
        for j in range(d):
            v = S.xi.apply(T.comps[i, j])
            for k in range(d):
                if xi[k].is_const(0.0):
                    continue
                for m in range(d):
                    v = v + xi[k] * (gamma[i, k, m] * T.comps[m, j] - gamma[m, k, j] * T.comps[i, m])
            out[i, j] = v
    return EndField(S.chart, out)


def kmn_fields(S, htype):
    """Symbolic scalar fields (κ, μ, ν) from the frame closed forms written
    without a frame: κ = S(ξ,ξ)/2; for TypeI/III μ = −2b = tr(∇_ξh ∘ φh)/tr h²
    and ν = −ξ(λ)/λ = −ξ(tr h²)/(2 tr h²); for TypeII μ = −2a₂ obtained from
    ∇_ξh = 2a₂ φh by coordinate projection, ν = 0."""
    from .geometry import ricci
    Sx, _, _ = ricci(S.g)
    xi = S.xi.comps
    d = S.dim
    kappa = 0.5 * sum((Sx[i, j] * xi[i] * xi[j] for i in range(d) for j in range(d)), E.ZERO)
    if htype == ZERO:
        return ScalarField(S.chart, kappa), ScalarField(S.chart, E.ZERO), ScalarField(S.chart, E.ZERO)
    nh = nabla_xi_end(S, S.h)
    phih = S.phi_h
    if htype == TYPE_II:
        mu = -(_frob(nh.comps, phih.comps) / _frob(phih.comps, phih.comps))
        nu = E.ZERO
    else:
        trh2 = _trace((S.h @ S.h).comps)
        mu = _trace((nh @ phih).comps) / trh2
        nu = -(S.xi.apply(trh2) / (2.0 * trh2))
    return ScalarField(S.chart, kappa), ScalarField(S.chart, mu), ScalarField(S.chart, nu)


# ------------------------------------------------------------- suites

def _dominant_type(reports):
    types = [r.htype for r in reports]
    return max(set(types), key=lambda t: (types.count(t), t))


def nullity_identity_suite(S, pts, fits=None, tol=1e-7, step=1e-3):
    """Identities of a 3D (κ, μ, ν)-structure, with κ, μ, ν taken from the
    frame closed forms as symbolic fields."""
    rep = Report(S.name, "nullity identities")
    reports = classify_points(S, pts)
    htype = _dominant_type(reports)
    rep.data["htype"] = htype
    if fits is None:
        fits = fit_points(S, pts)
    fres = np.array([f.residual for f in fits])
    rep.add(Check("nullity_fit", "R(X,Y)xi = kappa(...) + mu(...) + nu(...) holds pointwise",
                  float(fres.max()), tol, fits[int(np.argmax(fres))].point))
    kf, mf, nf = kmn_fields(S, htype)
    K, M, N = pts.eval(kf.expr), pts.eval(mf.expr), pts.eval(nf.expr)
    fk = np.array([f.kappa for f in fits])
    fm = np.array([f.mu for f in fits])
    fn = np.array([f.nu for f in fits])
    rep.add(residual_check("kappa_field_vs_fit", "closed-form kappa equals fitted kappa", K - fk, pts, 1e-6))
    if htype != ZERO:
        rep.add(residual_check("mu_field_vs_fit", "closed-form mu equals fitted mu", M - fm, pts, 1e-6))
    if htype in (TYPE_I, TYPE_III):
        rep.add(residual_check("nu_field_vs_fit", "closed-form nu equals fitted nu", N - fn, pts, 1e-6))

    pw = _Pointwise(S, pts)
    phi, xi, eta, g, h = pw.phi, pw.xi, pw.eta, pw.g, pw.h
    geo = pw.geo
    d = 3
    n = S.n
    I = np.broadcast_to(np.eye(d), (len(pts), d, d))
    phi2 = phi @ phi
    phih = phi @ h
    rep.add(residual_check("h_squared", "h^2 = (1 + kappa) phi^2", h @ h - (1 + K)[:, None, None] * phi2,
                           pts, tol))
    Qxi = np.einsum("pij,pj->pi", geo.ricci_operator, xi)
    rep.add(residual_check("ricci_xi", "Q xi = 2n kappa xi", Qxi - 2 * n * K[:, None] * xi, pts, tol))

    nt = nabla_tensors(S, pts)
    nh, nphi, nphih = nt["nh"], nt["nphi"], nt["nphih"]
    # (∇_X φ)Y in 3D, valid for kappa != -1
    Ih = I - h
    gIh = np.einsum("pab,pak->pkb", g, Ih)
    rhs = -np.einsum("pkj,pi->pijk", gIh, xi) + np.einsum("pj,pik->pijk", eta, Ih)
    if htype != TYPE_II and htype != ZERO:
        rep.add(residual_check("nabla_phi", "(nabla_X phi)Y = -g(X - hX, Y) xi + eta(Y)(X - hX)",
                               nphi - rhs, pts, tol))
    # (∇_X h)Y − (∇_Y h)X, index [p, i, b, a] with X = ∂a, Y = ∂b
    XY_h = np.swapaxes(nh, 2, 3) - nh
    gphi = np.einsum("pab,pbc->pac", g, phi)  # g(∂a, φ∂b)
    Kc = (1 + K)[:, None, None, None]
    Mc = (1 - M)[:, None, None, None]
    Nc = N[:, None, None, None]
    term_k = (2 * np.einsum("pab,pi->piab", gphi, xi) + np.einsum("pa,pib->piab", eta, phi)
              - np.einsum("pb,pia->piab", eta, phi))
    term_m = np.einsum("pa,pib->piab", eta, phih) - np.einsum("pb,pia->piab", eta, phih)
    term_n = np.einsum("pa,pib->piab", eta, h) - np.einsum("pb,pia->piab", eta, h)
    rep.add(residual_check("nabla_h_antisym",
                           "(nabla_X h)Y - (nabla_Y h)X = -(1+kappa)(...) + (1-mu)(...) - nu(...)",
                           XY_h - (-Kc * term_k + Mc * term_m - Nc * term_n), pts, tol))
    XY_ph = np.swapaxes(nphih, 2, 3) - nphih
    term_k2 = np.einsum("pa,pib->piab", eta, I) - np.einsum("pb,pia->piab", eta, I)
    rep.add(residual_check("nabla_phih_antisym",
                           "(nabla_X phi h)Y - (nabla_Y phi h)X = -(1+kappa)(...) + (1-mu)(...) - nu(...)",
                           XY_ph - (-Kc * term_k2 + Mc * term_n - Nc * term_m), pts, tol))
    nxih = np.einsum("pijk,pk->pij", nh, xi)
    nxiph = np.einsum("pijk,pk->pij", nphih, xi)
    Mm, Nn = M[:, None, None], N[:, None, None]
    rep.add(residual_check("nabla_xi_h", "nabla_xi h = mu h o phi - nu h", nxih - (Mm * (h @ phi) - Nn * h),
                           pts, tol))
    rep.add(residual_check("nabla_xi_phih", "nabla_xi phi h = -mu h + nu h o phi",
                           nxiph - (-Mm * h + Nn * (h @ phi)), pts, tol))
    # R(ξ, ∂a)∂b
    Rxi = np.einsum("plbia,pi->plab", geo.riem, xi)
    gh = np.einsum("pcb,pca->pab", g, h)  # g(h∂a, ∂b)
    gph = np.einsum("pcb,pca->pab", g, phih)
    Kk = K[:, None, None, None]
    rhs = (Kk * (np.einsum("pab,pl->plab", g, xi) - np.einsum("pb,pla->plab", eta, I))
           + Mm[..., None] * (np.einsum("pab,pl->plab", gh, xi) - np.einsum("pb,pla->plab", eta, h))
           + Nn[..., None] * (np.einsum("pab,pl->plab", gph, xi) - np.einsum("pb,pla->plab", eta, phih)))
    rep.add(residual_check("curvature_xi_X_Y", "R(xi,X)Y = kappa(g(X,Y)xi - eta(Y)X) + mu(...) + nu(...)",
                           Rxi - rhs, pts, tol))
    dK = pts.eval(grad(kf.expr, S.chart))
    xiK = np.einsum("pi,pi->p", dK, xi)
    rep.add(residual_check("xi_kappa", "xi(kappa) = -2 nu (1 + kappa)", xiK + 2 * N * (1 + K), pts, tol))
    dM = pts.eval(grad(mf.expr, S.chart))
    dN = pts.eval(grad(nf.expr, S.chart))
    xiM = np.einsum("pi,pi->p", dM, xi)
    xiN = np.einsum("pi,pi->p", dN, xi)
    # index [p, l, a, b] with X = ∂a, Y = ∂b
    A_k = np.einsum("pb,pla->plab", eta, I) - np.einsum("pa,plb->plab", eta, I)
    A_m = np.einsum("pb,pla->plab", eta, h) - np.einsum("pa,plb->plab", eta, h)
    A_n = np.einsum("pb,pla->plab", eta, phih) - np.einsum("pa,plb->plab", eta, phih)
    dif = (xiK[:, None, None, None] * A_k + xiM[:, None, None, None] * A_m + xiN[:, None, None, None] * A_n
           + np.einsum("pa,plb->plab", dK, phi2) - np.einsum("pb,pla->plab", dK, phi2)
           + np.einsum("pa,plb->plab", dM, h) - np.einsum("pb,pla->plab", dM, h)
           + np.einsum("pa,plb->plab", dN, phih) - np.einsum("pb,pla->plab", dN, phih))
    rep.add(residual_check("differential_equation",
                           "0 = xi(kappa)(...) + xi(mu)(...) + xi(nu)(...) + X(kappa) phi^2 Y - ...",
                           dif, pts, tol))

    # type-specific forms of ∇_ξ h from the adapted frame
    Sxx = np.einsum("pjk,pj,pk->p", geo.ricci_tensor, xi, xi)
    rep.add(residual_check("h2_minus_phi2", "h^2 - phi^2 = (S(xi,xi)/2) phi^2",
                           h @ h - phi2 - 0.5 * Sxx[:, None, None] * phi2, pts, tol))
    gauge = gauge_scalars(S, pts, reports, step)
    xll = _xi_log_lambda(S, pts)
    typed = np.zeros_like(nxih)
    for i, r in enumerate(reports):
        if r.htype in (TYPE_I, TYPE_III):
            s = h[i] / r.lam_signed
            typed[i] = nxih[i] - (-2 * gauge[i] * (h[i] @ phi[i]) + xll[i] * r.lam_signed * s)
        elif r.htype == TYPE_II:
            # with φe1 = −e1 the frame is mirrored and a₂ changes sign
            typed[i] = nxih[i] - 2 * r.phi_sign * gauge[i] * (phi[i] @ h[i])
    anchor = {TYPE_I: "nabla_xi h = -2b h phi + xi(lambda) s",
              TYPE_II: "nabla_xi h = 2 s a2 phi h, phi e1 = s e1",
              TYPE_III: "nabla_xi h = -2 b3 h phi + xi(lambda) s",
              ZERO: "nabla_xi h = 0"}[htype]
    rep.add(residual_check("nabla_xi_h_typed", anchor, typed, pts, 1e-6,
                           {"gauge_from": "central difference of the adapted frame along xi"}))
    return rep


def ricci_decomposition(S, pts, step=1e-3):
    """Ricci operator on the adapted frame: coefficients and the residual of
    Q = aI + b η⊗ξ − φ∇_ξh + σ(φ²·)ξ − σ(e)η⊗e + σ(φe)η⊗φe (types I/III) and
    its pseudo-orthonormal analogue (type II)."""
    reports = classify_points(S, pts)
    pw = _Pointwise(S, pts)
    geo = pw.geo
    Q = geo.ricci_operator
    r = geo.scalar_curvature
    nt = nabla_tensors(S, pts)
    nxih = np.einsum("pijk,pk->pij", nt["nh"], pw.xi)
    gauge = gauge_scalars(S, pts, reports, step)
    xll = _xi_log_lambda(S, pts)
    out = []
    for i, rep in enumerate(reports):
        phi, xi, eta, g, h = pw.at(i)
        F = rep.adapted_frame
        sigma = tuple(float(pw.xi[i] @ geo.ricci_tensor[i] @ F[:, a]) for a in range(2))
        lam = rep.lam
        if rep.htype == TYPE_I:
            a, b = 1 - lam ** 2 + r[i] / 2, 3 * (lam ** 2 - 1) - r[i] / 2
        elif rep.htype == TYPE_III:
            a, b = 1 + lam ** 2 + r[i] / 2, -3 * (lam ** 2 + 1) - r[i] / 2
        else:
            a, b = 1 + r[i] / 2, -3 - r[i] / 2
        sig_form = xi @ geo.ricci_tensor[i]  # σ as a covector (S(ξ, ·))
        model = a * np.eye(3) + b * np.outer(xi, eta) - phi @ nxih[i]
        model = model + np.outer(xi, sig_form @ (phi @ phi))
        Qxi_perp = Q[i] @ xi - (eta @ (Q[i] @ xi)) * xi
        model = model + np.outer(Qxi_perp, eta)
        res = float(np.abs(model - Q[i]).max())
        QF = np.linalg.solve(F, Q[i] @ F)
        out.append(RicciDecomposition(pts.point(i), rep.htype, float(a), float(b), sigma,
                                      float(gauge[i]), float(xll[i] * rep.lam_signed), res,
                                      {"Q_in_frame": QF}))
    return out


def eigendistribution_projectors(S, p, tol=1e-8):
    """Rank-one projectors of ker η onto the ±λ eigenlines of h (TypeI) or
    of φh (TypeIII), plus a verification record."""
    rep = classify_h(S, p)
    if rep.htype not in (TYPE_I, TYPE_III):
        raise NotApplicableError(f"eigendistributions need kappa != -1 (found {rep.htype})")
    pts = _as_points(S, p)
    phi, xi, eta, g, h = _Pointwise(S, pts).at(0)
    op = h if rep.htype == TYPE_I else phi @ h
    lam = rep.lam
    F = rep.adapted_frame
    e, pe = F[:, 0], F[:, 1]
    # eigenvectors of op on ker η with eigenvalues ±λ: combinations of e and φe
    vecs = {}
    for sgn in (1, -1):
        A = op - sgn * lam * np.eye(3)
        basis = np.column_stack([e, pe])
        M = A @ basis
        _, _, vt = np.linalg.svd(M)
        c = vt[-1]
        vecs[sgn] = basis @ c
    proj = {}
    for sgn, v in vecs.items():
        # g-orthogonal projector onto span(v) along its orthogonal complement in ker η
        gv = g @ v
        proj[sgn] = np.outer(v, gv) / (v @ gv)
    vp, vm = vecs[1], vecs[-1]
    checks = {
        "eigen_plus": float(np.abs(op @ vp - lam * vp).max() / max(1.0, np.abs(vp).max())),
        "eigen_minus": float(np.abs(op @ vm + lam * vm).max() / max(1.0, np.abs(vm).max())),
        "orthogonal": abs(_inner(g, vp, vm)) / max(1e-300, np.abs(vp).max() * np.abs(vm).max()),
        "phi_swaps": float(_parallel_defect(phi @ vp, vm)),
        "projectors_sum": float(np.abs(proj[1] + proj[-1] + np.outer(xi, eta) - np.eye(3)).max()),
    }
    return (proj[1], proj[-1]), {"htype": rep.htype, "lambda": lam, "checks": checks,
                                 "passed": all(v < tol for v in checks.values())}


def _parallel_defect(a, b):
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return min(np.abs(a - b).max(), np.abs(a + b).max())


def type_constancy_scan(S, pts, tol_zero=1e-9, tol_eig=1e-9):
    """Classify every point; report whether the type is constant on each
    cluster of points sharing the sign pattern of the chart constraints."""
    reports = classify_points(S, pts, tol_zero, tol_eig)
    ev_signs = []
    for e, kind in S.chart.constraints:
        ev_signs.append(np.sign(pts.eval(e)))
    keys = [tuple(int(s[i]) for s in ev_signs) for i in range(len(pts))]
    clusters = {}
    for k, r in zip(keys, reports):
        if r.htype == ZERO:
            continue
        clusters.setdefault(k, []).append(r.htype)
    summary = {str(list(k)): sorted(set(v)) for k, v in clusters.items()}
    constant = all(len(set(v)) == 1 for v in clusters.values())
    rep = Report(S.name, "canonical form scan")
    counts = {t: sum(r.htype == t for r in reports) for t in (ZERO, TYPE_I, TYPE_II, TYPE_III)}
    rep.data.update({"counts": counts, "clusters": summary, "constant_per_cluster": constant})
    mixed = sum(len(set(v)) > 1 for v in clusters.values())
    rep.add(Check("type_constant", "canonical form of h constant on each connected cluster", float(mixed),
                  0.5, None, constant, {"clusters": summary}))
    res = np.array([r.residual for r in reports])
    rep.add(Check("canonical_residual", "h in the adapted frame equals its canonical matrix",
                  float(res.max()), 1e-7, reports[int(np.argmax(res))].point))
    signs = sorted({r.sign for r in reports if r.htype != ZERO})
    rep.data["signs"] = signs
    return rep, reports
