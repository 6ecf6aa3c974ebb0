"""JSON manifests, the bundled corpus and the staged verification suite."""

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import expr as E
from .bridge import (
    boeckx_values, bridge_report, build_contact_from_coordinate, build_contact_from_frame,
    build_zetamu_model, fit_contact_kmn, contact_identity_suite, induce_paracontact, validate_contact, zetamu_checks,
)
from .classify import (
    ClassificationError, NotApplicableError, TYPE_II, fit_points, nullity_identity_suite, type_constancy_scan,
)
from .deform import deformation_report, phih_sign
from .geometry import Chart, GeometryError, VectorField
from .harmonic import harmonicity_scan
from .oracle import oracle_report
from .report import Check, Report, flag_check, residual_check
from .structures import (
    FramePresentation, StructureError, build_from_coordinate, build_from_frame,
    metric_identity_suite, paracontact_identity_suite, validate,
)

CORPUS = ("example41", "example42", "example43", "example43-bridge", "zetamu-plus-1")
PRINTED = ("example41-printed", "example42-printed")

# errors that become failed verdicts inside a suite stage
STAGE_ERRORS = (StructureError, GeometryError, ClassificationError, NotApplicableError, E.ExprError,
                np.linalg.LinAlgError)


class ManifestError(ValueError):
    """Invalid manifest; `pointer` is a JSON pointer into the document."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.message = message


@dataclass
class Manifest:
    name: str
    kind: str
    chart: dict
    presentation: dict
    declared: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    description: str = ""
    path: str = None

    @property
    def points(self):
        return int(self.sampling.get("points", 100))

    @property
    def seed(self):
        return int(self.sampling.get("seed", 42))


def _data():
    return resources.files("paracontact") / "data"


def manifest_schema():
    return json.loads((_data() / "manifest.schema.json").read_text())


def _pointer(path):
    return "".join(f"/{p}" for p in path)


# ------------------------------------------------------------------ loading

def load_manifest(source):
    """Manifest from a path, a JSON string or an already parsed dict."""
    path = None
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            raw = text
        else:
            path = str(source)
            try:
                raw = Path(source).read_text()
            except OSError as err:
                raise ManifestError("", f"cannot read {source}: {err.strerror}") from None
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as err:
            raise ManifestError("", f"malformed JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    validator = jsonschema.Draft202012Validator(manifest_schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise ManifestError(_pointer(err.absolute_path), err.message)
    _check_consistency(doc)
    return Manifest(doc["name"], doc["kind"], doc["chart"], doc["presentation"], doc.get("declared", {}),
                    doc.get("sampling", {}), doc.get("description", ""), path)


def _shape(a):
    if isinstance(a, list):
        if not a:
            return (0,)
        inner = {_shape(x) for x in a}
        if len(inner) != 1:
            return None
        sub = inner.pop()
        return None if sub is None else (len(a),) + sub
    return ()


def _check_consistency(doc):
    coords = doc["chart"]["coords"]
    d = len(coords)
    if len(set(coords)) != d:
        raise ManifestError("/chart/coords", "duplicate coordinate names")
    if d % 2 == 0:
        raise ManifestError("/chart/coords", f"(para)contact charts have odd dimension, got {d}")

    def expr_at(ptr, v):
        if isinstance(v, str):
            try:
                E.parse(v, coords)
            except E.ExprError as err:
                raise ManifestError(ptr, str(err)) from None

    def array_at(ptr, a, shape):
        got = _shape(a)
        if got != shape:
            desc = "ragged" if got is None else "x".join(map(str, got))
            raise ManifestError(ptr, f"expected shape {'x'.join(map(str, shape))}, got {desc}")
        for idx in np.ndindex(*shape):
            v = a
            for k in idx:
                v = v[k]
            expr_at(ptr + "".join(f"/{k}" for k in idx), v)

    for i, c in enumerate(doc["chart"].get("constraints", [])):
        expr_at(f"/chart/constraints/{i}/expr", c["expr"])
    for c, b in doc["chart"].get("sample_bounds", {}).items():
        if c not in coords:
            raise ManifestError(f"/chart/sample_bounds/{c}", f"unknown coordinate {c!r}")
        if not b[0] < b[1]:
            raise ManifestError(f"/chart/sample_bounds/{c}", "lower bound must be below upper bound")
    p = doc["presentation"]
    kind = p["type"]
    if kind == "coordinate":
        for key, shape in (("phi", (d, d)), ("xi", (d,)), ("eta", (d,)), ("g", (d, d))):
            array_at(f"/presentation/{key}", p[key], shape)
    elif kind == "frame":
        array_at("/presentation/frame", p["frame"], (d, d))
        array_at("/presentation/phi_on_frame", p["phi_on_frame"], (d, d))
        if isinstance(p["gram"], list) and len(p["gram"]) != d:
            raise ManifestError("/presentation/gram", f"expected {d} signs, got {len(p['gram'])}")
        if p["gram"] == "pseudo-orthonormal" and d != 3:
            raise ManifestError("/presentation/gram", "pseudo-orthonormal frames are three-dimensional")
        if p["xi_index"] >= d:
            raise ManifestError("/presentation/xi_index", f"must be below {d}")
    elif kind == "induced":
        if doc["kind"] != "paracontact":
            raise ManifestError("/kind", "induced presentations are paracontact")
    elif kind == "zetamu":
        if doc["kind"] != "contact":
            raise ManifestError("/kind", "zetamu models are contact structures")
        if tuple(coords) != ("x", "y", "z"):
            raise ManifestError("/chart/coords", "zetamu models use coordinates x, y, z")
        for key in ("f", "r", "s"):
            if key in p:
                expr_at(f"/presentation/{key}", p[key])
    for key, v in doc.get("declared", {}).items():
        if key != "htype":
            expr_at(f"/declared/{key}", v)


def corpus_path(name):
    sub = "printed/" if name in PRINTED else ""
    p = _data() / "corpus" / f"{sub}{name}.json"
    if name not in CORPUS + PRINTED or not p.is_file():
        raise ManifestError("", f"unknown corpus entry {name!r}")
    return p


def load_corpus(name):
    m = load_manifest(json.loads(corpus_path(name).read_text()))
    m.path = f"corpus:{name}"
    return m


def resolve(source):
    """A manifest from a corpus name or a file path."""
    if isinstance(source, Manifest):
        return source
    if isinstance(source, str) and source in CORPUS + PRINTED and not Path(source).exists():
        return load_corpus(source)
    return load_manifest(source)


# ----------------------------------------------------------------- building

def build_chart(m):
    c = m.chart
    cons = [(x["expr"], x["kind"]) for x in c.get("constraints", [])]
    bounds = {k: tuple(v) for k, v in c.get("sample_bounds", {}).items()}
    full = {k: bounds.get(k, (-1.0, 1.0)) for k in c["coords"]}
    return Chart(m.name, c["coords"], cons, full)


def build_structure(m):
    """The structure a manifest describes (ParacontactStructure or
    ContactStructure)."""
    p = m.presentation
    kind = p["type"]
    if kind == "induced":
        src = resolve(p["source"])
        if src.kind != "contact":
            raise ManifestError("/presentation/source", f"{src.name} is not a contact manifest")
        P = induce_paracontact(build_structure(src), name=m.name)
        return P
    if kind == "zetamu":
        bounds = {k: tuple(v) for k, v in m.chart.get("sample_bounds", {}).items()} or None
        return build_zetamu_model(p["branch"], p["nu"], p.get("f", "0"), p.get("r", "1"), p.get("s", "0"),
                                  bounds=bounds, name=m.name)
    chart = build_chart(m)
    contact = m.kind == "contact"
    if kind == "coordinate":
        if contact:
            return build_contact_from_coordinate(chart, p["phi"], p["xi"], p["eta"], p["g"], name=m.name)
        return build_from_coordinate(chart, p["phi"], p["xi"], p["eta"], p["g"], name=m.name)
    frame = [VectorField(chart, [chart.parse(v) if isinstance(v, str) else E.const(v) for v in row])
             for row in p["frame"]]
    fp = FramePresentation(frame, p["gram"], [[chart.parse(v) if isinstance(v, str) else v for v in row]
                                              for row in p["phi_on_frame"]])
    if contact:
        return build_contact_from_frame(chart, fp, p["xi_index"], name=m.name)
    return build_from_frame(chart, fp, p["xi_index"], name=m.name)


def declared_values(m, S, pts):
    """Declared scalar fields evaluated at the points."""
    out = {}
    for key in ("kappa", "mu", "nu", "lambda"):
        if key in m.declared:
            v = m.declared[key]
            e = S.chart.parse(v) if isinstance(v, str) else E.const(v)
            out[key] = pts.eval(e) * np.ones(len(pts))
    return out


# ------------------------------------------------------------------- suite

@dataclass
class SuiteOptions:
    points: int = None
    seed: int = None
    tol: float = 1e-8
    alphas: tuple = ()
    oracle: bool = False


def sample(m, S, options=None):
    options = options or SuiteOptions()
    n = options.points if options.points is not None else m.points
    seed = options.seed if options.seed is not None else m.seed
    return S.chart.sample(n, seed)


def _stage(parent, stage_id, fn):
    """Run one stage; an exception becomes a failed check."""
    try:
        out = fn()
    except STAGE_ERRORS as err:
        rep = Report(parent.subject, stage_id)
        rep.add(Check(f"{stage_id}_completed", "stage runs to completion", float("inf"), 0.5, None, False,
                      {"error": f"{type(err).__name__}: {err}"}))
        parent.extend(rep)
        return None
    if isinstance(out, tuple):
        parent.extend(out[0])
    else:
        parent.extend(out)
    return out


def fit_stage(m, S, pts, tol=1e-8, declared_tol=1e-6):
    """Pointwise nullity fit and comparison with the declared fields."""
    rep = Report(S.name, "nullity fit scan")
    fits = fit_contact_kmn(S, pts) if S.kind == "contact" else fit_points(S, pts)
    res = np.array([f.residual for f in fits])
    rep.add(residual_check("fit_residual", "R(X,Y)xi = kappa(...) + mu(...) + nu(...)", res, pts, tol))
    k = np.array([f.kappa for f in fits])
    mu = np.array([f.mu for f in fits])
    nu = np.array([f.nu for f in fits])
    ident = np.array([f.identifiable for f in fits])
    dec = declared_values(m, S, pts)
    if "kappa" in dec:
        rep.add(residual_check("declared_kappa", "fitted kappa equals the declared field", k - dec["kappa"],
                               pts, declared_tol))
    if "mu" in dec and "nu" in dec:
        # where φh = ±h only μ ± ν is determined
        sg = phih_sign(S, pts) if S.kind == "paracontact" else np.zeros(len(pts))
        free = ~ident[:, 2] & (sg != 0)
        dm = np.where(free, (mu + sg * nu) - (dec["mu"] + sg * dec["nu"]), mu - dec["mu"])
        dn = np.where(free, 0.0, nu - dec["nu"])
        rep.add(residual_check("declared_mu", "fitted mu equals the declared field", dm, pts, declared_tol))
        rep.add(residual_check("declared_nu", "fitted nu equals the declared field", dn, pts, declared_tol))
    rep.data["kappa_range"] = [float(k.min()), float(k.max())]
    rep.data["mu_range"] = [float(mu.min()), float(mu.max())]
    rep.data["nu_range"] = [float(nu.min()), float(nu.max())]
    rep.data["unidentifiable"] = {c: int((~ident[:, i]).sum()) for i, c in enumerate(("kappa", "mu", "nu"))}
    rep.data["sample"] = [f.to_dict() for f in fits[:3]]
    return rep, fits


def classification_stage(m, S, pts):
    rep, reports = type_constancy_scan(S, pts)
    types = sorted({r.htype for r in reports})
    rep.data["types"] = types
    rep.add(flag_check("no_type_iv", "canonical form of h is one of I, II, III",
                       [r.htype in ("Zero", "TypeI", "TypeII", "TypeIII") for r in reports], pts))
    if "htype" in m.declared:
        rep.add(flag_check("declared_htype", f"h is of declared type {m.declared['htype']}",
                           [r.htype == m.declared["htype"] for r in reports], pts))
    dec = declared_values(m, S, pts)
    if "lambda" in dec:
        lam = np.array([r.lam for r in reports])
        rep.add(residual_check("declared_lambda", "lambda equals the declared field", lam - dec["lambda"],
                               pts, 1e-6))
    h = pts.eval(S.h.comps)
    h2 = np.abs(h @ h).reshape(len(pts), -1).max(axis=1)
    hn = np.abs(h).reshape(len(pts), -1).max(axis=1)
    rep.data["h_squared_max"] = float(h2.max())
    rep.data["h_min"] = float(hn.min())
    if TYPE_II in types:
        two = np.array([r.htype == TYPE_II for r in reports])
        rep.add(residual_check("type_ii_h_squared", "h^2 = 0 on TypeII points", np.where(two, h2, 0.0),
                               pts, 1e-8))
        rep.add(flag_check("type_ii_h_nonzero", "h != 0 on TypeII points", ~two | (hn > 1e-8), pts))
    return rep, reports


def run_suite(m, options=None):
    """Validation, identity suite, classification, fits, curvature identity
    suite, harmonicity, optional deformations and oracle, and the bridge for
    contact inputs."""
    options = options or SuiteOptions()
    m = resolve(m)
    top = Report(m.name, "suite")
    top.data["manifest"] = {"name": m.name, "kind": m.kind, "presentation": m.presentation["type"]}
    try:
        S = build_structure(m)
        pts = sample(m, S, options)
    except STAGE_ERRORS as err:
        top.add(Check("build", "structure builds and samples", float("inf"), 0.5, None, False,
                      {"error": f"{type(err).__name__}: {err}"}))
        return top
    top.data["points"] = len(pts)
    top.data["seed"] = options.seed if options.seed is not None else m.seed
    top.data["tol"] = options.tol
    tol = options.tol
    if S.kind == "contact":
        _stage(top, "validation", lambda: validate_contact(S, pts, tol))
        _stage(top, "metric identities", lambda: metric_identity_suite(S, pts, tol))
        _stage(top, "contact identities", lambda: contact_identity_suite(S, pts))
        _stage(top, "fit", lambda: fit_stage(m, S, pts, tol))
        if hasattr(S, "model_params"):
            _stage(top, "model", lambda: zetamu_checks(S, pts))
        I, xiI = boeckx_values(S, pts)
        top.data["boeckx_range"] = [float(I.min()), float(I.max())]
        if options.oracle:
            _stage(top, "oracle", lambda: oracle_report(S, pts))
        _stage(top, "bridge", lambda: bridge_report(S, pts, tol))
        return top
    _stage(top, "validation", lambda: validate(S, pts, tol))
    _stage(top, "identities", lambda: paracontact_identity_suite(S, pts, tol))
    _stage(top, "classification", lambda: classification_stage(m, S, pts))
    fits = _stage(top, "fit", lambda: fit_stage(m, S, pts, tol))
    _stage(top, "curvature identities", lambda: nullity_identity_suite(S, pts, fits[1] if fits else None))
    _stage(top, "harmonicity", lambda: harmonicity_scan(S, pts))
    for a in options.alphas:
        _stage(top, "deformation", lambda a=a: deformation_report(S, a, pts, tol))
    if options.oracle:
        _stage(top, "oracle", lambda: oracle_report(S, pts))
    return top
