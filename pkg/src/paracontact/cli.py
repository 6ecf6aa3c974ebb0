"""Command-line interface. Exit status: 0 when every verdict passes, 1 on a
failed check, 2 on input errors."""

import argparse
import json
import sys

from . import corpus as K
from .bridge import bridge_report, validate_contact
from .classify import ClassificationError, classify_h
from .deform import DeformationError, deformation_report
from .expr import ExprError
from .geometry import GeometryError
from .report import Check, Report
from .structures import StructureError, validate


class InputError(Exception):
    pass


def _common(p):
    p.add_argument("--points", type=int, default=None, help="sample points (default: manifest value or 100)")
    p.add_argument("--seed", type=int, default=None, help="sampling seed (default: manifest value or 42)")
    p.add_argument("--tol", type=float, default=1e-8, help="tolerance for structure axioms (default 1e-8)")
    p.add_argument("--format", choices=("json", "md"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="paracontact",
                                     description="Verify (para)contact metric structures given as JSON manifests.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        return p

    verb("validate", "check the structure axioms").add_argument("manifest")
    p = verb("classify", "canonical form of h")
    p.add_argument("manifest")
    p.add_argument("--point", help="comma-separated coordinates of a single point")
    verb("fit", "pointwise (kappa, mu, nu) fit").add_argument("manifest")
    p = verb("suite", "run every stage")
    p.add_argument("manifest")
    p.add_argument("--alpha", type=float, action="append", default=[], help="add a deformation stage")
    p.add_argument("--oracle", action="store_true", help="add the finite-difference oracle stage")
    p = verb("deform", "D-homothetic deformation laws")
    p.add_argument("manifest")
    p.add_argument("--alpha", type=float, required=True)
    verb("bridge", "induced paracontact structure of a contact manifest").add_argument("manifest")

    p = sub.add_parser("model", help="generated models")
    msub = p.add_subparsers(dest="model", required=True)
    z = msub.add_parser("zetamu", help="contact model with constant nu and xi(I_M) = 0")
    _common(z)
    z.add_argument("--branch", choices=("plus", "minus"), default="plus")
    z.add_argument("--nu", type=float, default=1.0)
    z.add_argument("--f", default="0", help="function of z")
    z.add_argument("--r", default="1", help="nonvanishing function of z")
    z.add_argument("--s", default="0", help="function of z")
    z.add_argument("--write", help="also write the model manifest to this path")

    p = sub.add_parser("corpus", help="bundled examples")
    csub = p.add_subparsers(dest="action", required=True)
    c = csub.add_parser("list", help="list bundled manifests")
    c.add_argument("--format", choices=("json", "md"), default="md")
    c = csub.add_parser("run", help="run the suite on a bundled manifest (or 'all')")
    _common(c)
    c.add_argument("name")
    c.add_argument("--alpha", type=float, action="append", default=[])
    c.add_argument("--oracle", action="store_true")
    return parser


def _options(args):
    alphas = getattr(args, "alpha", None) or ()
    return K.SuiteOptions(points=args.points, seed=args.seed, tol=args.tol,
                          alphas=tuple(alphas) if isinstance(alphas, list) else (),
                          oracle=bool(getattr(args, "oracle", False)))


def _load(args):
    m = K.resolve(args.manifest)
    return m, K.build_structure(m)


def _parse_point(S, text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"--point must be comma-separated numbers, got {text!r}") from None
    if len(vals) != S.dim:
        raise InputError(f"--point needs {S.dim} coordinates, got {len(vals)}")
    return dict(zip(S.chart.coords, vals))


def cmd_validate(args):
    m, S = _load(args)
    pts = K.sample(m, S, _options(args))
    return [validate_contact(S, pts, args.tol) if S.kind == "contact" else validate(S, pts, args.tol)]


def cmd_classify(args):
    m, S = _load(args)
    if S.kind != "paracontact":
        raise InputError("classification applies to paracontact manifests")
    if args.point:
        p = _parse_point(S, args.point)
        rep = Report(S.name, "canonical form at a point")
        try:
            rep.data["classification"] = classify_h(S, p).to_dict()
        except ClassificationError as err:
            rep.add(Check("classifiable", "h is self-adjoint with h xi = 0", float("inf"), 0.5, p, False,
                          {"error": str(err)}))
        return [rep]
    pts = K.sample(m, S, _options(args))
    return [K.classification_stage(m, S, pts)[0]]


def cmd_fit(args):
    m, S = _load(args)
    pts = K.sample(m, S, _options(args))
    return [K.fit_stage(m, S, pts, args.tol)[0]]


def cmd_suite(args):
    return [K.run_suite(K.resolve(args.manifest), _options(args))]


def cmd_deform(args):
    m, S = _load(args)
    if S.kind != "paracontact":
        raise InputError("deformation laws are checked on paracontact manifests")
    if not args.alpha > 0:
        raise InputError(f"alpha must be positive, got {args.alpha}")
    pts = K.sample(m, S, _options(args))
    return [deformation_report(S, args.alpha, pts, args.tol)[0]]


def cmd_bridge(args):
    m, S = _load(args)
    if S.kind != "contact":
        raise InputError("bridge needs a contact manifest")
    pts = K.sample(m, S, _options(args))
    return [bridge_report(S, pts, args.tol)[0]]


def zetamu_manifest(branch, nu, f, r, s):
    name = f"zetamu-{branch}-{nu:g}"
    return {
        "name": name, "kind": "contact",
        "description": f"generated contact model, {branch} branch, nu = {nu:g}, f = {f}, r = {r}, s = {s}",
        "chart": {"coords": ["x", "y", "z"],
                  "sample_bounds": {"x": [-1.0, 1.0], "y": [-1.0, 1.0], "z": [-1.0, 1.0]}},
        "presentation": {"type": "zetamu", "branch": branch, "nu": nu, "f": f, "r": r, "s": s},
        "sampling": {"points": 100, "seed": 42},
    }


def cmd_model(args):
    doc = zetamu_manifest(args.branch, args.nu, args.f, args.r, args.s)
    m = K.load_manifest(doc)
    if args.write:
        with open(args.write, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return [K.run_suite(m, _options(args))]


def cmd_corpus(args):
    if args.action == "list":
        entries = []
        for name in K.CORPUS + K.PRINTED:
            m = K.load_corpus(name)
            entries.append({"name": name, "kind": m.kind, "presentation": m.presentation["type"],
                            "bundled": "printed transcription" if name in K.PRINTED else "corpus",
                            "description": m.description})
        if args.format == "json":
            print(json.dumps(entries, indent=2, sort_keys=True))
        else:
            print("| name | kind | presentation | set | description |")
            print("|---|---|---|---|---|")
            for e in entries:
                print(f"| {e['name']} | {e['kind']} | {e['presentation']} | {e['bundled']} | {e['description']} |")
        return None
    names = K.CORPUS if args.name == "all" else (args.name,)
    return [K.run_suite(K.load_corpus(n), _options(args)) for n in names]


COMMANDS = {
    "validate": cmd_validate, "classify": cmd_classify, "fit": cmd_fit, "suite": cmd_suite,
    "deform": cmd_deform, "bridge": cmd_bridge, "model": cmd_model, "corpus": cmd_corpus,
}


def render(reports, fmt):
    if fmt == "md":
        return "\n".join(r.to_markdown() for r in reports)
    if len(reports) == 1:
        return reports[0].to_json()
    return json.dumps({"reports": [r.to_dict() for r in reports]}, indent=2, sort_keys=True)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        reports = COMMANDS[args.verb](args)
    except (InputError, K.ManifestError, DeformationError, ExprError, StructureError, GeometryError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if reports is None:
        return 0
    print(render(reports, args.format))
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
