"""Acceptance criteria. Each test prints one PASS/FAIL line; run
`pytest -s tests/test_acceptance.py` or `python3 tests/test_acceptance.py`
to see them."""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from paracontact import bridge as B
from paracontact import corpus as K
from paracontact import deform as D
from paracontact import expr as E
from paracontact import oracle as O
from paracontact.classify import (
    TYPE_I, TYPE_II, TYPE_III, ZERO, classify_arrays, classify_points, fit_points, nullity_identity_suite,
    type_constancy_scan,
)
from paracontact.harmonic import harmonic_map_obstruction, harmonic_points, harmonicity_scan
from paracontact.structures import metric_identity_suite, perturb_metric, paracontact_identity_suite, validate

N = 100


def verdict(number, ok, text):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}")
    assert ok, text


def load(name):
    m = K.load_corpus(name)
    S = K.build_structure(m)
    return m, S, S.chart.sample(N, 42)


def w_of(pts):
    x, y, z = pts.values_array.T
    return 2 * x + np.exp(y + z)


def paracontact_entries():
    """Every paracontact structure the corpus yields: the paracontact entries
    and the structures induced by the contact entries."""
    out = []
    for name in K.CORPUS:
        m, S, pts = load(name)
        if S.kind == "contact":
            out.append((f"{name} (induced)", B.induce_paracontact(S, pts), pts))
        else:
            out.append((name, S, pts))
    return out


def test_criterion_1_example42():
    rep = K.run_suite("example42", K.SuiteOptions(points=N))
    _, S, pts = load("example42")
    fits = fit_points(S, pts)
    gap = max(np.abs(np.array(f.as_tuple()) - (-1.0, 2.0, 0.0)).max() for f in fits)
    types = rep.get("declared_htype").passed and {c.htype for c in classify_points(S, pts)} == {TYPE_II}
    h = pts.eval(S.h.comps)
    h2 = float(np.abs(h @ h).max())
    hmin = float(np.abs(h).reshape(N, -1).max(axis=1).min())
    ok = (rep.passed and rep.get("fit_residual").residual < 1e-8 and gap < 1e-8 and types
          and h2 < 1e-8 and hmin > 1e-8)
    verdict(1, ok, f"example42 fits (-1, 2, 0) (gap {gap:.1e}, fit residual "
                   f"{rep.get('fit_residual').residual:.1e}), TypeII everywhere, max|h^2| = {h2:.1e}, "
                   f"min|h| = {hmin:.2f}")


def test_criterion_2_example41():
    _, S, pts = load("example41")
    z = pts.values_array[:, 2]
    fits = fit_points(S, pts)
    dk = np.abs([f.kappa for f in fits] - (z ** 2 - 1)).max()
    dm = np.abs([f.mu for f in fits] - 2 * (1 - z)).max()
    dn = np.abs([f.nu for f in fits]).max()
    reps = classify_points(S, pts)
    types = {r.htype for r in reps}
    dl = np.abs(np.array([r.lam for r in reps]) - np.abs(z)).max()
    # the transcription with the printed sign passes the axioms but not the
    # nullity condition; the report must name the failing identity and a point
    printed = K.run_suite("example41-printed", K.SuiteOptions(points=N))
    loc = printed.get("fit_residual")
    localized = (not printed.passed and printed.children[0].passed and not loc.passed
                 and loc.worst_point is not None)
    print(f"    example41-printed: axioms pass; failing checks "
          f"{sorted({c.id for c in printed.failures()})[:6]}; nullity residual {loc.residual:.3g} at "
          f"{loc.worst_point}")
    ok = max(dk, dm, dn, dl) < 1e-6 and types == {TYPE_I} and localized
    verdict(2, ok, f"example41 kappa/mu/nu/lambda gaps {dk:.1e}/{dm:.1e}/{dn:.1e}/{dl:.1e}, types {sorted(types)}, "
                   f"printed transcription localized: {localized}")


def test_criterion_3_bridge():
    _, C, pts = load("example43")
    W = w_of(pts)
    kappa, nu = 1 - 1 / W ** 2, -2 / W
    fits = B.fit_contact_kmn(C, pts)
    dc = max(np.abs([f.kappa for f in fits] - kappa).max(), np.abs(np.array([f.mu for f in fits]) - 2).max(),
             np.abs([f.nu for f in fits] - nu).max())
    _, P, _ = load("example43-bridge")
    pf = fit_points(P, pts)
    dp = max(np.abs([f.kappa for f in pf] - (kappa - 2)).max(), np.abs(np.array([f.mu for f in pf]) - 2).max(),
             np.abs([f.nu for f in pf] + nu).max())
    reps = classify_points(P, pts)
    dl = np.abs(np.array([r.lam for r in reps]) - np.sqrt(1 - kappa)).max()
    types = {r.htype for r in reps}
    ok = dc < 1e-6 and dp < 1e-6 and dl < 1e-6 and types == {TYPE_III}
    verdict(3, ok, f"example43 contact fit gap {dc:.1e}; induced (kappa-2, 2, -nu) gap {dp:.1e}; "
                   f"types {sorted(types)}; lambda gap {dl:.1e}")


def test_criterion_4_deformation():
    worst_fit, worst_h, worst_group, types_ok = 0.0, 0.0, 0.0, True
    for name in ("example41", "example42"):
        _, S, pts = load(name)
        for alpha in (0.5, 2.0, 3.0):
            rep, Db = D.deformation_report(S, alpha, pts)
            assert validate(Db, pts).passed
            worst_fit = max(worst_fit, *(rep.get(c).residual for c in ("kappa_bar", "mu_bar", "nu_bar")))
            worst_h = max(worst_h, rep.get("h_bar").residual)
            if name == "example42":
                types_ok &= {c.htype for c in classify_points(Db, pts)} == {TYPE_II}
        for a, b in ((2.0, 0.5), (0.5, 3.0), (3.0, 2.0)):
            g = D.group_law_check(S, a, b, pts)
            worst_group = max(worst_group, max(c.residual for c in g.checks))
    exact = all(D.kmn_group_law(t, a, b)[0] for t in ((-1, 2, 0), (3, -2, 0)) for a, b in ((2, 3), (0.5, 3)))
    ok = worst_fit < 1e-6 and worst_h < 1e-8 and worst_group < 1e-8 and exact and types_ok
    verdict(4, ok, f"deformed fits vs closed form {worst_fit:.1e}, h-bar vs h/alpha {worst_h:.1e}, "
                   f"group law {worst_group:.1e}, exact rational group law {exact}, TypeII stable {types_ok}")


IDENTITIES = ("nabla_g", "torsion_free", "three_dim_curvature", "nabla_xi", "ricci_xi_xi", "nabla_xi_h",
              "h_squared", "xi_kappa", "differential_equation", "nabla_xi_h_typed", "h2_minus_phi2")


def test_criterion_5_identity_suites():
    worst = {}
    failures = []
    for label, S, pts in paracontact_entries():
        for rep in (paracontact_identity_suite(S, pts, 1e-7), nullity_identity_suite(S, pts, tol=1e-7)):
            for c in rep.all_checks():
                worst[c.id] = max(worst.get(c.id, 0.0), c.residual)
                if not c.passed:
                    failures.append((label, c.id, c.residual))
    # the Riemannian metrics of the contact entries obey the metric identities too
    for name in ("example43", "zetamu-plus-1"):
        _, C, pts = load(name)
        rep = metric_identity_suite(C, pts, 1e-7)
        failures += [(name, c.id, c.residual) for c in rep.failures()]
    missing = [i for i in IDENTITIES if i not in worst]
    ok = not failures and not missing and max(worst[i] for i in IDENTITIES) < 1e-7
    verdict(5, ok, f"{len(worst)} identities on {len(K.CORPUS)} entries, worst "
                   f"{max(worst.values()):.1e}; failures {failures[:3]}; missing {missing}")


def test_criterion_6_harmonic_equivalence():
    agree, total = 0, 0
    for label, S, pts in paracontact_entries():
        hr = harmonic_points(S, pts)
        agree += sum(h.consistent for h in hr)
        total += len(hr)
    _, S42, pts = load("example42")
    P = perturb_metric(S42, 1, 1, 1e-2)
    hr = harmonic_points(P, pts)
    both_fail = all(not h.is_harmonic_vf and h.ricci_eigen_defect > 1e-7 for h in hr)
    consistent = all(h.consistent for h in hr)
    ok = agree == total and both_fail and consistent
    verdict(6, ok, f"collinearity and Ricci-eigenvector verdicts agree at {agree}/{total} points; "
                   f"perturbed control (g_yy + 1e-2): both fail at all {len(hr)} points = {both_fail}")


def test_criterion_7_obstruction():
    worst, checked = 0.0, 0
    for label, S, pts in paracontact_entries():
        fits = fit_points(S, pts)
        obs = harmonic_map_obstruction(S, pts)
        f = S.fields_at(pts)
        for i, ft in enumerate(fits):
            c = classify_arrays(f["phi"][i], f["xi"][i], f["eta"][i], f["g"][i], f["h"][i])
            s = {TYPE_I: 1.0, TYPE_III: -1.0}.get(c.htype, 0.0)
            expected = s * 2 * c.lam ** 2 * ft.nu * f["xi"][i]
            worst = max(worst, float(np.abs(obs[i] - expected).max()))
            checked += 1
    ok = worst < 1e-6
    verdict(7, ok, f"tr[R(nabla. xi, xi).] = +-2 lambda^2 nu xi / 0 at {checked} points, worst {worst:.1e}")


def test_criterion_7_laplacian_example43_bridge():
    """The stated value 2ξ for the rough Laplacian of ξ on example43-bridge.
    The computed value is 2κξ with κ the contact κ = 1 − 1/(2x+e^{y+z})²,
    confirmed by two frames and the coordinate trace formula."""
    _, P, pts = load("example43-bridge")
    rep, hr = harmonicity_scan(P, pts)
    lap = np.array([h.rough_laplacian_of_xi for h in hr])
    xi = pts.eval(P.xi.comps)
    W = w_of(pts)
    gap_2 = float(np.abs(lap - 2 * xi).max())
    gap_2k = float(np.abs(lap - 2 * (1 - 1 / W ** 2)[:, None] * xi).max())
    print(f"    |lap - 2 xi| = {gap_2:.3g}; |lap - 2 kappa xi| = {gap_2k:.1e}; frame/trace agreement "
          f"{rep.get('laplacian_trace_form').residual:.1e}")
    verdict("7 (laplacian)", gap_2 < 1e-6, f"rough Laplacian of xi on example43-bridge equals 2 xi (gap {gap_2:.3g})")


def test_criterion_8_canonical_forms():
    calls, mixed, bad = 0, [], []
    structures = [(label, S, pts) for label, S, pts in paracontact_entries()]
    _, S41, pts41 = load("example41")
    _, S42, pts42 = load("example42")
    for a in (0.5, 2.0, 3.0):
        structures.append((f"example41 alpha={a}", D.d_homothetic(S41, a), pts41))
        structures.append((f"example42 alpha={a}", D.d_homothetic(S42, a), pts42))
    for label, S, pts in structures:
        rep, reports = type_constancy_scan(S, pts)
        calls += len(reports)
        bad += [label for r in reports if r.htype not in (ZERO, TYPE_I, TYPE_II, TYPE_III)]
        if not rep.data["constant_per_cluster"]:
            mixed.append(label)
    ok = calls >= 500 and not bad and not mixed
    verdict(8, ok, f"{calls} classification calls on {len(structures)} structures, TypeIV never returned "
                   f"({len(bad)} bad), type constant per cluster (mixed: {mixed})")


def test_criterion_9_oracle():
    worst = {}
    for name in K.CORPUS:
        _, S, _ = load(name)
        pts = S.chart.sample(50, 42)
        rep = O.oracle_report(S, pts, tol=1e-5)
        for c in rep.checks:
            worst[c.id] = max(worst.get(c.id, 0.0), c.residual)
    exprs = [E.parse(t, "xyz") for t in ("2*y+z", "exp(y+z)", "sqrt(2*x+exp(y+z))", "z*x-y/(2*z)",
                                           "log(1+x^2)*cos(y)")]
    ch = K.build_chart(K.load_corpus("example43"))
    worst["standalone_expressions"] = float(O.fd_expr_check(exprs, ch.sample(50)).max())
    ok = all(v < 1e-5 for v in worst.values())
    verdict(9, ok, "symbolic vs finite differences: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def _cli_json(threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    out = subprocess.run([sys.executable, "-m", "paracontact", "corpus", "run", "all", "--points", str(N),
                          "--seed", "42", "--tol", "1e-8", "--alpha", "2"],
                         capture_output=True, env=env)
    return out.returncode, out.stdout


def test_criterion_10_determinism():
    code1, a = _cli_json(1)
    code2, b = _cli_json(1)
    code3, c = _cli_json(4)
    doc = json.loads(a)
    ok = a == b == c and code1 == code2 == code3 == 0 and len(doc["reports"]) == len(K.CORPUS)
    verdict(10, ok, f"three runs (1, 1, 4 threads) of the full corpus give byte-identical JSON "
                    f"({len(a)} bytes)")


def test_runtime_budget():
    t = time.perf_counter()
    reps = [K.run_suite(n, K.SuiteOptions(points=N)) for n in K.CORPUS]
    dt = time.perf_counter() - t
    ok = dt < 60 and all(r.passed for r in reps)
    verdict("runtime", ok, f"full suite on {len(K.CORPUS)} entries at {N} points in {dt:.1f} s, all green")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-s", "-q"]))
