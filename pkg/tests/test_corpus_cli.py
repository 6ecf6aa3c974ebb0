import copy
import json
import os
import subprocess
import sys

import pytest

from paracontact import cli
from paracontact import corpus as K


def manifest_doc(name="example42"):
    return json.loads(K.corpus_path(name).read_text())


@pytest.mark.parametrize("name", K.CORPUS + K.PRINTED)
def test_bundled_manifests_load(name):
    m = K.load_corpus(name)
    assert m.name == name
    K.build_structure(m)


def test_shape_error_pointer():
    doc = manifest_doc("example42-printed")
    doc["presentation"]["g"] = [["1", "0", "0"], ["0", "1", "0"]]
    with pytest.raises(K.ManifestError) as err:
        K.load_manifest(doc)
    assert err.value.pointer == "/presentation/g"
    assert "shape" in err.value.message


def test_enum_error():
    doc = manifest_doc()
    doc["kind"] = "symplectic"
    with pytest.raises(K.ManifestError) as err:
        K.load_manifest(doc)
    assert err.value.pointer == "/kind"
    assert "symplectic" in err.value.message


def test_expression_error_pointer():
    doc = manifest_doc()
    doc["presentation"]["frame"][0][1] = "x-2*(y"
    with pytest.raises(K.ManifestError) as err:
        K.load_manifest(doc)
    assert err.value.pointer == "/presentation/frame/0/1"
    doc = manifest_doc()
    doc["declared"]["kappa"] = "w+1"
    with pytest.raises(K.ManifestError) as err:
        K.load_manifest(doc)
    assert err.value.pointer == "/declared/kappa"


def test_missing_field_and_bad_json(tmp_path):
    doc = manifest_doc()
    del doc["presentation"]["xi_index"]
    with pytest.raises(K.ManifestError):
        K.load_manifest(doc)
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(K.ManifestError):
        K.load_manifest(str(p))


def test_suite_stage_order():
    rep = K.run_suite("example42", K.SuiteOptions(points=20, alphas=(2.0,)))
    stages = [c.stage for c in rep.children]
    assert stages == ["validation", "paracontact identities", "canonical form scan", "nullity fit scan",
                      "nullity identities", "harmonicity of the Reeb field", "deformation alpha=2"]
    assert rep.passed


def test_contact_suite_runs_bridge():
    rep = K.run_suite("example43", K.SuiteOptions(points=20))
    assert rep.children[-1].stage == "bridge"
    assert rep.passed


def test_failures_are_verdicts():
    rep = K.run_suite("example41-printed", K.SuiteOptions(points=20))
    assert not rep.passed
    assert rep.get("fit_residual").residual > 1
    # the structure itself satisfies the axioms; the nullity condition is what fails
    assert rep.children[0].passed


def run_cli(*args):
    env = dict(os.environ)
    return subprocess.run([sys.executable, "-m", "paracontact", *args], capture_output=True, text=True, env=env)


def test_cli_exit_codes(tmp_path):
    assert run_cli("validate", "example42", "--points", "10").returncode == 0
    assert run_cli("suite", "example42-printed", "--points", "10").returncode == 1
    assert run_cli("validate", str(tmp_path / "missing.json")).returncode == 2
    assert run_cli("deform", "example42", "--alpha", "-1").returncode == 2
    assert run_cli("bridge", "example42").returncode == 2
    assert run_cli("frobnicate").returncode == 2


def test_cli_outputs():
    r = run_cli("classify", "example41", "--point", "0.1,0.2,1.5")
    d = json.loads(r.stdout)
    assert d["data"]["classification"]["htype"] == "TypeI"
    assert d["data"]["classification"]["lambda"] == pytest.approx(1.5)
    r = run_cli("fit", "example42", "--points", "10", "--format", "md")
    assert r.returncode == 0 and "| fit_residual |" in r.stdout
    r = run_cli("corpus", "list", "--format", "json")
    assert [e["name"] for e in json.loads(r.stdout)][:5] == list(K.CORPUS)


def test_cli_model_writes_manifest(tmp_path):
    out = tmp_path / "zm.json"
    assert cli.main(["model", "zetamu", "--branch", "minus", "--points", "10", "--write", str(out)]) == 0
    m = K.load_manifest(str(out))
    assert m.presentation["branch"] == "minus"


def test_cli_manifest_file(tmp_path, capsys):
    doc = copy.deepcopy(manifest_doc("example41"))
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    assert cli.main(["deform", str(p), "--alpha", "0.5", "--points", "10"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "pass"
