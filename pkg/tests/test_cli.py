import io
import json

import pytest

from subcurv.cli import main, render, run_command
from subcurv.structures import catalog_model


def run(argv):
    buf = io.StringIO()
    code, doc = run_command(argv, stdout=buf)
    return code, doc, buf.getvalue()


def test_catalog():
    code, doc, out = run(["catalog"])
    assert code == 0
    assert [m["name"] for m in doc["models"]][:2] == ["g_rho1", "su2"]
    assert "heisenberg" in out


def test_cd_check_auto_on_heisenberg():
    code, doc, out = run(["cd-check", "--model", "heisenberg:1", "--params", "auto", "--trials", "10000", "--seed", "7"])
    assert code == 0
    assert doc["params"] == {"rho1": "0", "rho2": "1/2", "kappa": "1", "d": "2"}
    check = doc["checks"][0]
    assert check["violations"] == 0 and check["trials"] <= 10000
    assert "CD(0, 1/2, 1, 2)" in out


def test_cd_check_reports_failure():
    code, doc, _ = run(["cd-check", "--model", "heisenberg:1", "--params", "1,1/2,1,2", "--trials", "2000"])
    assert code == 1 and doc["checks"][0]["violations"] > 0


def test_auto_params_need_carnot():
    code, _, _ = run(["cd-check", "--model", "su2", "--params", "auto"])
    assert code == 2


def test_diameter():
    code, doc, out = run(["diameter", "--params", "1,0.5,1,2"])
    assert code == 0
    assert doc["diameter_bound"] == pytest.approx(53.3146, abs=1e-4)
    assert doc["delta"] < 1e-6
    assert "53.3146" in out


def test_missing_file_is_io_error():
    assert main(["validate", "--file", "missing.json"]) == 3


def test_usage_errors():
    assert main(["nonsense"]) == 2
    assert main(["validate", "--model", "torus:2"]) == 2
    assert main(["cd-check", "--model", "heisenberg:1", "--params", "1,2"]) == 2


def test_validate_file_and_yang_mills(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(catalog_model("quaternionic_heisenberg").dumps())
    code, doc, _ = run(["validate", "--file", str(path)])
    assert code == 0 and [c["name"] for c in doc["checks"]] == ["structure_relations", "vertical_commutation"]
    assert run(["yang-mills", "--file", str(path)])[0] == 0


def test_malformed_file_is_usage_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["validate", "--file", str(path)]) == 2


def test_bochner_and_improved_bounds():
    assert run(["bochner", "--model", "g_rho1:-2/3", "--trials", "20"])[0] == 0
    code, doc, _ = run(["improved-bounds", "--model", "heisenberg:1", "--params", "auto", "--trials", "200"])
    assert code == 0 and doc["checks"][0]["trials"] >= 200


def test_falsify_exit_codes():
    args = ["cd-falsify", "--model", "heisenberg:1", "--params", "0,1/2,1,1.9", "--trials", "100", "--seed", "7"]
    code, doc, _ = run(args)
    # a counterexample is a failed check unless one is expected
    assert code == 1 and doc["checks"][0]["violation_found"]
    assert run(args + ["--expect-violation"])[0] == 0


def test_constants():
    code, doc, _ = run(["constants", "--model", "quaternionic_heisenberg"])
    assert code == 0
    assert doc["carnot"]["rho2"] == pytest.approx(1.0) and doc["carnot"]["kappa"] == pytest.approx(3.0)
    assert doc["geometric"]["D"] == pytest.approx(4 * (1 + 4.5))


def test_report_is_deterministic_and_rerenders(tmp_path):
    out_path = tmp_path / "r.json"
    argv = ["bochner", "--model", "heisenberg:1", "--trials", "30", "--seed", "3", "--output", str(out_path)]
    code, doc, text = run(argv)
    assert code == 0
    saved = json.loads(out_path.read_text())
    assert saved == doc
    assert saved["schema"] == 1 and saved["seed"] == 3 and saved["version"]
    assert run(argv)[1] == doc
    code2, _, text2 = run(["report", str(out_path)])
    assert code2 == 0 and text2 == text == render(saved)


def test_heat_sim_quick(tmp_path):
    snap = tmp_path / "s.bin"
    code, doc, _ = run(
        ["heat-sim", "--model", "heisenberg:1", "--quick", "--half-width", "2", "--z-half-width", "2", "--nz", "33",
         "--time", "0.02", "--snapshot", str(snap)]
    )
    assert code == 0 and snap.exists()
    assert 0 < doc["final_mass"] <= doc["initial_mass"]
