import json
import subprocess
import sys
from pathlib import Path

import pytest
from click.testing import CliRunner

from gnslab.cli import main
from gnslab.errors import ParseError
from gnslab.scenario import load_file, payload_section, validate_file

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args], env={"NO_COLOR": "1"})


@pytest.mark.parametrize("name", ["maps", "probability", "qubit", "scattering", "symmetry"])
def test_bundled_scenarios_pass(name, tmp_path):
    out = tmp_path / "report.json"
    res = invoke("run", "--scenario", SCENARIOS / f"{name}.json", "--out", out)
    assert res.exit_code == 0, res.output
    report = json.loads(out.read_text())
    assert report["schema"] == "gnslab-report/1"
    assert report["summary"]["fail"] == 0 and report["summary"]["error"] == 0
    assert all(r["status"] == "pass" for r in report["records"])


def test_run_is_deterministic(tmp_path):
    sections = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        invoke("run", "--scenario", SCENARIOS / "qubit.json", "--out", out)
        sections.append(payload_section(json.loads(out.read_text())))
    assert sections[0] == sections[1]


def test_failing_command_carries_witness(tmp_path):
    out = tmp_path / "report.json"
    res = invoke("run", "--scenario", SCENARIOS / "not_star_linear.json", "--out", out)
    assert res.exit_code == 1
    rec = json.loads(out.read_text())["records"][0]
    assert rec["status"] == "fail" and rec["payload"] is None
    assert rec["error"]["type"] == "NotStarLinear"
    # functional [1, 1, 0, 1] on M2: E12 has value 1 but E21 = E12* has value 0
    assert rec["error"]["witness"] == 1


def test_dangling_reference():
    res = invoke("validate", "--scenario", FIXTURES / "dangling.json")
    assert res.exit_code == 2
    assert "[unresolved-reference]" in res.output and "'M3'" in res.output
    diags = validate_file(str(FIXTURES / "dangling.json"))
    assert [d["code"] for d in diags] == ["unresolved-reference"]
    assert invoke("run", "--scenario", FIXTURES / "dangling.json").exit_code == 2


def test_exact_literal_in_float_scenario():
    res = invoke("validate", "--scenario", FIXTURES / "exact_in_float.json")
    assert res.exit_code == 2 and "[backend-mismatch]" in res.output
    # a float scenario is not promoted to exact by the override
    res = invoke("validate", "--scenario", FIXTURES / "exact_in_float.json", "--backend", "exact")
    assert res.exit_code == 2 and "cannot run on the exact backend" in res.output


def test_broken_json_reports_position():
    with pytest.raises(ParseError) as exc:
        load_file(str(FIXTURES / "broken.json"))
    assert (exc.value.line, exc.value.column) == (5, 19)
    res = invoke("run", "--scenario", FIXTURES / "broken.json")
    assert res.exit_code == 2


def test_validate_clean_scenario():
    res = invoke("validate", "--scenario", SCENARIOS / "maps.json")
    assert res.exit_code == 0 and "ok" in res.output


def test_missing_scenario_is_usage_error(tmp_path):
    assert invoke("run", "--scenario", tmp_path / "nope.json").exit_code == 2


def test_suite_only(tmp_path):
    out = tmp_path / "suite.json"
    res = invoke("suite", "--only", "normalization", "--only", "symmetry", "--out", out)
    assert res.exit_code == 0, res.output
    report = json.loads(out.read_text())
    assert [s["name"] for s in report["suites"]] == ["normalization", "symmetry"]
    assert "[PASS] normalization" in res.output
    assert invoke("suite", "--only", "nonsense").exit_code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gnslab", "validate", "--scenario", str(SCENARIOS / "qubit.json")],
                          capture_output=True, text=True, cwd=ROOT)
    assert proc.returncode == 0
