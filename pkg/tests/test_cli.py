import hashlib
import shutil
from pathlib import Path

import pytest

from qclca import report
from qclca.cli import EXIT_COMPUTE, EXIT_INVALID, EXIT_OK, EXIT_USAGE, main
from qclca.dataset import DATASET_ENV, REFERENCE_DIR

GOLDEN = Path(__file__).parent / "golden" / "sensitivity"


def tree(path: Path) -> dict[str, str]:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(path.iterdir())}


def test_validate_ok(capsys):
    assert main(["validate", "--dataset", str(REFERENCE_DIR)]) == EXIT_OK
    assert "ok:" in capsys.readouterr().out


def test_validate_failure(tmp_path, capsys):
    shutil.copytree(REFERENCE_DIR, tmp_path / "d")
    (tmp_path / "d" / "processes.tsv").write_text("# qclca-processes v1\n")
    assert main(["validate", "--dataset", str(tmp_path / "d")]) == EXIT_INVALID
    assert "missing column header" in capsys.readouterr().out


def test_invalid_dataset_for_computation(tmp_path):
    (tmp_path / "d").mkdir()
    assert main(["sensitivity", "--dataset", str(tmp_path / "d"), "--out", str(tmp_path / "o")]) == EXIT_INVALID


@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["model"], ["model", "classical"], ["compare", "--a", "A"],
    ["sweep", "--scenario", "A", "--grid", "x"], ["sweep", "--scenario", "A", "--grid", "-5"],
    ["validate", "--frobnicate"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_unknown_scenario_is_usage(tmp_path):
    assert main(["compare", "--a", "A", "--b", "Z", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["model", "hpc", "--scenario", "A", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["sweep", "--scenario", "A", "--method", "nope", "--out", str(tmp_path)]) == EXIT_USAGE


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK


def test_compare_zero_hours(tmp_path):
    assert main(["compare", "--a", "A", "--b", "B", "--hours", "0", "--out", str(tmp_path)]) == EXIT_OK
    rows = report.read_csv((tmp_path / "phases.csv").read_text())
    use = [r for r in rows if r["phase"] == "use"]
    assert {r["scenario"] for r in use} == {"A", "B"}
    assert all(float(r["value"]) == 0.0 for r in use)
    assert (tmp_path / "crossovers.csv").exists()
    assert (tmp_path / "compare_climate_change.svg").exists()


def test_model_commands(tmp_path):
    assert main(["model", "quantum", "--out", str(tmp_path / "q")]) == EXIT_OK
    assert main(["model", "hpc", "--out", str(tmp_path / "h"), "--hours", "43800"]) == EXIT_OK
    facts = {r["fact"]: r for r in report.read_csv((tmp_path / "q" / "facts.csv").read_text())}
    assert float(facts["power_kW"]["value"]) == pytest.approx(112.475)
    assert facts["power_kW"]["unit"] == "kW"
    contrib = report.read_csv((tmp_path / "h" / "contributions.csv").read_text())
    assert any(r["scenario"] == "B:compute_blade" and r["contributor"] == "motherboard" for r in contrib)


def test_sweep_multiple(tmp_path):
    assert main(["sweep", "--scenario", "A", "--scenario", "B", "--grid", "0,1000,5000",
                 "--out", str(tmp_path)]) == EXIT_OK
    rows = report.read_csv((tmp_path / "sweep.csv").read_text())
    assert {r["hours"] for r in rows} == {"0.0", "1000.0", "5000.0"}
    assert (tmp_path / "compare_ecosystems.svg").exists()


def test_crosscheck(tmp_path, capsys):
    assert main(["crosscheck-table21", "--dataset", str(REFERENCE_DIR), "--out", str(tmp_path)]) == EXIT_OK
    rows = report.read_csv((tmp_path / "crosscheck_table21.csv").read_text())
    assert rows and all(r["ok"] == "yes" for r in rows)


def test_crosscheck_fails_on_wrong_dataset(tmp_path):
    shutil.copytree(REFERENCE_DIR, tmp_path / "d")
    p = tmp_path / "d" / "scenarios.tsv"
    p.write_text(p.read_text().replace("blade_power_kW\t1.45", "blade_power_kW\t1.6"))
    assert main(["crosscheck-table21", "--dataset", str(tmp_path / "d"), "--out", str(tmp_path / "o")]) == EXIT_COMPUTE


def test_computation_failure_exit_code(tmp_path):
    assert main(["sweep", "--scenario", "A", "--replacement-multiplier", "0", "--out", str(tmp_path)]) == EXIT_COMPUTE


def test_env_var_selects_dataset(tmp_path, monkeypatch):
    monkeypatch.setenv(DATASET_ENV, str(tmp_path / "missing"))
    assert main(["validate"]) == EXIT_INVALID


def test_sensitivity_deterministic(tmp_path):
    for d in ("one", "two"):
        assert main(["sensitivity", "--dataset", str(REFERENCE_DIR), "--out", str(tmp_path / d)]) == EXIT_OK
    assert tree(tmp_path / "one") == tree(tmp_path / "two")
    names = set(tree(tmp_path / "one"))
    assert {"sweep.csv", "crossovers.csv", "ratios.csv", "contributions.csv", "facts.csv"} <= names
    assert sum(n.endswith(".svg") for n in names) == 4 * 3 + 3


def test_sensitivity_matches_golden(tmp_path):
    assert main(["sensitivity", "--dataset", str(REFERENCE_DIR), "--out", str(tmp_path)]) == EXIT_OK
    for golden in sorted(GOLDEN.glob("*.csv")):
        got = report.read_csv((tmp_path / golden.name).read_text())
        want = report.read_csv(golden.read_text())
        assert len(got) == len(want), golden.name
        for g, w in zip(got, want):
            assert g.keys() == w.keys()
            for k in w:
                try:
                    wv = float(w[k])
                except ValueError:
                    assert g[k] == w[k], (golden.name, k)
                    continue
                assert float(g[k]) == pytest.approx(wv, rel=1e-9, abs=1e-15), (golden.name, k, g)
