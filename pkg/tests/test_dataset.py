import random
import shutil

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qclca.dataset import (
    DATASET_ENV,
    FILES,
    REFERENCE_DIR,
    DatasetError,
    default_dataset_dir,
    load_and_validate,
    load_dataset,
)
from qclca.impact import INDICATORS


@pytest.fixture
def bundle(tmp_path):
    dst = tmp_path / "bundle"
    shutil.copytree(REFERENCE_DIR, dst)
    return dst


def edit(path, old, new):
    text = path.read_text()
    assert old in text
    path.write_text(text.replace(old, new, 1))


def errors(diags):
    return [d for d in diags if d.level == "error"]


def test_reference_loads_without_diagnostics():
    ds, diags = load_and_validate(REFERENCE_DIR)
    assert ds is not None and diags == []
    assert ds.scenario_ids == ["A", "A'", "B", "B'"]


def test_empty_processes_file(bundle):
    path = bundle / "processes.tsv"
    header = [ln for ln in path.read_text().splitlines() if ln.startswith("process:")]
    path.write_text("# qclca-processes v1\n" + header[0] + "\n")
    ds, diags = load_and_validate(bundle)
    assert ds is None
    assert any(d.message == "no processes" for d in diags)


def test_missing_file(bundle):
    (bundle / "flows.tsv").unlink()
    ds, diags = load_and_validate(bundle)
    assert ds is None and any(d.file == "flows.tsv" for d in errors(diags))


def test_unknown_flow_in_factors_warns(bundle):
    with open(bundle / "factors.tsv", "a") as fh:
        fh.write("synthetic-endpoint-v1\tunobtainium\tecosystems\t1\tPDF.m2.yr/kg\n")
    ds, diags = load_and_validate(bundle)
    assert ds is not None
    warn = [d for d in diags if d.level == "warning"]
    assert len(warn) == 1 and "unobtainium" in warn[0].message and warn[0].line > 0


def test_uncharacterized_elementary_flow_warns(bundle):
    with open(bundle / "flows.tsv", "a") as fh:
        fh.write("xenon\tXenon\telementary\tkg\tair\n")
    ds, diags = load_and_validate(bundle)
    assert ds is not None
    assert any("xenon" in d.message and d.level == "warning" for d in diags)


def test_missing_version_header(bundle):
    edit(bundle / "flows.tsv", "# qclca-flows v1", "# qclca-flows v9")
    ds, diags = load_and_validate(bundle)
    assert ds is None
    assert any(d.file == "flows.tsv" and d.line == 1 and "version" in d.message for d in diags)


def test_bad_number_is_positional(bundle):
    edit(bundle / "processes.tsv", "co2_fossil\t0.52\t", "co2_fossil\tabc\t")
    ds, diags = load_and_validate(bundle)
    assert ds is None
    d = errors(diags)[0]
    assert d.file == "processes.tsv" and d.line > 3 and "abc" in d.message


def test_dangling_reference_names_both_ids(bundle):
    edit(bundle / "processes.tsv", "GLO\tco2_fossil\t0.52", "GLO\tco2_fossill\t0.52")
    ds, diags = load_and_validate(bundle)
    assert ds is None
    assert any("'electricity_glo'" in d.message and "'co2_fossill'" in d.message for d in diags)


def test_duplicate_producer(bundle):
    text = (bundle / "processes.tsv").read_text()
    line = next(ln for ln in text.splitlines() if ln.startswith("helium\t") and ln.endswith("output")
                and "\thelium\t" in ln)
    with open(bundle / "processes.tsv", "a") as fh:
        fh.write(line.replace("helium\t", "helium_twin\t", 1) + "\n")
    ds, diags = load_and_validate(bundle)
    assert ds is None
    assert any("duplicate producer" in d.message and "helium_twin" in d.message for d in diags)


def test_scenario_errors_located(bundle):
    edit(bundle / "scenarios.tsv", "logical_qubits\t100", "logical_qubits\tmany")
    ds, diags = load_and_validate(bundle)
    assert ds is None
    assert any(d.file == "scenarios.tsv" and "logical_qubits" in d.message for d in diags)


def test_scenario_inheritance_cycle(bundle):
    with open(bundle / "scenarios.tsv", "a") as fh:
        fh.write("C1\textends\tC2\nC2\textends\tC1\n")
    ds, diags = load_and_validate(bundle)
    assert ds is None and any("cycle" in d.message for d in diags)


def test_bad_lifetime(bundle):
    with open(bundle / "scenarios.tsv", "a") as fh:
        fh.write("C\textends\tA\nC\tlifetime_hours\t-5\n")
    ds, diags = load_and_validate(bundle)
    assert ds is None and any("lifetime" in d.message for d in diags)


def test_load_dataset_raises(bundle):
    (bundle / "factors.tsv").write_text("")
    with pytest.raises(DatasetError) as err:
        load_dataset(bundle)
    assert err.value.diagnostics


def test_env_var_default(bundle, monkeypatch):
    monkeypatch.setenv(DATASET_ENV, str(bundle))
    assert default_dataset_dir() == bundle
    monkeypatch.delenv(DATASET_ENV)
    assert default_dataset_dir() == REFERENCE_DIR


def test_row_order_does_not_matter(bundle):
    rng = random.Random(3)
    for fname in FILES.values():
        path = bundle / fname
        lines = path.read_text().splitlines()
        head = [i for i, ln in enumerate(lines) if ":" in ln and not ln.startswith("#")][0]
        body = [ln for ln in lines[head + 1:] if ln and not ln.startswith("#")]
        rng.shuffle(body)
        path.write_text("\n".join(lines[: head + 1] + body) + "\n")
    ref, shuffled = load_dataset(REFERENCE_DIR), load_dataset(bundle)
    assert ref.system.products == shuffled.system.products
    assert np.array_equal(ref.system.technosphere, shuffled.system.technosphere)
    assert np.array_equal(ref.system.biosphere, shuffled.system.biosphere)
    e1, e2 = ref.engine(), shuffled.engine()
    for sid in ref.scenario_ids:
        for ind in INDICATORS:
            assert e1.total(ref.scenario(sid), ind, 43_800) == e2.total(shuffled.scenario(sid), ind, 43_800)


@settings(max_examples=80, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(which=st.sampled_from(sorted(FILES.values())), cut=st.floats(0, 1), mode=st.sampled_from(["truncate", "garble", "dup"]),
       seed=st.integers(0, 2**16), junk=st.binary(min_size=1, max_size=12))
def test_loader_is_total(bundle, which, cut, mode, seed, junk):
    path = bundle / which
    original = (REFERENCE_DIR / which).read_bytes()
    pos = int(cut * len(original))
    if mode == "truncate":
        data = original[:pos]
    elif mode == "garble":
        data = original[:pos] + junk + original[pos + len(junk):]
    else:
        lines = original.splitlines(keepends=True)
        k = random.Random(seed).randrange(len(lines))
        data = b"".join(lines[:k] + [lines[k]] + lines[k:])
    path.write_bytes(data)
    ds, diags = load_and_validate(bundle)
    assert ds is not None or errors(diags)
    for d in diags:
        assert d.level in ("error", "warning") and d.file in FILES.values()
    path.write_bytes(original)
