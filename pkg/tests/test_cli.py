import csv
import io
import json
import subprocess
import sys

import mpmath
import pytest
from mpmath import mpf

from hankel_asym import cli
from hankel_asym.errors import NumericalError

UNIT = '{"nu": 0, "family": "unit"}'
GAUSS = '{"nu": 0, "family": "gauss_exp", "params": {"theta": 0.5}}'


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


def test_det_csv_columns_and_meta(capsys):
    code, out, err = run(capsys, "det", "--weight", UNIT, "--n", "1,2,3")
    assert code == cli.EXIT_OK
    table = rows_of(out)
    assert tuple(table[0]) == cli.COLUMNS["det"]
    assert [r[0] for r in table[1:]] == ["1", "2", "3"]
    with mpmath.workprec(128):
        assert abs(mpf(table[3][1]) - mpmath.log(4)) < mpf("1e-25")
    meta = json.loads(err)
    assert meta["bits"]["1"] == 256


def test_det_json_shape(capsys):
    code, out, _ = run(capsys, "det", "--weight", UNIT, "--n", "2,4", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"meta", "rows"}
    assert len(doc["rows"]) == 2
    assert all(isinstance(v, str) for row in doc["rows"] for v in row.values())
    assert set(doc["rows"][0]) >= set(cli.COLUMNS["det"])


def test_csv_is_reproducible(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "det", "--weight", GAUSS, "--n", "3,5", "--no-timing", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert json.loads((tmp_path / "a.csv.meta.json").read_text())["bits"] == {"3": 256, "5": 256}
    rows = rows_of(paths[0].read_text())
    assert all(r[-1] == "0" for r in rows[1:])


def test_jobs_keep_order(capsys):
    _, serial, _ = run(capsys, "det", "--weight", GAUSS, "--n", "2,3,4", "--no-timing")
    _, parallel, _ = run(capsys, "det", "--weight", GAUSS, "--n", "2,3,4", "--no-timing", "--jobs", "2")
    assert serial == parallel


def test_compare_residual_column(capsys):
    code, out, err = run(capsys, "compare", "--weight", GAUSS, "--n", "4,8")
    assert code == 0
    table = rows_of(out)
    assert tuple(table[0]) == cli.COLUMNS["compare"]
    with mpmath.workprec(256):
        for _, exact, predicted, residual in table[1:]:
            assert abs(mpf(exact) - mpf(predicted) - mpf(residual)) < mpf("1e-25")
    assert set(json.loads(err)["constants"]) == set(cli.C_KEYS + cli.D_KEYS)


def test_constants_gauss_closed_forms(capsys):
    code, out, _ = run(capsys, "constants", "--weight", GAUSS)
    assert code == 0
    values = dict(rows_of(out)[1:])
    assert list(values) == list(cli.C_KEYS + cli.D_KEYS)
    with mpmath.workprec(128):
        assert abs(mpf(values["c5"]) - mpf("0.5") / mpmath.sqrt(mpmath.pi)) < mpf("1e-28")
        gap = mpf(values["c7"]) - mpf(values["d6"]) - mpf("0.25") / (8 * mpmath.pi)
        assert abs(gap) < mpf("1e-28")


def test_fredholm_unit_is_zero(capsys):
    code, out, _ = run(capsys, "fredholm", "--weight", UNIT, "--n", "2,4")
    assert code == 0
    table = rows_of(out)
    assert tuple(table[0]) == cli.COLUMNS["fredholm"]
    for row in table[1:]:
        assert all(float(v) == 0 for v in row[1:])


@pytest.mark.parametrize(
    "argv",
    [
        ["det", "--weight", UNIT, "--n", "3,2"],
        ["det", "--weight", UNIT, "--n", "2,2"],
        ["det", "--weight", UNIT, "--n", "50"],
        ["det", "--weight", UNIT, "--n", "2", "--bits", "32"],
        ["det", "--weight", '{"nu": -2, "family": "unit"}', "--n", "2"],
        ["det", "--weight", '{"nu": 0, "family": "rational_exp", "params": {"alpha": -1}}', "--n", "2"],
        ["det", "--weight", "{not json", "--n", "2"],
        ["det", "--n", "2"],
        ["compare", "--weight", UNIT, "--n", "1,2"],
        ["constants", "--weight", UNIT, "--override", "c9=1"],
    ],
)
def test_config_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_CONFIG
    assert "configuration error" in err


def test_allow_large(capsys):
    code, _, err = run(capsys, "det", "--weight", UNIT, "--n", "50", "--bits", "128", "--allow-large")
    assert code == 0


def test_numeric_failure_exit(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("singular")

    monkeypatch.setattr(cli, "log_det_hankel", boom)
    code, _, err = run(capsys, "det", "--weight", UNIT, "--n", "2")
    assert code == cli.EXIT_NUMERIC
    assert "numerical failure" in err


@pytest.fixture(scope="module")
def selfcheck():
    return cli.run_selfcheck()


def test_selfcheck_report(selfcheck):
    names = [c["name"] for c in selfcheck["checks"]]
    assert len(names) == len(set(names)) == 6
    assert selfcheck["passed"], selfcheck
    json.dumps(selfcheck)


def test_selfcheck_negative_control():
    proc = subprocess.run(
        [sys.executable, "-m", "hankel_asym.cli", "selfcheck", "--override", "c2=-1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == cli.EXIT_SELFCHECK
    report = json.loads(proc.stdout)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert failed == ["compare_route"]


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "hankel_asym.cli", "det", "--weight", UNIT, "--n", "1", "--no-timing"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("1,")
