import csv
import io
import json

import pytest

from cfprod import __version__
from cfprod.cli import main
from cli_cases import REGRESSIONS


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def header(text):
    return dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))


def test_expand_plain(capsys):
    assert run(["expand", "--x", "7/10"], capsys)[:2] == (0, "1 2 3\n")


def test_dimension_example(tmp_path, capsys):
    out = tmp_path / "dim.csv"
    code, stdout, _ = run(["dimension", "--B", "2", "--g", "F2", "--M", "32", "--tol", "1e-9", "--out", str(out)],
                          capsys)
    assert code == 0 and stdout == ""
    text = out.read_text()
    rows = table(text)
    assert len(rows) == 1
    r = rows[0]
    assert list(r) == ["B", "g", "M", "n_or_nodes", "value", "lo", "hi", "method"]
    assert float(r["lo"]) <= float(r["value"]) <= float(r["hi"])
    assert float(r["hi"]) - float(r["lo"]) <= 1e-9
    h = header(text)
    assert h["command"] == "dimension" and h["version"] == __version__ and h["B"] == "2.0"
    assert not list(tmp_path.glob(".*.tmp"))


def test_measure_exact_path(capsys):
    code, out, _ = run(["measure", "--kind", "product-tail", "--prefix", "1", "--l", "2"], capsys)
    r = table(out)[0]
    assert code == 0 and r["value"] == "13/30" and r["method"] == "exact"


def test_json_output(capsys):
    code, out, _ = run(["cylinder", "--word", "1 2", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["rows"][0]["left"] == "2/3" and doc["rows"][0]["length"] == "1/12"


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["dimension"],
    ["dimension", "--B", "2", "--bogus", "1"],
    ["dimension", "--B", "0.5"],
    ["profile", "--B-grid", ""],
    ["expand", "--x", "3/2"],
    ["measure", "--l", "0"],
    ["zero-one", "--phi", "5", "--window", "10:20"],
    ["zero-one", "--phi", "n", "--window", "10-20"],
    ["cantor", "--mode", "scaled"],
])
def test_input_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 2


def test_budget_error_exit_3(capsys):
    code, _, err = run(["dimension", "--B", "2", "--M", "10", "--n", "9"], capsys)
    assert code == 3 and "budget" in err


def test_ordering_violation_exit_1(capsys):
    code, out, err = run(["profile", "--B-grid", "256", "--M", "8"], capsys)
    assert code == 1 and "violated" in err
    assert len(table(out)) == 4


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# dimension run\nB = 3\ng = E2\nM = 8\n")
    code, out, _ = run(["dimension", "--config", str(cfg)], capsys)
    assert code == 0
    r = table(out)[0]
    assert (r["B"], r["g"], r["M"]) == ("3.0", "E2", "8")
    code, out, _ = run(["dimension", "--config", str(cfg), "--g", "F2"], capsys)
    assert table(out)[0]["g"] == "F2"
    cfg.write_text("B = 3\nwibble = 1\n")
    assert run(["dimension", "--config", str(cfg)], capsys)[0] == 2


def test_failed_run_leaves_no_file(tmp_path, capsys):
    out = tmp_path / "x.csv"
    assert run(["dimension", "--B", "2", "--M", "10", "--n", "9", "--out", str(out)], capsys)[0] == 3
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("name", sorted(REGRESSIONS))
def test_regression_runs(name, tmp_path, capsys):
    out = tmp_path / "a.out"
    assert main(REGRESSIONS[name] + ["--out", str(out)]) == 0
    assert out.stat().st_size > 0


def test_cantor_csv_header(capsys):
    code, out, _ = run(REGRESSIONS["cantor"], capsys)
    h = header(out)
    assert code == 0 and h["passed"] == "True" and h["asserted"] == "True"
    assert float(h["max_mass_error"]) <= 1e-12


def test_zero_one_threads_identical(capsys):
    a = run(REGRESSIONS["zero-one"] + ["--threads", "1"], capsys)[1]
    b = run(REGRESSIONS["zero-one"] + ["--threads", "4"], capsys)[1]
    assert a == b
    assert header(a)["window"] == "100:1000"
    assert float(table(a)[0]["fraction"]) >= 0.9
