import json

import pytest

from teichfun.cli import main, parse_precision
from teichfun.errors import InputError


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    p = tmp_path_factory.mktemp("cache") / "std.json"
    assert main(["build-group", "--out", str(p)]) == 0
    return str(p)


def test_build_group_is_deterministic(tmp_path, cache):
    p = tmp_path / "again.json"
    assert main(["build-group", "--out", str(p)]) == 0
    assert p.read_bytes() == open(cache, "rb").read()


def test_show_partition(capsys, cache):
    code, out = run(capsys, "show-partition", "--cache", cache)
    doc = json.loads(out)
    assert code == 0 and len(doc["intervals"]) == 336
    assert doc["intervals"][0]["branch"] in {"a1", "a1inv", "b1", "b1inv", "a2", "a2inv", "b2", "b2inv"}


def test_scaling_csv(capsys, cache):
    code, out = run(capsys, "scaling", "--cache", cache, "--depth", "1", "--format", "csv")
    lines = out.strip().split("\n")
    assert code == 0 and lines[0] == "dual_word,value,error_bound" and len(lines) == 2241
    word, val, err = lines[1].split(",")
    assert float(val) > 0 and float(err) > 0
    code, out = run(capsys, "scaling", "--cache", cache, "--words", word, "--precision", "extended:128")
    assert code == 0
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(float(val), rel=1e-12)


def test_compare_twist(capsys, cache):
    code, out = run(capsys, "compare", "--cache", cache, "--depth", "2", "--twist", "a1:0.4")
    d = json.loads(out)["d_max"]
    assert code == 0 and d["lower"] > 0


def test_qsbounds_table(capsys):
    code, out = run(capsys, "qsbounds", "--M", "1,2", "--samples", "100", "--sample-depth", "6")
    rows = json.loads(out)["rows"]
    assert code == 0 and rows[0]["zeta"] == 0.0 and rows[1]["violations"] == 0


def test_pressure_output_fields(capsys, cache):
    code, out = run(capsys, "pressure", "--cache", cache, "--depth", "2")
    doc = json.loads(out)
    assert code == 0
    assert set(doc) == {"depth", "pressure", "residual", "variance_a", "variance_b", "pmetric",
                        "diagnostics"}
    assert {"h", "delta", "mean_residual"} <= set(doc["diagnostics"])


def test_input_errors_exit_3(capsys):
    for argv in (["scaling", "--genus", "1"], ["scaling", "--nonsense"],
                 ["scaling", "--precision", "quad"], ["compare", "--twist", "b1:0.2"],
                 ["qsbounds", "--M", "0.5"]):
        code, out = run(capsys, *argv)
        assert code == 3, argv
        assert json.loads(out)["exit_code"] == 3


def test_certificate_failure_exits_2(capsys, cache):
    code, out = run(capsys, "compare", "--cache", cache, "--depth", "2", "--twist", "a1:6")
    assert code == 2 and json.loads(out)["error"] in {"ExpansionFailure", "CombinatoricsMismatch",
                                                      "OrderViolation", "MarkovFailure"}


def test_precision_parser():
    assert parse_precision("double") is None
    assert parse_precision("extended:200") == 200
    with pytest.raises(InputError):
        parse_precision("extended:10")
