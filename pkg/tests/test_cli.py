import csv
import io
import json
import math

import pytest

from besov_singular.cli import main, parse_space, ArgError
from besov_singular import INF


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


CLASSIFY = ["classify", "--setting", "domain", "--p0", "1", "--q0", "1", "--s0", "1",
            "--p1", "inf", "--q1", "1", "--s1", "0", "--n", "1"]


def test_classify(capsys):
    code, out, _ = run(capsys, *CLASSIFY)
    assert code == 0
    assert json.loads(out)["result"]["verdict"] == "NotSS"
    code, out, _ = run(capsys, "classify", "--setting", "rn", "--p0", "2", "--q0", "1", "--s0", "0",
                       "--p1", "1", "--q1", "1", "--s1", "0", "--n", "1")
    assert json.loads(out)["result"]["verdict"] == "NoEmbedding"


def test_classify_argument_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(CLASSIFY[:-2])
    assert info.value.code == 2
    bad = list(CLASSIFY)
    bad[bad.index("--p0") + 1] = "zero"
    code, _, err = run(capsys, *bad)
    assert code == 2 and "--p0" in err
    bad = list(CLASSIFY)
    bad[bad.index("--q1") + 1] = "-1"
    code, _, err = run(capsys, *bad)
    assert code == 2 and "--q1" in err


def test_replay_is_byte_identical(capsys):
    outs = [run(capsys, "glide", "--q0", "1", "--q1", "2", "--eps", "0.5", "--subspace", "random",
                "--levels", "60", "--block", "2", "--dim", "40", "--seed", "5")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def atlas_rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_atlas_default(capsys):
    code, out, _ = run(capsys, "atlas")
    rows = atlas_rows(out)
    assert code == 0 and len(rows) >= 5000
    assert all(r["total"] == "True" and r["flags_consistent"] == "True" for r in rows)
    assert out.startswith("# config: ")


def test_atlas_filters(capsys):
    code, out, _ = run(capsys, "atlas", "--setting", "domain", "--critical", "--q-order", "lt",
                       "--p0-finite", "--p-order", "p1<=p0")
    rows = atlas_rows(out)
    assert rows and {r["verdict"] for r in rows} == {"SSNotFSS"}
    code, out, _ = run(capsys, "atlas", "--setting", "rn")
    assert not any(r["verdict"] == "SSNotFSS" for r in atlas_rows(out))


def test_atlas_threads_do_not_change_output(capsys, monkeypatch):
    _, serial, _ = run(capsys, "atlas", "--n", "1")
    monkeypatch.setenv("BESOV_ATLAS_THREADS", "4")
    _, threaded, _ = run(capsys, "atlas", "--n", "1")
    assert serial == threaded


def test_atlas_empty(capsys):
    code, _, _ = run(capsys, "atlas", "--setting", "homogeneous", "--critical", "--q-order", "gt",
                     "--p-values", "1", "--q-values", "1")
    assert code == 2


def test_bernstein_command(capsys):
    code, out, _ = run(capsys, "bernstein", "--src", "l1(l1)", "--dst", "l2(l2)", "--levels", "2",
                       "--block", "2", "--nmax", "2", "--budget", "20", "--seed", "7")
    assert code == 0
    data = json.loads(out)
    for e in data["result"]["estimates"]:
        assert e["oracle"] <= e["upper"] + 1e-6
    assert data["config"]["seed"] == 7


def test_bernstein_computation_error(capsys):
    code, _, err = run(capsys, "bernstein", "--src", "l1(l1)", "--dst", "l2(l2)", "--levels", "4",
                       "--block", "4", "--nmax", "1", "--seed", "0")
    assert code == 3 and "dimension" in err


def test_glide_command(capsys):
    code, out, _ = run(capsys, "glide", "--q0", "1", "--q1", "inf", "--eps", "0.1", "--subspace", "full")
    res = json.loads(out)["result"]
    assert code == 0 and res["N"] == 21 and res["ratio"] == pytest.approx(1 / 21, abs=1e-12)
    assert set(res) == {"N", "delta", "cutoffs", "ratio"}
    code, _, err = run(capsys, "glide", "--q0", "1", "--q1", "2", "--eps", "0.1", "--levels", "10")
    assert code == 3 and "partial ratio" in err
    code, _, _ = run(capsys, "glide", "--q0", "2", "--q1", "1", "--eps", "0.1")
    assert code == 3


def test_witness_commands(capsys):
    code, out, _ = run(capsys, "witness", "--family", "rademacher", "--n", "2", "--p0", "4", "--p1", "2")
    assert code == 0
    assert json.loads(out)["result"]["lower_bound"] == pytest.approx(2 ** -0.25, abs=1e-9)
    code, out, _ = run(capsys, "witness", "--family", "constant", "--levels", "3")
    assert code == 0 and json.loads(out)["result"]["csv"].startswith("v0,v1,v2")
    code, out, _ = run(capsys, "witness", "--family", "diagonal", "--src", "l1(2^j * l1)", "--dst", "l2(l2)")
    assert code == 0
    code, out, _ = run(capsys, "witness", "--family", "flat", "--basis", "[[1,0],[0,1],[-1,1]]")
    assert json.loads(out)["result"]["flat_count"] == 2
    code, _, _ = run(capsys, "witness", "--family", "rademacher", "--p0", "2", "--p1", "4")
    assert code == 3


def test_haar_commands(capsys):
    code, out, _ = run(capsys, "haar", "--breakpoints", "0,1/2", "--values", "1", "--jmax", "3")
    res = json.loads(out)["result"]
    assert code == 0 and res["parseval"] == res["l2_squared"] == "1/2"
    assert res["besov_norm"] == pytest.approx(1 / math.sqrt(2))
    code, out, _ = run(capsys, "haar", "--index-sets", "--jmax", "12")
    assert json.loads(out)["result"]["A"] <= 3
    code, _, _ = run(capsys, "haar", "--breakpoints", "0,x", "--values", "1")
    assert code == 2


def test_text_format_and_output_file(capsys, tmp_path):
    path = tmp_path / "v.json"
    code, out, _ = run(capsys, *CLASSIFY, "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text(encoding="utf-8"))["result"]["verdict"] == "NotSS"
    code, out, _ = run(capsys, *CLASSIFY, "--format", "text")
    assert "verdict: NotSS" in out


def test_space_language():
    sp = parse_space("l2(4^j * l1{3})", 3)
    assert sp.block_sizes == [3, 3, 3] and list(sp.weights) == [1, 4, 16]
    assert sp.outer_q == 2 and sp.inner_p == 1
    sp = parse_space("linf(2^(-1/2 j) * l2)", 3, "dyadic")
    assert sp.outer_q == INF and sp.block_sizes == [1, 2, 4]
    assert sp.weights[2] == pytest.approx(0.5)
    sp = parse_space("domain(p=2, q=1, s=1)", 3)
    assert list(sp.weights) == [1, 2, 4]
    sp = parse_space("probability(p=4, q=1)", 3, "dyadic")
    assert sp.weights[2] == pytest.approx(2 ** -0.5)
    for bad in ["l2", "l2(3 * l1)", "lx(l1)", "domain(p=2)", "foo(p=1,q=1)"]:
        with pytest.raises(ArgError):
            parse_space(bad, 2)
