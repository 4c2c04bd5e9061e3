import numpy as np
import pytest

from corrperc.cli import CURVE_COLUMNS, main
from corrperc.joint_dist import load_custom


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = text.strip().splitlines()
    assert lines[0] == "# corrperc-csv v1"
    return lines[1], [ln.split(",") for ln in lines[2:]]


def test_dist_bimodal_fully_coupled(capsys):
    code, out, _ = run(capsys, "dist", "--family", "bimodal", "--eps", "1e-5", "--t", "1", "--N", "9")
    assert code == 0
    header, body = rows(out)
    assert header == "j,k,weight"
    assert [(r[0], r[1]) for r in body] == [("3", "3"), ("9", "9")]
    assert float(body[1][2]) == pytest.approx(1e-5)


def test_dist_percolated_cubic(capsys):
    code, out, _ = run(capsys, "dist", "--family", "bimodal", "--eps", "0", "--t", "0", "--N", "9",
                       "--percolate", "0.5")
    assert code == 0
    _, body = rows(out)
    assert len(body) == 6
    got = {(int(j), int(k)): float(w) for j, k, w in body}
    b = [0.25, 0.5, 0.25]
    for (j, k), w in got.items():
        assert w == pytest.approx(b[j - 1] * b[k - 1], abs=1e-15)


def test_dist_custom_echo(tmp_path, capsys):
    src = tmp_path / "custom.csv"
    src.write_text("j,k,weight\n1,2,2\n2,5,1\n5,5,1\n")
    code, out, _ = run(capsys, "dist", "--in", str(src), "--N", "5")
    assert code == 0
    dst = tmp_path / "echo.csv"
    dst.write_text(out)
    np.testing.assert_allclose(load_custom(dst, 5).e, load_custom(src, 5).e, rtol=1e-15)
    total = sum(float(w) * (1 if j == k else 2) for j, k, w in rows(out)[1])
    assert total == pytest.approx(1.0)


def test_dist_writes_file(tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert run(capsys, "dist", "--family", "exponential", "--t", "0.5", "--N", "6", "--out", str(out))[0] == 0
    assert out.read_text().startswith("# corrperc-csv v1\n")


@pytest.mark.parametrize("argv", [
    ["dist", "--N", "5"],
    ["dist", "--family", "bimodal", "--N", "5"],
    ["dist", "--family", "nope", "--N", "5"],
    ["dist", "--in", "/nonexistent.csv", "--N", "5"],
    ["dist", "--family", "exponential", "--N", "5", "--percolate", "1.5"],
    ["threshold", "--family", "exponential", "--N-list", "32,16"],
    ["simulate", "--family", "bimodal", "--eps", "0", "--N", "9", "--nodes", "100"],
    ["analyze", "--family", "bimodal", "--eps", "0", "--N", "9", "--pi-start", "0"],
])
def test_input_errors_exit_1(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_analyze_cubic(capsys):
    code, out, _ = run(capsys, "analyze", "--family", "bimodal", "--eps", "0", "--N", "9",
                       "--pi-start", "0.3", "--pi-stop", "0.8", "--pi-step", "0.1")
    assert code == 0
    header, body = rows(out)
    assert header == ",".join(CURVE_COLUMNS)
    pis = [float(r[0]) for r in body]
    assert pis == [0.3, 0.4, 0.5, 0.6, 0.7, 0.8]
    s = [float(r[1]) for r in body]
    sup = [r[5] for r in body]
    assert s[0] < 1e-12 and s[3] == pytest.approx(19 / 27, abs=1e-10)
    assert sup == ["0", "0", "0", "1", "1", "1"]


def test_analyze_reports_inf_at_criticality(tmp_path, capsys):
    src = tmp_path / "e.csv"
    # product-form table critical exactly at pi = 1 (mean excess degree 1)
    src.write_text("j,k,weight\n1,1,0.25\n1,3,0.25\n3,3,0.25\n")
    code, out, _ = run(capsys, "analyze", "--in", str(src), "--N", "3",
                       "--pi-start", "0.9", "--pi-stop", "1", "--pi-step", "0.1")
    assert code == 0
    assert rows(out)[1][-1][2] == "inf"


def test_threshold_csv(capsys):
    code, out, _ = run(capsys, "threshold", "--family", "exponential", "--N-list", "8,16",
                       "--t-list", "0,1")
    assert code == 0
    header, body = rows(out)
    assert header == "N,t,pi_c"
    assert [r[:2] for r in body] == [["8", "0.0"], ["16", "0.0"], ["8", "1.0"], ["16", "1.0"]]
    assert body[0][2] == "" and body[1][2] == ""
    assert 0 < float(body[2][2]) < 1


def test_simulate_cubic_endpoints(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "bimodal", "--eps", "0", "--N", "9",
                       "--nodes", "2000", "--pi-grid", "0,1", "--replicas", "2", "--seed", "3")
    assert code == 0
    header, body = rows(out)
    assert header == "pi,s_mean,s_stderr,w_mean,w_stderr,r_mean,replicas,n,seed"
    assert float(body[0][1]) == pytest.approx(1 / 2000)
    assert float(body[1][1]) > 0.99


def test_simulate_edge_dump(tmp_path, capsys):
    edges = tmp_path / "edges.txt"
    code, _, _ = run(capsys, "simulate", "--family", "bimodal", "--eps", "0", "--N", "9",
                     "--nodes", "100", "--pi", "0.5", "--edges", str(edges))
    assert code == 0
    lines = edges.read_text().splitlines()
    assert len(lines) == 150
    assert all(len(ln.split(",")) == 2 for ln in lines)


def test_outputs_are_byte_identical(capsys, monkeypatch):
    argv = ["simulate", "--family", "exponential", "--t", "0.5", "--N", "10", "--nodes", "3000",
            "--pi-grid", "0.4,0.9", "--replicas", "3", "--seed", "11"]
    monkeypatch.setenv("CORRPERC_THREADS", "1")
    first = run(capsys, *argv)[1]
    monkeypatch.setenv("CORRPERC_THREADS", "3")
    second = run(capsys, *argv)[1]
    assert first == second
    a = run(capsys, "analyze", "--family", "powerlaw", "--t", "0.9", "--N", "12", "--pi-step", "0.05")[1]
    b = run(capsys, "analyze", "--family", "powerlaw", "--t", "0.9", "--N", "12", "--pi-step", "0.05")[1]
    assert a == b


def test_bad_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("CORRPERC_THREADS", "zero")
    assert run(capsys, "analyze", "--family", "bimodal", "--eps", "0", "--N", "9", "--pi-step", "0.5")[0] == 1


@pytest.mark.parametrize("suite", ["moments", "oracle"])
def test_validate_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "validate", "--suite", suite)
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().splitlines()[-1].endswith("checks passed")


def test_validate_failure_exit_code(capsys, monkeypatch):
    from corrperc import cli
    from corrperc.validation import Check
    monkeypatch.setattr(cli, "run_suite", lambda name: [Check("ok", True), Check("bad", False, "x")])
    code, out, _ = run(capsys, "validate", "--suite", "moments")
    assert code == 3
    assert "FAIL bad (x)" in out


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from corrperc import analytics as an
    from corrperc import cli

    def boom(*a, **k):
        raise an.ConvergenceError("no convergence")

    monkeypatch.setattr(cli.an, "find_threshold", boom)
    assert run(capsys, "threshold", "--family", "exponential", "--N-list", "8")[0] == 2
