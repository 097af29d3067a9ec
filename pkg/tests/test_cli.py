import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import jsonschema
import pytest

from convlyap import cli, lyapunov
from convlyap.bounds import StabilityData, search_bound
from convlyap.formats import load_schema, poly_from_json
from convlyap.lyapunov import GramBlock, GramForm


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    (tmp_path / "vdp.txt").write_text("x1' = -x2\nx2' = -(1 - x1^2)*x2 + x1\n")
    (tmp_path / "bad.txt").write_text("x1' = 1 + x1\n")
    (tmp_path / "up.txt").write_text("x1' = x1\n")
    (tmp_path / "norm.txt").write_text("x1^2 + x2^2\n")
    return tmp_path


def test_bound_feasible(capsys):
    code, out, _ = run(capsys, "bound", "--K", "1", "--lambda", "5", "--L", "0.1", "--q", "1")
    assert code == 0
    d = json.loads(out)
    assert d["feasible"] and d["degree_bound"] == 2
    jsonschema.validate(d, load_schema("bound"))


def test_bound_vdp(capsys):
    code, out, _ = run(capsys, "bound", "--K", "1", "--lambda", "0.542", "--L", "2.1", "--r", "0.25", "--q", "3")
    d = json.loads(out)
    assert code == 0 and (d["N"], d["k"]) == (4, 3)


def test_bound_infeasible_exit(capsys):
    code, out, _ = run(capsys, "bound", "--K", "1.2", "--lambda", "0.3", "--L", "1", "--q", "5", "--kmax", "1", "--tgrid", "4")
    assert code == 2
    jsonschema.validate(json.loads(out), load_schema("bound"))


@pytest.mark.parametrize(
    "argv",
    [
        ["bound", "--K", "1", "--lambda", "0", "--L", "1"],
        ["bound", "--K", "0.5", "--lambda", "1", "--L", "1"],
        ["bound", "--K", "1", "--lambda", "x", "--L", "1"],
        ["bound", "--K", "1", "--L", "1"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = cli.main(argv)
        raise SystemExit(code)
    assert exc.value.code == 64


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--K", "1.2", "--L", "1", "--r", "1", "--q", "5",
                       "--lambda-from", "0.3", "--lambda-to", "3", "--steps", "10")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["lambda", "T", "N", "k", "degree_bound", "feasible"]
    lams = [float(r["lambda"]) for r in rows]
    assert lams == sorted(lams) and len(rows) == 10
    degs = [int(r["degree_bound"]) for r in rows]
    assert all(a >= b for a, b in zip(degs, degs[1:]))


def test_single_step_sweep_matches_bound(capsys):
    _, out, _ = run(capsys, "sweep", "--K", "1", "--L", "2.1", "--r", "0.25", "--q", "3",
                    "--lambda-from", "0.542", "--lambda-to", "9", "--steps", "1")
    (row,) = list(csv.DictReader(io.StringIO(out)))
    cert = search_bound(StabilityData(1, 0.542, 2.1, 0.25, 3))
    assert (float(row["T"]), int(row["N"]), int(row["k"]), int(row["degree_bound"])) == (
        cert.T, cert.N, cert.k, cert.degree_bound)
    assert row["feasible"] == "true"


def test_sweep_all_infeasible(capsys):
    _, out, _ = run(capsys, "sweep", "--K", "1.2", "--L", "1", "--q", "5", "--kmax", "1", "--tgrid", "4",
                    "--lambda-from", "0.1", "--lambda-to", "0.2", "--steps", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["feasible"] for r in rows] == ["false"] * 3


def test_construct_vdp(capsys, files):
    code, out, _ = run(capsys, "construct", "--system", str(files / "vdp.txt"), "--k", "2", "--N", "1",
                       "--T", "1/4", "--delta", "1/4")
    assert code == 0
    d = json.loads(out)
    jsonschema.validate(d, load_schema("construct"))
    M = [[Fraction(*v) for v in row] for row in d["gram"]["blocks"][0]["M"]]
    H = [[48, 6], [6, 1]]
    assert M == [[Fraction(H[r // 2][s // 2], 192) if r % 2 == s % 2 else 0 for s in range(4)] for r in range(4)]
    V = poly_from_json(d["V"], 2)
    assert V.coeff((0, 2, 0)) == Fraction(49, 192)


def test_construct_cubic_builtin(capsys):
    code, out, _ = run(capsys, "construct", "--system", "cubic", "--k", "2", "--N", "1", "--T", "0.25")
    d = json.loads(out)
    assert code == 0
    assert d["V_text"] == "1/192*x1^6 - 1/16*x1^4 + 1/4*x1^2"


def test_construct_linear_is_quadratic(capsys):
    code, out, _ = run(capsys, "construct", "--system", "linear", "--k", "3", "--N", "2", "--T", "1/4")
    assert code == 0 and json.loads(out)["degree"] == 2


def test_construct_term_cap(capsys, monkeypatch):
    monkeypatch.setenv("CONVLYAP_TERM_CAP", "100")
    code, out, err = run(capsys, "construct", "--system", "vdp", "--k", "3", "--N", "3", "--T", "1/4")
    assert code == 3 and out == ""
    assert "predicted degree 85" in err


def test_construct_refuses_tampered_certificate(capsys, monkeypatch):
    real = lyapunov.gram_extract

    def tampered(g, delta):
        form = real(g, delta)
        b = form.blocks[0]
        M = [list(r) for r in b.M]
        M[0][1] += Fraction(1, 10**9)
        M[1][0] += Fraction(1, 10**9)
        return GramForm((GramBlock(b.basis, tuple(map(tuple, M)), b.interval, b.piece),) + form.blocks[1:])

    monkeypatch.setattr(lyapunov, "gram_extract", tampered)
    code, out, err = run(capsys, "construct", "--system", "vdp", "--k", "2", "--N", "1", "--T", "1/4")
    assert code == 70 and out == "" and "refusing" in err


def test_construct_bad_inputs(capsys, files):
    assert run(capsys, "construct", "--system", str(files / "bad.txt"), "--k", "2", "--N", "1", "--T", "1/4")[0] == 64
    assert run(capsys, "construct", "--system", "missing.txt", "--k", "2", "--N", "1", "--T", "1/4")[0] == 64
    assert run(capsys, "construct", "--system", "vdp", "--k", "2", "--N", "1", "--T", "1/4", "--delta", "1")[0] == 64


def test_verify_verdicts(capsys, files):
    _, out, _ = run(capsys, "construct", "--system", "vdp", "--k", "2", "--N", "1", "--T", "1/4")
    (files / "V.json").write_text(out)
    code, out, _ = run(capsys, "verify", "--system", "vdp", "--lyapunov", str(files / "V.json"), "--radius", "0.25")
    assert code == 0
    jsonschema.validate(json.loads(out), load_schema("verification"))
    code, _, _ = run(capsys, "verify", "--system", "vdp", "--lyapunov", str(files / "V.json"), "--radius", "1")
    assert code == 2
    code, out, _ = run(capsys, "verify", "--system", "vdp", "--lyapunov", str(files / "norm.txt"), "--radius", "0.25")
    assert code == 2
    w = json.loads(out)["worst_points"]["gamma"][0]
    assert w["x"][1] == 0 and w["value"] == 0


def test_verify_malformed(capsys, files):
    (files / "junk.json").write_text('{"V": [{"e": [0, 1], "c": [1, 1]}]}')
    assert run(capsys, "verify", "--system", "vdp", "--lyapunov", str(files / "junk.json"), "--radius", "0.25")[0] == 64
    (files / "const.txt").write_text("x1^2 + 1")
    assert run(capsys, "verify", "--system", "vdp", "--lyapunov", str(files / "const.txt"), "--radius", "0.25")[0] == 64


def test_estimate(capsys, files):
    code, out, _ = run(capsys, "estimate", "--system", "vdp", "--radius", "1")
    assert code == 0
    d = json.loads(out)
    jsonschema.validate(d, load_schema("estimate"))
    assert d["L_hat"] == pytest.approx(2.1, abs=0.05)
    assert d["K_hat"] == pytest.approx(1.0, abs=0.05)
    code, out, err = run(capsys, "estimate", "--system", str(files / "up.txt"), "--radius", "1", "--samples", "2")
    assert code == 2 and "instability" in err
    assert json.loads(out)["stable"] is False


def test_estimate_scalar_decay(capsys, files):
    (files / "lin1.txt").write_text("x1' = -x1")
    _, out, _ = run(capsys, "estimate", "--system", str(files / "lin1.txt"), "--radius", "1", "--samples", "4")
    d = json.loads(out)
    for key in ("K_hat", "lambda_hat", "L_hat"):
        assert d[key] == pytest.approx(1, rel=0.02)


def test_export_sos(capsys):
    code, out, _ = run(capsys, "export-sos", "--system", "vdp", "--radius", "1/4", "--degree", "6", "--form", "thm5")
    d = json.loads(out)
    assert code == 0 and d["basis_size"] == 10 and len(d["multipliers"]) == 3
    jsonschema.validate(d, load_schema("sos_export"))
    _, out, _ = run(capsys, "export-sos", "--system", "vdp", "--radius", "1/4", "--degree", "6", "--form", "thm3")
    assert len(json.loads(out)["multipliers"]) == 4
    assert run(capsys, "export-sos", "--system", "vdp", "--radius", "1", "--degree", "5")[0] == 64


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--system", "vdp", "--x0", "0.5,0", "--tend", "0.01", "--h", "0.005")
    assert code == 0
    assert out.splitlines()[0] == "t,x1,x2" and len(out.splitlines()) == 4
    assert run(capsys, "simulate", "--system", "vdp", "--x0", "1", "--tend", "1")[0] == 64


def test_outputs_are_deterministic(capsys):
    argv = ["construct", "--system", "vdp", "--k", "2", "--N", "2", "--T", "1/4"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "convlyap.cli", "bound", "--K", "1", "--lambda", "0", "--L", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 64 and proc.stdout == ""
