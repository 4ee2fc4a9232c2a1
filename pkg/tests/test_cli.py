import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from yamabe_lab.cli import SCHEMA, build_parser, run

SUBCOMMANDS = [
    "energy", "quotient", "minimize", "steklov", "check-thm1", "check-corollary", "check-nonpositive",
    "cherrier", "annulus", "escobar", "bump", "cr-energy", "check-cr",
]


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def call_json(capsys, *argv):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    data = json.loads(out)
    assert data["schema"] == SCHEMA
    return data


def test_all_subcommands_registered():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    assert sorted(sub.choices) == sorted(SUBCOMMANDS)


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help(capsys, cmd):
    code, out, _ = call(capsys, cmd, "--help")
    assert code == 0
    assert "CSV columns" in out
    assert cmd in out


def test_unknown_subcommand_is_usage_error(capsys):
    code, _, err = call(capsys, "frobnicate")
    assert code == 2
    assert "usage" in err


def test_bad_option_value_is_usage_error(capsys):
    assert call(capsys, "annulus", "--n", "three")[0] == 2
    assert call(capsys, "energy", "--metric", "escobar", "--domain", "annulus")[0] == 2


def test_domain_error_exit_code(capsys):
    code, _, err = call(capsys, "annulus", "--n", "3", "--r", "1.5")
    assert code == 1
    assert "DomainError" in err


def test_precondition_error_exit_code(capsys):
    code, _, err = call(capsys, "check-corollary", "--no-vol-equal", "--H-g", "2", "--H-h", "1", "--density", "0")
    assert code == 1
    assert "PreconditionError" in err


def test_annulus_report(capsys):
    d = call_json(capsys, "annulus", "--n", "3", "--r", "0.5", "--m", "1", "--format", "json")
    assert_allclose(d["euclid_energy"], 8 * np.pi / np.sqrt(5 * np.pi), rtol=1e-15)
    assert_allclose(d["energy"], d["energy_quadrature"], rtol=1e-10)
    assert_allclose(d["energy"], 12 * np.pi / np.sqrt(36.25 * np.pi), rtol=1e-14)
    assert_allclose(d["quoted"]["energy"], 28 * np.pi / np.sqrt(36.25 * np.pi), rtol=1e-14)
    assert d["H_inner"] == 0.0


def test_annulus_massless(capsys):
    d = call_json(capsys, "annulus", "--n", "3", "--r", "0.5", "--m", "0")
    assert_allclose(d["energy"], d["euclid_energy"], rtol=1e-15)
    assert_allclose(d["energy_quadrature"], d["euclid_energy"], rtol=1e-10)


def test_annulus_find_m0(capsys):
    d = call_json(capsys, "annulus", "--m", "1", "--find-m0")
    assert d["m0"]["m0"] is None and "does not exceed" in d["m0"]["error"]
    d = call_json(capsys, "annulus", "--m", "1", "--find-m0", "--formula", "quoted")
    assert d["m0"]["m0"] == 0.0 and d["m0"]["exceeds_for_all_probed"]


def test_annulus_sweep_csv(capsys):
    code, out, _ = call(capsys, "--format", "csv", "annulus", "--m", "0.5", "--m", "1", "--m", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["m", "E_schwarzschild", "E_euclid", "limit"]
    assert [float(r[0]) for r in rows[1:]] == [0.5, 1.0, 2.0]


def test_cherrier_n4(capsys):
    d = call_json(capsys, "cherrier", "--n", "4")
    assert_allclose(d["reference_bound"], 3 / np.pi, rtol=1e-15)
    assert d["satisfied"] is True and d["within_reference_bound"] is True
    assert_allclose(d["lhs"], d["bound"], rtol=1e-13)


def test_cherrier_supplied_data(capsys):
    d = call_json(capsys, "cherrier", "--n", "4", "--sup-v-prime", "0.75", "--C-bound", "1", "--mu", "1")
    assert d["lhs"] == 1.0 and d["satisfied"] is False
    assert call(capsys, "cherrier", "--n", "4", "--mu", "1")[0] == 2


def test_steklov_ball_degenerate(capsys):
    d = call_json(capsys, "steklov", "--domain", "ball", "--n", "3", "--H", "2")
    assert d["degenerate"] is True
    assert d["eigenvalues"][:4] == [0.0, 1.0, 2.0, 3.0]


def test_steklov_default_H_is_euclidean(capsys):
    assert call_json(capsys, "steklov")["degenerate"] is True
    assert call_json(capsys, "steklov", "--H", "0")["degenerate"] is False


def test_check_thm1(capsys):
    d = call_json(capsys, "check-thm1", "--gamma", "1", "--C", "0.1", "--H-g", "2", "--H-h", "1", "--ratio-sup", "0.4")
    assert d["conclusion"] == "unique_type_II_yamabe"
    assert set(d) == {"schema", "command", "theorem", "hypotheses", "branch", "conclusion"}
    d = call_json(capsys, "check-thm1", "--gamma", "1", "--C", "0.2", "--H-g", "2", "--H-h", "1", "--ratio-sup", "0.4")
    assert d["conclusion"] == "inconclusive"
    assert call(capsys, "check-thm1", "--gamma", "0", "--C", "1", "--H-g", "1", "--H-h", "1",
                "--ratio-sup", "1")[0] == 1


def test_check_corollary(capsys):
    d = call_json(capsys, "check-corollary", "--H-g", "2", "--H-h", "1", "--density", "-0.5")
    assert d["conclusion"] == "type_II_yamabe"


def test_check_nonpositive(capsys):
    assert call_json(capsys, "check-nonpositive", "--H-h", "-1", "--H-hbar", "-3")["applicable"] is True
    d = call_json(capsys, "check-nonpositive", "--H-h", "-1", "--H-hbar", "0")
    assert d["applicable"] is False and d["reasons"]


def test_check_cr(capsys):
    args = ["check-cr", "--R-theta", "1", "--R-Theta", "2"]
    assert call_json(capsys, *args, "--ratio-sup", "0.9")["conclusion"] == "unique_cr_yamabe"
    assert call_json(capsys, *args, "--ratio-sup", "1.1")["conclusion"] == "inconclusive"
    assert call(capsys, "check-cr", "--R-theta", "1", "--R-Theta", "0", "--ratio-sup", "1")[0] == 1


def test_cr_energy(capsys, tmp_path):
    p = tmp_path / "cr.csv"
    p.write_text("weight,R,u,grad_norm\n1,1,1,0\n2,3,1,0\n")
    d = call_json(capsys, "cr-energy", "--csv", str(p), "--n", "1")
    assert_allclose(d["energy"], 7 / np.sqrt(3), rtol=1e-15)
    assert_allclose(d["quotient"], 7 / np.sqrt(3), rtol=1e-15)


def test_escobar(capsys):
    d = call_json(capsys, "escobar", "--a", "0,0.3,0.6")
    assert d["quotient_spread"] < 1e-6
    assert all(f["boundary_residual"] < 1e-9 for f in d["family"])


def test_bump(capsys):
    d = call_json(capsys, "bump", "--amplitude", "0")
    assert d["max_defect"] == 0.0
    assert call_json(capsys, "bump")["max_defect"] > 0


def test_energy_subcommand(capsys):
    d = call_json(capsys, "energy", "--domain", "annulus", "--r-in", "0.5", "--metric", "schwarzschild", "--m", "1")
    assert_allclose(d["energy"], 12 * np.pi / np.sqrt(36.25 * np.pi), rtol=1e-10)
    d = call_json(capsys, "energy", "--metric", "escobar", "--a", "0.3,0,0", "--order", "48")
    assert_allclose(d["energy"], 8 * np.sqrt(np.pi), rtol=1e-8)


def test_quotient_subcommand(capsys):
    d = call_json(capsys, "quotient")
    assert_allclose(d["quotient"], 8 * np.sqrt(np.pi), rtol=1e-14)
    d = call_json(capsys, "quotient", "--L-max", "1", "--coeffs", "3.5449077018110318,0,0.3,0")
    assert d["quotient"] > 8 * np.sqrt(np.pi)


def test_minimize_subcommand(capsys):
    d = call_json(capsys, "minimize", "--domain", "annulus", "--L-max", "0", "--init", "constant")
    assert d["converged"] and d["positive"]
    assert d["H_bar_mean"] > 0


def test_csv_full_precision(capsys):
    code, out, _ = call(capsys, "--format", "csv", "annulus", "--m", "1")
    row = list(csv.reader(io.StringIO(out)))[1]
    assert float(row[2]) == 8 * np.pi / np.sqrt(5 * np.pi)


def test_human_format(capsys):
    code, out, _ = call(capsys, "cherrier", "--format", "human")
    assert code == 0 and out.startswith("cherrier:")


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out, _ = call(capsys, "--output", str(path), "cherrier", "--n", "5")
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["n"] == 5


def test_repeated_runs_byte_identical(tmp_path):
    argv = ["minimize", "--domain", "annulus", "--L-max", "2", "--init", "random", "--seed", "7", "--max-iters", "50"]
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        assert run(argv + ["--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "yamabe_lab", "cherrier", "--n", "6"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["satisfied"] is True
