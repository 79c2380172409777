import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from matdeg.cli import BENCH_COLUMNS, SCHEMA_VERSION, main
from matdeg.sparsemat import random_sparse_hermitian
from matdeg.witness import nff_matrix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def strip(doc):
    return {k: v for k, v in doc.items() if k != "timestamp"}


@pytest.fixture
def matrix_file(tmp_path):
    path = tmp_path / "a.json"
    random_sparse_hermitian(12, 3, 1, target_norm1=0.6).save(path)
    return str(path)


class TestApproxDegree:
    def test_square(self, capsys):
        code, doc = run_json(capsys, "approx-degree", "--function", "power:d=2", "--eps", "0.4")
        assert code == 0
        assert doc["d"] == 2 and doc["schema_version"] == SCHEMA_VERSION

    def test_deterministic_modulo_timestamp(self, capsys):
        argv = ("approx-degree", "--function", "sin:t=10", "--eps", "0.1", "--parity", "odd")
        _, a = run_json(capsys, *argv)
        _, b = run_json(capsys, *argv)
        assert strip(a) == strip(b)
        assert set(a["timestamp"]) == {"utc", "wall_time"}

    def test_bad_function(self, capsys):
        code, doc = run_json(capsys, "approx-degree", "--function", "zeta:t=1", "--eps", "0.1")
        assert code == 2 and "error" in doc

    def test_csv(self, capsys):
        code, out = run(capsys, "approx-degree", "--function", "cheb:d=4", "--eps", "0.5",
                        "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and rows[0]["d"] == "4"

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        main(["approx-degree", "--function", "cheb:d=3", "--eps", "0.5", "--out", str(out)])
        assert json.loads(out.read_text())["d"] == 3
        assert capsys.readouterr().out == ""


class TestWitness:
    @pytest.fixture
    def cert_file(self, capsys, tmp_path):
        path = tmp_path / "cert.json"
        code = main(["witness", "build", "--function", "sin:t=8", "--eps", "0.25",
                     "--out", str(path)])
        capsys.readouterr()
        assert code == 0
        return path

    def test_build_and_verify(self, capsys, cert_file):
        code, doc = run_json(capsys, "witness", "verify", "--certificate", str(cert_file))
        assert code == 0 and doc["verified"] is True

    @pytest.mark.parametrize("field", ["entry", "matrix", "degree"])
    def test_tampered_rejected(self, capsys, cert_file, field):
        doc = json.loads(cert_file.read_text())
        cert = doc["certificate"]
        if field == "entry":
            cert["claimed_value"] += 1e-3
        elif field == "matrix":
            cert["matrix"]["offdiag"][1] *= 1.01
        else:
            cert["degree_d"] += 2
        cert_file.write_text(json.dumps(doc))
        code, err = run_json(capsys, "witness", "verify", "--certificate", str(cert_file))
        assert code == 2 and "rejected" in err["error"]["message"]

    def test_certify_nff(self, capsys):
        code, doc = run_json(capsys, "witness", "certify", "--function", "sin:t=23.561944901923447",
                             "--nff", "8", "--eps", "0.5")
        assert code == 0
        assert abs(doc["entry"]) == pytest.approx(1.0, abs=1e-6)
        assert doc["lower_bound"] == 16 - 2

    def test_certify_matrix(self, capsys, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(nff_matrix(3).to_dict()))
        code, doc = run_json(capsys, "witness", "certify", "--function", "sin:t=1",
                             "--matrix", str(path), "--eps", "0.9")
        assert code == 0 and doc["lower_bound"] == 0

    def test_certify_needs_matrix(self, capsys):
        code, _ = run_json(capsys, "witness", "certify", "--function", "sin:t=1")
        assert code == 2

    def test_missing_certificate(self, capsys):
        code, _ = run_json(capsys, "witness", "verify")
        assert code == 2


class TestEstimate:
    @pytest.mark.parametrize("method", ["exact", "walk", "oracle"])
    def test_poly(self, capsys, matrix_file, method):
        code, doc = run_json(capsys, "estimate", "--matrix", matrix_file, "--poly", "0,1,0.5",
                             "--i", "1", "--j", "2", "--method", method, "--eps", "0.05")
        assert code == 0 and doc["method"] == method

    def test_methods_agree(self, capsys, matrix_file):
        base = ("estimate", "--matrix", matrix_file, "--function", "exp:t=0.5", "--i", "3",
                "--j", "3", "--eps", "0.05")
        _, oracle = run_json(capsys, *base, "--method", "oracle")
        _, walk = run_json(capsys, *base, "--method", "walk")
        _, contour = run_json(capsys, *base, "--method", "contour")
        assert abs(walk["value"] - oracle["value"]) <= 0.05
        assert abs(contour["value"] - oracle["value"]) <= 0.05
        assert contour["M"] >= 1 and "wall_time" not in walk

    def test_seeded_walk_reproducible(self, capsys, matrix_file):
        argv = ("estimate", "--matrix", matrix_file, "--poly", "0,1,1", "--i", "1", "--j", "1",
                "--seed", "7")
        _, a = run_json(capsys, *argv)
        _, b = run_json(capsys, *argv)
        assert strip(a) == strip(b)

    def test_bad_index(self, capsys, matrix_file):
        code, _ = run_json(capsys, "estimate", "--matrix", matrix_file, "--poly", "0,1",
                           "--i", "99", "--j", "1")
        assert code == 2

    def test_bad_matrix(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code, _ = run_json(capsys, "estimate", "--matrix", str(path), "--poly", "1",
                           "--i", "1", "--j", "1")
        assert code == 2

    def test_contour_rejects_poly(self, capsys, matrix_file):
        code, _ = run_json(capsys, "estimate", "--matrix", matrix_file, "--poly", "0,1",
                           "--i", "1", "--j", "1", "--method", "contour")
        assert code == 2


class TestHardness:
    @pytest.mark.parametrize("kind,extra", [
        ("parity", []), ("parity", ["--even-variant"]), ("forrelation", ["--n", "2"]),
        ("clock", ["--n", "3"]),
    ])
    def test_gen_then_verify(self, capsys, tmp_path, kind, extra):
        path = tmp_path / "bundle.json"
        assert main(["hardness", "gen", "--kind", kind, *extra, "--out", str(path)]) == 0
        capsys.readouterr()
        code, doc = run_json(capsys, "hardness", "verify", "--bundle", str(path))
        assert code == 0 and doc["ok"] is True and doc["residual"] <= 1e-8

    def test_tampered_forrelation_bundle(self, capsys, tmp_path):
        path = tmp_path / "bundle.json"
        main(["hardness", "gen", "--kind", "forrelation", "--n", "2", "--out", str(path)])
        capsys.readouterr()
        doc = json.loads(path.read_text())
        doc["payload"]["phi"] = doc["payload"]["phi"] + 0.25
        path.write_text(json.dumps(doc))
        code, _ = run_json(capsys, "hardness", "verify", "--bundle", str(path))
        assert code == 2


class TestBench:
    def test_exact_csv(self, capsys):
        code, out = run(capsys, "bench", "--family", "exact", "--sweep", "2,3", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and tuple(rows[0]) == BENCH_COLUMNS
        assert [int(r["degree"]) for r in rows] == [2, 3]
        assert all(float(r["error"]) < 1e-12 for r in rows)

    def test_witness_json(self, capsys):
        code, doc = run_json(capsys, "bench", "--family", "witness-sin", "--sweep", "4,8")
        assert code == 0 and len(doc["rows"]) == 2
        assert doc["rows"][1]["dimension"] >= doc["rows"][0]["dimension"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "matdeg", "approx-degree", "--function",
                           "cheb:d=2", "--eps", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["d"] == 2


def test_usage_error_exit_code():
    proc = subprocess.run([sys.executable, "-m", "matdeg", "estimate"], capture_output=True)
    assert proc.returncode == 2
