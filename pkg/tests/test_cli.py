import csv
import functools
import io
import math

import numpy as np
import pytest

from anovaqmc import _cells, cli
from anovaqmc.cli import main
from anovaqmc.core import Weights
from anovaqmc.discrepancy import l2_discrepancy
from anovaqmc.oracle import quadrature_oracle
from anovaqmc.pointsets import hammersley_2d, read_pointset, write_pointset
from anovaqmc.wce import wce


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_report(text):
    fields = {}
    for line in text.splitlines():
        if ":" in line and not line.startswith(" "):
            k, v = line.split(":", 1)
            fields[k.strip()] = v.strip()
    return fields


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestGen:
    def test_midpoint(self, tmp_path, capsys):
        assert run(capsys, "gen", "midpoint", "--n", 8, "-o", tmp_path / "p.txt")[0] == 0
        P = read_pointset(tmp_path / "p.txt")
        assert P.points[:, 0].tolist() == [(2 * j - 1) / 16 for j in range(1, 9)]

    def test_hammersley(self, tmp_path, capsys):
        run(capsys, "gen", "hammersley", "--m", 3, "--sigma", "011", "-o", tmp_path / "h.txt")
        assert read_pointset(tmp_path / "h.txt") == hammersley_2d(3, (0, 1, 1))

    def test_shifted_uses_balanced_sigma(self, tmp_path, capsys):
        run(capsys, "gen", "hammersley-shifted", "--m", 4, "-o", tmp_path / "h.txt")
        assert read_pointset(tmp_path / "h.txt") == hammersley_2d(4, (0, 0, 1, 1))

    def test_random_deterministic(self, capsys):
        _, a, _ = run(capsys, "gen", "random", "--d", 2, "--n", 10, "--seed", 7)
        _, b, _ = run(capsys, "gen", "random", "--d", 2, "--n", 10, "--seed", 7)
        assert a == b and a.splitlines()[0] == "2 10"

    @pytest.mark.parametrize(
        "argv",
        [
            ["gen", "hammersley", "--m", "3", "--sigma", "01"],
            ["gen", "midpoint"],
            ["gen", "midpoint", "--n", "0"],
            ["gen", "random", "--d", "2"],
        ],
    )
    def test_bad_params(self, argv, capsys):
        assert main(argv) == 1

    def test_unknown_kind_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["gen", "sobol", "--n", "4"])
        assert info.value.code == 1


class TestWce:
    def test_midpoint_four(self, tmp_path, capsys):
        run(capsys, "gen", "midpoint", "--n", 4, "-o", tmp_path / "p.txt")
        code, out, _ = run(capsys, "wce", tmp_path / "p.txt", "--pstar", 2)
        rep = parse_report(out)
        assert code == 0
        assert float(rep["total"]) == pytest.approx(0.07216878, abs=1e-8)
        assert rep["method"] == "exact_closed_form"
        assert float(rep["tolerance"]) == 0.0

    def test_infinity_method(self, tmp_path, capsys):
        run(capsys, "gen", "random", "--d", 2, "--n", 5, "-o", tmp_path / "p.txt")
        _, out, _ = run(capsys, "wce", tmp_path / "p.txt", "--pstar", "inf")
        assert parse_report(out)["method"] == "exact_grid_sup"

    def test_top_weight_hammersley(self, tmp_path, capsys):
        P = hammersley_2d(2, (0, 0))
        write_pointset(P, tmp_path / "h.txt")
        (tmp_path / "w.txt").write_text("1,2 1\n")
        _, out, _ = run(capsys, "wce", tmp_path / "h.txt", "--weights", tmp_path / "w.txt")
        total = float(parse_report(out)["total"])
        w = Weights.single(2, 0b11)
        assert total == wce(P, w, 2).total
        assert abs(total - quadrature_oracle(P, w, 2, 64)) <= 1e-5
        # the discrepancy with the same single weight is the plain L2 discrepancy
        _, out, _ = run(capsys, "disc", tmp_path / "h.txt", "--weights", tmp_path / "w.txt")
        assert float(parse_report(out)["discrepancy"]) == pytest.approx(l2_discrepancy(P), rel=1e-15)

    def test_csv_rows(self, tmp_path, capsys):
        run(capsys, "gen", "random", "--d", 2, "--n", 6, "-o", tmp_path / "p.txt")
        (tmp_path / "w.txt").write_text("1 0.5\n2 0.5\n1,2 1\n")
        run(capsys, "wce", tmp_path / "p.txt", "--weights", tmp_path / "w.txt", "--pstar", 3, "--csv", tmp_path / "o.csv")
        rows = read_csv(tmp_path / "o.csv")
        assert [r["mask"] for r in rows] == ["1", "2", "3"]
        assert [r["method"] for r in rows] == ["exact_closed_form", "exact_closed_form", "quadrature"]

    def test_dimension_mismatch(self, tmp_path, capsys):
        run(capsys, "gen", "random", "--d", 2, "--n", 6, "-o", tmp_path / "p.txt")
        (tmp_path / "w.txt").write_text("3 1\n")
        code, _, err = run(capsys, "wce", tmp_path / "p.txt", "--weights", tmp_path / "w.txt")
        assert code == 1 and "error" in err

    def test_parse_error(self, tmp_path, capsys):
        (tmp_path / "p.txt").write_text("2 3\n0.1 0.2\n")
        assert run(capsys, "wce", tmp_path / "p.txt")[0] == 1

    def test_bad_pstar(self, tmp_path, capsys):
        run(capsys, "gen", "midpoint", "--n", 3, "-o", tmp_path / "p.txt")
        assert run(capsys, "wce", tmp_path / "p.txt", "--pstar", "0.5")[0] == 1

    def test_budget_failure_exit_code(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr(_cells, "integrate_abs_power", functools.partial(_cells.integrate_abs_power, max_boxes=10))
        run(capsys, "gen", "random", "--d", 2, "--n", 12, "-o", tmp_path / "p.txt")
        code, _, err = run(capsys, "wce", tmp_path / "p.txt", "--pstar", 1.5, "--tol", 1e-12)
        assert code == 2 and "subset" in err


class TestStudy:
    def test_midpoint_constant(self, tmp_path, capsys):
        run(capsys, "study", "midpoint", "--pstar", 3, "--n-max", 20, "--csv", tmp_path / "s.csv")
        rows = read_csv(tmp_path / "s.csv")
        assert len(rows) == 20
        for r in rows:
            assert float(r["n_wce"]) == pytest.approx(1 / (2 * 4 ** (1 / 3)), rel=1e-12)
        assert rows[0]["n_wce_over_log_n"] == "nan"

    def test_balanced_rate(self, tmp_path, capsys):
        run(capsys, "study", "hammersley-balanced", "--csv", tmp_path / "s.csv")
        rows = read_csv(tmp_path / "s.csv")
        m = np.array([float(r["m"]) for r in rows])
        nw = np.array([float(r["n_wce"]) for r in rows])
        bounded = np.array([float(r["n_wce_over_sqrt_log_n"]) for r in rows])
        assert m.tolist() == list(range(4, 13))
        assert bounded.max() / bounded.min() < 1.15
        slope = np.polyfit(np.log(m), np.log(nw), 1)[0]
        assert abs(slope - 0.5) <= 0.15

    def test_classical_rate(self, tmp_path, capsys):
        run(capsys, "study", "hammersley-classical", "--csv", tmp_path / "s.csv")
        rows = read_csv(tmp_path / "s.csv")
        by_log = np.array([float(r["n_wce_over_log_n"]) for r in rows])
        by_sqrt = np.array([float(r["n_wce_over_sqrt_log_n"]) for r in rows])
        assert by_log.max() / by_log.min() < 1.25
        assert np.all(np.diff(by_sqrt) > 0)

    def test_byte_identical_reruns(self, tmp_path, capsys, monkeypatch):
        argv = ["study", "hammersley-balanced", "--m-max", 8, "--pstar", 3, "--tol", 1e-8]
        run(capsys, *argv, "--csv", tmp_path / "a.csv")
        monkeypatch.setenv(cli.WORKERS_ENV, "3")
        run(capsys, *argv, "--csv", tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_bad_worker_count(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.WORKERS_ENV, "many")
        assert run(capsys, "study", "midpoint", "--n-max", 3)[0] == 1


class TestBounds:
    def test_family_rows(self, tmp_path, capsys):
        code, _, _ = run(capsys, "bounds", "--family", "hammersley-balanced", "--uniform-weights", "--csv", tmp_path / "b.csv")
        rows = read_csv(tmp_path / "b.csv")
        assert code == 0 and len(rows) == 7
        for r in rows:
            assert float(r["lower_proxy"]) <= float(r["wce"]) <= float(r["upper"])

    def test_file_input_uses_modified_weights(self, tmp_path, capsys):
        run(capsys, "gen", "random", "--d", 3, "--n", 5, "-o", tmp_path / "p.txt")
        _, out, _ = run(capsys, "bounds", tmp_path / "p.txt", "--pstar", "inf", "--uniform-weights")
        row = next(csv.DictReader(io.StringIO(out)))
        assert row["bound"] == "modified_weights"
        assert float(row["wce"]) <= float(row["upper"])

    def test_nothing_to_do(self, capsys):
        assert run(capsys, "bounds")[0] == 1


class TestVerify:
    @pytest.mark.parametrize("suite", ["identities", "bounds", "optimality"])
    def test_suites_pass(self, suite, capsys):
        code, out, _ = run(capsys, "verify", suite)
        assert code == 0
        assert "FAIL" not in out and "PASS" in out

    def test_failure_exit_code(self, capsys, monkeypatch):
        failing = cli.Check("identities", "always fails", lambda: (False, "forced"))
        monkeypatch.setattr(cli, "verify_checks", lambda: [failing])
        code, out, err = run(capsys, "verify", "identities")
        assert code == 3 and "FAIL" in out and "always fails" in err
