import csv
import json

import numpy as np
import pytest

from momgmm.cli import main


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sample_benchmark(tmp_path):
    assert main(["sample", "--benchmark", "20,5,0.05", "--p", "4000", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "samples.csv").read_text().splitlines()) == 4000
    assert (tmp_path / "truth.csv").exists()
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "sample"


def test_sample_builtin_and_file_model(tmp_path):
    assert main(["sample", "--model", "moments2d", "--p", "50", "--out", str(tmp_path / "a")]) == 0
    truth = tmp_path / "a" / "truth.csv"
    assert main(["sample", "--model", str(truth), "--p", "50", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "samples.csv").read_text() == (tmp_path / "b" / "samples.csv").read_text()


def test_sample_errors(tmp_path, capsys):
    assert main(["sample", "--model", "moments2d", "--p", "0", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("nonsense\n")
    assert main(["sample", "--model", str(bad), "--p", "5", "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_fit_mom_and_em(tmp_path):
    main(["sample", "--model", "debias2d", "--p", "3000", "--seed", "2", "--out", str(tmp_path / "s")])
    data, truth = str(tmp_path / "s" / "samples.csv"), str(tmp_path / "s" / "truth.csv")
    sigma = tmp_path / "sigma.csv"
    sigma.write_text("0.4,0.2\n0.2,0.3\n")
    assert main(["fit", "--data", data, "--m", "3", "--mode", "debias", "--sigma", str(sigma), "--restarts", "3",
                 "--truth", truth, "--out", str(tmp_path / "mom")]) == 0
    rows = read_csv(tmp_path / "mom" / "report.csv")
    assert len(rows) == 3
    assert sum(int(r["selected"]) for r in rows) == 1
    assert all(r["mean_rel_error"] not in ("", "nan") for r in rows)
    assert main(["fit", "--data", data, "--m", "3", "--method", "em", "--restarts", "2", "--truth", truth,
                 "--out", str(tmp_path / "em")]) == 0
    rows = read_csv(tmp_path / "em" / "report.csv")
    assert all(np.isfinite(float(r["loglik"])) and np.isfinite(float(r["mom3_objective"])) for r in rows)
    assert (tmp_path / "em" / "fitted.csv").exists()


def test_fit_errors(tmp_path, capsys):
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--m", "2", "--out", str(tmp_path)]) == 2
    (tmp_path / "x.csv").write_text("1,2\n3,4\n5,6\n")
    assert main(["fit", "--data", str(tmp_path / "x.csv"), "--m", "2", "--mode", "debias", "--out", str(tmp_path)]) == 2
    assert main(["fit", "--data", str(tmp_path / "x.csv"), "--m", "2", "--d", "19", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--m", "2"])
    assert exc.value.code == 2


def test_validate_identities(tmp_path):
    assert main(["validate", "--experiment", "identities", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "identities.csv")
    assert rows and all(r["passed"] == "1" for r in rows)


def test_validate_convergence(tmp_path, capsys):
    assert main(["validate", "--experiment", "moments", "--reps", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "moments.csv")
    assert len(rows) == 2 * 7
    assert "PASS" in capsys.readouterr().out


def _strip_runtime(path):
    rows = read_csv(path)
    for r in rows:
        r.pop("runtime_seconds", None)
    return rows


def test_outputs_are_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("MOMGMM_THREADS", "2")
    for run in ("a", "b"):
        out = tmp_path / run
        main(["sample", "--benchmark", "6,3,0.05", "--p", "500", "--seed", "4", "--out", str(out / "s")])
        main(["fit", "--data", str(out / "s" / "samples.csv"), "--m", "3", "--restarts", "3", "--seed", "4",
              "--truth", str(out / "s" / "truth.csv"), "--out", str(out / "f")])
    for name in ("s/samples.csv", "s/truth.csv", "f/fitted.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert _strip_runtime(tmp_path / "a" / "f" / "report.csv") == _strip_runtime(tmp_path / "b" / "f" / "report.csv")
