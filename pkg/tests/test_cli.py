import csv
import json

import numpy as np
import pytest
import yaml

from hexlap import cli


def _config(tmp_path, **sections):
    base = {"schema_version": 1, "box": {"N": 8, "bc": "periodic"}, "grid": {"M": 128},
            "lap": {"N": 16, "lambdas": [0.6], "rho_points": 3, "rho_start": 0.5},
            "time": {"N": 16, "horizon": 10, "dt": 0.5, "decay_horizon": 8},
            "hypotheses": {"R": 12}}
    for k, v in sections.items():
        base[k] = v
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(base))
    return str(path)


def _run(tmp_path, *args, out="out"):
    return cli.main([*args, "--out", str(tmp_path / out)])


def test_spectrum_small_box_passes(tmp_path):
    cfg = _config(tmp_path, box={"N": 16, "bc": "periodic"})
    assert _run(tmp_path, "spectrum", "--config", cfg) == 0
    rows = list(csv.DictReader((tmp_path / "out" / "eigenvalues.csv").open()))
    assert len(rows) == 2 * 16 * 16
    assert (tmp_path / "out" / "spectrum.png").stat().st_size > 0


def test_spectrum_N2_multiset(tmp_path):
    cfg = _config(tmp_path, box={"N": 2, "bc": "periodic"})
    assert _run(tmp_path, "spectrum", "--config", cfg) == 0
    eig = sorted(float(r["eigenvalue"]) for r in csv.DictReader((tmp_path / "out" / "eigenvalues.csv").open()))
    assert np.allclose(eig, [-1] + [-1 / 3] * 3 + [1 / 3] * 3 + [1], atol=1e-12)


def test_perturbed_spectrum_flags_column(tmp_path):
    prof = {"eta": {"kind": "PowerLaw", "a": 0.3, "delta": 1.6}, "V": {"kind": "PowerLaw", "a": 3.0, "delta": 1.6}}
    cfg = _config(tmp_path, profile=prof)
    _run(tmp_path, "spectrum", "--config", cfg)
    rows = list(csv.DictReader((tmp_path / "out" / "eigenvalues.csv").open()))
    flagged = [float(r["eigenvalue"]) for r in rows if r["outside_band"] in ("1", "True")]
    assert flagged and all(abs(e) > 1 for e in flagged)


def test_tables_pristine_and_mutated(tmp_path):
    assert _run(tmp_path, "tables") == 0
    data = json.loads((tmp_path / "out" / "tables.json").read_text())
    assert data["golden_diffs"] == [] and data["schema_version"] == 1
    assert (tmp_path / "out" / "PAPER_ERRATA").exists()
    assert _run(tmp_path, "tables", "--mutate", "1,0,2,0,1", out="bad") == 1


def test_rerun_is_byte_identical(tmp_path):
    cfg = _config(tmp_path)
    for out in ("a", "b"):
        assert _run(tmp_path, "hypotheses", "--config", cfg, out=out) == 0
        assert _run(tmp_path, "tables", out=out) == 0
    for name in ("hypotheses.json", "tables.csv", "tables.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_output_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
    assert cli.main(["tables"]) == 0
    assert (tmp_path / "env" / "tables.json").exists()
    assert _run(tmp_path, "tables", out="flag") == 0
    assert (tmp_path / "flag" / "tables.json").exists()


@pytest.mark.parametrize("section,value,field", [
    ("box", {"N": "many"}, "box.N"),
    ("box", {"N": 8, "bc": "twisted"}, "box.bc"),
    ("lap", {"s": 0.4}, "lap.s"),
    ("intervals", [[0.9, 0.5]], "intervals[0]"),
    ("profile", {"eta": {"kind": "PowerLaw", "a": -2, "delta": 1}}, "profile.eta.a"),
])
def test_config_errors_exit_2(tmp_path, section, value, field):
    cfg = _config(tmp_path, **{section: value})
    assert _run(tmp_path, "spectrum", "--config", cfg) == 2
    err = json.loads((tmp_path / "out" / "error.json").read_text())
    assert err["error"] == "config" and err["field"] == field


def test_missing_config_file(tmp_path):
    assert _run(tmp_path, "tables", "--config", str(tmp_path / "nope.yaml")) == 2


def test_solver_error_exit_3(tmp_path):
    cfg = _config(tmp_path, intervals=[[0.995, 1.0]], box={"N": 8, "bc": "periodic"})
    assert _run(tmp_path, "mourre", "--config", cfg) == 3
    assert json.loads((tmp_path / "out" / "error.json").read_text())["error"] == "solver"


def test_lap_and_evolve_small(tmp_path):
    cfg = _config(tmp_path)
    assert _run(tmp_path, "lap", "--config", cfg) in (0, 1)
    head = (tmp_path / "out" / "resolvent.csv").read_text().splitlines()[0]
    assert head == "lambda,s,rho,norm"
    assert _run(tmp_path, "evolve", "--config", cfg) in (0, 1)
    assert json.loads((tmp_path / "out" / "evolve.json").read_text())["schema_version"] == 1


def test_verify_all_subset(tmp_path):
    assert _run(tmp_path, "verify-all", "--only", "2", "9") == 0
    data = json.loads((tmp_path / "out" / "acceptance.json").read_text())
    assert [c["number"] for c in data["criteria"]] == [2, 9]
