import json
from pathlib import Path

import numpy as np
import pytest

from fsilab.cli import build_parser, main
from fsilab.studies import StudySpec, run_study

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_DECAY = {
    "grid": {"L": 16.0, "N": 64}, "nu": 1.0, "mode": "stokes", "solid": {"eps": 1.0},
    "study": {"eps_list": [1.0], "pairs": [["inf", 2]], "window": [0.5, 4.0], "n_window": 4},
}


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_spec_from_dict_reads_study_block():
    s = StudySpec.from_dict(SMALL_DECAY, study="decay", seed=7)
    assert s.eps_list == (1.0,) and s.pairs == ((np.inf, 2.0),)
    assert s.window == (0.5, 4.0) and s.seed == 7 and s.params == {"n_window": 4}
    doc = s.to_dict()
    assert doc["pairs"] == [["inf", 2.0]]
    json.dumps(doc)


@pytest.mark.parametrize("study,kw", [
    ("turbulence", {}),
    ("decay", {"eps_list": [0.5, 1.0]}),
    ("decay", {"window": [2.0, 1.0]}),
    ("decay", {"window": [1.0, 100.0]}),  # sqrt(nu t) beyond L/4
])
def test_spec_validation(study, kw):
    doc = json.loads(json.dumps(SMALL_DECAY))
    doc["study"].update(kw)
    with pytest.raises(ValueError):
        StudySpec.from_dict(doc, study=study)


def test_parser_rejects_bad_seed_and_threads():
    ap = build_parser()
    for argv in (["decay", "--config", "c", "--out", "o", "--seed", "-1"],
                 ["decay", "--config", "c", "--out", "o", "--threads", "0"],
                 ["decay", "--out", "o"]):
        with pytest.raises(SystemExit):
            ap.parse_args(argv)


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert main(["decay", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["decay", "--config", str(bad), "--out", str(tmp_path)]) == 2
    doc = dict(SMALL_DECAY, nu=0.0)
    assert main(["decay", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path)]) == 2
    doc = dict(SMALL_DECAY, grid={"L": 16.0, "N": 16})  # disk spans too few cells
    assert main(["decay", "--config", str(write(tmp_path, doc, "d.json")), "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_cfl_violation_fails(tmp_path):
    doc = json.loads((CONFIGS / "energy.json").read_text())
    doc["grid"] = {"L": 8.0, "N": 64}
    doc["solid"]["eps"] = 0.5
    doc["init"] = {"data": {"kind": "gaussian_psi", "sigma": 0.5, "amp": 5.0}}
    doc["time"] = {"T": 1.0, "dt": 0.5}
    doc["study"] = {}
    out = tmp_path / "out"
    assert main(["energy", "--config", str(write(tmp_path, doc)), "--out", str(out)]) == 1
    man = json.loads((out / "energy_manifest.json").read_text())
    assert man["passed"] is False and "CFL" in man["summary"]["error"]


def test_decay_outputs_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["decay", "--config", str(write(tmp_path, SMALL_DECAY)), "--out", str(out), "--seed", "11"])
    assert "decay:" in capsys.readouterr().out
    man = json.loads((out / "decay_manifest.json").read_text())
    assert code == (0 if man["passed"] else 1)
    assert man["seed"] == 11 and man["csv"] == ["decay.csv"] and man["grid"]["N"] == 64
    assert man["window"] == [0.5, 4.0]
    side = json.loads((out / "decay.json").read_text())
    assert side["manifest"] == "decay_manifest.json" and side["seed"] == 11
    header = (out / "decay.csv").read_text().splitlines()[0]
    assert header == "eps,p,q,channel,fitted_exponent,expected_exponent,K_estimate"


def test_runs_are_deterministic(tmp_path):
    cfg = write(tmp_path, SMALL_DECAY)
    for d in ("a", "b"):
        assert main(["decay", "--config", str(cfg), "--out", str(tmp_path / d), "--seed", "3"]) in (0, 1)
    assert (tmp_path / "a" / "decay.csv").read_bytes() == (tmp_path / "b" / "decay.csv").read_bytes()


def test_threads_do_not_change_results(tmp_path):
    doc = json.loads(json.dumps(SMALL_DECAY))
    doc["study"]["eps_list"] = [1.0, None]
    cfg = write(tmp_path, doc)
    main(["decay", "--config", str(cfg), "--out", str(tmp_path / "one"), "--threads", "1"])
    main(["decay", "--config", str(cfg), "--out", str(tmp_path / "two"), "--threads", "2"])
    assert (tmp_path / "one" / "decay.csv").read_bytes() == (tmp_path / "two" / "decay.csv").read_bytes()


def test_scaling_self_comparison_and_grid_check(tmp_path):
    doc = json.loads((CONFIGS / "scaling.json").read_text())
    doc["grid"] = {"L": 16.0, "N": 64}
    doc["study"]["times"] = [1.0]
    res = run_study(StudySpec.from_dict(doc, study="scaling", out=tmp_path))
    assert res.passed and res.summary["max_mismatch"][1.0] <= 1e-12
    doc["study"]["grids"] = [{"eps": 0.5, "L": 16.0, "N": 64}]
    with pytest.raises(ValueError):
        run_study(StudySpec.from_dict(doc, study="scaling", out=tmp_path))


def test_shrink_needs_three_radii(tmp_path):
    doc = json.loads((CONFIGS / "shrink.json").read_text())
    doc["study"]["eps_list"] = [0.2, 0.1]
    with pytest.raises(ValueError):
        run_study(StudySpec.from_dict(doc, study="shrink", out=tmp_path))


def test_bogovskii_study_small(tmp_path):
    doc = json.loads((CONFIGS / "bogovskii.json").read_text())
    doc["study"]["eta_list"] = [0.2, 0.1, 0.05]
    doc["study"]["n_times"] = 3
    res = run_study(StudySpec.from_dict(doc, study="bogovskii", out=tmp_path))
    assert res.passed
    rows = (tmp_path / "bogovskii.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[0].startswith("eta,")


def test_picard_study_with_given_lambda(tmp_path):
    doc = json.loads((CONFIGS / "picard.json").read_text())
    doc["study"]["lambda0"] = 0.05
    res = run_study(StudySpec.from_dict(doc, study="picard", out=tmp_path))
    assert res.passed and res.summary["lambda0"] == 0.05
    assert not (tmp_path / "constants.json").exists()
