import json

import numpy as np
import pytest

from probrom import io
from probrom.cli import EXIT_ACCEPTANCE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from probrom.synth import SyntheticSpec, generate


def write_spec(path, **kw):
    doc = SyntheticSpec(**{"d": 30, "m_gen": 3, "sigma2_eps": 0.01, "n": 400, "seed": 1, **kw}).to_dict()
    path.write_text(json.dumps(doc))
    return path


def test_generate_and_replay(tmp_path):
    spec = write_spec(tmp_path / "spec.json")
    out = tmp_path / "train.csv"
    assert main(["generate", str(spec), str(out)]) == EXIT_OK
    first = out.read_bytes()
    manifest = tmp_path / "train.manifest.json"
    doc = json.loads(manifest.read_text())
    assert doc["command"] == "generate" and doc["seed"] == 1
    out.unlink()
    assert main(["replay", str(manifest)]) == EXIT_OK
    assert out.read_bytes() == first
    assert io.sha256_file(out) == doc["outputs"][str(out)]


def test_generate_single_row(tmp_path):
    spec = write_spec(tmp_path / "spec.json", n=1)
    assert main(["generate", str(spec), str(tmp_path / "one.csv")]) == EXIT_OK
    assert len((tmp_path / "one.csv").read_text().splitlines()) == 2


def test_generate_malformed_spec(tmp_path):
    (tmp_path / "bad.json").write_text('{"d": 10, "m_gen": 50}')
    assert main(["generate", str(tmp_path / "bad.json"), str(tmp_path / "x.csv")]) == EXIT_USAGE


def test_generate_missing_spec(tmp_path):
    assert main(["generate", str(tmp_path / "nope.json"), str(tmp_path / "x.csv")]) == EXIT_IO


def test_select_and_fit(tmp_path, capsys):
    spec = write_spec(tmp_path / "spec.json")
    main(["generate", str(spec), str(tmp_path / "train.csv")])
    assert main(["select", str(tmp_path / "train.csv"), str(tmp_path / "model.json")]) == EXIT_OK
    assert "selected m=3" in capsys.readouterr().out
    for suffix in (".bic.csv", ".spectrum.csv", ".manifest.json"):
        assert (tmp_path / f"model{suffix}").exists()
    model = io.load_model(tmp_path / "model.json")
    assert model.m == 3 and model.provenance["seed"] == 1
    assert main(["fit", str(tmp_path / "train.csv"), str(tmp_path / "m2.json"), "--m", "2"]) == EXIT_OK
    assert io.load_model(tmp_path / "m2.json").m == 2


def test_select_rank_one_noise_free(tmp_path):
    spec = write_spec(tmp_path / "spec.json", m_gen=1, sigma2_eps=0.0)
    main(["generate", str(spec), str(tmp_path / "train.csv")])
    assert main(["select", str(tmp_path / "train.csv"), str(tmp_path / "model.json"), "--m-max", "10"]) == EXIT_OK
    assert io.load_model(tmp_path / "model.json").m == 1


def test_project(tmp_path, capsys):
    main(["generate", str(write_spec(tmp_path / "spec.json")), str(tmp_path / "train.csv")])
    main(["select", str(tmp_path / "train.csv"), str(tmp_path / "model.json")])
    trial = generate(SyntheticSpec(d=30, m_gen=3, sigma2_eps=0.2, n=50, seed=2))
    io.save_ensemble(trial, tmp_path / "trial.csv")
    capsys.readouterr()
    assert main(["project", str(tmp_path / "model.json"), str(tmp_path / "trial.csv"), str(tmp_path / "p.csv")]) == 0
    cols = io.read_csv_columns(tmp_path / "p.csv")
    assert cols["method"].count("gaussian_prior") == 50 and cols["method"].count("l2") == 50
    assert cols["index"][:2] == ["0", "1"] and cols["index"][50] == "0"
    summary = json.loads((tmp_path / "p.summary.json").read_text())
    g, l2 = summary["methods"]["gaussian_prior"], summary["methods"]["l2"]
    assert g["mean_error"] < l2["mean_error"]
    assert g["mean_sigma2_eps_T"] > l2["mean_sigma2_eps_T"]


def test_project_mean_gives_zero_latents(tmp_path):
    main(["generate", str(write_spec(tmp_path / "spec.json")), str(tmp_path / "train.csv")])
    main(["select", str(tmp_path / "train.csv"), str(tmp_path / "model.json")])
    model = io.load_model(tmp_path / "model.json")
    np.savetxt(tmp_path / "mu.csv", model.mu[None, :], delimiter=",", fmt="%.17g",
               header=",".join(f"y_{i}" for i in range(30)), comments="")
    assert main(["project", str(tmp_path / "model.json"), str(tmp_path / "mu.csv"), str(tmp_path / "p.csv")]) == 0
    cols = io.read_csv_columns(tmp_path / "p.csv")
    for j in range(model.m):
        assert all(abs(float(v)) < 1e-12 for v in cols[f"w_{j}"])
    assert cols["error_vs_truth"] == ["", ""]


def test_project_dimension_mismatch(tmp_path):
    main(["generate", str(write_spec(tmp_path / "spec.json")), str(tmp_path / "train.csv")])
    main(["select", str(tmp_path / "train.csv"), str(tmp_path / "model.json")])
    io.save_ensemble(generate(SyntheticSpec(d=20, m_gen=3, n=5)), tmp_path / "trial.csv")
    rc = main(["project", str(tmp_path / "model.json"), str(tmp_path / "trial.csv"), str(tmp_path / "p.csv")])
    assert rc == EXIT_USAGE


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["project"])
    assert exc.value.code == EXIT_USAGE


@pytest.mark.slow
def test_reproduce_small_is_deterministic(tmp_path):
    from probrom.bench import load_criteria

    crit = load_criteria()
    crit.update(n_seeds=2, min_passing_seeds=2, n_trials_error=200, n_trials_noise=200)
    (tmp_path / "crit.json").write_text(json.dumps(crit))
    codes = []
    for run in ("r1", "r2"):
        codes.append(main(["reproduce", str(tmp_path / run), "--criteria", str(tmp_path / "crit.json")]))
    assert codes[0] == codes[1] and codes[0] in (EXIT_OK, EXIT_ACCEPTANCE)
    names = ["table1.csv", "table2.csv", "fig3_spectrum.csv", "fig5_bic.csv", "fig6_reconstructions.csv",
             "fig7_errors.csv", "fig3_spectrum.svg"]
    for name in names:
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    d1 = json.loads((tmp_path / "r1" / "summary.json").read_text())["digests"]
    d2 = json.loads((tmp_path / "r2" / "summary.json").read_text())["digests"]
    assert d1 == d2
