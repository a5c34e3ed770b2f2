import json

import numpy as np
import pandas as pd
import pytest
import yaml

from kplearn.cli import main
from kplearn.io import load_dictionary
from kplearn.runner import (ConfigError, expand_method_grid, resolve_lambda,
                            run_cv, run_fit, validate_config)


def toy_fit_config(**overrides):
    config = {
        "seed": 0,
        "quadrature": {"nodes": 101},
        "dataset": {"kind": "toy", "n_train": 10, "n_test": 4,
                    "toy": {"output_grid": 60, "sample_seed": 3}},
        "method": {"name": "ridge_plugin", "lambda": {"value": 1e-3}},
        "dictionary": {"family": "fourier", "frequencies": 2},
        "kernel": {"variant": "gaussian", "sigma": 20.0},
    }
    config.update(overrides)
    return config


def write_config(tmp_path, config, name="config.yaml"):
    path = tmp_path / name
    with open(path, "w") as fh:
        yaml.safe_dump(config, fh)
    return path


# ---------------------------------------------------------------------------
# validation


def test_unknown_top_level_key():
    with pytest.raises(ConfigError):
        validate_config({"datset": {"kind": "toy"}})


def test_unknown_nested_keys():
    with pytest.raises(ConfigError):
        validate_config({"dataset": {"kind": "toy", "n_train": 5,
                                     "toy": {"gp_sneed": 1}}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full",
                                    "lambda": {"value": 0.1},
                                    "solver": "fast"}})
    with pytest.raises(ConfigError):
        validate_config({"kernel": {"variant": "gaussian", "sigma": 1.0,
                                    "jitter": 0.0}})


def test_method_validation():
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "boosting",
                                    "lambda": {"value": 0.1}}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full"}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ke"}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full",
                                    "lambda": {"value": 0.1},
                                    "loss": {"variant": "square"}}})
    # loss/view belong to the iterative method
    validate_config({"method": {"name": "iterative",
                                "lambda": {"value": 0.1},
                                "loss": {"variant": "logcosh", "gamma": 5},
                                "view": "partial"}})


def test_lambda_validation():
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full",
                                    "lambda": {"value": 0.1,
                                               "values": [0.1]}}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full",
                                    "lambda": {"schedule": "linear",
                                               "c": 1.0}}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full",
                                    "lambda": {"schedule": "prop4"}}})
    with pytest.raises(ConfigError):
        validate_config({"method": {"name": "ridge_full",
                                    "lambda": {"grid": {"start": 1e-6,
                                                        "stop": 1.0}}}})
    validate_config({"method": {"name": "ridge_full",
                                "lambda": {"schedule": "prop4", "c": 0.5}}})


def test_method_and_methods_exclusive():
    method = {"name": "ridge_full", "lambda": {"value": 0.1}}
    with pytest.raises(ConfigError):
        validate_config({"method": method, "methods": [method]})
    with pytest.raises(ConfigError):
        validate_config({"methods": []})


def test_dictionary_validation():
    with pytest.raises(ConfigError):
        validate_config({"dictionary": {"family": "fourier"}})
    with pytest.raises(ConfigError):
        validate_config({"dictionary": {"family": "spline", "d": 3}})
    with pytest.raises(ConfigError):
        validate_config({"dictionary": {"family": "learned"}})
    validate_config({"dictionary": {"family": "learned", "atoms": 10}})


def test_resolve_lambda():
    assert resolve_lambda({"value": 0.25}, 100, 31) == 0.25
    assert resolve_lambda({"schedule": "prop4", "c": 2.0}, 25, 16) == \
        pytest.approx(2.0 * 4.0 / 5.0)
    with pytest.raises(ConfigError):
        resolve_lambda({"grid": {"start": 1e-6, "stop": 1, "num": 5}}, 10, 3)


def test_expand_method_grid():
    config = {}
    lam_grid = {"name": "ridge_plugin",
                "lambda": {"grid": {"start": 1e-4, "stop": 1e-2, "num": 3}}}
    specs = expand_method_grid(config, lam_grid)
    assert len(specs) == 3
    assert [s["lambda"]["value"] for s in specs] == \
        pytest.approx([1e-4, 1e-3, 1e-2])

    prop4 = {"name": "ridge_plugin",
             "lambda": {"schedule": "prop4", "c": 1.0}}
    assert len(expand_method_grid(config, prop4)) == 1

    ke = {"name": "ke", "bandwidth": {"values": [0.1, 1.0]}}
    assert [s["bandwidth"]["value"] for s in expand_method_grid(config, ke)] \
        == [0.1, 1.0]

    both = {"name": "iterative",
            "lambda": {"values": [1e-3, 1e-2]},
            "loss": {"variant": "logcosh", "gamma": [1.0, 25.0]}}
    specs = expand_method_grid(config, both)
    assert len(specs) == 4
    combos = {(s["lambda"]["value"], s["loss"]["gamma"]) for s in specs}
    assert combos == {(1e-3, 1.0), (1e-3, 25.0), (1e-2, 1.0), (1e-2, 25.0)}


# ---------------------------------------------------------------------------
# fit command


def test_cli_fit_end_to_end(tmp_path):
    config = write_config(tmp_path, toy_fit_config())
    out = tmp_path / "run"
    assert main(["fit", "--config", str(config), "--out", str(out)]) == 0
    report = json.loads((out / "fit_report.json").read_text())
    assert report["method"] == "ridge_plugin"
    assert report["n_train"] == 10
    assert report["test_mse"] is not None
    assert report["lambda"] == 1e-3
    assert report["d"] == 5
    assert set(report["timings"]) == {"preprocess", "fit", "predict"}
    assert all(v >= 0 for v in report["timings"].values())
    assert (out / "model.json").exists()
    assert (out / "model.alpha.csv").exists()


def test_cli_rejects_malformed_config(tmp_path, capsys):
    config = write_config(tmp_path, toy_fit_config(extra_section={"a": 1}))
    out = tmp_path / "run"
    assert main(["fit", "--config", str(config), "--out", str(out)]) == 2
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_cli_rejects_missing_method(tmp_path):
    config = toy_fit_config()
    del config["method"]
    path = write_config(tmp_path, config)
    out = tmp_path / "run"
    assert main(["fit", "--config", str(path), "--out", str(out)]) == 2
    assert not out.exists()


def test_cli_rejects_missing_file(tmp_path):
    out = tmp_path / "run"
    code = main(["fit", "--config", str(tmp_path / "nope.yaml"),
                 "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_cli_rejects_broken_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("method: [unclosed\n")
    assert main(["fit", "--config", str(path),
                 "--out", str(tmp_path / "run")]) == 2


def test_fit_iterative_reports_convergence(tmp_path):
    config = toy_fit_config(method={
        "name": "iterative", "lambda": {"value": 1e-2},
        "loss": {"variant": "logcosh", "gamma": 5.0}})
    report = run_fit(config, tmp_path / "run")
    info = report["fit_info"]
    assert info["converged"]
    assert "trace" not in info
    assert report["method"] == "iterative_logcosh"


def test_fit_centered_outputs_round_trip(tmp_path):
    config = toy_fit_config(preprocess={"center_outputs": True})
    report = run_fit(config, tmp_path / "run")
    model_meta = json.loads((tmp_path / "run" / "model.json").read_text())
    assert "mean_function" in model_meta["extras"]
    assert np.isfinite(report["test_mse"])


def test_fit_ke_writes_report_only(tmp_path):
    config = toy_fit_config(method={"name": "ke",
                                    "bandwidth": {"value": 5.0}})
    del config["dictionary"]
    del config["kernel"]
    report = run_fit(config, tmp_path / "run")
    assert report["method"] == "ke"
    assert not (tmp_path / "run" / "model.json").exists()
    assert (tmp_path / "run" / "fit_report.json").exists()


# ---------------------------------------------------------------------------
# cv command


def test_cv_writes_scores_and_refits(tmp_path):
    config = toy_fit_config(
        dataset={"kind": "toy", "n_train": 12, "n_test": 3,
                 "toy": {"output_grid": 60, "sample_seed": 3}},
        method={"name": "ridge_plugin",
                "lambda": {"grid": {"start": 1e-6, "stop": 1e-2, "num": 3}}},
        cv={"folds": 3, "seed": 1},
    )
    out = tmp_path / "cv"
    best, scores, report = run_cv(config, out)
    frame = pd.read_csv(out / "cv_scores.csv")
    assert len(frame) == 3
    assert "lambda" in frame.columns
    assert "value" in best["lambda"]
    meta = json.loads((out / "cv_best.json").read_text())
    assert meta["folds"] == 3
    assert (out / "fit_report.json").exists()
    assert report["lambda"] == best["lambda"]["value"]


def test_cv_deterministic_output(tmp_path):
    config = toy_fit_config(
        method={"name": "ridge_plugin",
                "lambda": {"values": [1e-4, 1e-3]}},
        cv={"folds": 2, "seed": 5},
    )
    run_cv(config, tmp_path / "a")
    run_cv(config, tmp_path / "b")
    a = (tmp_path / "a" / "cv_scores.csv").read_bytes()
    b = (tmp_path / "b" / "cv_scores.csv").read_bytes()
    assert a == b


def test_cv_prop4_single_cell(tmp_path):
    config = toy_fit_config(
        method={"name": "ridge_plugin",
                "lambda": {"schedule": "prop4", "c": 0.01}},
        cv={"folds": 2},
    )
    best, scores, _ = run_cv(config, tmp_path / "cv")
    assert scores.shape == (1,)
    assert best["lambda"] == {"schedule": "prop4", "c": 0.01}


# ---------------------------------------------------------------------------
# robustness command


def robustness_config(variant="local_outliers", levels=(0.0, 0.2), **extra):
    config = toy_fit_config(
        dataset={"kind": "toy", "n_train": 8, "n_test": 4,
                 "toy": {"output_grid": 50, "sample_seed": 3}},
        corruption={"variant": variant, "levels": list(levels),
                    "repeats": 2, "seed": 7},
    )
    del config["method"]
    config["methods"] = [
        {"name": "ridge_plugin", "lambda": {"value": 1e-3}},
        {"name": "ke", "bandwidth": {"value": 5.0}},
    ]
    config.update(extra)
    return config


def test_robustness_table_layout(tmp_path):
    out = tmp_path / "rob"
    summary = run_robustness_helper(robustness_config(), out)
    frame = pd.read_csv(out / "robustness.csv")
    assert len(frame) == 4  # levels x methods
    assert list(frame.columns) == ["corruption", "level", "snr", "method",
                                   "mean_mse", "std_mse", "n_runs", "note"]
    assert set(frame["method"]) == {"ridge_plugin", "ke"}
    assert (frame["n_runs"] == 2).all()
    runs = pd.read_csv(out / "runs.csv")
    assert len(runs) == 8  # levels x methods x repeats
    assert summary[0]["n_runs"] == 2


def run_robustness_helper(config, out, threads=1):
    from kplearn.runner import run_robustness
    return run_robustness(config, out, threads=threads)


def test_robustness_zero_level_identical_across_variants(tmp_path):
    # a zero corruption level leaves the data untouched, so every variant
    # must produce the same scores at equal seeds
    a = run_robustness_helper(robustness_config("local_outliers", (0.0,)),
                              tmp_path / "a")
    b = run_robustness_helper(robustness_config("missing", (0.0,)),
                              tmp_path / "b")
    for row_a, row_b in zip(a, b):
        assert row_a["method"] == row_b["method"]
        assert row_a["mean_mse"] == pytest.approx(row_b["mean_mse"],
                                                  rel=1e-12)


def test_robustness_local_noise_snr_column(tmp_path):
    config = robustness_config("local_noise", (0.5,))
    summary = run_robustness_helper(config, tmp_path / "rob")
    for row in summary:
        assert np.isfinite(row["snr"])
        assert row["snr"] > 0


def test_robustness_threads_match_serial(tmp_path):
    config = robustness_config()
    serial = run_robustness_helper(config, tmp_path / "s", threads=1)
    threaded = run_robustness_helper(config, tmp_path / "t", threads=4)
    for row_s, row_t in zip(serial, threaded):
        assert row_s["mean_mse"] == pytest.approx(row_t["mean_mse"],
                                                  rel=1e-12)
    a = (tmp_path / "s" / "robustness.csv").read_bytes()
    b = (tmp_path / "t" / "robustness.csv").read_bytes()
    assert a == b


# ---------------------------------------------------------------------------
# dictlearn command


def test_cli_dictlearn(tmp_path):
    config = {
        "dataset": {"kind": "toy", "n_train": 12,
                    "toy": {"output_grid": 50, "sample_seed": 3}},
        "dictlearn": {"atoms": 5, "tau": 0.01, "grid": 101, "seed": 2},
    }
    path = write_config(tmp_path, config)
    out = tmp_path / "dl"
    assert main(["dictlearn", "--config", str(path), "--out", str(out)]) == 0
    trace = pd.read_csv(out / "dictlearn_trace.csv")
    assert list(trace.columns) == ["round", "objective"]
    vals = trace["objective"].to_numpy()
    assert all(x >= y - 1e-10 for x, y in zip(vals, vals[1:]))
    dic = load_dictionary(out / "dictionary")
    assert dic.d == 5
    assert dic.family == "learned"


def test_dictlearn_default_atom_count(tmp_path):
    from kplearn.runner import run_dictlearn
    config = {
        "dataset": {"kind": "toy", "n_train": 32,
                    "toy": {"output_grid": 40, "sample_seed": 1}},
        "dictlearn": {"grid": 41, "max_rounds": 2},
    }
    result = run_dictlearn(config, tmp_path / "dl")
    assert result.dictionary.d == 30


# ---------------------------------------------------------------------------
# generate-toy, predict, evaluate


def test_generate_predict_evaluate_pipeline(tmp_path):
    gen_config = write_config(tmp_path, {
        "dataset": {"kind": "toy", "n_train": 10, "n_test": 3,
                    "toy": {"output_grid": 60, "sample_seed": 3}},
    }, name="gen.yaml")
    data_dir = tmp_path / "data"
    assert main(["generate-toy", "--config", str(gen_config),
                 "--out", str(data_dir)]) == 0
    for name in ("train_inputs.csv", "train_outputs.csv",
                 "test_inputs.csv", "test_outputs.csv"):
        assert (data_dir / name).exists()

    fit_config = write_config(tmp_path, toy_fit_config(
        dataset={"kind": "csv",
                 "inputs": str(data_dir / "train_inputs.csv"),
                 "outputs": str(data_dir / "train_outputs.csv"),
                 "test_inputs": str(data_dir / "test_inputs.csv"),
                 "test_outputs": str(data_dir / "test_outputs.csv")}),
        name="fit.yaml")
    fit_dir = tmp_path / "fit"
    assert main(["fit", "--config", str(fit_config),
                 "--out", str(fit_dir)]) == 0
    report = json.loads((fit_dir / "fit_report.json").read_text())
    assert report["n_train"] == 10

    predict_config = write_config(tmp_path, {
        "predict": {"model": str(fit_dir / "model"),
                    "inputs": str(data_dir / "test_inputs.csv"),
                    "grid": 50},
    }, name="predict.yaml")
    pred_dir = tmp_path / "pred"
    assert main(["predict", "--config", str(predict_config),
                 "--out", str(pred_dir)]) == 0
    preds = pd.read_csv(pred_dir / "predictions.csv")
    assert list(preds.columns) == ["sample_id", "theta", "value"]
    assert len(preds) == 3 * 50
    assert preds["value"].notna().all()

    eval_config = write_config(tmp_path, {
        "evaluate": {"model": str(fit_dir / "model"),
                     "inputs": str(data_dir / "test_inputs.csv"),
                     "outputs": str(data_dir / "test_outputs.csv")},
    }, name="eval.yaml")
    eval_dir = tmp_path / "eval"
    assert main(["evaluate", "--config", str(eval_config),
                 "--out", str(eval_dir)]) == 0
    result = json.loads((eval_dir / "evaluation.json").read_text())
    assert result["n"] == 3
    assert result["mse"] >= 0
    # the evaluation must agree with the fit-time test error
    assert result["mse"] == pytest.approx(report["test_mse"], rel=1e-6)
