import json

import numpy as np
import pytest

from spikemetric.cli import load_metric, main, save_metric
from spikemetric.graph import MetricMatrix


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    code = main(["synth", "--k", "6", "--n-points", "120", "--n-informative", "2",
                 "--seed", "11", "--out", str(out)])
    assert code == 0
    return out


def test_metric_roundtrip(tmp_path):
    m = MetricMatrix(np.diag([1.0, 0.25, 0.5]))
    path = tmp_path / "M.csv"
    save_metric(m, path)
    assert np.array_equal(load_metric(path).entries, m.entries)


def test_synth_outputs_parse(dataset):
    from spikemetric.ingest import load_features, load_labels

    table = load_features(dataset / "features.csv")
    bins, labels = load_labels(dataset / "labels.csv")
    assert table.n_bins == 120 and table.feature_dim == 6
    assert len(bins) == 120
    truth = json.loads((dataset / "truth.json").read_text())
    assert len(truth["informative_dims"]) == 2


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["synth", "--k", "4", "--n-points", "30", "--n-informative", "2",
              "--seed", "3", "--out", str(out)])
    assert (a / "features.csv").read_bytes() == (b / "features.csv").read_bytes()


def test_train_glr_writes_metric_and_diagnostics(dataset, tmp_path):
    out = tmp_path / "run"
    code = main(["train", "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--n-train", "20", "--objective", "glr", "--out", str(out)])
    assert code == 0
    metric = load_metric(out / "M.csv")
    assert metric.dim == 6
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["objective"] == "glr"
    assert diag["converged"]


def test_train_deterministic_bytes(dataset, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        main(["train", "--features", str(dataset / "features.csv"),
              "--labels", str(dataset / "labels.csv"),
              "--n-train", "16", "--seed", "5", "--out", str(out)])
        outs.append((out / "M.csv").read_bytes())
    assert outs[0] == outs[1]


def test_train_oracle_dimension_cap(tmp_path):
    data = tmp_path / "wide"
    main(["synth", "--k", "30", "--n-points", "60", "--n-informative", "3",
          "--out", str(data)])
    code = main(["train", "--features", str(data / "features.csv"),
                 "--labels", str(data / "labels.csv"),
                 "--n-train", "10", "--objective", "glmnn-oracle",
                 "--out", str(tmp_path / "run")])
    assert code == 2


def test_predict_with_ground_truth(dataset, tmp_path, capsys):
    run = tmp_path / "run"
    main(["train", "--features", str(dataset / "features.csv"),
          "--labels", str(dataset / "labels.csv"),
          "--n-train", "20", "--out", str(run)])
    code = main(["predict", "--metric", str(run / "M.csv"),
                 "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--n-train", "20", "--n-val", "20", "--out", str(run)])
    assert code == 0
    out = capsys.readouterr().out
    assert "accuracy:" in out
    assert (run / "predictions.csv").exists()


def test_predict_partial_labels_no_truth(dataset, tmp_path, capsys):
    from spikemetric.ingest import load_labels

    run = tmp_path / "run"
    main(["train", "--features", str(dataset / "features.csv"),
          "--labels", str(dataset / "labels.csv"),
          "--n-train", "20", "--out", str(run)])
    bins, labels = load_labels(dataset / "labels.csv")
    partial = tmp_path / "partial.csv"
    with open(partial, "w") as fh:
        fh.write("bin,label\n")
        for b, y in zip(bins[:40], labels[:40]):
            fh.write(f"{b},{y}\n")
    code = main(["predict", "--metric", str(run / "M.csv"),
                 "--features", str(dataset / "features.csv"),
                 "--labels", str(partial), "--out", str(run)])
    assert code == 0
    assert "accuracy" not in capsys.readouterr().out
    preds = (run / "predictions.csv").read_text().splitlines()
    assert len(preds) == 1 + 80  # header + one row per unlabeled bin


def test_predict_metric_dimension_mismatch(dataset, tmp_path):
    bad = tmp_path / "bad.csv"
    save_metric(MetricMatrix.identity(3), bad)
    code = main(["predict", "--metric", str(bad),
                 "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--n-train", "10", "--n-val", "10", "--out", str(tmp_path)])
    assert code == 2


def test_report_writes_json_and_figures(tmp_path):
    metric_path = tmp_path / "M.csv"
    save_metric(MetricMatrix(np.diag([1.0, 0.1, 0.6, 0.05])), metric_path)
    out = tmp_path / "rep"
    code = main(["report", "--metric", str(metric_path), "--threshold", "0.5",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert [d["index"] for d in doc["dominant"]] == [0, 2]
    assert (out / "metric_diagonal.png").stat().st_size > 0
    assert (out / "metric_heatmap.png").stat().st_size > 0


def test_report_sift_decoding(tmp_path):
    metric_path = tmp_path / "M.csv"
    save_metric(MetricMatrix(np.diag(np.linspace(1.0, 0.01, 24))), metric_path)
    out = tmp_path / "rep"
    code = main(["report", "--metric", str(metric_path), "--sift-map",
                 "--sift-directions", "12", "--out", str(out)])
    # 24 features cannot be a 64x12 descriptor
    assert code == 2
    save_metric(MetricMatrix(np.diag(np.linspace(1.0, 0.01, 768))), metric_path)
    code = main(["report", "--metric", str(metric_path), "--sift-map",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["dominant"][0]["subregion"] == [0, 0, 0]


def test_bench_trial_rows_and_summary(dataset, tmp_path):
    out = tmp_path / "bench"
    code = main(["bench", "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--objectives", "glr", "--n-train", "10", "--n-val", "10",
                 "--pt", "2", "--pv", "3", "--out", str(out)])
    assert code == 0
    rows = (out / "bench.csv").read_text().splitlines()
    assert rows[0] == "setting,trial_t,trial_v,objective,n_train,accuracy,wall_ms,lp_count"
    trial_rows = [r for r in rows[1:] if ",mean," not in r]
    mean_rows = [r for r in rows[1:] if ",mean," in r]
    assert len(trial_rows) == 6  # P_t x P_v
    assert len(mean_rows) == 1
    assert (out / "bench_accuracy.png").exists()
    assert (out / "bench_runtime.png").exists()


def test_bench_sweep_setting_count(tmp_path):
    out = tmp_path / "bench"
    code = main(["bench", "--synth-k", "5", "--synth-n", "150",
                 "--synth-informative", "2", "--objectives", "glr,knn",
                 "--n-train", "10,20", "--n-val", "10", "--pt", "1", "--pv", "2",
                 "--out", str(out)])
    assert code == 0
    rows = (out / "bench.csv").read_text().splitlines()
    mean_rows = [r for r in rows[1:] if ",mean," in r]
    assert len(mean_rows) == 4  # 2 objectives x 2 sizes


def test_config_file_defaults_and_override(dataset, tmp_path):
    cfg = tmp_path / "train.cfg"
    cfg.write_text("# defaults\nn_train = 14\nmu = 0.2\n")
    out = tmp_path / "run"
    code = main(["train", "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert json.loads((out / "diagnostics.json").read_text())["n_train"] == 14
    # explicit flag beats the config file
    code = main(["train", "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--config", str(cfg), "--n-train", "18", "--out", str(out)])
    assert code == 0
    assert json.loads((out / "diagnostics.json").read_text())["n_train"] == 18


def test_unknown_config_key_rejected(dataset, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frobnicate = 3\n")
    code = main(["train", "--features", str(dataset / "features.csv"),
                 "--labels", str(dataset / "labels.csv"),
                 "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 2


def test_missing_file_exit_code():
    assert main(["report", "--metric", "/nonexistent/M.csv", "--out", "/tmp"]) == 2


def test_bad_subcommand_usage():
    assert main(["no-such-command"]) == 2
