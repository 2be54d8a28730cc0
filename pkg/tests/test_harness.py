"""Orchestration tests: episode scoring, sweeps, tuning, plots, and the CLI.

Sweep determinism is checked end to end (same config, byte-identical CSV
apart from wall time) and against a by-hand rerun of one cell's episodes.
CLI tests go through a real subprocess so exit codes and file outputs are
the ones a shell user sees.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from spectral_icl.harness import (
    METHODS,
    STREAM_TEST,
    STREAM_VALIDATION,
    SweepConfig,
    emit_plot,
    episode_seed,
    read_sweep_csv,
    run_episode,
    run_sweep,
    sweep_config_to_dict,
    tune_scalars,
)
from spectral_icl.manifolds import (
    Episode,
    ManifoldSpec,
    UNLABELED,
    make_episode,
)

SPHERE = ManifoldSpec(family="sphere")


def _blob_episode(n_half=10, reveal=3, seed=0):
    rng = np.random.default_rng(seed)
    pts = np.vstack((rng.normal(size=(n_half, 3)) * 0.1,
                     rng.normal(size=(n_half, 3)) * 0.1 + 5.0))
    truth = np.array([0] * n_half + [1] * n_half)
    labels = np.full(2 * n_half, UNLABELED)
    labels[:reveal] = 0
    labels[n_half:n_half + reveal] = 1
    return Episode(spec=None, seed=seed, n=2 * n_half, m=2 * reveal, C=2,
                   points=pts, labels=labels, true_labels=truth,
                   center_index=-1)


def test_run_episode_deterministic():
    ep = make_episode(SPHERE, 40, 0.2, 2, seed=7)
    a = run_episode(ep, "eig-icl")
    b = run_episode(ep, "eig-icl")
    assert a["accuracy"] == b["accuracy"]
    assert a["loss"] == b["loss"]
    assert a["n_query"] == ep.n - ep.m


def test_all_methods_run_and_score():
    ep = make_episode(SPHERE, 30, 0.3, 2, seed=1)
    for method in METHODS:
        r = run_episode(ep, method, {"rep_T": 10, "L": 5})
        assert 0.0 <= r["accuracy"] <= 1.0
        assert np.isfinite(r["loss"])
    with pytest.raises(ValueError):
        run_episode(ep, "nearest-neighbor")


def test_eig_lr_solves_separable_blobs():
    r = run_episode(_blob_episode(), "eig-lr")
    assert r["accuracy"] == 1.0


def test_e2e_head_with_zero_step_is_uniform():
    ep = _blob_episode()
    r = run_episode(ep, "e2e-icl", {"alpha": 0.0, "rep_T": 5, "L": 2})
    query = (ep.labels == UNLABELED)
    assert r["accuracy"] == pytest.approx(np.mean(ep.true_labels[query] == 0))
    assert r["loss"] == pytest.approx(np.log(2.0), abs=1e-12)


def test_episode_seed_streams():
    base = episode_seed(3, 0, 0, 0, STREAM_TEST)
    assert episode_seed(3, 0, 0, 0, STREAM_TEST) == base
    assert episode_seed(3, 0, 0, 1, STREAM_TEST) != base
    assert episode_seed(3, 0, 1, 0, STREAM_TEST) != base
    assert episode_seed(3, 1, 0, 0, STREAM_TEST) != base
    assert episode_seed(4, 0, 0, 0, STREAM_TEST) != base
    assert episode_seed(3, 0, 0, 0, STREAM_VALIDATION) != base


def _tiny_config(**kw):
    defaults = dict(
        manifolds=[("sphere", SPHERE)],
        methods=["eig-lr", "eig-icl"],
        label_ratios=[0.2, 0.4],
        n=30,
        episodes_per_cell=2,
        base_seed=11,
        hyper={"rep_T": 5, "L": 5},
    )
    defaults.update(kw)
    return SweepConfig(**defaults)


def test_sweep_rows_and_csv_round_trip(tmp_path):
    cfg = _tiny_config()
    path = str(tmp_path / "sweep.csv")
    result = run_sweep(cfg, out_csv=path)
    assert len(result.rows) == 4
    header = open(path).readline().rstrip("\n")
    assert header == ("manifold,method,label_ratio,episodes,"
                      "mean_accuracy,std_accuracy,mean_loss,wall_time_s,error")
    back = read_sweep_csv(path)
    for row, orig in zip(back, result.rows):
        assert row["manifold"] == orig["manifold"]
        assert row["method"] == orig["method"]
        assert row["label_ratio"] == orig["label_ratio"]
        assert row["mean_accuracy"] == orig["mean_accuracy"]  # repr round trip
        assert row["std_accuracy"] == orig["std_accuracy"]
        assert row["mean_loss"] == orig["mean_loss"]
        assert row["error"] == ""


def test_sweep_repeats_identically(tmp_path):
    cfg = _tiny_config()
    rows_a = run_sweep(cfg).rows
    rows_b = run_sweep(cfg).rows
    for a, b in zip(rows_a, rows_b):
        for key in ("manifold", "method", "label_ratio", "episodes",
                    "mean_accuracy", "std_accuracy", "mean_loss", "error"):
            assert a[key] == b[key]


def test_sweep_threaded_matches_serial():
    cfg = _tiny_config()
    serial = run_sweep(cfg).rows
    threaded = run_sweep(cfg, workers=4).rows
    for a, b in zip(serial, threaded):
        assert a["mean_accuracy"] == b["mean_accuracy"]
        assert a["method"] == b["method"] and a["label_ratio"] == b["label_ratio"]


def test_sweep_cell_matches_manual_episodes():
    cfg = _tiny_config(methods=["eig-lr"], label_ratios=[0.4])
    row = run_sweep(cfg).rows[0]
    hp = cfg.resolve_hyper("eig-lr")
    accs = []
    for ei in range(cfg.episodes_per_cell):
        seed = episode_seed(cfg.base_seed, 0, 0, ei, STREAM_TEST)
        ep = make_episode(SPHERE, cfg.n, 0.4, 2, seed)
        accs.append(run_episode(ep, "eig-lr", hp)["accuracy"])
    assert row["mean_accuracy"] == float(np.mean(accs))


def test_sweep_error_rows_do_not_abort():
    cfg = _tiny_config(methods=["eig-lr", "eig-icl"],
                       method_hyper={"eig-lr": {"knn_k": 500}})
    rows = run_sweep(cfg).rows
    lr_rows = [r for r in rows if r["method"] == "eig-lr"]
    icl_rows = [r for r in rows if r["method"] == "eig-icl"]
    assert all(r["error"].startswith("ValueError") for r in lr_rows)
    assert all(r["mean_accuracy"] is None for r in lr_rows)
    assert all(r["error"] == "" and r["mean_accuracy"] is not None
               for r in icl_rows)


def test_unknown_method_rejected_up_front():
    with pytest.raises(ValueError):
        run_sweep(_tiny_config(methods=["eig-lr", "mystery"]))


def test_emit_plot_reproducible(tmp_path):
    rows = run_sweep(_tiny_config()).rows
    p1, p2 = str(tmp_path / "a.svg"), str(tmp_path / "b.svg")
    emit_plot(rows, p1)
    emit_plot(rows, p2)
    b1, b2 = open(p1, "rb").read(), open(p2, "rb").read()
    assert b1 == b2
    text = b1.decode()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert "sphere/eig-lr" in text or ("sphere" in text and "eig-lr" in text)
    # legend series follow row order
    assert text.index("eig-lr") < text.index("eig-icl")


def test_emit_plot_single_point_and_error_rows(tmp_path):
    rows = run_sweep(_tiny_config(label_ratios=[0.3],
                                  methods=["eig-icl"])).rows
    path = str(tmp_path / "one.svg")
    emit_plot(rows, path)
    assert open(path).read().startswith("<svg")
    bad = [dict(r, error="ValueError: boom") for r in rows]
    with pytest.raises(ValueError):
        emit_plot(bad, str(tmp_path / "none.svg"))


def test_tune_scalars_grid_and_ties():
    cfg = _tiny_config(methods=["eig-icl"], label_ratios=[0.3])
    best, table = tune_scalars(cfg, {"alpha": [1.0]}, validation_episodes=2)
    assert best == {"alpha": 1.0} and len(table) == 1

    best, table = tune_scalars(cfg, {"alpha": [0.0], "L": [10, 3]},
                               validation_episodes=2)
    # zero step size makes depth irrelevant; the tie prefers the smaller L
    assert best == {"alpha": 0.0, "L": 3}
    assert len(table) == 2
    assert table[0]["mean_accuracy"] == table[1]["mean_accuracy"]

    with pytest.raises(ValueError):
        tune_scalars(cfg, {"alpha": [1.0]}, validation_episodes=0)


def test_tune_scalars_prefers_better_accuracy():
    cfg = _tiny_config(methods=["eig-icl"], label_ratios=[0.4], n=40)
    best, table = tune_scalars(cfg, {"alpha": [0.0, 1.0]},
                               validation_episodes=3)
    by_alpha = {row["alpha"]: row["mean_accuracy"] for row in table}
    assert by_alpha[1.0] > by_alpha[0.0]
    assert best == {"alpha": 1.0}


# ---------------------------------------------------------------------------
# CLI through a real subprocess


def _cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "spectral_icl", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_cli_generate_run_plot_pipeline(tmp_path):
    gen_cfg = tmp_path / "episode.json"
    gen_cfg.write_text(json.dumps({
        "manifold": {"family": "sphere"}, "n": 30,
        "label_ratio": 0.3, "seed": 5,
    }))
    ep_path = tmp_path / "ep.json"
    r = _cli("generate", "--config", str(gen_cfg), "--out", str(ep_path))
    assert r.returncode == 0, r.stderr
    assert ep_path.exists()

    out_row = tmp_path / "row.json"
    r = _cli("run", "--episode", str(ep_path), "--method", "eig-icl",
             "--out", str(out_row))
    assert r.returncode == 0, r.stderr
    assert "accuracy=" in r.stdout
    row = json.loads(out_row.read_text())
    assert 0.0 <= row["accuracy"] <= 1.0

    sweep_cfg = tmp_path / "sweep.json"
    cfg = _tiny_config(methods=["eig-lr"], label_ratios=[0.2, 0.4])
    sweep_cfg.write_text(json.dumps(sweep_config_to_dict(cfg)))
    csv_path = tmp_path / "sweep.csv"
    r = _cli("sweep", "--config", str(sweep_cfg), "--out", str(csv_path))
    assert r.returncode == 0, r.stderr
    assert csv_path.exists()

    svg_path = tmp_path / "plot.svg"
    r = _cli("plot", "--results", str(csv_path), "--out", str(svg_path))
    assert r.returncode == 0, r.stderr
    assert svg_path.read_text().startswith("<svg")


def test_cli_trace_applies_to_e2e_only(tmp_path):
    gen_cfg = tmp_path / "episode.json"
    gen_cfg.write_text(json.dumps({
        "manifold": {"family": "sphere"}, "n": 20,
        "label_ratio": 0.3, "seed": 2,
    }))
    ep_path = tmp_path / "ep.json"
    assert _cli("generate", "--config", str(gen_cfg),
                "--out", str(ep_path)).returncode == 0
    r = _cli("run", "--episode", str(ep_path), "--method", "eig-icl",
             "--trace-eigenmap", str(tmp_path / "trace.csv"))
    assert r.returncode == 1

    trace_path = tmp_path / "trace.csv"
    hp = tmp_path / "hp.json"
    hp.write_text(json.dumps({"rep_T": 5, "L": 3}))
    r = _cli("run", "--episode", str(ep_path), "--method", "e2e-icl",
             "--config", str(hp), "--trace-eigenmap", str(trace_path))
    assert r.returncode == 0, r.stderr
    lines = trace_path.read_text().strip().splitlines()
    assert lines[0] == "sweep,largest_principal_angle"
    assert len(lines) >= 2


def test_cli_validate_reports_batteries(tmp_path):
    report_path = tmp_path / "report.json"
    r = _cli("validate", "--out", str(report_path))
    assert r.returncode == 0, r.stderr
    lines = [ln for ln in r.stdout.splitlines() if ln.strip()]
    assert len(lines) >= 4
    assert all(ln.startswith("PASS") for ln in lines)
    report = json.loads(report_path.read_text())
    assert all(item["passed"] for item in report)


def test_cli_usage_and_runtime_errors(tmp_path):
    assert _cli("run", "--episode", "x.json").returncode == 1  # missing --method
    assert _cli("frobnicate").returncode == 1
    assert _cli().returncode == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    r = _cli("generate", "--config", str(bad), "--out", str(tmp_path / "e.json"))
    assert r.returncode == 2
    assert "error" in r.stderr.lower()
    gen_cfg = tmp_path / "ok.json"
    gen_cfg.write_text(json.dumps({
        "manifold": {"family": "sphere"}, "n": 20,
        "label_ratio": 0.3, "seed": 2,
    }))
    ep_path = tmp_path / "ep.json"
    assert _cli("generate", "--config", str(gen_cfg),
                "--out", str(ep_path)).returncode == 0
    r = _cli("run", "--episode", str(ep_path), "--method", "mystery")
    assert r.returncode == 2
