"""Benchmark orchestration: episodes -> methods -> sweep tables -> plots.

A sweep crosses manifolds x methods x label ratios, runs a fixed number of
fresh episodes per cell, and writes one CSV row per cell. Episode seeds are
derived from (base seed, manifold index, ratio index, episode index), never
from the method, so different methods see identical episodes and can be
compared pairwise; growing a sweep never reshuffles the episodes a smaller
sweep already used. Every output byte except wall time is a pure function
of the config.

Methods
-------
``e2e-icl``      constructed two-stage features, then the in-context head
``eig-icl``      reference spectral features, then the in-context head
``orig-icl``     raw ambient coordinates into the in-context head
``eig-lr``       logistic regression on the reference spectral features
``orig-rbf-lr``  RBF-kernel logistic regression on raw coordinates
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product as iter_product
from typing import Optional

import numpy as np

from .baselines import fit_kernel_logreg, fit_logreg, predict_logreg
from .icl_head import IclConfig, default_class_embeddings, forward, predict
from .manifolds import (
    UNLABELED,
    Episode,
    ManifoldSpec,
    make_episode,
    spec_from_dict,
    spec_to_dict,
)
from .rep_transformer import (
    build_eigenmap_program,
    estimate_lambda_max,
    tf_eigenmap,
    tf_laplacian,
    tf_rep,
)
from .spectral import (
    affinity,
    bottom_eigenvectors,
    knn_sparsify,
    laplacians,
    principal_angles,
)

METHODS = ("e2e-icl", "eig-icl", "orig-icl", "eig-lr", "orig-rbf-lr")

# Episode-seed sub-streams: benchmark episodes vs held-out tuning episodes.
STREAM_TEST = 0
STREAM_VALIDATION = 1

DEFAULT_HP = {
    "alpha": 1.0,          # gradient step size of the in-context head
    "L": 20,               # head depth
    "kernel": "rbf",       # head kernel over features
    "gamma_f": 1.0,        # head RBF bandwidth
    "beta": 2.0,           # class-embedding scale
    "lambda_reg": 1e-2,    # ridge weight of both regressions
    "gamma_b": 10.0,       # kernel-regression RBF bandwidth
    "graph_gamma": 10.0,   # benchmark affinity bandwidth
    "knn_k": 6,            # benchmark graph sparsity
    "k_feat": 4,           # spectral feature count
    "rep_gamma": 10.0,     # constructed-stage affinity bandwidth
    "rep_T": 40,           # eigenmap sweep budget
}

CSV_COLUMNS = (
    "manifold", "method", "label_ratio", "episodes",
    "mean_accuracy", "std_accuracy", "mean_loss", "wall_time_s", "error",
)


@dataclass
class SweepConfig:
    manifolds: list            # [(name, ManifoldSpec), ...]
    methods: list
    label_ratios: list
    n: int = 100
    episodes_per_cell: int = 200
    base_seed: int = 0
    hyper: dict = field(default_factory=dict)
    method_hyper: dict = field(default_factory=dict)

    def resolve_hyper(self, method: str) -> dict:
        hp = dict(DEFAULT_HP)
        hp.update(self.hyper)
        hp.update(self.method_hyper.get(method, {}))
        return hp


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list


def episode_seed(base_seed: int, manifold_index: int, ratio_index: int,
                 episode_index: int, stream: int = STREAM_TEST) -> int:
    """Indexed, method-independent seed for one episode."""
    ss = np.random.SeedSequence(
        (int(base_seed), int(stream), int(manifold_index),
         int(ratio_index), int(episode_index))
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def spectral_features(points: np.ndarray, hp: dict) -> np.ndarray:
    """Reference pipeline: RBF graph, kNN union, bottom eigenvectors of L_sym."""
    aff = affinity(points, hp["graph_gamma"], "zero")
    aff = knn_sparsify(aff, int(hp["knn_k"]))
    lap = laplacians(aff)
    vecs, _ = bottom_eigenvectors(lap.L_sym, int(hp["k_feat"]))
    return vecs


def _head_config(hp: dict) -> IclConfig:
    return IclConfig(alpha=float(hp["alpha"]), L=int(hp["L"]),
                     kernel=hp["kernel"], gamma_f=float(hp["gamma_f"]))


def _traced_rep(points: np.ndarray, hp: dict, sink: list) -> np.ndarray:
    """tf_rep with a per-sweep principal-angle trace against the reference
    eigenspace of the constructed Laplacian."""
    psi = tf_laplacian(points.T, float(hp["rep_gamma"]))
    G = psi.T @ psi
    k = int(hp["k_feat"])
    target, _ = bottom_eigenvectors(G, k)
    mu = 1.05 * estimate_lambda_max(G)
    program = build_eigenmap_program(psi.shape[0], k, mu, int(hp["rep_T"]))

    def hook(sweep: int, phi: np.ndarray) -> None:
        sink.append((sweep, float(principal_angles(phi.T, target).max())))

    return tf_eigenmap(psi, program, trace_hook=hook)


def run_episode(ep: Episode, method: str, hp: Optional[dict] = None,
                eigenmap_trace: Optional[list] = None) -> dict:
    """Score one method on one episode.

    Accuracy and loss are over query tokens: unlabeled entries whose truth
    is known (imported clouds may lack truth for some rows). When
    ``eigenmap_trace`` is a list and the method is ``e2e-icl``, it is
    filled with ``(sweep, largest principal angle vs the reference
    eigenspace)`` pairs, one per eigenmap sweep.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    merged = dict(DEFAULT_HP)
    if hp:
        merged.update(hp)
    hp = merged
    t0 = time.perf_counter()
    labeled = ep.labels != UNLABELED
    query = ~labeled & (ep.true_labels != UNLABELED)
    if not query.any():
        raise ValueError("episode has no scorable query tokens")
    if method in ("e2e-icl", "eig-icl", "orig-icl"):
        if method == "e2e-icl":
            if eigenmap_trace is None:
                phi = tf_rep(ep.points.T, gamma=float(hp["rep_gamma"]),
                             k=int(hp["k_feat"]), T=int(hp["rep_T"]))
            else:
                phi = _traced_rep(ep.points, hp, eigenmap_trace)
        elif method == "eig-icl":
            phi = spectral_features(ep.points, hp).T
        else:
            phi = ep.points.T
        W = default_class_embeddings(ep.C, beta=float(hp["beta"]))
        _, probs = forward(phi, ep.labels, W, _head_config(hp))
    elif method == "eig-lr":
        feats = spectral_features(ep.points, hp)
        model = fit_logreg(feats[labeled], ep.labels[labeled],
                           lambda_reg=float(hp["lambda_reg"]))
        probs = predict_logreg(model, feats)
    else:  # orig-rbf-lr
        model = fit_kernel_logreg(ep.points[labeled], ep.labels[labeled],
                                  gamma=float(hp["gamma_b"]),
                                  lambda_reg=float(hp["lambda_reg"]))
        probs = predict_logreg(model, ep.points)
    pred = predict(probs)
    truth = ep.true_labels
    acc = float(np.mean(pred[query] == truth[query]))
    p_true = np.maximum(probs[query, truth[query]], 1e-300)
    loss = float(-np.mean(np.log(p_true)))
    return {
        "accuracy": acc,
        "loss": loss,
        "n_query": int(query.sum()),
        "seconds": time.perf_counter() - t0,
    }


def _run_cell(cfg: SweepConfig, mi: int, name: str, spec: ManifoldSpec,
              method: str, ri: int, ratio: float) -> dict:
    t0 = time.perf_counter()
    row = {
        "manifold": name, "method": method, "label_ratio": ratio,
        "episodes": cfg.episodes_per_cell, "mean_accuracy": None,
        "std_accuracy": None, "mean_loss": None, "wall_time_s": None,
        "error": "",
    }
    accs, losses = [], []
    try:
        hp = cfg.resolve_hyper(method)
        for ei in range(cfg.episodes_per_cell):
            seed = episode_seed(cfg.base_seed, mi, ri, ei, STREAM_TEST)
            ep = make_episode(spec, cfg.n, ratio, 2, seed)
            r = run_episode(ep, method, hp)
            accs.append(r["accuracy"])
            losses.append(r["loss"])
        row["mean_accuracy"] = float(np.mean(accs))
        row["std_accuracy"] = float(np.std(accs))
        row["mean_loss"] = float(np.mean(losses))
    except Exception as exc:  # the row carries the failure, the sweep goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time_s"] = time.perf_counter() - t0
    return row


def run_sweep(cfg: SweepConfig, out_csv: Optional[str] = None,
              workers: int = 1) -> SweepResult:
    """Run every cell; optionally write the CSV atomically.

    Cells are independent, so they may run on a thread pool; rows are
    always assembled in config order, making the output independent of
    scheduling.
    """
    for method in cfg.methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
    cells = []
    for mi, (name, spec) in enumerate(cfg.manifolds):
        for method in cfg.methods:
            for ri, ratio in enumerate(cfg.label_ratios):
                cells.append((mi, name, spec, method, ri, ratio))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _run_cell(cfg, *c), cells))
    else:
        rows = [_run_cell(cfg, *c) for c in cells]
    result = SweepResult(cfg, rows)
    if out_csv is not None:
        write_sweep_csv(result, out_csv)
    return result


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_sweep_csv(result: SweepResult, path: str) -> None:
    """Atomic write: full temp file in the target directory, then rename."""
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_csv_value(row[c]) for c in CSV_COLUMNS))
    data = "\n".join(lines) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_sweep_csv(path: str) -> list:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError("unrecognized sweep CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",", len(CSV_COLUMNS) - 1)
        row = dict(zip(CSV_COLUMNS, parts))
        row["label_ratio"] = float(row["label_ratio"])
        row["episodes"] = int(row["episodes"])
        for key in ("mean_accuracy", "std_accuracy", "mean_loss", "wall_time_s"):
            row[key] = float(row[key]) if row[key] != "" else None
        rows.append(row)
    return rows


def tune_scalars(cfg: SweepConfig, grid: dict, validation_episodes: int,
                 manifold: int | str = 0, method: Optional[str] = None,
                 ratio: Optional[float] = None):
    """Exhaustive grid search on held-out validation episodes.

    Validation episodes come from their own seed stream, so they are
    disjoint from every benchmark episode of the same config. Returns
    ``(best_hyper, table)`` where the table holds one scored row per grid
    point. Ties prefer a smaller step size, then a smaller depth, then the
    lexicographically smallest remaining assignment, so the winner is
    deterministic.
    """
    if validation_episodes < 1:
        raise ValueError("need at least one validation episode")
    if isinstance(manifold, str):
        names = [name for name, _ in cfg.manifolds]
        mi = names.index(manifold)
    else:
        mi = int(manifold)
    name, spec = cfg.manifolds[mi]
    method = method or cfg.methods[0]
    if ratio is None:
        ratio = cfg.label_ratios[0]
    ri = cfg.label_ratios.index(ratio)
    keys = list(grid.keys())
    episodes = []
    for ei in range(validation_episodes):
        seed = episode_seed(cfg.base_seed, mi, ri, ei, STREAM_VALIDATION)
        episodes.append(make_episode(spec, cfg.n, ratio, 2, seed))
    base_hp = cfg.resolve_hyper(method)
    table = []
    for values in iter_product(*(grid[k] for k in keys)):
        hp = dict(base_hp)
        hp.update(dict(zip(keys, values)))
        accs = [run_episode(ep, method, hp)["accuracy"] for ep in episodes]
        entry = dict(zip(keys, values))
        entry["mean_accuracy"] = float(np.mean(accs))
        table.append(entry)

    def tie_key(entry):
        rest = tuple(
            repr(entry[k]) for k in sorted(keys) if k not in ("alpha", "L")
        )
        return (
            -entry["mean_accuracy"],
            entry.get("alpha", base_hp["alpha"]),
            entry.get("L", base_hp["L"]),
            rest,
        )

    best = min(table, key=tie_key)
    best_hp = {k: best[k] for k in keys}
    return best_hp, table


# ---------------------------------------------------------------------------
# Config files


def sweep_config_from_dict(d: dict) -> SweepConfig:
    manifolds = []
    for entry in d["manifolds"]:
        entry = dict(entry)
        name = entry.pop("name", None) or entry.get("family", "manifold")
        manifolds.append((name, spec_from_dict(entry)))
    return SweepConfig(
        manifolds=manifolds,
        methods=list(d["methods"]),
        label_ratios=[float(r) for r in d["label_ratios"]],
        n=int(d.get("n", 100)),
        episodes_per_cell=int(d.get("episodes_per_cell", 200)),
        base_seed=int(d.get("base_seed", 0)),
        hyper=dict(d.get("hyper", {})),
        method_hyper={k: dict(v) for k, v in d.get("method_hyper", {}).items()},
    )


def sweep_config_to_dict(cfg: SweepConfig) -> dict:
    manifolds = []
    for name, spec in cfg.manifolds:
        entry = spec_to_dict(spec)
        entry["name"] = name
        manifolds.append(entry)
    return {
        "manifolds": manifolds,
        "methods": list(cfg.methods),
        "label_ratios": list(cfg.label_ratios),
        "n": cfg.n,
        "episodes_per_cell": cfg.episodes_per_cell,
        "base_seed": cfg.base_seed,
        "hyper": dict(cfg.hyper),
        "method_hyper": {k: dict(v) for k, v in cfg.method_hyper.items()},
    }


def load_sweep_config(path: str) -> SweepConfig:
    with open(path) as fh:
        return sweep_config_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Plotting (hand-built SVG so output bytes are reproducible)

_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#e377c2",
)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def emit_plot(rows: list, path: str, title: str = "accuracy vs label ratio") -> None:
    """Accuracy-vs-ratio curves with std bands, one series per
    (manifold, method), written as a self-contained SVG.

    Error rows are skipped. Identical rows always produce identical bytes.
    """
    series = {}
    order = []
    for row in rows:
        if row.get("error"):
            continue
        if row["mean_accuracy"] is None:
            continue
        key = (row["manifold"], row["method"])
        if key not in series:
            series[key] = []
            order.append(key)
        series[key].append(
            (float(row["label_ratio"]), float(row["mean_accuracy"]),
             float(row["std_accuracy"] or 0.0))
        )
    if not order:
        raise ValueError("no plottable rows")
    width, height = 720, 480
    ml, mr, mt, mb = 70, 30, 50, 55
    ratios = sorted({r for pts in series.values() for r, _, _ in pts})
    x_lo, x_hi = min(ratios), max(ratios)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.01, x_hi + 0.01
    y_lo, y_hi = 0.0, 1.0

    def px(r):
        return ml + (width - ml - mr) * (r - x_lo) / (x_hi - x_lo)

    def py(a):
        return height - mb - (height - mt - mb) * (a - y_lo) / (y_hi - y_lo)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="28" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]
    # frame and ticks
    parts.append(
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" '
        f'height="{height - mt - mb}" fill="none" stroke="#444"/>'
    )
    for i in range(6):
        a = y_lo + (y_hi - y_lo) * i / 5
        y = py(a)
        parts.append(
            f'<line x1="{ml}" y1="{y:.2f}" x2="{width - mr}" y2="{y:.2f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{ml - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{_fmt(a)}</text>'
        )
    for r in ratios:
        x = px(r)
        parts.append(
            f'<line x1="{x:.2f}" y1="{height - mb}" x2="{x:.2f}" '
            f'y2="{height - mb + 5}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{height - mb + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{_fmt(r)}</text>'
        )
    parts.append(
        f'<text x="{(ml + width - mr) / 2:.1f}" y="{height - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">'
        "label ratio</text>"
    )
    parts.append(
        f'<text x="20" y="{(mt + height - mb) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {(mt + height - mb) / 2:.1f})">accuracy</text>'
    )
    for si, key in enumerate(order):
        color = _PALETTE[si % len(_PALETTE)]
        pts = sorted(series[key])
        upper = [(px(r), py(min(a + s, y_hi))) for r, a, s in pts]
        lower = [(px(r), py(max(a - s, y_lo))) for r, a, s in reversed(pts)]
        band = " ".join(f"{x:.2f},{y:.2f}" for x, y in upper + lower)
        parts.append(
            f'<polygon points="{band}" fill="{color}" fill-opacity="0.15" '
            'stroke="none"/>'
        )
        line = " ".join(f"{px(r):.2f},{py(a):.2f}" for r, a, _ in pts)
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" '
            'stroke-width="2"/>'
        )
        for r, a, _ in pts:
            parts.append(
                f'<circle cx="{px(r):.2f}" cy="{py(a):.2f}" r="3" '
                f'fill="{color}"/>'
            )
        label = f"{key[0]} / {key[1]}"
        ly = mt + 18 + 16 * si
        parts.append(
            f'<line x1="{ml + 10}" y1="{ly - 4}" x2="{ml + 34}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{ml + 40}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    data = "\n".join(parts) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
