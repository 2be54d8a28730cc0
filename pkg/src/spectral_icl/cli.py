"""Command-line front end.

Subcommands: generate, run, sweep, tune, plot, validate. Exit codes: 0 on
success, 1 for usage errors, 2 for runtime failures (including a failed
validation battery).
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    emit_plot,
    load_sweep_config,
    read_sweep_csv,
    run_episode,
    run_sweep,
    tune_scalars,
)
from .manifolds import load_episode, load_pointcloud_csv, make_episode, save_episode, spec_from_dict
from .validation import run_validation


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="spectral-icl",
                     description="Manifold benchmarks for in-context "
                                 "semi-supervised learning.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    g = sub.add_parser("generate", help="write one episode file")
    g.add_argument("--config", required=True,
                   help="JSON: {manifold: <spec>, n, label_ratio, seed}")
    g.add_argument("--out", required=True, help="episode JSON path")
    g.add_argument("--seed", type=int, default=None,
                   help="override the config seed")

    r = sub.add_parser("run", help="score one method on one episode")
    r.add_argument("--episode", required=True,
                   help="episode JSON, or a point-cloud CSV (x0..x{d-1},label)")
    r.add_argument("--method", required=True)
    r.add_argument("--config", default=None,
                   help="JSON hyperparameter overrides")
    r.add_argument("--out", default=None, help="write the result row as JSON")
    r.add_argument("--trace-eigenmap", default=None, metavar="CSV",
                   help="per-sweep principal-angle trace (e2e-icl only)")

    s = sub.add_parser("sweep", help="run a full benchmark sweep")
    s.add_argument("--config", required=True, help="sweep config JSON")
    s.add_argument("--out", required=True, help="results CSV path")
    s.add_argument("--workers", type=int, default=1)

    t = sub.add_parser("tune", help="grid-search head scalars on validation episodes")
    t.add_argument("--config", required=True,
                   help="sweep config JSON with a 'tuning' section")
    t.add_argument("--out", default=None, help="write best settings as JSON")

    p = sub.add_parser("plot", help="render a sweep CSV as an SVG")
    p.add_argument("--results", required=True, help="sweep results CSV")
    p.add_argument("--out", required=True, help="SVG path")
    p.add_argument("--title", default="accuracy vs label ratio")

    v = sub.add_parser("validate", help="run the built-in oracle batteries")
    v.add_argument("--out", default=None, help="write the report as JSON")
    return parser


def _load_episode_any(path: str):
    if path.endswith(".csv"):
        return load_pointcloud_csv(path)
    return load_episode(path)


def _cmd_generate(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    spec = spec_from_dict(cfg["manifold"])
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    ep = make_episode(spec, int(cfg.get("n", 100)), float(cfg["label_ratio"]),
                      int(cfg.get("C", 2)), seed)
    save_episode(ep, args.out)
    print(f"wrote episode n={ep.n} m={ep.m} seed={seed} -> {args.out}")
    return 0


def _cmd_run(args) -> int:
    ep = _load_episode_any(args.episode)
    hp = None
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        hp = loaded.get("hyper", loaded)
    trace = [] if args.trace_eigenmap else None
    if trace is not None and args.method != "e2e-icl":
        print("--trace-eigenmap applies to e2e-icl only", file=sys.stderr)
        return 1
    row = run_episode(ep, args.method, hp, eigenmap_trace=trace)
    if trace is not None:
        with open(args.trace_eigenmap, "w") as fh:
            fh.write("sweep,largest_principal_angle\n")
            for sweep, angle in trace:
                fh.write(f"{sweep},{angle!r}\n")
    print(f"method={args.method} accuracy={row['accuracy']:.4f} "
          f"loss={row['loss']:.4f} queries={row['n_query']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(row, fh, indent=1)
            fh.write("\n")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    result = run_sweep(cfg, out_csv=args.out, workers=args.workers)
    errors = sum(1 for r in result.rows if r["error"])
    print(f"wrote {len(result.rows)} rows -> {args.out}"
          + (f" ({errors} error rows)" if errors else ""))
    return 0


def _cmd_tune(args) -> int:
    with open(args.config) as fh:
        raw = json.load(fh)
    if "tuning" not in raw:
        print("config has no 'tuning' section", file=sys.stderr)
        return 2
    tuning = raw["tuning"]
    cfg = load_sweep_config(args.config)
    best, table = tune_scalars(
        cfg,
        grid=tuning["grid"],
        validation_episodes=int(tuning.get("validation_episodes", 20)),
        manifold=tuning.get("manifold", 0),
        method=tuning.get("method"),
        ratio=tuning.get("ratio"),
    )
    print("best:", json.dumps(best, sort_keys=True))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"best": best, "table": table}, fh, indent=1)
            fh.write("\n")
    return 0


def _cmd_plot(args) -> int:
    rows = read_sweep_csv(args.results)
    emit_plot(rows, args.out, title=args.title)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    report = run_validation()
    for item in report:
        status = "PASS" if item["passed"] else "FAIL"
        print(f"{status} {item['name']}: {item['detail']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=1)
            fh.write("\n")
    return 0 if all(item["passed"] for item in report) else 2


_COMMANDS = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "tune": _cmd_tune,
    "plot": _cmd_plot,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
