"""Command-line interface.

Subcommands:

* gen-graph: generate a weighted 3-regular benchmark graph as JSON
* oracle:    brute-force a graph's QUBO optimum to JSON
* run:       execute an experiment config, writing trajectory CSVs
* report:    recompute a summary table from a run directory's trajectories
* mitigate:  replay a saved shot sample through the mitigation stack

Failures print a machine-readable JSON object to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np


def _fail(kind: str, detail: str) -> int:
    json.dump({"error": kind, "detail": detail}, sys.stderr)
    sys.stderr.write("\n")
    return 2


def _cmd_gen_graph(args) -> int:
    from qaoabench.problem import generate_w3r, save_graph

    graph = generate_w3r(n=args.n, seed=args.seed)
    save_graph(graph, args.out)
    print(f"wrote {args.out}: n={graph.n}, {len(graph.edges)} edges")
    return 0


def _cmd_oracle(args) -> int:
    from qaoabench.problem import QuboProblem, brute_force_optimum, load_graph, save_oracle

    problem = QuboProblem.from_graph(load_graph(args.graph))
    result = brute_force_optimum(problem)
    save_oracle(result, args.out)
    print(
        f"wrote {args.out}: min={result.min_value:g}, max_cut={result.max_cut:g}, "
        f"{len(result.optimal_bitstrings)} optimal bitstrings"
    )
    return 0


def _cmd_run(args) -> int:
    from qaoabench.harness import RunConfig, run_experiment

    payload = json.loads(Path(args.config).read_text())
    if args.out_dir is not None:
        payload["out_dir"] = args.out_dir
    config = RunConfig.from_json_dict(payload)
    summary = run_experiment(config, workers=args.workers)
    for name, stats in summary["optimizers"].items():
        print(f"{name}: mean best gap {stats['mean_best_gap']:.4f} +- {stats['std_best_gap']:.4f}")
    print(f"outputs in {config.out_dir}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    files = sorted(run_dir.glob("traj_*.csv"))
    if not files:
        raise ValueError(f"no trajectory files in {run_dir}")
    finals: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for path in files:
        # traj_<name>_g<graph>_t<trial>.csv
        stem = path.stem.split("_")
        name = "_".join(stem[1:-2])
        graph_id = int(stem[-2][1:])
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        if rows:
            finals[name][graph_id].append(float(rows[-1]["gap"]))
    out_rows = []
    print(f"{'optimizer':<14} {'graphs':>6} {'mean gap':>10} {'std':>10} {'best gap':>10}")
    for name in sorted(finals):
        best_per_graph = [min(v) for _, v in sorted(finals[name].items())]
        mean = float(np.mean(best_per_graph))
        std = float(np.std(best_per_graph))
        best = float(np.min(best_per_graph))
        print(f"{name:<14} {len(best_per_graph):>6} {mean:>10.4f} {std:>10.4f} {best:>10.4f}")
        for gi, gap in enumerate(best_per_graph):
            out_rows.append({"optimizer": name, "graph_id": gi, "best_gap": repr(gap)})
    out_path = run_dir / "report.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=("optimizer", "graph_id", "best_gap"), lineterminator="\n")
        writer.writeheader()
        writer.writerows(out_rows)
    print(f"plot-ready table: {out_path}")
    return 0


def _cmd_mitigate(args) -> int:
    from qaoabench.mitigation import ConfusionSpec, mitigate_readout
    from qaoabench.simulator import ShotSample

    sample = ShotSample.from_json_dict(json.loads(Path(args.sample).read_text()))
    spec = ConfusionSpec.load(args.confusion)
    quasi = mitigate_readout(sample, spec)
    payload = {
        "n": spec.n,
        "quasi_distribution": {
            format(i, f"0{spec.n}b"): float(v) for i, v in enumerate(quasi) if v != 0.0
        },
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qaoabench",
        description="Error-mitigated QAOA optimization benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-graph", help="generate a weighted 3-regular graph")
    g.add_argument("--n", type=int, required=True, help="vertex count (even, >= 4)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output graph JSON path")
    g.set_defaults(func=_cmd_gen_graph)

    o = sub.add_parser("oracle", help="brute-force the QUBO optimum of a graph")
    o.add_argument("--graph", required=True, help="graph JSON path")
    o.add_argument("--out", required=True, help="output oracle JSON path")
    o.set_defaults(func=_cmd_oracle)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True, help="run config JSON path")
    r.add_argument("--out-dir", default=None, help="override the config's output directory")
    r.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    r.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="summarize a run directory")
    rep.add_argument("--run-dir", required=True)
    rep.set_defaults(func=_cmd_report)

    m = sub.add_parser("mitigate", help="apply readout mitigation to a saved sample")
    m.add_argument("--sample", required=True, help="ShotSample JSON path")
    m.add_argument("--confusion", required=True, help="ConfusionSpec JSON path")
    m.add_argument("--out", default=None, help="output path (default: stdout)")
    m.set_defaults(func=_cmd_mitigate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, np.linalg.LinAlgError) as exc:
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
