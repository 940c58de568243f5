"""Experiment orchestration: evaluation modes, multi-graph multi-trial sweeps,
trajectory CSVs, and aggregate reports.

A run is described by a single JSON config (see RunConfig.from_json_dict for
the schema).  Outputs per (optimizer, graph, trial) are one trajectory CSV
with fixed columns; an aggregate CSV and a summary JSON are derived from the
trajectories and recomputable from them.

Randomness policy: every stochastic quantity is derived from
numpy SeedSequence([base_seed, graph_id, trial, ...]) so runs are exactly
reproducible and no global RNG is touched.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qaoabench.baselines import (
    AdamFdConfig,
    NelderMeadConfig,
    OptimizerTrace,
    SpsaConfig,
    adam_fd_minimize,
    nelder_mead_minimize,
    spsa_minimize,
)
from qaoabench.darbo import DarboConfig, darbo_minimize
from qaoabench.mitigation import (
    ConfusionSpec,
    learn_confusion,
    mitigate_readout,
    project_to_simplex,
    zne_extrapolate,
)
from qaoabench.noise_sim import DENSITY_MAX_N, FoldFactor, NoiseModel, sample_noisy
from qaoabench.problem import (
    BruteForceResult,
    QuboProblem,
    approximation_ratio,
    brute_force_optimum,
    generate_w3r,
    load_graph,
    five_variable_qubo,
)
from qaoabench.simulator import (
    STATEVECTOR_MAX_N,
    QaoaParams,
    build_state,
    counts_to_vector,
    expectation_of_distribution,
    exact_expectation,
    sample_bitstrings,
    shot_estimate,
    success_ratio,
)

OPTIMIZER_NAMES = ("darbo", "spsa", "nelder_mead", "adam_fd")
TRAJECTORY_COLUMNS = (
    "graph_id",
    "trial",
    "iteration",
    "cumulative_evals",
    "query_value",
    "best_value",
    "r",
    "gap",
)

# tags keeping seed streams for different purposes disjoint
_SEED_OPT = 101
_SEED_CAL = 202
_SEED_INIT = 303
_SEED_EVAL = 404


@dataclass(frozen=True)
class ModeConfig:
    """Evaluation mode: exact statevector, finite shots, or noisy (+ mitigation)."""

    kind: str  # "exact" | "shots" | "noisy"
    m: int = 0
    noise: NoiseModel | None = None
    mitigated: bool = False
    folds: tuple[int, ...] = (1, 3, 5)
    confusion: str | int = "exact"  # "exact" or calibration shot count

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ModeConfig":
        kind = payload.get("kind")
        errors = []
        if kind not in ("exact", "shots", "noisy"):
            errors.append(f"mode.kind must be exact, shots, or noisy, got {kind!r}")
        m = int(payload.get("m", 0))
        if kind in ("shots", "noisy") and m < 1:
            errors.append(f"mode.m must be >= 1 for {kind} mode")
        noise = None
        if kind == "noisy":
            noise = NoiseModel.from_json_dict(payload.get("noise", {}))
        folds = tuple(int(f) for f in payload.get("folds", (1, 3, 5)))
        for f in folds:
            if f < 1 or f % 2 == 0:
                errors.append(f"fold factors must be odd positive, got {f}")
        confusion = payload.get("confusion", "exact")
        if confusion != "exact" and (not isinstance(confusion, int) or confusion < 1):
            errors.append('mode.confusion must be "exact" or a positive calibration shot count')
        if errors:
            raise ValueError("; ".join(errors))
        return cls(
            kind=kind,
            m=m,
            noise=noise,
            mitigated=bool(payload.get("mitigated", False)),
            folds=folds,
            confusion=confusion,
        )

    def to_json_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind in ("shots", "noisy"):
            out["m"] = self.m
        if self.kind == "noisy":
            out["noise"] = self.noise.to_json_dict()
            out["mitigated"] = self.mitigated
            out["folds"] = list(self.folds)
            out["confusion"] = self.confusion
        return out


@dataclass(frozen=True)
class RunConfig:
    """One experiment: problems x optimizers x trials under one mode."""

    problems: tuple[dict, ...]
    p: int
    mode: ModeConfig
    optimizers: tuple[dict, ...]
    trials: int
    base_seed: int
    budget: int
    out_dir: str
    count_zne_folds: bool = False

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RunConfig":
        errors = []
        problems = payload.get("problems")
        if problems is None and "problem" in payload:
            problems = [payload["problem"]]
        if not problems:
            errors.append("config needs a problems list (or a single problem)")
            problems = []
        for i, spec in enumerate(problems):
            if not isinstance(spec, dict) or not ({"file", "w3r", "five_variable_qubo"} & set(spec)):
                errors.append(f"problems[{i}] must have a 'file', 'w3r', or 'five_variable_qubo' key")
            elif "w3r" in spec and not {"n", "seed"} <= set(spec["w3r"]):
                errors.append(f"problems[{i}].w3r needs n and seed")
        p = int(payload.get("p", 0))
        if p < 1:
            errors.append("p must be >= 1")
        optimizers = payload.get("optimizers")
        if optimizers is None and "optimizer" in payload:
            optimizers = [payload["optimizer"]]
        if not optimizers:
            errors.append("config needs an optimizers list (or a single optimizer)")
            optimizers = []
        for i, spec in enumerate(optimizers):
            name = spec.get("name") if isinstance(spec, dict) else None
            if name not in OPTIMIZER_NAMES:
                errors.append(f"optimizers[{i}].name must be one of {OPTIMIZER_NAMES}, got {name!r}")
            elif reserved := {"seed", "max_iter", "budget"} & set(spec):
                errors.append(
                    f"optimizers[{i}]: {sorted(reserved)} are derived from the run's "
                    "base_seed and budget and cannot be set per optimizer"
                )
        trials = int(payload.get("trials", 0))
        if trials < 1:
            errors.append("trials must be >= 1")
        budget = int(payload.get("budget", 0))
        if budget < 1:
            errors.append("budget must be >= 1")
        if "out_dir" not in payload:
            errors.append("out_dir is required")
        mode = None
        try:
            mode = ModeConfig.from_json_dict(payload.get("mode", {}))
        except ValueError as exc:
            errors.append(str(exc))
        if errors:
            raise ValueError("invalid config: " + "; ".join(errors))
        return cls(
            problems=tuple(problems),
            p=p,
            mode=mode,
            optimizers=tuple(dict(o) for o in optimizers),
            trials=trials,
            base_seed=int(payload.get("base_seed", 0)),
            budget=budget,
            out_dir=str(payload["out_dir"]),
            count_zne_folds=bool(payload.get("count_zne_folds", False)),
        )


def _derive_seed(*words: int) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1)[0])


def load_problem(spec: dict) -> QuboProblem:
    if "file" in spec:
        return QuboProblem.from_graph(load_graph(spec["file"]))
    if "five_variable_qubo" in spec:
        return five_variable_qubo()
    w = spec["w3r"]
    return QuboProblem.from_graph(generate_w3r(n=int(w["n"]), seed=int(w["seed"])))


class Evaluator:
    """Mode-appropriate objective with per-call seeding and cost accounting.

    Each call consumes one seed derived from (base_seed, graph_id, trial,
    call index), so optimizer trajectories are reproducible and distinct
    trials see independent shot noise.
    """

    def __init__(
        self,
        problem: QuboProblem,
        p: int,
        mode: ModeConfig,
        base_seed: int,
        graph_id: int,
        trial: int,
        count_zne_folds: bool = False,
    ):
        n = problem.n
        if mode.kind in ("exact", "shots") and n > STATEVECTOR_MAX_N:
            raise ValueError(f"n = {n} exceeds statevector limit {STATEVECTOR_MAX_N}")
        if mode.kind == "noisy" and n > DENSITY_MAX_N:
            raise ValueError(f"n = {n} exceeds density-matrix limit {DENSITY_MAX_N}")
        self.problem = problem
        self.p = p
        self.mode = mode
        self.base_seed = base_seed
        self.graph_id = graph_id
        self.trial = trial
        self.calls = 0
        self.units_per_call = (
            len(mode.folds) if (mode.kind == "noisy" and mode.mitigated and count_zne_folds) else 1
        )
        self.confusion: ConfusionSpec | None = None
        if mode.kind == "noisy" and mode.mitigated:
            if mode.confusion == "exact":
                self.confusion = ConfusionSpec.from_noise_model(n, mode.noise)
            else:
                cal_seed = _derive_seed(base_seed, graph_id, trial, _SEED_CAL)
                self.confusion = learn_confusion(n, mode.noise, int(mode.confusion), cal_seed)

    def _call_seed(self, *extra: int) -> int:
        return _derive_seed(self.base_seed, self.graph_id, self.trial, _SEED_EVAL, self.calls, *extra)

    def __call__(self, params: QaoaParams) -> float:
        mode = self.mode
        try:
            if mode.kind == "exact":
                return exact_expectation(self.problem, params)
            if mode.kind == "shots":
                state = build_state(self.problem, params)
                sample = sample_bitstrings(state, mode.m, self._call_seed())
                return shot_estimate(self.problem, sample)
            if not mode.mitigated:
                sample = sample_noisy(
                    self.problem, params, mode.noise, FoldFactor(1), mode.m, self._call_seed()
                )
                return shot_estimate(self.problem, sample)
            values = []
            for fold in mode.folds:
                sample = sample_noisy(
                    self.problem, params, mode.noise, FoldFactor(fold), mode.m, self._call_seed(fold)
                )
                quasi = mitigate_readout(sample, self.confusion)
                values.append(expectation_of_distribution(self.problem, quasi))
            degree = 1 if self.p == 1 else 2
            return zne_extrapolate(list(mode.folds), values, degree=degree)
        finally:
            self.calls += 1


def _optimizer_seed(base_seed: int, graph_id: int, trial: int) -> int:
    return _derive_seed(base_seed, graph_id, trial, _SEED_OPT)


def _baseline_x0(dim: int, base_seed: int, graph_id: int, trial: int) -> np.ndarray:
    """Uniform start in [0, 2pi)^D from the shared seed hierarchy."""
    seed = _derive_seed(base_seed, graph_id, trial, _SEED_INIT)
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.random(dim) * 2.0 * np.pi


def run_single(
    config: RunConfig, optimizer_spec: dict, graph_id: int, trial: int,
    problem: QuboProblem | None = None,
) -> OptimizerTrace:
    """One (optimizer, graph, trial) optimization, returning its trace."""
    if problem is None:
        problem = load_problem(config.problems[graph_id])
    evaluator = Evaluator(
        problem, config.p, config.mode, config.base_seed, graph_id, trial, config.count_zne_folds
    )
    calls_budget = max(1, config.budget // evaluator.units_per_call)
    name = optimizer_spec["name"]
    extra = {k: v for k, v in optimizer_spec.items() if k != "name"}
    seed = _optimizer_seed(config.base_seed, graph_id, trial)
    dim = 2 * config.p
    if name == "darbo":
        opt_cfg = DarboConfig(seed=seed, max_iter=calls_budget, **extra)
        trace = darbo_minimize(evaluator, config.p, opt_cfg)
    else:
        x0 = _baseline_x0(dim, config.base_seed, graph_id, trial)
        obj = lambda x: evaluator(QaoaParams.from_vector(x))
        if name == "spsa":
            trace = spsa_minimize(obj, x0, SpsaConfig(seed=seed, budget=calls_budget, **extra))
        elif name == "nelder_mead":
            trace = nelder_mead_minimize(obj, x0, NelderMeadConfig(budget=calls_budget, **extra))
        else:
            trace = adam_fd_minimize(obj, x0, AdamFdConfig(budget=calls_budget, **extra))
    if evaluator.units_per_call != 1:
        trace = OptimizerTrace(
            evals=trace.evals * evaluator.units_per_call,
            raw=trace.raw,
            objective=trace.objective,
            params_final=trace.params_final,
        )
    return trace


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(
    path: Path,
    trace: OptimizerTrace,
    problem: QuboProblem,
    oracle: BruteForceResult,
    graph_id: int,
    trial: int,
) -> None:
    rows = []
    for i in range(len(trace.evals)):
        r, gap = approximation_ratio(problem, float(trace.objective[i]), oracle)
        rows.append(
            {
                "graph_id": graph_id,
                "trial": trial,
                "iteration": i,
                "cumulative_evals": int(trace.evals[i]),
                "query_value": repr(float(trace.raw[i])),
                "best_value": repr(float(trace.objective[i])),
                "r": repr(r),
                "gap": repr(gap),
            }
        )
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TRAJECTORY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def trajectory_filename(optimizer: str, graph_id: int, trial: int) -> str:
    return f"traj_{optimizer}_g{graph_id}_t{trial}.csv"


def run_experiment(config: RunConfig, workers: int = 1) -> dict:
    """Execute the full matrix and write trajectory, aggregate, and summary files.

    Returns the summary dict.  workers > 1 fans (optimizer, graph, trial)
    tasks over a process pool; outputs are identical either way.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    problems = [load_problem(spec) for spec in config.problems]
    oracles = [brute_force_optimum(pb) for pb in problems]

    tasks = [
        (oi, gi, t)
        for oi in range(len(config.optimizers))
        for gi in range(len(problems))
        for t in range(config.trials)
    ]

    results: dict[tuple[int, int, int], OptimizerTrace] = {}
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {
                pool.submit(run_single, config, config.optimizers[oi], gi, t): (oi, gi, t)
                for (oi, gi, t) in tasks
            }
            for fut, key in futs.items():
                results[key] = fut.result()
    else:
        for oi, gi, t in tasks:
            results[(oi, gi, t)] = run_single(config, config.optimizers[oi], gi, t, problems[gi])

    final_gaps: dict[tuple[int, int, int], float] = {}
    for (oi, gi, t), trace in results.items():
        name = config.optimizers[oi]["name"]
        write_trajectory_csv(
            out / trajectory_filename(name, gi, t), trace, problems[gi], oracles[gi], gi, t
        )
        _, gap = approximation_ratio(problems[gi], trace.final_value, oracles[gi])
        final_gaps[(oi, gi, t)] = gap

    agg_rows = []
    summary_opts = {}
    for oi, spec in enumerate(config.optimizers):
        name = spec["name"]
        per_graph_best = []
        for gi in range(len(problems)):
            gaps = [final_gaps[(oi, gi, t)] for t in range(config.trials)]
            best = min(gaps)
            per_graph_best.append(best)
            agg_rows.append(
                {
                    "optimizer": name,
                    "graph_id": gi,
                    "best_gap": repr(best),
                    "mean_gap": repr(float(np.mean(gaps))),
                    "std_gap": repr(float(np.std(gaps))),
                    "trials": config.trials,
                }
            )
        summary_opts[name] = {
            "mean_best_gap": float(np.mean(per_graph_best)),
            "std_best_gap": float(np.std(per_graph_best)),
            "per_graph_best_gap": [float(v) for v in per_graph_best],
        }

    import io

    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=("optimizer", "graph_id", "best_gap", "mean_gap", "std_gap", "trials"),
        lineterminator="\n",
    )
    writer.writeheader()
    writer.writerows(agg_rows)
    _atomic_write(out / "aggregate.csv", buf.getvalue())

    summary = {
        "config": {
            "p": config.p,
            "mode": config.mode.to_json_dict(),
            "trials": config.trials,
            "budget": config.budget,
            "base_seed": config.base_seed,
            "graphs": len(problems),
        },
        "optimizers": summary_opts,
    }
    _atomic_write(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True))
    return summary


def success_report(
    problem: QuboProblem,
    params: QaoaParams,
    mode: ModeConfig,
    m: int,
    seed: int,
    oracle: BruteForceResult | None = None,
    confusion: ConfusionSpec | None = None,
) -> dict:
    """Probability of sampling an exact optimum, plus the random-guess baseline.

    Mitigated mode pushes the observed counts through confusion inversion
    and a simplex projection so the report is a genuine probability.
    """
    if m < 1:
        raise ValueError(f"sample count must be positive, got m = {m}")
    if oracle is None:
        oracle = brute_force_optimum(problem)
    if mode.kind == "exact":
        state = build_state(problem, params)
        ratio = success_ratio(state, oracle)
    elif mode.kind == "shots":
        state = build_state(problem, params)
        ratio = success_ratio(sample_bitstrings(state, m, seed), oracle)
    else:
        sample = sample_noisy(problem, params, mode.noise, FoldFactor(1), m, seed)
        if mode.mitigated:
            spec = confusion or ConfusionSpec.from_noise_model(problem.n, mode.noise)
            dist = project_to_simplex(mitigate_readout(sample, spec))
            ratio = success_ratio(dist, oracle)
        else:
            ratio = success_ratio(sample, oracle)
    baseline = len(oracle.optimal_bitstrings) / (1 << problem.n)
    return {"success_ratio": float(ratio), "random_baseline": float(baseline)}
