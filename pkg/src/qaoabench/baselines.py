"""Reference optimizers for head-to-head trajectory comparisons.

Three baselines with fixed, documented hyperparameters: SPSA with standard
decaying gain sequences, Nelder-Mead wrapped from scipy with a hard
evaluation budget, and Adam on central finite-difference gradients with an
exponentially decaying learning rate.

All three honor the same accounting: every call to the objective is one
evaluation, traces record the cumulative count at each query, and best-so-far
curves are running minima over queries, so trajectories from different
optimizers share an x-axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as scipy_minimize

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class OptimizerTrace:
    """Per-query record of one optimization run.

    evals[i] is the cumulative evaluation count after the i-th query,
    raw[i] the queried objective value, objective[i] the best value seen
    up to and including that query.
    """

    evals: np.ndarray
    raw: np.ndarray
    objective: np.ndarray
    params_final: np.ndarray

    def __post_init__(self):
        if not (len(self.evals) == len(self.raw) == len(self.objective)):
            raise ValueError("trace arrays must have equal length")
        if len(self.evals) and np.any(np.diff(self.evals) <= 0):
            raise ValueError("evals must be strictly increasing")
        if len(self.objective) and np.any(np.diff(self.objective) > 0):
            raise ValueError("best-so-far must be non-increasing")

    @property
    def final_value(self) -> float:
        return float(self.objective[-1])


class _TraceRecorder:
    def __init__(self):
        self.raw: list[float] = []
        self.best: list[float] = []
        self.best_x: np.ndarray | None = None
        self._best_val = np.inf

    def record(self, x: np.ndarray, value: float) -> None:
        self.raw.append(value)
        if value < self._best_val:
            self._best_val = value
            self.best_x = np.array(x, dtype=float)
        self.best.append(self._best_val)

    def trace(self, params_final: np.ndarray) -> OptimizerTrace:
        n = len(self.raw)
        return OptimizerTrace(
            evals=np.arange(1, n + 1),
            raw=np.array(self.raw),
            objective=np.array(self.best),
            params_final=np.asarray(params_final, dtype=float),
        )


@dataclass(frozen=True)
class SpsaConfig:
    """SPSA gains a_k = a/(k+1+A)^alpha, c_k = c/(k+1)^gamma."""

    a: float = 0.01
    c: float = 0.01
    big_a: float = 50.0
    alpha: float = 0.602
    gamma: float = 0.101
    budget: int = 1000
    seed: int = 0
    lower: float = 0.0
    upper: float = TWO_PI


def spsa_minimize(objective, x0: np.ndarray, config: SpsaConfig = SpsaConfig()) -> OptimizerTrace:
    """Simultaneous-perturbation stochastic approximation, two evaluations per iteration.

    Iterates and evaluation points are clipped to [lower, upper]^D.
    """
    x = np.clip(np.asarray(x0, dtype=float), config.lower, config.upper)
    dim = x.size
    rng = np.random.Generator(np.random.Philox(key=int(config.seed)))
    rec = _TraceRecorder()
    n_iter = config.budget // 2
    for k in range(n_iter):
        ak = config.a / (k + 1 + config.big_a) ** config.alpha
        ck = config.c / (k + 1) ** config.gamma
        delta = rng.integers(0, 2, size=dim) * 2.0 - 1.0
        xp = np.clip(x + ck * delta, config.lower, config.upper)
        xm = np.clip(x - ck * delta, config.lower, config.upper)
        yp = float(objective(xp))
        rec.record(xp, yp)
        ym = float(objective(xm))
        rec.record(xm, ym)
        ghat = (yp - ym) / (2.0 * ck) * delta
        x = np.clip(x - ak * ghat, config.lower, config.upper)
    return rec.trace(x)


@dataclass(frozen=True)
class NelderMeadConfig:
    budget: int = 1000


class _BudgetExhausted(Exception):
    pass


def nelder_mead_minimize(
    objective, x0: np.ndarray, config: NelderMeadConfig = NelderMeadConfig()
) -> OptimizerTrace:
    """Scipy's Nelder-Mead at default settings, hard-capped at the evaluation budget.

    The default initial simplex perturbs each coordinate by 5%.  Convergence
    before the budget is allowed; the trace then ends early.
    """
    x0 = np.asarray(x0, dtype=float)
    rec = _TraceRecorder()

    def wrapped(xv):
        if len(rec.raw) >= config.budget:
            raise _BudgetExhausted
        v = float(objective(xv))
        rec.record(xv, v)
        return v

    try:
        scipy_minimize(
            wrapped,
            x0,
            method="Nelder-Mead",
            options={"maxiter": 10**9, "maxfev": config.budget},
        )
    except _BudgetExhausted:
        pass
    final = rec.best_x if rec.best_x is not None else x0
    return rec.trace(final)


@dataclass(frozen=True)
class AdamFdConfig:
    """Adam on central finite differences; lr(t) = lr0 * decay^(t / transition)."""

    budget: int = 1000
    lr0: float = 0.01
    decay: float = 0.9
    transition: float = 500.0
    fd_step: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_fd_minimize(objective, x0: np.ndarray, config: AdamFdConfig = AdamFdConfig()) -> OptimizerTrace:
    """Adam updates on central-difference gradients, 2D+1 evaluations per iteration.

    For a depth-p circuit D = 2p, so one iteration costs 4p+1 evaluations:
    one at the iterate plus two per coordinate.
    """
    x = np.asarray(x0, dtype=float).copy()
    dim = x.size
    per_iter = 2 * dim + 1
    rec = _TraceRecorder()
    m = np.zeros(dim)
    v = np.zeros(dim)
    t = 0
    while len(rec.raw) + per_iter <= config.budget:
        lr = config.lr0 * config.decay ** (t / config.transition)
        rec.record(x, float(objective(x)))
        grad = np.zeros(dim)
        for d in range(dim):
            step = np.zeros(dim)
            step[d] = config.fd_step
            yp = float(objective(x + step))
            rec.record(x + step, yp)
            ym = float(objective(x - step))
            rec.record(x - step, ym)
            grad[d] = (yp - ym) / (2.0 * config.fd_step)
        t += 1
        m = config.beta1 * m + (1.0 - config.beta1) * grad
        v = config.beta2 * v + (1.0 - config.beta2) * grad**2
        mhat = m / (1.0 - config.beta1**t)
        vhat = v / (1.0 - config.beta2**t)
        x = x - lr * mhat / (np.sqrt(vhat) + config.eps)
    return rec.trace(x)
