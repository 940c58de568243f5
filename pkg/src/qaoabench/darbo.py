"""DARBO: GP-surrogate Bayesian optimization with an adaptive trust region
and an adaptive search region.

The optimizer works in normalized coordinates x in [0,1]^D, mapped affinely
onto the angle box [-pi, pi]^D.  Each iteration:

1. shape a trust-region box around the incumbent (side lengths proportional
   to the fitted ARD lengthscales, TuRBO convention),
2. intersect it with the active search region (A = [0.25, 0.75]^D in
   normalized units, i.e. [-pi/2, pi/2]^D in angles; B = the full box),
3. fit the GP on history points inside the trust region,
4. maximize UCB over a seeded Sobol candidate set in the intersection,
5. evaluate, update success/failure counters, adapt the trust-region length
   and (after kappa_s consecutive failures) switch the search region, and
   recenter on the point with the best posterior mean.

Externally the driver minimizes the objective; the surrogate is fit on
negated values so the acquisition maximizes.

With region_mode pinned to "B" and the switch disabled, the loop is a
TuRBO-style trust-region BO; the helpers are module-level functions so a
reference reduction can be composed from the same parts and compared
trace-for-trace.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from qaoabench.baselines import OptimizerTrace, _TraceRecorder
from qaoabench.simulator import QaoaParams
from qaoabench.surrogate import GpModel, KernelParams, fit, predict

REGION_A = "A"
REGION_B = "B"


@dataclass(frozen=True)
class DarboConfig:
    """Optimizer settings; the region constants are the published defaults.

    JSON keys mirror the field names: {L0, Lmin, Lmax, tau_s, tau_f,
    kappa_s, ucb_beta, max_iter, seed, candidates, region_mode}.
    max_iter counts objective evaluations including the initial point, so
    a run at max_iter = N is budget-comparable with a baseline at N.
    """

    L0: float = 1.6
    Lmin: float = 2.0**-10
    Lmax: float = 3.2
    tau_s: int = 3
    tau_f: int = 10
    kappa_s: int = 4
    ucb_beta: float = 0.2
    max_iter: int = 1000
    seed: int = 0
    candidates: int | None = None  # None -> min(5000, 200 D)
    region_mode: str = "adaptive"  # "adaptive" | "A" | "B"
    gp_steps: int = 50  # hyperparameter ascent steps on cold fits
    gp_warm_steps: int = 15  # steps on warm-started fits
    gp_refit_period: int = 50  # cold refit from defaults every this many iterations
    max_fit_points: int = 64  # cap on GP training set, nearest to TR center
    tr_shape: str = "ard"  # "ard" | "isotropic"
    reset_length_on_switch: bool = False

    def __post_init__(self):
        if self.region_mode not in ("adaptive", REGION_A, REGION_B):
            raise ValueError(f"region_mode must be adaptive, A, or B, got {self.region_mode!r}")
        if self.tr_shape not in ("ard", "isotropic"):
            raise ValueError(f"tr_shape must be ard or isotropic, got {self.tr_shape!r}")
        if not 0 < self.Lmin < self.L0 <= self.Lmax:
            raise ValueError("need 0 < Lmin < L0 <= Lmax")
        if min(self.tau_s, self.tau_f, self.kappa_s) < 1:
            raise ValueError("counter thresholds must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    @classmethod
    def from_json_dict(cls, payload: dict) -> "DarboConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown optimizer config keys: {sorted(unknown)}")
        return cls(**payload)

    def n_candidates(self, dim: int) -> int:
        return self.candidates if self.candidates is not None else min(5000, 200 * dim)


@dataclass(frozen=True)
class TrustRegionState:
    """Adaptive hyper-rectangle: base side length, counters, center."""

    length: float
    t_s: int
    t_f: int
    center: np.ndarray

    def __post_init__(self):
        if self.t_s < 0 or self.t_f < 0:
            raise ValueError("counters must be non-negative")
        if self.t_s > 0 and self.t_f > 0:
            raise ValueError("at most one of t_s, t_f may be positive")
        if self.length <= 0:
            raise ValueError("trust-region length must be positive")


@dataclass(frozen=True)
class SearchRegionState:
    """Which of the two nested boxes is active, plus the switch counter."""

    active: str
    c_s: int

    def __post_init__(self):
        if self.active not in (REGION_A, REGION_B):
            raise ValueError(f"active region must be A or B, got {self.active!r}")
        if self.c_s < 0:
            raise ValueError("switch counter must be non-negative")


@dataclass
class DarboState:
    config: DarboConfig
    dim: int
    rng: np.random.Generator
    history_x: list[np.ndarray]
    history_y: list[float]
    tr: TrustRegionState
    sr: SearchRegionState
    iteration: int = 0
    kernel: KernelParams | None = None  # warm-start hyperparameters
    model: GpModel | None = None  # last fitted surrogate (on negated y)
    fit_indices: list[int] = field(default_factory=list)

    @property
    def best_observed(self) -> float:
        return min(self.history_y)


def to_params(x: np.ndarray) -> QaoaParams:
    """Normalized [0,1]^D vector -> angles in [-pi, pi]^D, first half gamma.

    Out-of-range coordinates are clipped with a warning.
    """
    x = np.asarray(x, dtype=float)
    if x.size % 2 != 0:
        raise ValueError(f"need an even dimension (2p), got {x.size}")
    if np.any(x < 0.0) or np.any(x > 1.0):
        warnings.warn("normalized coordinates outside [0,1] clipped", stacklevel=2)
        x = np.clip(x, 0.0, 1.0)
    angles = (x - 0.5) * 2.0 * np.pi
    return QaoaParams.from_vector(angles)


def from_params(params: QaoaParams) -> np.ndarray:
    """Inverse of to_params; angles outside [-pi, pi] are clipped with a warning."""
    angles = params.to_vector()
    if np.any(np.abs(angles) > np.pi):
        warnings.warn("angles outside [-pi, pi] clipped", stacklevel=2)
        angles = np.clip(angles, -np.pi, np.pi)
    return angles / (2.0 * np.pi) + 0.5


def search_region_box(active: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized-coordinate box of the active search region."""
    if active == REGION_A:
        return np.full(dim, 0.25), np.full(dim, 0.75)
    return np.zeros(dim), np.ones(dim)


def trust_region_box(
    center: np.ndarray,
    length: float,
    lengthscales: np.ndarray | None,
    shape: str = "ard",
) -> tuple[np.ndarray, np.ndarray]:
    """TR box around center, clipped to [0,1]^D.

    In "ard" shape the per-dimension sides are the base length scaled by the
    fitted lengthscales, normalized to unit geometric mean (TuRBO
    convention); None lengthscales (no fit yet) give an isotropic box.
    """
    center = np.asarray(center, dtype=float)
    dim = center.size
    if shape == "ard" and lengthscales is not None:
        w = lengthscales / lengthscales.mean()
        w = w / np.prod(w) ** (1.0 / dim)
        side = length * w
    else:
        side = np.full(dim, length)
    lo = np.clip(center - side / 2.0, 0.0, 1.0)
    hi = np.clip(center + side / 2.0, 0.0, 1.0)
    return lo, hi


def intersect_boxes(
    lo1: np.ndarray, hi1: np.ndarray, lo2: np.ndarray, hi2: np.ndarray
) -> tuple[np.ndarray, np.ndarray] | None:
    """Componentwise intersection, or None when empty."""
    lo = np.maximum(lo1, lo2)
    hi = np.minimum(hi1, hi2)
    if np.any(lo > hi):
        return None
    return lo, hi


def update_trust_region(tr: TrustRegionState, improved: bool, config: DarboConfig) -> TrustRegionState:
    """Success/failure counter bookkeeping and length adaptation.

    tau_s consecutive successes double the length (capped at Lmax); tau_f
    consecutive failures halve it; a length at or below Lmin is rescaled by
    16 instead of shrinking further.  Counters reset whenever a threshold
    fires, and a success resets the failure counter and vice versa.
    """
    t_s = tr.t_s + 1 if improved else 0
    t_f = 0 if improved else tr.t_f + 1
    length = tr.length
    if t_s >= config.tau_s:
        length = min(config.Lmax, 2.0 * length)
        t_s = t_f = 0
    elif t_f >= config.tau_f:
        length = length / 2.0
        t_s = t_f = 0
    if length <= config.Lmin:
        length = length * 16.0
    return TrustRegionState(length=length, t_s=t_s, t_f=t_f, center=tr.center)


def update_search_region(sr: SearchRegionState, improved: bool, config: DarboConfig) -> SearchRegionState:
    """Switch counter: kappa_s consecutive failures toggle A <-> B and reset."""
    if improved:
        return SearchRegionState(active=sr.active, c_s=0)
    c_s = sr.c_s + 1
    if c_s >= config.kappa_s:
        other = REGION_B if sr.active == REGION_A else REGION_A
        return SearchRegionState(active=other, c_s=0)
    return SearchRegionState(active=sr.active, c_s=c_s)


def generate_candidates(
    rng: np.random.Generator,
    lo: np.ndarray,
    hi: np.ndarray,
    base: np.ndarray,
    n_sobol: int,
    dim: int,
) -> np.ndarray:
    """Seeded Sobol points in [lo, hi], plus the TuRBO perturbation set.

    The perturbation set copies `base` (the incumbent, clipped into the box)
    and overwrites each coordinate with the Sobol draw with probability
    min(20/D, 1).  For D <= 20 that probability is 1, making the perturbed
    set identical to the Sobol set, so it is skipped.
    """
    seed = int(rng.integers(2**31 - 1))
    with warnings.catch_warnings():
        # candidate pools need not be balanced, power-of-two counts are not required
        warnings.simplefilter("ignore", UserWarning)
        unit = qmc.Sobol(d=dim, scramble=True, seed=seed).random(n_sobol)
    pts = lo + unit * (hi - lo)
    prob = min(20.0 / dim, 1.0)
    if prob >= 1.0:
        return pts
    mask = rng.random((n_sobol, dim)) <= prob
    bare = np.nonzero(~mask.any(axis=1))[0]
    if bare.size:
        mask[bare, rng.integers(0, dim, size=bare.size)] = True
    pert = np.tile(np.asarray(base, dtype=float), (n_sobol, 1))
    pert[mask] = pts[mask]
    return np.vstack([pts, pert])


def select_ucb(mu: np.ndarray, sigma: np.ndarray, beta: float) -> int:
    """Index of the maximizer of mu + beta * sigma."""
    return int(np.argmax(mu + beta * sigma))


def _fit_point_indices(
    state: DarboState, lo: np.ndarray, hi: np.ndarray, center: np.ndarray
) -> list[int]:
    """History points inside the box; all history when fewer than D+1 inside.

    Capped at config.max_fit_points nearest to the given TR center to bound
    the GP cost on long runs.
    """
    xs = np.array(state.history_x)
    inside = np.nonzero(np.all((xs >= lo) & (xs <= hi), axis=1))[0]
    if inside.size < state.dim + 1:
        inside = np.arange(len(state.history_x))
    cap = state.config.max_fit_points
    if inside.size > cap:
        d2 = np.sum((xs[inside] - center) ** 2, axis=1)
        inside = inside[np.argsort(d2, kind="stable")[:cap]]
    return sorted(int(i) for i in inside)


def _fit_surrogate(state: DarboState, idx: list[int]) -> GpModel:
    """Fit the GP on negated objective values at the selected history points."""
    cfg = state.config
    xs = np.array([state.history_x[i] for i in idx])
    ys = -np.array([state.history_y[i] for i in idx])
    cold = state.kernel is None or state.iteration % cfg.gp_refit_period == 0
    init = None if cold else state.kernel
    steps = cfg.gp_steps if cold else cfg.gp_warm_steps
    isotropic = cfg.tr_shape == "isotropic"
    return fit(xs, ys, init=init, steps=steps, isotropic=isotropic)


def init_state(dim: int, config: DarboConfig, objective_norm) -> DarboState:
    """Draw and evaluate the uniform initial point, with the published region defaults."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(config.seed)))
    x0 = rng.random(dim)
    y0 = float(objective_norm(x0))
    active = config.region_mode if config.region_mode in (REGION_A, REGION_B) else REGION_A
    return DarboState(
        config=config,
        dim=dim,
        rng=rng,
        history_x=[x0],
        history_y=[y0],
        tr=TrustRegionState(length=config.L0, t_s=0, t_f=0, center=x0.copy()),
        sr=SearchRegionState(active=active, c_s=0),
    )


def step(state: DarboState, objective_norm) -> DarboState:
    """One BO iteration; mutates and returns the state.

    The objective failure contract: if objective_norm raises, history and
    region states are unchanged (all updates commit after the evaluation
    returns); only the candidate-generation randomness has been consumed.
    """
    cfg = state.config
    sr_lo, sr_hi = search_region_box(state.sr.active, state.dim)
    ls = state.kernel.lengthscales if state.kernel is not None else None
    tr_lo, tr_hi = trust_region_box(state.tr.center, state.tr.length, ls, cfg.tr_shape)
    box = intersect_boxes(tr_lo, tr_hi, sr_lo, sr_hi)
    if box is None:
        # empty overlap: the trust region restarts as the whole active region
        # (committed to state only after the evaluation succeeds)
        side = float(sr_hi[0] - sr_lo[0])
        tr_cur = TrustRegionState(length=side, t_s=0, t_f=0, center=(sr_lo + sr_hi) / 2.0)
        box = (sr_lo, sr_hi)
    else:
        tr_cur = state.tr
    lo, hi = box

    idx = _fit_point_indices(state, lo, hi, tr_cur.center)
    model = _fit_surrogate(state, idx)

    n_sobol = cfg.n_candidates(state.dim)
    base = np.clip(tr_cur.center, lo, hi)
    cand = generate_candidates(state.rng, lo, hi, base, n_sobol, state.dim)
    mu, var = predict(model, cand)
    pick = select_ucb(mu, np.sqrt(var), cfg.ucb_beta)
    x_new = cand[pick]

    y_new = float(objective_norm(x_new))

    improved = y_new < state.best_observed
    state.history_x.append(x_new)
    state.history_y.append(y_new)
    new_idx = idx + [len(state.history_x) - 1]

    tr = update_trust_region(tr_cur, improved, cfg)
    if cfg.region_mode == "adaptive":
        sr = update_search_region(state.sr, improved, cfg)
        if sr.active != state.sr.active and cfg.reset_length_on_switch:
            tr = replace(tr, length=cfg.L0)
        state.sr = sr

    # recenter on the posterior-mean incumbent among the fit set plus the new point
    pts = np.array([state.history_x[i] for i in new_idx])
    mu_at, _ = predict(model, pts)
    center = pts[int(np.argmax(mu_at))]  # model is on -y: max mean = min objective
    state.tr = replace(tr, center=center)

    state.kernel = model.params
    state.model = model
    state.fit_indices = new_idx
    state.iteration += 1
    return state


def incumbent(state: DarboState) -> tuple[np.ndarray, float]:
    """Observed point with the smallest posterior mean under the last surrogate.

    Falls back to the best observed value when no model has been fit yet or
    the model is degenerate.
    """
    if state.model is not None and state.fit_indices:
        pts = np.array([state.history_x[i] for i in state.fit_indices])
        mu, _ = predict(state.model, pts)
        if np.all(np.isfinite(mu)):
            k = int(np.argmax(mu))
            return pts[k].copy(), float(-mu[k])
    k = int(np.argmin(state.history_y))
    return state.history_x[k].copy(), float(state.history_y[k])


def minimize_normalized(objective_norm, dim: int, config: DarboConfig) -> tuple[OptimizerTrace, DarboState]:
    """Full run in normalized coordinates; max_iter total objective evaluations."""
    state = init_state(dim, config, objective_norm)
    rec = _TraceRecorder()
    rec.record(state.history_x[0], state.history_y[0])
    while len(state.history_y) < config.max_iter:
        step(state, objective_norm)
        rec.record(state.history_x[-1], state.history_y[-1])
    x_inc, _ = incumbent(state)
    return rec.trace(x_inc), state


def darbo_minimize(objective, p: int, config: DarboConfig = DarboConfig()) -> OptimizerTrace:
    """Minimize an objective taking QaoaParams; returns angles in params_final."""
    trace, _ = minimize_normalized(lambda x: objective(to_params(x)), 2 * p, config)
    return OptimizerTrace(
        evals=trace.evals,
        raw=trace.raw,
        objective=trace.objective,
        params_final=to_params(trace.params_final).to_vector(),
    )
