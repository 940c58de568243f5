"""Gaussian-process regression with a Matern-5/2 ARD kernel.

The model is deliberately small: exact GP, Cholesky factorization, analytic
log-marginal-likelihood gradients, and a first-order Adam ascent over
log-hyperparameters.  Targets are standardized to zero mean and unit
variance inside fit (toggleable); inputs are expected in normalized
coordinates already.

Hyperparameters live in log space for unconstrained optimization and are
clamped to fixed bounds after every step: lengthscales in [0.005, 10],
signal standard deviation in [0.05, 20], noise standard deviation in
[1e-6, 1] (standardized units).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

LENGTHSCALE_BOUNDS = (0.005, 10.0)
SIGMA_V_BOUNDS = (0.05, 20.0)
SIGMA_N_BOUNDS = (1e-6, 1.0)

_JITTER_START = 1e-8
_JITTER_MAX = 1e-4

_ADAM_LR = 0.1
_ADAM_B1 = 0.9
_ADAM_B2 = 0.999
_ADAM_EPS = 1e-8

_SQRT5 = np.sqrt(5.0)


@dataclass(frozen=True)
class KernelParams:
    """Matern-5/2 hyperparameters, stored as logs.

    sigma_v is the signal standard deviation, lengthscales one positive
    scale per input dimension, sigma_n the observation noise standard
    deviation.
    """

    log_sigma_v: float
    log_lengthscales: tuple[float, ...]
    log_sigma_n: float

    @property
    def sigma_v(self) -> float:
        return float(np.exp(self.log_sigma_v))

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(np.array(self.log_lengthscales))

    @property
    def sigma_n(self) -> float:
        return float(np.exp(self.log_sigma_n))

    @classmethod
    def create(cls, sigma_v: float, lengthscales, sigma_n: float) -> "KernelParams":
        ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
        if sigma_v <= 0 or sigma_n < 0 or np.any(ls <= 0):
            raise ValueError("kernel scales must be positive (sigma_n may be tiny, not negative)")
        return cls(
            log_sigma_v=float(np.log(sigma_v)),
            log_lengthscales=tuple(np.log(ls)),
            log_sigma_n=float(np.log(max(sigma_n, SIGMA_N_BOUNDS[0]))),
        )

    @classmethod
    def default(cls, dim: int) -> "KernelParams":
        return cls.create(sigma_v=1.0, lengthscales=np.full(dim, 0.5), sigma_n=0.1)

    def clamped(self) -> "KernelParams":
        lo_l, hi_l = np.log(LENGTHSCALE_BOUNDS[0]), np.log(LENGTHSCALE_BOUNDS[1])
        lo_v, hi_v = np.log(SIGMA_V_BOUNDS[0]), np.log(SIGMA_V_BOUNDS[1])
        lo_n, hi_n = np.log(SIGMA_N_BOUNDS[0]), np.log(SIGMA_N_BOUNDS[1])
        return KernelParams(
            log_sigma_v=float(np.clip(self.log_sigma_v, lo_v, hi_v)),
            log_lengthscales=tuple(np.clip(np.array(self.log_lengthscales), lo_l, hi_l)),
            log_sigma_n=float(np.clip(self.log_sigma_n, lo_n, hi_n)),
        )


def matern52(x: np.ndarray, x2: np.ndarray, params: KernelParams) -> float:
    """Kernel value sigma_v^2 (1 + sqrt5 r + 5/3 r^2) exp(-sqrt5 r) for one pair."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {x2.shape}")
    r2 = float(np.sum((x - x2) ** 2 / params.lengthscales**2))
    r = np.sqrt(r2)
    return params.sigma_v**2 * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)


def _cross_kernel(params: KernelParams, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    # r^2 via the expansion |a-b|^2 = |a|^2 + |b|^2 - 2 a.b, one GEMM instead
    # of an (N, M, D) temporary; clip the roundoff negatives
    sa = xa / params.lengthscales
    sb = xb / params.lengthscales
    r2 = (sa * sa).sum(axis=1)[:, None] + (sb * sb).sum(axis=1)[None, :] - 2.0 * (sa @ sb.T)
    r2 = np.maximum(r2, 0.0)
    r = np.sqrt(r2)
    return params.sigma_v**2 * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)


@dataclass(frozen=True)
class GpModel:
    """Fitted GP: training data, hyperparameters, cached Cholesky factor."""

    train_x: np.ndarray
    train_y: np.ndarray  # standardized targets
    params: KernelParams
    chol: np.ndarray  # lower Cholesky of K + (sigma_n^2 + jitter) I
    alpha: np.ndarray  # K^{-1} y (standardized)
    y_mean: float
    y_std: float

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]


def _sq_diffs(x: np.ndarray) -> np.ndarray:
    """Pairwise per-dimension squared differences, shape (N, N, D)."""
    d = x[:, None, :] - x[None, :, :]
    return d * d


def _kernel_pieces(sq: np.ndarray, params: KernelParams):
    """K (noise-free), r, and the shared radial factor for gradients."""
    ls2 = params.lengthscales**2
    r2 = np.tensordot(sq, 1.0 / ls2, axes=([2], [0]))
    r = np.sqrt(np.maximum(r2, 0.0))
    e = np.exp(-_SQRT5 * r)
    k = params.sigma_v**2 * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * e
    radial = params.sigma_v**2 * (5.0 / 3.0) * (1.0 + _SQRT5 * r) * e
    return k, radial


def _chol_with_jitter(kmat: np.ndarray, sigma_n: float):
    """Cholesky of kmat + sigma_n^2 I, escalating jitter on failure."""
    n = kmat.shape[0]
    eye = np.eye(n)
    jitter = 0.0
    base = kmat + sigma_n**2 * eye
    while True:
        try:
            cf = cho_factor(base + jitter * eye, lower=True, check_finite=False)
            return np.tril(cf[0]), jitter
        except np.linalg.LinAlgError:
            jitter = _JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_MAX:
                raise np.linalg.LinAlgError(
                    f"Cholesky failed even with jitter {_JITTER_MAX:g}; "
                    "training inputs may be degenerate"
                )


def _lml_and_grad(sq: np.ndarray, y: np.ndarray, params: KernelParams, isotropic: bool):
    """Log marginal likelihood and gradient w.r.t. log-hyperparameters.

    Gradient layout: [log_sigma_v, log_l_0 .. log_l_{D-1}, log_sigma_n]
    (single lengthscale entry when isotropic).
    """
    n = y.size
    k, radial = _kernel_pieces(sq, params)
    lower, _ = _chol_with_jitter(k, params.sigma_n)
    alpha = cho_solve((lower, True), y, check_finite=False)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(lower))))
        - 0.5 * n * np.log(2.0 * np.pi)
    )
    kinv = cho_solve((lower, True), np.eye(n), check_finite=False)
    a_mat = np.outer(alpha, alpha) - kinv

    ls2 = params.lengthscales**2
    # d k / d log l_d = radial * sq_d / l_d^2; all dims at once via one GEMV
    # over the flattened pair axis
    weighted = (a_mat * radial).reshape(-1)
    per_dim = weighted @ sq.reshape(-1, sq.shape[2])
    if isotropic:
        grad_ls = [0.5 * float(per_dim @ (1.0 / ls2))]
    else:
        grad_ls = list(0.5 * per_dim / ls2)
    grad_v = 0.5 * float(np.sum(a_mat * (2.0 * k)))
    grad_n = 0.5 * float(np.trace(a_mat)) * 2.0 * params.sigma_n**2
    return lml, np.array([grad_v, *grad_ls, grad_n]), lower, alpha


def log_marginal_likelihood(model: GpModel, isotropic: bool = False):
    """LML of the stored (standardized) training data and its gradient."""
    sq = _sq_diffs(model.train_x)
    lml, grad, _, _ = _lml_and_grad(sq, model.train_y, model.params, isotropic)
    return lml, grad


def _params_from_vector(theta: np.ndarray, dim: int, isotropic: bool) -> KernelParams:
    if isotropic:
        logl = (float(theta[1]),) * dim
    else:
        logl = tuple(float(v) for v in theta[1 : 1 + dim])
    return KernelParams(log_sigma_v=float(theta[0]), log_lengthscales=logl, log_sigma_n=float(theta[-1])).clamped()


def _params_to_vector(params: KernelParams, isotropic: bool) -> np.ndarray:
    if isotropic:
        return np.array([params.log_sigma_v, params.log_lengthscales[0], params.log_sigma_n])
    return np.array([params.log_sigma_v, *params.log_lengthscales, params.log_sigma_n])


def fit(
    train_x: np.ndarray,
    train_y: np.ndarray,
    init: KernelParams | None = None,
    steps: int = 50,
    isotropic: bool = False,
    standardize: bool = True,
) -> GpModel:
    """Maximize log marginal likelihood by Adam ascent in log-hyperparameter space.

    Tracks the best hyperparameters seen, so the returned model's LML is
    never below the initial one.  steps = 0 returns a model at the clamped
    init parameters with a valid factorization.
    """
    x = np.atleast_2d(np.asarray(train_x, dtype=float))
    y = np.asarray(train_y, dtype=float).ravel()
    n, dim = x.shape
    if y.size != n:
        raise ValueError(f"{n} inputs but {y.size} targets")
    if n < 1:
        raise ValueError("need at least one training point")

    if standardize:
        y_mean = float(y.mean())
        y_std = float(y.std())
        if y_std < 1e-12:
            y_std = 1.0
    else:
        y_mean, y_std = 0.0, 1.0
    ys = (y - y_mean) / y_std

    params = (init if init is not None else KernelParams.default(dim)).clamped()
    if len(params.log_lengthscales) != dim:
        raise ValueError(f"init has {len(params.log_lengthscales)} lengthscales, need {dim}")

    sq = _sq_diffs(x)
    theta = _params_to_vector(params, isotropic)
    best_theta = theta.copy()
    best_lml = -np.inf
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t in range(steps + 1):
        cur = _params_from_vector(theta, dim, isotropic)
        lml, grad, _, _ = _lml_and_grad(sq, ys, cur, isotropic)
        if lml > best_lml:
            best_lml = lml
            best_theta = _params_to_vector(cur, isotropic)
        if t == steps:
            break
        m = _ADAM_B1 * m + (1.0 - _ADAM_B1) * grad
        v = _ADAM_B2 * v + (1.0 - _ADAM_B2) * grad**2
        mhat = m / (1.0 - _ADAM_B1 ** (t + 1))
        vhat = v / (1.0 - _ADAM_B2 ** (t + 1))
        theta = theta + _ADAM_LR * mhat / (np.sqrt(vhat) + _ADAM_EPS)
        theta = _params_to_vector(_params_from_vector(theta, dim, isotropic), isotropic)

    final = _params_from_vector(best_theta, dim, isotropic)
    k, _ = _kernel_pieces(sq, final)
    lower, _ = _chol_with_jitter(k, final.sigma_n)
    alpha = cho_solve((lower, True), ys, check_finite=False)
    return GpModel(
        train_x=x, train_y=ys, params=final, chol=lower, alpha=alpha, y_mean=y_mean, y_std=y_std
    )


def predict(model: GpModel, x: np.ndarray) -> tuple[float, float] | tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance, de-standardized, variance floored at 0.

    Accepts a single D-vector (returns floats) or an (M, D) batch
    (returns arrays).
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    kx = _cross_kernel(model.params, model.train_x, pts)  # (N, M)
    mu_s = kx.T @ model.alpha
    vmat = solve_triangular(model.chol, kx, lower=True, check_finite=False)
    var_s = model.params.sigma_v**2 - np.einsum("nm,nm->m", vmat, vmat)
    var_s = np.maximum(var_s, 0.0)
    mu = model.y_mean + model.y_std * mu_s
    var = model.y_std**2 * var_s
    if single:
        return float(mu[0]), float(var[0])
    return mu, var
