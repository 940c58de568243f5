"""Measurement-error mitigation and zero-noise extrapolation.

Readout mitigation inverts a classical confusion model fitted (or known)
for the device.  The local model stores one 2x2 column-stochastic matrix
per qubit and applies the tensor product of the individual inverses, so the
2^n x 2^n map is never materialized.  The output is in general a
quasi-distribution with negative entries; expectation values are computed
on it as-is, because clipping reintroduces the bias that mitigation just
removed.  Only success-probability style reports, which need a genuine
distribution, go through the simplex projection here.

Zero-noise extrapolation fits a polynomial through (fold factor, estimate)
pairs and evaluates it at fold 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from qaoabench.noise_sim import NoiseModel, sample_readout_calibration
from qaoabench.simulator import ShotSample, counts_to_vector


@dataclass(frozen=True)
class ConfusionSpec:
    """Readout confusion model: per-qubit 2x2 matrices or one full matrix.

    Local form: `matrices` has shape (n, 2, 2), matrices[q][obs, true].
    Global form: `matrices` has shape (2^n, 2^n), [obs_index, true_index].
    Columns sum to one in both forms.
    """

    n: int
    matrices: np.ndarray
    local: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=float)
        if self.local:
            if m.shape != (self.n, 2, 2):
                raise ValueError(f"local confusion needs shape ({self.n}, 2, 2), got {m.shape}")
        else:
            dim = 1 << self.n
            if m.shape != (dim, dim):
                raise ValueError(f"global confusion needs shape ({dim}, {dim}), got {m.shape}")
        if not np.allclose(m.sum(axis=-2), 1.0, atol=1e-9):
            raise ValueError("confusion matrix columns must sum to 1")
        object.__setattr__(self, "matrices", m)

    @classmethod
    def from_noise_model(cls, n: int, noise: NoiseModel) -> "ConfusionSpec":
        """Exact local confusion taken straight from the noise model parameters."""
        mats = np.stack([ro.confusion_matrix() for ro in noise.readout_for(n)])
        return cls(n=n, matrices=mats, local=True)

    def to_json_dict(self) -> dict:
        return {"n": self.n, "local": self.local, "matrices": self.matrices.tolist()}

    @classmethod
    def from_json_dict(cls, payload: dict) -> "ConfusionSpec":
        return cls(
            n=int(payload["n"]),
            matrices=np.asarray(payload["matrices"], dtype=float),
            local=bool(payload["local"]),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    @classmethod
    def load(cls, path: str) -> "ConfusionSpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def learn_confusion(n: int, noise: NoiseModel, shots_per_state: int, seed: int) -> ConfusionSpec:
    """Estimate a local confusion model from calibration circuits.

    Prepares |0...0> and |1...1> and reads the per-qubit flip rates off the
    marginals.  Two circuits suffice for the local model: qubit q's p01 is
    its marginal 1-rate under the all-zeros preparation, p10 the marginal
    0-rate under all-ones.
    """
    if shots_per_state < 1:
        raise ValueError("shots_per_state must be positive")
    ss = np.random.SeedSequence([int(seed), 0xCA1])
    s0, s1 = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    zeros = sample_readout_calibration("0" * n, noise, shots_per_state, s0)
    ones = sample_readout_calibration("1" * n, noise, shots_per_state, s1)

    def marginal_one_rates(sample: ShotSample) -> np.ndarray:
        rates = np.zeros(n)
        for bits, c in sample.counts.items():
            for q, b in enumerate(bits):
                if b == "1":
                    rates[q] += c
        return rates / sample.m

    p01 = marginal_one_rates(zeros)
    p10 = 1.0 - marginal_one_rates(ones)
    mats = np.empty((n, 2, 2))
    mats[:, 0, 0] = 1.0 - p01
    mats[:, 1, 0] = p01
    mats[:, 0, 1] = p10
    mats[:, 1, 1] = 1.0 - p10
    return ConfusionSpec(n=n, matrices=mats, local=True)


def _local_inverses(spec: ConfusionSpec) -> np.ndarray:
    invs = np.empty_like(spec.matrices)
    for q in range(spec.n):
        m = spec.matrices[q]
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) < 1e-12:
            raise np.linalg.LinAlgError(
                f"confusion matrix for qubit {q} is singular (flip rates sum to 1)"
            )
        invs[q] = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    return invs


def mitigate_readout(observed: np.ndarray | ShotSample, spec: ConfusionSpec) -> np.ndarray:
    """Invert the confusion model on an observed distribution.

    Returns a quasi-distribution: entries sum to 1 but may be negative.
    Raises numpy.linalg.LinAlgError when the model is not invertible.
    """
    if isinstance(observed, ShotSample):
        vec = counts_to_vector(observed.counts, spec.n)
    else:
        vec = np.asarray(observed, dtype=float).copy()
    dim = 1 << spec.n
    if vec.size != dim:
        raise ValueError(f"distribution length {vec.size} does not match n = {spec.n}")
    if spec.local:
        invs = _local_inverses(spec)
        for q in range(spec.n):
            shaped = vec.reshape(1 << q, 2, -1)
            v0 = shaped[:, 0, :].copy()
            v1 = shaped[:, 1, :]
            inv = invs[q]
            shaped[:, 0, :] = inv[0, 0] * v0 + inv[0, 1] * v1
            shaped[:, 1, :] = inv[1, 0] * v0 + inv[1, 1] * v1
        return vec
    return np.linalg.solve(spec.matrices, vec)


def project_to_simplex(quasi: np.ndarray) -> np.ndarray:
    """Euclidean projection of a quasi-distribution onto the probability simplex.

    Use only for reports that need genuine probabilities (success ratios);
    expectation values should be taken on the raw quasi-distribution.
    """
    v = np.asarray(quasi, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho_idx = np.nonzero(u * np.arange(1, v.size + 1) > css)[0][-1]
    theta = css[rho_idx] / (rho_idx + 1.0)
    return np.maximum(v - theta, 0.0)


def zne_extrapolate(folds: list[int] | np.ndarray, values: list[float] | np.ndarray, degree: int) -> float:
    """Polynomial extrapolation of noisy estimates to zero noise.

    Fits `values` against `folds` with a degree-`degree` polynomial and
    returns its value at fold 0.  The fit is exact when the number of
    points equals degree + 1.
    """
    folds = np.asarray(folds, dtype=float)
    values = np.asarray(values, dtype=float)
    if folds.size != values.size:
        raise ValueError(f"got {folds.size} folds but {values.size} values")
    if folds.size < degree + 1:
        raise ValueError(f"degree {degree} fit needs at least {degree + 1} points, got {folds.size}")
    coeffs = np.polynomial.polynomial.polyfit(folds, values, deg=degree)
    return float(coeffs[0])
