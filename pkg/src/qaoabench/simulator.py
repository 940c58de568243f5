"""Exact statevector simulation of the QAOA ansatz and shot sampling.

The circuit is H on every qubit followed by p layers of

    exp(-i * gamma_k * sum_edges w_ij Z_i Z_j)   (cost phase, diagonal)
    exp(-i * beta_k  * sum_i X_i)                (mixer, per-qubit RX sweep)

The cost operator's diagonal is precomputed once per problem and cached; it
is reused by the expectation, by shot estimation, and by the noisy-mode
simulator.  Amplitude index k corresponds to the bitstring format(k, "0nb")
with qubit 0 leftmost.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from qaoabench.problem import (
    BruteForceResult,
    QuboProblem,
    bitstring_to_index,
    cost_over_all_bitstrings,
    index_to_bitstring,
)

STATEVECTOR_MAX_N = 26


@dataclass(frozen=True)
class QaoaParams:
    """Depth-p angle set (gamma_1..gamma_p, beta_1..beta_p)."""

    gamma: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.gamma) != len(self.beta) or not self.gamma:
            raise ValueError(
                f"gamma and beta must have equal positive length, got {len(self.gamma)} and {len(self.beta)}"
            )

    @property
    def p(self) -> int:
        return len(self.gamma)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "QaoaParams":
        """Split a flat 2p-vector into (gamma, beta)."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2 != 0 or x.size == 0:
            raise ValueError(f"parameter vector must have even positive length, got shape {x.shape}")
        p = x.size // 2
        return cls(gamma=tuple(x[:p]), beta=tuple(x[p:]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gamma, self.beta])


@dataclass(frozen=True)
class Statevector:
    """Pure state on n qubits; amplitudes indexed by bitstring value."""

    n: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ShotSample:
    """m measured bitstrings, aggregated as counts."""

    m: int
    counts: dict[str, int]

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.m:
            raise ValueError(f"counts sum to {total}, expected m = {self.m}")

    def to_json_dict(self) -> dict:
        return {"m": self.m, "counts": dict(self.counts)}

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "ShotSample":
        return cls(m=int(payload["m"]), counts={str(k): int(v) for k, v in payload["counts"].items()})


@functools.lru_cache(maxsize=32)
def cost_diagonal(problem: QuboProblem) -> np.ndarray:
    """Diagonal of sum_edges w_ij Z_i Z_j in the computational basis (cached)."""
    return cost_over_all_bitstrings(problem)


def _check_size(n: int) -> None:
    if n > STATEVECTOR_MAX_N:
        raise ValueError(f"statevector simulation supports n <= {STATEVECTOR_MAX_N}, got n = {n}")


def _apply_rx_sweep(amps: np.ndarray, n: int, beta: float) -> np.ndarray:
    """Apply exp(-i beta X) on every qubit."""
    c = np.cos(beta)
    s = -1j * np.sin(beta)
    for q in range(n):
        shaped = amps.reshape(1 << q, 2, -1)
        a0 = shaped[:, 0, :].copy()
        a1 = shaped[:, 1, :]
        shaped[:, 0, :] = c * a0 + s * a1
        shaped[:, 1, :] = s * a0 + c * a1
    return amps


def build_state(problem: QuboProblem, params: QaoaParams) -> Statevector:
    """Run the depth-p ansatz and return the final statevector."""
    n = problem.n
    _check_size(n)
    diag = cost_diagonal(problem)
    amps = np.full(1 << n, 2.0 ** (-n / 2.0), dtype=np.complex128)
    for gamma, beta in zip(params.gamma, params.beta):
        amps *= np.exp(-1j * gamma * diag)
        amps = _apply_rx_sweep(amps, n, beta)
    return Statevector(n=n, amplitudes=amps)


def exact_expectation(problem: QuboProblem, params: QaoaParams) -> float:
    """<psi| sum w_ij Z_i Z_j |psi> computed from probabilities and the cost diagonal."""
    state = build_state(problem, params)
    return float(np.real(np.dot(state.probabilities(), cost_diagonal(problem))))


def expectation_of_distribution(problem: QuboProblem, dist: np.ndarray) -> float:
    """Objective expectation under a (quasi-)distribution over bitstring indices.

    Works for quasi-distributions with negative entries; no clipping is applied.
    """
    dist = np.asarray(dist, dtype=float)
    diag = cost_diagonal(problem)
    if dist.shape != diag.shape:
        raise ValueError(f"distribution has shape {dist.shape}, expected {diag.shape}")
    return float(np.dot(dist, diag))


def counts_to_vector(counts: Mapping[str, int], n: int) -> np.ndarray:
    """Empirical frequency vector over all 2^n bitstring indices."""
    vec = np.zeros(1 << n, dtype=float)
    total = 0
    for bits, c in counts.items():
        if len(bits) != n:
            raise ValueError(f"bitstring {bits!r} has length {len(bits)}, expected {n}")
        vec[bitstring_to_index(bits)] += c
        total += c
    if total == 0:
        raise ValueError("empty counts")
    return vec / total


def sample_indices(probabilities: np.ndarray, m: int, seed: int) -> np.ndarray:
    """m i.i.d. basis-state indices from a probability vector.

    Inverse-CDF sampling with a counter-based (Philox) generator, so runs
    with distinct seeds are independent and each seed is reproducible.
    """
    if m < 1:
        raise ValueError(f"shot count must be positive, got m = {m}")
    cdf = np.cumsum(probabilities)
    cdf /= cdf[-1]
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.random(m)
    return np.searchsorted(cdf, u, side="right").clip(0, probabilities.size - 1)


def sample_bitstrings(state: Statevector, m: int, seed: int) -> ShotSample:
    """Measure the state m times in the computational basis."""
    idx = sample_indices(state.probabilities(), m, seed)
    return ShotSample(m=m, counts=_indices_to_counts(idx, state.n))


def _indices_to_counts(indices: np.ndarray, n: int) -> dict[str, int]:
    unique, counts = np.unique(indices, return_counts=True)
    return {index_to_bitstring(int(k), n): int(c) for k, c in zip(unique, counts)}


def shot_estimate(problem: QuboProblem, sample: ShotSample) -> float:
    """Finite-shot objective estimate (1/m) sum_shots sum_edges w_ij z_i z_j."""
    return expectation_of_distribution(problem, counts_to_vector(sample.counts, problem.n))


def success_ratio(
    source: Union[Statevector, ShotSample, Mapping[str, float], np.ndarray],
    oracle: BruteForceResult,
) -> float:
    """Probability (or empirical frequency) of measuring an optimal bitstring.

    Accepts a Statevector, a ShotSample, a mapping bitstring -> probability,
    or a probability vector over bitstring indices.
    """
    n = len(next(iter(oracle.optimal_bitstrings)))
    if isinstance(source, Statevector):
        probs = source.probabilities()
    elif isinstance(source, ShotSample):
        probs = counts_to_vector(source.counts, n)
    elif isinstance(source, Mapping):
        probs = np.zeros(1 << n)
        for bits, p in source.items():
            probs[bitstring_to_index(bits)] += p
    else:
        probs = np.asarray(source, dtype=float)
    return float(sum(probs[bitstring_to_index(b)] for b in oracle.optimal_bitstrings))
