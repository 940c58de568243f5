"""Density-matrix simulation of the QAOA circuit under a configurable noise model.

Noise model:

* A two-qubit depolarizing channel after every application of a two-qubit
  cost interaction exp(-i gamma w_ij Z_i Z_j):

      E(rho) = (1 - q) rho + q * (I_4 / 4) (x) Tr_ij(rho)

  with q = two_qubit_depol.  Single-qubit mixer layers are ideal; two-qubit
  gates dominate hardware error budgets, and attaching noise only to them
  keeps the fold-factor -> error-rate mapping clean.

* A classical per-qubit readout channel applied at sampling time only:
  a true bit 0 is read as 1 with probability p01, a true 1 as 0 with
  probability p10.

Gate folding for noise amplification replaces each cost interaction U by the
sequence U, U^dag, U, ... of odd length `fold`, with the depolarizing channel
applied after each element.  The folded sequence is logically the identity
beyond a single U, so a fold of f multiplies the per-interaction noise count
by f without changing the ideal circuit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qaoabench.problem import QuboProblem
from qaoabench.simulator import QaoaParams, ShotSample, _indices_to_counts, cost_diagonal

DENSITY_MAX_N = 10


@dataclass(frozen=True)
class ReadoutError:
    """Per-qubit classical bit-flip probabilities."""

    p01: float  # P(read 1 | true 0)
    p10: float  # P(read 0 | true 1)

    def __post_init__(self):
        for name, p in (("p01", self.p01), ("p10", self.p10)):
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {p}")

    def confusion_matrix(self) -> np.ndarray:
        """Column-stochastic 2x2 matrix, column = true bit, row = observed bit."""
        return np.array([[1.0 - self.p01, self.p10], [self.p01, 1.0 - self.p10]])


@dataclass(frozen=True)
class NoiseModel:
    """Two-qubit depolarizing strength plus per-qubit readout errors.

    `readout` is either a single ReadoutError applied to every qubit or a
    tuple with one entry per qubit.
    """

    two_qubit_depol: float = 0.01
    readout: ReadoutError | tuple[ReadoutError, ...] = field(default_factory=lambda: ReadoutError(0.1, 0.1))

    def __post_init__(self):
        if not 0.0 <= self.two_qubit_depol < 1.0:
            raise ValueError(f"two_qubit_depol must lie in [0, 1), got {self.two_qubit_depol}")

    def readout_for(self, n: int) -> tuple[ReadoutError, ...]:
        if isinstance(self.readout, ReadoutError):
            return (self.readout,) * n
        if len(self.readout) != n:
            raise ValueError(f"noise model has {len(self.readout)} readout entries, need {n}")
        return tuple(self.readout)

    @classmethod
    def from_json_dict(cls, payload: dict) -> "NoiseModel":
        ro = payload.get("readout", {"p01": 0.1, "p10": 0.1})
        if isinstance(ro, list):
            readout: ReadoutError | tuple[ReadoutError, ...] = tuple(
                ReadoutError(float(r["p01"]), float(r["p10"])) for r in ro
            )
        else:
            readout = ReadoutError(float(ro["p01"]), float(ro["p10"]))
        return cls(two_qubit_depol=float(payload.get("two_qubit_depol", 0.01)), readout=readout)

    def to_json_dict(self) -> dict:
        if isinstance(self.readout, ReadoutError):
            ro: object = {"p01": self.readout.p01, "p10": self.readout.p10}
        else:
            ro = [{"p01": r.p01, "p10": r.p10} for r in self.readout]
        return {"two_qubit_depol": self.two_qubit_depol, "readout": ro}


@dataclass(frozen=True)
class FoldFactor:
    """Odd positive gate-folding factor (1 = no amplification)."""

    value: int

    def __post_init__(self):
        if self.value < 1 or self.value % 2 == 0:
            raise ValueError(f"fold factor must be an odd positive integer, got {self.value}")


@dataclass(frozen=True)
class DensityState:
    """Mixed state on n qubits as a 2^n x 2^n density matrix."""

    n: int
    matrix: np.ndarray

    def diagonal_probabilities(self) -> np.ndarray:
        probs = np.real(np.diag(self.matrix)).copy()
        probs[probs < 0.0] = 0.0
        return probs / probs.sum()


def _check_size(n: int) -> None:
    if n > DENSITY_MAX_N:
        raise ValueError(f"density-matrix simulation supports n <= {DENSITY_MAX_N}, got n = {n}")


def _edge_zz(n: int, i: int, j: int) -> np.ndarray:
    """z_i * z_j over all basis indices."""
    k = np.arange(1 << n, dtype=np.uint64)
    parity = ((k >> np.uint64(n - 1 - i)) ^ (k >> np.uint64(n - 1 - j))) & np.uint64(1)
    return 1.0 - 2.0 * parity.astype(np.float64)


def _apply_diagonal(rho: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """rho -> D rho D^dag for a diagonal unitary with the given phase vector."""
    return rho * phases[:, None] * np.conj(phases)[None, :]


def _apply_single_qubit(rho: np.ndarray, n: int, gate: np.ndarray, qubit: int) -> np.ndarray:
    """rho -> (U_q rho U_q^dag) for a 2x2 gate on one qubit."""
    t = rho.reshape((2,) * (2 * n))
    t = np.tensordot(gate, t, axes=([1], [qubit]))
    t = np.moveaxis(t, 0, qubit)
    t = np.tensordot(np.conj(gate), t, axes=([1], [n + qubit]))
    t = np.moveaxis(t, 0, n + qubit)
    return t.reshape(rho.shape)


def _depolarize_pair(rho: np.ndarray, n: int, i: int, j: int, q: float) -> np.ndarray:
    """Two-qubit depolarizing channel on qubits (i, j) in replacement form."""
    if q == 0.0:
        return rho
    t = rho.reshape((2,) * (2 * n))
    moved = np.moveaxis(t, [i, j, n + i, n + j], [0, 1, 2, 3])
    rest_shape = moved.shape[4:]
    flat = moved.reshape(4, 4, -1)
    traced = flat[0, 0] + flat[1, 1] + flat[2, 2] + flat[3, 3]
    mixed = np.zeros_like(flat)
    for d in range(4):
        mixed[d, d] = traced / 4.0
    out = (1.0 - q) * flat + q * mixed
    out = np.moveaxis(out.reshape((2, 2, 2, 2) + rest_shape), [0, 1, 2, 3], [i, j, n + i, n + j])
    return out.reshape(rho.shape)


def build_noisy_state(
    problem: QuboProblem,
    params: QaoaParams,
    noise: NoiseModel,
    fold: FoldFactor = FoldFactor(1),
) -> DensityState:
    """Run the ansatz as a channel circuit with folded cost interactions.

    Each edge interaction is applied fold.value times, alternating U and
    U^dag, with the depolarizing channel after every application.  Readout
    noise is not applied here; it belongs to the sampling step.
    """
    n = problem.n
    _check_size(n)
    dim = 1 << n
    plus = np.full(dim, 2.0 ** (-n / 2.0))
    rho = np.outer(plus, plus).astype(np.complex128)
    q = noise.two_qubit_depol
    for gamma, beta in zip(params.gamma, params.beta):
        for i, j, w in problem.graph.edges:
            phases = np.exp(-1j * gamma * w * _edge_zz(n, i, j))
            for rep in range(fold.value):
                rho = _apply_diagonal(rho, phases if rep % 2 == 0 else np.conj(phases))
                rho = _depolarize_pair(rho, n, i, j, q)
        c, s = np.cos(beta), np.sin(beta)
        rx = np.array([[c, -1j * s], [-1j * s, c]])
        for qubit in range(n):
            rho = _apply_single_qubit(rho, n, rx, qubit)
    return DensityState(n=n, matrix=rho)


def noisy_expectation(
    problem: QuboProblem,
    params: QaoaParams,
    noise: NoiseModel,
    fold: FoldFactor = FoldFactor(1),
) -> float:
    """Objective expectation under the noisy circuit (no readout error)."""
    state = build_noisy_state(problem, params, noise, fold)
    diag = np.real(np.diag(state.matrix))
    return float(np.dot(diag, cost_diagonal(problem)))


def apply_readout_channel(probabilities: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Push a distribution over bitstring indices through the readout confusion map.

    The channel is a tensor product of per-qubit 2x2 column-stochastic
    matrices, applied without materializing the 2^n x 2^n map.
    """
    probs = np.asarray(probabilities, dtype=float)
    n = int(np.log2(probs.size))
    if 1 << n != probs.size:
        raise ValueError(f"distribution length {probs.size} is not a power of two")
    out = probs.copy()
    for qubit, ro in enumerate(noise.readout_for(n)):
        shaped = out.reshape(1 << qubit, 2, -1)
        v0 = shaped[:, 0, :].copy()
        v1 = shaped[:, 1, :]
        shaped[:, 0, :] = (1.0 - ro.p01) * v0 + ro.p10 * v1
        shaped[:, 1, :] = ro.p01 * v0 + (1.0 - ro.p10) * v1
    return out


def sample_noisy(
    problem: QuboProblem,
    params: QaoaParams,
    noise: NoiseModel,
    fold: FoldFactor,
    m: int,
    seed: int,
) -> ShotSample:
    """Sample the noisy state's diagonal, then flip each bit through the readout channel."""
    if m < 1:
        raise ValueError(f"shot count must be positive, got m = {m}")
    n = problem.n
    state = build_noisy_state(problem, params, noise, fold)
    probs = state.diagonal_probabilities()
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(m), side="right").clip(0, probs.size - 1)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    flip_prob = np.empty((m, n))
    for qubit, ro in enumerate(noise.readout_for(n)):
        flip_prob[:, qubit] = np.where(bits[:, qubit] == 0, ro.p01, ro.p10)
    flipped = bits ^ (rng.random((m, n)) < flip_prob)
    observed = flipped.dot(1 << np.arange(n - 1, -1, -1))
    return ShotSample(m=m, counts=_indices_to_counts(observed, n))


def sample_readout_calibration(prepared: str, noise: NoiseModel, m: int, seed: int) -> ShotSample:
    """Measure a fixed basis-state preparation through the readout channel only."""
    n = len(prepared)
    dist = np.zeros(1 << n)
    dist[int(prepared, 2)] = 1.0
    noisy = apply_readout_channel(dist, noise)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    cdf = np.cumsum(noisy)
    idx = np.searchsorted(cdf / cdf[-1], rng.random(m), side="right").clip(0, noisy.size - 1)
    return ShotSample(m=m, counts=_indices_to_counts(idx, n))
