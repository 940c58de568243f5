"""Independent oracles shared by the test suite.

Everything here is built from explicit dense matrices (kron products and
scipy.linalg.expm) or plain index loops, deliberately avoiding the package's
own vectorized kernels, so agreement between the two is meaningful.
"""
import numpy as np
from scipy.linalg import expm

from qaoabench.problem import QuboProblem
from qaoabench.simulator import QaoaParams

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def kron_all(mats) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def op_on(n: int, qubit: int, gate: np.ndarray) -> np.ndarray:
    # qubit 0 is the leftmost bitstring character, i.e. the first kron factor
    mats = [np.eye(2, dtype=complex)] * n
    mats[qubit] = gate
    return kron_all(mats)


def dense_cost_matrix(problem: QuboProblem) -> np.ndarray:
    n = problem.graph.n
    c = np.zeros((1 << n, 1 << n), dtype=complex)
    for i, j, w in problem.graph.edges:
        c += w * (op_on(n, i, PAULI_Z) @ op_on(n, j, PAULI_Z))
    return c


def dense_qaoa_state(problem: QuboProblem, params: QaoaParams) -> np.ndarray:
    n = problem.graph.n
    c = dense_cost_matrix(problem)
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    psi = kron_all([HADAMARD] * n) @ psi
    for gamma, beta in zip(params.gamma, params.beta):
        psi = expm(-1j * gamma * c) @ psi
        mixer = expm(-1j * beta * PAULI_X)
        for q in range(n):
            psi = op_on(n, q, mixer) @ psi
    return psi


def dense_expectation(problem: QuboProblem, params: QaoaParams) -> float:
    psi = dense_qaoa_state(problem, params)
    c = dense_cost_matrix(problem)
    return float(np.real(np.conj(psi) @ (c @ psi)))


def dense_depolarize_pair(rho: np.ndarray, n: int, i: int, j: int, q: float) -> np.ndarray:
    """Replacement channel (1-q) rho + q * embed(I/4 kron Tr_ij rho), by index loops."""
    d = 1 << n
    keep = [k for k in range(n) if k not in (i, j)]
    traced = np.zeros((1 << len(keep), 1 << len(keep)), dtype=complex)

    def bits(idx):
        return [(idx >> (n - 1 - k)) & 1 for k in range(n)]

    def reduced_index(b):
        return int("".join(str(b[k]) for k in keep) or "0", 2)

    for a in range(d):
        ab = bits(a)
        for b in range(d):
            bb = bits(b)
            if ab[i] == bb[i] and ab[j] == bb[j]:
                traced[reduced_index(ab), reduced_index(bb)] += rho[a, b]
    out = np.zeros_like(rho)
    for a in range(d):
        ab = bits(a)
        for b in range(d):
            bb = bits(b)
            if ab[i] == bb[i] and ab[j] == bb[j]:
                out[a, b] = traced[reduced_index(ab), reduced_index(bb)] / 4.0
    return (1.0 - q) * rho + q * out


def random_density_matrix(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = 1 << n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
