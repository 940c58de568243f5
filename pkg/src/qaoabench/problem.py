"""QUBO instances over weighted graphs, brute-force oracles, and MAX-CUT bookkeeping.

Conventions used throughout the package:

* Spins live in {-1, +1}; a measurement bit b maps to the spin z = 1 - 2*b,
  so bit 0 corresponds to spin +1.
* Bitstrings are written with qubit 0 as the leftmost character; the integer
  index of a bitstring is its value read as a binary number in that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

BRUTE_FORCE_MAX_N = 24

# enumeration chunk size for the brute-force scan
_CHUNK = 1 << 20


@dataclass(frozen=True)
class WeightedGraph:
    """Edge-weighted undirected graph on vertices 0..n-1.

    Edges are stored as (i, j, w) triples with i < j and no duplicates.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        object.__setattr__(self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges))
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) violates 0 <= i < j < n = {self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


@dataclass(frozen=True)
class QuboProblem:
    """QUBO objective C(z) = sum_{(i,j)} w_ij * z_i * z_j over spins z in {-1,+1}^n."""

    graph: WeightedGraph
    total_weight: float

    @classmethod
    def from_graph(cls, graph: WeightedGraph) -> "QuboProblem":
        return cls(graph=graph, total_weight=float(sum(w for _, _, w in graph.edges)))

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class BruteForceResult:
    """Exhaustive optimum of a QUBO instance.

    max_cut is the MAX-CUT value implied by the minimum objective,
    (total_weight - min_value) / 2.  All bitstrings attaining the minimum
    are retained (at least two: the objective is invariant under a global
    spin flip).
    """

    min_value: float
    optimal_bitstrings: frozenset[str]
    max_cut: float
    max_value: float


def generate_w3r(
    n: int,
    seed: int,
    weight_low: float = 0.0,
    weight_high: float = 1.0,
) -> WeightedGraph:
    """Generate a connected random 3-regular graph with uniform edge weights.

    Weights are drawn i.i.d. from [weight_low, weight_high).  Deterministic
    given the seed: the same seed always yields the same edges and weights.
    """
    if n < 4 or n % 2 != 0:
        raise ValueError(f"no 3-regular graph exists for n = {n}; need even n >= 4")
    if not weight_low < weight_high:
        raise ValueError(f"need weight_low < weight_high, got [{weight_low}, {weight_high})")

    for attempt in range(1000):
        gseed = int(np.random.SeedSequence([int(seed), attempt]).generate_state(1)[0])
        g = nx.random_regular_graph(3, n, seed=gseed)
        if nx.is_connected(g):
            break
    else:  # pragma: no cover - 3-regular graphs are connected w.h.p.
        raise RuntimeError(f"failed to produce a connected 3-regular graph for n={n}, seed={seed}")

    pairs = sorted((min(u, v), max(u, v)) for u, v in g.edges())
    wseed = int(np.random.SeedSequence([int(seed), attempt, 1]).generate_state(1)[0])
    rng = np.random.Generator(np.random.Philox(key=wseed))
    weights = rng.uniform(weight_low, weight_high, size=len(pairs))
    edges = tuple((i, j, float(w)) for (i, j), w in zip(pairs, weights))
    return WeightedGraph(n=n, edges=edges)


def qubo_value(problem: QuboProblem, z: Sequence[int] | np.ndarray) -> float:
    """Evaluate C(z) = sum w_ij z_i z_j for a spin assignment z in {-1,+1}^n."""
    z = np.asarray(z)
    if z.shape != (problem.n,):
        raise ValueError(f"spin assignment has length {z.shape}, expected ({problem.n},)")
    return float(sum(w * z[i] * z[j] for i, j, w in problem.graph.edges))


def bitstring_to_spins(bits: str) -> np.ndarray:
    """Map a bitstring to spins via z = 1 - 2b (bit 0 -> spin +1)."""
    return np.array([1 - 2 * int(b) for b in bits], dtype=np.int64)


def index_to_bitstring(index: int, n: int) -> str:
    """Integer index -> bitstring with qubit 0 leftmost."""
    return format(index, f"0{n}b")


def bitstring_to_index(bits: str) -> int:
    return int(bits, 2)


def brute_force_optimum(problem: QuboProblem) -> BruteForceResult:
    """Exhaustively minimize C(z) over all 2^n spin assignments.

    Returns the minimum, every minimizing bitstring, the implied MAX-CUT
    value, and the maximum of C(z).  Refuses n > 24, above which
    enumeration rather than simulation becomes the bottleneck.
    """
    n = problem.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(
            f"brute force supports n <= {BRUTE_FORCE_MAX_N}, got n = {n}; "
            "enumeration above this bound is impractical"
        )
    values = cost_over_all_bitstrings(problem)
    min_value = float(values.min())
    max_value = float(values.max())
    optima = np.flatnonzero(values == min_value)
    bitstrings = frozenset(index_to_bitstring(int(k), n) for k in optima)
    max_cut = (problem.total_weight - min_value) / 2.0
    return BruteForceResult(
        min_value=min_value,
        optimal_bitstrings=bitstrings,
        max_cut=max_cut,
        max_value=max_value,
    )


def cost_over_all_bitstrings(problem: QuboProblem) -> np.ndarray:
    """C(z) for every bitstring index 0..2^n-1, chunked to bound memory.

    The value at index k uses the bit convention above: bit i of k (with
    qubit 0 as the most significant bit) gives spin z_i = 1 - 2*b_i, and
    z_i z_j = 1 - 2*(b_i XOR b_j).
    """
    n = problem.n
    size = 1 << n
    values = np.empty(size, dtype=np.float64)
    for start in range(0, size, _CHUNK):
        stop = min(start + _CHUNK, size)
        k = np.arange(start, stop, dtype=np.uint64)
        acc = np.zeros(stop - start, dtype=np.float64)
        for i, j, w in problem.graph.edges:
            parity = ((k >> np.uint64(n - 1 - i)) ^ (k >> np.uint64(n - 1 - j))) & np.uint64(1)
            acc += w * (1.0 - 2.0 * parity.astype(np.float64))
        values[start:stop] = acc
    return values


def cut_from_expectation(problem: QuboProblem, expectation: float) -> float:
    """Cut value implied by an objective expectation: (total_weight - <C>) / 2."""
    return (problem.total_weight - expectation) / 2.0


def approximation_ratio(
    problem: QuboProblem,
    expectation: float,
    oracle: BruteForceResult,
) -> tuple[float, float]:
    """Approximation ratio r = cut(expectation) / max_cut and its gap 1 - r."""
    if oracle.max_cut <= 0:
        raise ValueError(f"degenerate graph: max_cut = {oracle.max_cut} is not positive")
    r = cut_from_expectation(problem, expectation) / oracle.max_cut
    return r, 1.0 - r


# ---------------------------------------------------------------------------
# JSON file formats
#
# Graph file: {"n": int, "edges": [[i, j, w], ...]}
# Oracle file: {"min_value": float, "max_cut": float, "max_value": float,
#               "optimal_bitstrings": [str, ...]}
# ---------------------------------------------------------------------------


def save_graph(graph: WeightedGraph, path: str | Path) -> None:
    payload = {"n": graph.n, "edges": [[i, j, w] for i, j, w in graph.edges]}
    Path(path).write_text(json.dumps(payload, indent=2))


def load_graph(path: str | Path) -> WeightedGraph:
    payload = json.loads(Path(path).read_text())
    return WeightedGraph(n=int(payload["n"]), edges=tuple((e[0], e[1], e[2]) for e in payload["edges"]))


def save_oracle(result: BruteForceResult, path: str | Path) -> None:
    payload = {
        "min_value": result.min_value,
        "max_cut": result.max_cut,
        "max_value": result.max_value,
        "optimal_bitstrings": sorted(result.optimal_bitstrings),
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_oracle(path: str | Path) -> BruteForceResult:
    payload = json.loads(Path(path).read_text())
    return BruteForceResult(
        min_value=float(payload["min_value"]),
        optimal_bitstrings=frozenset(payload["optimal_bitstrings"]),
        max_cut=float(payload["max_cut"]),
        max_value=float(payload["max_value"]),
    )


def five_variable_qubo() -> QuboProblem:
    """The five-variable test instance C = z0 z1 - z0 z2 + z0 z3 - z3 z4."""
    graph = WeightedGraph(n=5, edges=((0, 1, 1.0), (0, 2, -1.0), (0, 3, 1.0), (3, 4, -1.0)))
    return QuboProblem.from_graph(graph)
