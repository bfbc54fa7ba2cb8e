"""Interaction hypergraphs, the random ensemble, and hypercore peeling."""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..core.exceptions import GraphException
from ..core.instances import REFERENCE_INSTANCES, REFERENCE_K, REFERENCE_N
from ..utils.logger import get_logger
from ..utils.seeding import make_rng

logger = get_logger("hypergraph")

EnsembleMode = Literal["binomial", "fixed-count"]

# Above this many potential clauses the dense-regime sampler would not fit.
_ENUMERABLE_CLAUSES = 1 << 20
# numpy's binomial takes an int64 trial count
_BINOMIAL_CHUNK = 1 << 62


class InteractionGraph:
    """k-uniform clause-qubit hypergraph.

    Clauses are stored as an immutable ``(M, k)`` integer array with each
    row sorted ascending. Duplicate clauses are rejected. Equality and
    hashing treat the clause list as a set.
    """

    def __init__(self, n_qubits: int, k: int, clauses: Iterable[Sequence[int]] | np.ndarray = ()):
        if n_qubits < 1:
            raise GraphException(f"n_qubits must be positive, got {n_qubits}")
        if k < 2:
            raise GraphException(f"clause arity must be at least 2, got {k}")

        array = np.asarray(list(clauses) if not isinstance(clauses, np.ndarray) else clauses, dtype=np.int64)
        if array.size == 0:
            array = np.zeros((0, k), dtype=np.int64)
        if array.ndim != 2 or array.shape[1] != k:
            raise GraphException(f"every clause must have exactly {k} members")
        array = np.sort(array, axis=1)

        if array.shape[0]:
            if array.min() < 0 or array.max() >= n_qubits:
                raise GraphException(f"clause member out of range [0, {n_qubits})")
            if np.any(np.diff(array, axis=1) == 0):
                raise GraphException("clause members must be distinct")
            if np.unique(array, axis=0).shape[0] != array.shape[0]:
                raise GraphException("duplicate clauses are not allowed")

        array.setflags(write=False)
        self.n_qubits = int(n_qubits)
        self.k = int(k)
        self._clauses = array

    @property
    def clause_array(self) -> np.ndarray:
        """Read-only ``(M, k)`` array of sorted clauses."""
        return self._clauses

    @cached_property
    def clauses(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(q) for q in row) for row in self._clauses)

    @property
    def n_clauses(self) -> int:
        return int(self._clauses.shape[0])

    @cached_property
    def qubit_clauses(self) -> tuple[tuple[int, ...], ...]:
        """Factor-graph view: for every qubit, the clauses containing it."""
        incidence: list[list[int]] = [[] for _ in range(self.n_qubits)]
        for m, clause in enumerate(self.clauses):
            for q in clause:
                incidence[q].append(m)
        return tuple(tuple(row) for row in incidence)

    def touched_qubits(self) -> np.ndarray:
        """Sorted qubits that belong to at least one clause."""
        return np.unique(self._clauses)

    def subgraph(self, clause_indices: Iterable[int]) -> "InteractionGraph":
        """Graph on the same qubits keeping only the selected clauses."""
        keep = np.asarray(sorted(set(int(i) for i in clause_indices)), dtype=np.int64)
        return InteractionGraph(self.n_qubits, self.k, self._clauses[keep] if keep.size else ())

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_qubits": self.n_qubits,
            "k": self.k,
            "clauses": [list(c) for c in self.clauses],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "InteractionGraph":
        try:
            return cls(int(data["n_qubits"]), int(data["k"]), data.get("clauses", []))
        except KeyError as e:
            raise GraphException(f"graph JSON is missing field {e}") from e

    def __len__(self) -> int:
        return self.n_clauses

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return (
            self.n_qubits == other.n_qubits
            and self.k == other.k
            and set(self.clauses) == set(other.clauses)
        )

    def __hash__(self) -> int:
        return hash((self.n_qubits, self.k, frozenset(self.clauses)))

    def __repr__(self) -> str:
        return f"InteractionGraph(n_qubits={self.n_qubits}, k={self.k}, n_clauses={self.n_clauses})"


class EnsembleParams(BaseModel):
    """Parameters of the random k-uniform ensemble."""

    n_qubits: int = Field(..., ge=1)
    k: int = Field(..., ge=2)
    clause_density: float = Field(..., ge=0.0)
    mode: EnsembleMode = "binomial"
    seed: int = Field(default=0, ge=0, lt=1 << 64)

    @property
    def potential_clauses(self) -> int:
        return math.comb(self.n_qubits, self.k)

    @property
    def fixed_count(self) -> int:
        """round(alpha N), halves rounded up."""
        return int(math.floor(self.clause_density * self.n_qubits + 0.5))

    @property
    def inclusion_probability(self) -> float:
        return self.clause_density * self.n_qubits / self.potential_clauses


def load_graph(path: str | Path) -> InteractionGraph:
    """Read a graph JSON file."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise GraphException(f"cannot read graph file {path}: {e}") from e
    return InteractionGraph.from_dict(data)


def reference_instance(label: str) -> InteractionGraph:
    """One of the bundled N = M = 10 reference instances."""
    try:
        return InteractionGraph(REFERENCE_N, REFERENCE_K, REFERENCE_INSTANCES[label])
    except KeyError as e:
        raise GraphException(f"unknown reference instance {label!r}") from e


def _binomial_count(rng: np.random.Generator, trials: int, p: float) -> int:
    """Exact Binomial(trials, p) draw, chunked when trials exceeds int64."""
    total = 0
    remaining = trials
    while remaining > 0:
        chunk = min(remaining, _BINOMIAL_CHUNK)
        total += int(rng.binomial(chunk, p))
        remaining -= chunk
    return total


def _draw_distinct_clauses(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    """``count`` distinct k-subsets of range(n), uniform over all such sets."""
    if count == 0:
        return np.zeros((0, k), dtype=np.int64)

    potential = math.comb(n, k)
    if potential <= _ENUMERABLE_CLAUSES and count * 4 > potential:
        # dense regime: choose indices into the full clause list
        every = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
        picks = rng.choice(potential, size=count, replace=False)
        return every[picks]

    chosen = np.zeros((0, k), dtype=np.int64)
    while chosen.shape[0] < count:
        needed = count - chosen.shape[0]
        batch = rng.integers(0, n, size=(int(needed * 1.2) + 16, k), dtype=np.int64)
        batch.sort(axis=1)
        batch = batch[np.all(np.diff(batch, axis=1) > 0, axis=1)]
        candidates = np.concatenate([chosen, batch], axis=0)
        # keep first occurrences in draw order
        _, first = np.unique(candidates, axis=0, return_index=True)
        chosen = candidates[np.sort(first)][:count]
    return chosen


def sample_graph(params: EnsembleParams) -> InteractionGraph:
    """Draw a graph from the random ensemble; deterministic in ``params.seed``."""
    n, k = params.n_qubits, params.k
    if k > n:
        raise GraphException(f"arity k={k} exceeds n_qubits={n}")

    rng = make_rng(params.seed)
    potential = params.potential_clauses
    if params.mode == "fixed-count":
        count = params.fixed_count
        if count > potential:
            raise GraphException(
                f"round(alpha N) = {count} exceeds the {potential} possible clauses"
            )
    else:
        p = params.inclusion_probability
        if p > 1.0:
            raise GraphException(f"inclusion probability {p:.4g} exceeds 1")
        count = _binomial_count(rng, potential, p) if p > 0 else 0

    clauses = _draw_distinct_clauses(rng, n, k, count)
    graph = InteractionGraph(n, k, clauses)
    logger.debug(
        "graph_sampled",
        n_qubits=n,
        k=k,
        alpha=params.clause_density,
        mode=params.mode,
        n_clauses=graph.n_clauses,
    )
    return graph


def degree_profile(graph: InteractionGraph) -> dict[int, int]:
    """Membership count for every qubit."""
    degrees = np.bincount(graph.clause_array.ravel(), minlength=graph.n_qubits)
    return {q: int(d) for q, d in enumerate(degrees)}


def core_mask(graph: InteractionGraph) -> np.ndarray:
    """Boolean mask of the clauses that survive leaf peeling.

    Clauses holding a degree-1 qubit are removed through a work queue of
    leaf qubits until none remains, in time linear in the clause count.
    Peeling is confluent, so the surviving set does not depend on the order.
    """
    n_clauses = graph.n_clauses
    alive = [True] * n_clauses
    if not n_clauses:
        return np.ones(0, dtype=bool)
    degree = np.bincount(graph.clause_array.ravel(), minlength=graph.n_qubits).tolist()
    incidence = graph.qubit_clauses
    clauses = graph.clauses
    queue = deque(q for q, d in enumerate(degree) if d == 1)
    while queue:
        q = queue.popleft()
        if degree[q] != 1:
            continue
        m = next(m for m in incidence[q] if alive[m])
        alive[m] = False
        for p in clauses[m]:
            degree[p] -= 1
            if degree[p] == 1:
                queue.append(p)
    return np.array(alive, dtype=bool)


def hypercore(graph: InteractionGraph) -> InteractionGraph:
    """Maximal subgraph in which every retained qubit has degree >= 2.

    Qubit labels and ``n_qubits`` are kept; qubits outside the core simply
    have degree 0 in the result.
    """
    alive = core_mask(graph)
    return InteractionGraph(graph.n_qubits, graph.k, graph.clause_array[alive])


def core_size(graph: InteractionGraph) -> tuple[int, int]:
    """``(qubits, clauses)`` of the hypercore."""
    alive = core_mask(graph)
    clauses = graph.clause_array[alive]
    return int(np.unique(clauses).size), int(clauses.shape[0])
