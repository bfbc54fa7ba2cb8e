"""Clause-qubit matchings, dimer coverings, and the GF(2) surjectivity check."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ..core.config import get_settings
from ..core.exceptions import LimitExceededException, MatchingException
from ..utils.logger import get_logger
from .hypergraph_service import InteractionGraph, core_mask

logger = get_logger("matching")


@dataclass(frozen=True)
class Matching:
    """Partial injective map clause -> incident qubit."""

    assignment: dict[int, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.assignment)

    def validate(self, graph: InteractionGraph) -> None:
        """Raise unless every pair is an incidence and no qubit repeats."""
        seen: set[int] = set()
        for clause, qubit in self.assignment.items():
            if not 0 <= clause < graph.n_clauses:
                raise MatchingException(f"clause {clause} out of range")
            if qubit not in graph.clauses[clause]:
                raise MatchingException(f"qubit {qubit} is not a member of clause {clause}")
            if qubit in seen:
                raise MatchingException(f"qubit {qubit} matched twice")
            seen.add(qubit)

    def is_dimer_covering(self, graph: InteractionGraph) -> bool:
        return self.size == graph.n_clauses

    def to_dict(self) -> dict[str, int]:
        return {str(c): q for c, q in sorted(self.assignment.items())}


def _hopcroft_karp(adjacency: Sequence[Sequence[int]], n_right: int) -> list[int]:
    """Maximum matching of left vertices; returns the matched right vertex or -1.

    Neighbours are scanned in the given order, so ascending adjacency lists
    break ties towards the lowest index. The depth-first phase is iterative.
    """
    n_left = len(adjacency)
    match_left = [-1] * n_left
    match_right = [-1] * n_right

    # greedy start
    for u, neighbours in enumerate(adjacency):
        for v in neighbours:
            if match_right[v] == -1:
                match_left[u] = v
                match_right[v] = u
                break

    while True:
        dist = [-1] * n_left
        queue = deque(u for u in range(n_left) if match_left[u] == -1)
        for u in queue:
            dist[u] = 0
        found = False
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                w = match_right[v]
                if w == -1:
                    found = True
                elif dist[w] == -1:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if not found:
            return match_left

        cursor = [0] * n_left
        via = [-1] * n_left
        for root in range(n_left):
            if match_left[root] != -1:
                continue
            stack = [root]
            while stack:
                u = stack[-1]
                if cursor[u] >= len(adjacency[u]):
                    dist[u] = -2  # dead for this phase
                    stack.pop()
                    continue
                v = adjacency[u][cursor[u]]
                cursor[u] += 1
                w = match_right[v]
                if w == -1:
                    via[u] = v
                    for x in stack:
                        match_left[x] = via[x]
                        match_right[via[x]] = x
                    break
                if dist[w] == dist[u] + 1:
                    via[u] = v
                    stack.append(w)


def max_clause_matching(graph: InteractionGraph) -> Matching:
    """Maximum-cardinality clause-qubit matching (Hopcroft-Karp)."""
    adjacency = [list(clause) for clause in graph.clauses]
    matched = _hopcroft_karp(adjacency, graph.n_qubits)
    matching = Matching({m: q for m, q in enumerate(matched) if q != -1})
    logger.debug("matching_computed", n_clauses=graph.n_clauses, size=matching.size)
    return matching


def is_clause_coverable(graph: InteractionGraph) -> bool:
    """True iff some matching covers every clause.

    A clause holding a private qubit can always take that qubit, so the
    question reduces to the hypercore, which is then checked by pigeonhole
    and by a compiled maximum bipartite matching.
    """
    alive = core_mask(graph)
    core = graph.clause_array[alive]
    n_core_clauses = core.shape[0]
    if n_core_clauses == 0:
        return True
    qubits, relabelled = np.unique(core, return_inverse=True)
    if n_core_clauses > qubits.size:
        return False
    incidence = csr_matrix(
        (
            np.ones(relabelled.size, dtype=np.int8),
            (np.repeat(np.arange(n_core_clauses), graph.k), relabelled.ravel()),
        ),
        shape=(n_core_clauses, qubits.size),
    )
    matched = maximum_bipartite_matching(incidence, perm_type="column")
    return bool(np.all(matched >= 0))


def count_clause_assignments(incidence: Sequence[Sequence[int]], n_qubits: int) -> int:
    """Number of injective maps clause -> qubit that respect ``incidence``.

    Clause-ordered depth-first enumeration over a used-qubit bitmask with
    memoization on ``(clause, mask)``.
    """
    settings = get_settings()
    if n_qubits > settings.ENUMERATION_LIMIT:
        raise LimitExceededException(
            f"covering enumeration is limited to {settings.ENUMERATION_LIMIT} qubits, got {n_qubits}",
            limit=settings.ENUMERATION_LIMIT,
        )
    options = [tuple(1 << q for q in row) for row in incidence]
    n_clauses = len(options)
    if n_clauses > n_qubits:
        return 0

    @lru_cache(maxsize=None)
    def _count(clause: int, used: int) -> int:
        if clause == n_clauses:
            return 1
        return sum(_count(clause + 1, used | bit) for bit in options[clause] if not used & bit)

    return _count(0, 0)


def count_dimer_coverings(graph: InteractionGraph) -> int:
    """Exact number of dimer coverings of all clauses."""
    return count_clause_assignments(graph.clauses, graph.n_qubits)


def iter_dimer_coverings(graph: InteractionGraph) -> Iterator[Matching]:
    """Every dimer covering, in lexicographic order of the assigned qubits."""
    settings = get_settings()
    if graph.n_qubits > settings.ENUMERATION_LIMIT:
        raise LimitExceededException(
            f"covering enumeration is limited to {settings.ENUMERATION_LIMIT} qubits",
            limit=settings.ENUMERATION_LIMIT,
        )
    clauses = graph.clauses
    chosen: list[int] = []
    used: set[int] = set()

    def _walk(m: int) -> Iterator[Matching]:
        if m == len(clauses):
            yield Matching(dict(enumerate(chosen)))
            return
        for q in clauses[m]:
            if q in used:
                continue
            used.add(q)
            chosen.append(q)
            yield from _walk(m + 1)
            chosen.pop()
            used.discard(q)

    yield from _walk(0)


def adjacency_bits(graph: InteractionGraph) -> np.ndarray:
    """Node-edge adjacency over GF(2), rows packed into 64-bit words."""
    words = (graph.n_qubits + 63) // 64
    packed = np.zeros((graph.n_clauses, words), dtype=np.uint64)
    clauses = graph.clause_array
    rows = np.repeat(np.arange(graph.n_clauses), graph.k)
    cols = clauses.ravel()
    np.bitwise_or.at(packed, (rows, cols // 64), np.left_shift(np.uint64(1), (cols % 64).astype(np.uint64)))
    return packed


def gf2_rank(packed: np.ndarray, n_cols: int) -> int:
    """Rank over the two-element field of a row-packed bit matrix."""
    rows = packed.copy()
    n_rows = rows.shape[0]
    rank = 0
    one = np.uint64(1)
    for col in range(n_cols):
        if rank == n_rows:
            break
        word, bit = divmod(col, 64)
        column = (rows[rank:, word] >> np.uint64(bit)) & one
        hits = np.flatnonzero(column)
        if hits.size == 0:
            continue
        pivot = rank + int(hits[0])
        if pivot != rank:
            rows[[rank, pivot]] = rows[[pivot, rank]]
        others = np.flatnonzero((rows[:, word] >> np.uint64(bit)) & one)
        others = others[others != rank]
        if others.size:
            rows[others] ^= rows[rank]
        rank += 1
    return rank


def gf2_surjective(graph: InteractionGraph) -> bool:
    """True iff the adjacency matrix has full row rank over GF(2).

    Rows with a private column are independent of the rest, so the rank
    test runs on the hypercore only.
    """
    settings = get_settings()
    core = graph.subgraph(np.flatnonzero(core_mask(graph)))
    if core.n_clauses == 0:
        return True
    if core.n_clauses > core.touched_qubits().size:
        return False
    if core.n_clauses * core.n_qubits > settings.GF2_DENSE_LIMIT:
        raise LimitExceededException(
            f"GF(2) core of {core.n_clauses} x {core.n_qubits} exceeds the dense limit",
            limit=settings.GF2_DENSE_LIMIT,
        )
    rank = gf2_rank(adjacency_bits(core), core.n_qubits)
    return rank == core.n_clauses
