"""Reduced-density-matrix ranks of ground states."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..core.config import get_settings
from ..core.exceptions import DimensionMismatchException, LimitExceededException, StateException
from ..utils.logger import get_logger
from ..utils.seeding import make_rng
from .hypergraph_service import InteractionGraph
from .prodsat_service import ProductState, gram_matrix, hermitian_rank
from .qsat_service import ground_space_basis, sample_projectors

logger = get_logger("rdm")


@dataclass(frozen=True)
class RdmReport:
    """Rank of one reduced density matrix with the eigenvalues around the cut."""

    subset: tuple[int, ...]
    rank: int
    near_threshold: list[float]
    tolerance: float
    marginal: bool = False

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "rank": self.rank,
            "near_threshold": self.near_threshold,
            "tolerance": self.tolerance,
            "marginal": self.marginal,
        }


def _n_qubits_of(psi: np.ndarray) -> int:
    n = int(round(math.log2(psi.size))) if psi.size else -1
    if psi.ndim != 1 or n < 0 or 2**n != psi.size:
        raise DimensionMismatchException(f"state of shape {psi.shape} is not a qubit register")
    return n


def _check_subset(subset: Sequence[int], n: int) -> tuple[int, ...]:
    gamma = tuple(sorted(set(int(q) for q in subset)))
    limit = get_settings().RDM_SUBSET_LIMIT
    if len(gamma) > limit:
        raise LimitExceededException(f"subsets are limited to {limit} qubits", limit=limit)
    if gamma and (gamma[0] < 0 or gamma[-1] >= n):
        raise DimensionMismatchException(f"subset {gamma} out of range for {n} qubits")
    return gamma


def reduced_density_matrix(psi: np.ndarray, subset: Sequence[int]) -> np.ndarray:
    """Partial trace of ``|psi><psi|`` over every qubit outside ``subset``.

    ``psi`` is normalized first; the result is ``2**|subset|`` square with
    the subset's qubits in ascending order, lowest index most significant.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    n = _n_qubits_of(psi)
    gamma = _check_subset(subset, n)
    norm = np.linalg.norm(psi)
    if norm == 0.0:
        raise StateException("cannot trace a zero vector")
    tensor = (psi / norm).reshape((2,) * n)
    rest = [q for q in range(n) if q not in gamma]
    block = np.moveaxis(tensor, list(gamma), list(range(len(gamma)))).reshape(2 ** len(gamma), 2 ** len(rest))
    return block @ block.conj().T


def _rank_from_singular(psi: np.ndarray, gamma: tuple[int, ...], tol: float) -> tuple[int, np.ndarray, bool]:
    n = _n_qubits_of(psi)
    tensor = (psi / np.linalg.norm(psi)).reshape((2,) * n)
    rest = n - len(gamma)
    block = np.moveaxis(tensor, list(gamma), list(range(len(gamma)))).reshape(2 ** len(gamma), 2**rest)
    # eigenvalues of rho are the squared singular values of the Schmidt block
    weights = np.linalg.svd(block, compute_uv=False) ** 2
    rank = int(np.count_nonzero(weights > tol))
    loose = int(np.count_nonzero(weights > tol / 10))
    strict = int(np.count_nonzero(weights > tol * 10))
    marginal = strict != rank or loose != rank
    return rank, weights, marginal


def rdm_rank(psi: np.ndarray, subset: Sequence[int], tol: float | None = None) -> RdmReport:
    """Numerical rank of the reduced density matrix on ``subset``."""
    tol = get_settings().RANK_TOL if tol is None else tol
    psi = np.asarray(psi, dtype=np.complex128)
    gamma = _check_subset(subset, _n_qubits_of(psi))
    rank, weights, marginal = _rank_from_singular(psi, gamma, tol)
    lo, hi = max(0, rank - 2), min(weights.size, rank + 2)
    return RdmReport(gamma, rank, [float(w) for w in weights[lo:hi]], tol, marginal)


def generic_ground_state(ground_basis: Sequence[np.ndarray], seed: int) -> np.ndarray:
    """Haar-random unit vector in the span of an orthonormal ``ground_basis``."""
    if not len(ground_basis):
        raise StateException("ground basis is empty")
    basis = np.column_stack([np.asarray(v, dtype=np.complex128) for v in ground_basis])
    rng = make_rng(seed)
    coeffs = rng.standard_normal(basis.shape[1]) + 1j * rng.standard_normal(basis.shape[1])
    psi = basis @ coeffs
    return psi / np.linalg.norm(psi)


@dataclass
class RankHistogram:
    """RDM rank counts over every subset of one size."""

    subset_size: int
    counts: dict[int, int]
    seed: int
    tolerance: float
    marginal_subsets: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "subset_size": self.subset_size,
            "histogram": {str(r): c for r, c in sorted(self.counts.items())},
            "seed": self.seed,
            "tolerance": self.tolerance,
            "marginal_subsets": self.marginal_subsets,
            "total": self.total,
        }


def _subsets(n: int, size: int) -> Iterable[tuple[int, ...]]:
    limit = get_settings().RDM_MAX_SUBSETS
    if math.comb(n, size) > limit:
        raise LimitExceededException(f"C({n},{size}) subsets exceed the limit of {limit}", limit=limit)
    return itertools.combinations(range(n), size)


def rank_histogram(
    ground_basis: Sequence[np.ndarray], subset_size: int, tol: float | None = None, seed: int = 0
) -> RankHistogram:
    """Tally RDM ranks of one generic ground state over all size-``b`` subsets."""
    tol = get_settings().RANK_TOL if tol is None else tol
    psi = generic_ground_state(ground_basis, seed)
    n = _n_qubits_of(psi)
    if not 0 < subset_size <= n:
        raise DimensionMismatchException(f"subset size {subset_size} out of range for {n} qubits")
    _check_subset(range(subset_size), n)
    counts: Counter[int] = Counter()
    marginal = 0
    for gamma in _subsets(n, subset_size):
        rank, _, flagged = _rank_from_singular(psi, gamma, tol)
        counts[rank] += 1
        marginal += int(flagged)
    if marginal:
        logger.warning("rdm_rank_marginal", subsets=marginal, subset_size=subset_size)
    return RankHistogram(subset_size, dict(counts), seed, tol, marginal)


def product_span_restricted_rank(states: Sequence[ProductState], subset: Sequence[int]) -> int:
    """Span dimension of the product states restricted to the qubits in ``subset``."""
    if not states:
        raise StateException("at least one product state is required")
    gamma = _check_subset(subset, states[0].n_qubits)
    return hermitian_rank(gram_matrix(states, gamma))


def rank_profile(
    ground_basis: Sequence[np.ndarray], max_size: int = 5, seed: int = 0, tol: float | None = None
) -> dict[int, int]:
    """Largest RDM rank over all subsets of each size ``1..max_size``."""
    tol = get_settings().RANK_TOL if tol is None else tol
    psi = generic_ground_state(ground_basis, seed)
    n = _n_qubits_of(psi)
    profile: dict[int, int] = {}
    for size in range(1, min(max_size, n) + 1):
        profile[size] = max(_rank_from_singular(psi, gamma, tol)[0] for gamma in _subsets(n, size))
    return profile


class RdmService:
    """Histogram runs against a graph's generic ground space."""

    def __init__(self):
        self.settings = get_settings()

    def histogram(
        self, graph: InteractionGraph, seed: int, subset_size: int, tol: float | None = None
    ) -> RankHistogram:
        projectors = sample_projectors(graph, seed, "generic")
        basis = ground_space_basis(graph, projectors)
        result = rank_histogram(basis, subset_size, tol=tol, seed=seed)
        logger.info(
            "rank_histogram_complete",
            n_qubits=graph.n_qubits,
            subset_size=subset_size,
            ground_dimension=len(basis),
            ranks=sorted(result.counts),
        )
        return result


_rdm_service: RdmService | None = None


def get_rdm_service() -> RdmService:
    """Get or create RDM service singleton."""
    global _rdm_service
    if _rdm_service is None:
        _rdm_service = RdmService()
    return _rdm_service
