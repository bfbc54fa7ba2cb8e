"""Rank-1 projector Hamiltonians: sampling, kernel dimension, SAT decisions."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Literal

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from ..core.config import get_settings
from ..core.exceptions import (
    DimensionMismatchException,
    LimitExceededException,
    ProjectorException,
)
from ..utils.logger import get_logger
from ..utils.seeding import make_rng
from .hypergraph_service import InteractionGraph

logger = get_logger("qsat")

ProjectorForm = Literal["generic", "product"]

_NORM_TOL = 1e-12


def haar_qubits(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` Haar-random single-qubit states as rows of a ``(count, 2)`` array."""
    return haar_vectors(rng, count, 2)


def haar_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Normalized complex Gaussian vectors."""
    raw = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def kron_rows(factors: np.ndarray) -> np.ndarray:
    """Tensor product of per-site factors: ``(M, k, 2)`` -> ``(M, 2**k)``."""
    out = factors[:, 0, :]
    for j in range(1, factors.shape[1]):
        out = (out[:, :, None] * factors[:, j, None, :]).reshape(factors.shape[0], -1)
    return out


@dataclass(frozen=True)
class ProjectorSet:
    """One unit vector ``phi^m`` of dimension ``2**k`` per clause.

    ``factors`` holds the ``(M, k, 2)`` per-site factors when every vector is
    a tensor product; site ``j`` belongs to the clause's ``j``-th smallest
    qubit, which is also the most significant index of ``phi^m``.
    """

    vectors: np.ndarray
    factors: np.ndarray | None = None

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.complex128)
        if vectors.ndim != 2:
            raise ProjectorException("projector vectors must form an (M, 2**k) array")
        norms = np.linalg.norm(vectors, axis=1)
        if vectors.shape[0] and np.max(np.abs(norms - 1.0)) > _NORM_TOL:
            raise ProjectorException("projector vectors must have unit norm")
        if self.factors is not None:
            factors = np.asarray(self.factors, dtype=np.complex128)
            if factors.shape[:1] != vectors.shape[:1] or 2 ** factors.shape[1] != vectors.shape[1]:
                raise ProjectorException("product factors do not match the projector vectors")
            if vectors.shape[0] and np.max(np.abs(kron_rows(factors) - vectors)) > _NORM_TOL:
                raise ProjectorException("product factors do not reconstruct the projector vectors")
            object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "vectors", vectors)

    @property
    def product_form(self) -> bool:
        return self.factors is not None

    @property
    def n_clauses(self) -> int:
        return int(self.vectors.shape[0])

    @classmethod
    def from_factors(cls, factors: np.ndarray) -> "ProjectorSet":
        factors = np.asarray(factors, dtype=np.complex128)
        factors = factors / np.linalg.norm(factors, axis=2, keepdims=True)
        return cls(vectors=kron_rows(factors), factors=factors)

    def check_graph(self, graph: InteractionGraph) -> None:
        if self.n_clauses != graph.n_clauses or self.vectors.shape[1] != 2 ** graph.k:
            raise DimensionMismatchException(
                f"projector set of shape {self.vectors.shape} does not fit {graph!r}"
            )


def _factors_have_parallel_pair(graph: InteractionGraph, factors: np.ndarray, tol: float) -> bool:
    by_qubit: dict[int, list[np.ndarray]] = {}
    for m, clause in enumerate(graph.clauses):
        for j, q in enumerate(clause):
            by_qubit.setdefault(q, []).append(factors[m, j])
    for local in by_qubit.values():
        if len(local) < 2:
            continue
        stack = np.array(local)
        overlaps = np.abs(stack.conj() @ stack.T)
        np.fill_diagonal(overlaps, 0.0)
        if np.max(overlaps) > 1.0 - tol:
            return True
    return False


def sample_projectors(
    graph: InteractionGraph, seed: int, form: ProjectorForm = "generic"
) -> ProjectorSet:
    """Haar-random projectors; deterministic in ``seed``.

    Product form guarantees that no two local factors on a shared qubit are
    parallel.
    """
    rng = make_rng(seed)
    m, k = graph.n_clauses, graph.k
    if form == "generic":
        return ProjectorSet(vectors=haar_vectors(rng, m, 2**k))
    if form != "product":
        raise ProjectorException(f"unknown projector form {form!r}")

    tol = get_settings().PARALLEL_FACTOR_TOL
    while True:
        factors = haar_qubits(rng, m * k).reshape(m, k, 2)
        if not _factors_have_parallel_pair(graph, factors, tol):
            return ProjectorSet.from_factors(factors)
        logger.debug("parallel_factors_redrawn", n_clauses=m)


def apply_hamiltonian(graph: InteractionGraph, projectors: ProjectorSet, psi: np.ndarray) -> np.ndarray:
    """``H psi = sum_m phi^m <phi^m | psi>`` on the clause qubits.

    ``psi`` has shape ``(2**N,)`` or ``(2**N, B)`` for a batch of ``B``
    vectors. Qubit 0 is the most significant tensor factor.
    """
    settings = get_settings()
    n = graph.n_qubits
    if n > settings.APPLY_LIMIT:
        raise LimitExceededException(f"state vectors are limited to {settings.APPLY_LIMIT} qubits")
    projectors.check_graph(graph)
    psi = np.asarray(psi)
    if psi.shape[0] != 2**n or psi.ndim not in (1, 2):
        raise DimensionMismatchException(f"expected a vector of dimension {2**n}, got shape {psi.shape}")

    batch = psi.shape[1:]
    tensor = psi.reshape((2,) * n + batch)
    out = np.zeros(tensor.shape, dtype=np.complex128)
    k = graph.k
    for phi, clause in zip(projectors.vectors, graph.clause_array):
        axes = [int(q) for q in clause]
        local = phi.reshape((2,) * k)
        # <phi|psi> leaves the other qubits (and the batch axis)
        overlap = np.tensordot(local.conj(), tensor, axes=(list(range(k)), axes))
        term = np.tensordot(local, overlap, axes=0)
        out += np.moveaxis(term, list(range(k)), axes)
    return out.reshape(psi.shape)


def hamiltonian_matrix(graph: InteractionGraph, projectors: ProjectorSet) -> np.ndarray:
    """Dense ``2**N x 2**N`` Hamiltonian assembled from basis vectors."""
    dim = 2**graph.n_qubits
    return apply_hamiltonian(graph, projectors, np.eye(dim, dtype=np.complex128))


@dataclass(frozen=True)
class KernelResult:
    """Generic ground-space dimension with the spectrum that certifies it."""

    dimension: int
    spectrum_evidence: list[float]
    tolerance: float
    method: Literal["dense", "iterative"] = "dense"
    gap_ratio: float = float("inf")
    marginal: bool = False
    neighbour_counts: tuple[int, int] = (0, 0)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "spectrum_evidence": self.spectrum_evidence,
            "tolerance": self.tolerance,
            "method": self.method,
            "gap_ratio": self.gap_ratio if np.isfinite(self.gap_ratio) else None,
            "marginal": self.marginal,
            "neighbour_counts": list(self.neighbour_counts),
        }


class Verdict(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class SatVerdict:
    """Outcome of the numerical zero-energy test."""

    verdict: Verdict
    min_eigenvalue: float
    iterations: int
    residual: float = 0.0
    converged: bool = True

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "min_eigenvalue": self.min_eigenvalue,
            "iterations": self.iterations,
            "residual": self.residual,
            "converged": self.converged,
        }


def _check_dense(graph: InteractionGraph) -> None:
    limit = get_settings().DENSE_LIMIT
    if graph.n_qubits > limit:
        raise LimitExceededException(
            f"dense diagonalization is limited to {limit} qubits, got {graph.n_qubits}", limit=limit
        )


def dense_spectrum(graph: InteractionGraph, projectors: ProjectorSet) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and eigenvectors of the dense Hamiltonian."""
    _check_dense(graph)
    h = hamiltonian_matrix(graph, projectors)
    evals, evecs = linalg.eigh(h)
    return evals, evecs


def default_tolerance(evals: np.ndarray) -> float:
    """Zero threshold relative to the largest eigenvalue (at most M)."""
    scale = max(float(evals[-1]), 1.0) if evals.size else 1.0
    return get_settings().KERNEL_TOL_FACTOR * scale


def kernel_from_spectrum(evals: np.ndarray, tol: float | None = None) -> KernelResult:
    """Count eigenvalues below ``tol`` and check the count's stability.

    With a nonempty kernel the gap ratio compares the first retained
    eigenvalue with the largest one counted as zero (floored at machine
    precision of the spectrum). An empty kernel only needs its lowest
    eigenvalue well above ``tol``.
    """
    settings = get_settings()
    tol = default_tolerance(evals) if tol is None else tol
    dimension = int(np.count_nonzero(evals < tol))
    tighter = int(np.count_nonzero(evals < tol / 10))
    looser = int(np.count_nonzero(evals < tol * 10))
    retained = evals[dimension:]
    if not retained.size:
        gap_ratio, required = float("inf"), settings.GAP_RATIO
    elif dimension:
        scale = max(float(evals[-1]), 1.0)
        floor = max(float(evals[dimension - 1]), np.finfo(float).eps * scale)
        gap_ratio, required = float(retained[0] / floor), settings.GAP_RATIO
    else:
        gap_ratio, required = float(retained[0] / tol), settings.EMPTY_GAP_RATIO
    marginal = tighter != dimension or looser != dimension or gap_ratio < required
    lo, hi = max(0, dimension - 3), min(evals.size, dimension + 3)
    return KernelResult(
        dimension=dimension,
        spectrum_evidence=[float(x) for x in evals[lo:hi]],
        tolerance=float(tol),
        method="dense",
        gap_ratio=gap_ratio,
        marginal=bool(marginal),
        neighbour_counts=(tighter, looser),
    )


def kernel_dimension(
    graph: InteractionGraph, projectors: ProjectorSet, tol: float | None = None
) -> KernelResult:
    """Dimension of ``ker H`` by full Hermitian eigendecomposition."""
    evals, _ = dense_spectrum(graph, projectors)
    result = kernel_from_spectrum(evals, tol)
    if result.marginal:
        logger.warning(
            "kernel_marginal",
            dimension=result.dimension,
            tolerance=result.tolerance,
            gap_ratio=result.gap_ratio,
        )
    logger.debug("kernel_computed", n_qubits=graph.n_qubits, dimension=result.dimension)
    return result


def ground_space_basis(
    graph: InteractionGraph, projectors: ProjectorSet, tol: float | None = None
) -> list[np.ndarray]:
    """Orthonormal kernel basis; the lowest eigenvector when the kernel is empty."""
    evals, evecs = dense_spectrum(graph, projectors)
    tol = default_tolerance(evals) if tol is None else tol
    dimension = int(np.count_nonzero(evals < tol))
    count = max(dimension, 1)
    return [evecs[:, i].copy() for i in range(count)]


def decide_sat(
    graph: InteractionGraph,
    projectors: ProjectorSet,
    tol_zero: float | None = None,
    tol_gap: float | None = None,
    max_iters: int | None = None,
    seed: int = 0,
) -> SatVerdict:
    """Classify by the smallest eigenvalue from implicitly restarted Lanczos.

    ARPACK (``eigsh``) sees ``H`` only through ``apply_hamiltonian``. The
    Rayleigh quotient ``theta`` bounds the smallest eigenvalue from above, so
    ``theta < tol_zero`` certifies SAT; UNSAT needs ``theta - |r| > tol_gap``.
    ``max_iters`` caps the Arnoldi restarts and ``iterations`` reports the
    Hamiltonian applications actually made.
    """
    settings = get_settings()
    tol_zero = settings.TOL_ZERO if tol_zero is None else tol_zero
    tol_gap = settings.TOL_GAP if tol_gap is None else tol_gap
    max_iters = settings.MAX_ITERS if max_iters is None else max_iters
    if graph.n_qubits > settings.ITERATIVE_LIMIT:
        raise LimitExceededException(
            f"iterative diagonalization is limited to {settings.ITERATIVE_LIMIT} qubits",
            limit=settings.ITERATIVE_LIMIT,
        )

    if graph.n_clauses == 0:
        return SatVerdict(Verdict.SAT, 0.0, 0, 0.0, True)

    dim = 2**graph.n_qubits
    applications = 0

    def matvec(v: np.ndarray) -> np.ndarray:
        nonlocal applications
        applications += 1
        return apply_hamiltonian(graph, projectors, np.ravel(v))

    # ARPACK's stopping rule is relative to |theta|; the unit shift makes it absolute
    shifted = LinearOperator(
        (dim, dim), matvec=lambda v: matvec(v) + np.ravel(v), dtype=np.complex128
    )
    # complex Hermitian problems go through eigs, which needs k < dim - 1
    n_eigs = min(2, dim - 2)
    ncv = min(dim, max(2 * n_eigs + 1, settings.LANCZOS_KRYLOV_DIM))
    rng = make_rng(seed)
    start = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)

    converged = True
    try:
        evals, evecs = eigsh(
            shifted,
            k=n_eigs,
            which="SA",
            v0=start,
            ncv=ncv,
            maxiter=max_iters,
            tol=settings.LANCZOS_TOL,
        )
    except ArpackNoConvergence as e:
        converged = False
        evals, evecs = e.eigenvalues, e.eigenvectors

    if evals is None or len(evals) == 0:
        logger.info("sat_undecided", iterations=applications, converged=False)
        return SatVerdict(Verdict.UNDECIDED, float("inf"), applications, float("inf"), False)

    vector = evecs[:, int(np.argmin(evals))]
    vector = vector / np.linalg.norm(vector)
    hv = matvec(vector)
    theta = float(np.vdot(vector, hv).real)
    residual = float(np.linalg.norm(hv - theta * vector))

    if theta < tol_zero:
        return SatVerdict(Verdict.SAT, theta, applications, residual, converged)
    if theta - residual > tol_gap:
        return SatVerdict(Verdict.UNSAT, theta, applications, residual, converged)

    logger.info(
        "sat_undecided",
        min_eigenvalue=theta,
        residual=residual,
        iterations=applications,
        converged=converged,
    )
    return SatVerdict(Verdict.UNDECIDED, theta, applications, residual, converged)


def verdict_from_kernel(result: KernelResult) -> Verdict:
    """Dense kernel count as a SAT verdict; marginal counts stay undecided."""
    if result.marginal:
        return Verdict.UNDECIDED
    return Verdict.SAT if result.dimension > 0 else Verdict.UNSAT


@dataclass
class InstanceClass:
    """PRODSAT / SAT-unPRODSAT / UNSAT classification of one instance."""

    label: Literal["PRODSAT", "SAT-unPRODSAT", "UNSAT", "UNDECIDED"]
    coverable: bool
    kernel: KernelResult
    dimer_coverings: int | None = None
    product_span_rank: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def span_deficit(self) -> bool:
        """True when the covering product states span less than the kernel."""
        return self.product_span_rank is not None and self.product_span_rank < self.kernel.dimension

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "coverable": self.coverable,
            "kernel": self.kernel.to_dict(),
            "dimer_coverings": self.dimer_coverings,
            "product_span_rank": self.product_span_rank,
            "span_deficit": self.span_deficit,
            "notes": self.notes,
        }


class QSATService:
    """Kernel and SAT decisions with settings-driven defaults."""

    def __init__(self):
        self.settings = get_settings()

    def classify(self, graph: InteractionGraph, seed: int, with_span: bool = True) -> InstanceClass:
        """Combine coverability, the kernel dimension and the product-span rank."""
        from .matching_service import count_dimer_coverings, is_clause_coverable
        from .prodsat_service import enumerate_product_states, product_span_rank

        projectors = sample_projectors(graph, seed, "generic")
        kernel = kernel_dimension(graph, projectors)
        coverable = is_clause_coverable(graph)
        notes: list[str] = []

        if kernel.marginal:
            label = "UNDECIDED"
        elif kernel.dimension == 0:
            label = "UNSAT"
        elif coverable:
            label = "PRODSAT"
        else:
            label = "SAT-unPRODSAT"

        coverings: int | None = None
        span: int | None = None
        if coverable and graph.n_clauses and graph.n_qubits <= self.settings.ENUMERATION_LIMIT:
            coverings = count_dimer_coverings(graph)
            square = graph.n_clauses == graph.touched_qubits().size
            if with_span and square and coverings <= self.settings.MAX_STATES:
                enumeration = enumerate_product_states(graph, projectors, seed=seed)
                if enumeration.states:
                    span = product_span_rank(enumeration.states)
                if enumeration.failures:
                    notes.append(f"{len(enumeration.failures)} coverings failed to continue")
        if span is not None and span < kernel.dimension:
            notes.append("product states do not span the kernel")

        logger.info("instance_classified", label=label, coverable=coverable, dimension=kernel.dimension)
        return InstanceClass(label, coverable, kernel, coverings, span, notes)


_qsat_service: QSATService | None = None


def get_qsat_service() -> QSATService:
    """Get or create QSAT service singleton."""
    global _qsat_service
    if _qsat_service is None:
        _qsat_service = QSATService()
    return _qsat_service


def classify_instance(graph: InteractionGraph, seed: int = 0) -> InstanceClass:
    """PRODSAT / SAT-unPRODSAT / UNSAT label for ``graph`` at generic projectors."""
    return get_qsat_service().classify(graph, seed)
