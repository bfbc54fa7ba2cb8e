"""Satisfying product states: dimer-covering seeds, continuation, enumeration."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from ..core.config import get_settings
from ..core.exceptions import (
    ContinuationException,
    DimensionMismatchException,
    GraphException,
    LimitExceededException,
    MatchingException,
    ProjectorException,
    StateException,
)
from ..utils.logger import get_logger
from ..utils.metrics import get_metrics
from ..utils.seeding import derive_seed, make_rng
from .hypergraph_service import InteractionGraph
from .matching_service import (
    Matching,
    count_dimer_coverings,
    is_clause_coverable,
    iter_dimer_coverings,
    max_clause_matching,
)
from .qsat_service import ProjectorSet, haar_qubits, sample_projectors

logger = get_logger("prodsat")

ChartConvention = Literal["standard", "flipped"]

_NORM_TOL = 1e-12
_PATH_NORM_FLOOR = 1e-14


def orthogonal_qubit(a: np.ndarray) -> np.ndarray:
    """The state orthogonal to ``a`` (rows), ``(-conj a1, conj a0)``."""
    a = np.asarray(a)
    return np.stack([-a[..., 1].conj(), a[..., 0].conj()], axis=-1)


@dataclass(frozen=True)
class ProductState:
    """One unit 2-vector per qubit, stored as an ``(N, 2)`` array."""

    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.complex128)
        if vectors.ndim != 2 or vectors.shape[1] != 2:
            raise StateException(f"product state must have shape (N, 2), got {vectors.shape}")
        norms = np.linalg.norm(vectors, axis=1)
        if vectors.shape[0] and np.max(np.abs(norms - 1.0)) > _NORM_TOL:
            raise StateException("every qubit factor must have unit norm")
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_unnormalized(cls, vectors: np.ndarray) -> "ProductState":
        vectors = np.asarray(vectors, dtype=np.complex128)
        return cls(vectors / np.linalg.norm(vectors, axis=1, keepdims=True))

    @property
    def n_qubits(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def chart(self) -> tuple[np.ndarray, np.ndarray]:
        """Stereographic coordinates and flipped-chart flags per qubit.

        A qubit in the active chart satisfies ``psi ~ (z, 1)``; a flipped one
        satisfies ``psi ~ (1, w)``. The chart is chosen so that ``|z| <= 1``.
        """
        first, second = self.vectors[:, 0], self.vectors[:, 1]
        flipped = np.abs(first) > np.abs(second)
        coords = np.where(
            flipped, second / np.where(flipped, first, 1.0), first / np.where(flipped, 1.0, second)
        )
        return coords, flipped

    def same_as(self, other: "ProductState", tol: float | None = None) -> bool:
        """Equal up to one phase per qubit."""
        tol = get_settings().DISTINCT_FIDELITY_TOL if tol is None else tol
        if other.n_qubits != self.n_qubits:
            return False
        fidelity = np.abs(np.sum(self.vectors.conj() * other.vectors, axis=1))
        return bool(np.all(fidelity > 1.0 - tol))

    def to_vector(self) -> np.ndarray:
        """Dense ``2**N`` amplitude vector, qubit 0 most significant."""
        out = np.ones(1, dtype=np.complex128)
        for psi in self.vectors:
            out = np.kron(out, psi)
        return out

    def to_dict(self) -> list[list[list[float]]]:
        return [[[float(c.real), float(c.imag)] for c in psi] for psi in self.vectors]


@dataclass
class HomotopyTrace:
    """Bookkeeping for one continuation run."""

    steps: int = 0
    final_residual: float = 0.0
    condition_estimates: list[float] = field(default_factory=list)
    chart_flips: list[tuple[int, int]] = field(default_factory=list)
    newton_iterations: int = 0
    attempts: int = 1

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "final_residual": self.final_residual,
            "max_condition": max(self.condition_estimates) if self.condition_estimates else None,
            "chart_flips": [list(e) for e in self.chart_flips],
            "newton_iterations": self.newton_iterations,
            "attempts": self.attempts,
        }


@dataclass
class CoveringFailure:
    covering: Matching
    message: str
    step: int | None
    reason: str


@dataclass
class EnumerationResult:
    """Distinct continued states plus the coverings that failed or collided."""

    states: list[ProductState]
    failures: list[CoveringFailure]
    coverings: int

    def to_dict(self) -> dict:
        return {
            "coverings": self.coverings,
            "states": [s.to_dict() for s in self.states],
            "failures": [
                {"covering": f.covering.to_dict(), "message": f.message, "step": f.step, "reason": f.reason}
                for f in self.failures
            ],
        }


@dataclass
class SearchResult:
    state: ProductState | None
    best_energy: float
    starts: int


def _contract(conj_phis: np.ndarray, sites: np.ndarray) -> np.ndarray:
    """``<phi^m | s_1 (x) ... (x) s_k>`` for every clause row."""
    m, k = sites.shape[:2]
    t = conj_phis
    for j in range(k):
        t = np.einsum("mar,ma->mr", t.reshape(m, 2, -1), sites[:, j, :])
    return t.reshape(m)


def _check_state(graph: InteractionGraph, state: ProductState) -> None:
    if state.n_qubits != graph.n_qubits:
        raise DimensionMismatchException(
            f"product state has {state.n_qubits} qubits, graph has {graph.n_qubits}"
        )


def energy_of_product_state(graph: InteractionGraph, projectors: ProjectorSet, state: ProductState) -> float:
    """``sum_m |<phi^m | psi_m1 (x) ... (x) psi_mk>|^2``."""
    projectors.check_graph(graph)
    _check_state(graph, state)
    if graph.n_clauses == 0:
        return 0.0
    overlaps = _contract(projectors.vectors.conj(), state.vectors[graph.clause_array])
    return float(np.sum(np.abs(overlaps) ** 2))


def product_seed_state(
    graph: InteractionGraph, projectors: ProjectorSet, cover: Matching, seed: int = 0
) -> ProductState:
    """Zero-energy state at product projectors built from a dimer covering.

    Each clause's matched qubit is set orthogonal to the clause's local factor
    there; every other qubit gets a Haar state drawn from ``seed`` (drawn for
    all qubits first, so the same seed gives the same free qubits for every
    covering).
    """
    if not projectors.product_form:
        raise ProjectorException("seed states need product-form projectors")
    projectors.check_graph(graph)
    cover.validate(graph)
    if not cover.is_dimer_covering(graph):
        raise MatchingException(f"matching covers {cover.size} of {graph.n_clauses} clauses")

    vectors = haar_qubits(make_rng(seed), graph.n_qubits)
    for m, q in cover.assignment.items():
        site = graph.clauses[m].index(q)
        vectors[q] = orthogonal_qubit(projectors.factors[m, site])
    return ProductState(vectors)


class _Frames:
    """Per-qubit affine charts ``v_n(z) = z * tangent_n + base_n``."""

    def __init__(self, base: np.ndarray, convention: ChartConvention):
        self.convention = convention
        self.rebase(base)

    def rebase(self, base: np.ndarray) -> None:
        self.base = base / np.linalg.norm(base, axis=1, keepdims=True)
        tangent = orthogonal_qubit(self.base)
        self.tangent = -tangent if self.convention == "flipped" else tangent

    def vectors(self, z: np.ndarray) -> np.ndarray:
        return z[:, None] * self.tangent + self.base

    def flip(self, n: int) -> None:
        self.base[n], self.tangent[n] = self.tangent[n].copy(), self.base[n].copy()


class _ClauseSystem:
    """Overlap equations ``F_m(z) = 0`` and their Jacobian for one projector set."""

    def __init__(self, graph: InteractionGraph, vectors: np.ndarray):
        self.clauses = graph.clause_array
        self.n_qubits = graph.n_qubits
        self.conj_phis = vectors.conj()

    def evaluate(self, frames: _Frames, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        v = frames.vectors(z)
        local = v[self.clauses]
        residual = _contract(self.conj_phis, local)
        m, k = self.clauses.shape
        jacobian = np.zeros((m, self.n_qubits), dtype=np.complex128)
        rows = np.arange(m)
        tangents = frames.tangent[self.clauses]
        for j in range(k):
            sites = local.copy()
            sites[:, j, :] = tangents[:, j, :]
            jacobian[rows, self.clauses[:, j]] = _contract(self.conj_phis, sites)
        norms = np.prod(np.sum(np.abs(local) ** 2, axis=2), axis=1)
        energy = float(np.sum(np.abs(residual) ** 2 / norms))
        return residual, jacobian, energy


def _least_norm(jacobian: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(jacobian, rhs, rcond=None)[0]


def _newton(
    system: _ClauseSystem,
    frames: _Frames,
    z: np.ndarray,
    tol: float,
    step: int,
    trace: HomotopyTrace,
) -> tuple[np.ndarray, float]:
    """Damped Newton on ``F(z) = 0`` until the normalized energy is below ``tol``."""
    settings = get_settings()
    residual, jacobian, energy = system.evaluate(frames, z)
    iterations = 0
    while energy >= tol:
        if iterations == settings.NEWTON_MAX_ITERS:
            raise ContinuationException(
                f"Newton did not converge at step {step} (energy {energy:.3e})", step=step, reason="newton"
            )
        delta = -_least_norm(jacobian, residual)
        scale = 1.0
        for _ in range(settings.NEWTON_MAX_HALVINGS + 1):
            trial = z + scale * delta
            t_residual, t_jacobian, t_energy = system.evaluate(frames, trial)
            if t_energy < energy:
                break
            scale /= 2
        else:
            raise ContinuationException(
                f"damped Newton step stalled at step {step} (energy {energy:.3e})",
                step=step,
                reason="damping",
            )
        z, residual, jacobian, energy = trial, t_residual, t_jacobian, t_energy
        iterations += 1

        poles = np.flatnonzero(np.abs(z) > 1.0)
        for n in poles:
            frames.flip(int(n))
            z[n] = 1.0 / z[n]
            trace.chart_flips.append((step, int(n)))
        if poles.size:
            residual, jacobian, energy = system.evaluate(frames, z)
    trace.newton_iterations += iterations
    return z, energy


def _polish(
    system: _ClauseSystem, frames: _Frames, z: np.ndarray, energy: float, rounds: int = 3
) -> np.ndarray:
    """A few undamped Newton steps, kept only while they lower the energy."""
    for _ in range(rounds):
        residual, jacobian, _ = system.evaluate(frames, z)
        trial = z - _least_norm(jacobian, residual)
        _, _, t_energy = system.evaluate(frames, trial)
        if not t_energy < energy:
            break
        z, energy = trial, t_energy
    return z


def _interpolate(start: np.ndarray, target: np.ndarray, t: float, step: int) -> np.ndarray:
    path = (1.0 - t) * start + t * target
    norms = np.linalg.norm(path, axis=1, keepdims=True)
    if np.any(norms < _PATH_NORM_FLOOR):
        raise ContinuationException("interpolated projector vanished", step=step, reason="path")
    return path / norms


def continue_product_state(
    graph: InteractionGraph,
    target: ProjectorSet,
    start: ProjectorSet,
    s_start: ProductState,
    steps: int | None = None,
    tol: float | None = None,
    chart: ChartConvention = "standard",
) -> tuple[ProductState, HomotopyTrace]:
    """Follow a zero-energy product state from ``start`` to ``target``.

    The path normalizes ``(1 - t) phi_start + t phi_target`` clause by clause.
    Every step re-centres each qubit's chart on the current solution, takes
    the least-norm predictor ``J dz = -F`` and corrects with damped Newton.
    """
    settings = get_settings()
    steps = settings.HOMOTOPY_STEPS if steps is None else steps
    tol = settings.HOMOTOPY_TOL if tol is None else tol
    target.check_graph(graph)
    start.check_graph(graph)
    _check_state(graph, s_start)

    start_energy = energy_of_product_state(graph, start, s_start)
    if start_energy >= tol:
        raise ContinuationException(
            f"start state has energy {start_energy:.3e} at the start projectors", step=0, reason="start"
        )
    if graph.n_clauses == 0 or np.array_equal(start.vectors, target.vectors):
        return s_start, HomotopyTrace(steps=0, final_residual=energy_of_product_state(graph, target, s_start))

    trace = HomotopyTrace(steps=steps)
    frames = _Frames(s_start.vectors.copy(), chart)
    zero = np.zeros(graph.n_qubits, dtype=np.complex128)
    for step in range(1, steps + 1):
        system = _ClauseSystem(graph, _interpolate(start.vectors, target.vectors, step / steps, step))
        residual, jacobian, _ = system.evaluate(frames, zero)

        singular = np.linalg.svd(jacobian, compute_uv=False)
        floor = settings.JACOBIAN_RANK_TOL * max(singular[0], 1e-300)
        if singular.size < graph.n_clauses or singular[-1] <= floor:
            raise ContinuationException(f"clause Jacobian lost rank at step {step}", step=step, reason="rank")
        trace.condition_estimates.append(float(singular[0] / singular[-1]))

        z = -_least_norm(jacobian, residual)
        z, energy = _newton(system, frames, z, tol, step, trace)
        if step == steps:
            z = _polish(system, frames, z, energy)
        frames.rebase(frames.vectors(z))

    state = ProductState.from_unnormalized(frames.base)
    trace.final_residual = energy_of_product_state(graph, target, state)
    logger.debug(
        "continuation_complete",
        steps=steps,
        final_residual=trace.final_residual,
        chart_flips=len(trace.chart_flips),
    )
    return state, trace


def _continue_from_covering(
    graph: InteractionGraph,
    target: ProjectorSet,
    cover: Matching,
    seed: int,
    steps: int,
    tol: float | None,
    chart: ChartConvention,
) -> tuple[ProductState, HomotopyTrace]:
    """Seed at random product projectors and continue, retrying on failure.

    Attempt ``a`` draws its start projectors from ``(seed, a)`` and doubles the
    step count each time; the start point is shared by every covering that
    uses the same seed.
    """
    settings = get_settings()
    metrics = get_metrics()
    retrying = Retrying(
        stop=stop_after_attempt(settings.CONTINUATION_RETRIES),
        retry=retry_if_exception_type(ContinuationException),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            number = attempt.retry_state.attempt_number
            if number > 1:
                metrics.record_retry()
                logger.warning("continuation_retry", attempt=number, steps=steps * 2 ** (number - 1))
            start = sample_projectors(graph, derive_seed(seed, number), "product")
            seeded = product_seed_state(graph, start, cover, seed=derive_seed(seed, number, 1))
            state, trace = continue_product_state(
                graph, target, start, seeded, steps * 2 ** (number - 1), tol, chart
            )
            trace.attempts = number
    return state, trace


def solve_product_state(
    graph: InteractionGraph,
    target: ProjectorSet,
    seed: int = 0,
    steps: int | None = None,
    tol: float | None = None,
    chart: ChartConvention = "standard",
) -> tuple[ProductState, HomotopyTrace]:
    """A satisfying product state at ``target`` for a clause-coverable graph."""
    if not is_clause_coverable(graph):
        raise MatchingException("graph has no dimer covering")
    steps = get_settings().HOMOTOPY_STEPS if steps is None else steps
    cover = max_clause_matching(graph)
    return _continue_from_covering(graph, target, cover, seed, steps, tol, chart)


def enumerate_product_states(
    graph: InteractionGraph,
    projectors: ProjectorSet,
    max_states: int | None = None,
    seed: int = 0,
    steps: int | None = None,
    tol: float | None = None,
) -> EnumerationResult:
    """One continued product state per dimer covering of an M = N graph."""
    settings = get_settings()
    max_states = settings.MAX_STATES if max_states is None else max_states
    steps = settings.HOMOTOPY_STEPS if steps is None else steps
    touched = graph.touched_qubits().size
    if graph.n_clauses != touched:
        raise GraphException(
            f"enumeration needs as many clauses as touched qubits ({graph.n_clauses} vs {touched})"
        )
    coverings = count_dimer_coverings(graph)
    if coverings > max_states:
        raise LimitExceededException(
            f"{coverings} dimer coverings exceed max_states={max_states}", limit=max_states
        )

    states: list[ProductState] = []
    failures: list[CoveringFailure] = []
    for cover in iter_dimer_coverings(graph):
        try:
            state, _ = _continue_from_covering(graph, projectors, cover, seed, steps, tol, "standard")
        except ContinuationException as e:
            failures.append(CoveringFailure(cover, str(e), e.step, e.reason))
            logger.warning("covering_failed", covering=cover.to_dict(), reason=e.reason, step=e.step)
            continue
        duplicate = next((i for i, other in enumerate(states) if state.same_as(other)), None)
        if duplicate is not None:
            # distinct coverings continue to distinct states at generic projectors
            message = f"continued onto already found state {duplicate}"
            failures.append(CoveringFailure(cover, message, None, "duplicate"))
            logger.warning("covering_collided", covering=cover.to_dict(), duplicate_of=duplicate)
            continue
        states.append(state)

    logger.info("product_states_enumerated", coverings=coverings, states=len(states), failures=len(failures))
    return EnumerationResult(states=states, failures=failures, coverings=coverings)


def search_product_state(
    graph: InteractionGraph,
    projectors: ProjectorSet,
    seed: int = 0,
    starts: int | None = None,
    max_iters: int | None = None,
    tol: float | None = None,
) -> SearchResult:
    """Multi-start damped Gauss-Newton on the clause overlaps.

    Makes no use of coverings, so it also works on graphs without one.
    """
    settings = get_settings()
    starts = settings.SEARCH_STARTS if starts is None else starts
    max_iters = settings.SEARCH_MAX_ITERS if max_iters is None else max_iters
    tol = settings.TOL_ZERO if tol is None else tol
    projectors.check_graph(graph)

    rng = make_rng(seed)
    system = _ClauseSystem(graph, projectors.vectors)
    zero = np.zeros(graph.n_qubits, dtype=np.complex128)
    best = float("inf")
    for attempt in range(1, starts + 1):
        frames = _Frames(haar_qubits(rng, graph.n_qubits), "standard")
        residual, jacobian, energy = system.evaluate(frames, zero)
        for _ in range(max_iters):
            if energy < tol:
                break
            delta = -_least_norm(jacobian, residual)
            scale = 1.0
            improved = False
            for _ in range(settings.NEWTON_MAX_HALVINGS + 1):
                trial = scale * delta
                _, _, t_energy = system.evaluate(frames, trial)
                if t_energy < energy:
                    improved = True
                    break
                scale /= 2
            if not improved:
                break
            frames.rebase(frames.vectors(trial))
            residual, jacobian, energy = system.evaluate(frames, zero)
        best = min(best, energy)
        if energy < tol:
            state = ProductState.from_unnormalized(frames.base)
            logger.debug("product_state_found", start=attempt, energy=energy)
            return SearchResult(state=state, best_energy=energy, starts=attempt)

    logger.debug("product_state_search_failed", starts=starts, best_energy=best)
    return SearchResult(state=None, best_energy=best, starts=starts)


def gram_matrix(states: Sequence[ProductState], sites: Sequence[int] | None = None) -> np.ndarray:
    """``G_ab = prod_n <psi^b_n | psi^a_n>`` over ``sites`` (default: all)."""
    if not states:
        raise StateException("at least one product state is required")
    stack = np.stack([s.vectors for s in states])
    if sites is not None:
        stack = stack[:, list(sites), :]
    overlaps = np.einsum("bnc,anc->abn", stack.conj(), stack)
    return np.prod(overlaps, axis=2)


def hermitian_rank(matrix: np.ndarray, rel_tol: float | None = None) -> int:
    """Eigenvalues above ``rel_tol`` times the largest."""
    rel_tol = get_settings().RANK_TOL if rel_tol is None else rel_tol
    evals = np.linalg.eigvalsh(matrix)
    top = float(evals[-1])
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(evals > rel_tol * top))


def product_span_rank(states: Sequence[ProductState]) -> int:
    """Dimension of the span of ``states`` from their overlap Gram matrix."""
    return hermitian_rank(gram_matrix(states))


class ProdsatService:
    """Product-state construction with settings-driven defaults."""

    def __init__(self):
        self.settings = get_settings()

    def witness(
        self, graph: InteractionGraph, seed: int, steps: int | None = None, tol: float | None = None
    ) -> dict:
        """Satisfying product state at generic projectors, or the best search result."""
        target = sample_projectors(graph, seed, "generic")
        tol = self.settings.HOMOTOPY_TOL if tol is None else tol
        if is_clause_coverable(graph):
            state, trace = solve_product_state(graph, target, seed=seed, steps=steps, tol=tol)
            return {
                "coverable": True,
                "found": True,
                "energy": trace.final_residual,
                "witness": state.to_dict(),
                "trace": trace.to_dict(),
            }
        result = search_product_state(graph, target, seed=seed)
        return {
            "coverable": False,
            "found": result.state is not None,
            "energy": result.best_energy,
            "witness": result.state.to_dict() if result.state is not None else None,
            "starts": result.starts,
        }

    def enumerate(self, graph: InteractionGraph, seed: int, steps: int | None = None) -> dict:
        target = sample_projectors(graph, seed, "generic")
        result = enumerate_product_states(graph, target, seed=seed, steps=steps)
        payload = result.to_dict()
        payload["energies"] = [energy_of_product_state(graph, target, s) for s in result.states]
        payload["span_rank"] = product_span_rank(result.states) if result.states else 0
        return payload


_prodsat_service: ProdsatService | None = None


def get_prodsat_service() -> ProdsatService:
    """Get or create product-state service singleton."""
    global _prodsat_service
    if _prodsat_service is None:
        _prodsat_service = ProdsatService()
    return _prodsat_service
