"""Monte Carlo scans over clause density and crossing estimates."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np
from pydantic import BaseModel, Field

from ..core.config import get_settings
from ..core.exceptions import CrossingException, LimitExceededException
from ..utils.logger import get_logger
from ..utils.metrics import get_metrics
from ..utils.seeding import derive_seed
from .hypergraph_service import EnsembleMode, EnsembleParams, core_mask, sample_graph
from .matching_service import gf2_surjective, is_clause_coverable
from .qsat_service import Verdict, decide_sat, kernel_dimension, sample_projectors, verdict_from_kernel

logger = get_logger("threshold")

GraphProperty = Literal["coverable", "core_nonempty", "xorsat"]
ScanQuantity = Literal["sat", "coverable", "core_nonempty", "xorsat"]

POSITIVE = "positive"
NEGATIVE = "negative"
UNDECIDED = "undecided"


class ScanPoint(BaseModel):
    """Outcome counts at one ``(N, alpha)`` grid point."""

    n_qubits: int
    alpha: float
    trials: int
    positive: int = 0
    negative: int = 0
    undecided: int = 0

    @property
    def decided(self) -> int:
        return self.positive + self.negative

    @property
    def fraction(self) -> float:
        """Positive share among decided trials; undecided ones are left out."""
        return self.positive / self.decided if self.decided else float("nan")

    @property
    def stderr(self) -> float:
        if not self.decided:
            return float("nan")
        f = self.fraction
        return math.sqrt(f * (1.0 - f) / self.decided)


class ScanResult(BaseModel):
    """A full density scan, reproducible from its grid, seed and mode."""

    k: int
    quantity: ScanQuantity
    n_values: list[int]
    alpha_grid: list[float]
    trials: int
    seed: int
    mode: EnsembleMode
    solver: dict[str, float | int | str] = Field(default_factory=dict)
    points: list[ScanPoint] = Field(default_factory=list)

    def curve(self, n_qubits: int) -> list[ScanPoint]:
        return [p for p in self.points if p.n_qubits == n_qubits]

    def column_names(self) -> tuple[str, str]:
        if self.quantity == "sat":
            return "sat", "unsat"
        return POSITIVE, NEGATIVE

    def to_csv(self) -> str:
        positive, negative = self.column_names()
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["k", "N", "alpha", "trials", positive, negative, UNDECIDED, "fraction", "stderr"])
        for p in self.points:
            writer.writerow(
                [
                    self.k,
                    p.n_qubits,
                    repr(p.alpha),
                    p.trials,
                    p.positive,
                    p.negative,
                    p.undecided,
                    f"{p.fraction:.6g}",
                    f"{p.stderr:.6g}",
                ]
            )
        return buffer.getvalue()

    def write(self, directory: str | Path, stem: str) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and ``<stem>.json``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{stem}.csv"
        json_path = directory / f"{stem}.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.model_dump_json(indent=2))
        return csv_path, json_path


class Crossing(BaseModel):
    """Where one N's curve passes ``level``, with the 0.9/0.1 ticks."""

    n_qubits: int
    level: float
    alpha: float
    stderr: float
    lower_tick: float | None
    upper_tick: float | None
    decreasing: bool
    monotone: bool


def _graph_trial(task: tuple[int, int, float, str, int, str]) -> str:
    k, n, alpha, mode, seed, prop = task
    graph = sample_graph(EnsembleParams(n_qubits=n, k=k, clause_density=alpha, mode=mode, seed=seed))
    if prop == "coverable":
        hit = is_clause_coverable(graph)
    elif prop == "core_nonempty":
        hit = bool(core_mask(graph).any())
    else:
        hit = gf2_surjective(graph)
    return POSITIVE if hit else NEGATIVE


def _sat_trial(task: tuple[int, int, float, str, int, float | None, int | None]) -> str:
    k, n, alpha, mode, seed, tol, max_iters = task
    graph = sample_graph(EnsembleParams(n_qubits=n, k=k, clause_density=alpha, mode=mode, seed=seed))
    projectors = sample_projectors(graph, derive_seed(seed, 1), "generic")
    if n <= get_settings().DENSE_LIMIT:
        verdict = verdict_from_kernel(kernel_dimension(graph, projectors, tol))
    else:
        verdict = decide_sat(
            graph, projectors, tol_zero=tol, max_iters=max_iters, seed=derive_seed(seed, 2)
        ).verdict
    if verdict is Verdict.SAT:
        return POSITIVE
    if verdict is Verdict.UNSAT:
        return NEGATIVE
    return UNDECIDED


def _run_tasks(trial: Callable[[tuple], str], tasks: list[tuple], jobs: int) -> list[str]:
    """Map ``trial`` over ``tasks`` in order; the result does not depend on ``jobs``."""
    if jobs <= 1 or len(tasks) <= 1:
        return [trial(t) for t in tasks]
    chunksize = max(1, len(tasks) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(trial, tasks, chunksize=chunksize))


def _tally(n: int, alpha: float, outcomes: Sequence[str]) -> ScanPoint:
    point = ScanPoint(n_qubits=n, alpha=alpha, trials=len(outcomes))
    point.positive = sum(1 for o in outcomes if o == POSITIVE)
    point.negative = sum(1 for o in outcomes if o == NEGATIVE)
    point.undecided = sum(1 for o in outcomes if o == UNDECIDED)
    return point


def _scan(
    trial: Callable[[tuple], str],
    grid: list[tuple[int, float]],
    trials: int,
    seed: int,
    make_task: Callable[[int, float, int], tuple],
    jobs: int,
    quantity: str,
) -> list[ScanPoint]:
    metrics = get_metrics()
    points: list[ScanPoint] = []
    for index, (n, alpha) in enumerate(grid):
        tasks = [make_task(n, alpha, derive_seed(seed, index, t)) for t in range(trials)]
        outcomes = _run_tasks(trial, tasks, jobs)
        for outcome in outcomes:
            metrics.record_instance(f"{quantity}:{outcome}", undecided=outcome == UNDECIDED)
        point = _tally(n, alpha, outcomes)
        points.append(point)
        logger.info(
            "scan_point_complete",
            quantity=quantity,
            n_qubits=n,
            alpha=alpha,
            positive=point.positive,
            negative=point.negative,
            undecided=point.undecided,
        )
    return points


def scan_graph_property(
    k: int,
    n_qubits: int,
    alpha_grid: Sequence[float],
    trials: int,
    prop: GraphProperty = "coverable",
    seed: int = 0,
    mode: EnsembleMode = "binomial",
    jobs: int | None = None,
) -> ScanResult:
    """Fraction of random graphs with a purely combinatorial property."""
    jobs = get_settings().JOBS if jobs is None else jobs
    grid = [(n_qubits, float(a)) for a in alpha_grid]

    def make_task(n: int, alpha: float, trial_seed: int) -> tuple:
        return (k, n, alpha, mode, trial_seed, prop)

    points = _scan(_graph_trial, grid, trials, seed, make_task, jobs, prop)
    return ScanResult(
        k=k,
        quantity=prop,
        n_values=[n_qubits],
        alpha_grid=[float(a) for a in alpha_grid],
        trials=trials,
        seed=seed,
        mode=mode,
        points=points,
    )


def scan_sat_probability(
    k: int,
    n_list: Sequence[int],
    alpha_grid: Sequence[float],
    trials: int,
    seed: int = 0,
    tol: float | None = None,
    max_iters: int | None = None,
    mode: EnsembleMode = "fixed-count",
    jobs: int | None = None,
) -> ScanResult:
    """SAT probability of random instances with generic projectors.

    Instances up to the dense limit are decided from the full spectrum, larger
    ones by ARPACK Lanczos.
    """
    settings = get_settings()
    jobs = settings.JOBS if jobs is None else jobs
    if max(n_list) > settings.ITERATIVE_LIMIT:
        raise LimitExceededException(
            f"SAT scans are limited to {settings.ITERATIVE_LIMIT} qubits", limit=settings.ITERATIVE_LIMIT
        )
    grid = [(int(n), float(a)) for n in n_list for a in alpha_grid]

    def make_task(n: int, alpha: float, trial_seed: int) -> tuple:
        return (k, n, alpha, mode, trial_seed, tol, max_iters)

    points = _scan(_sat_trial, grid, trials, seed, make_task, jobs, "sat")
    solver: dict[str, float | int | str] = {
        "dense_limit": settings.DENSE_LIMIT,
        "kernel_tol_factor": settings.KERNEL_TOL_FACTOR,
        "tol_zero": settings.TOL_ZERO if tol is None else tol,
        "tol_gap": settings.TOL_GAP,
        "max_iters": settings.MAX_ITERS if max_iters is None else max_iters,
        "krylov_dim": settings.LANCZOS_KRYLOV_DIM,
        "lanczos_tol": settings.LANCZOS_TOL,
        "gap_ratio": settings.GAP_RATIO,
        "empty_gap_ratio": settings.EMPTY_GAP_RATIO,
    }
    return ScanResult(
        k=k,
        quantity="sat",
        n_values=[int(n) for n in n_list],
        alpha_grid=[float(a) for a in alpha_grid],
        trials=trials,
        seed=seed,
        mode=mode,
        solver=solver,
        points=points,
    )


def _crossing_for(points: list[ScanPoint], level: float) -> Crossing:
    usable = [p for p in points if p.decided]
    alphas = np.array([p.alpha for p in usable])
    fractions = np.array([p.fraction for p in usable])
    n = usable[0].n_qubits if usable else points[0].n_qubits
    if alphas.size < 2:
        raise CrossingException(f"N={n}: fewer than two decided grid points")

    decreasing = bool(fractions[0] >= fractions[-1])
    # work on a decreasing curve; increasing ones are mirrored
    g = fractions if decreasing else 1.0 - fractions
    target = level if decreasing else 1.0 - level
    monotone = bool(np.all(np.diff(g) <= 0.0))

    for i in range(alphas.size - 1):
        if g[i] >= target > g[i + 1]:
            break
    else:
        raise CrossingException(f"N={n}: curve does not cross level {level}")

    slope = (g[i + 1] - g[i]) / (alphas[i + 1] - alphas[i])
    alpha = float(alphas[i] + (g[i] - target) / (g[i] - g[i + 1]) * (alphas[i + 1] - alphas[i]))
    decided = 0.5 * (usable[i].decided + usable[i + 1].decided)
    stderr = math.sqrt(target * (1.0 - target) / decided) / abs(slope)

    above = alphas[g > 0.9]
    below = alphas[g < 0.1]
    return Crossing(
        n_qubits=n,
        level=level,
        alpha=alpha,
        stderr=float(stderr),
        lower_tick=float(above.max()) if above.size else None,
        upper_tick=float(below.min()) if below.size else None,
        decreasing=decreasing,
        monotone=monotone,
    )


def estimate_crossing(scan: ScanResult, level: float = 0.5) -> list[Crossing]:
    """First crossing of ``level`` for every N in the scan, by linear interpolation."""
    crossings = [_crossing_for(scan.curve(n), level) for n in scan.n_values]
    for c in crossings:
        if not c.monotone:
            logger.warning("scan_curve_not_monotone", n_qubits=c.n_qubits, quantity=scan.quantity)
    return crossings


def alpha_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive grid, rounded to the step's decimals so repeated runs agree."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    decimals = max(0, -int(math.floor(math.log10(step))) + 1)
    return [round(start + i * step, decimals) for i in range(count)]
