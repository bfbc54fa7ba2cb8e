"""CLI subcommands."""

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import click

from .. import __version__
from ..core.config import get_settings
from ..core.exceptions import CrossingException
from ..core.instances import REFERENCE_INSTANCES, REFERENCE_LABELS, instance_filename
from ..services.bound_service import sunflower_alpha_upper
from ..services.hypergraph_service import (
    EnsembleParams,
    InteractionGraph,
    core_size,
    hypercore,
    load_graph,
    reference_instance,
    sample_graph,
)
from ..services.matching_service import (
    count_dimer_coverings,
    gf2_surjective,
    is_clause_coverable,
    max_clause_matching,
)
from ..services.prodsat_service import get_prodsat_service
from ..services.qsat_service import decide_sat, get_qsat_service, kernel_dimension, sample_projectors
from ..services.rdm_service import get_rdm_service
from ..services.threshold_service import (
    alpha_grid,
    estimate_crossing,
    scan_graph_property,
    scan_sat_probability,
)
from ..utils.logger import get_logger
from ..utils.metrics import get_metrics
from .errors import QSATGroup
from .models import GraphFile, RunManifest, RunTiming

logger = get_logger("cli")

GRAPH_OPTION = click.option(
    "--graph",
    "graph_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Graph JSON file.",
)
SEED_OPTION = click.option("--seed", type=click.IntRange(0, (1 << 64) - 1), default=0, show_default=True)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def manifest_path(output: Path) -> Path:
    """Sidecar manifest written next to ``output``."""
    return output.with_suffix(".manifest.json")


def _emit(
    ctx: click.Context,
    result: dict[str, Any],
    seed: int | None = None,
    inputs: Sequence[Path] = (),
    outputs: Sequence[Path] = (),
) -> None:
    """Print ``result`` plus its run manifest as sorted JSON on stdout.

    Every output file also gets a sidecar manifest holding the
    deterministic part, so the file can be regenerated and checked.
    """
    metrics = get_metrics()
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in ctx.params.items()}
    manifest = RunManifest(
        subcommand=ctx.info_name or "",
        params=params,
        seed=seed,
        version=__version__,
        inputs={str(p): _digest(p) for p in inputs},
        outputs={str(p): _digest(p) for p in outputs},
        metrics=metrics.snapshot(),
        timing=RunTiming(
            timestamp=datetime.now(timezone.utc).isoformat(),
            elapsed_seconds=round(metrics.elapsed_seconds, 3),
        ),
    )
    sidecars = sorted({manifest_path(p) for p in outputs})
    for path in sidecars:
        path.write_text(json.dumps(manifest.deterministic(), sort_keys=True, indent=2) + "\n")

    payload = dict(result)
    payload["manifest"] = manifest.model_dump()
    if sidecars:
        payload["manifest_files"] = [str(p) for p in sidecars]
    click.echo(json.dumps(payload, sort_keys=True))


def _write_graph(graph: InteractionGraph, path: Path, label: str | None = None) -> None:
    model = GraphFile(
        n_qubits=graph.n_qubits, k=graph.k, clauses=[list(c) for c in graph.clauses], label=label
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2, exclude_none=True) + "\n")


@click.group(cls=QSATGroup)
@click.version_option(__version__, prog_name="qsat")
def cli():
    """Generic quantum satisfiability toolkit."""


@cli.command()
@click.option("--n", "n_qubits", type=click.IntRange(min=1), required=True, help="Number of qubits.")
@click.option("--k", type=click.IntRange(min=2), required=True, help="Clause arity.")
@click.option("--alpha", type=click.FloatRange(min=0.0), required=True, help="Clause density M/N.")
@click.option("--mode", type=click.Choice(["binomial", "fixed-count"]), default="binomial", show_default=True)
@SEED_OPTION
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_context
def gen(ctx, n_qubits, k, alpha, mode, seed, out):
    """Sample a random interaction graph."""
    graph = sample_graph(EnsembleParams(n_qubits=n_qubits, k=k, clause_density=alpha, mode=mode, seed=seed))
    result: dict[str, Any] = {"n_clauses": graph.n_clauses}
    outputs = []
    if out is not None:
        _write_graph(graph, out)
        outputs.append(out)
    else:
        result["graph"] = graph.to_dict()
    _emit(ctx, result, seed=seed, outputs=outputs)


@cli.command()
@GRAPH_OPTION
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_context
def core(ctx, graph_path, out):
    """Peel degree-1 qubits down to the hypercore."""
    graph = load_graph(graph_path)
    qubits, clauses = core_size(graph)
    result: dict[str, Any] = {"core_qubits": qubits, "core_clauses": clauses, "core_nonempty": clauses > 0}
    outputs = []
    if out is not None:
        _write_graph(hypercore(graph), out)
        outputs.append(out)
    else:
        result["core"] = hypercore(graph).to_dict()
    _emit(ctx, result, inputs=[graph_path], outputs=outputs)


@cli.command()
@GRAPH_OPTION
@click.pass_context
def match(ctx, graph_path):
    """Maximum clause-qubit matching."""
    graph = load_graph(graph_path)
    matching = max_clause_matching(graph)
    result = {
        "size": matching.size,
        "matching": matching.to_dict(),
        "covers_all_clauses": matching.is_dimer_covering(graph),
    }
    _emit(ctx, result, inputs=[graph_path])


@cli.command()
@GRAPH_OPTION
@click.pass_context
def cover(ctx, graph_path):
    """Whether every clause can be matched to its own qubit."""
    graph = load_graph(graph_path)
    _emit(ctx, {"coverable": is_clause_coverable(graph)}, inputs=[graph_path])


@cli.command("count-coverings")
@GRAPH_OPTION
@click.pass_context
def count_coverings(ctx, graph_path):
    """Exact number of dimer coverings."""
    graph = load_graph(graph_path)
    _emit(ctx, {"count": count_dimer_coverings(graph)}, inputs=[graph_path])


@cli.command()
@GRAPH_OPTION
@click.pass_context
def gf2(ctx, graph_path):
    """Full row rank of the clause-qubit adjacency over GF(2)."""
    graph = load_graph(graph_path)
    _emit(ctx, {"surjective": gf2_surjective(graph)}, inputs=[graph_path])


@cli.command()
@GRAPH_OPTION
@SEED_OPTION
@click.option("--form", type=click.Choice(["generic", "product"]), default="generic", show_default=True)
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=None, help="Zero threshold.")
@click.pass_context
def kernel(ctx, graph_path, seed, form, tol):
    """Dimension of the zero-energy space by dense diagonalization."""
    graph = load_graph(graph_path)
    projectors = sample_projectors(graph, seed, form)
    result = kernel_dimension(graph, projectors, tol)
    get_metrics().record_instance("kernel", undecided=result.marginal)
    _emit(ctx, result.to_dict(), seed=seed, inputs=[graph_path])


@cli.command()
@GRAPH_OPTION
@SEED_OPTION
@click.option("--form", type=click.Choice(["generic", "product"]), default="generic", show_default=True)
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=None, help="Zero threshold.")
@click.option("--max-iters", type=click.IntRange(min=1), default=lambda: get_settings().MAX_ITERS)
@click.pass_context
def sat(ctx, graph_path, seed, form, tol, max_iters):
    """SAT / UNSAT / UNDECIDED from the smallest eigenvalue."""
    graph = load_graph(graph_path)
    projectors = sample_projectors(graph, seed, form)
    verdict = decide_sat(graph, projectors, tol_zero=tol, max_iters=max_iters, seed=seed)
    get_metrics().record_instance(verdict.verdict.value, undecided=verdict.verdict.value == "UNDECIDED")
    _emit(ctx, verdict.to_dict(), seed=seed, inputs=[graph_path])


@cli.command()
@GRAPH_OPTION
@SEED_OPTION
@click.option("--steps", type=click.IntRange(min=1), default=lambda: get_settings().HOMOTOPY_STEPS)
@click.option(
    "--tol",
    type=click.FloatRange(min=0.0, min_open=True),
    default=lambda: get_settings().HOMOTOPY_TOL,
)
@click.option("--enumerate", "enumerate_all", is_flag=True, help="Continue every dimer covering (M = N).")
@click.pass_context
def prodsat(ctx, graph_path, seed, steps, tol, enumerate_all):
    """Satisfying product state at generic projectors."""
    graph = load_graph(graph_path)
    service = get_prodsat_service()
    if enumerate_all:
        result = service.enumerate(graph, seed, steps=steps)
    else:
        result = service.witness(graph, seed, steps=steps, tol=tol)
    _emit(ctx, result, seed=seed, inputs=[graph_path])


@cli.command()
@GRAPH_OPTION
@SEED_OPTION
@click.option("--subset-size", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=lambda: get_settings().RANK_TOL)
@click.pass_context
def rdm(ctx, graph_path, seed, subset_size, tol):
    """Histogram of reduced-density-matrix ranks of a generic ground state."""
    graph = load_graph(graph_path)
    histogram = get_rdm_service().histogram(graph, seed, subset_size, tol)
    _emit(ctx, histogram.to_dict(), seed=seed, inputs=[graph_path])


@cli.command()
@click.option(
    "--quantity",
    type=click.Choice(["sat", "coverable", "core_nonempty", "xorsat"]),
    default="coverable",
    show_default=True,
)
@click.option("--k", type=click.IntRange(min=2), required=True)
@click.option("--n", "n_values", type=click.IntRange(min=1), multiple=True, required=True)
@click.option("--alpha-start", type=float, required=True)
@click.option("--alpha-stop", type=float, required=True)
@click.option("--alpha-step", type=click.FloatRange(min=0.0, min_open=True), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=101, show_default=True)
@SEED_OPTION
@click.option("--mode", type=click.Choice(["binomial", "fixed-count"]), default=None)
@click.option("--jobs", type=click.IntRange(min=1), default=lambda: get_settings().JOBS)
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=None)
@click.option("--max-iters", type=click.IntRange(min=1), default=None)
@click.option("--level", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=0.5)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.pass_context
def scan(
    ctx, quantity, k, n_values, alpha_start, alpha_stop, alpha_step,
    trials, seed, mode, jobs, tol, max_iters, level, out_dir,
):
    """Monte Carlo scan over clause density; writes CSV and JSON tables."""
    grid = alpha_grid(alpha_start, alpha_stop, alpha_step)
    if quantity == "sat":
        result = scan_sat_probability(
            k, list(n_values), grid, trials, seed=seed, tol=tol, max_iters=max_iters,
            mode=mode or "fixed-count", jobs=jobs,
        )
    else:
        if len(n_values) != 1:
            raise click.BadParameter("graph-property scans take a single --n", param_hint="--n")
        result = scan_graph_property(
            k, n_values[0], grid, trials, prop=quantity, seed=seed, mode=mode or "binomial", jobs=jobs
        )

    stem = f"scan_{quantity}_k{k}"
    csv_path, json_path = result.write(out_dir, stem)
    try:
        crossings = [c.model_dump() for c in estimate_crossing(result, level)]
    except CrossingException as e:
        logger.warning("crossing_unavailable", reason=str(e))
        crossings = []
    _emit(
        ctx,
        {"csv": str(csv_path), "json": str(json_path), "crossings": crossings, "points": len(result.points)},
        seed=seed,
        outputs=[csv_path, json_path],
    )


@cli.command()
@click.option("--k", type=click.IntRange(min=3), required=True)
@click.pass_context
def bound(ctx, k):
    """Sunflower upper bound on the critical clause density."""
    result = sunflower_alpha_upper(k)
    _emit(ctx, result.model_dump(mode="json"))


@cli.command("reference-instances")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."))
@click.pass_context
def reference_instances(ctx, out_dir):
    """Write the three bundled N = M = 10 instances as graph JSON."""
    written = []
    for label in REFERENCE_INSTANCES:
        path = out_dir / instance_filename(label)
        _write_graph(reference_instance(label), path, label=REFERENCE_LABELS[label])
        written.append(path)
    _emit(ctx, {"files": [str(p) for p in written]}, outputs=written)


@cli.command()
@GRAPH_OPTION
@SEED_OPTION
@click.pass_context
def classify(ctx, graph_path, seed):
    """PRODSAT / SAT-unPRODSAT / UNSAT label at generic projectors."""
    graph = load_graph(graph_path)
    result = get_qsat_service().classify(graph, seed)
    get_metrics().record_instance(result.label, undecided=result.label == "UNDECIDED")
    _emit(ctx, result.to_dict(), seed=seed, inputs=[graph_path])
