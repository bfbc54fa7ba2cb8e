"""Service layer modules."""

from .hypergraph_service import EnsembleParams, InteractionGraph, sample_graph
from .matching_service import Matching, is_clause_coverable
from .qsat_service import KernelResult, ProjectorSet, SatVerdict, get_qsat_service
from .prodsat_service import HomotopyTrace, ProductState, get_prodsat_service
from .rdm_service import RdmReport, get_rdm_service
from .threshold_service import ScanResult
from .bound_service import BoundResult

__all__ = [
    "EnsembleParams",
    "InteractionGraph",
    "sample_graph",
    "Matching",
    "is_clause_coverable",
    "KernelResult",
    "ProjectorSet",
    "SatVerdict",
    "get_qsat_service",
    "HomotopyTrace",
    "ProductState",
    "get_prodsat_service",
    "RdmReport",
    "get_rdm_service",
    "ScanResult",
    "BoundResult",
]
