"""Pydantic models for CLI payloads."""

from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class RunTiming(BaseModel):
    """Wall-clock facts; the only part of a manifest that differs between reruns."""

    timestamp: str
    elapsed_seconds: float


class RunManifest(BaseModel):
    """Everything needed to rerun a command and check its files."""

    subcommand: str
    params: Dict[str, Any]
    seed: Optional[int] = None
    version: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    timing: Optional[RunTiming] = None

    def deterministic(self) -> Dict[str, Any]:
        """The manifest without timing, identical for identical runs."""
        return self.model_dump(exclude={"timing"})


class ErrorPayload(BaseModel):
    """Written to stderr when a command fails."""

    error: str
    error_type: str
    subcommand: Optional[str] = None
    details: Dict[str, Any] = Field(default_factory=dict)


class GraphFile(BaseModel):
    """On-disk graph format; extra keys such as a label are kept."""

    n_qubits: int = Field(..., ge=1)
    k: int = Field(..., ge=2)
    clauses: list[list[int]] = Field(default_factory=list)
    label: Optional[str] = None
