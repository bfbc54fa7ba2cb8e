"""Bundled N = M = 10, k = 3 reference instances.

Clause lists are reproduced exactly, zero-based, in their published order.
The labels and counts below are the ones these clause lists actually
produce; the labels printed next to the lists (a PRODSAT, b SAT-unPRODSAT,
16 and 23 ground states) do not hold for them.
"""

from typing import Literal

REFERENCE_N = 10
REFERENCE_K = 3

InstanceLabel = Literal["a", "b", "c"]

REFERENCE_INSTANCES: dict[str, list[tuple[int, int, int]]] = {
    "a": [
        (3, 5, 8), (5, 6, 7), (0, 6, 8), (1, 3, 5), (0, 2, 5),
        (1, 3, 9), (1, 4, 9), (0, 1, 5), (2, 3, 7), (0, 1, 2),
    ],
    "b": [
        (0, 1, 5), (0, 4, 5), (2, 5, 8), (5, 7, 9), (5, 6, 7),
        (5, 7, 8), (6, 8, 9), (0, 3, 5), (4, 6, 8), (2, 4, 9),
    ],
    "c": [
        (2, 7, 8), (0, 4, 7), (4, 5, 6), (1, 5, 6), (1, 6, 9),
        (3, 5, 7), (0, 3, 7), (5, 6, 7), (1, 3, 7), (1, 6, 7),
    ],
}

REFERENCE_LABELS: dict[str, str] = {
    "a": "PRODSAT",
    "b": "PRODSAT",
    "c": "UNSAT",
}

REFERENCE_DIMER_COVERINGS: dict[str, int] = {"a": 23, "b": 19, "c": 0}

# Generic kernel dimensions; b's is checked for seed independence only.
REFERENCE_KERNEL_DIMENSIONS: dict[str, int] = {"a": 23, "c": 0}


def instance_filename(label: str) -> str:
    """File name used when the instances are written to disk."""
    return f"instance_{label}.json"
