"""In-memory run metrics."""

import time
from collections import Counter
from dataclasses import dataclass, field


@dataclass
class Metrics:
    """In-memory counters for instances evaluated during a run."""

    instances_evaluated: int = 0
    undecided: int = 0
    continuation_retries: int = 0
    outcomes: Counter = field(default_factory=Counter)
    start_time: float = field(default_factory=time.time)

    def record_instance(self, outcome: str, undecided: bool = False):
        """Record one evaluated instance."""
        self.instances_evaluated += 1
        self.outcomes[outcome] += 1
        if undecided:
            self.undecided += 1

    def record_retry(self):
        """Record one homotopy retry."""
        self.continuation_retries += 1

    @property
    def elapsed_seconds(self) -> float:
        """Seconds since the collector was created."""
        return time.time() - self.start_time

    def snapshot(self) -> dict:
        """Counters for manifests; timing is reported separately."""
        return {
            "instances_evaluated": self.instances_evaluated,
            "undecided": self.undecided,
            "continuation_retries": self.continuation_retries,
            "outcomes": dict(sorted(self.outcomes.items())),
        }


_metrics: Metrics | None = None


def get_metrics() -> Metrics:
    """Get or create metrics singleton."""
    global _metrics
    if _metrics is None:
        _metrics = Metrics()
    return _metrics
