"""What every reduction returns: the target instance plus a width certificate."""
from __future__ import annotations

from dataclasses import dataclass, field

from .instances import (
    CnfInstance, TreeDecomposition, UGraph, as_graph, validate_decomposition,
)

SAT = "sat"
MAX2SAT = "max2sat"
IS = "is"


@dataclass(frozen=True)
class BoundRecord:
    """claimed = w + c * log_term, realized = width of the certificate."""

    input_width: int
    formula: str
    c: int
    log_term: int
    realized: int

    @property
    def claimed(self) -> int:
        return self.input_width + self.c * self.log_term

    @property
    def ok(self) -> bool:
        return self.realized <= self.claimed

    def lines(self, prefix: str = "") -> list[str]:
        return [f"{prefix}input_width {self.input_width}",
                f"{prefix}formula {self.formula}",
                f"{prefix}c {self.c}",
                f"{prefix}log_term {self.log_term}",
                f"{prefix}claimed {self.claimed}",
                f"{prefix}realized {self.realized}"]


@dataclass
class ReductionOutput:
    name: str
    instance: CnfInstance | UGraph
    certificate: TreeDecomposition | None
    bound: BoundRecord
    answer_map: str
    source_kind: str
    target_kind: str
    extras: dict = field(default_factory=dict)

    @property
    def parts(self) -> list[list[int]] | None:
        return self.extras.get("parts")

    def certificate_report(self):
        return validate_decomposition(as_graph(self.instance), self.certificate)
