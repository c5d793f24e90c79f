import csv
import io
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from app.core.constants import STABILITY_CSV_HEADER


class RandomTripleParams(BaseModel):
    """
    Shape of a randomly generated forest triple.

    Gene and species topologies are sampled by merging uniformly chosen pairs
    (uniform over labelled histories); phi picks a species leaf uniformly.
    """
    n_gene_leaves: int = Field(..., ge=2, description="Number of gene tree leaves")
    n_trees: int = Field(..., ge=1, description="Number of species trees in the forest")
    leaves_per_tree: int = Field(..., ge=2, description="Leaves in each species tree")
    binary: bool = Field(default=True, description="If false, interior arcs are contracted at random")

    class Config:
        json_schema_extra = {
            "example": {"n_gene_leaves": 8, "n_trees": 3, "leaves_per_tree": 4, "binary": True}
        }


class TrialRecord(BaseModel):
    """One perturbation trial. Bounds that do not apply to the trial kind are left empty."""
    trial: int = Field(..., ge=0)
    k: int = Field(..., ge=0, description="Number of SPR operations applied")
    d_rspr: Optional[int] = Field(default=None, ge=0, description="Exact rSPR distance, when computed")
    t_before: int = Field(..., ge=0)
    t_after: int = Field(..., ge=0)
    bound_spr: int = Field(..., ge=0, description="SPR bound: d_rspr, k, or the forest-move preimage count")
    bound_fk_r: Optional[int] = Field(default=None, description="(r-1)(n/r-1) with r trees hit by phi")
    bound_fk_n: Optional[float] = Field(default=None, description="n - 2 sqrt(n) + 1")
    violated: bool = Field(default=False)

    @property
    def delta(self) -> int:
        return abs(self.t_before - self.t_after)

    @model_validator(mode="after")
    def _violation_flag(self) -> "TrialRecord":
        tol = 1e-9
        broken = self.delta > self.bound_spr
        if self.bound_fk_r is not None:
            broken = broken or self.delta > self.bound_fk_r
        if self.bound_fk_n is not None:
            broken = broken or self.delta > self.bound_fk_n + tol
        self.violated = broken
        return self


class StabilitySummary(BaseModel):
    max_delta: int = Field(..., ge=0)
    n_trials: int = Field(..., ge=0)
    seed: int


class StabilityReport(BaseModel):
    """Per-trial records of a perturbation experiment, in trial order."""
    kind: str = Field(..., description="'gene' or 'forest'")
    seed: int = Field(..., description="Master seed every trial seed is drawn from")
    records: List[TrialRecord] = Field(default_factory=list)

    @property
    def violations(self) -> List[TrialRecord]:
        return [r for r in self.records if r.violated]

    def summary(self) -> StabilitySummary:
        return StabilitySummary(
            max_delta=max((r.delta for r in self.records), default=0),
            n_trials=len(self.records),
            seed=self.seed,
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(STABILITY_CSV_HEADER)
        for r in self.records:
            row = r.model_dump()
            writer.writerow(
                "" if row[col] is None else str(row[col]).lower() if isinstance(row[col], bool) else row[col]
                for col in STABILITY_CSV_HEADER
            )
        return out.getvalue()
