from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from app.schemas.report_schema import AxiomVerdict


class NetworkDocument(BaseModel):
    """
    JSON interchange form of a network. A partitioned network lists
    forest_arcs and contact_arcs; an unpartitioned one lists arcs.
    """
    nodes: List[str] = Field(..., description="Vertex names")
    forest_arcs: Optional[List[List[str]]] = Field(default=None, description="Arcs of the underlying forest")
    contact_arcs: Optional[List[List[str]]] = Field(default=None, description="Contact arcs (dashed in DOT)")
    arcs: Optional[List[List[str]]] = Field(default=None, description="All arcs, when no partition is known")
    leaf_labels: Dict[str, str] = Field(default_factory=dict, description="Leaf vertex -> taxon label")

    @model_validator(mode="after")
    def _one_arc_form(self) -> "NetworkDocument":
        partitioned = self.forest_arcs is not None or self.contact_arcs is not None
        if partitioned == (self.arcs is not None):
            raise ValueError("give either 'arcs' or 'forest_arcs'/'contact_arcs'")
        for arc in (self.arcs or []) + (self.forest_arcs or []) + (self.contact_arcs or []):
            if len(arc) != 2:
                raise ValueError(f"arc {arc} must have exactly two ends")
        return self

    class Config:
        json_schema_extra = {
            "example": {
                "nodes": ["0:0", "0:1", "0:2", "1:0", "1:1", "1:2"],
                "forest_arcs": [["0:0", "0:1"], ["0:0", "0:2"], ["1:0", "1:1"], ["1:0", "1:2"]],
                "contact_arcs": [["0:0", "1:0"]],
                "leaf_labels": {"0:1": "A", "0:2": "B", "1:1": "C", "1:2": "D"},
            }
        }


class CertifiedArc(BaseModel):
    arc: List[str] = Field(..., description="An arc of A")
    trail: List[str] = Field(..., description="Admissible trail from rho that traverses the arc")


class ValidityWitness(BaseModel):
    """A vertex rho and arc set A certifying that a network is valid."""
    rho: str = Field(..., description="Start vertex of every certifying trail")
    arcs: List[List[str]] = Field(..., description="The arc set A, sorted")
    trails: List[CertifiedArc] = Field(default_factory=list, description="One certifying trail per arc of A")


class ValidityReport(BaseModel):
    valid: bool = Field(..., description="True iff both V1 and V2 hold")
    verdicts: List[AxiomVerdict] = Field(..., description="V1, then V2 when V1 holds")
    witness: Optional[ValidityWitness] = Field(default=None, description="Present iff valid")


class TrailStep(BaseModel):
    """One rewiring step of trail normalization."""
    removed_arc: List[int] = Field(..., description="Gene arc (v_k, v_k+1) that was removed")
    attached_to: int = Field(..., description="Gene vertex v_2 that received the moved arcs")
    contact_arc: List[str] = Field(..., description="Contact arc whose usage dropped")
    usage_before: int = Field(..., ge=1)
    usage_after: int = Field(..., ge=0)


class CycleRecord(BaseModel):
    cycle: List[str] = Field(..., description="Directed cycle as a vertex sequence (first vertex not repeated)")
    incidental: bool = Field(..., description="True iff no gene path maps onto the cycle (for a resolution, onto any of its image cycles)")
    gene_arcs: List[List[int]] = Field(default_factory=list, description="Gene arcs realising its contact arcs (resolutions only)")
    projection: List[str] = Field(default_factory=list, description="Closed walk in N(psi) the cycle projects to (resolutions only)")
    image_cycles: List[List[str]] = Field(
        default_factory=list, description="Simple cycles of N(psi) the projected walk splits into (resolutions only)"
    )
    gene_path_incidental: Optional[bool] = Field(
        default=None, description="Whether the carried gene arcs avoid lying on one closing gene path (resolutions only)"
    )
