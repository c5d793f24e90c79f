from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from app.core.constants import TIE_FIRST
from app.schemas.network_schema import NetworkDocument


class TripleInput(BaseModel):
    """
    A forest triple in its file formats: Newick gene tree, one Newick species
    tree per line, and the tab-separated leaf map.
    """
    gene: str = Field(..., description="Gene tree in Newick")
    forest: str = Field(..., description="Species forest, one Newick tree per line")
    leaf_map: str = Field(..., description="Rows of gene_label<TAB>species_label")

    class Config:
        json_schema_extra = {
            "example": {
                "gene": "(a1,b1,(c1,d1,(a2,b2,(c2,d2))));",
                "forest": "(A,B);\n(C,D);\n",
                "leaf_map": "a1\tA\nb1\tB\nc1\tC\nd1\tD\na2\tA\nb2\tB\nc2\tC\nd2\tD\n",
            }
        }


class BuildRequest(TripleInput):
    tie: str = Field(default=TIE_FIRST, pattern="^(first|seeded)$", description="Tie-break policy of the top-down phase")
    seed: Optional[int] = Field(default=None, description="Seed for the seeded tie breaker")

    @model_validator(mode="after")
    def _seed_for_seeded(self) -> "BuildRequest":
        if self.tie == "seeded" and self.seed is None:
            raise ValueError("tie 'seeded' needs a seed")
        return self


class BuildResult(BaseModel):
    """Everything the build pipeline produces, in interchange formats."""
    t: int = Field(..., ge=0, description="|C(psi)|, the minimum number of contact arcs with multiplicity")
    contact_arcs: int = Field(..., ge=0, description="|C*(psi)|")
    osf: str = Field(..., description="psi in OSF map TSV form")
    introgression_set: str = Field(..., description="Arcs of G whose ends map into different trees")
    network: NetworkDocument = Field(..., description="N(psi) with its forest/contact partition")

    @property
    def summary(self) -> str:
        return f"t={self.t} contact_arcs={self.contact_arcs}"


class VerifyRequest(TripleInput):
    osf: str = Field(..., description="psi in OSF map TSV form")
    strict: bool = Field(default=False, description="Also check S3")


class OracleRequest(TripleInput):
    cap: Optional[int] = Field(default=None, gt=0, description="Extension cap; the configured cap when absent")


class OracleResult(BaseModel):
    t: int = Field(..., ge=0, description="t(F) by exhaustive search over extensions")


class ValidateRequest(BaseModel):
    """Give rho and arcs to check one witness, or search=true to look for one."""
    network: NetworkDocument
    rho: Optional[str] = Field(default=None, description="Start vertex")
    arcs: Optional[List[List[str]]] = Field(default=None, description="Candidate arc set A")
    search: bool = Field(default=False, description="Search every (rho, A) instead")

    @model_validator(mode="after")
    def _one_mode(self) -> "ValidateRequest":
        if self.search == (self.rho is not None):
            raise ValueError("give either rho (with arcs) or search=true")
        return self
