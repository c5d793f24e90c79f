from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from app.core.constants import (
    DEFAULT_CAP_CYCLES,
    DEFAULT_CAP_ORACLE,
    DEFAULT_CAP_RSPR,
    DEFAULT_CAP_SEARCH,
    DEFAULT_CAP_UNFOLD,
    TIE_FIRST,
)

# Inputs each subcommand cannot run without
REQUIRED_INPUTS = {
    "build": ("gene", "forest", "map"),
    "verify": ("gene", "forest", "map", "osf"),
    "oracle": ("gene", "forest", "map"),
    "normalize": ("gene", "forest", "map"),
    "cycles": ("gene", "forest", "map"),
    "resolve": ("gene", "forest", "map"),
    "perturb": ("gene", "forest", "map"),
    "validate": ("network",),
    "unfold": ("network",),
    "gen": (),
    "serve": (),
}

# Subcommands that draw random numbers
RANDOMIZED = ("perturb", "gen")


class RunConfig(BaseModel):
    """Validated options of one CLI invocation (flags layered over Settings)."""
    subcommand: str = Field(..., description="One of the CLI subcommands")
    gene: Optional[str] = Field(default=None, description="Gene tree Newick file")
    forest: Optional[str] = Field(default=None, description="Species forest file, one Newick tree per line")
    map: Optional[str] = Field(default=None, description="Leaf map TSV")
    osf: Optional[str] = Field(default=None, description="OSF map TSV")
    network: Optional[str] = Field(default=None, description="Network JSON file")
    out: Optional[str] = Field(default=None, description="Output path or directory; stdout when absent")
    format: Optional[str] = Field(default=None, pattern="^(dot|json|tsv)$")
    tie: str = Field(default=TIE_FIRST, pattern="^(first|seeded)$")
    seed: Optional[int] = Field(default=None)
    cap_oracle: int = Field(default=DEFAULT_CAP_ORACLE, gt=0)
    cap_unfold: int = Field(default=DEFAULT_CAP_UNFOLD, gt=0)
    cap_cycles: int = Field(default=DEFAULT_CAP_CYCLES, gt=0)
    strict: bool = False
    search: bool = False
    trials: int = Field(default=1, gt=0)
    k: int = Field(default=1, ge=0)
    workers: int = Field(default=1, gt=0)
    kind: str = Field(default="gene", pattern="^(gene|forest)$", description="What perturb moves: the gene tree or a forest subtree")
    rho: Optional[str] = Field(default=None, description="Start vertex for validate/unfold")
    arcs: Optional[List[Tuple[str, str]]] = Field(default=None, description="Arc set A for validate/unfold")
    cap_search: int = Field(default=DEFAULT_CAP_SEARCH, gt=0)
    cap_rspr: int = Field(default=DEFAULT_CAP_RSPR, gt=0)

    @model_validator(mode="after")
    def _inputs_present(self) -> "RunConfig":
        if self.subcommand not in REQUIRED_INPUTS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        missing = [f"--{name}" for name in REQUIRED_INPUTS[self.subcommand] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.subcommand} requires {', '.join(missing)}")
        if self.subcommand == "validate" and self.rho is None and not self.search:
            raise ValueError("validate requires --rho or --search")
        return self
