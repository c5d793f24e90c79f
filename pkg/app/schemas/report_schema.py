from typing import List, Optional

from pydantic import BaseModel, Field, model_validator


class AxiomVerdict(BaseModel):
    """Outcome of one axiom check. A failed verdict always names its witnesses."""
    axiom: str = Field(..., description="Axiom tag, e.g. N2, P1, S3, V1")
    passed: bool = Field(..., description="True iff the axiom holds")
    witnesses: List[str] = Field(default_factory=list, description="Offending vertices or arcs")
    detail: Optional[str] = Field(default=None, description="Human readable explanation of the failure")

    @model_validator(mode="after")
    def _witness_iff_failed(self) -> "AxiomVerdict":
        if self.passed == bool(self.witnesses):
            raise ValueError("a verdict fails exactly when witnesses are attached")
        return self


class AxiomReport(BaseModel):
    """Per-axiom verdicts for the network axioms N1-N4."""
    verdicts: List[AxiomVerdict] = Field(..., description="One verdict per axiom, in axiom order")

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, axiom: str) -> AxiomVerdict:
        return next(v for v in self.verdicts if v.axiom == axiom)

    class Config:
        json_schema_extra = {
            "example": {
                "verdicts": [
                    {"axiom": "N1", "passed": True, "witnesses": []},
                    {"axiom": "N2", "passed": False, "witnesses": ["3"], "detail": "indegree 1 and outdegree 1 outside X"},
                    {"axiom": "N3", "passed": True, "witnesses": []},
                    {"axiom": "N4", "passed": True, "witnesses": []},
                ]
            }
        }


class OsfReport(BaseModel):
    """
    Verdicts for the OSF axioms P1-P3 and, when requested, the strictness axiom S3.
    Witnesses are gene vertex ids (or gene leaf labels for P1).
    """
    strict: bool = Field(default=False, description="Whether S3 was checked")
    verdicts: List[AxiomVerdict] = Field(..., description="Verdicts in axiom order")

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, axiom: str) -> AxiomVerdict:
        return next(v for v in self.verdicts if v.axiom == axiom)

    def merged(self, other: "OsfReport") -> "OsfReport":
        seen = {v.axiom for v in self.verdicts}
        return OsfReport(
            strict=self.strict or other.strict,
            verdicts=self.verdicts + [v for v in other.verdicts if v.axiom not in seen],
        )

    class Config:
        json_schema_extra = {
            "example": {
                "strict": True,
                "verdicts": [
                    {"axiom": "P1", "passed": True, "witnesses": []},
                    {"axiom": "P2", "passed": True, "witnesses": []},
                    {"axiom": "P3", "passed": True, "witnesses": []},
                    {"axiom": "S3", "passed": False, "witnesses": ["0"], "detail": "no child image strictly below"},
                ]
            }
        }


class IntrogressionVerdict(BaseModel):
    """Result of testing an arc subset of G against the introgression-set conditions."""
    valid: bool = Field(..., description="True iff conditions (i)-(iii) hold")
    condition: Optional[str] = Field(default=None, description="First violated condition: i, ii or iii")
    witnesses: List[str] = Field(default_factory=list, description="Offending gene vertices or arcs")
