import logging

from fastapi import APIRouter, Depends

from app.infrastructure.config import Settings, get_settings
from app.models.triple import ForestTriple
from app.orchestrator.orchestrator import Orchestrator, make_tie_breaker
from app.schemas.network_schema import ValidityReport
from app.schemas.report_schema import OsfReport
from app.schemas.triple_schema import (
    BuildRequest,
    BuildResult,
    OracleRequest,
    OracleResult,
    TripleInput,
    ValidateRequest,
    VerifyRequest,
)
from app.services.network_io import network_from_document
from app.services.newick_io import load_triple
from app.services.osf_io import parse_osf_map

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["osf"])


def _triple(body: TripleInput) -> ForestTriple:
    return load_triple(body.gene, body.forest, body.leaf_map)


@router.post("/build", response_model=BuildResult)
async def build(body: BuildRequest) -> BuildResult:
    """
    Build a minimum strict OSF for a forest triple.

    Returns psi, its introgression set and N(psi). Parse errors answer 400,
    invalid triples 422.

    Args:
        body: BuildRequest with the three input texts and the tie-break policy

    Returns:
        BuildResult: score, contact arc count, psi, introgression set and network
    """
    outcome = Orchestrator.build(_triple(body), make_tie_breaker(body.tie, body.seed))
    logger.info(f"[API] build t={outcome.psi.contact_count}")
    return outcome.to_result()


@router.post("/verify", response_model=OsfReport)
async def verify(body: VerifyRequest) -> OsfReport:
    """
    Check P1-P3 (and S3 when strict is set) for a given psi.

    A failed axiom is reported with its witnesses in a 200 response; only
    unreadable input is an error.
    """
    triple = _triple(body)
    psi = parse_osf_map(body.osf, triple)
    return Orchestrator.verify(triple, psi, body.strict)


@router.post("/oracle", response_model=OracleResult)
async def oracle(body: OracleRequest, settings: Settings = Depends(get_settings)) -> OracleResult:
    """Exhaustive t(F). Answers 413 when the search space exceeds the cap."""
    cap = body.cap or settings.cap_oracle
    return OracleResult(t=Orchestrator.oracle(_triple(body), cap))


@router.post("/validate", response_model=ValidityReport)
async def validate(body: ValidateRequest, settings: Settings = Depends(get_settings)) -> ValidityReport:
    """
    Decide validity of a network for a given (rho, A), or search for a witness.

    Args:
        body: network document plus either rho/arcs or search=true; without arcs a
            partitioned network is checked against its own contact arcs
        settings: caps for the search and for trail enumeration

    Returns:
        ValidityReport: verdicts, and the witness with one certifying trail per arc when valid
    """
    network = network_from_document(body.network)
    return Orchestrator.validate(
        network,
        rho=body.rho,
        arcs=None if body.arcs is None else [tuple(a) for a in body.arcs],
        search=body.search,
        cap_search=settings.cap_search,
        cap_unfold=settings.cap_unfold,
    )
