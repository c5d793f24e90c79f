import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from app.core.constants import DEFAULT_CAP_CYCLES, DEFAULT_CAP_SEARCH, DEFAULT_CAP_UNFOLD, TIE_SEEDED
from app.core.exceptions import PreconditionError
from app.engines.network_engine import NetworkEngine, Representation
from app.engines.parsimony_engine import FirstTieBreaker, ParsimonyEngine, SeededTieBreaker, TieBreaker
from app.engines.resolution_engine import BinaryResolution, ResolutionEngine
from app.engines.trail_engine import TrailEngine
from app.engines.verify_engine import IntrogressionSet, VerifyEngine
from app.models.network import NetArc, Network
from app.models.osf import OsfMap
from app.models.triple import ForestTriple
from app.schemas.network_schema import CycleRecord, TrailStep, ValidityReport
from app.schemas.report_schema import AxiomVerdict, OsfReport
from app.schemas.triple_schema import BuildResult
from app.services.network_io import network_to_document
from app.services.osf_io import serialize_introgression_set, serialize_osf_map

logger = logging.getLogger(__name__)


def make_tie_breaker(tie: str, seed: Optional[int] = None) -> TieBreaker:
    if tie == TIE_SEEDED:
        if seed is None:
            raise PreconditionError("the seeded tie breaker needs a seed")
        return SeededTieBreaker(seed)
    return FirstTieBreaker()


def default_arcs(network: Network, arcs: Optional[Iterable[NetArc]]) -> List[NetArc]:
    """The given arc set, or the contact arcs of a partitioned network when none is given."""
    if arcs is None:
        return list(network.contact_arcs) if network.has_partition else []
    return [tuple(a) for a in arcs]


@dataclass(frozen=True)
class BuildOutcome:
    triple: ForestTriple
    psi: OsfMap
    introgression: IntrogressionSet
    representation: Representation

    @property
    def network(self) -> Network:
        return self.representation.network

    def to_result(self) -> BuildResult:
        return BuildResult(
            t=self.psi.contact_count,
            contact_arcs=len(self.psi.contact_arcs),
            osf=serialize_osf_map(self.triple, self.psi),
            introgression_set=serialize_introgression_set(self.triple, list(self.introgression.arcs)),
            network=network_to_document(self.network),
        )


class Orchestrator:
    """
    End-to-end pipelines shared by the CLI and the HTTP API.

    Coordinates:
    - OSF construction and verification
    - Network representation, validity and unfolding
    - Binary resolution, cycle classification and trail normalization
    """

    @staticmethod
    def build(triple: ForestTriple, tie: Optional[TieBreaker] = None) -> BuildOutcome:
        """
        Build a minimum strict OSF and everything derived from it.

        Flow:
        1. Run OSF-Builder with the tie-break policy
        2. Read the introgression set off psi (strictness is checked on the way)
        3. Build N(psi)

        Args:
            triple: parsed forest triple
            tie: tie-break policy (lowest tree index when absent)

        Returns:
            BuildOutcome: psi, its introgression set and N(psi)
        """
        # Step 1: Builder
        psi = ParsimonyEngine.build_osf(triple, tie)

        # Step 2: Introgression set
        introgression = VerifyEngine.introgression_set_of(triple, psi)

        # Step 3: Network representation
        representation = NetworkEngine.build_network(triple, psi)
        logger.info(f"[Pipeline] built t={psi.contact_count} contact_arcs={len(psi.contact_arcs)}")
        return BuildOutcome(triple=triple, psi=psi, introgression=introgression, representation=representation)

    @staticmethod
    def verify(triple: ForestTriple, psi: OsfMap, strict: bool = False) -> OsfReport:
        report = VerifyEngine.check_all(triple, psi, strict=strict)
        failed = [v.axiom for v in report.verdicts if not v.passed]
        if failed:
            logger.info(f"[Pipeline] psi fails {', '.join(failed)}")
        return report

    @staticmethod
    def oracle(triple: ForestTriple, cap: int) -> int:
        return VerifyEngine.brute_force_t(triple, cap)

    @staticmethod
    def validate(
        network: Network,
        rho: Optional[str] = None,
        arcs: Optional[Iterable[NetArc]] = None,
        search: bool = False,
        cap_search: int = DEFAULT_CAP_SEARCH,
        cap_unfold: int = DEFAULT_CAP_UNFOLD,
    ) -> ValidityReport:
        """
        Check one witness (rho, A) or search for any.

        Flow:
        1. With search, try every (rho, A) and report the first witness
        2. Otherwise decide V1 and V2 for the given rho and A (the contact arcs of a partitioned network when A is absent)

        Raises:
            PreconditionError: if neither a rho nor search is given
        """
        if search:
            report = NetworkEngine.search_validity(network, cap_search, cap_unfold)
            if report is not None:
                return report
            return ValidityReport(
                valid=False,
                verdicts=[AxiomVerdict(
                    axiom="V2", passed=False, witnesses=list(network.nodes),
                    detail="no start vertex and arc set satisfy V1 and V2",
                )],
            )
        if rho is None:
            raise PreconditionError("validate needs a start vertex or a search")
        return NetworkEngine.check_valid(network, rho, default_arcs(network, arcs), cap_unfold)

    @staticmethod
    def unfold(
        network: Network,
        rho: Optional[str] = None,
        arcs: Optional[Iterable[NetArc]] = None,
        cap_search: int = DEFAULT_CAP_SEARCH,
        cap_unfold: int = DEFAULT_CAP_UNFOLD,
    ) -> Tuple[ForestTriple, OsfMap]:
        """
        Unfold a valid network into a forest triple and an OSF.

        Flow:
        1. Without rho, search for a witness; a partitioned network first tries its own contact arcs
        2. Unfold at the witness

        Raises:
            PreconditionError: if no witness exists
        """
        # Step 1: Witness
        if rho is None:
            report = None
            if network.has_partition:
                for v in network.nodes:
                    attempt = NetworkEngine.check_valid(network, v, network.contact_arcs, cap_unfold)
                    if attempt.valid:
                        report = attempt
                        break
            if report is None:
                report = NetworkEngine.search_validity(network, cap_search, cap_unfold)
            if report is None:
                raise PreconditionError("network is not valid; nothing to unfold")
            rho = report.witness.rho
            arcs = [tuple(a) for a in report.witness.arcs]

        # Step 2: Unfold
        return NetworkEngine.unfold(network, rho, default_arcs(network, arcs), cap_unfold)

    @staticmethod
    def resolve(
        triple: ForestTriple, psi: OsfMap, cap: int = DEFAULT_CAP_CYCLES,
    ) -> Tuple[BinaryResolution, List[CycleRecord]]:
        """
        Binary resolution N_psi and the classification of its directed cycles.

        Raises:
            NotStrictError: if psi is not strict
        """
        resolution = ResolutionEngine.binary_resolution(triple, psi)
        records = ResolutionEngine.classify_resolution_cycles(triple, resolution, cap)
        realised = [r for r in records if not r.incidental]
        if realised:
            logger.warning(f"[Pipeline] {len(realised)} cycles of N_psi are realised by gene paths")
        return resolution, records

    @staticmethod
    def cycles(triple: ForestTriple, psi: OsfMap, cap: int = DEFAULT_CAP_CYCLES) -> List[CycleRecord]:
        return ResolutionEngine.classify_cycles(triple, psi, cap=cap)

    @staticmethod
    def normalize(triple: ForestTriple, psi: OsfMap) -> Tuple[ForestTriple, OsfMap, List[TrailStep]]:
        return TrailEngine.trail_normalize_logged(triple, psi)
