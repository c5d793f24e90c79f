"""
Axiom checks for OSFs, the introgression-set correspondence and the
exhaustive optimality oracle.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from app.core.constants import DEFAULT_CAP_ORACLE
from app.core.exceptions import CapExceededError, InvalidIntrogressionSetError, InvalidOsfError, NotStrictError
from app.models.osf import OsfMap
from app.models.tree import Arc, NodeId, SpeciesNode
from app.models.triple import ForestTriple
from app.schemas.report_schema import AxiomVerdict, IntrogressionVerdict, OsfReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntrogressionSet:
    """
    An arc subset I of the gene tree together with the pieces it induces:
    every vertex is keyed to the top vertex of its component in G - I, and
    every component to the species tree T_M its leaves map into.
    """
    arcs: Tuple[Arc, ...]
    component: Dict[NodeId, NodeId] = field(compare=False, repr=False)
    tree_of: Dict[NodeId, int] = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.arcs)


def _verdict(axiom: str, bad: List[str], detail: str) -> AxiomVerdict:
    return AxiomVerdict(axiom=axiom, passed=not bad, witnesses=bad, detail=detail if bad else None)


class VerifyEngine:

    # ── OSF axioms ──────────────────────────────────────────────

    @staticmethod
    def _require_compatible(triple: ForestTriple, psi: OsfMap) -> None:
        if set(psi.gene.nodes) != set(triple.gene.nodes):
            raise InvalidOsfError("psi is not defined on the vertices of this gene tree")
        outside = [v for v, sn in psi.items() if sn not in triple.forest]
        if outside:
            raise InvalidOsfError(f"psi maps vertices {outside} outside the species forest")

    @staticmethod
    def check_osf(triple: ForestTriple, psi: OsfMap) -> OsfReport:
        """
        Check P1-P3.

          P1  psi agrees with phi on the gene leaves
          P2  if u is an ancestor of v and both images lie in one tree, psi(u) is an ancestor of psi(v)
          P3  psi(u) is an ancestor of phi(x) for some gene leaf x below u

        Witnesses are gene leaf labels for P1, "(u,v)" pairs for P2 and vertex ids for P3.
        """
        VerifyEngine._require_compatible(triple, psi)
        gene, forest = triple.gene, triple.forest

        p1 = [gene.label(x) for x in gene.leaves if psi[x] != triple.image(x)]

        p2 = []
        for v in gene.nodes:
            sv = psi[v]
            u = gene.parent(v)
            while u is not None:
                su = psi[u]
                if su.tree == sv.tree and not forest[su.tree].is_ancestor(su.node, sv.node):
                    p2.append(f"({u},{v})")
                u = gene.parent(u)

        p3 = []
        for u in gene.nodes:
            su = psi[u]
            if not any(
                triple.image(x).tree == su.tree and forest[su.tree].is_ancestor(su.node, triple.image(x).node)
                for x in gene.cluster(u)
            ):
                p3.append(str(u))

        return OsfReport(strict=False, verdicts=[
            _verdict("P1", p1, "gene leaf not mapped to its phi image"),
            _verdict("P2", sorted(p2), "ancestor pair mapped out of order within a tree"),
            _verdict("P3", p3, "no gene leaf below maps below the image"),
        ])

    @staticmethod
    def check_strict(triple: ForestTriple, psi: OsfMap) -> OsfReport:
        """S3: every interior u has a child whose image lies below psi(u) in the same tree."""
        VerifyEngine._require_compatible(triple, psi)
        gene, forest = triple.gene, triple.forest
        s3 = []
        for u in gene.interior:
            su = psi[u]
            if not any(
                psi[c].tree == su.tree and forest[su.tree].is_ancestor(su.node, psi[c].node)
                for c in gene.children(u)
            ):
                s3.append(str(u))
        return OsfReport(strict=True, verdicts=[_verdict("S3", s3, "no child image below the vertex image")])

    @staticmethod
    def check_all(triple: ForestTriple, psi: OsfMap, strict: bool = False) -> OsfReport:
        report = VerifyEngine.check_osf(triple, psi)
        if strict:
            report = report.merged(VerifyEngine.check_strict(triple, psi))
        return report

    @staticmethod
    def is_osf(triple: ForestTriple, psi: OsfMap) -> bool:
        return VerifyEngine.check_osf(triple, psi).passed

    @staticmethod
    def is_strict(triple: ForestTriple, psi: OsfMap) -> bool:
        return VerifyEngine.check_all(triple, psi, strict=True).passed

    # ── Introgression sets ──────────────────────────────────────

    @staticmethod
    def _components(triple: ForestTriple, arcs: Iterable[Arc]) -> Dict[NodeId, NodeId]:
        """Map each gene vertex to the top vertex of its component in G - I."""
        cut = set(arcs)
        gene = triple.gene
        top: Dict[NodeId, NodeId] = {}
        for v in gene.preorder():
            p = gene.parent(v)
            top[v] = v if p is None or (p, v) in cut else top[p]
        return top

    @staticmethod
    def is_introgression_set(triple: ForestTriple, arcs: Iterable[Arc]) -> IntrogressionVerdict:
        """
        Test the three introgression-set conditions, in order:
          (i)   every tail of an arc in I is also the tail of an arc not in I
          (ii)  the leaves of each component of G - I map into a single species tree
          (iii) components joined by an arc of I are assigned different trees
        """
        gene = triple.gene
        I = sorted(set((int(u), int(v)) for u, v in arcs))
        gene_arcs = set(gene.arcs)
        unknown = [a for a in I if a not in gene_arcs]
        if unknown:
            raise InvalidIntrogressionSetError(f"arcs not in the gene tree: {unknown}")
        cut = set(I)

        bad_i = sorted({u for u, _ in I if all((u, c) in cut for c in gene.children(u))})
        if bad_i:
            return IntrogressionVerdict(valid=False, condition="i", witnesses=[str(u) for u in bad_i])

        top = VerifyEngine._components(triple, I)
        trees: Dict[NodeId, set] = {}
        for x in gene.leaves:
            trees.setdefault(top[x], set()).add(triple.image(x).tree)
        bad_ii = sorted(m for m, ts in trees.items() if len(ts) > 1)
        if bad_ii:
            return IntrogressionVerdict(valid=False, condition="ii", witnesses=[str(m) for m in bad_ii])

        tree_of = {m: next(iter(ts)) for m, ts in trees.items()}
        bad_iii = [f"({u},{v})" for u, v in I if tree_of[top[u]] == tree_of[top[v]]]
        if bad_iii:
            return IntrogressionVerdict(valid=False, condition="iii", witnesses=bad_iii)
        return IntrogressionVerdict(valid=True)

    @staticmethod
    def introgression_set(triple: ForestTriple, arcs: Iterable[Arc]) -> IntrogressionSet:
        """Validate an arc subset and return it with its component structure."""
        arcs = tuple(sorted(set((int(u), int(v)) for u, v in arcs)))
        verdict = VerifyEngine.is_introgression_set(triple, arcs)
        if not verdict.valid:
            raise InvalidIntrogressionSetError(
                f"condition ({verdict.condition}) fails at {', '.join(verdict.witnesses)}",
                condition=verdict.condition,
            )
        top = VerifyEngine._components(triple, arcs)
        tree_of = {top[x]: triple.image(x).tree for x in triple.gene.leaves}
        return IntrogressionSet(arcs=arcs, component=top, tree_of=tree_of)

    @staticmethod
    def osf_from_introgression_set(triple: ForestTriple, I: Union[IntrogressionSet, Iterable[Arc]]) -> OsfMap:
        """
        psi_I(u) = lca in T_M of the phi-images of the gene leaves below u
        inside u's component M of G - I. The result is a strict OSF whose
        contact arcs are exactly the images of the arcs of I.
        """
        if not isinstance(I, IntrogressionSet):
            I = VerifyEngine.introgression_set(triple, I)
        gene, forest = triple.gene, triple.forest
        psi: Dict[NodeId, SpeciesNode] = {}
        for v in gene.postorder():
            m = I.component[v]
            tm = I.tree_of[m]
            if gene.is_leaf(v):
                psi[v] = triple.image(v)
                continue
            inside = [psi[c].node for c in gene.children(v) if I.component[c] == m]
            psi[v] = SpeciesNode(tm, forest[tm].lca(inside))
        return OsfMap(gene, psi)

    @staticmethod
    def introgression_set_of(triple: ForestTriple, psi: OsfMap) -> IntrogressionSet:
        """Arcs of G whose ends map into different trees. psi must be strict."""
        report = VerifyEngine.check_all(triple, psi, strict=True)
        if not report.passed:
            failed = [v.axiom for v in report.verdicts if not v.passed]
            raise NotStrictError(f"psi is not a strict OSF (fails {', '.join(failed)})")
        return VerifyEngine.introgression_set(triple, psi.crossing_arcs)

    # ── Oracles ─────────────────────────────────────────────────

    @staticmethod
    def brute_force_t(triple: ForestTriple, cap: int = DEFAULT_CAP_ORACLE) -> int:
        """
        t(F) by exhausting every extension of the tree-membership character
        to the interior gene vertices (|F| ** |V0(G)| candidates).

        Raises:
            CapExceededError: if the candidate count exceeds cap
        """
        gene = triple.gene
        interior = gene.interior
        k = triple.n_trees
        space = k ** len(interior)
        if space > cap:
            raise CapExceededError("brute-force extension space", cap, space)

        leaf_state = {x: triple.image(x).tree for x in gene.leaves}
        index = {v: i for i, v in enumerate(interior)}
        pairs: List[Tuple[int, int]] = []
        one_sided: List[Tuple[int, int]] = []
        for u, v in gene.arcs:
            if v in index:
                pairs.append((index[u], index[v]))
            else:
                one_sided.append((index[u], leaf_state[v]))

        best: Optional[int] = None
        for states in itertools.product(range(k), repeat=len(interior)):
            cost = 0
            for i, j in pairs:
                cost += states[i] != states[j]
            for i, s in one_sided:
                cost += states[i] != s
            if best is None or cost < best:
                best = cost
                if best == 0:
                    break
        logger.debug(f"[Oracle] t={best} over {space} extensions")
        return best

    @staticmethod
    def enumerate_osfs(triple: ForestTriple, strict: bool = False, cap: int = DEFAULT_CAP_ORACLE) -> Iterator[OsfMap]:
        """
        Every OSF (or every strict OSF) of a tiny triple, by direct enumeration
        of the images of the interior gene vertices.
        """
        gene, forest = triple.gene, triple.forest
        interior = gene.interior
        targets = forest.nodes()
        space = len(targets) ** len(interior)
        if space > cap:
            raise CapExceededError("OSF enumeration space", cap, space)
        leaves = {x: triple.image(x) for x in gene.leaves}
        for images in itertools.product(targets, repeat=len(interior)):
            psi = OsfMap(gene, {**leaves, **dict(zip(interior, images))})
            if VerifyEngine.check_all(triple, psi, strict=strict).passed:
                yield psi

    @staticmethod
    def exhaustive_minimum(triple: ForestTriple, cap: int = DEFAULT_CAP_ORACLE) -> Tuple[int, int]:
        """(min |C| over all OSFs, min |C| over strict OSFs)."""
        best_any = min(p.contact_count for p in VerifyEngine.enumerate_osfs(triple, False, cap))
        best_strict = min(p.contact_count for p in VerifyEngine.enumerate_osfs(triple, True, cap))
        return best_any, best_strict
