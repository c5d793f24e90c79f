"""
Trail normalization: rewrite (G, phi, psi) so that every path of the gene
tree maps onto a trail of N(psi), keeping N(psi) unchanged up to isomorphism.

Phase 1 hangs extra leaves under every interior gene vertex v, all mapped to
phi(l_v) where l_v is the least gene leaf below v whose image lies below
psi(v). Phase 2 repeatedly takes a shortest gene path v1..v(k+1) whose walk
repeats an arc, drops the arc (vk, v(k+1)) and moves what hung below it onto
v2. Each step lowers the number of gene arcs mapped onto one contact arc.
"""
import logging
from collections import Counter
from typing import Dict, List, Optional, Tuple

from app.core.constants import AUGMENT_LEAF_PREFIX
from app.core.exceptions import InvalidOsfError, InvariantViolationError
from app.engines.network_engine import NetworkEngine
from app.engines.verify_engine import VerifyEngine
from app.models.network import node_name
from app.models.osf import OsfMap
from app.models.tree import NodeId, PhyloTree, SpeciesNode, fresh_label
from app.models.triple import ForestTriple
from app.schemas.network_schema import TrailStep

logger = logging.getLogger(__name__)

# (path length k, v1, v(k+1))
_Offence = Tuple[int, NodeId, NodeId]


class TrailEngine:

    @staticmethod
    def augment(triple: ForestTriple, psi: OsfMap) -> Tuple[ForestTriple, OsfMap]:
        """
        Phase 1. An interior v with psi(v) interior in tree T gets one new leaf
        per leaf of T below psi(v); when psi(v) is itself a leaf it gets two.
        New leaves are mapped (by phi and psi) to phi(l_v).
        """
        gene, forest = triple.gene, triple.forest
        children = {v: list(gene.children(v)) for v in gene.nodes}
        labels = gene.leaf_labels
        phi = triple.phi
        images: Dict[NodeId, SpeciesNode] = psi.psi
        taken = set(gene.labels)
        next_id = max(gene.nodes) + 1

        for v in gene.interior:
            sv = psi[v]
            tree = forest[sv.tree]
            below = tree.cluster_set(sv.node)
            qualifying = sorted(
                gene.label(x) for x in gene.cluster(v)
                if triple.image(x).tree == sv.tree and triple.image(x).node in below
            )
            if not qualifying:
                raise InvalidOsfError(f"no gene leaf below {v} maps below psi({v})")
            target = triple.phi_label(gene.leaf(qualifying[0]))
            for _ in range(max(2, len(below))):
                children[v].append(next_id)
                children[next_id] = []
                labels[next_id] = fresh_label(f"{AUGMENT_LEAF_PREFIX}{v}", taken)
                phi[next_id] = target
                images[next_id] = forest.locate(target)
                next_id += 1

        augmented = PhyloTree(children, gene.root, labels)
        return ForestTriple(augmented, forest, phi), OsfMap(augmented, images)

    @staticmethod
    def contact_usage(psi: OsfMap) -> Counter:
        """Number of gene arcs mapped onto each contact arc, keyed by network arc."""
        return Counter({(node_name(a), node_name(b)): n for (a, b), n in psi.contact_multiset.items()})

    @staticmethod
    def find_offending_path(triple: ForestTriple, psi: OsfMap) -> Optional[List[NodeId]]:
        """
        A shortest directed gene path whose walk repeats an arc, ties broken by
        (first vertex, last vertex). None when every path maps onto a trail.
        """
        gene, forest = triple.gene, triple.forest
        best: Optional[_Offence] = None

        def segment(u: NodeId, v: NodeId) -> List[Tuple[str, str]]:
            su, sv = psi[u], psi[v]
            if su.tree != sv.tree:
                return [(node_name(su), node_name(sv))]
            walk = [node_name(SpeciesNode(su.tree, w)) for w in forest[su.tree].path(su.node, sv.node)]
            return list(zip(walk, walk[1:]))

        for a in gene.preorder():
            stack = [(a, 0, Counter())]
            while stack:
                u, k, used = stack.pop()
                for c in gene.children(u):
                    if best is not None and k + 1 > best[0]:
                        continue
                    seen = used.copy()
                    seen.update(segment(u, c))
                    if any(n > 1 for n in seen.values()):
                        key = (k + 1, a, c)
                        if best is None or key < best:
                            best = key
                        continue
                    stack.append((c, k + 1, seen))

        if best is None:
            return None
        _, a, d = best
        return gene.path(a, d)

    @staticmethod
    def rewire(triple: ForestTriple, psi: OsfMap, delta: List[NodeId]) -> Tuple[ForestTriple, OsfMap, TrailStep]:
        """
        Phase 2 step on the offending path delta = v1..v(k+1): remove the arc
        (vk, v(k+1)); a leaf v(k+1) is reattached under v2, otherwise its
        children are moved under v2 and v(k+1) disappears.
        """
        gene = triple.gene
        v1, v2, vk, vlast = delta[0], delta[1], delta[-2], delta[-1]
        first = (node_name(psi[v1]), node_name(psi[v2]))
        last = (node_name(psi[vk]), node_name(psi[vlast]))
        if psi[v1] == psi[v2] or psi[vk] == psi[vlast] or first != last:
            raise InvariantViolationError(
                f"offending path {delta} does not begin and end on the same contact arc"
            )

        before = TrailEngine.contact_usage(psi)[first]
        children = {v: list(gene.children(v)) for v in gene.nodes}
        labels = gene.leaf_labels
        images = psi.psi
        children[vk].remove(vlast)
        if gene.is_leaf(vlast):
            children[v2].append(vlast)
        else:
            children[v2].extend(children.pop(vlast))
            del images[vlast]

        tree = PhyloTree(children, gene.root, labels)
        phi = {x: lab for x, lab in triple.phi.items() if x in tree}
        new_triple = ForestTriple(tree, triple.forest, phi)
        new_psi = OsfMap(tree, images)
        after = TrailEngine.contact_usage(new_psi)[first]
        if after != before - 1:
            raise InvariantViolationError(f"usage of {first} went from {before} to {after}")
        step = TrailStep(
            removed_arc=[vk, vlast], attached_to=v2, contact_arc=list(first),
            usage_before=before, usage_after=after,
        )
        logger.debug(f"[Trail] removed ({vk},{vlast}), usage of {first} {before} -> {after}")
        return new_triple, new_psi, step

    @staticmethod
    def trail_normalize_logged(triple: ForestTriple, psi: OsfMap) -> Tuple[ForestTriple, OsfMap, List[TrailStep]]:
        """
        Both phases, returning the rewiring log alongside (G', psi').

        Raises:
            InvalidOsfError: if psi fails P1-P3
        """
        report = VerifyEngine.check_osf(triple, psi)
        if not report.passed:
            raise InvalidOsfError("trail normalization needs an OSF")
        original = NetworkEngine.build_network(triple, psi).network
        triple, psi = TrailEngine.augment(triple, psi)

        steps: List[TrailStep] = []
        budget = len(triple.gene.arcs)
        while True:
            delta = TrailEngine.find_offending_path(triple, psi)
            if delta is None:
                break
            if len(steps) >= budget:
                raise InvariantViolationError("trail normalization did not terminate")
            triple, psi, step = TrailEngine.rewire(triple, psi, delta)
            steps.append(step)

        rebuilt = NetworkEngine.build_network(triple, psi).network
        if not NetworkEngine.networks_isomorphic(original, rebuilt, respect_partition=True):
            raise InvariantViolationError("trail normalization changed N(psi)")
        logger.info(f"[Trail] {len(steps)} rewiring steps, gene tree now has {len(triple.gene)} vertices")
        return triple, psi, steps

    @staticmethod
    def trail_normalize(triple: ForestTriple, psi: OsfMap) -> Tuple[ForestTriple, OsfMap]:
        triple, psi, _ = TrailEngine.trail_normalize_logged(triple, psi)
        return triple, psi

    @staticmethod
    def all_paths_are_trails(triple: ForestTriple, psi: OsfMap) -> bool:
        """Exhaustive check over every directed path of G."""
        return TrailEngine.find_offending_path(triple, psi) is None

    @staticmethod
    def root_leaf_walks(triple: ForestTriple, psi: OsfMap) -> Dict[NodeId, List[str]]:
        """Walk of the root-to-leaf path ending at each gene leaf."""
        gene = triple.gene
        return {
            x: NetworkEngine.walk_of_path(triple, psi, gene.path(gene.root, x))
            for x in gene.leaves
        }
