"""
Networks of OSFs: N(psi), the validity characterization and unfolding.

A network is valid when some vertex rho and arc set A satisfy
  V1  N - A is a forest of at least two phylogenetic trees with leaf set X,
      and every arc of A joins two different trees
  V2  every arc of A lies on an admissible trail from rho, i.e. a trail whose
      vertices inside any one tree appear in ancestor-to-descendant order
"""
import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
from networkx.algorithms.isomorphism import DiGraphMatcher

from app.core.constants import AUGMENT_LEAF_PREFIX, DEFAULT_CAP_SEARCH, DEFAULT_CAP_UNFOLD
from app.core.exceptions import (
    CapExceededError,
    InvalidOsfError,
    InvalidPathError,
    InvariantViolationError,
    NetworkAxiomError,
    PreconditionError,
    UnknownNodeError,
)
from app.engines.parsimony_engine import ParsimonyEngine
from app.engines.verify_engine import VerifyEngine
from app.models.network import NetArc, Network, network_axioms, node_name
from app.models.osf import OsfMap
from app.models.tree import Forest, NodeId, PhyloTree, SpeciesNode, fresh_label
from app.models.triple import ForestTriple
from app.schemas.network_schema import CertifiedArc, ValidityReport, ValidityWitness
from app.schemas.report_schema import AxiomVerdict

logger = logging.getLogger(__name__)

Walk = List[str]


@dataclass(frozen=True)
class Representation:
    """N(psi) together with the triple and OSF it was built from."""
    network: Network
    triple: ForestTriple
    psi: OsfMap


@dataclass(frozen=True)
class ForestSplit:
    """
    The forest N - A read back as a species Forest. locate maps each network
    vertex to its forest vertex; names is the inverse.
    """
    forest: Forest
    locate: Dict[str, SpeciesNode]
    names: Dict[SpeciesNode, str]


# (current vertex, last vertex visited in each tree, arcs of A used so far)
_TrailState = Tuple[str, Tuple[Optional[NodeId], ...], FrozenSet[NetArc]]


def _arc_str(arc: NetArc) -> str:
    return f"({arc[0]},{arc[1]})"


class NetworkEngine:

    # ── Representations ─────────────────────────────────────────

    @staticmethod
    def build_network(triple: ForestTriple, psi: OsfMap) -> Representation:
        """
        N(psi): vertex set V(F), arcs A(F) plus the contact arcs C*(psi).

        Raises:
            InvalidOsfError: if psi fails P1-P3
        """
        report = VerifyEngine.check_osf(triple, psi)
        if not report.passed:
            failed = [v.axiom for v in report.verdicts if not v.passed]
            raise InvalidOsfError(f"psi is not an OSF (fails {', '.join(failed)})")

        forest = triple.forest
        nodes = [node_name(sn) for sn in forest.nodes()]
        forest_arcs = [
            (node_name(SpeciesNode(i, u)), node_name(SpeciesNode(i, v)))
            for i, tree in enumerate(forest)
            for u, v in tree.arcs
        ]
        contact_arcs = [(node_name(a), node_name(b)) for a, b in psi.contact_arcs]
        labels = {node_name(forest.locate(lab)): lab for lab in forest.labels}
        network = Network(nodes, leaf_labels=labels, forest_arcs=forest_arcs, contact_arcs=contact_arcs)
        logger.debug(f"[Network] N(psi) has {len(network)} vertices and {len(contact_arcs)} contact arcs")
        return Representation(network=network, triple=triple, psi=psi)

    @staticmethod
    def connectivity_check(triple: ForestTriple, psi: OsfMap) -> Tuple[bool, bool]:
        """
        (N(psi) is weakly connected, phi(L(G)) meets every tree of F).
        The two always agree for an OSF.
        """
        network = NetworkEngine.build_network(triple, psi).network
        connected = nx.is_weakly_connected(network.graph)
        covered = {triple.image(x).tree for x in triple.gene.leaves} == set(range(triple.n_trees))
        if connected != covered:
            raise InvariantViolationError(
                f"N(psi) connected={connected} but leaf images cover every tree={covered}"
            )
        return connected, covered

    # ── Walks and trails ────────────────────────────────────────

    @staticmethod
    def walk_of_path(triple: ForestTriple, psi: OsfMap, gamma: Sequence[NodeId]) -> Walk:
        """
        The walk gamma' in N(psi) traced by a directed path gamma of G.

        A contact step contributes its head; a step inside one species tree
        contributes the tree path between the two images. Consecutive repeats
        are suppressed, so a path on which psi is constant yields one vertex.
        """
        gene = triple.gene
        if not gamma:
            raise InvalidPathError("empty path")
        for u, v in zip(gamma, gamma[1:]):
            if v not in gene or gene.parent(v) != u:
                raise InvalidPathError(f"({u},{v}) is not an arc of the gene tree")

        walk = [node_name(psi[gamma[0]])]
        for u, v in zip(gamma, gamma[1:]):
            su, sv = psi[u], psi[v]
            if su.tree != sv.tree:
                walk.append(node_name(sv))
                continue
            segment = triple.forest[su.tree].path(su.node, sv.node)
            walk.extend(node_name(SpeciesNode(su.tree, w)) for w in segment[1:])
        return walk

    @staticmethod
    def is_trail(walk: Sequence[str], network: Optional[Network] = None) -> bool:
        """True iff no arc repeats along the walk (and, given a network, every step is an arc of it)."""
        steps = list(zip(walk, walk[1:]))
        if network is not None and not all(network.has_arc(u, v) for u, v in steps):
            return False
        return len(set(steps)) == len(steps)

    # ── Validity ────────────────────────────────────────────────

    @staticmethod
    def _require_arcs(network: Network, arcs: Iterable[NetArc]) -> Tuple[NetArc, ...]:
        A = tuple(sorted({(str(u), str(v)) for u, v in arcs}))
        missing = [a for a in A if not network.has_arc(*a)]
        if missing:
            raise PreconditionError(f"arcs not in the network: {', '.join(_arc_str(a) for a in missing)}")
        return A

    @staticmethod
    def check_forest_split(network: Network, arcs: Iterable[NetArc]) -> Tuple[AxiomVerdict, Optional[ForestSplit]]:
        """
        Check V1 for the arc set A. On success also return N - A as a Forest,
        its trees ordered by root name and node ids assigned in name order.
        """
        A = NetworkEngine._require_arcs(network, arcs)
        h = network.to_networkx()
        h.remove_edges_from(A)

        def fail(witnesses: List[str], detail: str) -> Tuple[AxiomVerdict, None]:
            return AxiomVerdict(axiom="V1", passed=False, witnesses=witnesses or ["N-A"], detail=detail), None

        if len(h) == 0:
            return fail(["N"], "the network has no vertices")
        if not nx.is_branching(h):
            bad = sorted(v for v in h if h.in_degree(v) > 1) or sorted(network.nodes)[:1]
            return fail(bad, "N - A is not a forest")
        components = sorted(
            (sorted(c) for c in nx.weakly_connected_components(h)),
            key=lambda c: min(v for v in c if h.in_degree(v) == 0),
        )
        if len(components) < 2:
            return fail(["N-A"], "N - A has fewer than two trees")

        X = set(network.leaves)
        roots = [v for v in h if h.in_degree(v) == 0]
        bad_root = sorted(r for r in roots if h.out_degree(r) < 2)
        if bad_root:
            return fail(bad_root, "a tree of N - A has a root of outdegree below 2")
        unary = sorted(v for v in h if h.in_degree(v) == 1 and h.out_degree(v) == 1)
        if unary:
            return fail(unary, "a tree of N - A has a vertex of indegree 1 and outdegree 1")
        sinks = {v for v in h if h.out_degree(v) == 0}
        if sinks != X:
            return fail(sorted(sinks ^ X), "the leaves of N - A differ from X")

        locate: Dict[str, SpeciesNode] = {}
        trees = []
        for i, comp in enumerate(components):
            ids = {v: k for k, v in enumerate(comp)}
            locate.update({v: SpeciesNode(i, ids[v]) for v in comp})
            root = next(v for v in comp if h.in_degree(v) == 0)
            trees.append(PhyloTree(
                {ids[v]: [ids[c] for c in sorted(h.successors(v))] for v in comp},
                ids[root],
                {ids[v]: network.label(v) for v in comp if v in X},
            ))
        same = [_arc_str(a) for a in A if locate[a[0]].tree == locate[a[1]].tree]
        if same:
            return fail(same, "an arc of A has both ends in one tree")
        split = ForestSplit(forest=Forest(trees), locate=locate, names={sn: v for v, sn in locate.items()})
        return AxiomVerdict(axiom="V1", passed=True), split

    @staticmethod
    def _extensions(network: Network, split: ForestSplit, A: FrozenSet[NetArc], state: _TrailState) -> List[Tuple[str, _TrailState]]:
        """Admissible one-arc extensions of a trail, sorted by the new end vertex."""
        current, last, used = state
        out = []
        for w in network.successors(current):
            arc = (current, w)
            if arc in used:
                continue
            sw = split.locate[w]
            seen = last[sw.tree]
            if seen is not None and not split.forest[sw.tree].is_ancestor(seen, sw.node):
                continue
            new_last = last[:sw.tree] + (sw.node,) + last[sw.tree + 1:]
            out.append((w, (w, new_last, used | {arc} if arc in A else used)))
        return out

    @staticmethod
    def _start(split: ForestSplit, rho: str) -> _TrailState:
        s = split.locate[rho]
        last = tuple(s.node if i == s.tree else None for i in range(len(split.forest)))
        return rho, last, frozenset()

    @staticmethod
    def check_valid(network: Network, rho: str, arcs: Iterable[NetArc], cap: int = DEFAULT_CAP_UNFOLD) -> ValidityReport:
        """
        Decide V1 and V2 for a given rho and A.

        V2 is decided by a breadth-first search over admissible trails from rho,
        memoised on (end vertex, last vertex per tree, arcs of A used). Every
        arc of A is certified by the first trail found through it.

        Raises:
            CapExceededError: if more than cap trail states are explored
        """
        if rho not in network:
            raise UnknownNodeError(rho)
        A = NetworkEngine._require_arcs(network, arcs)
        v1, split = NetworkEngine.check_forest_split(network, A)
        if split is None:
            return ValidityReport(valid=False, verdicts=[v1])

        A_set = frozenset(A)
        start = NetworkEngine._start(split, rho)
        parent: Dict[_TrailState, Optional[_TrailState]] = {start: None}
        certified: Dict[NetArc, _TrailState] = {}
        queue = deque([start])
        while queue and len(certified) < len(A_set):
            state = queue.popleft()
            for w, nxt in NetworkEngine._extensions(network, split, A_set, state):
                arc = (state[0], w)
                if nxt in parent:
                    if arc in A_set and arc not in certified:
                        certified[arc] = state
                    continue
                parent[nxt] = state
                if len(parent) > cap:
                    raise CapExceededError("admissible trail states", cap, len(parent))
                if arc in A_set and arc not in certified:
                    certified[arc] = state
                queue.append(nxt)

        def trail_to(state: _TrailState) -> List[str]:
            seq = []
            while state is not None:
                seq.append(state[0])
                state = parent[state]
            return seq[::-1]

        missing = [a for a in A if a not in certified]
        if missing:
            v2 = AxiomVerdict(
                axiom="V2", passed=False, witnesses=[_arc_str(a) for a in missing],
                detail=f"no admissible trail from {rho} uses the arc",
            )
            return ValidityReport(valid=False, verdicts=[v1, v2])

        trails = [CertifiedArc(arc=list(a), trail=trail_to(certified[a]) + [a[1]]) for a in A]
        logger.info(f"[Network] valid at rho={rho} with |A|={len(A)} ({len(parent)} trail states)")
        return ValidityReport(
            valid=True,
            verdicts=[v1, AxiomVerdict(axiom="V2", passed=True)],
            witness=ValidityWitness(rho=rho, arcs=[list(a) for a in A], trails=trails),
        )

    @staticmethod
    def unfold(network: Network, rho: str, arcs: Iterable[NetArc], cap: int = DEFAULT_CAP_UNFOLD) -> Tuple[ForestTriple, OsfMap]:
        """
        Unfold N at rho.

        Gene vertices are the admissible trails from rho (ids in depth-first
        preorder, extensions taken in vertex-name order) and arcs are one-arc
        extensions. A trail ending at a leaf x of N that can still be extended
        gets one extra pendant leaf, so every gene leaf is a trail ending in X.
        Gene leaves ending at x are labelled x_1, x_2, ... and psi maps every
        trail to its end vertex.

        Raises:
            PreconditionError: if (rho, A) does not satisfy V1 and V2
            CapExceededError: if there are more than cap trails
        """
        A = NetworkEngine._require_arcs(network, arcs)
        report = NetworkEngine.check_valid(network, rho, A, cap)
        if not report.valid:
            failed = [v.axiom for v in report.verdicts if not v.passed]
            raise PreconditionError(f"cannot unfold at {rho}: {', '.join(failed)} fails")
        _, split = NetworkEngine.check_forest_split(network, A)
        A_set = frozenset(A)
        X = set(network.leaves)

        children: Dict[NodeId, List[NodeId]] = {}
        end: Dict[NodeId, str] = {}

        def new_vertex(vertex: str) -> NodeId:
            gid = len(children)
            if gid >= cap:
                raise CapExceededError("unfolding trails", cap)
            children[gid] = []
            end[gid] = vertex
            return gid

        root = new_vertex(rho)
        stack = [(root, NetworkEngine._start(split, rho))]
        while stack:
            gid, state = stack.pop()
            ext = NetworkEngine._extensions(network, split, A_set, state)
            if ext and state[0] in X:
                children[gid].append(new_vertex(state[0]))
            pending = []
            for w, nxt in ext:
                child = new_vertex(w)
                children[gid].append(child)
                pending.append((child, nxt))
            stack.extend(reversed(pending))

        counts: Dict[str, int] = {}
        taken: Set[str] = set()
        labels: Dict[NodeId, str] = {}
        phi: Dict[NodeId, str] = {}
        for gid in sorted(children):
            if children[gid]:
                continue
            species = network.label(end[gid])
            counts[species] = counts.get(species, 0) + 1
            labels[gid] = fresh_label(f"{species}_{counts[species]}", taken)
            phi[gid] = species
        if len(labels) < 2:
            raise PreconditionError(f"unfolding at {rho} yields fewer than two gene leaves")

        gene = PhyloTree(children, root, labels)
        triple = ForestTriple(gene, split.forest, phi)
        psi = OsfMap(gene, {gid: split.locate[v] for gid, v in end.items()})
        logger.info(f"[Unfold] rho={rho}: {len(gene)} trails, {len(labels)} gene leaves")
        return triple, psi

    @staticmethod
    def search_validity(
        network: Network,
        cap_search: int = DEFAULT_CAP_SEARCH,
        cap_unfold: int = DEFAULT_CAP_UNFOLD,
    ) -> Optional[ValidityReport]:
        """
        Exhaustive search for a witness (rho, A).

        N - A must be a branching, so A is fixed by choosing at most one kept
        in-arc per vertex. Candidates are tried by increasing |A| (then sorted
        arc list) and, for each, rho in vertex-name order. Returns the first
        valid report, or None.

        Raises:
            NetworkAxiomError: if N fails N1-N4
            CapExceededError: if N has more than cap_search arcs
        """
        axioms = network_axioms(network)
        if not axioms.passed:
            failed = [f"{v.axiom} at {', '.join(v.witnesses)}" for v in axioms.verdicts if not v.passed]
            raise NetworkAxiomError(f"not a network: {'; '.join(failed)}")
        if len(network.arcs) > cap_search:
            raise CapExceededError("arcs for exhaustive validity search", cap_search, len(network.arcs))

        options = [
            [None] + [(u, v) for u in network.predecessors(v)]
            for v in network.nodes
            if network.in_degree(v) > 0
        ]
        candidates = set()
        for kept in itertools.product(*options):
            keep = {a for a in kept if a is not None}
            candidates.add(tuple(a for a in network.arcs if a not in keep))
        ordered = sorted(candidates, key=lambda A: (len(A), A))
        logger.debug(f"[Network] searching {len(ordered)} arc sets over {len(network)} vertices")

        for A in ordered:
            v1, split = NetworkEngine.check_forest_split(network, A)
            if split is None:
                continue
            for rho in network.nodes:
                report = NetworkEngine.check_valid(network, rho, A, cap_unfold)
                if report.valid:
                    return report
        logger.info("[Network] no validity witness exists")
        return None

    # ── Isomorphism and normal forms ────────────────────────────

    @staticmethod
    def networks_isomorphic(first: Network, second: Network, respect_partition: bool = False) -> bool:
        """Isomorphism fixing leaf labels (and arc kinds when respect_partition is set)."""
        if len(first) != len(second) or len(first.arcs) != len(second.arcs):
            return False

        def same_label(a: dict, b: dict) -> bool:
            return a.get("label") == b.get("label")

        def same_kind(a: dict, b: dict) -> bool:
            return a.get("kind") == b.get("kind")

        matcher = DiGraphMatcher(
            first.graph, second.graph,
            node_match=same_label,
            edge_match=same_kind if respect_partition else None,
        )
        return matcher.is_isomorphic()

    @staticmethod
    def pendant_leaf_osf(triple: ForestTriple, psi: OsfMap) -> Tuple[ForestTriple, OsfMap]:
        """
        Builder normal form of an OSF.

        Every interior gene vertex u receives outdeg(u)+1 new leaves mapped onto
        leaves of psi(u)'s tree whose lca is psi(u) (one least leaf per child
        cluster of psi(u), round robin). The builder's sigma sets on the
        extended triple are then singletons and its output extends psi, so the
        returned OSF is builder output with a network isomorphic to N(psi).

        Raises:
            InvalidOsfError: if psi fails P1-P3
            InvariantViolationError: if the builder does not reproduce psi
        """
        report = VerifyEngine.check_osf(triple, psi)
        if not report.passed:
            raise InvalidOsfError("pendant-leaf normal form needs an OSF")
        gene, forest = triple.gene, triple.forest
        children = {v: list(gene.children(v)) for v in gene.nodes}
        labels = gene.leaf_labels
        phi = triple.phi
        taken = set(gene.labels)
        next_id = max(gene.nodes) + 1

        for u in gene.interior:
            su = psi[u]
            tree = forest[su.tree]
            if tree.is_leaf(su.node):
                targets = [tree.label(su.node)]
            else:
                targets = [min(tree.cluster_labels(c)) for c in tree.children(su.node)]
            for k in range(len(gene.children(u)) + 1):
                children[u].append(next_id)
                children[next_id] = []
                labels[next_id] = fresh_label(f"{AUGMENT_LEAF_PREFIX}{u}", taken)
                phi[next_id] = targets[k % len(targets)]
                next_id += 1

        extended = ForestTriple(PhyloTree(children, gene.root, labels), forest, phi)
        built = ParsimonyEngine.build_osf(extended)
        for v in gene.nodes:
            if built[v] != psi[v]:
                raise InvariantViolationError(f"builder placed gene vertex {v} at {built[v]}, expected {psi[v]}")
        return extended, built

