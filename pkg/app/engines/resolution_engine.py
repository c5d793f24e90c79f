"""
Binary resolution N_psi of N(psi) for a strict OSF, and cycle classification.

Construction:
  - every gene vertex w incident to k arcs of the introgression set I gets k
    subdivision vertices on the incoming forest arc of psi(w) (a virtual stem
    for tree roots); the one for w's incoming I-arc sits above those for its
    outgoing I-arcs, and different w sharing an image are stacked in gene
    preorder, so ancestors stay above descendants
  - each arc (u, w) of I becomes a contact arc from u's outgoing subdivision
    to w's incoming one
  - forest vertices with three or more children are refined into caterpillars
  - the virtual stems are dropped
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import networkx as nx

from app.core.constants import DEFAULT_CAP_CYCLES
from app.core.exceptions import CapExceededError, InvalidOsfError
from app.engines.network_engine import NetworkEngine
from app.engines.verify_engine import VerifyEngine
from app.models.network import NetArc, Network, node_name
from app.models.osf import OsfMap
from app.models.tree import Arc, NodeId, SpeciesNode
from app.models.triple import ForestTriple
from app.schemas.network_schema import CycleRecord

logger = logging.getLogger(__name__)

PAIRING_PREORDER = "preorder"


@dataclass(frozen=True)
class BinaryResolution:
    """
    N_psi plus the bookkeeping needed to trace it back:
      carries              contact arc -> the gene arc of I it realises
      subdivision_label    subdivision vertex -> gene vertex w it is labelled with
      projection           every vertex -> the vertex of N(psi) it refines
    """
    network: Network
    carries: Dict[NetArc, Arc] = field(repr=False)
    subdivision_label: Dict[str, NodeId] = field(repr=False)
    projection: Dict[str, str] = field(repr=False)
    psi: OsfMap = field(repr=False)
    pairing: str = PAIRING_PREORDER


def _canonical_cycle(cycle: List[str]) -> Tuple[str, ...]:
    i = cycle.index(min(cycle))
    return tuple(cycle[i:] + cycle[:i])


def _split_closed_walk(walk: List[str]) -> List[List[str]]:
    """Simple cycles of a closed walk (first vertex not repeated), cut at each revisited vertex."""
    stack: List[str] = []
    cycles: List[List[str]] = []
    for v in walk:
        if v in stack:
            i = stack.index(v)
            cycles.append(stack[i:])
            del stack[i + 1:]
        else:
            stack.append(v)
    if len(stack) > 1:
        cycles.append(stack)
    return cycles


class ResolutionEngine:

    @staticmethod
    def binary_resolution(triple: ForestTriple, psi: OsfMap) -> BinaryResolution:
        """
        Build N_psi.

        Raises:
            NotStrictError: if psi is not a strict OSF
        """
        I = VerifyEngine.introgression_set_of(triple, psi)
        gene, forest = triple.gene, triple.forest
        order = {w: k for k, w in enumerate(gene.preorder())}

        # Roles per gene vertex, top to bottom: its incoming I-arc, then outgoing ones in child order
        roles: Dict[NodeId, List[Tuple[str, Arc]]] = {}
        for a in sorted(I.arcs, key=lambda a: (order[a[0]], order[a[1]])):
            roles.setdefault(a[1], []).append(("in", a))
        for w in gene.preorder():
            out = [("out", (w, c)) for c in gene.children(w) if (w, c) in I.arcs]
            if out:
                roles.setdefault(w, []).extend(out)

        stems: Dict[str, List[Tuple[NodeId, str, Arc]]] = {}
        for w in sorted(roles, key=order.get):
            v = node_name(psi[w])
            stems.setdefault(v, []).extend((w, role, a) for role, a in roles[w])

        g = nx.DiGraph()
        projection: Dict[str, str] = {}
        labels: Dict[str, str] = {}
        for sn in forest.nodes():
            v = node_name(sn)
            g.add_node(v)
            projection[v] = v
            lab = forest.node_label(sn)
            if lab is not None:
                labels[v] = lab

        # Caterpillar refinement; top[c] is the vertex that now holds the arc into c
        top: Dict[str, str] = {}
        for i, tree in enumerate(forest):
            for u in tree.interior:
                name = node_name(SpeciesNode(i, u))
                kids = [node_name(SpeciesNode(i, c)) for c in tree.children(u)]
                holder = name
                for k, c in enumerate(kids[:-2], start=1):
                    top[c] = holder
                    spine = f"{name}^{k}"
                    g.add_node(spine)
                    projection[spine] = name
                    g.add_edge(holder, spine)
                    holder = spine
                for c in kids[-2:]:
                    top[c] = holder

        sub_of: Dict[Tuple[str, Arc], str] = {}
        subdivision_label: Dict[str, NodeId] = {}
        for i, tree in enumerate(forest):
            for c in tree.nodes:
                v = node_name(SpeciesNode(i, c))
                chain = [f"{v}~{k}" for k in range(1, len(stems.get(v, [])) + 1)]
                for s, (w, role, a) in zip(chain, stems.get(v, [])):
                    g.add_node(s)
                    projection[s] = v
                    subdivision_label[s] = w
                    sub_of[(role, a)] = s
                path = ([top[v]] if v in top else []) + chain + [v]
                g.add_edges_from(zip(path, path[1:]))

        forest_arcs = list(g.edges)
        carries: Dict[NetArc, Arc] = {}
        for a in I.arcs:
            arc = (sub_of[("out", a)], sub_of[("in", a)])
            carries[arc] = a
        network = Network(
            sorted(g.nodes), leaf_labels=labels,
            forest_arcs=sorted(forest_arcs), contact_arcs=sorted(carries),
        )
        logger.info(
            f"[Resolve] N_psi: {len(network)} vertices, {len(subdivision_label)} subdivisions, "
            f"{len(carries)} contact arcs over {len(psi.contact_arcs)} arcs of C*(psi)"
        )
        return BinaryResolution(
            network=network, carries=carries,
            subdivision_label=subdivision_label, projection=projection, psi=psi,
        )

    @staticmethod
    def trace_resolution_cycle(
        triple: ForestTriple,
        resolution: BinaryResolution,
        cycle: List[str],
        realised: Optional[Set[Tuple[str, ...]]] = None,
    ) -> CycleRecord:
        """
        Map a directed cycle of N_psi back to N(psi).

        The cycle projects to a closed walk in N(psi) by contracting the
        subdivision and caterpillar vertices; the walk splits into simple
        cycles at repeated vertices. The cycle is incidental iff every one of
        those image cycles is incidental in N(psi), i.e. none of them is the
        image of a gene path.

        The gene-arc check is reported alongside: the gene arcs carried by the
        cycle's contact arcs are non-incidental iff some rotation of them runs
        down a single directed path of G (the head of each is an ancestor of
        the tail of the next) and returns to the image it started from.
        """
        if realised is None:
            realised = ResolutionEngine.realised_cycles(triple, resolution.psi)
        gene = triple.gene
        steps = list(zip(cycle, cycle[1:] + cycle[:1]))
        gene_arcs = [resolution.carries[s] for s in steps if s in resolution.carries]

        on_gene_path = False
        m = len(gene_arcs)
        for r in range(m):
            rot = gene_arcs[r:] + gene_arcs[:r]
            closes = resolution.psi[rot[-1][1]] == resolution.psi[rot[0][0]]
            if closes and all(gene.is_ancestor(rot[j][1], rot[j + 1][0]) for j in range(m - 1)):
                on_gene_path = True
                break

        walk = [resolution.projection[v] for v in cycle]
        projected = [v for k, v in enumerate(walk) if v != walk[k - 1]] or walk[:1]
        images = [list(_canonical_cycle(c)) for c in _split_closed_walk(projected)]
        return CycleRecord(
            cycle=list(cycle),
            incidental=all(tuple(c) not in realised for c in images),
            gene_path_incidental=not on_gene_path,
            gene_arcs=[list(a) for a in gene_arcs],
            projection=projected,
            image_cycles=images,
        )

    @staticmethod
    def _cycles(network: Network, cap: int) -> List[List[str]]:
        cycles = []
        for c in nx.simple_cycles(network.graph):
            cycles.append(list(_canonical_cycle(c)))
            if len(cycles) > cap:
                raise CapExceededError("directed cycles", cap, len(cycles))
        return sorted(cycles)

    @staticmethod
    def realised_cycles(triple: ForestTriple, psi: OsfMap) -> Set[Tuple[str, ...]]:
        """
        Canonical forms of every cycle of N(psi) equal to gamma' for a gene path gamma.
        Such a gamma starts and ends with a contact step, so the search starts
        from every crossing arc and stops as soon as the walk revisits a vertex.
        """
        gene, forest = triple.gene, triple.forest
        found: Set[Tuple[str, ...]] = set()

        def segment(u: NodeId, v: NodeId) -> List[str]:
            su, sv = psi[u], psi[v]
            if su.tree != sv.tree:
                return [node_name(sv)]
            return [node_name(SpeciesNode(su.tree, w)) for w in forest[su.tree].path(su.node, sv.node)[1:]]

        for u, w in psi.crossing_arcs:
            start = node_name(psi[u])
            stack = [(w, [start, node_name(psi[w])])]
            while stack:
                x, walk = stack.pop()
                for c in gene.children(x):
                    ext = segment(x, c)
                    seen = set(walk)
                    new = list(walk)
                    closed = False
                    ok = True
                    for k, y in enumerate(ext):
                        if y == start and k == len(ext) - 1 and psi[x].tree != psi[c].tree:
                            closed = True
                        elif y in seen:
                            ok = False
                            break
                        seen.add(y)
                        new.append(y)
                    if closed:
                        found.add(_canonical_cycle(new))
                    elif ok:
                        stack.append((c, new))
        return found

    @staticmethod
    def classify_cycles(
        triple: ForestTriple, psi: OsfMap, network: Optional[Network] = None, cap: int = DEFAULT_CAP_CYCLES,
    ) -> List[CycleRecord]:
        """
        Every directed cycle of N(psi) (or of the given network on the same
        vertex names), marked incidental iff no gene path maps onto it.

        Raises:
            InvalidOsfError: if psi fails P1-P3
            CapExceededError: if there are more than cap cycles
        """
        if not VerifyEngine.is_osf(triple, psi):
            raise InvalidOsfError("cycle classification needs an OSF")
        network = network or NetworkEngine.build_network(triple, psi).network
        realised = ResolutionEngine.realised_cycles(triple, psi)
        records = [
            CycleRecord(cycle=c, incidental=tuple(c) not in realised)
            for c in ResolutionEngine._cycles(network, cap)
        ]
        logger.info(
            f"[Resolve] {len(records)} cycles, {sum(not r.incidental for r in records)} realised by gene paths"
        )
        return records

    @staticmethod
    def classify_resolution_cycles(
        triple: ForestTriple, resolution: BinaryResolution, cap: int = DEFAULT_CAP_CYCLES,
    ) -> List[CycleRecord]:
        """Every directed cycle of N_psi, classified through its image in N(psi)."""
        realised = ResolutionEngine.realised_cycles(triple, resolution.psi)
        return [
            ResolutionEngine.trace_resolution_cycle(triple, resolution, c, realised)
            for c in ResolutionEngine._cycles(resolution.network, cap)
        ]
