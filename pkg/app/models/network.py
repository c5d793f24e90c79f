"""
Directed networks on a labelled leaf set X, optionally partitioned into
forest arcs and contact arcs.
"""
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from app.core.constants import ARC_CONTACT, ARC_FOREST
from app.core.exceptions import NetworkFormatError, UnknownNodeError
from app.models.tree import SpeciesNode
from app.schemas.report_schema import AxiomReport, AxiomVerdict

NetArc = Tuple[str, str]


def node_name(sn: SpeciesNode) -> str:
    """Network vertex name of a species forest vertex."""
    return f"{sn.tree}:{sn.node}"


def parse_node_name(name: str) -> SpeciesNode:
    tree, _, node = name.partition(":")
    return SpeciesNode(int(tree), int(node))


class Network:
    """
    Immutable directed graph (no self-loops, no parallel arcs) on string vertices.
    Vertices with a label form the leaf set X.
    """

    __slots__ = ("_graph", "_partitioned")

    def __init__(
        self,
        nodes: Iterable[str],
        arcs: Optional[Iterable[NetArc]] = None,
        leaf_labels: Optional[Mapping[str, str]] = None,
        *,
        forest_arcs: Optional[Iterable[NetArc]] = None,
        contact_arcs: Optional[Iterable[NetArc]] = None,
    ):
        partitioned = forest_arcs is not None or contact_arcs is not None
        if partitioned and arcs is not None:
            raise NetworkFormatError("Give either an arc list or a forest/contact partition, not both")

        g = nx.DiGraph()
        for v in nodes:
            v = str(v)
            if v in g:
                raise NetworkFormatError(f"Duplicate node {v!r}")
            g.add_node(v, label=None)

        def add(arc_list: Iterable[NetArc], kind: Optional[str]) -> None:
            for u, v in arc_list:
                u, v = str(u), str(v)
                if u not in g or v not in g:
                    raise NetworkFormatError(f"Arc ({u},{v}) uses an undeclared node")
                if u == v:
                    raise NetworkFormatError(f"Self-loop at {u!r}")
                if g.has_edge(u, v):
                    raise NetworkFormatError(f"Parallel arc ({u},{v})")
                g.add_edge(u, v, kind=kind)

        if partitioned:
            add(forest_arcs or (), ARC_FOREST)
            add(contact_arcs or (), ARC_CONTACT)
        else:
            add(arcs or (), None)

        seen: Dict[str, str] = {}
        for v, lab in (leaf_labels or {}).items():
            v, lab = str(v), str(lab)
            if v not in g:
                raise NetworkFormatError(f"Label given for undeclared node {v!r}")
            if lab in seen:
                raise NetworkFormatError(f"Leaf label {lab!r} used twice")
            seen[lab] = v
            g.nodes[v]["label"] = lab

        self._graph = g
        self._partitioned = partitioned

    # ── Structure ───────────────────────────────────────────────

    @property
    def graph(self) -> nx.DiGraph:
        """Backing graph. Treat as read-only; use to_networkx() for a private copy."""
        return self._graph

    def to_networkx(self) -> nx.DiGraph:
        return self._graph.copy()

    @property
    def nodes(self) -> Tuple[str, ...]:
        return tuple(sorted(self._graph.nodes))

    @property
    def arcs(self) -> Tuple[NetArc, ...]:
        return tuple(sorted(self._graph.edges))

    def __len__(self) -> int:
        return self._graph.number_of_nodes()

    def __contains__(self, v: object) -> bool:
        return v in self._graph

    def _check(self, v: str) -> None:
        if v not in self._graph:
            raise UnknownNodeError(v)

    @property
    def leaves(self) -> Tuple[str, ...]:
        """The labelled leaf set X."""
        return tuple(sorted(v for v, lab in self._graph.nodes(data="label") if lab is not None))

    @property
    def leaf_labels(self) -> Dict[str, str]:
        return {v: lab for v, lab in sorted(self._graph.nodes(data="label")) if lab is not None}

    def label(self, v: str) -> Optional[str]:
        self._check(v)
        return self._graph.nodes[v]["label"]

    def has_arc(self, u: str, v: str) -> bool:
        return self._graph.has_edge(u, v)

    def successors(self, v: str) -> List[str]:
        self._check(v)
        return sorted(self._graph.successors(v))

    def predecessors(self, v: str) -> List[str]:
        self._check(v)
        return sorted(self._graph.predecessors(v))

    def in_degree(self, v: str) -> int:
        self._check(v)
        return self._graph.in_degree(v)

    def out_degree(self, v: str) -> int:
        self._check(v)
        return self._graph.out_degree(v)

    def roots(self) -> List[str]:
        return sorted(v for v in self._graph if self._graph.in_degree(v) == 0)

    # ── Partition ───────────────────────────────────────────────

    @property
    def has_partition(self) -> bool:
        return self._partitioned

    def _arcs_of_kind(self, kind: str) -> Tuple[NetArc, ...]:
        if not self._partitioned:
            raise NetworkFormatError("Network carries no forest/contact partition")
        return tuple(sorted((u, v) for u, v, k in self._graph.edges(data="kind") if k == kind))

    @property
    def forest_arcs(self) -> Tuple[NetArc, ...]:
        return self._arcs_of_kind(ARC_FOREST)

    @property
    def contact_arcs(self) -> Tuple[NetArc, ...]:
        return self._arcs_of_kind(ARC_CONTACT)

    def forget_partition(self) -> "Network":
        return Network(self.nodes, self.arcs, self.leaf_labels)

    def partitioned(self, contact: Iterable[NetArc]) -> "Network":
        """Same network with the given arcs marked as contact arcs and the rest as forest arcs."""
        contact = {(str(u), str(v)) for u, v in contact}
        missing = sorted(a for a in contact if not self._graph.has_edge(*a))
        if missing:
            raise NetworkFormatError(f"Arcs not in the network: {missing}")
        return Network(
            self.nodes,
            leaf_labels=self.leaf_labels,
            forest_arcs=[a for a in self.arcs if a not in contact],
            contact_arcs=sorted(contact),
        )

    def __repr__(self) -> str:
        return f"Network(|V|={len(self)}, |A|={self._graph.number_of_edges()}, |X|={len(self.leaves)})"


def check_network_axioms(graph: nx.DiGraph, leaf_set: Iterable[Hashable]) -> AxiomReport:
    """
    Check the network axioms on a directed graph with designated leaf set X:
      N1  X is a subset of the vertex set
      N2  a vertex with indegree 1 and outdegree 1 is in X
      N3  no vertex of indegree 0 is in X
      N4  every vertex of outdegree 0 is in X
    """
    X = set(leaf_set)
    bad = {"N1": sorted(str(x) for x in X if x not in graph)}
    bad["N2"] = sorted(str(v) for v in graph if graph.in_degree(v) == 1 and graph.out_degree(v) == 1 and v not in X)
    bad["N3"] = sorted(str(v) for v in graph if graph.in_degree(v) == 0 and v in X)
    bad["N4"] = sorted(str(v) for v in graph if graph.out_degree(v) == 0 and v not in X)
    details = {
        "N1": "leaf not in the vertex set",
        "N2": "indegree 1 and outdegree 1 outside X",
        "N3": "indegree-0 vertex in X",
        "N4": "outdegree-0 vertex outside X",
    }
    return AxiomReport(verdicts=[
        AxiomVerdict(axiom=a, passed=not w, witnesses=w, detail=None if not w else details[a])
        for a, w in bad.items()
    ])


def network_axioms(network: Network) -> AxiomReport:
    return check_network_axioms(network.graph, network.leaves)
