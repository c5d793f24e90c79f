from collections import Counter
from typing import Dict, Iterator, Mapping, Tuple

from app.core.exceptions import InvalidOsfError
from app.models.tree import Arc, NodeId, PhyloTree, SpeciesNode

ContactArc = Tuple[SpeciesNode, SpeciesNode]


class OsfMap:
    """
    A total map psi: V(G) -> V(F) together with its contact arcs.

    C(psi) is the multiset of image pairs (psi(u), psi(v)) over gene arcs whose
    ends land in different species trees; C*(psi) is its support.
    """

    __slots__ = ("_gene", "_psi", "_crossing", "_contacts")

    def __init__(self, gene: PhyloTree, psi: Mapping[NodeId, Tuple[int, NodeId]]):
        mapped = {int(v): SpeciesNode(int(sn[0]), int(sn[1])) for v, sn in psi.items()}
        missing = sorted(set(gene.nodes) - set(mapped))
        if missing:
            raise InvalidOsfError(f"psi is not total: undefined on gene vertices {missing}")
        extra = sorted(set(mapped) - set(gene.nodes))
        if extra:
            raise InvalidOsfError(f"psi defined on vertices outside the gene tree: {extra}")

        crossing = tuple(a for a in gene.arcs if mapped[a[0]].tree != mapped[a[1]].tree)
        self._gene = gene
        self._psi = mapped
        self._crossing = crossing
        self._contacts = Counter((mapped[u], mapped[v]) for u, v in crossing)

    @property
    def gene(self) -> PhyloTree:
        return self._gene

    def __getitem__(self, v: NodeId) -> SpeciesNode:
        try:
            return self._psi[v]
        except KeyError:
            raise InvalidOsfError(f"psi undefined on {v}") from None

    def __iter__(self) -> Iterator[NodeId]:
        return iter(sorted(self._psi))

    def items(self):
        return sorted(self._psi.items())

    @property
    def psi(self) -> Dict[NodeId, SpeciesNode]:
        return dict(self._psi)

    @property
    def crossing_arcs(self) -> Tuple[Arc, ...]:
        """Gene arcs whose images are contact arcs."""
        return self._crossing

    @property
    def contact_multiset(self) -> Counter:
        return Counter(self._contacts)

    @property
    def contact_count(self) -> int:
        """|C(psi)|"""
        return len(self._crossing)

    @property
    def contact_arcs(self) -> Tuple[ContactArc, ...]:
        """C*(psi), sorted."""
        return tuple(sorted(self._contacts))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OsfMap) and self._psi == other._psi and self._gene.arcs == other._gene.arcs

    def __hash__(self) -> int:
        return hash(tuple(sorted(self._psi.items())))

    def __repr__(self) -> str:
        return f"OsfMap(|C|={self.contact_count}, |C*|={len(self._contacts)})"
