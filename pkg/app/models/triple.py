from typing import Dict, Mapping

from app.core.exceptions import InvalidTripleError, UnknownNodeError
from app.models.tree import Forest, NodeId, PhyloTree, SpeciesNode


class ForestTriple:
    """
    A gene tree G, a species forest F and a leaf map phi: L(G) -> L(F).

    phi is stored against gene leaf node ids; the species side is kept as
    leaf labels so it survives any renumbering of the forest.
    """

    __slots__ = ("_gene", "_forest", "_phi")

    def __init__(self, gene: PhyloTree, forest: Forest, phi: Mapping[NodeId, str]):
        phi = {int(x): str(lab) for x, lab in phi.items()}
        leaves = set(gene.leaves)
        missing = sorted(leaves - set(phi))
        if missing:
            raise InvalidTripleError(f"Leaf map undefined on gene leaves {[gene.label(x) for x in missing]}")
        extra = sorted(set(phi) - leaves)
        if extra:
            raise InvalidTripleError(f"Leaf map defined on non-leaf gene nodes {extra}")
        unknown = sorted({lab for lab in phi.values() if lab not in forest.labels})
        if unknown:
            raise InvalidTripleError(f"Leaf map targets unknown species leaves {unknown}")
        if len(leaves) < 2 or len(forest.labels) < 2:
            raise InvalidTripleError("Gene tree and species forest need at least two leaves each")
        self._gene = gene
        self._forest = forest
        self._phi = phi

    @classmethod
    def from_labels(cls, gene: PhyloTree, forest: Forest, phi: Mapping[str, str]) -> "ForestTriple":
        """Build from a gene-label -> species-label map."""
        try:
            return cls(gene, forest, {gene.leaf(g): s for g, s in phi.items()})
        except UnknownNodeError as e:
            raise InvalidTripleError(f"Leaf map names unknown gene leaf {e.node!r}") from None

    @property
    def gene(self) -> PhyloTree:
        return self._gene

    @property
    def forest(self) -> Forest:
        return self._forest

    @property
    def phi(self) -> Dict[NodeId, str]:
        return dict(self._phi)

    def phi_label(self, x: NodeId) -> str:
        try:
            return self._phi[x]
        except KeyError:
            raise UnknownNodeError(x) from None

    def image(self, x: NodeId) -> SpeciesNode:
        """phi(x) as a forest vertex."""
        return self._forest.locate(self.phi_label(x))

    def phi_by_label(self) -> Dict[str, str]:
        return {self._gene.label(x): lab for x, lab in sorted(self._phi.items())}

    @property
    def n_trees(self) -> int:
        return len(self._forest)

    @property
    def is_binary(self) -> bool:
        return self._gene.is_binary and self._forest.is_binary

    def with_gene(self, gene: PhyloTree) -> "ForestTriple":
        """Same forest and label map on a different gene tree over the same leaf labels."""
        return ForestTriple.from_labels(gene, self._forest, self.phi_by_label())

    def with_forest(self, forest: Forest) -> "ForestTriple":
        return ForestTriple(self._gene, forest, self._phi)

    def __repr__(self) -> str:
        return f"ForestTriple(G={self._gene!r}, F={self._forest!r})"
