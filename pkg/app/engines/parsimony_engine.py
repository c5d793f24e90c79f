"""
OSF construction by small parsimony on the tree-membership character.

Bottom-up: Fitch-Hartigan sigma sets (states occurring most often among the
children's sets). Top-down: keep the parent's state when the child's sigma
allows it, otherwise ask the tie breaker. Each vertex is then placed at the
lca, inside its assigned tree, of the species leaves below it.
"""
import logging
import random
from collections import Counter
from typing import Dict, FrozenSet, Optional, Protocol, Sequence, Tuple

from app.core.exceptions import PreconditionError
from app.models.osf import OsfMap
from app.models.tree import NodeId, PhyloTree, SpeciesNode
from app.models.triple import ForestTriple

logger = logging.getLogger(__name__)

Character = Dict[NodeId, int]
Extension = Dict[NodeId, int]
SigmaSets = Dict[NodeId, FrozenSet[int]]


class TieBreaker(Protocol):
    def choose(self, v: NodeId, options: Sequence[int]) -> int:
        ...


class FirstTieBreaker:
    """Lowest tree index in file order."""

    name = "first"

    def choose(self, v: NodeId, options: Sequence[int]) -> int:
        return min(options)


class SeededTieBreaker:
    """Uniform choice from a seeded generator, for sampling distinct optimal OSFs."""

    name = "seeded"

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)

    def choose(self, v: NodeId, options: Sequence[int]) -> int:
        options = sorted(options)
        if len(options) == 1:
            return options[0]
        return self._rng.choice(options)


class ParsimonyEngine:
    """
    Fitch-Hartigan small parsimony and the OSF builder on top of it.

    All methods are pure; the only state is inside a SeededTieBreaker.
    """

    @staticmethod
    def character_of(triple: ForestTriple) -> Character:
        """f(x) = index of the species tree containing phi(x)."""
        return {x: triple.image(x).tree for x in triple.gene.leaves}

    @staticmethod
    def _hartigan(gene: PhyloTree, f: Character) -> Tuple[SigmaSets, int]:
        sigma: SigmaSets = {}
        score = 0
        for v in gene.postorder():
            kids = gene.children(v)
            if not kids:
                sigma[v] = frozenset([f[v]])
                continue
            counts = Counter(s for c in kids for s in sigma[c])
            best = max(counts.values())
            sigma[v] = frozenset(s for s, n in counts.items() if n == best)
            # Subtree cost under state s is base + (children - count(s))
            score += len(kids) - best
        return sigma, score

    @staticmethod
    def bottom_up(gene: PhyloTree, f: Character) -> SigmaSets:
        """
        Compute sigma(v) for every vertex.

        sigma(leaf) = {f(leaf)}; for interior v, sigma(v) is the set of states s
        maximising the number of children u with s in sigma(u). On binary trees
        this is Fitch's intersection-else-union rule.
        """
        return ParsimonyEngine._hartigan(gene, f)[0]

    @staticmethod
    def top_down(gene: PhyloTree, sigma: SigmaSets, tie: Optional[TieBreaker] = None) -> Extension:
        """
        Extend the character to all vertices.

        The root takes a state from sigma(root). A child keeps its parent's
        state when that state is in its sigma set, otherwise it takes one
        chosen by the tie breaker from its own sigma set.
        """
        tie = tie or FirstTieBreaker()
        ext: Extension = {}
        for v in gene.preorder():
            p = gene.parent(v)
            if p is not None and ext[p] in sigma[v]:
                ext[v] = ext[p]
            else:
                ext[v] = tie.choose(v, sorted(sigma[v]))
        return ext

    @staticmethod
    def parsimony_score(gene: PhyloTree, f: Character) -> int:
        """Minimum number of state-change arcs over all extensions of f."""
        return ParsimonyEngine._hartigan(gene, f)[1]

    @staticmethod
    def changes(gene: PhyloTree, ext: Extension) -> int:
        return sum(1 for u, v in gene.arcs if ext[u] != ext[v])

    @staticmethod
    def place(triple: ForestTriple, ext: Extension) -> OsfMap:
        """
        psi(v) = lca, in tree ext(v), of the phi-images of the leaves below v
        that lie in that tree. Every tree in sigma(v) has such a leaf.
        """
        gene, forest = triple.gene, triple.forest
        # per-tree lca of the images below each vertex
        below: Dict[NodeId, Dict[int, NodeId]] = {}
        psi: Dict[NodeId, SpeciesNode] = {}
        for v in gene.postorder():
            kids = gene.children(v)
            if not kids:
                sn = triple.image(v)
                below[v] = {sn.tree: sn.node}
                psi[v] = sn
                continue
            acc: Dict[int, NodeId] = {}
            for c in kids:
                for i, w in below[c].items():
                    acc[i] = w if i not in acc else forest[i].lca((acc[i], w))
            below[v] = acc
            i = ext[v]
            if i not in acc:
                raise PreconditionError(f"extension assigns tree {i} to vertex {v} with no leaf of that tree below it")
            psi[v] = SpeciesNode(i, acc[i])
        return OsfMap(gene, psi)

    @staticmethod
    def build_osf(triple: ForestTriple, tie: Optional[TieBreaker] = None) -> OsfMap:
        """
        Run the builder: character, sigma sets, top-down extension, lca placement.

        Args:
            triple: a valid forest triple
            tie: tie-break policy for the top-down phase (default: lowest tree index)

        Returns:
            OsfMap: a strict OSF with |C(psi)| equal to the parsimony score
        """
        f = ParsimonyEngine.character_of(triple)
        sigma, score = ParsimonyEngine._hartigan(triple.gene, f)
        ext = ParsimonyEngine.top_down(triple.gene, sigma, tie)
        psi = ParsimonyEngine.place(triple, ext)
        logger.info(f"[Builder] t={score} contact_arcs={len(psi.contact_arcs)} trees={triple.n_trees}")
        return psi
