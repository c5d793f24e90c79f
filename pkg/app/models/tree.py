"""
Rooted phylogenetic trees and species forests.

Node identity is structural: a NodeId is an integer handle that is only
meaningful inside the tree that issued it. Only leaves carry labels.
"""
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import networkx as nx

from app.core.exceptions import InvalidForestError, InvalidPathError, InvalidTreeError, PreconditionError, UnknownNodeError

NodeId = int
Arc = Tuple[NodeId, NodeId]


class SpeciesNode(NamedTuple):
    """A vertex of a species forest: (index of its tree, node id inside that tree)."""
    tree: int
    node: NodeId


def suppress_unary(children: Mapping[NodeId, Sequence[NodeId]], root: NodeId) -> Tuple[Dict[NodeId, Tuple[NodeId, ...]], NodeId]:
    """
    Splice out every vertex with exactly one child (the root included).
    Returns the reduced child map and the new root.
    """
    def descend(v: NodeId) -> NodeId:
        while len(children.get(v, ())) == 1:
            v = children[v][0]
        return v

    new_root = descend(root)
    out: Dict[NodeId, Tuple[NodeId, ...]] = {}
    stack = [new_root]
    while stack:
        v = stack.pop()
        kids = tuple(descend(c) for c in children.get(v, ()))
        out[v] = kids
        stack.extend(kids)
    return out, new_root


class PhyloTree:
    """
    Immutable rooted phylogenetic tree.

    Invariants enforced at construction:
      - connected, single root, every non-root node has exactly one parent
      - root has outdegree >= 2 (so the tree has at least two leaves)
      - no non-root node has exactly one child
      - leaves carry unique non-empty labels, interior nodes carry none
    """

    __slots__ = ("_root", "_children", "_parent", "_labels", "_by_label", "_depth", "_preorder", "_clusters")

    def __init__(self, children: Mapping[NodeId, Sequence[NodeId]], root: NodeId, leaf_labels: Mapping[NodeId, str]):
        kids: Dict[NodeId, Tuple[NodeId, ...]] = {int(v): tuple(int(c) for c in cs) for v, cs in children.items()}
        if root not in kids:
            raise InvalidTreeError(f"Root {root} is not a node of the tree")

        parent: Dict[NodeId, Optional[NodeId]] = {root: None}
        depth: Dict[NodeId, int] = {root: 0}
        preorder: List[NodeId] = []
        stack = [root]
        while stack:
            v = stack.pop()
            preorder.append(v)
            for c in reversed(kids[v]):
                if c not in kids:
                    raise InvalidTreeError(f"Arc ({v},{c}) points to an undeclared node")
                if c in parent:
                    raise InvalidTreeError(f"Node {c} has more than one parent or lies on a cycle")
                parent[c] = v
                depth[c] = depth[v] + 1
                stack.append(c)

        if len(parent) != len(kids):
            stray = sorted(set(kids) - set(parent))
            raise InvalidTreeError(f"Nodes not reachable from the root: {stray}")
        if len(kids[root]) < 2:
            raise InvalidTreeError("Root must have outdegree at least 2")
        for v, cs in kids.items():
            if len(cs) == 1:
                raise InvalidTreeError(f"Node {v} has indegree 1 and outdegree 1")

        leaves = {v for v, cs in kids.items() if not cs}
        labels = {int(v): str(lab) for v, lab in leaf_labels.items()}
        if set(labels) != leaves:
            raise InvalidTreeError("Exactly the leaves must be labelled")
        by_label: Dict[str, NodeId] = {}
        for v, lab in labels.items():
            if not lab:
                raise InvalidTreeError(f"Leaf {v} has an empty label")
            if lab in by_label:
                raise InvalidTreeError(f"Duplicate leaf label {lab!r}")
            by_label[lab] = v

        clusters: Dict[NodeId, FrozenSet[NodeId]] = {}
        for v in reversed(preorder):
            clusters[v] = frozenset([v]) if not kids[v] else frozenset().union(*(clusters[c] for c in kids[v]))

        self._root = root
        self._children = kids
        self._parent = parent
        self._labels = labels
        self._by_label = by_label
        self._depth = depth
        self._preorder = tuple(preorder)
        self._clusters = clusters

    # ── Construction helpers ────────────────────────────────────

    @classmethod
    def from_arcs(cls, arcs: Iterable[Arc], leaf_labels: Mapping[NodeId, str]) -> "PhyloTree":
        children: Dict[NodeId, List[NodeId]] = {}
        heads = set()
        for u, v in arcs:
            children.setdefault(u, []).append(v)
            children.setdefault(v, [])
            heads.add(v)
        for v in leaf_labels:
            children.setdefault(v, [])
        roots = [v for v in children if v not in heads]
        if len(roots) != 1:
            raise InvalidTreeError(f"Expected exactly one indegree-0 node, found {len(roots)}")
        return cls({v: sorted(cs) for v, cs in children.items()}, roots[0], leaf_labels)

    @classmethod
    def suppressed(cls, children: Mapping[NodeId, Sequence[NodeId]], root: NodeId, leaf_labels: Mapping[NodeId, str]) -> "PhyloTree":
        """Build a tree after splicing out every unary vertex."""
        kids, new_root = suppress_unary(children, root)
        labels = {v: lab for v, lab in leaf_labels.items() if v in kids}
        return cls(kids, new_root, labels)

    def compacted(self) -> "PhyloTree":
        """Same tree with node ids renumbered 0..n-1 in preorder."""
        ids = {v: i for i, v in enumerate(self._preorder)}
        return PhyloTree(
            {ids[v]: [ids[c] for c in cs] for v, cs in self._children.items()},
            0,
            {ids[v]: lab for v, lab in self._labels.items()},
        )

    # ── Structure ───────────────────────────────────────────────

    def _check(self, v: NodeId) -> None:
        if v not in self._children:
            raise UnknownNodeError(v)

    @property
    def root(self) -> NodeId:
        return self._root

    @property
    def nodes(self) -> Tuple[NodeId, ...]:
        return tuple(sorted(self._children))

    @property
    def arcs(self) -> Tuple[Arc, ...]:
        return tuple(sorted((u, v) for u, cs in self._children.items() for v in cs))

    @property
    def leaves(self) -> Tuple[NodeId, ...]:
        return tuple(sorted(self._labels))

    @property
    def interior(self) -> Tuple[NodeId, ...]:
        return tuple(sorted(v for v, cs in self._children.items() if cs))

    @property
    def labels(self) -> FrozenSet[str]:
        return frozenset(self._by_label)

    @property
    def leaf_labels(self) -> Dict[NodeId, str]:
        return dict(self._labels)

    def __contains__(self, v: object) -> bool:
        return v in self._children

    def __len__(self) -> int:
        return len(self._children)

    def children(self, v: NodeId) -> Tuple[NodeId, ...]:
        self._check(v)
        return self._children[v]

    def parent(self, v: NodeId) -> Optional[NodeId]:
        self._check(v)
        return self._parent[v]

    def is_leaf(self, v: NodeId) -> bool:
        self._check(v)
        return not self._children[v]

    def label(self, v: NodeId) -> Optional[str]:
        self._check(v)
        return self._labels.get(v)

    def leaf(self, label: str) -> NodeId:
        try:
            return self._by_label[label]
        except KeyError:
            raise UnknownNodeError(label) from None

    def outdegree(self, v: NodeId) -> int:
        return len(self.children(v))

    def depth(self, v: NodeId) -> int:
        self._check(v)
        return self._depth[v]

    @property
    def is_binary(self) -> bool:
        return all(len(cs) in (0, 2) for cs in self._children.values())

    def preorder(self) -> Tuple[NodeId, ...]:
        return self._preorder

    def postorder(self) -> Tuple[NodeId, ...]:
        return tuple(reversed(self._preorder))

    def descendants(self, v: NodeId) -> Iterator[NodeId]:
        """All nodes below v, v included, in preorder."""
        self._check(v)
        stack = [v]
        while stack:
            w = stack.pop()
            yield w
            stack.extend(reversed(self._children[w]))

    # ── Ancestry ────────────────────────────────────────────────

    def is_ancestor(self, u: NodeId, v: NodeId) -> bool:
        """True iff there is a directed path from u to v (reflexive)."""
        self._check(u)
        self._check(v)
        du = self._depth[u]
        while self._depth[v] > du:
            v = self._parent[v]
        return u == v

    def lca(self, nodes: Iterable[NodeId]) -> NodeId:
        ys = list(nodes)
        if not ys:
            raise PreconditionError("lca of an empty node set is undefined")
        for y in ys:
            self._check(y)
        # Intersect root paths; the deepest common vertex is the lca
        acc = ys[0]
        for y in ys[1:]:
            a, b = acc, y
            while self._depth[a] > self._depth[b]:
                a = self._parent[a]
            while self._depth[b] > self._depth[a]:
                b = self._parent[b]
            while a != b:
                a, b = self._parent[a], self._parent[b]
            acc = a
        return acc

    def cluster(self, v: NodeId) -> Tuple[NodeId, ...]:
        """Leaves below v, sorted."""
        self._check(v)
        return tuple(sorted(self._clusters[v]))

    def cluster_set(self, v: NodeId) -> FrozenSet[NodeId]:
        self._check(v)
        return self._clusters[v]

    def cluster_labels(self, v: NodeId) -> FrozenSet[str]:
        return frozenset(self._labels[x] for x in self.cluster_set(v))

    def path(self, u: NodeId, v: NodeId) -> List[NodeId]:
        """Vertices of the directed path from ancestor u down to v."""
        if not self.is_ancestor(u, v):
            raise InvalidPathError(f"{u} is not an ancestor of {v}")
        up = [v]
        while up[-1] != u:
            up.append(self._parent[up[-1]])
        return up[::-1]

    # ── Views ───────────────────────────────────────────────────

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for v in self.nodes:
            g.add_node(v, label=self._labels.get(v))
        g.add_edges_from(self.arcs)
        return g

    def canonical(self, v: Optional[NodeId] = None) -> str:
        """Label-based canonical Newick-like string; equal iff isomorphic with labels fixed."""
        v = self._root if v is None else v
        if not self._children[v]:
            return self._labels[v]
        return "(" + ",".join(sorted(self.canonical(c) for c in self._children[v])) + ")"

    def isomorphic(self, other: "PhyloTree") -> bool:
        return self.canonical() == other.canonical()

    def __repr__(self) -> str:
        return f"PhyloTree({self.canonical()};)"


class Forest:
    """Non-empty ordered list of trees with pairwise disjoint leaf label sets."""

    __slots__ = ("_trees", "_locate")

    def __init__(self, trees: Sequence[PhyloTree]):
        trees = tuple(trees)
        if not trees:
            raise InvalidForestError("A forest needs at least one tree")
        locate: Dict[str, SpeciesNode] = {}
        for i, tree in enumerate(trees):
            for v, lab in tree.leaf_labels.items():
                if lab in locate:
                    raise InvalidForestError(f"Leaf label {lab!r} occurs in trees {locate[lab].tree} and {i}")
                locate[lab] = SpeciesNode(i, v)
        self._trees = trees
        self._locate = locate

    @property
    def trees(self) -> Tuple[PhyloTree, ...]:
        return self._trees

    def __len__(self) -> int:
        return len(self._trees)

    def __getitem__(self, i: int) -> PhyloTree:
        return self._trees[i]

    def __iter__(self) -> Iterator[PhyloTree]:
        return iter(self._trees)

    @property
    def labels(self) -> FrozenSet[str]:
        return frozenset(self._locate)

    def locate(self, label: str) -> SpeciesNode:
        try:
            return self._locate[label]
        except KeyError:
            raise UnknownNodeError(label) from None

    def nodes(self) -> List[SpeciesNode]:
        return [SpeciesNode(i, v) for i, t in enumerate(self._trees) for v in t.nodes]

    def __contains__(self, sn: object) -> bool:
        if not isinstance(sn, tuple) or len(sn) != 2:
            return False
        i, v = sn
        return isinstance(i, int) and 0 <= i < len(self._trees) and v in self._trees[i]

    def node_label(self, sn: SpeciesNode) -> Optional[str]:
        return self._trees[sn.tree].label(sn.node)

    def is_ancestor(self, a: SpeciesNode, b: SpeciesNode) -> bool:
        return a.tree == b.tree and self._trees[a.tree].is_ancestor(a.node, b.node)

    @property
    def is_binary(self) -> bool:
        return all(t.is_binary for t in self._trees)

    def __repr__(self) -> str:
        return "Forest(" + " ".join(f"{t.canonical()};" for t in self._trees) + ")"


def fresh_label(base: str, taken: set) -> str:
    """base, or base_2, base_3, ... whichever is not yet taken; the result is added to taken."""
    label, n = base, 1
    while label in taken:
        n += 1
        label = f"{base}_{n}"
    taken.add(label)
    return label
