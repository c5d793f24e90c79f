"""
Subtree prune and regraft on rooted binary trees and on species forests,
exact rSPR distance for small trees, and exhaustive tree generators.

Rooted SPR follows the usual convention for rooted trees: the pruned
subtree may be regrafted onto any arc outside it, or above the root through
a new root arc (the target is then the current root).
"""
import logging
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Dict, Iterator, List, Sequence, Tuple

from app.core.constants import DEFAULT_CAP_RSPR, RSPR_MAX_LEAVES
from app.core.exceptions import CapExceededError, MalformedMoveError, PreconditionError
from app.models.tree import Forest, NodeId, PhyloTree

logger = logging.getLogger(__name__)

Children = Dict[NodeId, List[NodeId]]
Shape = tuple


@dataclass(frozen=True)
class SprMove:
    """Prune the subtree at cut and regraft it on the arc entering target (above the root if target is the root)."""
    cut: NodeId
    target: NodeId


def _prune(tree: PhyloTree, v: NodeId) -> Tuple[Children, NodeId]:
    """Children map and root of tree with the subtree at v removed; a parent left with one child is suppressed."""
    children: Children = {u: list(tree.children(u)) for u in tree.nodes}
    for u in tree.descendants(v):
        del children[u]
    p = tree.parent(v)
    children[p].remove(v)
    if len(children[p]) > 1:
        return children, tree.root
    (s,) = children.pop(p)
    gp = tree.parent(p)
    if gp is None:
        return children, s
    children[gp][children[gp].index(p)] = s
    return children, tree.root


def _graft(children: Children, root: NodeId, x: NodeId, sub: Children, sub_root: NodeId) -> NodeId:
    """Graft the subtree sub onto the arc entering x; returns the (possibly new) root."""
    n = max(list(children) + list(sub)) + 1
    children.update(sub)
    if x == root:
        children[n] = [x, sub_root]
        return n
    px = next(u for u, cs in children.items() if x in cs)
    children[px][children[px].index(x)] = n
    children[n] = [x, sub_root]
    return root


def _subtree(tree: PhyloTree, v: NodeId, offset: int) -> Tuple[Children, NodeId, Dict[NodeId, str]]:
    sub = {u + offset: [c + offset for c in tree.children(u)] for u in tree.descendants(v)}
    labels = {u + offset: tree.label(u) for u in tree.descendants(v) if tree.is_leaf(u)}
    return sub, v + offset, labels


class SprEngine:

    # ── Trees ───────────────────────────────────────────────────

    @staticmethod
    def _check_move(tree: PhyloTree, move: SprMove) -> None:
        if not tree.is_binary:
            raise PreconditionError("SPR is defined on binary trees")
        if move.cut not in tree or move.target not in tree:
            raise MalformedMoveError(f"move {move} names a vertex outside the tree")
        if move.cut == tree.root:
            raise MalformedMoveError("cannot prune the root")
        if tree.is_ancestor(move.cut, move.target):
            raise MalformedMoveError(f"target {move.target} lies inside the pruned subtree")

    @staticmethod
    def is_identity(tree: PhyloTree, move: SprMove) -> bool:
        """Regrafting onto the parent or the sibling of the cut vertex rebuilds the same tree."""
        p = tree.parent(move.cut)
        return move.target == p or (move.target != move.cut and tree.parent(move.target) == p)

    @staticmethod
    def apply_spr(tree: PhyloTree, move: SprMove) -> PhyloTree:
        """
        Apply one rooted SPR move. The result is compacted (preorder ids).

        Raises:
            PreconditionError: if the tree is not binary
            MalformedMoveError: if the cut is the root or the target lies in the pruned subtree
        """
        SprEngine._check_move(tree, move)
        if SprEngine.is_identity(tree, move):
            return tree.compacted()
        offset = max(tree.nodes) + 1
        sub, sub_root, sub_labels = _subtree(tree, move.cut, offset)
        children, root = _prune(tree, move.cut)
        new_root = _graft(children, root, move.target, sub, sub_root)
        labels = {u: lab for u, lab in tree.leaf_labels.items() if u in children}
        labels.update(sub_labels)
        return PhyloTree(children, new_root, labels).compacted()

    @staticmethod
    def moves(tree: PhyloTree) -> Iterator[SprMove]:
        """Every well-formed non-identity move, in (cut, target) order."""
        for v in tree.nodes:
            if v == tree.root:
                continue
            for x in tree.nodes:
                move = SprMove(v, x)
                if tree.is_ancestor(v, x) or SprEngine.is_identity(tree, move):
                    continue
                yield move

    @staticmethod
    def spr_neighbors(tree: PhyloTree) -> List[PhyloTree]:
        """Distinct trees one SPR move away, sorted by canonical form."""
        seen: Dict[str, PhyloTree] = {}
        own = tree.canonical()
        for move in SprEngine.moves(tree):
            t = SprEngine.apply_spr(tree, move)
            c = t.canonical()
            if c != own:
                seen.setdefault(c, t)
        return [seen[c] for c in sorted(seen)]

    @staticmethod
    def rspr_distance(first: PhyloTree, second: PhyloTree, cap: int = DEFAULT_CAP_RSPR) -> int:
        """
        Exact rooted SPR distance by bidirectional breadth-first search over
        canonical forms. Each round expands the smaller frontier by one full
        level, so the first level that meets the other side gives the distance.

        Raises:
            PreconditionError: if leaf sets differ, a tree is not binary, or there are too many leaves
            CapExceededError: if more than cap trees are visited
        """
        if first.labels != second.labels:
            raise PreconditionError("rSPR distance needs trees on the same leaf set")
        if not (first.is_binary and second.is_binary):
            raise PreconditionError("rSPR distance is defined on binary trees")
        if len(first.labels) > RSPR_MAX_LEAVES:
            raise PreconditionError(f"exact rSPR distance is limited to {RSPR_MAX_LEAVES} leaves")
        a, b = first.canonical(), second.canonical()
        if a == b:
            return 0

        dist = [{a: 0}, {b: 0}]
        frontier = [[first], [second]]
        while frontier[0] and frontier[1]:
            side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
            mine, other = dist[side], dist[1 - side]
            best = None
            nxt = []
            for t in frontier[side]:
                d = mine[t.canonical()] + 1
                for n in SprEngine.spr_neighbors(t):
                    c = n.canonical()
                    if c in other:
                        total = d + other[c]
                        best = total if best is None else min(best, total)
                    if c not in mine:
                        mine[c] = d
                        nxt.append(n)
            if best is not None:
                return best
            if len(dist[0]) + len(dist[1]) > cap:
                raise CapExceededError("rSPR search trees", cap, len(dist[0]) + len(dist[1]))
            frontier[side] = nxt
        raise PreconditionError("trees are not connected by SPR moves")

    # ── Forests ─────────────────────────────────────────────────

    @staticmethod
    def forest_spr(forest: Forest, source: int, cut: NodeId, target: int, graft: NodeId) -> Forest:
        """
        Prune the subtree T0 at cut from tree source and graft it onto the arc
        entering graft in tree target (above its root if graft is the root).

        Raises:
            PreconditionError: if source == target, cut is the source root, or
                fewer than two leaves would remain in the source tree
        """
        if source == target:
            raise PreconditionError("source and target tree must differ")
        if not (0 <= source < len(forest) and 0 <= target < len(forest)):
            raise PreconditionError("tree index out of range")
        src, tgt = forest[source], forest[target]
        if cut not in src or graft not in tgt:
            raise PreconditionError("cut or graft vertex is not in its tree")
        if cut == src.root:
            raise PreconditionError("pruning the whole source tree would leave it empty")
        if len(src.leaves) - len(src.cluster(cut)) < 2:
            raise PreconditionError("the source tree would keep fewer than two leaves")

        children, root = _prune(src, cut)
        pruned = PhyloTree(children, root, {u: lab for u, lab in src.leaf_labels.items() if u in children})

        offset = max(tgt.nodes) + 1
        sub, sub_root, sub_labels = _subtree(src, cut, offset)
        tchildren: Children = {u: list(tgt.children(u)) for u in tgt.nodes}
        new_root = _graft(tchildren, tgt.root, graft, sub, sub_root)
        labels = tgt.leaf_labels
        labels.update(sub_labels)
        grafted = PhyloTree(tchildren, new_root, labels)

        trees = list(forest.trees)
        trees[source] = pruned.compacted()
        trees[target] = grafted.compacted()
        logger.debug(f"[SPR] moved {len(sub_labels)} leaves from tree {source} to tree {target}")
        return Forest(trees)

    # ── Generators ──────────────────────────────────────────────

    @staticmethod
    def all_binary_trees(labels: Sequence[str]) -> List[PhyloTree]:
        """Every rooted binary tree on the labels, by stepwise leaf insertion ((2n-3)!! trees)."""
        labels = list(labels)
        if len(labels) < 2:
            raise PreconditionError("need at least two labels")

        def insert(t, lab: str):
            yield (t, lab)
            if isinstance(t, tuple):
                left, right = t
                for x in insert(left, lab):
                    yield (x, right)
                for x in insert(right, lab):
                    yield (left, x)

        shapes = [(labels[0], labels[1])]
        for lab in labels[2:]:
            shapes = [s for t in shapes for s in insert(t, lab)]
        return [shape_to_tree(s) for s in shapes]

    @staticmethod
    def all_tree_shapes(n: int, binary: bool = False) -> Tuple[Shape, ...]:
        """Unlabelled rooted shapes with n leaves (every interior vertex has at least two children)."""
        if n < 1:
            raise PreconditionError("shapes need at least one leaf")
        return _shapes(n, binary)


def _partitions(n: int, largest: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Non-increasing tuples of positive integers summing to n, at most parts long, first part <= largest."""
    if n == 0:
        yield ()
        return
    if parts == 0:
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _shapes(n: int, binary: bool) -> Tuple[Shape, ...]:
    if n == 1:
        return ((),)
    out = []
    for parts in _partitions(n, n - 1, 2 if binary else n):
        groups = [combinations_with_replacement(_shapes(s, binary), m) for s, m in sorted(Counter(parts).items())]
        for combo in product(*groups):
            out.append(tuple(sh for group in combo for sh in group))
    return tuple(out)


def shape_to_tree(shape, labels: Sequence[str] = ()) -> PhyloTree:
    """
    Build a PhyloTree from a nested tuple. Strings are leaf labels; an empty
    tuple is an unlabelled leaf that takes the next entry of labels (x1, x2,
    ... when labels run out).
    """
    children: Children = {}
    leaf_labels: Dict[NodeId, str] = {}
    pool = iter(labels)
    counter = [0]

    def build(s) -> NodeId:
        v = len(children)
        children[v] = []
        if isinstance(s, str) or s == ():
            counter[0] += 1
            leaf_labels[v] = s if isinstance(s, str) else next(pool, f"x{counter[0]}")
            return v
        for c in s:
            children[v].append(build(c))
        return v

    root = build(shape)
    return PhyloTree(children, root, leaf_labels)
