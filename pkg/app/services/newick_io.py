"""
Newick reading/writing for gene trees and species forests, plus the
tab-separated leaf map format.

The parser is a non-recursive descent over positioned tokens so that any
input either yields a tree or a NewickParseError naming the offending
character offset.
"""
import logging
import re
from typing import Dict, List, Optional, Tuple

from app.core.exceptions import InvalidForestError, InvalidTreeError, LeafMapError, NewickParseError
from app.models.tree import Forest, NodeId, PhyloTree
from app.models.triple import ForestTriple

logger = logging.getLogger(__name__)

_TOKENIZER = re.compile(r"[(),:;]|[^\s(),:;]+")
_LEAF_LABEL = re.compile(r"[A-Za-z0-9_]+\Z")
_LENGTH = re.compile(r"[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\Z")

Token = Tuple[str, int]


def _tokenize(text: str) -> List[Token]:
    return [(m.group(0), m.start()) for m in _TOKENIZER.finditer(text)]


def _is_name(tok: Optional[str]) -> bool:
    return tok is not None and tok not in "(),:;"


class _TreeBuilder:
    """Collects nodes while the token stream is consumed."""

    def __init__(self):
        self.children: Dict[NodeId, List[NodeId]] = {}
        self.labels: Dict[NodeId, str] = {}
        self.label_pos: Dict[str, int] = {}
        self.saw_length = False

    def new_node(self) -> NodeId:
        v = len(self.children)
        self.children[v] = []
        return v

    def new_leaf(self, label: str, pos: int) -> NodeId:
        if not _LEAF_LABEL.match(label):
            raise NewickParseError(f"Invalid leaf label {label!r}", pos)
        if label in self.label_pos:
            raise NewickParseError(f"Duplicate leaf label {label!r}", pos)
        v = self.new_node()
        self.labels[v] = label
        self.label_pos[label] = pos
        return v


def _skip_length(tokens: List[Token], i: int, end: int, builder: _TreeBuilder) -> int:
    if i < len(tokens) and tokens[i][0] == ":":
        i += 1
        if i >= len(tokens) or not _LENGTH.match(tokens[i][0]):
            raise NewickParseError("Missing or malformed branch length", tokens[i][1] if i < len(tokens) else end)
        builder.saw_length = True
        i += 1
    return i


def _parse_tokens(tokens: List[Token], end: int) -> Tuple[_TreeBuilder, NodeId, int]:
    builder = _TreeBuilder()
    open_nodes: List[Tuple[NodeId, int]] = []
    expecting_node = True
    last: Optional[NodeId] = None
    i = 0
    while True:
        tok, pos = tokens[i] if i < len(tokens) else (None, end)
        if expecting_node:
            if tok == "(":
                open_nodes.append((builder.new_node(), pos))
                i += 1
            elif _is_name(tok):
                last = builder.new_leaf(tok, pos)
                i = _skip_length(tokens, i + 1, end, builder)
                expecting_node = False
            else:
                found = "end of input" if tok is None else repr(tok)
                raise NewickParseError(f"Expected '(' or a leaf label, found {found}", pos)
            continue

        if tok == ",":
            if not open_nodes:
                raise NewickParseError("',' outside parentheses", pos)
            builder.children[open_nodes[-1][0]].append(last)
            expecting_node = True
            i += 1
        elif tok == ")":
            if not open_nodes:
                raise NewickParseError("Unbalanced ')'", pos)
            v, _ = open_nodes.pop()
            builder.children[v].append(last)
            i += 1
            if i < len(tokens) and _is_name(tokens[i][0]):
                i += 1  # interior labels are ignored
            i = _skip_length(tokens, i, end, builder)
            last = v
        elif tok == ";":
            if open_nodes:
                raise NewickParseError("Unbalanced '(': missing ')'", open_nodes[-1][1])
            return builder, 0, i + 1
        elif tok is None:
            if open_nodes:
                raise NewickParseError("Unbalanced '(': missing ')'", open_nodes[-1][1])
            raise NewickParseError("Missing terminating ';'", pos)
        else:
            raise NewickParseError(f"Unexpected token {tok!r}", pos)


def parse_tree(text: str) -> PhyloTree:
    """Parse one rooted Newick tree. Branch lengths are accepted and discarded."""
    tokens = _tokenize(text)
    builder, root, consumed = _parse_tokens(tokens, len(text))
    if consumed < len(tokens):
        raise NewickParseError("Trailing text after ';'", tokens[consumed][1])
    if builder.saw_length:
        logger.warning("[Newick] Branch lengths present; they are discarded")
    try:
        return PhyloTree(builder.children, root, builder.labels)
    except InvalidTreeError as e:
        raise NewickParseError(e.message, tokens[consumed - 1][1]) from None


def parse_forest(text: str) -> Forest:
    """One Newick tree per non-empty line."""
    trees = []
    offset = 0
    for line in text.splitlines(keepends=True):
        if line.strip():
            try:
                trees.append(parse_tree(line))
            except NewickParseError as e:
                raise NewickParseError(f"tree {len(trees) + 1}: {e.reason}", offset + e.position) from None
        offset += len(line)
    if not trees:
        raise InvalidForestError("Forest file contains no trees")
    return Forest(trees)


def parse_leaf_map(text: str, gene: PhyloTree, forest: Forest) -> Dict[NodeId, str]:
    """
    Rows of `gene_label <TAB> species_label`; '#' starts a comment.
    Returns phi keyed by gene leaf node id.
    """
    phi: Dict[NodeId, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise LeafMapError(f"expected 2 fields, found {len(fields)}", lineno)
        gene_label, species_label = fields
        if gene_label not in gene.labels:
            raise LeafMapError(f"unknown gene leaf {gene_label!r}", lineno)
        if species_label not in forest.labels:
            raise LeafMapError(f"unknown species leaf {species_label!r}", lineno)
        x = gene.leaf(gene_label)
        if x in phi:
            raise LeafMapError(f"duplicate row for gene leaf {gene_label!r}", lineno)
        phi[x] = species_label
    missing = sorted(gene.label(x) for x in gene.leaves if x not in phi)
    if missing:
        raise LeafMapError(f"gene leaves without a row: {missing}")
    return phi


def load_triple(gene_text: str, forest_text: str, map_text: str) -> ForestTriple:
    gene = parse_tree(gene_text)
    forest = parse_forest(forest_text)
    return ForestTriple(gene, forest, parse_leaf_map(map_text, gene, forest))


def serialize_tree(tree: PhyloTree) -> str:
    def render(v: NodeId) -> str:
        kids = tree.children(v)
        if not kids:
            return tree.label(v)
        return "(" + ",".join(render(c) for c in kids) + ")"

    return render(tree.root) + ";"


def serialize_forest(forest: Forest) -> str:
    return "".join(serialize_tree(t) + "\n" for t in forest)


def serialize_leaf_map(triple: ForestTriple) -> str:
    return "".join(f"{g}\t{s}\n" for g, s in sorted(triple.phi_by_label().items()))
