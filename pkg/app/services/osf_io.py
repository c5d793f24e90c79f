"""
Text interchange for OSF maps and introgression sets.

OSF map rows are `gene_index <TAB> tree_index <TAB> species_leaves` where
gene_index is the position of the gene vertex in preorder and species_leaves
is a comma-separated list of species leaf labels whose lca in that tree is
psi of the vertex. Rows reference labels only, so a file survives any
renumbering of the forest.
"""
import logging
from typing import Dict, List

from app.core.exceptions import OsfMapFormatError
from app.models.osf import OsfMap
from app.models.tree import Arc, NodeId, SpeciesNode
from app.models.triple import ForestTriple

logger = logging.getLogger(__name__)

OSF_HEADER = "# gene_index\ttree_index\tspecies_leaves\n"
INTROGRESSION_HEADER = "# parent_index\tchild_index\n"


def serialize_osf_map(triple: ForestTriple, psi: OsfMap) -> str:
    gene, forest = triple.gene, triple.forest
    lines = [OSF_HEADER]
    for k, v in enumerate(gene.preorder()):
        sn = psi[v]
        leaves = ",".join(sorted(forest[sn.tree].cluster_labels(sn.node)))
        lines.append(f"{k}\t{sn.tree}\t{leaves}\n")
    return "".join(lines)


def parse_osf_map(text: str, triple: ForestTriple) -> OsfMap:
    """
    Read an OSF map written by serialize_osf_map.

    Raises:
        OsfMapFormatError: on malformed, duplicate, out-of-range or missing rows
    """
    gene, forest = triple.gene, triple.forest
    order = gene.preorder()
    images: Dict[NodeId, SpeciesNode] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise OsfMapFormatError(f"expected 3 tab-separated fields, found {len(fields)}", lineno)
        try:
            k, i = int(fields[0]), int(fields[1])
        except ValueError:
            raise OsfMapFormatError("gene and tree indices must be integers", lineno) from None
        if not 0 <= k < len(order):
            raise OsfMapFormatError(f"gene index {k} out of range", lineno)
        if not 0 <= i < len(forest):
            raise OsfMapFormatError(f"tree index {i} out of range", lineno)
        tree = forest[i]
        labels = [s.strip() for s in fields[2].split(",") if s.strip()]
        if not labels:
            raise OsfMapFormatError("empty species leaf list", lineno)
        unknown = sorted(set(labels) - tree.labels)
        if unknown:
            raise OsfMapFormatError(f"labels {unknown} are not leaves of tree {i}", lineno)
        v = order[k]
        if v in images:
            raise OsfMapFormatError(f"duplicate row for gene index {k}", lineno)
        images[v] = SpeciesNode(i, tree.lca(tree.leaf(lab) for lab in labels))

    missing = [k for k, v in enumerate(order) if v not in images]
    if missing:
        raise OsfMapFormatError(f"no row for gene indices {missing}")
    logger.debug(f"[OsfIO] read psi on {len(images)} gene vertices")
    return OsfMap(gene, images)


def serialize_introgression_set(triple: ForestTriple, arcs: List[Arc]) -> str:
    """Arcs of G as preorder index pairs, sorted."""
    index = {v: k for k, v in enumerate(triple.gene.preorder())}
    rows = sorted((index[u], index[v]) for u, v in arcs)
    return INTROGRESSION_HEADER + "".join(f"{u}\t{v}\n" for u, v in rows)
