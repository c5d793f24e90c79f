"""
Network output (DOT via a jinja2 template, JSON) and JSON input.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from jinja2 import Environment, FileSystemLoader
from pydantic import ValidationError

from app.core.exceptions import NetworkFormatError
from app.models.network import Network
from app.schemas.network_schema import NetworkDocument

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"

_env = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
    autoescape=False,
)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


_env.filters["dot_escape"] = _dot_escape


def _quote(name: str) -> str:
    return json.dumps(name)


def _tree_index(name: str) -> Optional[int]:
    head, sep, _ = name.partition(":")
    return int(head) if sep and head.isdigit() else None


def network_to_dot(network: Network, name: str = "N") -> str:
    """
    Render a network as DOT. Vertices named "i:..." of a partitioned network
    are grouped into one cluster per tree i; contact arcs are dashed.
    Output is byte-identical for equal networks.
    """
    labels = network.leaf_labels
    clusters: Dict[int, List[dict]] = {}
    loose: List[dict] = []
    for v in network.nodes:
        entry = {"id": _quote(v), "label": labels.get(v)}
        i = _tree_index(v) if network.has_partition else None
        if i is None:
            loose.append(entry)
        else:
            clusters.setdefault(i, []).append(entry)

    contact = set(network.contact_arcs) if network.has_partition else set()
    arcs = [{"tail": _quote(u), "head": _quote(v), "contact": (u, v) in contact} for u, v in network.arcs]
    template = _env.get_template("network.dot.j2")
    return template.render(
        name=name,
        clusters=[{"index": i, "nodes": clusters[i]} for i in sorted(clusters)],
        loose=loose,
        arcs=arcs,
    )


def network_to_document(network: Network) -> NetworkDocument:
    if network.has_partition:
        return NetworkDocument(
            nodes=list(network.nodes),
            forest_arcs=[list(a) for a in network.forest_arcs],
            contact_arcs=[list(a) for a in network.contact_arcs],
            leaf_labels=network.leaf_labels,
        )
    return NetworkDocument(
        nodes=list(network.nodes),
        arcs=[list(a) for a in network.arcs],
        leaf_labels=network.leaf_labels,
    )


def serialize_network_json(network: Network) -> str:
    return network_to_document(network).model_dump_json(exclude_none=True, indent=2) + "\n"


def network_from_document(doc: NetworkDocument) -> Network:
    if doc.arcs is not None:
        return Network(doc.nodes, [tuple(a) for a in doc.arcs], doc.leaf_labels)
    return Network(
        doc.nodes,
        leaf_labels=doc.leaf_labels,
        forest_arcs=[tuple(a) for a in doc.forest_arcs or []],
        contact_arcs=[tuple(a) for a in doc.contact_arcs or []],
    )


def parse_network_json(text: str) -> Network:
    """
    Raises:
        NetworkFormatError: if the text is not a valid network document
    """
    try:
        doc = NetworkDocument.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "document"
        raise NetworkFormatError(f"invalid network document at {where}: {first.get('msg')}") from None
    network = network_from_document(doc)
    logger.debug(f"[NetworkIO] read {network!r}")
    return network
