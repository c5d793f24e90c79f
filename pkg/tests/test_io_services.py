import json

import pytest

from app.core.exceptions import NetworkFormatError, OsfMapFormatError
from app.engines.network_engine import NetworkEngine
from app.engines.parsimony_engine import ParsimonyEngine
from app.models.network import Network
from app.services.network_io import (
    network_from_document,
    network_to_document,
    network_to_dot,
    parse_network_json,
    serialize_network_json,
)
from app.services.osf_io import OSF_HEADER, parse_osf_map, serialize_introgression_set, serialize_osf_map

NON_STRICT_ROWS = "0\t0\tA,B\n1\t1\tC,D\n2\t0\tA\n3\t1\tC\n4\t1\tC,D\n5\t0\tB\n6\t1\tD\n"


class TestOsfMapFormat:
    """OSF map TSV rows: preorder index, tree index, species leaves."""

    def test_serialize_non_strict(self, pairs_triple, non_strict_psi):
        """Each image is written as the sorted leaf cluster below it."""
        assert serialize_osf_map(pairs_triple, non_strict_psi) == OSF_HEADER + NON_STRICT_ROWS

    def test_parse_back(self, pairs_triple, non_strict_psi):
        """Rows resolve to the lca of their leaves."""
        assert parse_osf_map(NON_STRICT_ROWS, pairs_triple) == non_strict_psi

    def test_row_order_is_free(self, pairs_triple, non_strict_psi):
        """Rows may appear in any order."""
        rows = NON_STRICT_ROWS.splitlines(keepends=True)
        assert parse_osf_map("".join(reversed(rows)), pairs_triple) == non_strict_psi

    @pytest.mark.parametrize("text, line", [
        ("0\t0\n", 1),
        ("x\t0\tA\n", 1),
        ("# c\n9\t0\tA\n", 2),
        ("0\t5\tA\n", 1),
        ("0\t0\tC\n", 1),
        ("0\t0\t,\n", 1),
        ("0\t0\tA\n0\t0\tB\n", 2),
    ])
    def test_bad_rows(self, pairs_triple, text, line):
        """Malformed rows are reported with their line number."""
        with pytest.raises(OsfMapFormatError) as exc:
            parse_osf_map(text, pairs_triple)
        assert exc.value.line == line
        assert exc.value.exit_code == 1

    def test_missing_rows(self, pairs_triple):
        """Every gene vertex needs a row."""
        with pytest.raises(OsfMapFormatError, match=r"\[1, 2, 3, 4, 5, 6\]"):
            parse_osf_map("0\t0\tA,B\n", pairs_triple)

    def test_introgression_set_rows(self, chain_triple):
        """Introgression arcs are written as sorted preorder index pairs."""
        text = serialize_introgression_set(chain_triple, [(6, 9), (0, 3), (3, 6)])
        assert text.splitlines()[1:] == ["0\t3", "3\t6", "6\t9"]


class TestNetworkJson:
    """JSON interchange for networks."""

    @pytest.fixture
    def network(self, chain_triple) -> Network:
        return NetworkEngine.build_network(chain_triple, ParsimonyEngine.build_osf(chain_triple)).network

    def test_partitioned_document(self, network):
        """Partitioned networks list forest and contact arcs separately."""
        doc = json.loads(serialize_network_json(network))
        assert "arcs" not in doc
        assert doc["contact_arcs"] == [["0:0", "1:0"], ["1:0", "0:0"]]
        assert doc["leaf_labels"]["1:2"] == "D"

    def test_round_trip(self, network):
        """Reading back a written document gives an equal network."""
        again = parse_network_json(serialize_network_json(network))
        assert again.has_partition
        assert again.arcs == network.arcs
        assert again.contact_arcs == network.contact_arcs
        assert again.leaf_labels == network.leaf_labels

    def test_unpartitioned_document(self, network):
        """Without a partition only 'arcs' is written."""
        doc = network_to_document(network.forget_partition())
        assert doc.forest_arcs is None and doc.contact_arcs is None
        assert not network_from_document(doc).has_partition

    @pytest.mark.parametrize("text", [
        "not json",
        '{"nodes": ["a"]}',
        '{"nodes": ["a", "b"], "arcs": [["a", "b"]], "contact_arcs": []}',
        '{"nodes": ["a", "b"], "arcs": [["a", "b", "c"]]}',
    ])
    def test_bad_documents(self, text):
        """Documents that do not validate raise NetworkFormatError."""
        with pytest.raises(NetworkFormatError):
            parse_network_json(text)

    def test_arc_to_undeclared_node(self):
        """Arcs must join declared nodes."""
        with pytest.raises(NetworkFormatError):
            parse_network_json('{"nodes": ["a"], "arcs": [["a", "b"]]}')


class TestDot:
    """DOT rendering through the network template."""

    def test_clusters_and_dashed_contacts(self, chain_triple):
        """One cluster per species tree; contact arcs dashed; labels on leaves."""
        network = NetworkEngine.build_network(chain_triple, ParsimonyEngine.build_osf(chain_triple)).network
        dot = network_to_dot(network)
        assert dot.startswith("digraph N {\n")
        assert "subgraph cluster_0 {" in dot
        assert "subgraph cluster_1 {" in dot
        assert '"0:1" [shape=plaintext, width=0, label="A"];' in dot
        assert '"0:0" -> "1:0" [style="dashed"];' in dot
        assert '"0:0" -> "0:1";' in dot
        assert dot.endswith("}\n")

    def test_deterministic(self, chain_triple):
        """Equal networks render to identical bytes."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        first = network_to_dot(NetworkEngine.build_network(chain_triple, psi).network)
        again = network_to_dot(NetworkEngine.build_network(chain_triple, psi).network)
        assert first == again

    def test_unpartitioned_has_no_clusters(self):
        """Plain networks are drawn without clusters or dashed arcs."""
        network = Network(["r", "x", "y"], [("r", "x"), ("r", "y")], {"x": "X", "y": "Y"})
        dot = network_to_dot(network, name="plain")
        assert dot.startswith("digraph plain {")
        assert "cluster" not in dot
        assert "dashed" not in dot

    def test_labels_are_escaped(self):
        """Quotes and backslashes in a leaf label stay inside the DOT string."""
        doc = '{"nodes": ["r", "x", "y"], "arcs": [["r", "x"], ["r", "y"]], "leaf_labels": {"x": "say \\"hi\\"", "y": "a\\\\b"}}'
        dot = network_to_dot(parse_network_json(doc))
        assert '"x" [shape=plaintext, width=0, label="say \\"hi\\""];' in dot
        assert '"y" [shape=plaintext, width=0, label="a\\\\b"];' in dot
