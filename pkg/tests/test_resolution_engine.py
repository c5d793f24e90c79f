import networkx as nx
import pytest

from app.core.exceptions import CapExceededError, InvalidOsfError, NotStrictError
from app.engines.parsimony_engine import ParsimonyEngine
from app.engines.resolution_engine import ResolutionEngine, _split_closed_walk
from app.services.newick_io import load_triple

from tests.conftest import with_interior


class TestBinaryResolution:
    """N_psi: subdivisions, caterpillars and one contact arc per arc of I."""

    def test_chain_resolution_is_acyclic(self, chain_triple):
        """Stacking subdivisions in gene preorder breaks the 2-cycle of N(psi)."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        resolution = ResolutionEngine.binary_resolution(chain_triple, psi)
        network = resolution.network
        assert len(network) == 6 + 6
        assert nx.is_directed_acyclic_graph(network.graph)
        assert set(resolution.carries.values()) == {(0, 3), (3, 6), (6, 9)}
        assert network.contact_arcs == (
            ("0:0~1", "1:0~1"),
            ("0:0~3", "1:0~3"),
            ("1:0~2", "0:0~2"),
        )

    def test_subdivisions_are_labelled_with_gene_vertices(self, chain_triple):
        """Each subdivision remembers the gene vertex whose I-arc it carries."""
        resolution = ResolutionEngine.binary_resolution(chain_triple, ParsimonyEngine.build_osf(chain_triple))
        assert resolution.subdivision_label["0:0~1"] == 0
        assert resolution.subdivision_label["0:0~2"] == 6
        assert resolution.subdivision_label["1:0~1"] == 3
        assert resolution.projection["1:0~3"] == "1:0"

    def test_multifurcation_becomes_caterpillar(self):
        """A species vertex with three children is refined into two binary vertices."""
        triple = load_triple("((a,b,c),(d,e));", "(A,B,C);\n(D,E);\n", "a\tA\nb\tB\nc\tC\nd\tD\ne\tE\n")
        resolution = ResolutionEngine.binary_resolution(triple, ParsimonyEngine.build_osf(triple))
        graph = resolution.network.graph
        assert "0:0^1" in graph
        assert resolution.projection["0:0^1"] == "0:0"
        assert max(d for _, d in graph.out_degree()) == 2
        assert len(resolution.network) == 10

    def test_crossed_resolution_is_acyclic(self, crossed_triple, crossed_psi):
        """The incidental 2-cycle of N(psi) disappears in N_psi."""
        resolution = ResolutionEngine.binary_resolution(crossed_triple, crossed_psi)
        assert nx.is_directed_acyclic_graph(resolution.network.graph)
        assert ResolutionEngine.classify_resolution_cycles(crossed_triple, resolution) == []

    def test_non_strict_rejected(self, pairs_triple, non_strict_psi):
        """N_psi needs a strict OSF."""
        with pytest.raises(NotStrictError):
            ResolutionEngine.binary_resolution(pairs_triple, non_strict_psi)


class TestCycleClassification:
    """Directed cycles of N(psi), split into realised and incidental."""

    def test_chain_cycle_is_realised(self, chain_triple):
        """The path 0-3-6 maps onto the 2-cycle."""
        records = ResolutionEngine.classify_cycles(chain_triple, ParsimonyEngine.build_osf(chain_triple))
        assert len(records) == 1
        assert records[0].cycle == ["0:0", "1:0"]
        assert not records[0].incidental

    def test_crossed_cycle_is_incidental(self, crossed_triple, crossed_psi):
        """The two contact arcs of the 2-cycle come from different gene subtrees."""
        records = ResolutionEngine.classify_cycles(crossed_triple, crossed_psi)
        assert [(r.cycle, r.incidental) for r in records] == [(["0:0", "1:0"], True)]

    def test_cycle_cap(self, chain_triple):
        """More cycles than the cap raises CapExceededError."""
        with pytest.raises(CapExceededError):
            ResolutionEngine.classify_cycles(chain_triple, ParsimonyEngine.build_osf(chain_triple), cap=0)

    def test_requires_osf(self, pairs_triple):
        """A map failing P2 is not classified."""
        psi = with_interior(pairs_triple, {0: (0, 1), 1: (1, 0), 4: (1, 0)})
        with pytest.raises(InvalidOsfError):
            ResolutionEngine.classify_cycles(pairs_triple, psi)


class TestResolutionCycles:
    """Cycles that survive in N_psi, traced back to N(psi)."""

    def test_opposite_crossings_leave_two_cycles(self, loop_triple, loop_psi):
        """Both surviving cycles run through x0, p and s, one of them also through y0."""
        resolution = ResolutionEngine.binary_resolution(loop_triple, loop_psi)
        records = ResolutionEngine.classify_resolution_cycles(loop_triple, resolution)
        assert [r.cycle for r in records] == [
            ["0:0", "0:1~1", "0:1~2", "1:0~1", "1:0", "1:1~1", "1:1~2", "0:0~1"],
            ["0:0", "0:1~1", "1:1~1", "1:1~2", "0:0~1"],
        ]
        assert [r.image_cycles for r in records] == [[["0:0", "0:1", "1:0", "1:1"]], [["0:0", "0:1", "1:1"]]]
        assert [r.gene_arcs for r in records] == [[[8, 12], [1, 5]], [[0, 1], [1, 5]]]

    def test_images_classified_as_in_n_psi(self, loop_triple, loop_psi):
        """Each image cycle is a cycle of N(psi) with the same verdict, and the gene-arc check agrees."""
        resolution = ResolutionEngine.binary_resolution(loop_triple, loop_psi)
        records = ResolutionEngine.classify_resolution_cycles(loop_triple, resolution)
        in_n_psi = {tuple(r.cycle): r.incidental for r in ResolutionEngine.classify_cycles(loop_triple, loop_psi)}
        images = [tuple(c) for r in records for c in r.image_cycles]
        assert sorted(images) == sorted(in_n_psi)
        for r in records:
            assert r.incidental
            assert r.gene_path_incidental is r.incidental
            assert all(in_n_psi[tuple(c)] is r.incidental for c in r.image_cycles)

    def test_closed_walk_splits_at_repeats(self):
        """A figure-eight walk through one vertex gives two simple cycles."""
        assert _split_closed_walk(["a", "b", "a", "c"]) == [["a", "b"], ["a", "c"]]
        assert _split_closed_walk(["a", "b", "c"]) == [["a", "b", "c"]]
