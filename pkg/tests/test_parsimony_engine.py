import pytest

from app.core.exceptions import PreconditionError
from app.engines.parsimony_engine import FirstTieBreaker, ParsimonyEngine, SeededTieBreaker
from app.engines.verify_engine import VerifyEngine
from app.models.tree import SpeciesNode
from app.services.newick_io import load_triple, parse_tree


class TestFitchHartigan:
    """Sigma sets and parsimony scores of small characters."""

    def test_binary_intersection_else_union(self):
        """On binary trees sigma follows Fitch's rule."""
        tree = parse_tree("((a,b),(c,d));")
        f = {tree.leaf("a"): 0, tree.leaf("b"): 1, tree.leaf("c"): 1, tree.leaf("d"): 1}
        sigma = ParsimonyEngine.bottom_up(tree, f)
        assert sigma[1] == frozenset({0, 1})
        assert sigma[4] == frozenset({1})
        assert sigma[0] == frozenset({1})
        assert ParsimonyEngine.parsimony_score(tree, f) == 1

    def test_multifurcation_keeps_most_frequent_states(self):
        """At a polytomy sigma holds the states occurring most often among the children."""
        tree = parse_tree("(a,b,c,d,e);")
        f = dict(zip(tree.leaves, [0, 0, 1, 1, 2]))
        assert ParsimonyEngine.bottom_up(tree, f)[0] == frozenset({0, 1})
        assert ParsimonyEngine.parsimony_score(tree, f) == 3

    def test_constant_character_scores_zero(self):
        """A character with one state needs no changes."""
        tree = parse_tree("((a,b),(c,(d,e)));")
        assert ParsimonyEngine.parsimony_score(tree, {x: 3 for x in tree.leaves}) == 0

    def test_top_down_extension_attains_score(self, chain_triple):
        """The extension has exactly as many state changes as the score."""
        gene = chain_triple.gene
        f = ParsimonyEngine.character_of(chain_triple)
        sigma = ParsimonyEngine.bottom_up(gene, f)
        ext = ParsimonyEngine.top_down(gene, sigma)
        assert ParsimonyEngine.changes(gene, ext) == ParsimonyEngine.parsimony_score(gene, f) == 3
        assert [ext[v] for v in (0, 3, 6, 9)] == [0, 1, 0, 1]


class TestTieBreakers:
    """Tie-break policies of the top-down phase."""

    def test_first_takes_lowest(self):
        """The default policy picks the lowest tree index."""
        assert FirstTieBreaker().choose(0, [2, 1]) == 1

    def test_seeded_is_reproducible(self):
        """Equal seeds make equal choices."""
        one, two = SeededTieBreaker(7), SeededTieBreaker(7)
        first = [one.choose(v, [2, 0, 1]) for v in range(20)]
        again = [two.choose(v, [0, 1, 2]) for v in range(20)]
        assert first == again
        assert set(first) <= {0, 1, 2}

    def test_seeded_samples_distinct_optima(self):
        """With ties at the root, different seeds can reach different optimal OSFs of equal score."""
        triple = load_triple("((a,b),(c,d));", "(A,B);\n(C,D);\n", "a\tA\nb\tB\nc\tC\nd\tD\n")
        results = {ParsimonyEngine.build_osf(triple, SeededTieBreaker(s))[0] for s in range(32)}
        scores = {ParsimonyEngine.build_osf(triple, SeededTieBreaker(s)).contact_count for s in range(32)}
        assert results == {SpeciesNode(0, 0), SpeciesNode(1, 0)}
        assert scores == {1}


class TestBuildOsf:
    """The OSF builder on the hand-checked fixtures."""

    def test_chain_images(self, chain_triple):
        """The caterpillar alternates between the two tree roots."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        assert psi[0] == SpeciesNode(0, 0)
        assert psi[3] == SpeciesNode(1, 0)
        assert psi[6] == SpeciesNode(0, 0)
        assert psi[9] == SpeciesNode(1, 0)
        assert psi.contact_count == 3
        assert psi.contact_arcs == (
            (SpeciesNode(0, 0), SpeciesNode(1, 0)),
            (SpeciesNode(1, 0), SpeciesNode(0, 0)),
        )

    def test_builder_output_is_strict(self, chain_triple, crossed_triple):
        """Builder output satisfies P1-P3 and S3."""
        for triple in (chain_triple, crossed_triple):
            psi = ParsimonyEngine.build_osf(triple)
            assert VerifyEngine.is_strict(triple, psi)

    def test_crossed_score_matches_hand_built_osf(self, crossed_triple, crossed_psi):
        """The builder's first-index choice at the root differs from the hand-built OSF but ties its score."""
        built = ParsimonyEngine.build_osf(crossed_triple)
        assert built[0] == SpeciesNode(0, 0)
        assert built.contact_count == crossed_psi.contact_count == 4

    def test_single_tree_forest_has_no_contacts(self):
        """With one species tree psi never leaves it."""
        triple = load_triple("((x,y),z);", "((A,B),C);\n", "x\tA\ny\tC\nz\tB\n")
        psi = ParsimonyEngine.build_osf(triple)
        assert psi.contact_count == 0
        assert psi[0] == SpeciesNode(0, 0)
        assert psi[1] == SpeciesNode(0, 0)

    def test_placement_needs_a_leaf_of_the_tree(self, chain_triple):
        """An extension naming a tree with no leaf below the vertex is rejected."""
        ext = {v: 0 for v in chain_triple.gene.nodes}
        with pytest.raises(PreconditionError):
            ParsimonyEngine.place(chain_triple, ext)
