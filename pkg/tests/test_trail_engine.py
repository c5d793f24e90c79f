import pytest

from app.core.exceptions import InvalidOsfError, InvariantViolationError
from app.engines.network_engine import NetworkEngine
from app.engines.parsimony_engine import ParsimonyEngine
from app.engines.trail_engine import TrailEngine
from app.engines.verify_engine import VerifyEngine
from app.models.tree import SpeciesNode
from app.services.newick_io import load_triple

from tests.conftest import with_interior


class TestAugment:
    """Phase 1 pendant leaves."""

    def test_two_leaves_per_binary_image(self, chain_triple):
        """Each interior vertex maps onto a cherry root and gets two new leaves."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        augmented, images = TrailEngine.augment(chain_triple, psi)
        assert len(augmented.gene.leaves) == 8 + 4 * 2
        assert augmented.phi_by_label()["aug0"] == "A"
        assert augmented.phi_by_label()["aug0_2"] == "A"
        assert augmented.phi_by_label()["aug9"] == "C"
        assert images[augmented.gene.leaf("aug9")] == SpeciesNode(1, 1)

    def test_leaf_image_still_gets_two(self):
        """A vertex mapped onto a species leaf gets two new leaves."""
        triple = load_triple("((a1,a2),c1);", "(A,B);\n(C,D);\n", "a1\tA\na2\tA\nc1\tC\n")
        psi = ParsimonyEngine.build_osf(triple)
        assert psi[1] == SpeciesNode(0, 1)
        augmented, _ = TrailEngine.augment(triple, psi)
        assert len(augmented.gene.children(1)) == 4


class TestOffendingPaths:
    """Shortest gene paths whose walks repeat an arc."""

    def test_chain_offender(self, chain_triple):
        """The chain's first offender runs around the 2-cycle once and a half."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        assert TrailEngine.find_offending_path(chain_triple, psi) == [0, 3, 6, 9]
        assert not TrailEngine.all_paths_are_trails(chain_triple, psi)

    def test_contact_usage(self, chain_triple):
        """Two gene arcs map onto 0:0 -> 1:0 and one onto the reverse arc."""
        usage = TrailEngine.contact_usage(ParsimonyEngine.build_osf(chain_triple))
        assert usage == {("0:0", "1:0"): 2, ("1:0", "0:0"): 1}

    def test_rewire_rejects_non_offender(self, chain_triple):
        """A path that does not start and end on one contact arc cannot be rewired."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        with pytest.raises(InvariantViolationError):
            TrailEngine.rewire(chain_triple, psi, [0, 3, 4])


class TestTrailNormalize:
    """Both phases end to end."""

    def test_chain_needs_one_step(self, chain_triple):
        """One rewiring removes (6,9) and hangs its children under 3."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        normalized, psi2, steps = TrailEngine.trail_normalize_logged(chain_triple, psi)
        assert len(steps) == 1
        step = steps[0]
        assert step.removed_arc == [6, 9]
        assert step.attached_to == 3
        assert step.contact_arc == ["0:0", "1:0"]
        assert (step.usage_before, step.usage_after) == (2, 1)
        assert 9 not in normalized.gene
        assert len(normalized.gene) == 12 + 8 - 1

    def test_result_is_trail_normal(self, chain_triple):
        """Afterwards every gene path maps onto a trail and N(psi) is unchanged."""
        psi = ParsimonyEngine.build_osf(chain_triple)
        normalized, psi2 = TrailEngine.trail_normalize(chain_triple, psi)
        assert TrailEngine.all_paths_are_trails(normalized, psi2)
        assert VerifyEngine.is_osf(normalized, psi2)
        for walk in TrailEngine.root_leaf_walks(normalized, psi2).values():
            assert NetworkEngine.is_trail(walk)
        before = NetworkEngine.build_network(chain_triple, psi).network
        after = NetworkEngine.build_network(normalized, psi2).network
        assert NetworkEngine.networks_isomorphic(before, after, respect_partition=True)

    def test_non_strict_needs_no_rewiring(self, pairs_triple, non_strict_psi):
        """The non-strict fixture already maps every path onto a trail."""
        normalized, _, steps = TrailEngine.trail_normalize_logged(pairs_triple, non_strict_psi)
        assert steps == []
        assert len(normalized.gene.leaves) == 4 + 3 * 2

    def test_rejects_non_osf(self, pairs_triple):
        """Normalization needs P1-P3."""
        psi = with_interior(pairs_triple, {0: (0, 1), 1: (1, 0), 4: (1, 0)})
        with pytest.raises(InvalidOsfError):
            TrailEngine.trail_normalize_logged(pairs_triple, psi)
