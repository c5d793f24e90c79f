import pytest

from app.core.exceptions import CapExceededError, InvalidIntrogressionSetError, InvalidOsfError, NotStrictError
from app.engines.parsimony_engine import ParsimonyEngine
from app.engines.verify_engine import VerifyEngine
from app.models.osf import OsfMap
from app.services.newick_io import load_triple

from tests.conftest import with_interior

CHAIN_I = ((0, 3), (3, 6), (6, 9))


class TestOsfAxioms:
    """P1-P3 and S3 with their witnesses."""

    def test_builder_output_passes_everything(self, chain_triple):
        """A builder OSF passes every axiom, S3 included."""
        report = VerifyEngine.check_all(chain_triple, ParsimonyEngine.build_osf(chain_triple), strict=True)
        assert report.passed
        assert [v.axiom for v in report.verdicts] == ["P1", "P2", "P3", "S3"]

    def test_non_strict_fails_only_s3(self, pairs_triple, non_strict_psi):
        """The root's children both map into the other tree, so only S3 fails, at the root."""
        assert VerifyEngine.is_osf(pairs_triple, non_strict_psi)
        report = VerifyEngine.check_all(pairs_triple, non_strict_psi, strict=True)
        assert not report.passed
        assert report.verdict("S3").witnesses == ["0"]
        assert all(report.verdict(a).passed for a in ("P1", "P2", "P3"))

    def test_leaf_moved_off_phi_fails_p1(self, chain_triple):
        """A gene leaf mapped anywhere but phi(x) is a P1 witness, by label."""
        psi = ParsimonyEngine.build_osf(chain_triple).psi
        psi[chain_triple.gene.leaf("a1")] = chain_triple.forest.locate("B")
        report = VerifyEngine.check_osf(chain_triple, OsfMap(chain_triple.gene, psi))
        assert report.verdict("P1").witnesses == ["a1"]

    def test_image_below_sibling_fails_p2(self, pairs_triple):
        """Mapping the root onto leaf A puts it out of order with b1 in the same tree."""
        psi = with_interior(pairs_triple, {0: (0, 1), 1: (1, 0), 4: (1, 0)})
        report = VerifyEngine.check_osf(pairs_triple, psi)
        assert report.verdict("P2").witnesses == ["(0,5)"]
        assert report.verdict("P3").passed

    def test_image_outside_forest(self, chain_triple):
        """psi must land on vertices of F."""
        psi = ParsimonyEngine.build_osf(chain_triple).psi
        psi[0] = (5, 0)
        with pytest.raises(InvalidOsfError):
            VerifyEngine.check_osf(chain_triple, OsfMap(chain_triple.gene, psi))


class TestIntrogressionSets:
    """The three introgression-set conditions and the OSF they induce."""

    def test_chain_set_is_valid(self, chain_triple):
        """The crossing arcs of the builder OSF form an introgression set."""
        assert VerifyEngine.is_introgression_set(chain_triple, CHAIN_I).valid
        psi = ParsimonyEngine.build_osf(chain_triple)
        assert VerifyEngine.introgression_set_of(chain_triple, psi).arcs == CHAIN_I

    def test_condition_i(self, pairs_triple):
        """Cutting every arc out of a vertex breaks condition (i)."""
        verdict = VerifyEngine.is_introgression_set(pairs_triple, [(0, 1), (0, 4)])
        assert (verdict.valid, verdict.condition, verdict.witnesses) == (False, "i", ["0"])

    def test_condition_ii(self, chain_triple):
        """Without cuts the single component spans two trees."""
        verdict = VerifyEngine.is_introgression_set(chain_triple, [])
        assert (verdict.condition, verdict.witnesses) == ("ii", ["0"])

    def test_condition_iii(self):
        """A cut between two components of the same tree breaks condition (iii)."""
        triple = load_triple("((a1,b1),a2);", "(A,B);\n(C,D);\n", "a1\tA\nb1\tB\na2\tA\n")
        verdict = VerifyEngine.is_introgression_set(triple, [(0, 1)])
        assert (verdict.condition, verdict.witnesses) == ("iii", ["(0,1)"])

    def test_arc_outside_gene_tree(self, chain_triple):
        """Arcs must belong to G."""
        with pytest.raises(InvalidIntrogressionSetError):
            VerifyEngine.is_introgression_set(chain_triple, [(0, 9)])

    def test_induced_osf_matches_builder(self, chain_triple):
        """psi_I of the chain set is the builder OSF."""
        psi = VerifyEngine.osf_from_introgression_set(chain_triple, CHAIN_I)
        assert psi == ParsimonyEngine.build_osf(chain_triple)
        assert set(psi.crossing_arcs) == set(CHAIN_I)

    def test_invalid_set_cannot_induce_an_osf(self, chain_triple):
        """An arc set failing a condition is reported with that condition."""
        with pytest.raises(InvalidIntrogressionSetError) as exc:
            VerifyEngine.osf_from_introgression_set(chain_triple, [])
        assert exc.value.condition == "ii"

    def test_non_strict_osf_has_no_introgression_set(self, pairs_triple, non_strict_psi):
        """Reading I off psi needs a strict OSF."""
        with pytest.raises(NotStrictError):
            VerifyEngine.introgression_set_of(pairs_triple, non_strict_psi)


class TestOracles:
    """Exhaustive cross-checks of the builder."""

    def test_brute_force_matches_builder(self, chain_triple, pairs_triple, crossed_triple):
        """t(F) by enumeration equals the builder score."""
        assert VerifyEngine.brute_force_t(chain_triple) == 3
        assert VerifyEngine.brute_force_t(pairs_triple) == 2
        assert VerifyEngine.brute_force_t(crossed_triple) == 4

    def test_brute_force_cap(self, chain_triple):
        """2 trees and 4 interior vertices make 16 extensions."""
        with pytest.raises(CapExceededError) as exc:
            VerifyEngine.brute_force_t(chain_triple, cap=10)
        assert exc.value.needed == 16
        assert exc.value.exit_code == 3

    def test_strict_and_plain_minimum_agree(self, pairs_triple):
        """Minimum |C| over all OSFs equals the minimum over strict OSFs and t(F)."""
        assert VerifyEngine.exhaustive_minimum(pairs_triple) == (2, 2)

    def test_enumeration_includes_non_strict(self, pairs_triple, non_strict_psi):
        """The non-strict fixture is an OSF but not a strict one."""
        plain = set(VerifyEngine.enumerate_osfs(pairs_triple))
        strict = set(VerifyEngine.enumerate_osfs(pairs_triple, strict=True))
        assert non_strict_psi in plain
        assert non_strict_psi not in strict
        assert strict < plain
