import random

import pytest

from app.engines.verify_engine import VerifyEngine
from app.models.osf import OsfMap
from app.models.tree import SpeciesNode
from app.models.triple import ForestTriple
from app.services.newick_io import load_triple

# Gene tree whose lineage alternates T0, T1, T0, T1 down a caterpillar
CHAIN_GENE = "(a1,b1,(c1,d1,(a2,b2,(c2,d2))));"
CHAIN_FOREST = "(A,B);\n(C,D);\n"
CHAIN_MAP = "".join(f"{g}\t{g[0].upper()}\n" for g in ("a1", "b1", "c1", "d1", "a2", "b2", "c2", "d2"))

PAIRS_GENE = "((a1,c1),(b1,d1));"
PAIRS_FOREST = "(A,B);\n(C,D);\n"
PAIRS_MAP = "a1\tA\nc1\tC\nb1\tB\nd1\tD\n"

CROSSED_GENE = "(e,f,(a1,(b1,d1)),(d2,(a2,c1)));"
CROSSED_FOREST = "(A,C);\n(B,D);\n(E,F);\n"
CROSSED_MAP = "e\tE\nf\tF\na1\tA\nb1\tB\nd1\tD\nd2\tD\na2\tA\nc1\tC\n"

# Two lineages cross between T0 and T1 in opposite directions, so N_psi keeps two cycles
LOOP_GENE = "(((b1,b2),(a1,a3)),((a4,a2),(b4,b3)));"
LOOP_FOREST = "((A1,A2),A3);\n((B1,B2),B3);\n"
LOOP_MAP = "b1\tB1\nb2\tB2\na1\tA1\na3\tA3\na4\tA1\na2\tA2\nb4\tB1\nb3\tB3\n"


def with_interior(triple: ForestTriple, interior: dict) -> OsfMap:
    """OsfMap that agrees with phi on the leaves and takes the given interior images."""
    images = {x: triple.image(x) for x in triple.gene.leaves}
    images.update({v: SpeciesNode(*sn) for v, sn in interior.items()})
    return OsfMap(triple.gene, images)


@pytest.fixture
def chain_triple() -> ForestTriple:
    """Ids in preorder: 0 root, 3, 6 and 9 are the interior caterpillar vertices."""
    return load_triple(CHAIN_GENE, CHAIN_FOREST, CHAIN_MAP)


@pytest.fixture
def pairs_triple() -> ForestTriple:
    """Ids: 0 root, 1 = (a1,c1), 4 = (b1,d1)."""
    return load_triple(PAIRS_GENE, PAIRS_FOREST, PAIRS_MAP)


@pytest.fixture
def non_strict_psi(pairs_triple) -> OsfMap:
    """An OSF whose root image has no child image below it, so S3 fails at the root only."""
    return with_interior(pairs_triple, {0: (0, 0), 1: (1, 0), 4: (1, 0)})


@pytest.fixture
def crossed_triple() -> ForestTriple:
    """Ids: 0 root, 3 = (a1,(b1,d1)), 5 = (b1,d1), 8 = (d2,(a2,c1)), 10 = (a2,c1)."""
    return load_triple(CROSSED_GENE, CROSSED_FOREST, CROSSED_MAP)


@pytest.fixture
def crossed_psi(crossed_triple) -> OsfMap:
    """Strict OSF whose network has a 2-cycle between the roots of T0 and T1 that no gene path follows."""
    return with_interior(crossed_triple, {0: (2, 0), 3: (0, 0), 5: (1, 0), 8: (1, 0), 10: (0, 0)})


@pytest.fixture
def loop_triple() -> ForestTriple:
    """Ids: 0 root, 1 = ((b1,b2),(a1,a3)), 5 = (a1,a3), 8 = ((a4,a2),(b4,b3)), 12 = (b4,b3)."""
    return load_triple(LOOP_GENE, LOOP_FOREST, LOOP_MAP)


@pytest.fixture
def loop_psi(loop_triple) -> OsfMap:
    """Strict OSF of the introgression set {(0,1), (1,5), (8,12)}."""
    return VerifyEngine.osf_from_introgression_set(loop_triple, [(0, 1), (1, 5), (8, 12)])


@pytest.fixture
def triple_files(tmp_path):
    """Writes the chain triple to disk and returns (gene, forest, map) paths as strings."""
    paths = []
    for name, text in (("gene.nwk", CHAIN_GENE), ("forest.nwk", CHAIN_FOREST), ("map.tsv", CHAIN_MAP)):
        p = tmp_path / name
        p.write_text(text)
        paths.append(str(p))
    return tuple(paths)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240607)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size randomized runs (deselect with -m 'not slow')")
