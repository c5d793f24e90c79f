import pytest
from fastapi.testclient import TestClient

from app.infrastructure.config import get_settings
from app.main import app

from tests.conftest import CHAIN_FOREST, CHAIN_GENE, CHAIN_MAP

CHAIN = {"gene": CHAIN_GENE, "forest": CHAIN_FOREST, "leaf_map": CHAIN_MAP}


@pytest.fixture
def client():
    get_settings.cache_clear()
    with TestClient(app) as c:
        yield c
    get_settings.cache_clear()


@pytest.fixture
def built(client) -> dict:
    response = client.post("/api/build", json=CHAIN)
    assert response.status_code == 200
    return response.json()


class TestHealth:
    def test_health(self, client):
        """Liveness probe."""
        assert client.get("/health").json() == {"status": "healthy"}


class TestBuildEndpoint:
    """POST /api/build"""

    def test_chain(self, built):
        """Scores, introgression rows and the partitioned network come back together."""
        assert (built["t"], built["contact_arcs"]) == (3, 2)
        assert built["introgression_set"].splitlines()[1:] == ["0\t3", "3\t6", "6\t9"]
        assert built["network"]["contact_arcs"] == [["0:0", "1:0"], ["1:0", "0:0"]]

    def test_seeded_needs_seed(self, client):
        """A seeded tie breaker without a seed fails request validation."""
        response = client.post("/api/build", json={**CHAIN, "tie": "seeded"})
        assert response.status_code == 422

    def test_parse_error_is_400(self, client):
        """Unreadable Newick answers 400 with the exit code the CLI would use."""
        response = client.post("/api/build", json={**CHAIN, "gene": "((a1,b1);"})
        assert response.status_code == 400
        body = response.json()
        assert body["error"] == "NewickParseError"
        assert body["exit_code"] == 1

    def test_incomplete_leaf_map_is_400(self, client):
        """A gene leaf without a leaf map row is an input error."""
        response = client.post("/api/build", json={**CHAIN, "leaf_map": "a1\tA\n"})
        assert response.status_code == 400
        assert response.json()["error"] == "LeafMapError"


class TestVerifyEndpoint:
    """POST /api/verify"""

    def test_builder_output_is_strict(self, client, built):
        """The builder's psi passes every axiom, S3 included."""
        response = client.post("/api/verify", json={**CHAIN, "osf": built["osf"], "strict": True})
        assert response.status_code == 200
        assert all(v["passed"] for v in response.json()["verdicts"])

    def test_bad_osf_rows(self, client):
        """A malformed OSF map is a 400."""
        response = client.post("/api/verify", json={**CHAIN, "osf": "0\t0\n"})
        assert response.status_code == 400
        assert response.json()["error"] == "OsfMapFormatError"


class TestOracleEndpoint:
    """POST /api/oracle"""

    def test_agrees_with_build(self, client):
        """Exhaustive t matches the builder."""
        assert client.post("/api/oracle", json=CHAIN).json() == {"t": 3}

    def test_cap_is_413(self, client):
        """Sixteen extensions over a cap of ten."""
        response = client.post("/api/oracle", json={**CHAIN, "cap": 10})
        assert response.status_code == 413
        assert response.json()["exit_code"] == 3


class TestValidateEndpoint:
    """POST /api/validate"""

    def test_witness(self, client, built):
        """The contact arcs at the root of T0 are a witness."""
        network = built["network"]
        response = client.post("/api/validate", json={
            "network": network, "rho": "0:0", "arcs": network["contact_arcs"],
        })
        report = response.json()
        assert response.status_code == 200
        assert report["valid"]
        assert report["witness"]["rho"] == "0:0"

    def test_arcs_default_to_contact_arcs(self, client, built):
        """Without arcs a partitioned network is checked against its own contact arcs, as on the command line."""
        network = built["network"]
        response = client.post("/api/validate", json={"network": network, "rho": "0:0"})
        report = response.json()
        assert response.status_code == 200
        assert report["valid"]
        assert report["witness"]["arcs"] == network["contact_arcs"]

    def test_search(self, client, built):
        """Search mode finds a witness on its own."""
        response = client.post("/api/validate", json={"network": built["network"], "search": True})
        assert response.json()["valid"]

    def test_invalid_is_reported_not_raised(self, client, built):
        """An invalid witness is a 200 with failing verdicts."""
        response = client.post("/api/validate", json={"network": built["network"], "rho": "0:0", "arcs": []})
        assert response.status_code == 200
        report = response.json()
        assert not report["valid"]
        assert report["verdicts"][0]["axiom"] == "V1"

    def test_one_mode_only(self, client, built):
        """rho and search together fail request validation."""
        response = client.post("/api/validate", json={"network": built["network"], "rho": "0:0", "search": True})
        assert response.status_code == 422
