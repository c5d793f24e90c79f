import pytest
from pydantic import ValidationError

from app.core.constants import DEFAULT_CAP_SEARCH
from app.infrastructure.config import Settings, get_settings
from app.schemas.config_schema import REQUIRED_INPUTS, RunConfig


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


class TestSettings:
    """Environment-driven settings."""

    def test_env_overrides(self, monkeypatch):
        """Every OSF_FORGE_* variable lands on its field."""
        monkeypatch.setenv("OSF_FORGE_CI", "yes")
        monkeypatch.setenv("OSF_FORGE_CAP_ORACLE", "64")
        monkeypatch.setenv("OSF_FORGE_CAP_UNFOLD", "100")
        monkeypatch.setenv("OSF_FORGE_CAP_CYCLES", "5")
        monkeypatch.setenv("OSF_FORGE_CAP_SEARCH", "4")
        monkeypatch.setenv("OSF_FORGE_CAP_RSPR", "900")
        monkeypatch.setenv("OSF_FORGE_LOG_LEVEL", "debug")
        settings = Settings.from_env()
        assert settings.ci_mode
        assert (settings.cap_oracle, settings.cap_unfold, settings.cap_cycles) == (64, 100, 5)
        assert (settings.cap_search, settings.cap_rspr) == (4, 900)
        assert settings.log_level == "DEBUG"

    @pytest.mark.parametrize("value, expected", [("1", True), ("TRUE", True), ("on", True), ("0", False), ("no", False)])
    def test_ci_flag_spellings(self, monkeypatch, value, expected):
        """CI mode accepts the usual truthy spellings."""
        monkeypatch.setenv("OSF_FORGE_CI", value)
        assert Settings.from_env().ci_mode is expected

    def test_caps_must_be_positive(self, monkeypatch):
        """A zero cap is rejected."""
        monkeypatch.setenv("OSF_FORGE_CAP_SEARCH", "0")
        with pytest.raises(ValidationError):
            Settings.from_env()

    def test_cached(self, monkeypatch):
        """get_settings reads the environment once."""
        monkeypatch.setenv("OSF_FORGE_CAP_SEARCH", "7")
        first = get_settings()
        monkeypatch.setenv("OSF_FORGE_CAP_SEARCH", "9")
        assert get_settings() is first
        assert first.cap_search == 7


class TestRunConfig:
    """Validation of one CLI invocation."""

    def test_required_inputs(self):
        """Missing inputs are listed as flags."""
        with pytest.raises(ValidationError, match="build requires --gene, --forest, --map"):
            RunConfig(subcommand="build")

    def test_verify_needs_osf(self):
        """verify also needs the OSF map."""
        with pytest.raises(ValidationError, match="verify requires --osf"):
            RunConfig(subcommand="verify", gene="g", forest="f", map="m")

    def test_validate_needs_rho_or_search(self):
        """A network alone is not enough to validate."""
        with pytest.raises(ValidationError, match="validate requires --rho or --search"):
            RunConfig(subcommand="validate", network="n.json")
        assert RunConfig(subcommand="validate", network="n.json", search=True).search

    def test_unknown_subcommand(self):
        """Only known subcommands validate."""
        with pytest.raises(ValidationError, match="unknown subcommand"):
            RunConfig(subcommand="draw")

    def test_defaults(self):
        """Generators need no inputs and take the default caps."""
        config = RunConfig(subcommand="gen")
        assert config.tie == "first"
        assert config.cap_search == DEFAULT_CAP_SEARCH
        assert REQUIRED_INPUTS["gen"] == ()

    def test_bad_choices(self):
        """Tie policy, format and perturbation kind are closed sets."""
        with pytest.raises(ValidationError):
            RunConfig(subcommand="gen", tie="random")
        with pytest.raises(ValidationError):
            RunConfig(subcommand="gen", format="png")
        with pytest.raises(ValidationError):
            RunConfig(subcommand="gen", kind="species")
