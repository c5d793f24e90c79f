"""
Runtime settings read from the environment (and an optional .env file).
"""
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from app.core.constants import (
    DEFAULT_CAP_CYCLES,
    DEFAULT_CAP_ORACLE,
    DEFAULT_CAP_RSPR,
    DEFAULT_CAP_SEARCH,
    DEFAULT_CAP_UNFOLD,
)

_TRUTHY = {"1", "true", "yes", "on"}


class Settings(BaseModel):
    ci_mode: bool = Field(default=False, description="Require an explicit --seed for randomized commands")
    cap_oracle: int = Field(default=DEFAULT_CAP_ORACLE, gt=0, description="Max extensions enumerated by the brute-force oracle")
    cap_unfold: int = Field(default=DEFAULT_CAP_UNFOLD, gt=0, description="Max admissible trails when unfolding a network")
    cap_cycles: int = Field(default=DEFAULT_CAP_CYCLES, gt=0, description="Max directed cycles enumerated")
    cap_search: int = Field(default=DEFAULT_CAP_SEARCH, gt=0, description="Max arcs for exhaustive validity search")
    cap_rspr: int = Field(default=DEFAULT_CAP_RSPR, gt=0, description="Max trees visited by the rSPR search")
    log_level: str = Field(default="INFO", description="Root log level")

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        return cls(
            ci_mode=os.getenv("OSF_FORGE_CI", "0").strip().lower() in _TRUTHY,
            cap_oracle=int(os.getenv("OSF_FORGE_CAP_ORACLE", str(DEFAULT_CAP_ORACLE))),
            cap_unfold=int(os.getenv("OSF_FORGE_CAP_UNFOLD", str(DEFAULT_CAP_UNFOLD))),
            cap_cycles=int(os.getenv("OSF_FORGE_CAP_CYCLES", str(DEFAULT_CAP_CYCLES))),
            cap_search=int(os.getenv("OSF_FORGE_CAP_SEARCH", str(DEFAULT_CAP_SEARCH))),
            cap_rspr=int(os.getenv("OSF_FORGE_CAP_RSPR", str(DEFAULT_CAP_RSPR))),
            log_level=os.getenv("OSF_FORGE_LOG_LEVEL", "INFO").upper(),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()
