import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from app.api.routes import router
from app.core.exceptions import CapExceededError, InputError, OsfForgeError
from app.infrastructure.config import get_settings
from app.infrastructure.logging import configure_logging

logger = logging.getLogger(__name__)

# Exception family -> HTTP status
STATUS_BY_FAMILY = (
    (InputError, 400),
    (CapExceededError, 413),
)


@asynccontextmanager
async def lifespan(app: FastAPI):
    settings = get_settings()
    configure_logging(settings.log_level)
    logger.info(f"[Startup] caps: oracle={settings.cap_oracle} unfold={settings.cap_unfold} search={settings.cap_search}")
    yield


app = FastAPI(
    title="osf-forge",
    description="Overlaid species forests, introgression networks and SPR stability checks",
    version="1.0.0",
    lifespan=lifespan,
)

app.include_router(router)


@app.exception_handler(OsfForgeError)
async def osf_forge_error_handler(request: Request, exc: OsfForgeError) -> JSONResponse:
    status = next((code for family, code in STATUS_BY_FAMILY if isinstance(exc, family)), 422)
    logger.warning(f"[API] {request.url.path} -> {status}: {exc.message}")
    return JSONResponse(
        status_code=status,
        content={"error": type(exc).__name__, "detail": exc.message, "exit_code": exc.exit_code},
    )


@app.get("/health")
async def health_check():
    return {"status": "healthy"}
