"""
FastAPI application entry point
"""
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from loguru import logger

from app.api.api import api_router
from app.config import settings
from app.core.exceptions import QscdcError
from app.core.logging import setup_logging
from app.models.schemas import ErrorResponse


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager"""
    setup_logging()
    logger.info("Starting QSCDC simulator API...")

    yield

    logger.info("Shutting down QSCDC simulator API...")


# Create FastAPI application
app = FastAPI(
    title=settings.app_name,
    version=settings.app_version,
    description="Controlled quantum direct communication simulator",
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan
)

# Add CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include API routes
app.include_router(api_router)


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "QSCDC Simulator API",
        "version": settings.app_version,
        "docs": "/docs",
        "health": "/health"
    }


def error_response(body: ErrorResponse) -> JSONResponse:
    """Serialize an ErrorResponse with its own status code"""
    return JSONResponse(status_code=body.status_code, content=body.model_dump(mode="json", exclude_none=True))


@app.exception_handler(QscdcError)
async def simulator_exception_handler(request, exc):
    """Refused configurations and impossible replays"""
    logger.warning(f"Request refused: {exc}")
    return error_response(ErrorResponse(
        error=type(exc).__name__,
        status_code=422,
        detail=str(exc),
        violations=getattr(exc, "violations", None),
    ))


@app.exception_handler(HTTPException)
async def http_exception_handler(request, exc):
    """Global HTTP exception handler"""
    return error_response(ErrorResponse(error=str(exc.detail), status_code=exc.status_code))


@app.exception_handler(Exception)
async def general_exception_handler(request, exc):
    """Global exception handler"""
    logger.error(f"Unhandled exception: {exc}")
    return error_response(ErrorResponse(
        error="Internal server error",
        status_code=500,
        detail=str(exc) if settings.debug else "Something went wrong",
    ))
