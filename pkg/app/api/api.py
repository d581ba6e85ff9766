"""
API router configuration
"""
from fastapi import APIRouter

from app.api.endpoints import health, sessions

# Create main API router
api_router = APIRouter()

# Include endpoint routers
api_router.include_router(health.router, tags=["health"])
api_router.include_router(
    sessions.router,
    prefix="/api/v1",
    tags=["sessions"]
)
