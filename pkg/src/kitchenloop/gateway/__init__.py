"""Episode-control service: sessions, event streaming, live commands."""

from .app import create_app
from .service import CatalogEntry, GatewayError, Session, SessionManager, scenario_catalog

__all__ = [
    "CatalogEntry",
    "GatewayError",
    "Session",
    "SessionManager",
    "create_app",
    "scenario_catalog",
]
