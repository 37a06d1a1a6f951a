"""HTTP front end: pydantic schemas, handlers, FastAPI app factory."""

from .app import create_app

__all__ = ["create_app"]
