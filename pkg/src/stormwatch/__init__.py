"""Weakly supervised event recognition for short-message disaster streams."""

__version__ = "0.1.0"

from .ontology import EVENT_CATEGORIES, EventCategory  # noqa: F401
