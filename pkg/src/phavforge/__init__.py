"""Seeded procedural-recipe engine for synthetic human action videos."""

__version__ = "0.1.0"
