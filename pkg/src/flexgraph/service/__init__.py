"""Composition and operational surface: profiles, sessions, HTTP, CLI."""

from .profile import Profile, load_profile
from .session import GraphSession, encode_value

__all__ = ["Profile", "load_profile", "GraphSession", "encode_value"]
