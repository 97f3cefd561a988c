"""Deductive verifier for a small ownership-based imperative language,
built on a dynamic logic with state updates."""

__version__ = "0.1.0"
