"""Canonical forms of formal connections over k((t)) with checkable certificates."""

__version__ = "0.1.0"
