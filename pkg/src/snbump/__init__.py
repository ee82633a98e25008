"""Multi-bump solutions of the Schrödinger–Newton system at desk scale."""
from __future__ import annotations

__version__ = "0.1.0"
