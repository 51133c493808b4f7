"""Permutation-compatible graph functions and the GNNs that compute them."""

from __future__ import annotations

__version__ = "0.1.0"

from .graph import Graph, Multiset, Permutation, apply_iwfp  # noqa: E402

__all__ = ["Graph", "Multiset", "Permutation", "apply_iwfp", "__version__"]
