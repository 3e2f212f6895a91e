"""Desk-scale numerical laboratory linking LWE entropy-gap states, holographic
geodesic measurement costs, Gaussian bulk entropies and lattice attack costs."""

__version__ = "0.1.0"

from enum import Enum


class Base(str, Enum):
    """Logarithm base for entropies."""

    BITS = "bits"
    NATS = "nats"


__all__ = ["Base", "__version__"]
