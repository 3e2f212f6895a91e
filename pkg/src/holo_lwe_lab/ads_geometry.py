"""AdS3/CFT2 bookkeeping: central charge, RT geodesic length and entropy.

Lengths are in units where the AdS radius is typically 1. Entropies are
computed in nats and converted to bits only when asked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from . import Base
from .errors import DomainError


@dataclass(frozen=True)
class AdsGeometry:
    """Bulk data tied to a boundary of ``N_qubits`` degrees of freedom.

    ``kappa`` records the O(1) constant in G_N = kappa / N when the geometry
    was built from a qubit count; it is informational otherwise.
    """

    R: float
    G_N: float
    epsilon: float = 1e-3
    N_qubits: Optional[int] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        if not (self.R > 0 and self.G_N > 0 and self.epsilon > 0):
            raise DomainError(f"R, G_N, epsilon must be positive: {self}")
        if self.N_qubits is not None and self.N_qubits < 1:
            raise DomainError(f"N_qubits must be >= 1, got {self.N_qubits}")

    @property
    def central_charge(self) -> float:
        return brown_henneaux_central_charge(self)

    @property
    def planck_length(self) -> float:
        """Three-dimensional Planck length proxy, equal to G_N."""
        return self.G_N


def brown_henneaux_central_charge(geom: AdsGeometry) -> float:
    """c = 3 R / (2 G_N)."""
    return 3.0 * geom.R / (2.0 * geom.G_N)


def geometry_from_qubits(N: int, kappa: float = 1.0, epsilon: Optional[float] = None) -> AdsGeometry:
    """Unit-radius geometry with G_N = kappa / N, so c = 3N / (2 kappa)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if kappa <= 0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    R = 1.0
    return AdsGeometry(
        R=R,
        G_N=kappa / N,
        epsilon=1e-3 * R if epsilon is None else epsilon,
        N_qubits=N,
        kappa=kappa,
    )


def rt_geodesic_length(geom: AdsGeometry, ell: float) -> float:
    """Length 2 R ln(ell / epsilon) of the geodesic anchored on an interval."""
    if ell < geom.epsilon:
        raise DomainError(f"interval {ell} shorter than cutoff {geom.epsilon}")
    return 2.0 * geom.R * math.log(ell / geom.epsilon)


def rt_entropy(geom: AdsGeometry, L: float, base: Union[Base, str] = Base.NATS) -> float:
    """Entropy L / (4 G_N) carried by a geodesic of length L."""
    if L < 0:
        raise DomainError(f"length must be non-negative, got {L}")
    s = L / (4.0 * geom.G_N)
    return s / math.log(2) if Base(base) is Base.BITS else s


def entropy_gap_to_length_gap(geom: AdsGeometry, dS_bits: float) -> float:
    """Geodesic length change 4 G_N dS ln 2 that shifts the entropy by dS bits."""
    if dS_bits < 0:
        raise DomainError(f"entropy gap must be non-negative, got {dS_bits}")
    return 4.0 * geom.G_N * dS_bits * math.log(2)


def interval_for_length(geom: AdsGeometry, L: float) -> float:
    """Inverse of :func:`rt_geodesic_length`."""
    return geom.epsilon * math.exp(L / (2.0 * geom.R))
