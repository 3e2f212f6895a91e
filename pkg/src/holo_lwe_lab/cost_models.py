"""Closed-form cost estimators for lattice and holographic attacks.

All estimators are deterministic. External constants (root-Hermite
asymptotics, sieve exponents, enumeration fit) are module-level defaults and
can be overridden per call.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

import numpy as np
from sympy import nextprime

from .errors import DomainError, InfeasibleParametersError
from .lwe_etcf import LweParams

LOG2E = math.log2(math.e)

# experimental root-Hermite factors for small block sizes; the last node is
# the asymptotic formula at beta = 50 so the two branches join continuously
_SMALL_BETA_TABLE = (
    (2, 1.02190),
    (5, 1.01862),
    (10, 1.01616),
    (15, 1.01485),
    (20, 1.01420),
    (25, 1.01342),
    (28, 1.01331),
    (40, 1.01295),
)
ASYMPTOTIC_FROM = 50

SIEVE_EXPONENTS = {"classical_sieve": 0.292, "quantum_sieve": 0.265}
ENUMERATION_FIT = (0.187, -1.019, 16.1)


class SieveModel(str, Enum):
    CLASSICAL_SIEVE = "classical_sieve"
    QUANTUM_SIEVE = "quantum_sieve"
    ENUMERATION = "enumeration"


@dataclass
class AttackCostRecord:
    label: str
    N: int
    log2_cost: float
    model_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log2_cost):
            raise DomainError(f"non-finite cost for {self.label} at N={self.N}")

    def to_dict(self) -> dict:
        return {"label": self.label, "N": self.N, "log2_cost": self.log2_cost, **self.model_params}


def _delta_asymptotic(beta: float) -> float:
    return (beta / (2 * math.pi * math.e) * (math.pi * beta) ** (1 / beta)) ** (1 / (2 * (beta - 1)))


_NODES = [b for b, _ in _SMALL_BETA_TABLE] + [ASYMPTOTIC_FROM]
_VALUES = [d for _, d in _SMALL_BETA_TABLE] + [_delta_asymptotic(ASYMPTOTIC_FROM)]


def bkz_root_hermite(beta: float) -> float:
    """Root-Hermite factor delta_beta reached by BKZ with block size ``beta``.

    Uses (beta/(2 pi e) (pi beta)^(1/beta))^(1/(2(beta-1))) for beta >= 50 and
    piecewise-linear interpolation of experimental values below.
    """
    if beta < 2:
        raise DomainError(f"block size must be >= 2, got {beta}")
    if beta >= ASYMPTOTIC_FROM:
        return _delta_asymptotic(beta)
    i = bisect.bisect_right(_NODES, beta) - 1
    b0, b1 = _NODES[i], _NODES[i + 1]
    t = (beta - b0) / (b1 - b0)
    return _VALUES[i] + t * (_VALUES[i + 1] - _VALUES[i])


def gsa_decoding_holds(beta: int, d: int, sigma: float, q: int, m_rows: int) -> bool:
    """sigma sqrt(beta) <= delta^(2 beta - d) q^(m/d), checked in log space."""
    lhs = math.log(sigma) + 0.5 * math.log(beta)
    rhs = (2 * beta - d) * math.log(bkz_root_hermite(beta)) + m_rows / d * math.log(q)
    return lhs <= rhs


def required_block_size(params: LweParams) -> int:
    """Smallest beta in [2, d] satisfying the decoding condition."""
    if params.sigma <= 0:
        raise DomainError("BKZ estimate needs sigma > 0")
    d = params.n + params.m_rows + 1
    for beta in range(2, d + 1):
        if gsa_decoding_holds(beta, d, params.sigma, params.q, params.m_rows):
            return beta
    raise InfeasibleParametersError(f"no block size <= {d} decodes n={params.n}, q={params.q}")


def svp_log2_cost(beta: int, d: int, sieve: SieveModel) -> float:
    sieve = SieveModel(sieve)
    if sieve is SieveModel.ENUMERATION:
        a, b, c = ENUMERATION_FIT
        return a * beta * math.log2(beta) + b * beta + c
    return SIEVE_EXPONENTS[sieve.value] * beta + math.log2(d)


def bkz_attack_estimate(
    params: LweParams, sieve: SieveModel = SieveModel.CLASSICAL_SIEVE, N: Optional[int] = None
) -> AttackCostRecord:
    """Primal-embedding BKZ cost for an LWE instance."""
    sieve = SieveModel(sieve)
    beta = required_block_size(params)
    d = params.n + params.m_rows + 1
    return AttackCostRecord(
        label=f"bkz_{sieve.value}",
        N=params.n if N is None else N,
        log2_cost=svp_log2_cost(beta, d, sieve),
        model_params={
            "beta": beta,
            "delta": bkz_root_hermite(beta),
            "d": d,
            "n": params.n,
            "m_rows": params.m_rows,
            "q": params.q,
            "sigma": params.sigma,
            "sieve": sieve.value,
        },
    )


def shadow_cost(K: int, eps: float, variance_bound: float) -> float:
    """Classical-shadow shot count max(ln K, 1) / eps^2 * Tr(rho O^2)."""
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return max(math.log(K), 1.0) / eps**2 * variance_bound


def qpe_cost(sparsity_exponent: float, eps: float, N: int, polylog_degree: float = 2.0) -> float:
    """Phase-estimation cost (N^s / eps) * (ln 2^(2N))^degree."""
    if eps <= 0 or N < 1:
        raise DomainError(f"need eps > 0 and N >= 1, got eps={eps}, N={N}")
    return N**sparsity_exponent / eps * (2 * N * math.log(2)) ** polylog_degree


@dataclass(frozen=True)
class BuildCost:
    """log2 of the number of covariance entries to measure for D = 2^N modes.

    The sparse count keeps the distinct entries with |i - j| < bandwidth of the
    symmetric 2D x 2D matrix, 2D w - w (w - 1) / 2, which equals the full count
    at w = 2D.
    """

    N: int
    log2_full: float
    log2_sparse: float
    bandwidth: int


def covariance_build_cost(N: int, bandwidth: int = 3) -> BuildCost:
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    D = 2**N
    if not 1 <= bandwidth <= 2 * D:
        raise DomainError(f"bandwidth must be in [1, 2D], got {bandwidth}")
    # log2((2D)(2D+1)/2) = N + log2(2D+1), exact in floating point for large N
    full = N + math.log2(2 * D + 1)
    w = bandwidth
    # log2(2D w - w(w-1)/2) = N + log2(2w - w(w-1)/(2D))
    sparse = N + math.log2(2 * w - w * (w - 1) / (2 * D))
    return BuildCost(N, full, sparse, bandwidth)


def holographic_log2_cost(N: int, alpha: float, poly_degree: float, bulk_exponent: float) -> float:
    if alpha < 1:
        raise DomainError(f"alpha must be >= 1, got {alpha}")
    return poly_degree * math.log2(N) + N ** (1 / alpha) * LOG2E + bulk_exponent * N


def holographic_cost(
    N: int, alpha: float = 2.0, poly_degree: float = 1.0, bulk_exponent: float = 1.0
) -> AttackCostRecord:
    """log2 of poly(N) e^(N^(1/alpha)) 2^(bulk_exponent N).

    ``model_params['log2_cost_leading_order']`` drops the 2^(bulk_exponent N)
    factor, i.e. the pipeline that stops at geodesic-length reconstruction.
    """
    full = holographic_log2_cost(N, alpha, poly_degree, bulk_exponent)
    return AttackCostRecord(
        label="holographic",
        N=N,
        log2_cost=full,
        model_params={
            "alpha": alpha,
            "poly_degree": poly_degree,
            "bulk_exponent": bulk_exponent,
            "log2_cost_leading_order": holographic_log2_cost(N, alpha, poly_degree, 0.0),
        },
    )


def default_lwe_family(N: int) -> LweParams:
    """LWE family indexed by N: n = m = N, q = next prime >= N^2, sigma = 3.2."""
    return LweParams(n=N, m_rows=N, q=int(nextprime(N * N - 1)), sigma=3.2, noiseless=False)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def linear_fit(x: Iterable[float], y: Iterable[float]) -> LinearFit:
    x, y = np.asarray(list(x), float), np.asarray(list(y), float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


@dataclass
class ComparisonTable:
    records: list
    fits: dict

    def rows(self) -> list[dict]:
        return [r.to_dict() for r in self.records]


def comparison_table(
    N_list: Iterable[int],
    lwe_family: Callable[[int], LweParams] = default_lwe_family,
    alpha: float = 2.0,
    poly_degree: float = 1.0,
    bulk_exponent: float = 1.0,
    sieve: SieveModel = SieveModel.CLASSICAL_SIEVE,
    bandwidth: int = 3,
) -> ComparisonTable:
    """BKZ, holographic and covariance-build costs per N with log2-cost fits."""
    Ns = sorted(set(int(n) for n in N_list))
    if not Ns:
        raise DomainError("N_list must be nonempty")
    records = []
    for N in Ns:
        records.append(bkz_attack_estimate(lwe_family(N), sieve, N=N))
        records.append(holographic_cost(N, alpha, poly_degree, bulk_exponent))
        b = covariance_build_cost(N, bandwidth)
        records.append(
            AttackCostRecord(
                "covariance_build",
                N,
                b.log2_full,
                {"log2_sparse": b.log2_sparse, "bandwidth": bandwidth},
            )
        )
    fits = {}
    if len(Ns) >= 2:
        for label in dict.fromkeys(r.label for r in records):
            pts = [(r.N, r.log2_cost) for r in records if r.label == label]
            fits[label] = linear_fit(*zip(*pts))
    return ComparisonTable(records, fits)
