"""Shot-noise limited measurement of geodesic lengths with a heavy probe.

The boundary observable is the two-point function G(L) = exp(-m L). A run
of M independent shots returns the sample mean, modeled as

    G_hat = G(L) + sigma / sqrt(M) * Z,   Z ~ N(0, 1).

Two geodesic lengths L and L + dL are told apart by thresholding G_hat at
the midpoint of G(L) and G(L + dL).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.stats import norm

from .ads_geometry import AdsGeometry, entropy_gap_to_length_gap, geometry_from_qubits
from .cost_models import shadow_cost
from .errors import DomainError, LabError

SHOT_CAP = 10**9
RESOLUTION = 1.1


class Hypothesis(str, Enum):
    INJECTIVE = "injective"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class ProbeConfig:
    """Probe and detector settings.

    Attributes:
        m: probe mass in inverse AdS units.
        sigma_shot: per-shot standard deviation of the observable.
        N_qubits: boundary size; needed for the backreaction check.
        kappa: constant in G_N = kappa / N.
        z: detection threshold in standard deviations used by the predictor.
        alpha_exp: exponent parameter alpha >= 1 of the e^(N^(1/alpha)) law.
        wkb_threshold: m L at or above which the WKB form is trusted.
        backreaction_threshold: m G_N at or above which a run is invalid.
    """

    m: float
    sigma_shot: float = 1.0
    N_qubits: Optional[int] = None
    kappa: float = 1.0
    z: float = 2.0
    alpha_exp: float = 2.0
    wkb_threshold: float = 3.0
    backreaction_threshold: float = 0.1

    def __post_init__(self):
        if self.m <= 0 or self.sigma_shot <= 0 or self.z <= 0:
            raise DomainError(f"m, sigma_shot, z must be positive: {self}")
        if self.alpha_exp < 1:
            raise DomainError(f"alpha_exp must be >= 1, got {self.alpha_exp}")

    @property
    def backreaction_ratio(self) -> Optional[float]:
        if self.N_qubits is None:
            return None
        return self.m * self.kappa / self.N_qubits

    @property
    def regime_valid(self) -> bool:
        r = self.backreaction_ratio
        return r is None or r < self.backreaction_threshold


@dataclass(frozen=True)
class Estimate:
    G_hat: float
    L_hat: Optional[float]


@dataclass(frozen=True)
class SampleComplexity:
    M_exact: int
    M_bare: float
    delta_G: float


@dataclass(frozen=True)
class DistinguisherOutcome:
    decision: Hypothesis
    success_estimate: float
    shots_used: int
    regime_valid: bool
    repetitions: int
    delta_L: float
    backreaction_ratio: float


class ShotCapExceeded(LabError):
    """No shot count up to the cap reaches the target error."""

    def __init__(self, cap: int, error_at_cap: float):
        super().__init__(f"target error not reached with {cap} shots (error {error_at_cap:.3f})")
        self.cap = cap
        self.error_at_cap = error_at_cap


def two_point_expectation(m: float, L: float) -> float:
    """WKB two-point function exp(-m L)."""
    if m <= 0 or L < 0:
        raise DomainError(f"need m > 0 and L >= 0, got m={m}, L={L}")
    return math.exp(-m * L)


def wkb_valid(m: float, L: float, threshold: float = 3.0) -> bool:
    return m * L >= threshold


def signal_gap(m: float, L: float, dL: float) -> float:
    """G(L) - G(L + dL) = exp(-m L) (1 - exp(-m dL))."""
    return math.exp(-m * L) * -math.expm1(-m * dL)


def log_signal_gap(m: float, L: float, dL: float) -> float:
    return -m * L + math.log(-math.expm1(-m * dL))


def z_for_error(target_error: float) -> float:
    """Threshold z whose predictor M = 2 z^2 sigma^2 / dG^2 gives per-hypothesis
    error ``target_error`` for the midpoint test."""
    if not 0 < target_error < 0.5:
        raise DomainError(f"target error must lie in (0, 0.5), got {target_error}")
    return math.sqrt(2) * float(norm.isf(target_error))


def simulate_estimate(cfg: ProbeConfig, L_true: float, M: int, rng: np.random.Generator) -> Estimate:
    """One M-shot sample mean and the length it implies (None if G_hat <= 0)."""
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    G_hat = two_point_expectation(cfg.m, L_true) + cfg.sigma_shot / math.sqrt(M) * rng.standard_normal()
    L_hat = -math.log(G_hat) / cfg.m if G_hat > 0 else None
    return Estimate(float(G_hat), L_hat)


def predicted_sample_complexity(cfg: ProbeConfig, L: float, dL: float) -> SampleComplexity:
    """Two-hypothesis Gaussian-test shot count next to the bare exp(2 m dL) bound."""
    if dL <= 0:
        raise DomainError(f"dL must be positive, got {dL}")
    dG = signal_gap(cfg.m, L, dL)
    M_exact = math.ceil(2 * cfg.z**2 * cfg.sigma_shot**2 / dG**2)
    return SampleComplexity(M_exact=max(M_exact, 1), M_bare=math.exp(2 * cfg.m * dL), delta_G=dG)


def log_predicted_shots(cfg: ProbeConfig, L: float, dL: float) -> float:
    """ln of the unrounded M_exact, safe for astronomically large counts."""
    return math.log(2 * cfg.z**2 * cfg.sigma_shot**2) - 2 * log_signal_gap(cfg.m, L, dL)


def _midpoint_error_rates(cfg, L, dL, M, z_long, z_short):
    g_long = two_point_expectation(cfg.m, L + dL)
    g_short = two_point_expectation(cfg.m, L)
    mid = (g_long + g_short) / 2
    scale = cfg.sigma_shot / math.sqrt(M)
    err_long = np.mean(g_long + scale * z_long >= mid)
    err_short = np.mean(g_short + scale * z_short < mid)
    return float(err_long), float(err_short)


def empirical_min_shots(
    cfg: ProbeConfig,
    L: float,
    dL: float,
    target_error: float,
    trials: int,
    rng: np.random.Generator,
    cap: int = SHOT_CAP,
) -> int:
    """Smallest M (to a factor 1.1) whose midpoint test errs at most
    ``target_error`` of the time under each hypothesis.

    The same standard-normal draws are reused for every M, which makes the
    error frequency monotone in M and the bisection well defined.

    Raises:
        ShotCapExceeded: even ``cap`` shots miss the target.
    """
    if not 0 < target_error < 0.5:
        raise DomainError(f"target error must lie in (0, 0.5), got {target_error}")
    if trials < 200:
        raise DomainError(f"need at least 200 trials per hypothesis, got {trials}")
    z_long = rng.standard_normal(trials)
    z_short = rng.standard_normal(trials)

    def ok(M):
        return max(_midpoint_error_rates(cfg, L, dL, M, z_long, z_short)) <= target_error

    hi = 1
    while not ok(hi):
        if hi >= cap:
            raise ShotCapExceeded(cap, max(_midpoint_error_rates(cfg, L, dL, cap, z_long, z_short)))
        hi = min(hi * 2, cap)
    if hi == 1:
        return 1
    lo = hi // 2
    while hi / lo > RESOLUTION and hi - lo > 1:
        mid = int(round(math.sqrt(lo * hi)))
        mid = min(max(mid, lo + 1), hi - 1)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def holographic_distinguisher(
    geom: AdsGeometry,
    cfg: ProbeConfig,
    truth: Union[Hypothesis, str],
    dS_bits: float,
    budget_M: int,
    rng: np.random.Generator,
    L0: float = 1.0,
    repetitions: int = 500,
) -> DistinguisherOutcome:
    """Repeat the threshold protocol and estimate its success probability.

    The geodesic has length ``L0`` for the injective (higher-entropy) state
    and ``L0 - dL`` for the degenerate one, with dL the length gap for
    ``dS_bits``. A sample mean above the midpoint is read as the shorter
    geodesic, i.e. the degenerate function.
    """
    truth = Hypothesis(truth)
    if budget_M < 1:
        raise DomainError(f"budget must be >= 1, got {budget_M}")
    if repetitions < 100:
        raise DomainError(f"need at least 100 repetitions, got {repetitions}")
    dL = entropy_gap_to_length_gap(geom, dS_bits)
    if dL > L0:
        raise DomainError(f"length gap {dL} exceeds geodesic length {L0}")
    g_inj = two_point_expectation(cfg.m, L0)
    g_deg = two_point_expectation(cfg.m, L0 - dL)
    mid = (g_inj + g_deg) / 2
    g_true = g_inj if truth is Hypothesis.INJECTIVE else g_deg
    g_hat = g_true + cfg.sigma_shot / math.sqrt(budget_M) * rng.standard_normal(repetitions)
    says_degenerate = g_hat > mid
    correct = says_degenerate if truth is Hypothesis.DEGENERATE else ~says_degenerate
    majority = Hypothesis.DEGENERATE if says_degenerate.mean() > 0.5 else Hypothesis.INJECTIVE
    ratio = cfg.m * geom.G_N
    return DistinguisherOutcome(
        decision=majority,
        success_estimate=float(correct.mean()),
        shots_used=int(budget_M),
        regime_valid=ratio < cfg.backreaction_threshold,
        repetitions=repetitions,
        delta_L=dL,
        backreaction_ratio=ratio,
    )


def regime_report(N: int, kappa: float, cfg: ProbeConfig, dS_bits: float, L: float = 1.0) -> dict:
    """Predicted log shot counts for the heavy (m = sqrt N) and light
    (m = ln N', N' = e^sqrt(N)) probe regimes.

    ``cfg.m`` is ignored; sigma, z and thresholds are taken from it. All
    counts are natural logs; Heisenberg counts are the square root of the
    SQL counts.
    """
    if N < 4:
        raise DomainError(f"N must be >= 4, got {N}")
    geom = geometry_from_qubits(N, kappa)
    dL = entropy_gap_to_length_gap(geom, dS_bits)
    if dL <= 0:
        raise DomainError("dS_bits must be positive")
    sqrt_n = math.sqrt(N)
    ln_n_prime = sqrt_n
    report = {"N": N, "kappa": kappa, "dS_bits": dS_bits, "delta_L": dL, "L": L}
    for name, m in (("heavy", sqrt_n), ("light", ln_n_prime)):
        c = ProbeConfig(
            m=m,
            sigma_shot=cfg.sigma_shot,
            N_qubits=N,
            kappa=kappa,
            z=cfg.z,
            alpha_exp=cfg.alpha_exp,
            wkb_threshold=cfg.wkb_threshold,
            backreaction_threshold=cfg.backreaction_threshold,
        )
        ln_sql = max(0.0, log_predicted_shots(c, L, dL))
        ln_shadow = math.log(max(math.log(N), 1.0)) - 2 * log_signal_gap(m, L, dL) + 2 * math.log(cfg.sigma_shot)
        entry = {
            "m": m,
            "ln_M_bare": 2 * m * dL,
            "ln_M_sql": ln_sql,
            "ln_M_heisenberg": ln_sql / 2,
            "ln_M_shadow": ln_shadow,
            "backreaction_ratio": c.backreaction_ratio,
            "regime_valid": c.regime_valid,
            "wkb_valid": wkb_valid(m, L, cfg.wkb_threshold),
        }
        if name == "light":
            entry["ln_N_prime"] = ln_n_prime
            entry["blowup_factor"] = math.exp(ln_n_prime) / N
        report[name] = entry
    return report


def shadow_shots(cfg: ProbeConfig, L: float, dL: float, K: int) -> float:
    """Classical-shadow count with additive error set to the signal gap."""
    return shadow_cost(K, signal_gap(cfg.m, L, dL), cfg.sigma_shot**2)
