"""Gaussian bulk-field entropies from covariance matrices.

Conventions
-----------
``gamma`` is the 2D x 2D matrix of twice the symmetrized second moments in
(phi_1..phi_D, pi_1..pi_D) ordering, so the vacuum has ``gamma = I``.
Symplectic eigenvalues are taken of ``gamma / 2``; a pure mode then sits at
nu = 1/2 and every physical mode has nu >= 1/2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.linalg import eigh

from . import Base
from .errors import DomainError, InvalidStateError, NumericalDegeneracyError

SYMMETRY_TOL = 1e-10
NU_TOL = 1e-8
PAIRING_TOL = 1e-8


def symplectic_form(D: int) -> np.ndarray:
    """Omega = [[0, I], [-I, 0]] in (phi, pi) ordering."""
    I = np.eye(D)
    Z = np.zeros((D, D))
    return np.block([[Z, I], [-I, Z]])


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise InvalidStateError(f"covariance must be 2D x 2D, got shape {g.shape}")
        if np.max(np.abs(g - g.T)) >= SYMMETRY_TOL:
            raise InvalidStateError("covariance matrix is not symmetric")
        object.__setattr__(self, "gamma", g)

    @property
    def D(self) -> int:
        return self.gamma.shape[0] // 2

    @property
    def phi_block(self) -> np.ndarray:
        return self.gamma[: self.D, : self.D]

    @property
    def pi_block(self) -> np.ndarray:
        return self.gamma[self.D :, self.D :]

    def is_physical(self) -> bool:
        try:
            return bool(np.all(symplectic_spectrum(self).nus >= 0.5 - NU_TOL))
        except NumericalDegeneracyError:
            return False

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# D={self.D} ordering=phi_1..phi_D,pi_1..pi_D\n")
        w = csv.writer(buf, lineterminator="\n")
        for row in self.gamma:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


@dataclass(frozen=True)
class SymplecticSpectrum:
    nus: np.ndarray
    pairing_residual: float


@dataclass(frozen=True)
class FlmBreakdown:
    s_cl: float
    s_bulk_ent: float
    delta_area_term: float
    wald_like: float
    counterterms: float
    total: float

    @property
    def quantum_correction(self) -> float:
        return self.total - self.s_cl


def chain_potential(D: int, mass0: float, coupling: float) -> np.ndarray:
    """K with K_ii = mass0^2 + 2 coupling and K_{i,i+-1} = -coupling (Dirichlet ends)."""
    K = np.diag(np.full(D, mass0**2 + 2 * coupling))
    if D > 1:
        off = np.full(D - 1, -coupling)
        K += np.diag(off, 1) + np.diag(off, -1)
    return K


def build_chain_ground_covariance(D: int, mass0: float, coupling: float = 1.0) -> CovarianceMatrix:
    """Ground state of the harmonic chain: gamma_phiphi = K^-1/2, gamma_pipi = K^1/2."""
    if D < 1:
        raise DomainError(f"D must be >= 1, got {D}")
    if mass0 <= 0 or coupling <= 0:
        raise DomainError(f"mass0 and coupling must be positive, got {mass0}, {coupling}")
    w, V = eigh(chain_potential(D, mass0, coupling))
    if w.min() <= 0:
        raise DomainError("potential matrix is not positive definite")
    X = (V * w**-0.5) @ V.T
    P = (V * w**0.5) @ V.T
    X = (X + X.T) / 2
    P = (P + P.T) / 2
    Z = np.zeros((D, D))
    return CovarianceMatrix(np.block([[X, Z], [Z, P]]))


def restrict_covariance(cov: CovarianceMatrix, region: Iterable[int]) -> CovarianceMatrix:
    """Keep (phi_i, pi_i) for the 0-based sites in ``region``, in the given order."""
    idx = list(dict.fromkeys(int(i) for i in region))
    if not idx:
        raise DomainError("region must be nonempty")
    if min(idx) < 0 or max(idx) >= cov.D:
        raise DomainError(f"region {idx} out of range for D={cov.D}")
    full = np.array(idx + [i + cov.D for i in idx])
    return CovarianceMatrix(cov.gamma[np.ix_(full, full)])


def symplectic_spectrum(cov: CovarianceMatrix) -> SymplecticSpectrum:
    """Moduli of the eigenvalues of i Omega^-1 (gamma / 2), paired into D values.

    Raises:
        NumericalDegeneracyError: the +-nu pairs do not match to 1e-8 (relative
            to max(1, nu)) or carry imaginary parts.
    """
    D = cov.D
    omega_inv = -symplectic_form(D)
    ev = np.linalg.eigvals(1j * omega_inv @ (cov.gamma / 2))
    re = np.sort(ev.real)
    neg, pos = -re[:D][::-1], re[D:]
    scale = np.maximum(1.0, np.abs(pos))
    residual = float(max(np.max(np.abs(pos - neg) / scale), np.max(np.abs(ev.imag) / np.maximum(1.0, np.abs(ev)))))
    if residual >= PAIRING_TOL:
        raise NumericalDegeneracyError(
            f"symplectic pairing residual {residual:.3e} (pos={pos[:4]}, neg={neg[:4]})"
        )
    nus = np.sort((pos + neg) / 2)[::-1]
    return SymplecticSpectrum(nus=nus, pairing_residual=residual)


def mode_entropy(nu: float, base: Union[Base, str] = Base.NATS) -> float:
    """(nu + 1/2) log(nu + 1/2) - (nu - 1/2) log(nu - 1/2), zero at nu = 1/2."""
    if nu < 0.5 - NU_TOL:
        raise InvalidStateError(f"unphysical symplectic eigenvalue {nu}")
    if nu <= 0.5:
        return 0.0
    a, b = nu + 0.5, nu - 0.5
    s = a * math.log(a) - b * math.log(b)
    return s / math.log(2) if Base(base) is Base.BITS else s


def mode_entropies(cov_A: CovarianceMatrix, base: Union[Base, str] = Base.NATS) -> np.ndarray:
    return np.array([mode_entropy(nu, base) for nu in symplectic_spectrum(cov_A).nus])


def bulk_entanglement_entropy(cov_A: CovarianceMatrix, base: Union[Base, str] = Base.NATS) -> float:
    return float(np.sum(mode_entropies(cov_A, base)))


def truncated_entropy(cov_A: CovarianceMatrix, J: int, base: Union[Base, str] = Base.NATS) -> tuple[float, float]:
    """Entropy of the J modes with the largest S(nu) and the exact remainder."""
    if not 1 <= J <= cov_A.D:
        raise DomainError(f"J must be in [1, {cov_A.D}], got {J}")
    s = np.sort(mode_entropies(cov_A, base))[::-1]
    return float(np.sum(s[:J])), float(np.sum(s[J:]))


def modes_for_tolerance(cov_A: CovarianceMatrix, tol: float, base: Union[Base, str] = Base.NATS) -> int:
    """Smallest J whose dropped entropy is below ``tol``."""
    for J in range(1, cov_A.D + 1):
        if truncated_entropy(cov_A, J, base)[1] < tol:
            return J
    return cov_A.D


def flm_assemble(
    s_cl: float,
    s_bulk_ent: float,
    delta_area_term: float = 0.0,
    wald_like: float = 0.0,
    counterterms: float = 0.0,
) -> FlmBreakdown:
    total = s_cl + s_bulk_ent + delta_area_term + wald_like + counterterms
    return FlmBreakdown(s_cl, s_bulk_ent, delta_area_term, wald_like, counterterms, total)


def correlator_decay_exponent(
    cov: CovarianceMatrix, block: str = "phi", origin: int | None = None, max_distance: int | None = None
) -> float:
    """Power-law exponent Delta from a fit of log|gamma_ij| against log|i - j|.

    Distances run from 1 to ``max_distance`` measured from ``origin`` (default
    a quarter of the chain, so the fit stays clear of both ends).
    """
    G = cov.phi_block if block == "phi" else cov.pi_block
    D = cov.D
    i0 = D // 4 if origin is None else origin
    rmax = (D // 2 - 1 if max_distance is None else max_distance)
    r = np.arange(1, min(rmax, D - 1 - i0) + 1)
    if len(r) < 2:
        raise DomainError("chain too short for a decay fit")
    slope, _ = np.polyfit(np.log(r), np.log(np.abs(G[i0, i0 + r])), 1)
    return float(-slope)


def spectrum_record(cov_A: CovarianceMatrix, region: Sequence[int], D: int, mass0: float, coupling: float) -> dict:
    """JSON-ready record {D, mass0, coupling, region, nus, S}."""
    spectrum = symplectic_spectrum(cov_A)
    return {
        "D": D,
        "mass0": mass0,
        "coupling": coupling,
        "region": [int(i) for i in region],
        "nus": [float(v) for v in spectrum.nus],
        "S": float(sum(mode_entropy(v) for v in spectrum.nus)),
    }
