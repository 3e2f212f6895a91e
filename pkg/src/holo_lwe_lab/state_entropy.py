"""Function-superposition states, partial traces and von Neumann entropies.

A function state for an ETCF instance is

    |psi> = D^{-1/2} sum_{b,x} |b,x>_in |h(b,x)>_out ,   D = 2^k q^n,

stored sparsely. The output register is indexed by the attained image values
only, so nothing of size q^{m_rows} is ever built.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from . import Base
from .errors import DomainError, InvalidStateError, PromiseViolationError, UnsupportedModeError
from .lwe_etcf import EtcfInstance, Mode, evaluate_all

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
EIG_CLAMP = 1e-10


class Register(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


class Decision(str, Enum):
    FIRST_LARGER = "first_larger"
    SECOND_LARGER = "second_larger"


@dataclass(frozen=True, eq=False)
class PureState:
    """Sparse bipartite pure state.

    ``entries`` are parallel arrays (input index, output index, amplitude);
    ``output_labels`` maps output index to the image vector it stands for.
    """

    in_idx: np.ndarray
    out_idx: np.ndarray
    amps: np.ndarray
    in_dim: int
    output_labels: tuple

    def __post_init__(self):
        if abs(self.norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm {self.norm!r} differs from 1")

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    @property
    def out_dim(self) -> int:
        return len(self.output_labels)

    def dense(self) -> np.ndarray:
        """Amplitude matrix psi[i, y]; only for small states."""
        psi = np.zeros((self.in_dim, self.out_dim), dtype=complex)
        np.add.at(psi, (self.in_idx, self.out_idx), self.amps)
        return psi


class DensityMatrix:
    """Validated Hermitian, unit-trace, positive semidefinite matrix."""

    def __init__(self, entries, validate: bool = True):
        rho = np.asarray(entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
        self.entries = rho
        if validate:
            self.validate()

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def validate(self) -> None:
        rho = self.entries
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1) > NORM_TOL:
            raise InvalidStateError(f"trace {tr} differs from 1")
        if self.eigenvalues().min(initial=0.0) < -EIG_CLAMP:
            raise InvalidStateError("density matrix has a negative eigenvalue")

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def spectrum_csv(self) -> str:
        """Eigenvalues in ascending order, one per row."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eigenvalue"])
        for lam in self.eigenvalues():
            w.writerow([repr(float(lam))])
        return buf.getvalue()


def build_function_state(inst: EtcfInstance) -> PureState:
    """Uniform superposition over inputs entangled with the instance's outputs."""
    inst.params.check_domain()
    outputs = evaluate_all(inst)
    labels, out_idx = np.unique(outputs, axis=0, return_inverse=True)
    dim = inst.params.domain_size
    amps = np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)
    return PureState(
        in_idx=np.arange(dim),
        out_idx=np.asarray(out_idx).reshape(-1),
        amps=amps,
        in_dim=dim,
        output_labels=tuple(map(tuple, labels.tolist())),
    )


def reduce_density_matrix(state: PureState, keep: Union[Register, str]) -> DensityMatrix:
    """Partial trace over the register that is not kept."""
    psi = state.dense()
    if Register(keep) is Register.INPUT:
        rho = psi @ psi.conj().T
    else:
        rho = psi.T @ psi.conj()
    return DensityMatrix(rho)


def _entropy_from_eigs(lam: np.ndarray, base: Base) -> float:
    if lam.min(initial=0.0) < -EIG_CLAMP:
        raise InvalidStateError(f"eigenvalue {lam.min()} below -{EIG_CLAMP}")
    lam = lam[lam > 0]
    h = -float(np.sum(lam * np.log(lam)))
    h = max(h, 0.0)
    return h / math.log(2) if Base(base) is Base.BITS else h


def von_neumann_entropy(rho: DensityMatrix, base: Union[Base, str] = Base.BITS) -> float:
    """-sum lam log lam with 0 log 0 = 0; tiny negative eigenvalues are clamped."""
    return _entropy_from_eigs(rho.eigenvalues(), Base(base))


def input_reduction(inst: EtcfInstance) -> DensityMatrix:
    return reduce_density_matrix(build_function_state(inst), Register.INPUT)


def entropy_gap(inst_f: EtcfInstance, inst_g: EtcfInstance) -> float:
    """S(rho_f) - S(rho_g) in bits on the input-register reductions.

    Raises:
        UnsupportedModeError: either instance is noisy.
        DomainError: the instances use different LWE parameters.
    """
    if not (inst_f.noiseless and inst_g.noiseless):
        raise UnsupportedModeError("entropy_gap compares noiseless instances only")
    if inst_f.params != inst_g.params:
        raise DomainError("instances must share LweParams")
    return von_neumann_entropy(input_reduction(inst_f)) - von_neumann_entropy(input_reduction(inst_g))


def qed_decide(rho1: DensityMatrix, rho2: DensityMatrix, delta: float) -> Decision:
    """Decide which state has the larger entropy, checking the promised gap."""
    s1, s2 = von_neumann_entropy(rho1), von_neumann_entropy(rho2)
    gap = s1 - s2
    if abs(gap) < delta:
        raise PromiseViolationError(
            f"|S1 - S2| = {abs(gap):.6g} bits is below the promised gap {delta}", abs(gap)
        )
    return Decision.FIRST_LARGER if gap > 0 else Decision.SECOND_LARGER


def entropy_record(inst: EtcfInstance) -> dict:
    """JSON-ready record {mode, q, n, k, entropy_bits}."""
    p = inst.params
    return {
        "mode": inst.mode.value,
        "q": p.q,
        "n": p.n,
        "k": p.k,
        "entropy_bits": von_neumann_entropy(input_reduction(inst)),
    }


def entropy_records_json(insts) -> str:
    return json.dumps([entropy_record(i) for i in insts], indent=2, sort_keys=True)


__all__ = [
    "DensityMatrix",
    "Decision",
    "Mode",
    "PureState",
    "Register",
    "build_function_state",
    "entropy_gap",
    "entropy_record",
    "qed_decide",
    "reduce_density_matrix",
    "von_neumann_entropy",
]
