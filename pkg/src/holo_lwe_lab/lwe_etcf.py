"""LWE-based extended trapdoor claw-free (ETCF) function pairs at desk scale.

An instance houses a public matrix ``A`` over Z_q together with either
uniform shift vectors ``u`` (injective family ``f``) or secrets ``s``
(degenerate family ``g``)::

    f(b, x) = A x + sum_i b_i u_i + e[b, x]                    (mod q)
    g(b, x) = A x + sum_i b_i (A s_i + e'_i) + e[b, x]         (mod q)

with ``b`` a vector of ``k`` branch bits. With ``k`` independent secrets the
noiseless ``g`` is exactly 2^k-to-1.

Noise is materialized once per instance as a table indexed by the input
``(b, x)`` so that both maps stay functions.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from sympy import isprime

from .errors import DomainError, GenerationError, SizeError, UnsupportedModeError

DEFAULT_DOMAIN_CAP = 2**20
MAX_RESAMPLES = 100


class Mode(str, Enum):
    INJECTIVE = "injective"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class LweParams:
    """Parameters of a toy LWE / ETCF instance.

    Attributes:
        n: secret dimension.
        m_rows: number of rows of ``A`` (output dimension).
        q: modulus, prime.
        sigma: width of the discrete Gaussian noise; ignored when noiseless.
        k: number of branch bits; the degenerate map is 2^k-to-1.
        noiseless: forces e = e' = 0.
        domain_cap: largest domain 2^k q^n that brute-force operations accept.
            Cost models use cryptographic sizes, so the cap is enforced by
            :meth:`check_domain` rather than at construction.
    """

    n: int
    m_rows: int
    q: int
    sigma: float = 0.0
    k: int = 1
    noiseless: bool = True
    domain_cap: int = DEFAULT_DOMAIN_CAP

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.m_rows < self.n:
            raise DomainError(f"m_rows must be >= n, got m_rows={self.m_rows}, n={self.n}")
        if self.q < 2:
            raise DomainError(f"q must be >= 2, got {self.q}")
        if self.k < 0:
            raise DomainError(f"k must be >= 0, got {self.k}")
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")

    def check_domain(self) -> None:
        """Raise SizeError unless the input domain can be enumerated."""
        if self.domain_size > self.domain_cap:
            raise SizeError(
                f"domain 2^{self.k}*{self.q}^{self.n} = {self.domain_size} exceeds cap {self.domain_cap}"
            )

    @property
    def domain_size(self) -> int:
        return 2**self.k * self.q**self.n

    @property
    def effective_sigma(self) -> float:
        return 0.0 if self.noiseless else self.sigma

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m_rows": self.m_rows,
            "q": self.q,
            "sigma": self.sigma,
            "k": self.k,
            "noiseless": self.noiseless,
            "domain_cap": self.domain_cap,
        }


@dataclass(frozen=True, eq=False)
class EtcfInstance:
    """A concrete f or g map. Arrays are int64 with entries in [0, q).

    ``secrets`` is (k, n) and only meaningful in degenerate mode; ``u`` is
    (k, m_rows) and only meaningful in injective mode. ``e_table`` holds one
    noise vector per input index (see :func:`input_index`).
    """

    params: LweParams
    mode: Mode
    A: np.ndarray
    secrets: np.ndarray
    u: np.ndarray
    e_table: np.ndarray
    e_prime: np.ndarray
    seed: Optional[int] = None
    _shift: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = self.params
        if self.mode is Mode.DEGENERATE:
            shift = (self.secrets @ self.A.T + self.e_prime) % p.q
        else:
            shift = self.u % p.q
        object.__setattr__(self, "_shift", shift.astype(np.int64))

    @property
    def s(self) -> np.ndarray:
        """The first secret (the only one when k = 1)."""
        return self.secrets[0]

    @property
    def noiseless(self) -> bool:
        return self.params.noiseless or self.params.sigma == 0

    def __eq__(self, other):
        if not isinstance(other, EtcfInstance):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "mode": self.mode.value,
            "seed": self.seed,
            "A": self.A.tolist(),
            "secrets": self.secrets.tolist(),
            "u": self.u.tolist(),
            "e_prime": self.e_prime.tolist(),
            "e_table": self.e_table.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "EtcfInstance":
        params = LweParams(**doc["params"])
        m, n, k = params.m_rows, params.n, params.k

        def arr(key, shape):
            return np.asarray(doc[key], dtype=np.int64).reshape(shape)

        return cls(
            params=params,
            mode=Mode(doc["mode"]),
            A=arr("A", (m, n)),
            secrets=arr("secrets", (k, n)),
            u=arr("u", (k, m)),
            e_prime=arr("e_prime", (k, m)),
            e_table=arr("e_table", (params.domain_size, m)),
            seed=doc.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "EtcfInstance":
        return cls.from_dict(json.loads(text))


def rank_mod_p(M: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over the field Z_p (p prime)."""
    R = [[int(v) % p for v in row] for row in np.atleast_2d(M)]
    rows, cols = len(R), len(R[0]) if R else 0
    rank = 0
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if R[r][c]), None)
        if pivot is None:
            continue
        R[rank], R[pivot] = R[pivot], R[rank]
        inv = pow(R[rank][c], -1, p)
        R[rank] = [(v * inv) % p for v in R[rank]]
        for r in range(rows):
            if r != rank and R[r][c]:
                f = R[r][c]
                R[r] = [(a - f * b) % p for a, b in zip(R[r], R[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


def discrete_gaussian_pmf(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of the discrete Gaussian truncated at +-ceil(6 sigma).

    Weights are proportional to exp(-x^2 / (2 sigma^2)).
    """
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return np.array([0]), np.array([1.0])
    tail = math.ceil(6 * sigma)
    support = np.arange(-tail, tail + 1)
    w = np.exp(-(support.astype(float) ** 2) / (2 * sigma**2))
    return support, w / w.sum()


def discrete_gaussian_sample(
    sigma: float, q: int, rng: np.random.Generator, size: Union[int, tuple, None] = None
):
    """Draw from the truncated discrete Gaussian and reduce mod q.

    Returns a Python int when ``size`` is None, otherwise an int64 array.
    """
    support, pmf = discrete_gaussian_pmf(sigma)
    if sigma == 0:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    draw = rng.choice(support, size=size, p=pmf)
    if size is None:
        return int(draw) % q
    return np.asarray(draw, dtype=np.int64) % q


def branch_vectors(k: int) -> np.ndarray:
    """All b in {0,1}^k, shape (2^k, k); row index equals sum_i b_i 2^i."""
    idx = np.arange(2**k)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(np.int64)


def input_vectors(n: int, q: int) -> np.ndarray:
    """All x in Z_q^n, shape (q^n, n), row index equals sum_j x_j q^j."""
    idx = np.arange(q**n)
    return ((idx[:, None] // q ** np.arange(n)) % q).astype(np.int64)


def input_index(params: LweParams, b, x) -> int:
    """Canonical index of input (b, x): b_int * q^n + x_int."""
    bv = _as_branch(params, b)
    b_int = int(sum(int(v) << i for i, v in enumerate(bv)))
    x_int = int(sum(int(v) * params.q**j for j, v in enumerate(np.asarray(x) % params.q)))
    return b_int * params.q**params.n + x_int


def _as_branch(params: LweParams, b) -> np.ndarray:
    bv = np.atleast_1d(np.asarray(b, dtype=np.int64))
    if bv.shape != (params.k,):
        raise DomainError(f"branch must have {params.k} bits, got {bv.tolist()}")
    if np.any((bv != 0) & (bv != 1)):
        raise DomainError(f"branch bits must be 0/1, got {bv.tolist()}")
    return bv


def evaluate(inst: EtcfInstance, b, x: Sequence[int]) -> np.ndarray:
    """Evaluate the instance at one input. ``b`` is a bit (k=1) or k bits."""
    p = inst.params
    xv = np.asarray(x, dtype=np.int64)
    if xv.shape != (p.n,):
        raise DomainError(f"x must have length {p.n}, got shape {xv.shape}")
    bv = _as_branch(p, b)
    e = inst.e_table[input_index(p, bv, xv)]
    return (inst.A @ (xv % p.q) + bv @ inst._shift + e) % p.q


def evaluate_all(inst: EtcfInstance) -> np.ndarray:
    """Outputs for every input in canonical order, shape (domain, m_rows)."""
    p = inst.params
    ax = input_vectors(p.n, p.q) @ inst.A.T
    bs = branch_vectors(p.k) @ inst._shift
    out = (bs[:, None, :] + ax[None, :, :]).reshape(p.domain_size, p.m_rows)
    return (out + inst.e_table) % p.q


def preimage_census(inst: EtcfInstance) -> dict[tuple[int, ...], int]:
    """Number of preimages of every attained output, by exhaustive enumeration."""
    inst.params.check_domain()
    return dict(Counter(map(tuple, evaluate_all(inst).tolist())))


def collision_fraction(census: dict) -> float:
    """Fraction of inputs whose output has at least two preimages."""
    total = sum(census.values())
    return sum(c for c in census.values() if c >= 2) / total


def collision_partner(inst: EtcfInstance, b, x) -> Optional[tuple]:
    """Use the trapdoor to find a distinct input colliding with (b, x).

    Flips the first branch bit and shifts x by the first secret, so for
    k = 1 this is the unique partner. Returns None for injective instances.
    """
    if inst.mode is Mode.INJECTIVE:
        return None
    if not inst.noiseless:
        raise UnsupportedModeError("collision_partner needs a noiseless degenerate instance")
    p = inst.params
    bv = _as_branch(p, b).copy()
    xv = np.asarray(x, dtype=np.int64)
    sign = 2 * bv[0] - 1
    bv[0] = 1 - bv[0]
    x_new = (xv + sign * inst.secrets[0]) % p.q
    return (int(bv[0]) if p.k == 1 else tuple(int(v) for v in bv)), x_new


def _subset_sums_distinct(secrets: np.ndarray, q: int) -> bool:
    sums = (branch_vectors(len(secrets)) @ secrets) % q
    return len({tuple(r) for r in sums.tolist()}) == len(sums)


def sample_instance(params: LweParams, mode: Union[Mode, str], seed: int) -> EtcfInstance:
    """Sample a reproducible instance.

    ``A`` is resampled until it has full column rank over Z_q. Degenerate
    instances use k secrets whose 2^k subset sums are distinct; noiseless
    injective instances resample ``u`` until the census proves injectivity.

    Raises:
        DomainError: q is not prime, or 2^k > q^n in degenerate mode.
        SizeError: the domain exceeds the cap.
        GenerationError: a resampling loop exhausted its attempts.
    """
    mode = Mode(mode)
    p = params
    p.check_domain()
    if not isprime(p.q):
        raise DomainError(f"q must be prime, got {p.q}")
    rng = np.random.default_rng(seed)
    sigma = p.effective_sigma

    for _ in range(MAX_RESAMPLES):
        A = rng.integers(0, p.q, size=(p.m_rows, p.n), dtype=np.int64)
        if rank_mod_p(A, p.q) == p.n:
            break
    else:
        raise GenerationError(f"no full-rank A after {MAX_RESAMPLES} samples")

    e_prime = discrete_gaussian_sample(sigma, p.q, rng, size=(p.k, p.m_rows))
    e_table = discrete_gaussian_sample(sigma, p.q, rng, size=(p.domain_size, p.m_rows))
    zeros_s = np.zeros((p.k, p.n), dtype=np.int64)
    zeros_u = np.zeros((p.k, p.m_rows), dtype=np.int64)

    if mode is Mode.DEGENERATE:
        if 2**p.k > p.q**p.n:
            raise DomainError(f"Z_{p.q}^{p.n} cannot hold 2^{p.k} distinct secret subset sums")
        for _ in range(MAX_RESAMPLES):
            secrets = rng.integers(0, p.q, size=(p.k, p.n), dtype=np.int64)
            if _subset_sums_distinct(secrets, p.q):
                break
        else:
            raise GenerationError(f"no secrets with distinct subset sums after {MAX_RESAMPLES} samples")
        return EtcfInstance(p, mode, A, secrets, zeros_u, e_table, e_prime, seed)

    for _ in range(MAX_RESAMPLES):
        u = rng.integers(0, p.q, size=(p.k, p.m_rows), dtype=np.int64)
        inst = EtcfInstance(p, mode, A, zeros_s, u, e_table, zeros_u.copy(), seed)
        if sigma > 0 or all(c == 1 for c in preimage_census(inst).values()):
            return inst
    raise GenerationError(f"no injective u after {MAX_RESAMPLES} samples")


def instance_from_arrays(
    params: LweParams,
    mode: Union[Mode, str],
    A,
    secrets=None,
    u=None,
) -> EtcfInstance:
    """Build a noiseless instance from explicit matrices (hand-worked cases)."""
    p = params
    A = np.asarray(A, dtype=np.int64).reshape(p.m_rows, p.n) % p.q
    secrets = np.zeros((p.k, p.n), np.int64) if secrets is None else np.asarray(secrets, np.int64).reshape(p.k, p.n) % p.q
    u = np.zeros((p.k, p.m_rows), np.int64) if u is None else np.asarray(u, np.int64).reshape(p.k, p.m_rows) % p.q
    return EtcfInstance(
        p,
        Mode(mode),
        A,
        secrets,
        u,
        np.zeros((p.domain_size, p.m_rows), np.int64),
        np.zeros((p.k, p.m_rows), np.int64),
    )
