import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holo_lwe_lab import Base
from holo_lwe_lab.errors import DomainError, InvalidStateError, PromiseViolationError, UnsupportedModeError
from holo_lwe_lab.lwe_etcf import LweParams, Mode, preimage_census, sample_instance
from holo_lwe_lab.state_entropy import (
    Decision,
    DensityMatrix,
    Register,
    build_function_state,
    entropy_gap,
    entropy_record,
    input_reduction,
    qed_decide,
    reduce_density_matrix,
    von_neumann_entropy,
)


def class_entropy_bits(inst):
    """Oracle: the input reduction of a function state has one eigenvalue
    c/D per output with c preimages, so S = -sum (c/D) log2 (c/D)."""
    census = preimage_census(inst)
    D = inst.params.domain_size
    return -sum((c / D) * math.log2(c / D) for c in census.values())


def pair(q, n, k, seed=5):
    p = LweParams(n=n, m_rows=n + k + 1, q=q, k=k)
    return sample_instance(p, Mode.INJECTIVE, seed), sample_instance(p, Mode.DEGENERATE, seed)


def random_density(rng, d, rank):
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


class TestFunctionState:
    def test_n1_q2_injective_amplitudes(self):
        p = LweParams(n=1, m_rows=2, q=2)
        inst = sample_instance(p, Mode.INJECTIVE, seed=0)
        st_ = build_function_state(inst)
        assert len(st_.amps) == 4
        assert np.allclose(st_.amps, 0.5)

    def test_degenerate_output_support(self):
        _, g = pair(3, 2, 1)
        assert build_function_state(g).out_dim == 9

    def test_norm(self):
        f, g = pair(5, 2, 1)
        for inst in (f, g):
            assert abs(build_function_state(inst).norm - 1) < 1e-12


class TestReduction:
    def test_injective_maximally_mixed(self):
        f, _ = pair(3, 2, 1)
        rho = input_reduction(f)
        assert np.allclose(rho.entries, np.eye(18) / 18, atol=1e-14)
        assert abs(rho.purity() - 1 / 18) < 1e-12

    def test_degenerate_rank_one_blocks(self):
        _, g = pair(3, 2, 1)
        rho = input_reduction(g)
        lam = np.sort(rho.eigenvalues())[::-1]
        assert np.allclose(lam[:9], 1 / 9, atol=1e-12)
        assert np.allclose(lam[9:], 0, atol=1e-12)
        # each class vector (|i1> + |i2>)/sqrt(2) is an eigenvector
        state = build_function_state(g)
        for y in range(state.out_dim):
            members = state.in_idx[state.out_idx == y]
            v = np.zeros(18)
            v[members] = 1 / math.sqrt(2)
            assert np.allclose(rho.entries @ v, v / 9, atol=1e-12)

    def test_output_reduction_diagonal(self):
        _, g = pair(3, 2, 1)
        rho = reduce_density_matrix(build_function_state(g), Register.OUTPUT)
        assert np.allclose(rho.entries, np.eye(9) / 9)


class TestEntropy:
    def test_maximally_mixed(self):
        rho = DensityMatrix(np.eye(18) / 18)
        assert von_neumann_entropy(rho) == pytest.approx(4.169925, abs=1e-6)
        assert von_neumann_entropy(rho, Base.NATS) == pytest.approx(math.log(18), abs=1e-12)

    def test_pure(self):
        v = np.array([1, 1j, 0]) / math.sqrt(2)
        assert abs(von_neumann_entropy(DensityMatrix(np.outer(v, v.conj())))) < 1e-12

    def test_degenerate_log9(self):
        _, g = pair(3, 2, 1)
        assert von_neumann_entropy(input_reduction(g)) == pytest.approx(math.log2(9), abs=1e-9)

    def test_invalid_state(self):
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([1.2, -0.2]))
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([0.3, 0.3]))

    def test_matches_class_oracle_noisy(self):
        p = LweParams(n=2, m_rows=3, q=5, sigma=0.5, noiseless=False)
        g = sample_instance(p, Mode.DEGENERATE, seed=13)
        assert von_neumann_entropy(input_reduction(g)) == pytest.approx(class_entropy_bits(g), abs=1e-9)


class TestGap:
    @pytest.mark.parametrize("q,n,k", [(3, 2, 1), (2, 2, 2), (5, 2, 1)])
    def test_gap_equals_k(self, q, n, k):
        f, g = pair(q, n, k)
        assert abs(entropy_gap(f, g) - k) < 1e-9
        assert abs(class_entropy_bits(f) - class_entropy_bits(g) - k) < 1e-12

    def test_same_instance_zero(self):
        f, _ = pair(3, 2, 1)
        assert entropy_gap(f, f) == pytest.approx(0, abs=1e-12)

    def test_noisy_rejected(self):
        p = LweParams(n=2, m_rows=3, q=3, sigma=1.0, noiseless=False)
        f = sample_instance(p, Mode.INJECTIVE, 1)
        g = sample_instance(p, Mode.DEGENERATE, 1)
        with pytest.raises(UnsupportedModeError):
            entropy_gap(f, g)

    @pytest.mark.parametrize("q", [2, 3, 5])
    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("k", [1, 2])
    def test_noiseless_gap_theorem(self, q, n, k):
        if 2**k > q**n:
            with pytest.raises(DomainError):
                pair(q, n, k)
            return
        f, g = pair(q, n, k, seed=q * 100 + n * 10 + k)
        assert abs(entropy_gap(f, g) - k) < 1e-9

    def test_gap_theorem_largest_case_by_classes(self):
        f, g = pair(5, 3, 2)
        assert abs(class_entropy_bits(f) - class_entropy_bits(g) - 2) < 1e-12


class TestQed:
    def test_mixed_vs_pure(self):
        pure = np.zeros((4, 4))
        pure[0, 0] = 1
        assert qed_decide(DensityMatrix(np.eye(4) / 4), DensityMatrix(pure), 1) is Decision.FIRST_LARGER
        assert qed_decide(DensityMatrix(pure), DensityMatrix(np.eye(4) / 4), 1) is Decision.SECOND_LARGER

    def test_etcf_states(self):
        f, g = pair(3, 2, 1)
        assert qed_decide(input_reduction(f), input_reduction(g), 1.0 - 1e-9) is Decision.FIRST_LARGER

    def test_promise_violation(self):
        rho = DensityMatrix(np.eye(4) / 4)
        with pytest.raises(PromiseViolationError) as err:
            qed_decide(rho, rho, 1)
        assert err.value.gap == pytest.approx(0)


def test_record_and_csv():
    _, g = pair(3, 2, 1)
    rec = entropy_record(g)
    assert rec["mode"] == "degenerate" and rec["k"] == 1
    assert rec["entropy_bits"] == pytest.approx(math.log2(9))
    lines = input_reduction(g).spectrum_csv().splitlines()
    assert lines[0] == "eigenvalue" and len(lines) == 19


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), dA=st.integers(1, 5), dB=st.integers(1, 5))
def test_schmidt_symmetry_and_bounds(seed, dA, dB):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(dA, dB)) + 1j * rng.normal(size=(dA, dB))
    psi /= np.linalg.norm(psi)
    rA = DensityMatrix(psi @ psi.conj().T)
    rB = DensityMatrix(psi.T @ psi.conj())
    sA, sB = von_neumann_entropy(rA), von_neumann_entropy(rB)
    assert abs(sA - sB) < 1e-9
    assert -1e-12 <= sA <= math.log2(dA) + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), d=st.integers(2, 8))
def test_permutation_invariance(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, d, rng.integers(1, d + 1))
    perm = rng.permutation(d)
    s1 = von_neumann_entropy(DensityMatrix(rho))
    s2 = von_neumann_entropy(DensityMatrix(rho[np.ix_(perm, perm)]))
    assert abs(s1 - s2) < 1e-9
    assert 0 <= s1 <= math.log2(d) + 1e-9
