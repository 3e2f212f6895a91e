"""Acceptance criteria 1-11. Each test prints one PASS/FAIL line.

Reference values come from the independent routines in ``oracles.py`` or
from closed forms evaluated here; tolerances are the ones the criteria fix.
"""

import math
import time

import numpy as np
import yaml

from holo_lwe_lab.ads_geometry import (
    AdsGeometry,
    entropy_gap_to_length_gap,
    geometry_from_qubits,
    rt_entropy,
    rt_geodesic_length,
)
from holo_lwe_lab.cli import main
from holo_lwe_lab.cost_models import (
    bkz_root_hermite,
    comparison_table,
    default_lwe_family,
    holographic_cost,
    required_block_size,
    shadow_cost,
)
from holo_lwe_lab.gaussian_bulk import (
    CovarianceMatrix,
    build_chain_ground_covariance,
    bulk_entanglement_entropy,
    mode_entropy,
    restrict_covariance,
    symplectic_spectrum,
    truncated_entropy,
)
from holo_lwe_lab.lwe_etcf import LweParams, Mode, sample_instance
from holo_lwe_lab.probe_measurement import (
    Hypothesis,
    ProbeConfig,
    empirical_min_shots,
    holographic_distinguisher,
    predicted_sample_complexity,
    signal_gap,
    z_for_error,
)
from holo_lwe_lab.seeding import rng_for
from holo_lwe_lab.state_entropy import entropy_gap
from oracles import chain_entropy_correlator_method, oracle_delta, tmsv_covariance, tmsv_fock_reduced_entropy

ACCEPTANCE_SEED = 20240601


def test_criterion_01_entropy_gap(criterion):
    t0 = time.perf_counter()
    errs = []
    for q, n, k in [(3, 2, 1), (2, 2, 2), (5, 2, 1)]:
        params = LweParams(n=n, m_rows=n + k, q=q, k=k)
        f = sample_instance(params, Mode.INJECTIVE, 11)
        g = sample_instance(params, Mode.DEGENERATE, 12)
        errs.append(abs(entropy_gap(f, g) - k))
    dt = time.perf_counter() - t0
    criterion(1, "entropy gap = k bits", max(errs) < 1e-9 and dt < 5,
              f"max |gap - k| = {max(errs):.2e} (tol 1e-9), {dt:.2f} s (limit 5 s)")


def test_criterion_02_rt_cft_identity(criterion):
    worst = 0.0
    rng = np.random.default_rng(ACCEPTANCE_SEED)
    for i in range(100):
        geom = AdsGeometry(R=float(rng.uniform(0.5, 5)), G_N=float(10 ** rng.uniform(-4, 0)),
                           epsilon=float(10 ** rng.uniform(-6, -2)))
        ell = geom.epsilon * float(10 ** rng.uniform(0.01, 6))
        c = 3 * geom.R / (2 * geom.G_N)
        expected = c / 3 * math.log(ell / geom.epsilon)
        worst = max(worst, abs(rt_entropy(geom, rt_geodesic_length(geom, ell)) - expected) / expected)
    criterion(2, "RT entropy = (c/3) ln(l/eps)", worst < 1e-12, f"max relative error {worst:.2e} on 100 points")


def test_criterion_03_measurement_cost(criterion):
    t0 = time.perf_counter()
    target = 1 / 3
    z = z_for_error(target)
    ratios, ln_exact, ln_emp = [], [], []
    for m in (1.0, 2.0, 3.0, 4.0):
        cfg = ProbeConfig(m=m, sigma_shot=1.0, z=z)
        M_exact = predicted_sample_complexity(cfg, 1.0, 0.5).M_exact
        M_emp = empirical_min_shots(cfg, 1.0, 0.5, target, 2000, rng_for(ACCEPTANCE_SEED, f"criterion3/m={m}"))
        ratios.append(M_emp / M_exact)
        ln_exact.append(math.log(M_exact))
        ln_emp.append(math.log(M_emp))
    slope = np.polyfit(ln_exact, ln_emp, 1)[0]
    dt = time.perf_counter() - t0
    ok = all(1 / 3 <= r <= 3 for r in ratios) and abs(slope - 1) <= 0.25 and dt < 600
    criterion(3, "measurement-cost scaling", ok,
              f"M_emp/M_exact = {[round(r, 3) for r in ratios]}, slope {slope:.3f}, z = {z:.4f} "
              f"(matched to error 1/3), {dt:.1f} s")


def test_criterion_04_gaussian_oracle(criterion):
    errs = []
    for r in (0.25, 0.5, 1.0):
        half = restrict_covariance(CovarianceMatrix(tmsv_covariance(r)), [0])
        nu = symplectic_spectrum(half).nus[0]
        errs.append(abs(mode_entropy(nu) - tmsv_fock_reduced_entropy(r, cutoff=60)))
    nu1 = symplectic_spectrum(restrict_covariance(CovarianceMatrix(tmsv_covariance(1.0)), [0])).nus[0]
    nu_err = abs(nu1 - math.cosh(2) / 2)
    criterion(4, "symplectic vs Fock entropy", max(errs) < 1e-6 and nu_err < 1e-6,
              f"max entropy diff {max(errs):.2e}, |nu - cosh2/2| = {nu_err:.2e}")


def test_criterion_05_chain_purity(criterion):
    D = 64
    cov = build_chain_ground_covariance(D, 1e-3, 1.0)
    total = bulk_entanglement_entropy(cov)
    rng = np.random.default_rng(ACCEPTANCE_SEED)
    regions = [list(range(l)) for l in (1, 4, 8, 16, 32, 63)]
    regions += [sorted(rng.choice(D, size=int(s), replace=False).tolist()) for s in rng.integers(1, D, 20)]
    worst_sym, worst_nu = 0.0, math.inf
    for reg in regions:
        comp = [i for i in range(D) if i not in set(reg)]
        A, B = restrict_covariance(cov, reg), restrict_covariance(cov, comp)
        worst_sym = max(worst_sym, abs(bulk_entanglement_entropy(A) - bulk_entanglement_entropy(B)))
        worst_nu = min(worst_nu, symplectic_spectrum(A).nus.min(), symplectic_spectrum(B).nus.min())
    ok = total < 1e-6 and worst_sym < 1e-8 and worst_nu >= 0.5 - 1e-8
    criterion(5, "chain purity and symmetry", ok,
              f"S(total) = {total:.2e}, max complement diff {worst_sym:.2e} over {len(regions)} cuts, "
              f"min nu - 1/2 = {worst_nu - 0.5:.2e}")


def test_criterion_06_log_growth(criterion):
    cov = build_chain_ground_covariance(64, 1e-3, 1.0)
    ells = [4, 8, 16, 32]
    S = [bulk_entanglement_entropy(restrict_covariance(cov, range(l))) for l in ells]
    oracle = [chain_entropy_correlator_method(64, 1e-3, 1.0, range(l)) for l in ells]
    a, _ = np.polyfit(np.log(ells), S, 1)
    diff = max(abs(x - y) for x, y in zip(S, oracle))
    criterion(6, "logarithmic entropy growth", 0.12 <= a <= 0.22 and diff < 1e-6,
              f"a = {a:.4f} (range [0.12, 0.22]), max oracle diff {diff:.2e}")


def test_criterion_07_truncation(criterion):
    cov = build_chain_ground_covariance(64, 1e-3, 1.0)
    worst = 0.0
    for l in (4, 8, 16, 32):
        A = restrict_covariance(cov, range(l))
        full = bulk_entanglement_entropy(A)
        for J in range(1, l + 1):
            kept, dropped = truncated_entropy(A, J)
            worst = max(worst, abs(kept + dropped - full))
    criterion(7, "truncation soundness", worst < 1e-12, f"max |kept + dropped - full| = {worst:.2e}")


def test_criterion_08_cost_sanity(criterion):
    delta = bkz_root_hermite(100)
    d_ok = abs(delta - 1.0093) <= 0.0005 and abs(delta - float(oracle_delta(100))) < 1e-12
    betas = [required_block_size(default_lwe_family(n)) for n in range(40, 121, 8)]
    mono = all(a <= b for a, b in zip(betas, betas[1:]))
    holo = holographic_cost(64, 2, 1, 1).log2_cost
    table = comparison_table(range(32, 257, 16))
    fits_ok = all(f.slope > 0 and f.r2 >= 0.99 for f in table.fits.values())
    ok = d_ok and mono and abs(holo - 81.54) <= 0.01 and fits_ok
    fit_txt = ", ".join(f"{k}: slope {f.slope:.3f} R2 {f.r2:.4f}" for k, f in sorted(table.fits.items()))
    criterion(8, "cost-model sanity", ok,
              f"delta(100) = {delta:.7f}, beta(n) = {betas}, holographic(64) = {holo:.4f}, {fit_txt}")


def test_criterion_09_shadow_composition(criterion):
    K, var, c = 16, 1.0, 0.5
    xs, ys = [], []
    for m in (0.5, 1.0, 2.0, 3.0, 4.0):
        for L in (0.5, 1.0, 2.0, 3.0):
            xs.append(2 * m * L)
            ys.append(math.log(shadow_cost(K, signal_gap(m, L, c / m), var)))
    slope = np.polyfit(xs, ys, 1)[0]
    criterion(9, "shadow cost exponential in 2mL", abs(slope - 1) < 1e-6,
              f"slope {slope:.10f} over {len(xs)} points at m*dL = {c}")


def test_criterion_10_end_to_end(criterion):
    t0 = time.perf_counter()
    params = LweParams(n=2, m_rows=3, q=3, k=1)
    dS = entropy_gap(sample_instance(params, Mode.INJECTIVE, 1), sample_instance(params, Mode.DEGENERATE, 2))
    geom = geometry_from_qubits(16, 1.0)
    cfg = ProbeConfig(m=1.0, N_qubits=16)
    dL = entropy_gap_to_length_gap(geom, dS)
    M_exact = predicted_sample_complexity(cfg, 1.0 - dL, dL).M_exact
    full, chance = {}, {}
    for truth in Hypothesis:
        full[truth.value] = holographic_distinguisher(
            geom, cfg, truth, dS, M_exact, rng_for(ACCEPTANCE_SEED, f"criterion10/full/{truth.value}"),
            repetitions=500).success_estimate
        chance[truth.value] = holographic_distinguisher(
            geom, cfg, truth, 1e-9, 1, rng_for(ACCEPTANCE_SEED, f"criterion10/chance/{truth.value}"),
            repetitions=500).success_estimate
    dt = time.perf_counter() - t0
    ok = min(full.values()) >= 0.9 and all(abs(v - 0.5) <= 0.1 for v in chance.values()) and dt < 300
    criterion(10, "end-to-end protocol", ok,
              f"dS = {dS:.6f} bits, budget M_exact = {M_exact}: success {full}; budget 1, dL -> 0: {chance}; "
              f"{dt:.2f} s")


def test_criterion_11_determinism(criterion, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"seed": 7}))
    codes = [main(["all", "--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
    files_b = sorted(p.name for p in (tmp_path / "b").iterdir())
    same = files_a == files_b and all(
        (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files_a
    )
    criterion(11, "byte-identical reruns", codes == [0, 0] and same and len(files_a) > 1,
              f"exit codes {codes}, {len(files_a)} files compared")
