"""Command-line driver: ``holo-lwe-lab <experiment> --config FILE``.

Each experiment turns a grid from the config into one or more tables of
records. Tables are written as ``<table>.json`` and/or ``<table>.csv`` next
to a ``manifest.json`` that pins the config hash, the master seed and the
package version. Randomness for every grid point comes from
:func:`holo_lwe_lab.seeding.derive_seed` applied to the master seed and a
label naming that point, so outputs do not depend on execution order.

Exit codes: 0 success, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import Base, __version__
from .ads_geometry import (
    entropy_gap_to_length_gap,
    geometry_from_qubits,
    rt_entropy,
    rt_geodesic_length,
)
from .cost_models import SieveModel, comparison_table, linear_fit
from .errors import LabError
from .gaussian_bulk import (
    build_chain_ground_covariance,
    bulk_entanglement_entropy,
    modes_for_tolerance,
    restrict_covariance,
    symplectic_spectrum,
)
from .lwe_etcf import LweParams, Mode, collision_fraction, preimage_census, sample_instance
from .probe_measurement import (
    Hypothesis,
    ProbeConfig,
    ShotCapExceeded,
    empirical_min_shots,
    holographic_distinguisher,
    predicted_sample_complexity,
    regime_report,
    z_for_error,
)
from .seeding import derive_seed, rng_for
from .state_entropy import entropy_gap, input_reduction, von_neumann_entropy

SCHEMA_VERSION = 1
EXPERIMENTS = ("etcf", "entropy", "geodesic", "bulk", "costs", "protocol")
SUBCOMMANDS = EXPERIMENTS + ("all",)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class ConfigError(Exception):
    pass


@dataclass
class Table:
    name: str
    anchor: str
    records: list
    summary: dict = field(default_factory=dict)


# ---------------------------------------------------------------- config


def _package_text(name: str) -> str:
    return resources.files(__package__).joinpath(name).read_text()


def default_config() -> dict:
    return yaml.safe_load(_package_text("default_config.yaml"))


def config_schema() -> dict:
    return json.loads(_package_text("config_schema.json"))


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path) -> dict:
    """Read, validate and default-fill a YAML config."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        user = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if user is None:
        user = {}
    schema = config_schema()
    try:
        jsonschema.validate(user, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    merged = _merge(default_config(), user)
    jsonschema.validate(merged, schema)
    return merged


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ------------------------------------------------------------ experiments


def _lwe_params(point: dict) -> LweParams:
    n, k = point["n"], point["k"]
    return LweParams(
        n=n,
        m_rows=point.get("m_rows", n + k),
        q=point["q"],
        sigma=point.get("sigma", 0.0),
        k=k,
        noiseless=point.get("noiseless", True),
    )


def _point_label(point: dict) -> str:
    return ",".join(f"{k}={point[k]}" for k in sorted(point))


def _guarded(record: dict, fn) -> dict:
    """Fill ``record`` from ``fn()``; a library error becomes an ``error`` field."""
    try:
        record.update(fn())
        record["error"] = ""
    except LabError as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


def run_etcf(cfg: dict, seed: int) -> list[Table]:
    records = []
    for point in cfg["etcf"]["instances"]:
        for mode in Mode:
            label = f"etcf/{_point_label(point)}/{mode.value}"
            s = derive_seed(seed, label)

            def work(point=point, mode=mode, s=s):
                params = _lwe_params(point)
                inst = sample_instance(params, mode, s)
                census = preimage_census(inst)
                return {
                    "domain_size": params.domain_size,
                    "image_size": len(census),
                    "max_preimages": max(census.values()),
                    "collision_fraction": collision_fraction(census),
                }

            rec = {**_point_defaults(point), "mode": mode.value, "seed": s}
            records.append(_guarded(rec, work))
    records.sort(key=lambda r: (r["q"], r["n"], r["k"], r["sigma"], r["mode"]))
    return [Table("etcf", "etcf-pair-definition", records)]


def _point_defaults(point: dict) -> dict:
    return {
        "q": point["q"],
        "n": point["n"],
        "k": point["k"],
        "m_rows": point.get("m_rows", point["n"] + point["k"]),
        "sigma": float(point.get("sigma", 0.0)),
        "noiseless": point.get("noiseless", True),
    }


def _function_pair(point: dict, seed: int, prefix: str):
    params = _lwe_params(point)
    label = f"{prefix}/{_point_label(point)}"
    s_f = derive_seed(seed, label + "/injective")
    s_g = derive_seed(seed, label + "/degenerate")
    return sample_instance(params, Mode.INJECTIVE, s_f), sample_instance(params, Mode.DEGENERATE, s_g), s_f, s_g


def run_entropy(cfg: dict, seed: int) -> list[Table]:
    records = []
    for point in cfg["entropy"]["grid"]:

        def work(point=point):
            f, g, s_f, s_g = _function_pair(point, seed, "entropy")
            return {
                "entropy_f_bits": von_neumann_entropy(input_reduction(f)),
                "entropy_g_bits": von_neumann_entropy(input_reduction(g)),
                "entropy_gap": entropy_gap(f, g),
                "seed_f": s_f,
                "seed_g": s_g,
            }

        records.append(_guarded(_point_defaults(point), work))
    records.sort(key=lambda r: (r["q"], r["n"], r["k"], r["sigma"]))
    return [Table("entropy", "function-state-entropy-gap", records)]


def run_geodesic(cfg: dict, seed: int) -> list[Table]:
    c = cfg["geodesic"]
    records = []
    for N in sorted(set(c["N"])):
        geom = geometry_from_qubits(N, c["kappa"], c["epsilon"])
        for ell in sorted(set(c["intervals"])):

            def work(ell=ell):
                L = rt_geodesic_length(geom, ell)
                cft = geom.central_charge / 3 * math.log(ell / geom.epsilon)
                S = rt_entropy(geom, L)
                return {
                    "L": L,
                    "S_nats": S,
                    "S_bits": rt_entropy(geom, L, Base.BITS),
                    "S_cft_nats": cft,
                    "relative_deviation": abs(S - cft) / cft if cft else 0.0,
                }

            rec = {"N": N, "kappa": c["kappa"], "epsilon": c["epsilon"], "ell": ell, "G_N": geom.G_N,
                   "central_charge": geom.central_charge, "kind": "interval", "dS_bits": 0.0}
            records.append(_guarded(rec, work))
        for dS in sorted(set(c["dS_bits"])):
            records.append(
                {"N": N, "kappa": c["kappa"], "epsilon": c["epsilon"], "ell": 0.0, "G_N": geom.G_N,
                 "central_charge": geom.central_charge, "kind": "length_gap", "dS_bits": dS,
                 "delta_L": entropy_gap_to_length_gap(geom, dS), "error": ""}
            )
    records.sort(key=lambda r: (r["N"], r["kind"], r["ell"], r["dS_bits"]))
    return [Table("geodesic", "rt-formula-brown-henneaux", records)]


def run_bulk(cfg: dict, seed: int) -> list[Table]:
    c = cfg["bulk"]
    cov = build_chain_ground_covariance(c["D"], c["mass0"], c["coupling"])
    records = [
        {"region": "all", "ell": c["D"], "S_nats": bulk_entanglement_entropy(cov), "nu_min": 0.5,
         "nu_max": 0.5, "modes_for_tolerance": 0, "error": ""}
    ]
    ells, entropies = [], []
    for ell in sorted(set(c["ells"])):

        def work(ell=ell):
            A = restrict_covariance(cov, range(ell))
            nus = symplectic_spectrum(A).nus
            S = bulk_entanglement_entropy(A)
            comp = bulk_entanglement_entropy(restrict_covariance(cov, range(ell, c["D"]))) if ell < c["D"] else S
            return {
                "S_nats": S,
                "S_complement_nats": comp,
                "nu_min": float(nus.min()),
                "nu_max": float(nus.max()),
                "modes_for_tolerance": modes_for_tolerance(A, c["tolerance"]),
            }

        rec = _guarded({"region": "end_interval", "ell": ell}, work)
        if not rec["error"]:
            ells.append(ell)
            entropies.append(rec["S_nats"])
        records.append(rec)
    summary = {"D": c["D"], "mass0": c["mass0"], "coupling": c["coupling"], "tolerance": c["tolerance"]}
    if len(ells) >= 2:
        fit = linear_fit(np.log(ells), entropies)
        summary.update(log_slope=fit.slope, log_intercept=fit.intercept, log_r2=fit.r2)
    for r in records:
        r.update({k: summary[k] for k in ("D", "mass0", "coupling")})
    records.sort(key=lambda r: (r["region"], r["ell"]))
    return [Table("bulk", "bulk-entanglement-gaussian", records, summary)]


def run_costs(cfg: dict, seed: int) -> list[Table]:
    c = cfg["costs"]
    table = comparison_table(
        c["N"],
        alpha=c["alpha"],
        poly_degree=c["poly_degree"],
        bulk_exponent=c["bulk_exponent"],
        sieve=SieveModel(c["sieve"]),
        bandwidth=c["bandwidth"],
    )
    records = sorted(table.rows(), key=lambda r: (r["N"], r["label"]))
    summary = {label: {"slope": f.slope, "intercept": f.intercept, "r2": f.r2} for label, f in table.fits.items()}
    return [Table("costs", "lattice-vs-holographic-cost", records, summary)]


def _sample_complexity(c: dict, seed: int) -> Table:
    records = []
    for m in sorted(set(c["m"])):
        for L in sorted(set(c["L"])):
            for dL in sorted(set(c["dL"])):
                z = z_for_error(c["target_error"]) if c["z"] == "matched" else float(c["z"])
                probe = ProbeConfig(m=m, sigma_shot=c["sigma_shot"], z=z)
                label = f"sample_complexity/m={m!r}/L={L!r}/dL={dL!r}"
                s = derive_seed(seed, label)
                sc = predicted_sample_complexity(probe, L, dL)
                rec = {"m": m, "L": L, "dL": dL, "z": z, "sigma_shot": c["sigma_shot"],
                       "target_error": c["target_error"], "trials": c["trials"], "seed": s,
                       "M_exact": sc.M_exact, "M_bare": sc.M_bare, "delta_G": sc.delta_G}
                try:
                    M = empirical_min_shots(probe, L, dL, c["target_error"], c["trials"], np.random.default_rng(s))
                    rec.update(M_emp=M, ratio=M / sc.M_exact, cap_exceeded=False, error="")
                except ShotCapExceeded as exc:
                    rec.update(M_emp=None, ratio=None, cap_exceeded=True, error=str(exc))
                records.append(rec)
    good = [r for r in records if r["M_emp"] is not None]
    summary = {}
    if len({r["M_exact"] for r in good}) >= 2:
        fit = linear_fit([math.log(r["M_exact"]) for r in good], [math.log(r["M_emp"]) for r in good])
        summary = {"slope_fit": fit.slope, "intercept_fit": fit.intercept, "r2_fit": fit.r2}
    for r in records:
        r.update({k: summary.get(k) for k in ("slope_fit", "intercept_fit", "r2_fit")})
    return Table("protocol_sample_complexity", "geodesic-measurement-cost", records, summary)


def _distinguisher(c: dict, seed: int) -> Table:
    point = c["etcf"]
    base = {**{f"etcf_{k}": v for k, v in _point_defaults(point).items()}, "N": c["N"], "kappa": c["kappa"],
            "m": c["m"], "L0": c["L0"], "z": c["z"], "repetitions": c["repetitions"]}
    try:
        f, g, _, _ = _function_pair(point, seed, "protocol")
        dS = entropy_gap(f, g)
    except LabError as exc:
        return Table("protocol_distinguisher", "holographic-entropy-distinguisher",
                     [{**base, "error": f"{type(exc).__name__}: {exc}"}])
    geom = geometry_from_qubits(c["N"], c["kappa"])
    probe = ProbeConfig(m=c["m"], sigma_shot=c["sigma_shot"], N_qubits=c["N"], kappa=c["kappa"], z=c["z"])
    records = []
    dL = entropy_gap_to_length_gap(geom, dS)
    M_exact = predicted_sample_complexity(probe, c["L0"] - dL, dL).M_exact
    for budget_name, budget in (("M_exact", M_exact), ("one_shot", 1)):
        for truth in Hypothesis:
            label = f"distinguisher/{budget_name}/{truth.value}"
            s = derive_seed(seed, label)
            rec = {**base, "entropy_gap_bits": dS, "delta_L": dL, "M_exact": M_exact, "budget": budget_name,
                   "truth": truth.value, "seed": s}

            def work(truth=truth, budget=budget, s=s):
                out = holographic_distinguisher(geom, probe, truth, dS, budget, np.random.default_rng(s), L0=c["L0"],
                                                repetitions=c["repetitions"])
                return {"decision": out.decision.value, "success_estimate": out.success_estimate,
                        "shots_used": out.shots_used, "regime_valid": out.regime_valid,
                        "backreaction_ratio": out.backreaction_ratio}

            records.append(_guarded(rec, work))
    records.sort(key=lambda r: (r["budget"], r["truth"]))
    return Table("protocol_distinguisher", "holographic-entropy-distinguisher", records)


def _regimes(c: dict, sc: dict, seed: int) -> Table:
    probe = ProbeConfig(m=1.0, sigma_shot=sc["sigma_shot"], kappa=c["kappa"],
                        z=z_for_error(sc["target_error"]) if sc["z"] == "matched" else float(sc["z"]))
    records = []
    for N in sorted(set(c["N"])):
        rep = regime_report(N, c["kappa"], probe, c["dS_bits"], c["L"])
        for name in ("heavy", "light"):
            records.append({"N": N, "kappa": c["kappa"], "dS_bits": c["dS_bits"], "L": c["L"],
                            "delta_L": rep["delta_L"], "regime": name, "ln_N_prime": None,
                            "blowup_factor": None, **rep[name]})
    records.sort(key=lambda r: (r["N"], r["regime"]))
    return Table("protocol_regimes", "probe-mass-regimes", records)


def run_protocol(cfg: dict, seed: int) -> list[Table]:
    c = cfg["protocol"]
    return [
        _sample_complexity(c["sample_complexity"], seed),
        _distinguisher(c["distinguisher"], seed),
        _regimes(c["regime"], c["sample_complexity"], seed),
    ]


RUNNERS = {
    "etcf": run_etcf,
    "entropy": run_entropy,
    "geodesic": run_geodesic,
    "bulk": run_bulk,
    "costs": run_costs,
    "protocol": run_protocol,
}


# ---------------------------------------------------------------- output


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def table_csv(table: Table) -> str:
    columns = sorted({k for r in table.records for k in r} | {"anchor"})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in table.records:
        row = {**r, "anchor": table.anchor}
        w.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def table_json(table: Table) -> str:
    doc = {
        "table": table.name,
        "anchor": table.anchor,
        "schema_version": SCHEMA_VERSION,
        "records": [{**r, "anchor": table.anchor} for r in table.records],
        "summary": table.summary,
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(subcommand: str, cfg: dict, seed: int, out_dir: Path, fmt: str = "both") -> dict:
    """Run one experiment (or all of them) and write tables plus a manifest.

    Returns the manifest dictionary.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    names = EXPERIMENTS if subcommand == "all" else (subcommand,)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {}
    experiments = {}
    for name in names:
        tables = RUNNERS[name](cfg, seed)
        n_err = sum(1 for t in tables for r in t.records if r.get("error"))
        experiments[name] = {"tables": [t.name for t in tables], "failed_records": n_err}
        for t in tables:
            payloads = []
            if fmt in ("json", "both"):
                payloads.append((f"{t.name}.json", table_json(t)))
            if fmt in ("csv", "both"):
                payloads.append((f"{t.name}.csv", table_csv(t)))
            for fname, text in payloads:
                atomic_write(out_dir / fname, text)
                outputs[fname] = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "artifact": "holo-lwe-lab",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "seed": seed,
        "format": fmt,
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "experiments": experiments,
        "outputs": dict(sorted(outputs.items())),
    }
    atomic_write(out_dir / "manifest.json", json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holo-lwe-lab", description="Seeded experiments on LWE function states, "
                                "holographic entropy and measurement cost.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="YAML config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--out", default="results", help="output directory (default: ./results)")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be a 64-bit unsigned integer")
            cfg["seed"] = args.seed
    except ConfigError as exc:
        print(f"holo-lwe-lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(args.subcommand, cfg, cfg["seed"], Path(args.out), args.format)
    except OSError as exc:
        print(f"holo-lwe-lab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - any other failure is an internal error
        print(f"holo-lwe-lab: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    failed = sum(e["failed_records"] for e in manifest["experiments"].values())
    print(f"wrote {len(manifest['outputs'])} files to {args.out} ({failed} failed records)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
