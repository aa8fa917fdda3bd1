"""Command line front end.

Subcommands map onto the pipeline stages: ``ed`` (exact ground state),
``scan`` (full-basis local-energy fluctuations under shot noise),
``gfmc`` (chains + estimators for one size), ``sweep`` (the (L, M) grid
with fits) and ``extrapolate`` (shot count and wall time at a target
size). Flags override config-file values; every output directory gets a
run_manifest.json that pins config hash, seed and versions, so a run can
be reproduced byte for byte (the manifest's own timestamp and wall time
are the only non-deterministic fields anywhere).
"""

import argparse
import hashlib
import json
import os
import platform
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import ConfigError, DEFAULT_BASE_SEED, RunConfig, parse_config
from .exact import ground_state
from .gfmc import (
    GfmcConfig,
    average_local_energy,
    reweighted_energy,
    run_chain,
)
from .model import TfiModel
from .scaling import (
    run_sweep,
    runtime_for_shots,
    extrapolate_runtime,
    summarize,
    write_sweep_csv,
)
from .seeding import derive_seed
from .shots import local_energy_scan, noisy_amplitudes, sample_counts, write_scan_csv
from .trial import JastrowParams, build_table

MANIFEST_SCHEMA = "run_manifest.v1"


def _config_hash(cfg_dict: dict) -> str:
    """Hash of the computation-defining config; output location excluded."""
    body = {k: v for k, v in cfg_dict.items() if k != "output"}
    canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _versions() -> dict:
    try:
        import numba
        numba_version = numba.__version__
    except ImportError:
        numba_version = None
    return {
        "shotgfmc": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "numba": numba_version,
        "kernel_backend": BACKEND,
    }


def _write_manifest(out_dir: str, command: str, cfg: RunConfig, outputs: list,
                    wall_time: float) -> str:
    cfg_dict = cfg.to_dict()
    manifest = {
        "schema_version": MANIFEST_SCHEMA,
        "command": command,
        "config": cfg_dict,
        "config_hash": _config_hash(cfg_dict),
        "base_seed": cfg.base_seed,
        "versions": _versions(),
        "outputs": sorted(outputs),
        "wall_time_s": wall_time,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return path


def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig().validate()
    if getattr(args, "seed", None) is not None:
        cfg.base_seed = args.seed
    if getattr(args, "out_dir", None) is not None:
        cfg.out_dir = args.out_dir
    return cfg


def _override(cfg: RunConfig, args, mapping: dict) -> RunConfig:
    for attr, flag in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg.validate()


def _parse_int_list(text: str, what: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what} must be a comma-separated integer list: {text!r}") from exc


def _parse_float_list(text: str, what: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"{what} must be a comma-separated number list: {text!r}") from exc


def _gfmc_config(cfg: RunConfig, seed: int = 0) -> GfmcConfig:
    lam = None if cfg.lambda_shift == "auto" else float(cfg.lambda_shift)
    return GfmcConfig(lambda_shift=lam, chain_length=cfg.chain_length,
                      warmup=cfg.warmup, l_reweight=cfg.l_reweight, seed=seed)


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_ed(args) -> int:
    cfg = _load_config(args)
    if args.L is not None:
        cfg.L_list = [args.L]
    cfg = _override(cfg, args, {"J": "J", "Gamma": "Gamma"})
    t0 = time.perf_counter()
    m = TfiModel(cfg.L_list[0], cfg.J, cfg.Gamma)
    gs = ground_state(m, tol=args.tol)
    payload = {
        "L": m.L,
        "J": m.J,
        "Gamma": m.Gamma,
        "E0": gs.energy,
        "E0_per_site": gs.energy / m.L,
        "residual": gs.residual,
        "iterations": gs.iterations,
    }
    _print_json(payload)
    if args.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, "ed.json")
        with open(path, "w") as f:
            json.dump({"schema_version": "ed.v1", **payload}, f, indent=1, sort_keys=True)
            f.write("\n")
        _write_manifest(cfg.out_dir, "ed", cfg, ["ed.json"], time.perf_counter() - t0)
    return 0


def _cmd_scan(args) -> int:
    cfg = _load_config(args)
    if args.L is not None:
        cfg.L_list = [args.L]
    cfg = _override(cfg, args, {"trial_kind": "trial", "lambda1": "lambda1",
                                "lambda2": "lambda2", "M0": "M0",
                                "replicates": "reps"})
    t0 = time.perf_counter()
    if cfg.M0 is None:
        raise ConfigError("scan needs --M0 (or noise.M0 in the config)")
    m = TfiModel(cfg.L_list[0], cfg.J, cfg.Gamma)
    trial = _build_trial(cfg, m)
    scan = local_energy_scan(m, trial, cfg.M0, cfg.replicates, cfg.base_seed)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "local_energy_scan.csv")
    write_scan_csv(scan, path)
    _write_manifest(cfg.out_dir, "scan", cfg, ["local_energy_scan.csv"],
                    time.perf_counter() - t0)
    _print_json({"written": [path], "L": m.L, "M0": cfg.M0, "M": scan.M,
                 "replicates": cfg.replicates})
    return 0


def _build_trial(cfg: RunConfig, m: TfiModel):
    if cfg.trial_kind == "exact-groundstate":
        gs = ground_state(m)
        return build_table("exact-groundstate", m, vector=gs.vector)
    return build_table("jastrow", m, params=JastrowParams(cfg.lambda1, cfg.lambda2))


def _cmd_gfmc(args) -> int:
    cfg = _load_config(args)
    if args.L is not None:
        cfg.L_list = [args.L]
    cfg = _override(cfg, args, {"trial_kind": "trial", "chain_length": "chain_length",
                                "warmup": "warmup", "l_reweight": "l_reweight",
                                "replicates": "replicates"})
    if args.lambda_shift is not None:
        cfg.lambda_shift = args.lambda_shift
        cfg.validate()
    t0 = time.perf_counter()
    m = TfiModel(cfg.L_list[0], cfg.J, cfg.Gamma)
    trial = _build_trial(cfg, m)
    gs_energy = ground_state(m).energy
    base = _gfmc_config(cfg)
    M = args.M
    rew, avg = [], []
    chain_rows = []
    for rep in range(cfg.replicates):
        rng = np.random.default_rng(derive_seed(cfg.base_seed, m.L, M or 0, rep))
        table = trial
        if M is not None:
            table = noisy_amplitudes(sample_counts(trial.probabilities, M, rng),
                                     {"rep": rep})
        record = run_chain(base, table, m, rng)
        rew.append(reweighted_energy(record).estimate / m.L)
        avg.append(average_local_energy(record) / m.L)
        if args.dump_chain:
            chain_rows.append(record)
    rew_arr, avg_arr = np.array(rew), np.array(avg)

    def _stats(a):
        out = {"per_replicate": [float(v) for v in a], "mean": float(a.mean())}
        if len(a) > 1:
            out["std_error"] = float(a.std(ddof=1) / np.sqrt(len(a)))
        return out

    payload = {
        "L": m.L, "J": m.J, "Gamma": m.Gamma, "trial": cfg.trial_kind,
        "M": M, "lambda_shift": base.resolve_lambda_shift(m),
        "chain_length": cfg.chain_length, "warmup": cfg.warmup,
        "l_reweight": cfg.l_reweight, "replicates": cfg.replicates,
        "E0_per_site": gs_energy / m.L,
        "reweighted": _stats(rew_arr),
        "average": _stats(avg_arr),
        "error_per_site": {
            "reweighted": float(rew_arr.mean() - gs_energy / m.L),
            "average": float(avg_arr.mean() - gs_energy / m.L),
        },
    }
    _print_json(payload)
    if args.out_dir or args.dump_chain:
        os.makedirs(cfg.out_dir, exist_ok=True)
        outputs = ["gfmc_result.json"]
        with open(os.path.join(cfg.out_dir, "gfmc_result.json"), "w") as f:
            json.dump({"schema_version": "gfmc_result.v1", **payload}, f,
                      indent=1, sort_keys=True)
            f.write("\n")
        for rep, record in enumerate(chain_rows):
            name = f"chain_{rep}.csv"
            with open(os.path.join(cfg.out_dir, name), "w") as f:
                f.write("# schema=chain_record.v1\n")
                f.write("n,state,b,e\n")
                for n in range(len(record)):
                    f.write(f"{n},{record.states[n]},{float(record.b_values[n])!r},"
                            f"{float(record.e_values[n])!r}\n")
            outputs.append(name)
        _write_manifest(cfg.out_dir, "gfmc", cfg, outputs, time.perf_counter() - t0)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if args.L is not None:
        cfg.L_list = _parse_int_list(args.L, "--L")
    if args.M is not None:
        cfg.M_list = _parse_int_list(args.M, "--M")
    if args.targets is not None:
        cfg.targets = _parse_float_list(args.targets, "--targets")
    if args.window is not None:
        cfg.fit_window = _parse_float_list(args.window, "--window")
    cfg = _override(cfg, args, {"trial_kind": "trial", "replicates": "replicates",
                                "chain_length": "chain_length",
                                "crossing_band": "band",
                                "crossing_method": "crossing_method",
                                "estimator": "estimator"})
    t0 = time.perf_counter()
    os.makedirs(cfg.out_dir, exist_ok=True)
    cache_path = os.path.join(cfg.out_dir, "e0_cache.json")
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    points = run_sweep(
        cfg.M_list, cfg.L_list, cfg.trial_kind, _gfmc_config(cfg),
        replicates=cfg.replicates, J=cfg.J, Gamma=cfg.Gamma,
        base_seed=cfg.base_seed, estimator=cfg.estimator,
        jastrow=JastrowParams(cfg.lambda1, cfg.lambda2),
        threads=threads, e0_cache_path=cache_path,
    )
    result = summarize(points, targets=cfg.targets, window=tuple(cfg.fit_window),
                       band=cfg.crossing_band, crossing_method=cfg.crossing_method)
    outputs = []
    if "csv" in cfg.formats:
        write_sweep_csv(points, os.path.join(cfg.out_dir, "sweep_points.csv"))
        outputs.append("sweep_points.csv")
    summary = result.to_dict()
    cfg_dict = cfg.to_dict()
    summary["provenance"] = {
        "base_seed": cfg.base_seed,
        "config_hash": _config_hash(cfg_dict),
        "tool_version": __version__,
    }
    if "json" in cfg.formats:
        with open(os.path.join(cfg.out_dir, "scaling_summary.json"), "w") as f:
            json.dump(summary, f, indent=1, sort_keys=True)
            f.write("\n")
        outputs.append("scaling_summary.json")
    outputs.append("e0_cache.json")
    _write_manifest(cfg.out_dir, "sweep", cfg, outputs, time.perf_counter() - t0)
    _print_json(summary)
    return 0


def _cmd_extrapolate(args) -> int:
    t0 = time.perf_counter()
    fitted = extrapolate_runtime(args.a, args.b, args.L, args.layers, args.clock_hz)
    payload = {
        "a": args.a, "b": args.b, "L": args.L,
        "circuit_layers": args.layers, "gate_clock_hz": args.clock_hz,
        "fitted": {"shots": fitted.shots, "seconds": fitted.seconds,
                   "years": fitted.years},
    }
    if args.reference_shots is not None:
        ref = runtime_for_shots(args.reference_shots, args.layers, args.clock_hz)
        payload["reference"] = {"shots": ref.shots, "seconds": ref.seconds,
                                "years": ref.years}
        payload["note"] = (
            "fitted uses shots = a*2^(b*L); reference uses the explicitly "
            "given shot count; the two differ when the quoted budget was "
            "rounded or derived from a different target"
        )
    _print_json(payload)
    if args.out_dir:
        cfg = _load_config(args)
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "extrapolate.json"), "w") as f:
            json.dump({"schema_version": "extrapolate.v1", **payload}, f,
                      indent=1, sort_keys=True)
            f.write("\n")
        _write_manifest(cfg.out_dir, "extrapolate", cfg, ["extrapolate.json"],
                        time.perf_counter() - t0)
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_common(sp) -> None:
    sp.add_argument("--config", help="JSON config file (flags override it)")
    sp.add_argument("--seed", type=int, help="base seed (overrides config)")
    sp.add_argument("--out-dir", help="output directory")
    sp.add_argument("--threads", type=int,
                    help="worker process cap (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shotgfmc",
        description="GFMC on the transverse-field Ising chain under "
                    "emulated measurement shot noise",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ed = sub.add_parser("ed", help="exact ground state via Lanczos")
    ed.add_argument("--L", type=int)
    ed.add_argument("--J", type=float)
    ed.add_argument("--Gamma", type=float)
    ed.add_argument("--tol", type=float, default=1e-10)
    _add_common(ed)
    ed.set_defaults(handler=_cmd_ed)

    scan = sub.add_parser("scan", help="full-basis local-energy scan under shot noise")
    scan.add_argument("--L", type=int)
    scan.add_argument("--M0", type=int, help="shots per basis state; M = M0 * 2^L")
    scan.add_argument("--reps", type=int, help="independent measurement realizations")
    scan.add_argument("--trial", choices=("jastrow", "exact-groundstate"))
    scan.add_argument("--lambda1", type=float)
    scan.add_argument("--lambda2", type=float)
    _add_common(scan)
    scan.set_defaults(handler=_cmd_scan)

    gf = sub.add_parser("gfmc", help="run chains and estimate the energy")
    gf.add_argument("--L", type=int)
    gf.add_argument("--trial", choices=("jastrow", "exact-groundstate"))
    gf.add_argument("--M", type=int, help="shot budget; omit for noiseless amplitudes")
    gf.add_argument("--replicates", type=int)
    gf.add_argument("--chain-length", type=int, dest="chain_length")
    gf.add_argument("--warmup", type=int)
    gf.add_argument("--l-reweight", type=int, dest="l_reweight")
    gf.add_argument("--lambda-shift", type=float, dest="lambda_shift")
    gf.add_argument("--dump-chain", action="store_true",
                    help="also write per-step (n, state, b, e) CSVs")
    _add_common(gf)
    gf.set_defaults(handler=_cmd_gfmc)

    sw = sub.add_parser("sweep", help="(L, M) sweep with scaling fits")
    sw.add_argument("--L", help="comma list of sizes, e.g. 6,8,10,12")
    sw.add_argument("--M", help="comma list of shot budgets (default: per-L geometric grid)")
    sw.add_argument("--trial", choices=("jastrow", "exact-groundstate"))
    sw.add_argument("--replicates", type=int)
    sw.add_argument("--chain-length", type=int, dest="chain_length")
    sw.add_argument("--targets", help="comma list of per-site error targets")
    sw.add_argument("--window", help="prefactor fit window lo,hi")
    sw.add_argument("--band", type=float, help="crossing fit band factor")
    sw.add_argument("--crossing-method", choices=("local", "prefactor"),
                    dest="crossing_method")
    sw.add_argument("--estimator", choices=("reweighted", "average"))
    _add_common(sw)
    sw.set_defaults(handler=_cmd_sweep)

    ex = sub.add_parser("extrapolate", help="shot count and wall time at size L")
    ex.add_argument("--a", type=float, required=True)
    ex.add_argument("--b", type=float, required=True)
    ex.add_argument("--L", type=int, required=True)
    ex.add_argument("--layers", type=int, default=40,
                    help="circuit depth per shot in gate layers")
    ex.add_argument("--clock-hz", type=float, default=1e4, dest="clock_hz")
    ex.add_argument("--reference-shots", type=float, dest="reference_shots",
                    help="also report wall time at this explicit shot count")
    _add_common(ex)
    ex.set_defaults(handler=_cmd_extrapolate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ValueError, OverflowError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
