"""Single-backend kernel timing, used by bench/bench_kernels.py.

Prints one JSON line: backend, chain and estimator timings, and a digest
of the trajectory so runs under different backends can be checked for
bit-identical output.

    SHOTGFMC_BACKEND=numpy python -m shotgfmc.bench --L 12 --steps 200000
"""

import argparse
import hashlib
import json
import time

import numpy as np

from ._kernels import BACKEND
from .gfmc import GfmcConfig, reweighted_energy, run_chain
from .model import TfiModel
from .trial import build_table


def main(argv=None) -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--L", type=int, default=12)
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args(argv)

    m = TfiModel(args.L)
    trial = build_table("jastrow", m)
    cfg = GfmcConfig(chain_length=args.steps, warmup=1000, seed=args.seed)

    # first call includes JIT compilation; time it separately
    t0 = time.perf_counter()
    record = run_chain(cfg, trial, m)
    first = time.perf_counter() - t0

    best_chain = min(_timed(lambda: run_chain(cfg, trial, m)) for _ in range(args.repeat))
    best_est = min(_timed(lambda: reweighted_energy(record)) for _ in range(args.repeat))

    digest = hashlib.sha256()
    digest.update(record.states.tobytes())
    digest.update(record.b_values.tobytes())

    print(json.dumps({
        "backend": BACKEND,
        "L": args.L,
        "steps": args.steps,
        "first_call_s": first,
        "chain_s": best_chain,
        "steps_per_s": args.steps / best_chain,
        "reweight_s": best_est,
        "estimate": reweighted_energy(record).estimate,
        "trajectory_sha256": digest.hexdigest(),
    }))
    return 0


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


if __name__ == "__main__":
    raise SystemExit(main())
