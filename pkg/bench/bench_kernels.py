#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Runs `python -m shotgfmc.bench` once per backend in a subprocess (the
backend is fixed at import time, so each needs its own interpreter),
prints both timings and the speedup, and verifies the two backends
produced bit-identical trajectories.
"""

import argparse
import json
import os
import subprocess
import sys


def run_backend(backend: str, extra: list) -> dict:
    env = dict(os.environ, SHOTGFMC_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-m", "shotgfmc.bench", *extra],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--L", type=int, default=12)
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    extra = ["--L", str(args.L), "--steps", str(args.steps), "--repeat", str(args.repeat)]

    results = {}
    for backend in ("numba", "numpy"):
        print(f"running backend={backend} ...", flush=True)
        results[backend] = run_backend(backend, extra)

    nb, np_ = results["numba"], results["numpy"]
    print(f"\nL={args.L}  steps={args.steps}")
    print(f"{'backend':<8} {'chain [s]':>12} {'steps/s':>14} {'reweight [s]':>14} {'first call [s]':>16}")
    for name, r in results.items():
        print(f"{name:<8} {r['chain_s']:>12.4f} {r['steps_per_s']:>14.0f} "
              f"{r['reweight_s']:>14.5f} {r['first_call_s']:>16.3f}")
    print(f"\nchain speedup (numba vs numpy): {np_['chain_s'] / nb['chain_s']:.1f}x")

    if nb["trajectory_sha256"] != np_["trajectory_sha256"]:
        print("MISMATCH: backends produced different trajectories!", file=sys.stderr)
        return 1
    print(f"trajectories identical (sha256 {nb['trajectory_sha256'][:16]}...), "
          f"estimate {nb['estimate']:.10f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
