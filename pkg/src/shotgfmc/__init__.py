"""GFMC on the transverse-field Ising chain with emulated measurement shot noise.

The package has three layers:

* spin chain primitives and exact references (``model``, ``trial``, ``exact``),
* the stochastic machinery (``shots``, ``gfmc``),
* experiment orchestration and fits (``scaling``), driven by the ``shotgfmc`` CLI.
"""

__version__ = "0.1.0"

from .model import TfiModel, connected_set, diagonal_energy, flip, spin_value
from .trial import AmplitudeTable, JastrowParams, build_table
from .exact import GroundStateResult, apply_hamiltonian, ground_state, variational_energy
from .shots import ShotCounts, noisy_amplitudes, sample_counts, local_energy_scan
from .gfmc import (
    ChainRecord,
    GfmcConfig,
    UndefinedLocalEnergyError,
    average_local_energy,
    green_row,
    local_energy,
    reweighted_energy,
    run_chain,
    transition_step,
)
from .scaling import (
    SweepPoint,
    crossing_M,
    extrapolate_runtime,
    fit_exponential,
    fit_prefactor,
    run_sweep,
    summarize,
)
from .seeding import derive_seed

__all__ = [
    "TfiModel",
    "spin_value",
    "flip",
    "diagonal_energy",
    "connected_set",
    "JastrowParams",
    "AmplitudeTable",
    "build_table",
    "GroundStateResult",
    "apply_hamiltonian",
    "ground_state",
    "variational_energy",
    "ShotCounts",
    "sample_counts",
    "noisy_amplitudes",
    "local_energy_scan",
    "GfmcConfig",
    "ChainRecord",
    "UndefinedLocalEnergyError",
    "local_energy",
    "green_row",
    "transition_step",
    "run_chain",
    "reweighted_energy",
    "average_local_energy",
    "SweepPoint",
    "run_sweep",
    "fit_prefactor",
    "crossing_M",
    "fit_exponential",
    "summarize",
    "extrapolate_runtime",
    "derive_seed",
]
