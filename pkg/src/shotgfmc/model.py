"""Ferromagnetic transverse-field Ising chain with periodic boundaries.

Basis configurations are L-bit integers: bit k holds spin s_{k} with the
mapping 0 <-> s=+1, 1 <-> s=-1. Site indices are 0-based. The bond sum is
the literal periodic sum over k = 0..L-1, so L=2 counts its single bond
twice.
"""

from dataclasses import dataclass

import numpy as np

# full amplitude tables downstream cap the chain length; the model itself
# only requires L >= 2
MAX_TABLE_L = 26


@dataclass(frozen=True)
class TfiModel:
    """Chain length L, ZZ coupling J > 0 and transverse field Gamma >= 0."""

    L: int
    J: float = 1.0
    Gamma: float = 1.0

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L!r}")
        if not np.isfinite(self.J) or self.J <= 0:
            raise ValueError(f"J must be a positive finite real, got {self.J!r}")
        if not np.isfinite(self.Gamma) or self.Gamma < 0:
            raise ValueError(f"Gamma must be a nonnegative finite real, got {self.Gamma!r}")

    @property
    def n_states(self) -> int:
        return 1 << self.L

    @property
    def mask(self) -> int:
        return (1 << self.L) - 1


def _check_state(x: int, m: TfiModel) -> None:
    if not 0 <= x < m.n_states:
        raise ValueError(f"configuration {x!r} out of range for L={m.L}")


def spin_value(x: int, k: int, m: TfiModel) -> int:
    """Spin at site k: +1 for a clear bit, -1 for a set bit."""
    _check_state(x, m)
    if not 0 <= k < m.L:
        raise ValueError(f"site index {k!r} out of range for L={m.L}")
    return 1 - 2 * ((x >> k) & 1)


def flip(x: int, k: int, m: TfiModel) -> int:
    """Configuration with the spin at site k flipped."""
    _check_state(x, m)
    if not 0 <= k < m.L:
        raise ValueError(f"site index {k!r} out of range for L={m.L}")
    return x ^ (1 << k)


def diagonal_energy(x: int, m: TfiModel) -> float:
    """-J * sum_k s_k s_{k+1} over the L periodic bonds."""
    _check_state(x, m)
    acc = 0
    for k in range(m.L):
        acc += 1 if ((x >> k) & 1) == ((x >> ((k + 1) % m.L)) & 1) else -1
    return -m.J * acc


def connected_set(x: int, m: TfiModel) -> list[tuple[int, float]]:
    """All (x', <x'|H|x>) with a nonzero structural matrix element.

    Exactly L+1 pairs: the diagonal entry first, then the L single-spin
    flips in ascending site order. Off-diagonal elements are emitted even
    when Gamma == 0 so the shape never depends on the couplings.
    """
    _check_state(x, m)
    out = [(x, diagonal_energy(x, m))]
    h = -m.Gamma
    for k in range(m.L):
        out.append((x ^ (1 << k), h))
    return out


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def bond_correlations(m: TfiModel, offset: int) -> np.ndarray:
    """sum_k s_k s_{k+offset mod L} for every basis state, as int64."""
    L = m.L
    idx = np.arange(m.n_states, dtype=np.int64)
    d = offset % L
    rot = ((idx >> d) | ((idx & ((1 << d) - 1)) << (L - d))) if d else idx
    return L - 2 * _popcount(idx ^ rot)


def all_diagonal_energies(m: TfiModel) -> np.ndarray:
    """diagonal_energy for every basis state in index order."""
    return -m.J * bond_correlations(m, 1).astype(np.float64)
