"""Deterministic 64-bit stream derivation for sweep tasks.

Every (base_seed, L, M, rep) task owns an independent generator seeded by
``derive_seed``. The mixer absorbs each input with XOR and runs the
splitmix64 finalizer after every absorption, so any input change
avalanches through all output bits.
"""

_MASK = (1 << 64) - 1


def splitmix64(z: int) -> int:
    """One splitmix64 finalizer round on a 64-bit value."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(base_seed: int, L: int, M: int, rep: int) -> int:
    """Mix (base_seed, L, M, rep) into one 64-bit stream seed."""
    s = splitmix64(base_seed & _MASK)
    for v in (L, M, rep):
        s = splitmix64(s ^ (int(v) & _MASK))
    return s
