"""Single-walker Green's function Monte Carlo.

The walker moves with the importance-sampled propagator built from
lam*1 - H and a trial amplitude table; only the sequence of normalization
factors b and local energies e = lam - b is kept. The ground-state
estimator multiplies a sliding window of l past b factors into each
sample's weight (in the log domain, max-shifted before exponentiation);
the plain chain average of e is also exposed.

The walker can only step onto states with nonzero amplitude, so tables
with zero entries (shot-noise tables) confine the walk to the measured
support.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._kernels import chain_fill, sliding_window_sums
from .model import TfiModel, all_diagonal_energies, diagonal_energy
from .trial import AmplitudeTable

DEFAULT_CHAIN_LENGTH = 50_000
DEFAULT_WARMUP = 1_000
DEFAULT_REWEIGHT_WINDOW = 100

# refresh cadence of the sliding log-weight sum (drift control)
_WINDOW_RECOMPUTE_EVERY = 10_000


class UndefinedLocalEnergyError(ValueError):
    """Local energy requested at a state with zero trial amplitude."""


def auto_lambda_shift(m: TfiModel) -> float:
    """Default diagonal shift: L*J + 2*Gamma.

    Any value above L*J keeps every propagator entry nonnegative; the two
    field units of headroom keep the projection per reweighting step fast
    enough that a window of ~100 factors converges the estimator. Requires
    Gamma > 0; pass an explicit shift otherwise.
    """
    lam = m.L * m.J + 2.0 * m.Gamma
    if lam <= m.L * m.J:
        raise ValueError("auto shift needs Gamma > 0; give lambda_shift explicitly")
    return lam


@dataclass(frozen=True)
class GfmcConfig:
    """Chain parameters. lambda_shift=None resolves to auto_lambda_shift."""

    lambda_shift: float | None = None
    chain_length: int = DEFAULT_CHAIN_LENGTH
    warmup: int = DEFAULT_WARMUP
    l_reweight: int = DEFAULT_REWEIGHT_WINDOW
    seed: int = 0

    def __post_init__(self):
        if self.chain_length <= self.warmup + self.l_reweight:
            raise ValueError(
                f"chain_length ({self.chain_length}) must exceed "
                f"warmup + l_reweight ({self.warmup} + {self.l_reweight})"
            )
        if self.warmup < 0 or self.l_reweight < 1:
            raise ValueError("warmup must be >= 0 and l_reweight >= 1")

    def resolve_lambda_shift(self, m: TfiModel) -> float:
        lam = self.lambda_shift if self.lambda_shift is not None else auto_lambda_shift(m)
        if lam <= m.L * m.J:
            raise ValueError(
                f"lambda_shift must exceed L*J = {m.L * m.J} to keep the "
                f"propagator nonnegative, got {lam}"
            )
        return float(lam)


@dataclass
class ChainRecord:
    """Per-step (state, b, e) after warmup; e[n] = lambda_shift - b[n] exactly."""

    states: np.ndarray
    b_values: np.ndarray
    e_values: np.ndarray
    config: GfmcConfig
    lambda_shift: float
    table_kind: str

    def __len__(self) -> int:
        return len(self.states)


def local_energy(x: int, t: AmplitudeTable, m: TfiModel) -> float:
    """<x|H|psi> / <x|psi> from the amplitude table."""
    ax = t.amps[x]
    if ax == 0.0:
        raise UndefinedLocalEnergyError(f"state {x} has zero amplitude")
    acc = 0.0
    for k in range(m.L):
        acc += t.amps[x ^ (1 << k)]
    return diagonal_energy(x, m) - m.Gamma * acc / ax


def local_energy_table(t: AmplitudeTable, m: TfiModel) -> tuple[np.ndarray, np.ndarray]:
    """Local energies for every basis state.

    Returns (e, defined): e[x] is NaN where the amplitude vanishes and
    defined is the boolean support mask. Zero-amplitude neighbors
    contribute nothing, exactly as in the single-state form.
    """
    idx = np.arange(m.n_states, dtype=np.int64)
    defined = t.amps > 0.0
    acc = np.zeros(m.n_states)
    for k in range(m.L):
        acc += t.amps[idx ^ (1 << k)]
    e = np.full(m.n_states, np.nan)
    e[defined] = (
        all_diagonal_energies(m)[defined] - m.Gamma * acc[defined] / t.amps[defined]
    )
    return e, defined


def green_row(x: int, t: AmplitudeTable, m: TfiModel, lam: float):
    """One row of the importance-sampled propagator.

    Returns (weights, b): weights in connected-set order (stay entry
    first, then flips by site), b their sum. b == lam - local_energy(x)
    up to roundoff.
    """
    ax = t.amps[x]
    if ax == 0.0:
        raise UndefinedLocalEnergyError(f"state {x} has zero amplitude")
    if lam <= m.L * m.J:
        raise ValueError(f"lambda shift {lam} must exceed L*J = {m.L * m.J}")
    weights = np.empty(m.L + 1)
    weights[0] = lam - diagonal_energy(x, m)
    for k in range(m.L):
        weights[k + 1] = m.Gamma * t.amps[x ^ (1 << k)] / ax
    if np.any(weights < 0):
        raise RuntimeError("negative propagator weight; invariant violated")
    return weights, float(weights.sum())


def transition_step(x: int, t: AmplitudeTable, m: TfiModel, lam: float,
                    rng: np.random.Generator) -> int:
    """Sample the next walker state by inverse CDF over the row of x."""
    weights, b = green_row(x, t, m, lam)
    target = rng.random() * b
    cum = 0.0
    for i in range(m.L + 1):
        cum += weights[i]
        if target < cum:
            return x if i == 0 else x ^ (1 << (i - 1))
    # roundoff pushed target past the accumulated total
    nz = np.nonzero(weights)[0]
    i = int(nz[-1])
    return x if i == 0 else x ^ (1 << (i - 1))


def _draw_initial_state(t: AmplitudeTable, rng: np.random.Generator) -> int:
    p = t.probabilities
    total = p.sum()
    if total <= 0.0:
        raise RuntimeError("amplitude table has no support")
    cdf = np.cumsum(p)
    return int(np.searchsorted(cdf, rng.random() * total, side="right"))


def run_chain(cfg: GfmcConfig, t: AmplitudeTable, m: TfiModel,
              rng: np.random.Generator | None = None) -> ChainRecord:
    """Generate one chain: seed -> initial state -> chain_length steps.

    The initial state is drawn from amps^2 (restricted to the support by
    construction); the record covers steps warmup .. chain_length-1.
    Identical (config, table, model) inputs reproduce the record bit for
    bit.
    """
    if t.L != m.L:
        raise ValueError("table and model sizes disagree")
    lam = cfg.resolve_lambda_shift(m)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    x0 = _draw_initial_state(t, rng)
    urand = rng.random(cfg.chain_length)
    n_rec = cfg.chain_length - cfg.warmup
    states = np.empty(n_rec, dtype=np.int64)
    bvals = np.empty(n_rec)
    wbuf = np.empty(m.L)
    chain_fill(t.amps, m.L, m.J, m.Gamma, lam, cfg.warmup, x0, urand,
               states, bvals, wbuf)
    return ChainRecord(states, bvals, lam - bvals, cfg, lam, t.kind)


class ReweightedEstimate(NamedTuple):
    estimate: float
    numerator: float
    denominator: float


def reweighted_energy(r: ChainRecord, l: int | None = None) -> ReweightedEstimate:
    """Ground-state energy estimate from the recorded (b, e) sequences.

    Each sample n >= l carries the product of the l preceding b factors,
    accumulated as a sliding sum of log b and max-shifted before
    exponentiation. The returned numerator and denominator share that
    common positive rescaling, which cancels in the ratio; they are
    exposed for inspecting how strongly the two sums correlate.
    """
    if l is None:
        l = r.config.l_reweight
    n = len(r)
    if n <= l:
        raise ValueError(f"record length {n} must exceed the window l={l}")
    if np.any(r.b_values <= 0):
        raise ValueError("all b factors must be positive")
    logb = np.log(r.b_values)
    log_weights = np.empty(n - l)
    sliding_window_sums(logb, l, _WINDOW_RECOMPUTE_EVERY, log_weights)
    g = np.exp(log_weights - log_weights.max())
    num = float(np.sum(g * r.e_values[l:]))
    den = float(np.sum(g))
    return ReweightedEstimate(num / den, num, den)


def average_local_energy(r: ChainRecord) -> float:
    """Plain post-warmup mean of the local energies, no reweighting."""
    if len(r) == 0:
        raise ValueError("empty chain record")
    return float(np.mean(r.e_values))
