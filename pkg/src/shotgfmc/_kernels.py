"""Hot inner loops with a switchable backend.

``SHOTGFMC_BACKEND=numba`` (the default when numba imports) compiles the
kernels with ``@njit``; ``SHOTGFMC_BACKEND=numpy`` runs the same source
uncompiled. The kernels use only +,-,*,/ and comparisons -- no
transcendentals -- so the two backends produce bit-identical
trajectories. ``python -m shotgfmc.bench`` times one against the other.
"""

import os

_requested = os.environ.get("SHOTGFMC_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"SHOTGFMC_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _have_numba = False
else:
    try:
        from numba import njit  # noqa: F401
        _have_numba = True
    except ImportError:
        if _requested == "numba":
            raise
        _have_numba = False

BACKEND = "numba" if _have_numba else "numpy"


def _hot(fn):
    if BACKEND == "numba":
        return njit(cache=True)(fn)
    return fn


@_hot
def chain_fill(amps, L, J, Gamma, lam, warmup, x0, urand, states, bvals, wbuf):
    """Walk the chain for len(urand) steps, recording after warmup.

    For the current state x the row of the importance-sampled propagator is
      stay weight   lam - E_diag(x)
      flip weight k Gamma * amps[x ^ 1<<k] / amps[x]
    b is the row sum and the next state is drawn by inverse CDF, first
    index wins on ties. states/bvals hold x and b for steps >= warmup.
    """
    n_steps = urand.shape[0]
    x = x0
    for n in range(n_steps):
        ax = amps[x]
        acc = 0
        for k in range(L):
            kk = k + 1
            if kk == L:
                kk = 0
            if ((x >> k) & 1) == ((x >> kk) & 1):
                acc += 1
            else:
                acc -= 1
        w_stay = lam + J * acc
        b = w_stay
        for k in range(L):
            wk = Gamma * (amps[x ^ (1 << k)] / ax)
            wbuf[k] = wk
            b += wk
        if n >= warmup:
            states[n - warmup] = x
            bvals[n - warmup] = b
        t = urand[n] * b
        if t >= w_stay:
            c = w_stay
            sel = -1
            last_pos = -1
            for k in range(L):
                if wbuf[k] > 0.0:
                    last_pos = k
                c += wbuf[k]
                if t < c:
                    sel = k
                    break
            if sel < 0:
                # cumulative roundoff left t at/past the top; take the
                # last nonempty interval (stay if there is none)
                sel = last_pos
            if sel >= 0:
                x = x ^ (1 << sel)
    return x


@_hot
def sliding_window_sums(values, width, recompute_every, out):
    """out[j] = sum(values[j : j+width]) for j = 0 .. len(out)-1.

    The running sum is refreshed from scratch every recompute_every steps
    to stop add/subtract drift from accumulating over long records.
    """
    s = 0.0
    for i in range(width):
        s += values[i]
    out[0] = s
    for j in range(1, out.shape[0]):
        if j % recompute_every == 0:
            s = 0.0
            for i in range(j, j + width):
                s += values[i]
        else:
            s = s + values[j + width - 1] - values[j - 1]
        out[j] = s
