"""Matrix-free exact diagonalization for the chain.

Lanczos with full reorthogonalization on the O(L 2^L) matvec. The start
vector is the uniform positive vector, so results are reproducible
bit-for-bit; for Gamma > 0 the ground state is unique and strictly
positive, and the returned vector is sign-fixed accordingly. At Gamma = 0
the ground level is doubly degenerate and any normalized vector in that
subspace may be returned; energies are still correct.
"""

from dataclasses import dataclass

import numpy as np

from .model import TfiModel, all_diagonal_energies
from .trial import AmplitudeTable


@dataclass
class GroundStateResult:
    energy: float
    vector: np.ndarray
    residual: float
    iterations: int


class _HamiltonianAction:
    """Reusable matvec: diagonal part plus the L single-flip shifts."""

    def __init__(self, m: TfiModel):
        self.m = m
        self.diag = all_diagonal_energies(m)
        self.idx = np.arange(m.n_states, dtype=np.int64)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        if self.m.Gamma != 0.0:
            for k in range(self.m.L):
                out -= self.m.Gamma * v[self.idx ^ (1 << k)]
        return out


def apply_hamiltonian(v: np.ndarray, m: TfiModel) -> np.ndarray:
    """H v for a dense vector over the 2^L basis."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (m.n_states,):
        raise ValueError(f"vector must have length {m.n_states}")
    return _HamiltonianAction(m)(v)


def ground_state(m: TfiModel, tol: float = 1e-10, max_iter: int = 500) -> GroundStateResult:
    """Lowest eigenpair of H, converged to residual norm <= tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = m.n_states
    H = _HamiltonianAction(m)
    v = np.full(n, 1.0 / np.sqrt(n))
    basis = [v]
    alphas: list[float] = []
    betas: list[float] = []
    w = H(v)
    for it in range(1, max_iter + 1):
        a = float(v @ w)
        alphas.append(a)
        w = w - a * v
        if betas:
            w = w - betas[-1] * basis[-2]
        # full reorthogonalization, two passes
        V = np.asarray(basis)
        w -= V.T @ (V @ w)
        w -= V.T @ (V @ w)
        beta = float(np.linalg.norm(w))

        T = np.diag(alphas)
        if betas:
            off = np.array(betas)
            T += np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = np.linalg.eigh(T)
        theta = float(evals[0])
        bound = abs(beta * evecs[-1, 0])
        if bound <= tol or beta < 1e-14:
            y = np.asarray(basis).T @ evecs[:, 0]
            y /= np.linalg.norm(y)
            if y.sum() < 0:
                y = -y
            residual = float(np.linalg.norm(H(y) - theta * y))
            if residual <= tol:
                return GroundStateResult(theta, y, residual, it)
            # Ritz bound was optimistic; keep iterating unless exhausted
            if beta < 1e-14:
                raise RuntimeError(
                    f"Krylov space exhausted at iteration {it} with residual "
                    f"{residual:.3e} > tol {tol:.3e}"
                )
        betas.append(beta)
        v = w / beta
        basis.append(v)
        w = H(v)
    raise RuntimeError(
        f"ground state did not converge to residual {tol:.3e} within {max_iter} iterations"
    )


def variational_energy(t: AmplitudeTable, m: TfiModel) -> float:
    """<psi|H|psi> for a normalized amplitude table, evaluated exactly."""
    if t.L != m.L:
        raise ValueError("table and model sizes disagree")
    return float(t.amps @ apply_hamiltonian(t.amps, m))
