"""Dense linear algebra and seeded sampling shared by the solvers.

Everything here is deterministic. Random draws are pure functions of an
integer seed, backed by numpy's PCG64 bit generator (a documented 64-bit
PRNG whose normal variates come from the ziggurat transform); the stream
for a given seed is stable across runs and platforms for a fixed numpy
version. Matrices are plain row-major float64 ndarrays, vectors are 1-d
float64 ndarrays; nothing here is sparse.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "NotPositiveDefiniteError",
    "PowerIterationError",
    "SpdFactorization",
    "gaussian_matrix",
    "rng_from_seed",
    "solve",
    "spd_factor",
    "spectral_norm_sq",
]

# Fixed stream for the power-iteration start vector, so spectral_norm_sq is a
# pure function of its matrix argument.
_POWER_START_SEED = 0x9E3779B9


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky pivot falls at or below the breakdown floor."""


class PowerIterationError(RuntimeError):
    """Power iteration did not settle within its iteration budget.

    Carries the last eigenvalue estimate in ``last_estimate``.
    """

    def __init__(self, message: str, last_estimate: float):
        super().__init__(message)
        self.last_estimate = last_estimate


def rng_from_seed(seed: int) -> np.random.Generator:
    """Generator for `seed`; the single RNG construction point of the package."""
    return np.random.Generator(np.random.PCG64(seed))


def gaussian_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """Sample a rows-by-cols matrix with i.i.d. standard normal entries.

    The same (rows, cols, seed) triple always produces the same matrix; see
    the module docstring for the generator contract.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix shape must be positive, got {rows}x{cols}")
    return rng_from_seed(seed).standard_normal((rows, cols))


def spectral_norm_sq(A: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of A^T A by power iteration, i.e. the squared spectral norm.

    Iterates v <- A^T (A v) from a seeded random unit vector and returns the
    Rayleigh quotient once successive estimates agree to a relative `tol`.
    The Rayleigh quotient never overshoots the true eigenvalue, so callers
    that need a certified upper bound should inflate the result.

    Raises
    ------
    PowerIterationError
        If the estimate has not settled after `max_iter` sweeps; the error
        carries the last estimate.
    """
    A = np.asarray(A, dtype=float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.any(A):
        raise ValueError("spectral_norm_sq needs a nonzero matrix")

    rng = rng_from_seed(_POWER_START_SEED)
    n = A.shape[1]
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    estimate = np.inf
    for _ in range(max_iter):
        u = A.T @ (A @ v)
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            # v landed exactly in the nullspace of A; redraw from the stream.
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            continue
        rayleigh = float(v @ u)
        v = u / norm_u
        if abs(rayleigh - estimate) <= tol * max(abs(rayleigh), np.finfo(float).tiny):
            return rayleigh
        estimate = rayleigh
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} sweeps", last_estimate=estimate
    )


class SpdFactorization:
    """Lower-triangular Cholesky factor L of a symmetric positive-definite M.

    Built through :func:`spd_factor`; immutable afterwards. ``solve`` applies
    M^{-1} through two triangular solves against L and L^T.
    """

    def __init__(self, lower: np.ndarray):
        self.lower = lower
        self.dim = lower.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.dim:
            raise ValueError(f"rhs has length {rhs.shape[0]}, factor has dimension {self.dim}")
        halfway = solve_triangular(self.lower, rhs, lower=True)
        return solve_triangular(self.lower.T, halfway, lower=False)


def spd_factor(M: np.ndarray) -> SpdFactorization:
    """Cholesky factorization M = L L^T with an explicit breakdown threshold.

    A pivot at or below 1e-12 * trace(M) / dim is treated as loss of positive
    definiteness and raises :class:`NotPositiveDefiniteError` instead of
    producing a garbage factor.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-10 * (1.0 + scale)):
        raise ValueError("matrix is not symmetric")

    n = M.shape[0]
    pivot_floor = 1e-12 * float(np.trace(M)) / n
    lower = np.zeros((n, n))
    for j in range(n):
        pivot = M[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= pivot_floor:
            raise NotPositiveDefiniteError(
                f"pivot {pivot:.3e} at column {j} is at or below the floor {pivot_floor:.3e}"
            )
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (M[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return SpdFactorization(lower)


def solve(factor: SpdFactorization, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs against a factorization produced by :func:`spd_factor`."""
    return factor.solve(rhs)
