"""Monte Carlo checks of the Gaussian comparison: twirled ``|Y| (x) |conj Y|`` and
norms of ``sum_i Y_i (x) Z_i``."""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..rng import as_generator
from .sampling import sample_ginibre
from .spectral import top_singular_values

FLATNESS_MAX_N = 32


@dataclass
class TwirlEstimate:
    M: int
    N: int
    trials: int
    diag_overlap: float
    diag_overlap_se: float
    chi_hat: float
    chi_hat_se: float
    offdiag_flatness: float

    def as_dict(self):
        return asdict(self)


def estimate_twirl_structure(M, N, trials, rng=None, flatness=None, chunk=512):
    """Estimate ``H = E(|Y| (x) |conj Y|)`` for ``Y ~ Gin(M, N; 1/M)``.

    Returns ``tr(H omega_N)``, ``chi_hat = (E||Y||_1^2 - 1)/(N^2 - 1)`` (each
    with a standard error) and the flatness of ``H`` on the complement of
    ``omega_N``: the Frobenius distance of the compressed estimate from
    ``chi_hat (I - omega_N)``, relative to ``||chi_hat (I - omega_N)||_F``.
    Flatness needs the full ``N^2 x N^2`` estimate and is skipped (NaN)
    above ``N = 32`` unless ``flatness=True``.
    """
    if M < N:
        raise ValueError("twirl estimate needs M >= N")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_generator(rng)
    if flatness is None:
        flatness = N <= FLATNESS_MAX_N
    diag = np.empty(trials)
    trace_sq = np.empty(trials)
    H = np.zeros((N * N, N * N), dtype=complex) if flatness else None
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        Y = sample_ginibre(M, N, 1.0 / M, rng, size=b)
        _, s, vh = np.linalg.svd(Y, full_matrices=False)
        diag[done:done + b] = np.sum(s**2, axis=1) / N
        trace_sq[done:done + b] = np.sum(s, axis=1) ** 2
        if flatness:
            # |Y| = V diag(s) V^*
            absY = np.einsum("bji,bj,bjk->bik", vh.conj(), s, vh)
            H += np.einsum("bij,bkl->ikjl", absY, absY.conj()).reshape(N * N, N * N)
        done += b
    chi = (trace_sq - 1) / (N * N - 1)
    flat = float("nan")
    chi_hat = float(chi.mean())
    if flatness:
        H /= trials
        omega = np.eye(N, dtype=complex).reshape(-1) / np.sqrt(N)
        P = np.eye(N * N) - np.outer(omega, omega.conj())
        target = chi_hat * P
        flat = float(np.linalg.norm(P @ H @ P - target) / np.linalg.norm(target))
    se = lambda x: float(x.std(ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("nan")
    return TwirlEstimate(M, N, trials, float(diag.mean()), se(diag), chi_hat, se(chi), flat)


class GaussianModelOperator:
    """``X = sum_i Y_i (x) Z_i`` acting on row-major ``vec(W)`` as ``sum_i Y_i W Z_i^T``."""

    mode = "matrix-free"

    def __init__(self, Y, Z):
        self.Y = np.asarray(Y)
        self.Z = np.asarray(Z)
        k, n, d = self.Y.shape
        self.k, self.n, self.d = k, n, d
        self.shape = (n * n, d * d)

    def matvec(self, x):
        Wm = x.reshape(self.d, self.d)
        return np.einsum("inc,ce,ime->nm", self.Y, Wm, self.Z, optimize=True).reshape(-1)

    def rmatvec(self, y):
        Um = y.reshape(self.n, self.n)
        return np.einsum("inc,nm,ime->ce", self.Y.conj(), Um, self.Z.conj(), optimize=True).reshape(-1)

    @property
    def dense(self):
        return sum(np.kron(y, z) for y, z in zip(self.Y, self.Z))


def sample_gaussian_model(n, d, k, rng=None):
    rng = as_generator(rng)
    var = 1.0 / (n * k)
    Y = sample_ginibre(n, d, var, rng, size=k)
    Z = sample_ginibre(n, d, var, rng, size=k)
    return GaussianModelOperator(Y, Z)


def gaussian_model_norm(n, d, k, trials, rng=None, dense_max_dim=1024, tol=1e-8):
    """Operator norms of ``sum_i Y_i (x) Z_i`` over ``trials`` independent draws.

    ``Y_i, Z_i ~ Gin(n, d; 1/(n k))``.  Small models use a dense SVD, larger
    ones the matrix-free Lanczos solver.
    """
    rng = as_generator(rng)
    # start vectors come from a separate stream so the draws do not depend on the path
    solver_rng = rng.spawn(1)[0]
    out = np.empty(trials)
    for t in range(trials):
        X = sample_gaussian_model(n, d, k, rng)
        if max(X.shape) <= dense_max_dim:
            out[t] = np.linalg.norm(X.dense, 2)
        else:
            out[t] = top_singular_values(X, count=1, tol=tol, rng=solver_rng)[0]
    return out
