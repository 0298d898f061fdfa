"""Super-operator, Choi matrix and related linear maps.

Vectorization is row-major (numpy's native ``reshape``): ``vec(X)[a*d + b]``
is ``X[a, b]``.  With that convention ``vec(A X B^*) = (A (x) conj(B)) vec(X)``,
so ``F = sum_i A_i (x) conj(A_i)`` is exactly the matrix of the channel.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

DEFAULT_MAX_DENSE_ENTRIES = 10**8


class DenseSizeError(ValueError):
    pass


def max_entangled(d: int) -> np.ndarray:
    """``Omega_d = d^-1/2 sum_i e_i (x) e_i`` as a vector of length ``d^2``."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def _kraus_array(kraus) -> np.ndarray:
    kraus = getattr(kraus, "kraus", kraus)
    arr = np.asarray(kraus, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError("kraus operators must form an array of shape (k, n, d)")
    return arr


class SuperOperator:
    """The map ``vec(X) -> vec(sum_i A_i X A_i^*)``, dense or matrix-free.

    Parameters
    ----------
    kraus : array_like, shape (k, n, d), or a ChannelSample
    mode : {"matrix-free", "dense", "auto"}
        ``"auto"`` picks dense when ``n^2 d^2 <= max_dense_entries``.
    """

    def __init__(self, kraus, mode="matrix-free", max_dense_entries=DEFAULT_MAX_DENSE_ENTRIES):
        self.kraus = _kraus_array(kraus)
        self.k, self.n, self.d = self.kraus.shape
        entries = self.n**2 * self.d**2
        if mode == "auto":
            mode = "dense" if entries <= max_dense_entries else "matrix-free"
        if mode not in ("dense", "matrix-free"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "dense" and entries > max_dense_entries:
            raise DenseSizeError(
                f"dense super-operator would hold {entries} entries (> {max_dense_entries})"
            )
        self.mode = mode
        self.max_dense_entries = max_dense_entries
        # (n k) x d isometry with rows (a, i) -> a*k + i
        self._V = np.ascontiguousarray(self.kraus.transpose(1, 0, 2).reshape(self.n * self.k, self.d))
        self._VH = np.ascontiguousarray(self._V.conj().T)
        self._Vr = self._V.reshape(self.n, self.k * self.d)
        self._VrH = np.ascontiguousarray(self._Vr.conj().T)

    @property
    def shape(self):
        return (self.n**2, self.d**2)

    @property
    def dtype(self):
        return np.dtype(complex)

    # channel action on matrices -------------------------------------------

    def apply_channel(self, X):
        """``sum_i A_i X A_i^*``."""
        W = (self._V @ X).reshape(self.n, self.k * self.d)
        return W @ self._VrH

    def apply_adjoint(self, Y):
        """``sum_i A_i^* Y A_i``."""
        U = (Y @ self._Vr).reshape(self.n * self.k, self.d)
        return self._VH @ U

    # vector action ----------------------------------------------------------

    def matvec(self, x):
        x = np.asarray(x)
        if self.mode == "dense":
            return self.dense @ x
        if x.ndim == 1:
            X = np.ascontiguousarray(x).reshape(self.d, self.d)
            return self.apply_channel(X).reshape(-1)
        return np.stack([self.matvec(col) for col in x.T], axis=1)

    def rmatvec(self, y):
        y = np.asarray(y)
        if self.mode == "dense":
            return self.dense.conj().T @ y
        if y.ndim == 1:
            Y = np.ascontiguousarray(y).reshape(self.n, self.n)
            return self.apply_adjoint(Y).reshape(-1)
        return np.stack([self.rmatvec(col) for col in y.T], axis=1)

    def __matmul__(self, x):
        return self.matvec(x)

    # dense materialization --------------------------------------------------

    def to_dense(self):
        entries = self.n**2 * self.d**2
        if entries > self.max_dense_entries:
            raise DenseSizeError(
                f"dense super-operator would hold {entries} entries (> {self.max_dense_entries})"
            )
        F = np.zeros(self.shape, dtype=complex)
        for A in self.kraus:
            F += np.kron(A, A.conj())
        return F

    @cached_property
    def dense(self):
        return self.to_dense()


def super_operator(kraus, mode="matrix-free", max_dense_entries=DEFAULT_MAX_DENSE_ENTRIES):
    return SuperOperator(kraus, mode=mode, max_dense_entries=max_dense_entries)


class RestrictedOperator:
    """``F`` composed with the projector onto the complement of ``Omega_d``."""

    def __init__(self, op):
        self.op = op
        self.omega = max_entangled(op.d)
        self.shape = op.shape
        self.mode = op.mode

    def _project(self, x):
        if x.ndim == 1:
            return x - self.omega * np.vdot(self.omega, x)
        return x - np.outer(self.omega, self.omega.conj() @ x)

    def matvec(self, x):
        return self.op.matvec(self._project(np.asarray(x)))

    def rmatvec(self, y):
        return self._project(self.op.rmatvec(np.asarray(y)))

    @property
    def dense(self):
        F = self.op.dense
        return F - np.outer(F @ self.omega, self.omega.conj())


def choi_matrix(kraus, normalized=True):
    """``[Phi (x) id](omega_d)``; ``normalized=False`` drops the ``1/d``.

    Rows and columns are indexed by ``(a, i) -> a*d + i`` with ``a`` the
    output index.
    """
    kraus = _kraus_array(kraus)
    k, n, d = kraus.shape
    K = kraus.reshape(k, n * d).T
    C = K @ K.conj().T
    return C / d if normalized else C


def realign(C, n, d):
    """Realignment ``R(C)[(a, b), (i, j)] = C[(a, i), (b, j)]``.

    The super-operator equals the realignment of the unnormalized Choi
    matrix, i.e. ``d * realign(choi_matrix(kraus))``.
    """
    return np.asarray(C).reshape(n, d, n, d).transpose(0, 2, 1, 3).reshape(n * n, d * d)


def overlap_f(sample) -> float:
    """``f = ||F Omega_d||^2 = ||Phi(I_d)||_F^2 / d``."""
    kraus = _kraus_array(sample)
    d = kraus.shape[2]
    out = np.einsum("inc,imc->nm", kraus, kraus.conj())
    return float(np.vdot(out, out).real / d)


def overlap_f_batch(kraus_batch) -> np.ndarray:
    """:func:`overlap_f` over a leading batch axis, kraus shape ``(B, k, n, d)``."""
    kraus_batch = np.asarray(kraus_batch)
    d = kraus_batch.shape[-1]
    out = np.einsum("binc,bimc->bnm", kraus_batch, kraus_batch.conj())
    return np.sum(np.abs(out) ** 2, axis=(1, 2)) / d
