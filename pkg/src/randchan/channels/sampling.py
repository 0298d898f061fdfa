"""Ginibre and Haar sampling, Kraus blocks.

Index convention for ``C^n (x) C^k``: row ``(a, i)`` of an ``(n k) x d``
isometry sits at ``a * k + i``, so ``V.reshape(n, k, d)[:, i, :]`` is the
Kraus operator ``A_i`` and ``V = sum_i kron(A_i, e_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..rng import as_generator

ISOMETRY_TOL = 1e-12


def sample_ginibre(M, N, variance=1.0, rng=None, size=()):
    """Matrices with i.i.d. centered complex Gaussian entries of ``E|Y_ij|^2 = variance``.

    ``size`` prepends batch dimensions.
    """
    if M < 1 or N < 1:
        raise ValueError("Ginibre dimensions must be >= 1")
    if variance <= 0:
        raise ValueError("variance must be positive")
    rng = as_generator(rng)
    batch = (int(size),) if np.isscalar(size) else tuple(int(x) for x in size)
    shape = batch + (int(M), int(N))
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_haar_isometry(rows, cols, rng=None, size=()):
    """Haar-distributed isometry ``C^cols -> C^rows``.

    QR of a Ginibre matrix, with each column of ``Q`` rotated by the phase of
    the matching diagonal entry of ``R``; without that correction the law is
    not unitarily invariant.
    """
    if rows < cols:
        raise ValueError(f"an isometry needs rows >= cols, got {rows} < {cols}")
    z = sample_ginibre(rows, cols, 1.0, rng, size=size)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phase = diag / np.abs(diag)
    return q * phase[..., None, :]


def kraus_blocks(V, n, k):
    """The ``k`` blocks ``A_i`` (shape ``(k, n, d)``) with ``V = sum_i A_i (x) e_i``."""
    V = np.asarray(V)
    if V.ndim != 2 or V.shape[0] != n * k:
        raise ValueError(f"V must have n*k = {n * k} rows, got shape {V.shape}")
    return np.ascontiguousarray(V.reshape(n, k, V.shape[1]).transpose(1, 0, 2))


def assemble_isometry(kraus):
    """Inverse of :func:`kraus_blocks`."""
    kraus = np.asarray(kraus)
    k, n, d = kraus.shape
    return kraus.transpose(1, 0, 2).reshape(n * k, d)


@dataclass(frozen=True)
class ChannelSample:
    n: int
    d: int
    k: int
    V: np.ndarray
    kraus: np.ndarray

    def isometry_residual(self) -> float:
        return float(np.linalg.norm(self.V.conj().T @ self.V - np.eye(self.d)))

    def trace_preservation_residual(self) -> float:
        s = np.einsum("ian,iad->nd", self.kraus.conj(), self.kraus)
        return float(np.linalg.norm(s - np.eye(self.d)))


def channel_from_isometry(V, n, k) -> ChannelSample:
    V = np.asarray(V)
    return ChannelSample(n=n, d=V.shape[1], k=k, V=V, kraus=kraus_blocks(V, n, k))


def sample_channel(n, d, k, rng=None) -> ChannelSample:
    """Random channel ``M_d -> M_n`` with ``k`` Kraus operators."""
    if d > n * k:
        raise ValueError(f"d={d} > n*k={n * k}: no isometry exists")
    V = sample_haar_isometry(n * k, d, rng)
    return channel_from_isometry(V, n, k)
