"""Moments of the overlap ``f = <Omega_d, F^* F Omega_d>``.

Three routes are provided:

* :func:`exact_moment_f` evaluates the finite-``n`` Weingarten double sum over
  ``S_{2p}`` in exact rational arithmetic;
* :func:`geodesic_moment` sums over the pairs ``A <= B <= [p]`` that index the
  geodesics ``id -> alpha -> beta -> delta``;
* :func:`limit_moment` is the closed form ``(lam + 1/k - lam/k^2)^p``.

Boxes of the ``2p``-fold diagram are ordered ``(1T, 1B, 2T, 2B, ...)``;
``delta`` swaps each top box with the bottom box next to it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .perm_weingarten import (
    Permutation,
    length,
    moebius,
    partitions,
    weingarten_exact,
)

MAX_ENUMERATION_ORDER = 20
MAX_PERMUTATION_ENUMERATION_ORDER = 8


@dataclass(frozen=True)
class MomentSpec:
    p: int
    n: int
    d: int
    k: int
    lam: Optional[float] = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("moment order p must be >= 1")
        if min(self.n, self.d, self.k) < 1:
            raise ValueError("dimensions must be >= 1")
        if self.d > self.n * self.k:
            raise ValueError(f"d={self.d} > n*k={self.n * self.k}: no isometry exists")

    @classmethod
    def from_lambda(cls, p: int, n: int, k: int, lam: float) -> "MomentSpec":
        """Round ``d = lam * n`` to an integer; the requested ratio is kept in ``lam``."""
        _check_lambda(k, lam)
        d = max(1, int(round(lam * n)))
        return cls(p, n, d, k, lam)

    @property
    def lambda_realized(self) -> float:
        return self.d / self.n


def _check_lambda(k, lam):
    if not 0 < lam < k:
        raise ValueError(f"lambda must lie in (0, k) = (0, {k}); got {lam}")


def delta_permutation(p: int) -> Permutation:
    """Product of the transpositions ``(iT, iB)`` in ``S_{2p}``."""
    return Permutation.from_cycles(2 * p, *[(2 * i + 1, 2 * i + 2) for i in range(p)])


@lru_cache(maxsize=4)
def _double_sum_counts(p: int):
    """Count pairs (alpha, beta) of S_2p by (#alpha, #(delta alpha), #(delta beta), class(alpha^-1 beta))."""
    m = 2 * p
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    size = len(perms)
    radix = m ** np.arange(m)[::-1]
    lookup = np.full(m**m, -1, dtype=np.int64)
    lookup[perms @ radix] = np.arange(size)

    def ncycles(arr):
        out = np.zeros(len(arr), dtype=np.int64)
        for row, perm in enumerate(arr):
            out[row] = len(Permutation(tuple(perm + 1)).cycles())
        return out

    delta = np.array(delta_permutation(p).images) - 1
    cyc = ncycles(perms)
    cyc_delta = ncycles(delta[perms])  # delta o alpha
    classes = partitions(m)
    cls_index = {ct: i for i, ct in enumerate(classes)}
    cls_of = np.array(
        [cls_index[Permutation(tuple(q + 1)).cycle_type()] for q in perms], dtype=np.int64
    )

    # beta = alpha o gamma, so alpha^-1 beta = gamma
    base = m + 1
    ncls = len(classes)
    counts = np.zeros(base**3 * ncls, dtype=np.int64)
    for i in range(size):
        betas = lookup[perms[i][perms] @ radix]
        key = ((cyc[i] * base + cyc_delta[i]) * base + cyc_delta[betas]) * ncls + cls_of
        counts += np.bincount(key, minlength=len(counts))
    nz = np.nonzero(counts)[0]
    terms = []
    for key in nz:
        key = int(key)
        c_cls = key % ncls
        rest = key // ncls
        e_d = rest % base
        rest //= base
        e_k = rest % base
        e_n = rest // base
        terms.append((e_n, e_k, e_d, classes[c_cls], int(counts[key])))
    return terms


def exact_moment_f(spec: MomentSpec, allow_order_three: bool = False) -> Fraction:
    """Exact ``E f^p`` at finite ``(n, d, k)``.

    Orders ``p <= 2`` run by default; ``p = 3`` (about 5e5 permutation pairs)
    needs ``allow_order_three=True``.
    """
    p, n, d, k = spec.p, spec.n, spec.d, spec.k
    cap = 6 if allow_order_three else 4
    if 2 * p > cap:
        from .perm_weingarten import OrderTooLargeError

        raise OrderTooLargeError(
            f"order too large: p={p} needs Weingarten order {2 * p} > cap {cap}"
        )
    wg = weingarten_exact(2 * p, n * k, cap=cap)
    total = Fraction(0)
    for e_n, e_k, e_d, ct, count in _double_sum_counts(p):
        total += count * n**e_n * k**e_k * d**e_d * wg.entries[ct]
    return total / Fraction(d) ** p


def limit_moment(p: int, k: int, lam: float) -> float:
    """Large-``n`` limit ``(lam + 1/k - lam/k^2)^p``."""
    _check_lambda(k, lam)
    return (lam + 1.0 / k - lam / k**2) ** p


def subset_pair_sum(p: int, x: float, y: float) -> float:
    """``sum_{A <= B <= [p]} x^|A| y^|B \\ A|`` by enumeration of all pairs.

    Each ``B`` gets its inner sum over subsets ``A`` through a sum-over-subsets
    sweep, so every one of the ``3^p`` pairs is visited in ``O(p 2^p)`` work.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    if p > MAX_ENUMERATION_ORDER:
        raise ValueError(f"p={p} too large for enumeration (max {MAX_ENUMERATION_ORDER})")
    masks = np.arange(1 << p, dtype=np.int64)
    popcount = np.zeros(1 << p, dtype=np.int64)
    for bit in range(p):
        popcount += (masks >> bit) & 1
    # start from A = B, then move one element at a time from A to B \ A
    table = np.power(float(x), popcount.astype(float))
    for bit in range(p):
        has = ((masks >> bit) & 1).astype(bool)
        table[has] += y * table[masks[has] ^ (1 << bit)]
    return float(np.sum(table))


def multinomial_identity_check(p: int, x: float, y: float, rtol: float = 1e-12) -> bool:
    lhs = subset_pair_sum(p, x, y)
    rhs = (1.0 + x + y) ** p
    return abs(lhs - rhs) <= rtol * max(1.0, abs(rhs))


def geodesic_moment(p: int, k: int, lam: float, method: str = "subsets") -> float:
    """Limit of ``E f^p`` as a sum over geodesics ``id -> alpha -> beta -> delta``.

    ``method="subsets"`` sums ``k^-p (k lam)^|A| (-lam/k)^|B\\A|`` over subset
    pairs.  ``method="permutations"`` builds ``alpha`` and ``beta`` in
    ``S_{2p}`` and reads every exponent and Moebius value off the
    permutations themselves (``p <= 8``).
    """
    _check_lambda(k, lam)
    if method == "subsets":
        return k ** (-p) * subset_pair_sum(p, k * lam, -lam / k)
    if method != "permutations":
        raise ValueError(f"unknown method {method!r}")
    if p > MAX_PERMUTATION_ENUMERATION_ORDER:
        raise ValueError(f"p={p} too large for permutation enumeration")
    delta = delta_permutation(p)
    taus = [Permutation.transposition(2 * p, 2 * i + 1, 2 * i + 2) for i in range(p)]
    ident = Permutation.identity(2 * p)

    def product(idx):
        out = ident
        for i in idx:
            out = out * taus[i]
        return out

    total = 0.0
    # each element of [p] is outside B (0), in B \ A (1) or in A (2)
    for labels in itertools.product((0, 1, 2), repeat=p):
        alpha = product([i for i, c in enumerate(labels) if c == 2])
        beta = product([i for i, c in enumerate(labels) if c >= 1])
        a_inv_b = alpha.inverse() * beta
        total += (
            float(k) ** (-length(delta.inverse() * alpha) - length(a_inv_b))
            * lam ** (p - length(delta.inverse() * beta))
            * moebius(a_inv_b)
        )
    return total
