"""Closed-form bound calculators.

Marchenko-Pastur integrals use the change of variables
``x = a + (b - a) sin^2(theta)``, which absorbs the square-root endpoint
behaviour (and the ``1/sqrt(x)`` singularity at ``c = 1``) into a smooth
integrand, followed by Gauss-Legendre rules of doubling order.

``k`` is a real parameter throughout so thresholds can be located between
integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np


class QuadratureError(RuntimeError):
    pass


def mp_edges(c: float) -> Tuple[float, float]:
    root = math.sqrt(c)
    return (root - 1.0) ** 2, (root + 1.0) ** 2


def _check_c(c):
    if not c >= 1:
        raise ValueError(f"Marchenko-Pastur parameter c must be >= 1, got {c}")


def mp_density(c: float, x):
    """Absolutely continuous Marchenko-Pastur density (no atom for ``c >= 1``)."""
    _check_c(c)
    a, b = mp_edges(c)
    x = np.asarray(x, dtype=float)
    inside = (x > a) & (x < b)
    safe = np.where(inside, x, 1.0)
    val = np.sqrt(np.clip((b - safe) * (safe - a), 0.0, None)) / (2 * np.pi * safe)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _gauss_legendre(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    # map [-1, 1] -> [0, pi/2]
    return (nodes + 1) * (np.pi / 4), weights * (np.pi / 4)


def mp_integral(c: float, g: Callable[[np.ndarray], np.ndarray], tol: float = 1e-10,
                max_order: int = 4096) -> float:
    """``int g(x) dMP_c(x)`` with adaptive order doubling.

    Stops when two successive rules agree to ``tol``.
    """
    _check_c(c)
    a, b = mp_edges(c)
    width = b - a

    def rule(order):
        theta, w = _gauss_legendre(order)
        s, co = np.sin(theta), np.cos(theta)
        x = a + width * s**2
        # dMP = sqrt((b-x)(x-a)) / (2 pi x) dx,  dx = 2 width s co dtheta
        jac = (width * s * co) * (2 * width * s * co) / (2 * np.pi)
        return float(np.sum(w * jac * g(x) / x))

    order = 16
    prev = rule(order)
    while order < max_order:
        order *= 2
        cur = rule(order)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureError(f"quadrature did not converge for c={c} (last change {abs(cur - prev):.3g})")


def mp_moment(c: float, power: float = 1.0) -> float:
    return mp_integral(c, lambda x: x**power)


@lru_cache(maxsize=1024)
def chi_limit(c: float) -> float:
    """Limit ``chi_c = c^-1 (int sqrt(x) dMP_c)^2``."""
    c = float(c)
    _check_c(c)
    # the sqrt(x) weight makes the integrand ~ sqrt(x)^-1 near x = 0 at c = 1,
    # which the substitution still smooths out
    root_mean = mp_integral(c, np.sqrt, tol=1e-12)
    return root_mean**2 / c


def chi_finite_floor(N: int) -> float:
    """Lower bound ``1/(N + 1)`` valid for every ``M >= N``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return 1.0 / (N + 1)


def _check_k_lambda(k, lam):
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < lam < k:
        raise ValueError(f"lambda must lie in (0, k) = (0, {k}); got {lam}")


def overlap_limit(k: float, lam: float) -> float:
    """``lam + 1/k - lam/k^2``, the limiting overlap."""
    return lam + 1.0 / k - lam / k**2


def g_bound(k: float, lam: float) -> float:
    """``2 (1 + sqrt(lam))^2 / (chi_{k/lam} sqrt(k))``."""
    _check_k_lambda(k, lam)
    return 2 * (1 + math.sqrt(lam)) ** 2 / (chi_limit(k / lam) * math.sqrt(k))


def sv_gap_lower(k: float, lam: float) -> float:
    return math.sqrt(overlap_limit(k, lam)) - g_bound(k, lam)


def sv_gap_upper(k: float, lam: float) -> float:
    return math.sqrt(overlap_limit(k, lam)) + g_bound(k, lam)


def explicit_sv_gap_lower(k: float, lam: float) -> float:
    """Lower bound with ``chi_1 = (8/(3 pi))^2`` in place of ``chi_{k/lam}``."""
    _check_k_lambda(k, lam)
    return math.sqrt(overlap_limit(k, lam)) - 9 * math.pi**2 * (1 + math.sqrt(lam)) ** 2 / (
        32 * math.sqrt(k)
    )


def ev2_upper(k: float) -> float:
    """Bound on ``|lambda_2|`` for square channels: ``(sqrt(1 + (k-1)/k^2) + g) g``."""
    if k <= 1:
        raise ValueError("ev2_upper needs k > 1 (lambda = 1 must lie in (0, k))")
    g = g_bound(k, 1.0)
    return (math.sqrt(1 + (k - 1) / k**2) + g) * g


class NoSignChangeError(ValueError):
    pass


def threshold(bound: Callable[[float], float], target: float,
              bracket: Tuple[float, float], xtol: float = 1e-6) -> float:
    """Bisection root of ``bound(k) = target`` on ``bracket``."""
    lo, hi = map(float, bracket)
    f_lo = bound(lo) - target
    f_hi = bound(hi) - target
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoSignChangeError(
            f"no sign change of bound - {target} on [{lo}, {hi}]"
        )
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        f_mid = bound(mid) - target
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BoundSet:
    k: float
    lam: float
    chi: float
    g: float
    sv_gap_lb: float
    sv_gap_ub: float
    ev2_ub: Optional[float]
    explicit_lb: float

    def as_dict(self) -> dict:
        return asdict(self)


def bound_set(k: float, lam: float) -> BoundSet:
    _check_k_lambda(k, lam)
    return BoundSet(
        k=k,
        lam=lam,
        chi=chi_limit(k / lam),
        g=g_bound(k, lam),
        sv_gap_lb=sv_gap_lower(k, lam),
        sv_gap_ub=sv_gap_upper(k, lam),
        ev2_ub=ev2_upper(k) if lam == 1 and k > 1 else None,
        explicit_lb=explicit_sv_gap_lower(k, lam),
    )
