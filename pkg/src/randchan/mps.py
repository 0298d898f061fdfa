"""Random translation-invariant MPS built from Haar isometries.

``rho_l = E^l(Lambda)`` with ``E(X) = V X V^*`` lives on the bond register
followed by ``l`` physical sites.  Each application of ``E`` acts on the bond
register and splits off one new site right next to it, so the registers are
ordered ``(bond, site 1, ..., site l)`` with site 1 the most recent.  The
bond-traced state on ``(C^k)^{(x) l}`` is reported alongside.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels.sampling import ChannelSample, sample_channel
from .channels.spectral import fixed_point, purity, von_neumann_entropy
from .channels.superop import SuperOperator
from .rng import trial_rng
from .stats import summarize

DEFAULT_DENSE_BUDGET = 4096


class BudgetExceededError(ValueError):
    pass


def default_depth(D: int) -> int:
    """``ceil(5 log D)`` capped at 50."""
    return min(50, math.ceil(5 * math.log(D)))


def embed_apply(V, X):
    """``E(X) = V X V^*`` for ``V`` of shape ``(D k, D)`` acting on the bond register.

    ``X`` may carry extra site registers after the bond one, i.e. have size
    ``D * m``; the new site is inserted right after the bond.
    """
    V = np.asarray(V)
    X = np.asarray(X)
    Dk, D = V.shape
    size = X.shape[0]
    if X.ndim != 2 or X.shape[1] != size or size % D:
        raise ValueError(f"X must be square with size a multiple of {D}, got {X.shape}")
    m = size // D
    if m == 1:
        return V @ X @ V.conj().T
    W = np.kron(V, np.eye(m))
    return W @ X @ W.conj().T


def partial_trace_bond(rho, D):
    """Trace out the leading bond register of dimension ``D``."""
    size = rho.shape[0]
    m = size // D
    return np.einsum("aiaj->ij", rho.reshape(D, m, D, m))


@dataclass
class ReducedState:
    l: int
    matrix: np.ndarray
    purity: float
    entropy: float
    physical: Optional[np.ndarray] = None
    physical_purity: Optional[float] = None
    physical_entropy: Optional[float] = None


def _state(l, rho, D, physical):
    phys = partial_trace_bond(rho, D) if physical else None
    return ReducedState(
        l=l,
        matrix=rho,
        purity=purity(rho),
        entropy=von_neumann_entropy(rho),
        physical=phys,
        physical_purity=purity(phys) if physical else None,
        physical_entropy=von_neumann_entropy(phys) if physical else None,
    )


def _embed_power(V, start, l):
    rho = start
    for _ in range(l):
        rho = embed_apply(V, rho)
    return rho


def reduced_density(sample: ChannelSample, l: int, fixed_point_tol=1e-12,
                    budget=DEFAULT_DENSE_BUDGET, physical=True, fixed=None) -> ReducedState:
    """``rho_l = E^l(Lambda)`` for a square channel sample (``d = n = D``)."""
    if sample.n != sample.d:
        raise ValueError("MPS states need a square channel (bond dimension D = n = d)")
    D, k = sample.n, sample.k
    if D * k**l > budget:
        raise BudgetExceededError(f"D*k^l = {D * k**l} exceeds the dense budget {budget}")
    if fixed is None:
        fixed = fixed_point(sample, tol=fixed_point_tol)
    rho = _embed_power(sample.V, fixed, l)
    return _state(l, rho, D, physical)


def mps_amplitude(kraus, indices):
    """``tr(A_{i_N} ... A_{i_1})`` for 0-based site indices ``(i_1, ..., i_N)``."""
    kraus = np.asarray(getattr(kraus, "kraus", kraus))
    D = kraus.shape[1]
    prod = np.eye(D, dtype=complex)
    for i in indices:
        if not 0 <= i < kraus.shape[0]:
            raise IndexError(f"site index {i} outside [0, {kraus.shape[0]})")
        prod = kraus[i] @ prod
    return complex(np.trace(prod))


@dataclass(frozen=True)
class MPSEnsembleSpec:
    D: int
    k: int
    l: int
    trials: int
    t: Optional[int] = None
    seed: int = 0
    budget: int = DEFAULT_DENSE_BUDGET

    def __post_init__(self):
        if self.l < 1 or self.trials < 1 or self.D < 1 or self.k < 1:
            raise ValueError("D, k, l and trials must be >= 1")
        if self.D * self.k**self.l > self.budget:
            raise BudgetExceededError(
                f"D*k^l = {self.D * self.k**self.l} exceeds the dense budget {self.budget}"
            )

    @property
    def depth(self) -> int:
        return self.t if self.t is not None else default_depth(self.D)


def trace_norm(A) -> float:
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def mps_trial(spec: MPSEnsembleSpec, trial: int, rng=None) -> dict:
    """One MPS draw: exact ``rho_l`` and the approximant ``E^l(Phi^t(I/D))``."""
    rng = trial_rng(spec.seed, trial) if rng is None else rng
    D, k, l, t = spec.D, spec.k, spec.l, spec.depth
    sample = sample_channel(D, D, k, rng)
    op = SuperOperator(sample)
    state = reduced_density(sample, l, budget=spec.budget)
    approx_start = np.eye(D, dtype=complex) / D
    for _ in range(t):
        approx_start = op.apply_channel(approx_start)
    approx = _embed_power(sample.V, approx_start, l)
    approx_phys = partial_trace_bond(approx, D)
    dim_phys = k**l
    return {
        "trial": trial,
        "D": D,
        "k": k,
        "l": l,
        "t": t,
        "purity": state.physical_purity,
        "entropy": state.physical_entropy,
        "purity_approx": purity(approx_phys),
        "tv_gap": trace_norm(state.matrix - approx),
        "purity_full": state.purity,
        "entropy_full": state.entropy,
        "max_dev": float(np.linalg.norm(state.physical - np.eye(dim_phys) / dim_phys, 2)),
        "max_dev_full": float(
            np.linalg.norm(state.matrix - np.eye(D * dim_phys) / (D * dim_phys), 2)
        ),
        "isometry_residual": sample.isometry_residual(),
    }


def mps_purity_experiment(spec: MPSEnsembleSpec) -> dict:
    """Per-trial rows plus mean/SE summaries of purity, entropy and the approximation gap."""
    rows = [mps_trial(spec, i) for i in range(spec.trials)]
    return {"rows": rows, "summary": summarize(rows, ("purity", "entropy", "purity_approx",
                                                       "tv_gap", "purity_full", "entropy_full",
                                                       "max_dev", "max_dev_full"))}
