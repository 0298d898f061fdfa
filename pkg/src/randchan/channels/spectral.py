"""Spectral quantities of random channels: singular values, |lambda_2|, fixed points.

Matrix-free singular values come from a thick-restart Lanczos iteration on
``F^* F``: the search space grows by the (shared) Ritz residual direction,
and when it reaches ``basis_size`` it is compressed onto the leading Ritz
vectors.  The dense path is a full SVD / eigensolve and serves as oracle.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, asdict, field
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from ..rng import as_generator
from .superop import RestrictedOperator, SuperOperator, overlap_f

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history


class NonUniqueFixedPointWarning(RuntimeWarning):
    pass


@dataclass
class SolverInfo:
    iterations: int
    residual: float
    converged: bool = True
    gap_resolved: bool = True


def _random_unit(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _orthogonalize(t, basis):
    # two passes of classical Gram-Schmidt against the rows of ``basis``
    for _ in range(2):
        t = t - (basis.conj() @ t) @ basis
    return t


def hermitian_top_eigs(apply, dim, nev=1, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                       rng=None, basis_size=None):
    """Largest ``nev`` eigenvalues of a Hermitian PSD operator given by ``apply``.

    Convergence: every wanted Ritz pair has residual ``<= tol * theta_1``.
    ``max_iter`` bounds the number of operator applications.

    Returns ``(theta, vectors, SolverInfo)`` with ``theta`` descending and the
    Ritz vectors as columns.
    """
    rng = as_generator(rng)
    nev = min(nev, dim)
    m = basis_size or max(2 * nev + 24, 32)
    m = min(m, dim)
    keep = max(nev + 4, m // 2) if m < dim else m
    # basis vectors and their images are stored as rows
    V = np.empty((m, dim), dtype=complex)
    W = np.empty((m, dim), dtype=complex)
    # a block of nev start vectors, so an eigenvalue of multiplicity <= nev is
    # seen in full; a single Krylov sequence sees one copy only
    start = min(nev, m)
    V[:start] = np.linalg.qr(np.stack([_random_unit(dim, rng) for _ in range(start)], axis=1))[0].T
    for i in range(start):
        W[i] = apply(V[i])
    j, applications = start, start
    while True:
        H = V[:j].conj() @ W[:j].T
        H = 0.5 * (H + H.conj().T)
        theta, Y = np.linalg.eigh(H)
        theta, Y = theta[::-1], Y[:, ::-1]
        nw = min(nev, j)
        X = Y[:, :nw].T @ V[:j]
        R = Y[:, :nw].T @ W[:j] - theta[:nw, None] * X
        res = np.linalg.norm(R, axis=1)
        scale = max(abs(theta[0]), np.finfo(float).tiny)
        done = res <= tol * scale
        if (j >= nev and done.all()) or j == dim:
            info = SolverInfo(applications, float(res.max() / scale), True)
            return theta[:nev], X[:nev].T, info
        if applications >= max_iter:
            raise ConvergenceError(
                f"Lanczos did not converge in {applications} applications "
                f"(relative residual {res.max() / scale:.3g})",
                residual=float(res.max() / scale),
            )
        if j == m:
            Yk = Y[:, :keep].T
            V[:keep] = Yk @ V[:j]
            W[:keep] = Yk @ W[:j]
            j = keep
        # expand by the residual of the leading unconverged Ritz pair
        t = R[int(np.argmin(done))] if nw == nev else R[0]
        t = _orthogonalize(t, V[:j])
        norm = np.linalg.norm(t)
        if norm <= 1e-12 * max(np.linalg.norm(R), 1.0):
            t = _orthogonalize(_random_unit(dim, rng), V[:j])
            norm = np.linalg.norm(t)
        V[j] = t / norm
        W[j] = apply(V[j])
        j += 1
        applications += 1


def _as_operator(op):
    """Accept anything with ``matvec``/``rmatvec``/``shape``, a 2-d array, or Kraus data."""
    if isinstance(op, (SuperOperator, RestrictedOperator)) or (
        hasattr(op, "matvec") and hasattr(op, "rmatvec") and hasattr(op, "shape")
    ):
        return op
    if isinstance(op, np.ndarray) and op.ndim == 2:
        return _DenseMatrix(op)
    return SuperOperator(op)


class _DenseMatrix:
    mode = "dense"

    def __init__(self, F):
        self.dense = np.asarray(F, dtype=complex)
        self.shape = self.dense.shape

    def matvec(self, x):
        return self.dense @ x

    def rmatvec(self, y):
        return self.dense.conj().T @ y


def top_singular_values(op, count=2, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rng=None,
                        full_output=False):
    """Largest ``count`` singular values of ``op`` (descending).

    Dense operators use a full SVD; matrix-free ones run Lanczos on ``F^* F``.
    With ``full_output`` a :class:`SolverInfo` is returned too; its
    ``gap_resolved`` is False when ``s1 - s2 < 10 * tol``.  Requests beyond
    ``min(shape)`` are padded with exact zeros.
    """
    op = _as_operator(op)
    requested, count = count, min(count, *op.shape)
    if getattr(op, "mode", "matrix-free") == "dense":
        s = np.linalg.svd(op.dense, compute_uv=False)[:count]
        info = SolverInfo(0, 0.0, True)
    else:
        dim = op.shape[1]
        theta, _, info = hermitian_top_eigs(
            lambda x: op.rmatvec(op.matvec(x)), dim, nev=count, tol=tol,
            max_iter=max_iter, rng=rng,
        )
        s = np.sqrt(np.clip(theta, 0.0, None))
    s = np.concatenate([s, np.zeros(requested - len(s))])
    if len(s) >= 2:
        info.gap_resolved = bool(s[0] - s[1] >= 10 * tol)
    return (s, info) if full_output else s


def restricted_norm(op, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rng=None, full_output=False):
    """``||F (I - omega_d)||_inf``, the norm of ``F`` off the maximally entangled vector."""
    op = _as_operator(op)
    if isinstance(op, _DenseMatrix):
        d = int(round(np.sqrt(op.shape[1])))
        omega = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
        F = op.dense
        val = np.linalg.norm(F - np.outer(F @ omega, omega.conj()), 2)
        info = SolverInfo(0, 0.0, True)
    else:
        restricted = RestrictedOperator(op)
        if getattr(op, "mode", "matrix-free") == "dense":
            val = np.linalg.norm(restricted.dense, 2)
            info = SolverInfo(0, 0.0, True)
        else:
            theta, _, info = hermitian_top_eigs(
                lambda x: restricted.rmatvec(restricted.matvec(x)), op.shape[1], nev=1,
                tol=tol, max_iter=max_iter, rng=rng,
            )
            val = float(np.sqrt(max(theta[0], 0.0)))
    return (float(val), info) if full_output else float(val)


# ---------------------------------------------------------------------------
# fixed points and the second eigenvalue


def fixed_point(sample, tol=1e-12, max_iter=DEFAULT_MAX_ITER, history=False):
    """Invariant state of a channel ``M_n -> M_n``, iterating from ``I/n``.

    Stops once ``||Phi(rho) - rho||_2 <= tol``.  With ``history=True`` also
    returns the list of those residuals.  Raises :class:`ConvergenceError`
    (carrying the residual trace) after ``max_iter`` steps.
    """
    op = sample if isinstance(sample, SuperOperator) else SuperOperator(sample)
    if op.n != op.d:
        raise ValueError("fixed points need a square channel (d = n)")
    rho = np.eye(op.n, dtype=complex) / op.n
    residuals = []
    for _ in range(max_iter):
        nxt = op.apply_channel(rho)
        nxt = 0.5 * (nxt + nxt.conj().T)
        res = float(np.linalg.norm(nxt - rho))
        residuals.append(res)
        rho = nxt
        if res <= tol:
            return (rho, residuals) if history else rho
    raise ConvergenceError(
        f"fixed-point iteration did not reach {tol} in {max_iter} steps "
        f"(last residual {residuals[-1]:.3g})",
        residual=residuals[-1],
        history=residuals,
    )


def contraction_profile(sample, fixed, steps):
    """``||Phi^t(I/n) - fixed||_2`` for ``t = 0, ..., steps``."""
    op = sample if isinstance(sample, SuperOperator) else SuperOperator(sample)
    rho = np.eye(op.n, dtype=complex) / op.n
    out = [float(np.linalg.norm(rho - fixed))]
    for _ in range(steps):
        rho = op.apply_channel(rho)
        out.append(float(np.linalg.norm(rho - fixed)))
    return np.array(out)


def second_eigenvalue_abs(op, tol=1e-8, max_iter=DEFAULT_MAX_ITER, rng=None, nev=6,
                          fixed=None, full_output=False):
    """``|lambda_2(F)|`` for a square super-operator; the leading eigenvalue is 1.

    Matrix-free: the pair ``(1, vec(Lambda))`` with left vector ``vec(I)`` is
    removed by its spectral projector ``vec(Lambda) vec(I)^*``, then restarted
    Arnoldi (ARPACK) finds the largest remaining modulus.  Eigenvalues come in
    conjugate pairs, so several are requested (``nev``).  Dense: full
    eigensolve.  A warning is issued when the eigenvalue 1 looks degenerate.
    ``fixed`` may supply a precomputed fixed point.
    """
    op = _as_operator(op)
    if op.shape[0] != op.shape[1]:
        raise ValueError("second eigenvalue needs d = n")
    dim = op.shape[0]
    n = int(round(np.sqrt(dim)))
    info = SolverInfo(0, 0.0, True)
    if getattr(op, "mode", "matrix-free") == "dense":
        ev = np.sort(np.abs(np.linalg.eigvals(op.dense)))[::-1]
        # n = 1 has no second eigenvalue; the deflated spectrum is {0}
        value = float(ev[1]) if dim > 1 else 0.0
    else:
        lam = fixed_point(op, tol=1e-13, max_iter=max_iter) if fixed is None else fixed
        r = np.asarray(lam).reshape(-1)
        count = [0]

        def deflated(x):
            count[0] += 1
            x = np.asarray(x).reshape(-1)
            # <vec(I), x> = tr(X) and <vec(I), vec(Lambda)> = tr(Lambda) = 1
            return op.matvec(x) - r * x.reshape(n, n).trace()

        if dim <= 256:
            basis = np.eye(dim, dtype=complex)
            mat = np.stack([deflated(col) for col in basis], axis=1)
            vals = np.linalg.eigvals(mat)
        else:
            rng = as_generator(rng)
            lin = spla.LinearOperator((dim, dim), matvec=deflated, dtype=complex)
            want = min(nev, dim - 2)
            try:
                vals = spla.eigs(lin, k=want, which="LM", v0=_random_unit(dim, rng), tol=tol,
                                 maxiter=max_iter, ncv=min(dim, max(2 * want + 1, 60)),
                                 return_eigenvectors=False)
            except spla.ArpackNoConvergence as exc:
                raise ConvergenceError(f"Arnoldi did not converge: {exc}") from exc
        value = float(np.max(np.abs(vals)))
        info = SolverInfo(count[0], tol, True)
    if value > 1 - 1e-8:
        warnings.warn(
            "eigenvalue 1 of the channel appears degenerate; fixed point may not be unique",
            NonUniqueFixedPointWarning,
            stacklevel=2,
        )
    return (value, info) if full_output else value


def von_neumann_entropy(rho, base=None, tol=1e-10):
    """``-sum mu log mu`` over eigenvalues (natural log unless ``base`` is given)."""
    mu = np.linalg.eigvalsh(0.5 * (rho + np.conj(np.transpose(rho))))
    if mu.min() < -tol:
        raise ValueError(f"not positive semidefinite: eigenvalue {mu.min():.3g}")
    mu = mu[mu > 0]
    s = float(-np.sum(mu * np.log(mu)))
    return s / np.log(base) if base is not None else s


def purity(rho) -> float:
    """``tr(rho^2)`` via the Frobenius norm."""
    rho = np.asarray(rho)
    return float(np.vdot(rho, rho).real)


# ---------------------------------------------------------------------------


@dataclass
class SpectralReport:
    f: float
    s1: float
    s2: float
    restricted_norm: float
    lambda2_abs: Optional[float] = None
    fixed_point_entropy: Optional[float] = None
    gap_resolved: bool = True
    iterations: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def spectral_report(sample, mode="auto", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, rng=None,
                    eigen=True, max_dense_entries=None):
    """All spectral diagnostics of one channel sample.

    ``lambda2_abs`` and the fixed-point entropy are filled only when ``d = n``
    and ``eigen`` is true.
    """
    rng = as_generator(rng)
    kwargs = {} if max_dense_entries is None else {"max_dense_entries": max_dense_entries}
    op = SuperOperator(sample, mode=mode, **kwargs)
    (s1, s2), info = top_singular_values(op, 2, tol, max_iter, rng, full_output=True)
    rn, rinfo = restricted_norm(op, tol, max_iter, rng, full_output=True)
    report = SpectralReport(
        f=overlap_f(sample),
        s1=float(s1),
        s2=float(s2),
        restricted_norm=rn,
        gap_resolved=info.gap_resolved,
        iterations={"singular": info.iterations, "restricted": rinfo.iterations},
    )
    if eigen and op.n == op.d:
        lam, hist = fixed_point(op, max_iter=max_iter, history=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonUniqueFixedPointWarning)
            report.lambda2_abs, linfo = second_eigenvalue_abs(
                op, rng=rng, max_iter=max_iter, fixed=lam, full_output=True
            )
        report.fixed_point_entropy = von_neumann_entropy(lam)
        report.iterations["fixed_point"] = len(hist)
        report.iterations["arnoldi"] = linfo.iterations
    return report
