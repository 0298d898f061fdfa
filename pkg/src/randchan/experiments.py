"""Monte Carlo harness and the experiment families behind the CLI.

Trials run on a thread pool but each owns the stream ``trial_rng(seed, i)``
and results are assembled in trial order, so output does not depend on the
pool size.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import bounds
from .channels import (
    SuperOperator,
    choi_matrix,
    estimate_twirl_structure,
    gaussian_model_norm,
    realign,
    restricted_norm,
    sample_channel,
    spectral_report,
)
from .moments import MomentSpec, exact_moment_f, limit_moment
from .rng import trial_rng

INVARIANT_TOL = 1e-12


class TrialError(RuntimeError):
    def __init__(self, trial, cause):
        super().__init__(f"trial {trial} failed: {cause}")
        self.trial = trial
        self.cause = cause


@dataclass
class TrialBatch:
    rows: List[dict]
    truncated: bool = False
    error: Optional[str] = None


def run_trials(fn: Callable[[int], dict], trials: int, threads: int = 1) -> TrialBatch:
    """Run ``fn(trial)`` for every trial; on failure keep the completed prefix."""
    rows: List[dict] = []
    if threads <= 1:
        for i in range(trials):
            try:
                rows.append(fn(i))
            except Exception as exc:  # noqa: BLE001 - reported with the trial index
                return TrialBatch(rows, True, str(TrialError(i, exc)))
        return TrialBatch(rows)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i) for i in range(trials)]
        for i, fut in enumerate(futures):
            try:
                rows.append(fut.result())
            except Exception as exc:  # noqa: BLE001
                for rest in futures[i + 1:]:
                    rest.cancel()
                return TrialBatch(rows, True, str(TrialError(i, exc)))
    return TrialBatch(rows)


# ---------------------------------------------------------------------------
# channel spectra


GAP_COLUMNS = ["trial", "n", "d", "k", "f", "s1", "s2", "restricted_norm", "lambda2_abs",
               "entropy", "iters", "gap_resolved", "isometry_residual", "invariants_ok"]


def gap_trial(n, d, k, seed, trial, mode="auto", tol=1e-8, max_iter=10_000, eigen=True,
              dense_checks=True) -> dict:
    rng = trial_rng(seed, trial)
    sample = sample_channel(n, d, k, rng)
    report = spectral_report(sample, mode=mode, tol=tol, max_iter=max_iter,
                             rng=trial_rng(seed, trial, stream=1), eigen=eigen)
    iso = sample.isometry_residual()
    tp = sample.trace_preservation_residual()
    ok = iso < INVARIANT_TOL and tp < INVARIANT_TOL
    ok &= report.s2 <= report.restricted_norm + 1e-8
    ok &= report.f <= report.s1**2 + 1e-8
    if dense_checks and n * n * d * d <= 4096 * 4096 // 16:
        ok &= bool(structural_checks(sample)["ok"])
    return {
        "trial": trial,
        "n": n,
        "d": d,
        "k": k,
        "f": report.f,
        "s1": report.s1,
        "s2": report.s2,
        "restricted_norm": report.restricted_norm,
        "lambda2_abs": report.lambda2_abs,
        "entropy": report.fixed_point_entropy,
        "iters": sum(report.iterations.values()),
        "gap_resolved": report.gap_resolved,
        "isometry_residual": max(iso, tp),
        "invariants_ok": bool(ok),
    }


def structural_checks(sample, rng=None, vectors=20) -> dict:
    """Dense structural identities of one sample (Choi, realignment, trace preservation)."""
    rng = np.random.default_rng(rng)
    n, d = sample.n, sample.d
    dense = SuperOperator(sample, mode="dense")
    F = dense.dense
    C = choi_matrix(sample)
    choi_min = float(np.linalg.eigvalsh(C).min())
    choi_trace = float(np.trace(C).real)
    realign_err = float(np.abs(realign(C, n, d) * d - F).max())
    tp_err = float(np.linalg.norm(F.conj().T @ np.eye(n).reshape(-1) - np.eye(d).reshape(-1)))
    mf = SuperOperator(sample, mode="matrix-free")
    X = rng.standard_normal((d * d, vectors)) + 1j * rng.standard_normal((d * d, vectors))
    vec_err = float(np.linalg.norm(F @ X - mf.matvec(X)) / np.linalg.norm(F @ X))
    ok = (choi_min >= -1e-10 and abs(choi_trace - 1) <= 1e-10 and realign_err <= 1e-10
          and tp_err <= 1e-10 and vec_err <= 1e-10)
    return {"choi_min_eig": choi_min, "choi_trace": choi_trace, "realign_err": realign_err,
            "tp_err": tp_err, "vec_err": vec_err, "ok": ok}


# ---------------------------------------------------------------------------
# moments


def moment_row(spec: MomentSpec, allow_order_three=False, mc_trials=0, seed=0):
    exact = exact_moment_f(spec, allow_order_three=allow_order_three)
    lam = spec.lambda_realized
    limit = limit_moment(spec.p, spec.k, lam) if 0 < lam < spec.k else None
    row = {
        "p": spec.p,
        "n": spec.n,
        "d": spec.d,
        "k": spec.k,
        "lambda_realized": lam,
        "exact_num": exact.numerator,
        "exact_den": exact.denominator,
        "exact_float": float(exact),
        "limit_value": limit,
    }
    if mc_trials:
        vals = mc_overlap_moments(spec.n, spec.d, spec.k, spec.p, mc_trials, seed)
        row["mc_mean"] = float(vals.mean())
        row["mc_se"] = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return row


def mc_overlap_moments(n, d, k, p, trials, seed, chunk=4096):
    """``f^p`` over ``trials`` Haar channels, drawn in batches from per-chunk streams."""
    from .channels import overlap_f_batch, sample_haar_isometry

    out = np.empty(trials)
    done = 0
    chunk_index = 0
    while done < trials:
        b = min(chunk, trials - done)
        rng = trial_rng(seed, chunk_index)
        V = sample_haar_isometry(n * k, d, rng, size=b)
        kraus = V.reshape(b, n, k, d).transpose(0, 2, 1, 3)
        out[done:done + b] = overlap_f_batch(kraus) ** p
        done += b
        chunk_index += 1
    return out


# ---------------------------------------------------------------------------
# bounds


BOUND_COLUMNS = ["k", "lambda", "chi", "g", "sv_gap_lb", "sv_gap_ub", "ev2_ub", "explicit_lb"]


def bounds_rows(ks, lam):
    rows = []
    for k in ks:
        b = bounds.bound_set(k, lam)
        rows.append({
            "k": k, "lambda": lam, "chi": b.chi, "g": b.g, "sv_gap_lb": b.sv_gap_lb,
            "sv_gap_ub": b.sv_gap_ub, "ev2_ub": b.ev2_ub, "explicit_lb": b.explicit_lb,
        })
    return rows


def bounds_thresholds(lam):
    out = {}
    try:
        out["sv_gap_lower_zero"] = bounds.threshold(lambda k: bounds.sv_gap_lower(k, lam), 0.0,
                                                    (max(1.0001, lam * 1.0001), 1e6))
    except (bounds.NoSignChangeError, ValueError):
        out["sv_gap_lower_zero"] = None
    if lam == 1:
        out["ev2_upper_one"] = bounds.threshold(bounds.ev2_upper, 1.0, (2.0, 1e6))
    return out


# ---------------------------------------------------------------------------
# twirl and Gaussian model


TWIRL_COLUMNS = ["M", "N", "trials", "diag_overlap", "diag_overlap_se", "chi_hat", "chi_hat_se",
                 "chi_floor", "chi_limit", "offdiag_flatness"]


def twirl_row(M, N, trials, seed, index):
    est = estimate_twirl_structure(M, N, trials, trial_rng(seed, index))
    return {
        "M": M, "N": N, "trials": trials,
        "diag_overlap": est.diag_overlap, "diag_overlap_se": est.diag_overlap_se,
        "chi_hat": est.chi_hat, "chi_hat_se": est.chi_hat_se,
        "chi_floor": bounds.chi_finite_floor(N),
        "chi_limit": bounds.chi_limit(M / N),
        "offdiag_flatness": est.offdiag_flatness,
    }


GAUSSIAN_COLUMNS = ["trial", "n", "d", "k", "gaussian_norm", "restricted_norm"]


def gaussian_trial(n, d, k, seed, trial, tol=1e-8, mode="auto"):
    rng = trial_rng(seed, trial)
    g = float(gaussian_model_norm(n, d, k, 1, rng)[0])
    sample = sample_channel(n, d, k, trial_rng(seed, trial, stream=1))
    rn = restricted_norm(SuperOperator(sample, mode=mode), tol=tol, rng=trial_rng(seed, trial, 2))
    return {"trial": trial, "n": n, "d": d, "k": k, "gaussian_norm": g, "restricted_norm": rn}


def gaussian_summary(rows, n, d, k, chi_trials, seed):
    est = estimate_twirl_structure(n * k, d, chi_trials, trial_rng(seed, 10**9), flatness=False)
    g_mean = float(np.mean([r["gaussian_norm"] for r in rows])) if rows else float("nan")
    r_mean = float(np.mean([r["restricted_norm"] for r in rows])) if rows else float("nan")
    lam = d / n
    return {
        "chi_hat": est.chi_hat,
        "chi_hat_se": est.chi_hat_se,
        "comparison_lhs": r_mean,
        "comparison_rhs": 2.0 / est.chi_hat * g_mean,
        "comparison_holds": bool(r_mean <= 2.0 / est.chi_hat * g_mean),
        "gaussian_leading_term": (1 + math.sqrt(lam)) ** 2 / math.sqrt(k),
    }
