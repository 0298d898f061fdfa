
import numpy as np
import pytest
from hypothesis import given, strategies as st

from randchan.channels import (
    ConvergenceError,
    NonUniqueFixedPointWarning,
    RestrictedOperator,
    SuperOperator,
    contraction_profile,
    fixed_point,
    hermitian_top_eigs,
    overlap_f,
    purity,
    restricted_norm,
    sample_channel,
    second_eigenvalue_abs,
    spectral_report,
    top_singular_values,
    von_neumann_entropy,
)
from randchan.bounds import ev2_upper
from randchan.rng import trial_rng


def unitary_channel(n, seed):
    return sample_channel(n, n, 1, trial_rng(seed, 0))


def random_density(m, rank, rng):
    G = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


# --- singular values -----------------------------------------------------------------


@pytest.mark.parametrize("mode", ["dense", "matrix-free"])
def test_identity_superoperator(mode):
    op = SuperOperator(np.eye(2)[None], mode=mode)
    s, info = top_singular_values(op, 2, full_output=True)
    assert s == pytest.approx([1.0, 1.0], abs=1e-12)
    assert not info.gap_resolved


def test_matrix_free_matches_dense_svd():
    s = sample_channel(8, 8, 2, trial_rng(10, 0))
    dense = np.linalg.svd(SuperOperator(s, mode="dense").dense, compute_uv=False)[:2]
    mf = top_singular_values(SuperOperator(s), 2, rng=trial_rng(10, 1))
    assert mf == pytest.approx(dense, abs=1e-8)


def test_singular_values_accept_plain_arrays():
    A = np.diag([3.0, 2.0, 1.0]).astype(complex)
    assert top_singular_values(A, 2) == pytest.approx([3.0, 2.0])


def test_lanczos_reports_non_convergence():
    s = sample_channel(8, 8, 2, trial_rng(11, 0))
    with pytest.raises(ConvergenceError) as err:
        top_singular_values(SuperOperator(s), 2, tol=1e-15, max_iter=3)
    assert err.value.residual is not None


def test_hermitian_top_eigs_on_diagonal():
    diag = np.linspace(0, 1, 200)
    theta, vecs, info = hermitian_top_eigs(lambda x: diag * x, 200, nev=3, tol=1e-10,
                                           rng=np.random.default_rng(0))
    assert theta == pytest.approx(diag[::-1][:3], abs=1e-9)
    assert info.converged
    assert np.abs(vecs[:, 0]).argmax() == 199


# --- restricted norm ---------------------------------------------------------------------


def test_restricted_norm_unit_environment_below_s1():
    s = sample_channel(6, 4, 1, trial_rng(12, 0))
    op = SuperOperator(s)
    assert restricted_norm(op) <= top_singular_values(op, 1)[0] + 1e-10


@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_s2_bounded_by_restricted_norm(n, k, seed):
    s = sample_channel(n, n, k, trial_rng(seed, 0))
    op = SuperOperator(s, mode="dense")
    s1, s2 = np.linalg.svd(op.dense, compute_uv=False)[:2]
    rn = restricted_norm(op)
    assert s2 <= rn + 1e-8
    assert rn <= s1 + 1e-10


def test_restricted_operator_dense_matches_matvec():
    s = sample_channel(4, 3, 2, trial_rng(13, 0))
    r = RestrictedOperator(SuperOperator(s, mode="dense"))
    rm = RestrictedOperator(SuperOperator(s))
    x = np.random.default_rng(0).standard_normal(9) + 0j
    assert np.allclose(r.dense @ x, rm.matvec(x), atol=1e-13)


# --- second eigenvalue -----------------------------------------------------------------


def test_unitary_channel_has_unit_second_eigenvalue():
    op = SuperOperator(unitary_channel(5, 0))
    with pytest.warns(NonUniqueFixedPointWarning):
        assert second_eigenvalue_abs(op) == pytest.approx(1.0, abs=1e-10)
    with pytest.warns(NonUniqueFixedPointWarning):
        second_eigenvalue_abs(SuperOperator(unitary_channel(5, 0), mode="dense"))


@pytest.mark.parametrize("n, k", [(8, 4), (20, 3)])
def test_second_eigenvalue_dense_vs_matrix_free(n, k):
    s = sample_channel(n, n, k, trial_rng(14, k))
    dense = second_eigenvalue_abs(SuperOperator(s, mode="dense"))
    mf = second_eigenvalue_abs(SuperOperator(s), rng=trial_rng(14, 99))
    assert abs(dense - mf) < 1e-6
    assert dense < 1


def test_second_eigenvalue_needs_square():
    with pytest.raises(ValueError):
        second_eigenvalue_abs(SuperOperator(sample_channel(4, 3, 2, trial_rng(0, 0))))


# --- fixed point -------------------------------------------------------------------------


def test_unital_fixed_point():
    rho = fixed_point(unitary_channel(6, 1))
    assert np.allclose(rho, np.eye(6) / 6, atol=1e-14)


def test_fixed_point_is_state():
    s = sample_channel(64, 64, 8, trial_rng(15, 0))
    lam = fixed_point(s, tol=1e-12)
    assert abs(np.trace(lam) - 1) <= 1e-10
    assert np.linalg.eigvalsh(lam).min() >= -1e-10
    op = SuperOperator(s)
    assert np.linalg.norm(op.apply_channel(lam) - lam) <= 1e-12


def test_fixed_point_contraction_tail():
    s = sample_channel(16, 16, 4, trial_rng(16, 0))
    op = SuperOperator(s)
    lam, hist = fixed_point(op, tol=1e-13, history=True)
    l2 = second_eigenvalue_abs(SuperOperator(s, mode="dense"))
    hist = np.array(hist)
    tail = hist[-11:]
    ratios = tail[1:] / tail[:-1]
    assert np.all(ratios <= l2 + 0.05)
    prof = contraction_profile(op, lam, 30)
    assert np.all(prof <= 2 * l2 ** np.arange(31) + 1e-8)


def test_fixed_point_non_convergence_reports_history():
    s = sample_channel(16, 16, 2, trial_rng(17, 0))
    with pytest.raises(ConvergenceError) as err:
        fixed_point(s, tol=1e-14, max_iter=3)
    assert len(err.value.history) == 3
    assert err.value.residual == err.value.history[-1]


def test_fixed_point_needs_square():
    with pytest.raises(ValueError):
        fixed_point(sample_channel(4, 3, 2, trial_rng(0, 0)))


# --- entropy and purity ------------------------------------------------------------------


def test_entropy_examples():
    assert von_neumann_entropy(np.eye(7) / 7) == pytest.approx(np.log(7), abs=1e-12)
    v = np.zeros(5)
    v[2] = 1
    assert von_neumann_entropy(np.outer(v, v)) == pytest.approx(0, abs=1e-14)
    assert von_neumann_entropy(np.eye(4) / 4, base=2) == pytest.approx(2, abs=1e-12)
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([1.5, -0.5]))


def test_purity_examples():
    assert purity(np.eye(9) / 9) == pytest.approx(1 / 9)
    assert purity(np.diag([1.0, 0, 0])) == 1.0


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_entropy_dominates_log_purity(m, rank, seed):
    rho = random_density(m, rank, np.random.default_rng(seed))
    assert von_neumann_entropy(rho) >= -np.log(purity(rho)) - 1e-10
    assert 1 / m - 1e-12 <= purity(rho) <= 1 + 1e-12


# --- reports ---------------------------------------------------------------------------------


@pytest.mark.parametrize("n, d, k", [(4, 4, 2), (8, 8, 3), (16, 16, 2), (8, 5, 2), (12, 16, 3)])
def test_report_dense_and_matrix_free_agree(n, d, k):
    s = sample_channel(n, d, k, trial_rng(18, n * 100 + d))
    dense = spectral_report(s, mode="dense")
    mf = spectral_report(s, mode="matrix-free", rng=trial_rng(18, 1))
    for name in ("f", "s1", "s2", "restricted_norm", "lambda2_abs", "fixed_point_entropy"):
        a, b = getattr(dense, name), getattr(mf, name)
        if n != d and name in ("lambda2_abs", "fixed_point_entropy"):
            assert a is None and b is None
            continue
        assert abs(a - b) <= 1e-8, name


@given(st.integers(2, 8), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_report_invariants(n, k, seed):
    s = sample_channel(n, n, k, trial_rng(seed, 0))
    r = spectral_report(s, mode="dense")
    assert r.s1 >= r.s2 >= 0
    assert r.s2 <= r.restricted_norm + 1e-8
    assert r.f <= r.s1**2 * (1 + 1e-12)
    assert r.s1 >= np.sqrt(overlap_f(s)) - 1e-12


def test_report_skips_eigen_for_rectangular():
    r = spectral_report(sample_channel(6, 4, 2, trial_rng(19, 0)))
    assert r.lambda2_abs is None and r.fixed_point_entropy is None


@pytest.mark.parametrize("mode", ["dense", "matrix-free"])
@pytest.mark.parametrize("n, d", [(3, 1), (1, 2)])
def test_report_rank_one_superoperator_pads_zero(n, d, mode):
    rep = spectral_report(sample_channel(n, d, 2, np.random.default_rng(3)), mode=mode)
    assert rep.s2 == 0.0
    assert rep.s1 == pytest.approx(np.sqrt(rep.f), abs=1e-10)


@pytest.mark.parametrize("mode", ["dense", "matrix-free"])
def test_second_eigenvalue_trivial_channel_is_zero(mode):
    sample = sample_channel(1, 1, 3, np.random.default_rng(0))
    assert second_eigenvalue_abs(SuperOperator(sample, mode=mode)) == 0.0


def test_second_eigenvalue_below_bound_at_k169():
    # 10 trials at a loose tolerance: the bound sits near 1, far above typical values
    bound = ev2_upper(169)
    values = []
    for t in range(10):
        sample = sample_channel(64, 64, 169, trial_rng(169, t))
        op = SuperOperator(sample, mode="matrix-free")
        values.append(second_eigenvalue_abs(op, tol=1e-4, nev=2, rng=trial_rng(169, t, 1)))
    assert sum(v < bound for v in values) >= 9
