import numpy as np
import pytest
from hypothesis import given, strategies as st

from randchan.channels import SuperOperator, fixed_point, sample_channel
from randchan.mps import (
    BudgetExceededError,
    MPSEnsembleSpec,
    default_depth,
    embed_apply,
    mps_amplitude,
    mps_purity_experiment,
    mps_trial,
    partial_trace_bond,
    reduced_density,
    trace_norm,
)
from randchan.rng import trial_rng


def random_state(m, rng):
    G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def trace_new_site(rho, D, k, m=1):
    """Trace out the site inserted right after the bond register."""
    return np.einsum("aimbic->ambc", rho.reshape(D, k, m, D, k, m)).reshape(D * m, D * m)


@given(st.integers(2, 6), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_embedding_preserves_trace_and_positivity(D, k, m, seed):
    s = sample_channel(D, D, k, trial_rng(seed, 0))
    X = random_state(D * m, np.random.default_rng(seed))
    Y = embed_apply(s.V, X)
    assert Y.shape == (D * k * m, D * k * m)
    assert abs(np.trace(Y) - np.trace(X)) < 1e-12
    assert np.linalg.eigvalsh(Y).min() > -1e-12


@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_tracing_new_site_gives_channel(D, k, seed):
    s = sample_channel(D, D, k, trial_rng(seed, 0))
    X = random_state(D, np.random.default_rng(seed))
    phi = SuperOperator(s).apply_channel(X)
    assert np.allclose(trace_new_site(embed_apply(s.V, X), D, k), phi, atol=1e-13)


def test_embedding_with_existing_sites_acts_on_bond_only():
    D, k, m = 3, 2, 2
    s = sample_channel(D, D, k, trial_rng(30, 0))
    X = random_state(D * m, np.random.default_rng(1))
    Y = embed_apply(s.V, X)
    # tracing the new site leaves Phi (x) id applied to X
    phi_id = sum(np.kron(a, np.eye(m)) @ X @ np.kron(a, np.eye(m)).conj().T for a in s.kraus)
    assert np.allclose(trace_new_site(Y, D, k, m), phi_id, atol=1e-13)


def test_embedding_dimension_mismatch():
    s = sample_channel(3, 3, 2, trial_rng(0, 0))
    with pytest.raises(ValueError):
        embed_apply(s.V, np.eye(4))


def test_reduced_density_zero_sites_is_fixed_point():
    s = sample_channel(6, 6, 3, trial_rng(31, 0))
    st0 = reduced_density(s, 0)
    assert np.allclose(st0.matrix, fixed_point(s), atol=1e-12)


def test_reduced_density_unital_case():
    D = 5
    s = sample_channel(D, D, 1, trial_rng(32, 0))
    st2 = reduced_density(s, 2)
    assert st2.purity == pytest.approx(1 / D, abs=1e-12)
    assert np.allclose(st2.matrix, s.V @ s.V @ (np.eye(D) / D) @ s.V.conj().T @ s.V.conj().T,
                       atol=1e-14)


@pytest.mark.parametrize("D, k, l", [(8, 2, 3), (16, 4, 2), (6, 3, 1)])
def test_reduced_state_is_density_matrix(D, k, l):
    st_ = reduced_density(sample_channel(D, D, k, trial_rng(33, D)), l)
    for rho in (st_.matrix, st_.physical):
        assert abs(np.trace(rho) - 1) < 1e-10
        assert np.linalg.eigvalsh(rho).min() > -1e-10
    assert 0 < st_.purity <= 1
    assert st_.entropy >= -np.log(st_.purity) - 1e-10
    assert st_.physical_entropy >= -np.log(st_.physical_purity) - 1e-10
    assert st_.physical.shape == (k**l, k**l)


def test_reduced_density_budget_and_shape_checks():
    with pytest.raises(BudgetExceededError):
        reduced_density(sample_channel(32, 32, 4, trial_rng(0, 0)), 4)
    with pytest.raises(ValueError):
        reduced_density(sample_channel(4, 3, 2, trial_rng(0, 0)), 1)


def test_partial_trace_bond():
    A = random_state(3, np.random.default_rng(0))
    B = random_state(4, np.random.default_rng(1))
    assert np.allclose(partial_trace_bond(np.kron(A, B), 3), B)


def test_physical_state_is_ti_mps_marginal():
    # the two-site marginal of a long periodic chain is the bond-traced state
    D, k, N = 3, 2, 200
    s = sample_channel(D, D, k, trial_rng(34, 0))
    l = 2
    # exact periodic marginal via the transfer operator: tr_rest |psi><psi| / <psi|psi>
    T = sum(np.kron(a, a.conj()) for a in s.kraus)
    TN2 = np.linalg.matrix_power(T, N - l)
    rho = np.zeros((k**l, k**l), dtype=complex)
    for i in range(k**l):
        for j in range(k**l):
            # the major digit is the newest site
            i2, i1 = divmod(i, k)
            j2, j1 = divmod(j, k)
            Ai = np.kron(s.kraus[i2] @ s.kraus[i1], (s.kraus[j2] @ s.kraus[j1]).conj())
            rho[i, j] = np.trace(TN2 @ Ai)
    rho /= np.trace(rho)
    st_ = reduced_density(s, l)
    assert np.allclose(rho, st_.physical, atol=1e-8)


def test_amplitude_examples():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((1, 3, 3))
    assert mps_amplitude(A, [0] * 4) == pytest.approx(np.trace(np.linalg.matrix_power(A[0], 4)))
    kraus = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
    for i in range(3):
        assert mps_amplitude(kraus, [i]) == pytest.approx(np.trace(kraus[i]))
    # right-to-left: tr(A_2 A_1 A_0) for indices (0, 1, 2)
    assert mps_amplitude(kraus, [0, 1, 2]) == pytest.approx(np.trace(kraus[2] @ kraus[1] @ kraus[0]))
    with pytest.raises(IndexError):
        mps_amplitude(kraus, [3])


@given(st.lists(st.integers(0, 2), min_size=1, max_size=8), st.integers(0, 7))
def test_amplitude_cyclic_invariance(indices, shift):
    kraus = sample_channel(3, 3, 3, trial_rng(35, 0)).kraus
    shift %= len(indices)
    rotated = indices[shift:] + indices[:shift]
    assert mps_amplitude(kraus, rotated) == pytest.approx(mps_amplitude(kraus, indices), abs=1e-13)


def test_default_depth():
    assert default_depth(32) == 18
    assert default_depth(10**9) == 50


def test_spec_validation():
    with pytest.raises(ValueError):
        MPSEnsembleSpec(8, 2, 0, 1)
    with pytest.raises(BudgetExceededError):
        MPSEnsembleSpec(64, 4, 4, 1)
    assert MPSEnsembleSpec(8, 2, 2, 1, t=7).depth == 7


def test_approximation_gap_shrinks_with_depth():
    gaps = [mps_trial(MPSEnsembleSpec(8, 2, 2, 1, t=t, seed=3), 0)["tv_gap"] for t in (5, 10, 20)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_purity_decreases_with_sites():
    means = []
    for l in (1, 2, 3):
        res = mps_purity_experiment(MPSEnsembleSpec(8, 2, l, 30, seed=4))
        means.append(res["summary"]["purity"])
    for a, b in zip(means, means[1:]):
        assert b["mean"] <= a["mean"] + 3 * np.hypot(a["se"], b["se"])


def test_max_deviation_shrinks_with_bond_dimension():
    devs = []
    for D in (8, 16, 32):
        res = mps_purity_experiment(MPSEnsembleSpec(D, 2, 2, 10, seed=5))
        devs.append(res["summary"]["max_dev_full"]["mean"])
    assert devs[0] > devs[1] > devs[2]


def test_trial_is_reproducible():
    spec = MPSEnsembleSpec(8, 2, 2, 3, seed=6)
    assert mps_trial(spec, 1) == mps_trial(spec, 1)
    assert mps_trial(spec, 1)["purity"] != mps_trial(spec, 2)["purity"]


def test_trace_norm():
    assert trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)


def test_transfer_marginal_matches_state_vector():
    import itertools

    D, k, N = 2, 2, 10
    s = sample_channel(D, D, k, trial_rng(36, 0))
    psi = np.array([mps_amplitude(s.kraus, idx)
                    for idx in itertools.product(range(k), repeat=N)])
    # itertools varies the last index fastest, so site 1 is the major axis here
    M = psi.reshape(k, k, -1).transpose(1, 0, 2).reshape(k * k, -1)
    rho_vec = M @ M.conj().T
    T = sum(np.kron(a, a.conj()) for a in s.kraus)
    TN = np.linalg.matrix_power(T, N - 2)
    rho_T = np.empty((k * k, k * k), dtype=complex)
    for i in range(k * k):
        for j in range(k * k):
            i2, i1 = divmod(i, k)
            j2, j1 = divmod(j, k)
            rho_T[i, j] = np.trace(TN @ np.kron(s.kraus[i2] @ s.kraus[i1],
                                                (s.kraus[j2] @ s.kraus[j1]).conj()))
    assert np.allclose(rho_vec, rho_T, atol=1e-12)
