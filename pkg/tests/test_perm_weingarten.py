import json
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from randchan.perm_weingarten import (
    CycleType,
    OrderTooLargeError,
    Permutation,
    SingularGramError,
    WeingartenTable,
    all_permutations,
    catalan,
    convolution_residual,
    cycle_count,
    length,
    moebius,
    partitions,
    weingarten_asymptotic,
    weingarten_exact,
)

from oracles import transposition_distance, weingarten_float


def perms_of(max_degree=7):
    return st.integers(1, max_degree).flatmap(
        lambda p: st.permutations(range(1, p + 1)).map(lambda im: Permutation(tuple(im)))
    )


def pairs_of(max_degree=7):
    return st.integers(1, max_degree).flatmap(
        lambda p: st.tuples(
            st.permutations(range(1, p + 1)), st.permutations(range(1, p + 1))
        ).map(lambda ab: (Permutation(tuple(ab[0])), Permutation(tuple(ab[1]))))
    )


# --- permutations -----------------------------------------------------------


def test_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation((1, 1, 3))
    with pytest.raises(ValueError):
        Permutation((0, 1))


def test_composition_is_right_to_left():
    s = Permutation.from_cycles(3, (1, 2))
    t = Permutation.from_cycles(3, (2, 3))
    # (s*t)(3) = s(t(3)) = s(2) = 1
    assert (s * t)(3) == 1


@given(perms_of())
def test_inverse_composes_to_identity(s):
    assert (s * s.inverse()).is_identity()
    assert (s.inverse() * s).is_identity()


@given(perms_of())
def test_cycle_type_sums_to_degree_and_counts_cycles(s):
    ct = s.cycle_type()
    assert ct.degree == s.degree
    assert len(ct) == cycle_count(s)
    assert list(ct.parts) == sorted(ct.parts, reverse=True)


@pytest.mark.parametrize(
    "sigma, expected",
    [
        (Permutation.identity(4), 4),
        (Permutation.from_cycles(4, (1, 2), (3, 4)), 2),
        (Permutation.from_cycles(5, (1, 2, 3, 4, 5)), 1),
    ],
)
def test_cycle_count_examples(sigma, expected):
    assert cycle_count(sigma) == expected


def test_length_examples():
    assert length(Permutation.identity(5)) == 0
    assert length(Permutation.transposition(2, 1, 2)) == 1
    assert length(Permutation.from_cycles(4, (1, 2, 3, 4))) == 3


def test_length_is_transposition_distance_on_s4():
    dist = transposition_distance(4)
    for s in all_permutations(4):
        assert length(s) == dist[tuple(x - 1 for x in s.images)]


@given(pairs_of())
def test_length_triangle_inequality(pair):
    a, b = pair
    assert length(a * b) <= length(a) + length(b)


@given(pairs_of())
def test_geodesic_condition_is_additive(pair):
    # s lies on a geodesic id -> s -> t exactly when |s| + |s^-1 t| = |t|
    s, t = pair
    lhs = length(s) + length(s.inverse() * t)
    assert lhs >= length(t)
    if lhs == length(t):
        # then also the reversed path from t back to id is geodesic
        assert length(t.inverse() * s) + length(s.inverse()) == length(t)


def test_partitions_counts():
    assert [len(partitions(p)) for p in range(1, 8)] == [1, 2, 3, 5, 7, 11, 15]


def test_representative_has_cycle_type():
    for p in range(1, 7):
        for ct in partitions(p):
            assert ct.representative().cycle_type() == ct


# --- Moebius and Catalan -----------------------------------------------------


def test_catalan_matches_binomial_formula():
    for m in range(12):
        assert catalan(m) == comb(2 * m, m) // (m + 1)


def test_moebius_examples():
    assert moebius(Permutation.identity(6)) == 1
    assert moebius(Permutation.from_cycles(3, (1, 2, 3))) == 2
    assert moebius(Permutation.from_cycles(4, (1, 2), (3, 4))) == 1


@given(perms_of())
def test_moebius_multiplicative_over_cycles(s):
    expected = 1
    for cyc in s.cycles():
        ell = len(cyc)
        expected *= (-1) ** (ell - 1) * comb(2 * ell - 2, ell - 1) // ell
    assert moebius(s) == expected


# --- Weingarten ----------------------------------------------------------------


def test_weingarten_order_one():
    for n in range(1, 8):
        assert weingarten_exact(1, n)(Permutation.identity(1)) == Fraction(1, n)


def test_weingarten_order_two_closed_form():
    for n in range(2, 10):
        wg = weingarten_exact(2, n)
        assert wg(Permutation.identity(2)) == Fraction(1, n * n - 1)
        assert wg(Permutation.transposition(2, 1, 2)) == Fraction(-1, n * (n * n - 1))


def test_weingarten_order_three_closed_form():
    for n in range(3, 10):
        wg = weingarten_exact(3, n)
        den = (n * n - 1) * (n * n - 4)
        assert wg(Permutation.identity(3)) == Fraction(n * n - 2, n * den)
        assert wg(Permutation.transposition(3, 1, 2)) == Fraction(-1, den)
        assert wg(Permutation.from_cycles(3, (1, 2, 3))) == Fraction(2, n * den)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_convolution_identity_exact(p):
    for n in range(p, p + 7):
        res = convolution_residual(weingarten_exact(p, n))
        for s, val in res.items():
            assert val == (1 if s.is_identity() else 0)


@pytest.mark.parametrize("p, n", [(3, 5), (4, 4), (4, 9), (5, 6), (5, 11), (6, 8)])
def test_exact_matches_floating_gram_inverse(p, n):
    wg = weingarten_exact(p, n, cap=6)
    ref = weingarten_float(p, n)
    scale = max(abs(v) for v in ref.values())
    for perm0, val in ref.items():
        exact = wg(Permutation(tuple(x + 1 for x in perm0)))
        assert abs(float(exact) - val) <= 1e-9 * scale


def test_class_reduction_satisfies_convolution_at_order_five():
    res = convolution_residual(weingarten_exact(5, 7, cap=6))
    assert all(v == (1 if s.is_identity() else 0) for s, v in res.items())


@given(perms_of(4), st.permutations(range(1, 5)), st.integers(4, 12))
def test_weingarten_is_class_function(s, conj, n):
    if s.degree != 4:
        return
    c = Permutation(tuple(conj))
    wg = weingarten_exact(4, n)
    assert wg(c * s * c.inverse()) == wg(s)


def test_cap_and_singular_errors():
    with pytest.raises(OrderTooLargeError):
        weingarten_exact(5, 10)
    with pytest.raises(OrderTooLargeError):
        weingarten_exact(7, 10, cap=10)
    with pytest.raises(SingularGramError):
        weingarten_exact(3, 2)


def test_asymptotic_examples():
    assert weingarten_asymptotic(100, Permutation.identity(2)) == pytest.approx(1e-4, rel=1e-15)
    assert weingarten_asymptotic(100, Permutation.transposition(2, 1, 2)) == pytest.approx(
        -1e-6, rel=1e-15
    )


def test_asymptotic_relative_error_is_order_n_minus_two():
    # p = 3, n = 10: scaled exact value within O(n^-2) of the Moebius value
    n = 10
    wg = weingarten_exact(3, n)
    for ct in partitions(3):
        s = ct.representative()
        scaled = float(wg(s)) * n ** (3 + length(s))
        assert abs(scaled - moebius(s)) <= 10 / n**2 * abs(moebius(s))
    # p = 2 over n in {8, 16, 32}: the error times n^2 stays bounded
    for s in all_permutations(2):
        errs = [abs(float(weingarten_exact(2, n)(s)) / weingarten_asymptotic(n, s) - 1)
                for n in (8, 16, 32)]
        assert errs[0] > errs[1] > errs[2]
        scaled = [e * n**2 for e, n in zip(errs, (8, 16, 32))]
        assert max(scaled) / min(scaled) < 1.1


def test_table_json_round_trip():
    wg = weingarten_exact(3, 5)
    data = json.loads(wg.to_json())
    assert data["order"] == 3 and data["dimension"] == 5
    assert {tuple(e["cycle_type"]) for e in data["entries"]} == {(1, 1, 1), (2, 1), (3,)}
    assert WeingartenTable.from_dict(data) == wg


def test_cycle_type_normalizes_order():
    assert CycleType((1, 3, 2)).parts == (3, 2, 1)
