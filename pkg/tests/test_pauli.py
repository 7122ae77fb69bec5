import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dqc1sim.oracle import kron_dense, pauli_matrix, to_dense
from dqc1sim.pauli import (
    PauliString,
    PauliSum,
    add_scaled,
    commutator,
    diagonal_entries,
    diagonal_entry,
    diagonal_entry_sum,
    dumps,
    loads,
    multiply,
    product,
    truncate,
)

P = PauliString.from_label


def S(*terms, n=None):
    n = n or len(terms[0][0])
    return PauliSum.from_terms(n, terms, threshold=0.0)


def all_strings(n):
    return [P("".join(w)) for w in itertools.product("IXYZ", repeat=n)]


def random_sum(rng, n, k):
    N = 1 << n
    return PauliSum(n, rng.integers(0, N, k), rng.integers(0, N, k),
                    rng.normal(size=k) + 1j * rng.normal(size=k))


class TestPauliString:
    def test_label_round_trip(self):
        for label in ["I", "XYZ", "IIZX", "YYYY"]:
            assert P(label).label == label

    def test_qubit_zero_is_leftmost(self):
        p = P("XIZ")
        assert p.x == 0b001 and p.z == 0b100

    def test_bits_bounded_by_n(self):
        with pytest.raises(ValueError):
            PauliString(2, x=0b100)

    def test_bad_character(self):
        with pytest.raises(ValueError):
            P("XQ")

    def test_strings_are_hashable_keys(self):
        assert {P("XY"): 1}[P("XY")] == 1


class TestMultiply:
    def test_x_times_z(self):
        assert multiply(P("X"), P("Z")) == (-1j, P("Y"))

    def test_identity(self):
        for p in all_strings(2):
            assert multiply(P("II"), p) == (1, p)

    def test_zx_squared(self):
        assert multiply(P("ZX"), P("ZX")) == (1, P("II"))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            multiply(P("X"), P("XX"))

    def test_exhaustive_two_qubit_against_dense(self):
        for a, b in itertools.product(all_strings(2), repeat=2):
            phase, c = multiply(a, b)
            assert phase in (1, 1j, -1, -1j)
            np.testing.assert_array_equal(pauli_matrix(a) @ pauli_matrix(b), phase * pauli_matrix(c))

    def test_associative(self):
        strings = all_strings(2)
        for a, b, c in itertools.product(strings[::3], strings[1::3], strings[2::3]):
            p1, ab = multiply(a, b)
            p2, ab_c = multiply(ab, c)
            p3, bc = multiply(b, c)
            p4, a_bc = multiply(a, bc)
            assert ab_c == a_bc and p1 * p2 == p3 * p4


class TestCommutator:
    def test_z_x(self):
        assert commutator(S(("Z", 1)), S(("X", 1))) == S(("Y", 2j))

    def test_self_commutator_vanishes(self):
        h = S(("XYZ", 0.3), ("ZZI", -1.2))
        assert len(commutator(h, h)) == 0

    def test_disjoint_supports(self):
        assert len(commutator(S(("ZI", 1)), S(("IX", 1)))) == 0

    def test_exhaustive_two_qubit_against_dense(self):
        for a, b in itertools.product(all_strings(2), repeat=2):
            c = commutator(S((a.label, 1)), S((b.label, 1)))
            ma, mb = pauli_matrix(a), pauli_matrix(b)
            np.testing.assert_allclose(kron_dense(c), ma @ mb - mb @ ma, atol=0)
            assert len(c) <= 1

    def test_random_sums_against_dense(self):
        rng = np.random.default_rng(3)
        for n in (1, 3, 5):
            a, b = random_sum(rng, n, 7), random_sum(rng, n, 9)
            ma, mb = to_dense(a), to_dense(b)
            np.testing.assert_allclose(to_dense(commutator(a, b)), ma @ mb - mb @ ma, atol=1e-10)
            np.testing.assert_allclose(to_dense(product(a, b)), ma @ mb, atol=1e-10)

    def test_i_times_commutator_of_hermitians_is_hermitian(self):
        rng = np.random.default_rng(4)
        a = random_sum(rng, 4, 10).real()
        b = random_sum(rng, 4, 10).real()
        assert (commutator(a, b) * 1j).is_hermitian(1e-10)


class TestAddTruncate:
    def test_add_zero_multiple(self):
        a = S(("XZ", 1.5), ("YY", -2))
        assert add_scaled(a, S(("ZZ", 4)), 0.0) == a

    def test_cancel(self):
        a = S(("XZ", 1.5), ("YY", -2))
        assert len(add_scaled(a, a, -1.0)) == 0

    def test_merge(self):
        assert add_scaled(S(("X", 2)), S(("X", 3))) == S(("X", 5))

    def test_mismatch(self):
        with pytest.raises(ValueError):
            add_scaled(S(("X", 1)), S(("XX", 1)))

    def test_truncate_zero_is_identity(self):
        h = S(("X", 1e-15), ("Z", 2))
        assert truncate(h, 0) == h

    def test_truncate_drops_dust(self):
        assert truncate(S(("X", 1e-15), ("Z", 2)), 1e-12) == S(("Z", 2))

    @given(st.floats(0, 2), st.floats(0, 2))
    def test_truncate_monotone(self, t1, t2):
        h = random_sum(np.random.default_rng(0), 3, 20)
        lo, hi = sorted((t1, t2))
        assert len(truncate(h, hi)) <= len(truncate(h, lo))

    def test_negative_threshold(self):
        with pytest.raises(ValueError):
            truncate(S(("X", 1)), -1)


class TestDiagonal:
    def test_zz(self):
        assert diagonal_entry(P("ZZ"), 0b01) == -1

    def test_x_is_off_diagonal(self):
        assert all(diagonal_entry(P("X"), q) == 0 for q in (0, 1))

    def test_ziz(self):
        assert diagonal_entry(P("ZIZ"), 0b101) == 1
        assert diagonal_entry(P("ZIZ"), 0b101) == pauli_matrix(P("ZIZ"))[5, 5]

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            diagonal_entry(P("ZZ"), 4)
        with pytest.raises(IndexError):
            diagonal_entry_sum(S(("ZZ", 1)), -1)

    def test_sum_empty_and_identity(self):
        assert diagonal_entry_sum(PauliSum.zero(3), 5) == 0
        assert diagonal_entry_sum(PauliSum.identity(3), 5) == 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_matches_dense_diagonal(self, n, k, seed):
        h = random_sum(np.random.default_rng(seed), n, k)
        dense = np.diag(kron_dense(h))
        np.testing.assert_allclose(diagonal_entries(h, np.arange(1 << n)), dense, atol=1e-10)
        assert abs(diagonal_entry_sum(h, (1 << n) - 1) - dense[-1]) <= 1e-10


class TestDense:
    def test_walsh_route_matches_kron_route(self):
        rng = np.random.default_rng(8)
        for n in (1, 2, 4, 6):
            h = random_sum(rng, n, 25)
            np.testing.assert_allclose(to_dense(h), kron_dense(h), atol=1e-12)


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(1)
        h = random_sum(rng, 5, 12)
        assert loads(dumps(h)) == h

    def test_format(self):
        text = dumps(S(("XI", 0.5), ("IZ", -1j)))
        assert text.splitlines() == ["-0.0 -1.0 IZ", "0.5 0.0 XI"]

    def test_empty_needs_n(self):
        with pytest.raises(ValueError):
            loads("")
        assert len(loads("", n_qubits=3)) == 0
