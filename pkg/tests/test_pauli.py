import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qntk.oracle import dense_pauli
from qntk.pauli import (
    PauliArray,
    PauliElement,
    commutes,
    expectation_zero_state,
    from_pauli_string,
    hermitian_from_bits,
    identity,
    is_hermitian,
    pauli_mul,
    times_i,
    to_string,
)


@st.composite
def paulis(draw, n=None):
    n = draw(st.integers(1, 5)) if n is None else n
    return PauliElement(
        n,
        draw(st.integers(0, 1)),
        draw(st.integers(0, 1)),
        draw(st.integers(0, (1 << n) - 1)),
        draw(st.integers(0, (1 << n) - 1)),
    )


@st.composite
def pauli_triples(draw):
    n = draw(st.integers(1, 4))
    return draw(paulis(n)), draw(paulis(n)), draw(paulis(n))


def phase_of(p):
    return 1j ** p.delta * (-1) ** p.epsilon


def tau(p):
    """Dense tau_a (without the phase) built from Z^z X^x factors."""
    bare = PauliElement(p.n, 0, 0, p.z, p.x)
    return dense_pauli(bare)


class TestProduct:
    def test_xz_is_minus_i_y(self):
        x = from_pauli_string("X")
        z = from_pauli_string("Z")
        assert pauli_mul(x, z) == from_pauli_string("-iY")
        assert pauli_mul(z, x) == from_pauli_string("iY")

    def test_identity_is_neutral(self):
        p = from_pauli_string("-XYZ")
        assert pauli_mul(identity(3), p) == p
        assert pauli_mul(p, identity(3)) == p

    def test_mismatched_sizes(self):
        with pytest.raises(ValueError):
            pauli_mul(from_pauli_string("X"), from_pauli_string("XX"))

    @settings(max_examples=300)
    @given(pauli_triples())
    def test_associative(self, triple):
        p, q, r = triple
        assert (p * q) * r == p * (q * r)

    @settings(max_examples=200)
    @given(pauli_triples())
    def test_matches_dense_product(self, triple):
        p, q, _ = triple
        np.testing.assert_allclose(dense_pauli(p * q), dense_pauli(p) @ dense_pauli(q), atol=1e-12)

    @settings(max_examples=200)
    @given(pauli_triples())
    def test_commutes_matches_dense(self, triple):
        p, q, _ = triple
        P, Q = dense_pauli(p), dense_pauli(q)
        assert commutes(p, q) == np.allclose(P @ Q, Q @ P)


class TestHermitian:
    def test_tau_11_is_iy(self):
        # tau for z = x = 1 is ZX = iY, so +Y needs delta = 1
        y = from_pauli_string("Y")
        assert (y.z, y.x, y.delta) == (1, 1, 1)
        np.testing.assert_allclose(dense_pauli(y), [[0, -1j], [1j, 0]])

    @given(paulis())
    def test_hermiticity_rule(self, p):
        M = dense_pauli(p)
        assert is_hermitian(p) == np.allclose(M, M.conj().T)

    @given(st.integers(1, 5).flatmap(lambda n: st.tuples(
        st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1), st.booleans())))
    def test_hermitian_from_bits(self, args):
        n, z, x, neg = args
        p = hermitian_from_bits(n, z, x, neg)
        assert is_hermitian(p)
        assert to_string(p).startswith("-") == neg


class TestExpectation:
    @pytest.mark.parametrize("text, value", [("Z", 1), ("-Z", -1), ("X", 0), ("Y", 0), ("ZIZ", 1), ("-IZI", -1), ("ZY", 0)])
    def test_known(self, text, value):
        assert expectation_zero_state(from_pauli_string(text)) == value

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            expectation_zero_state(from_pauli_string("iZ"))

    @given(paulis())
    def test_matches_dense(self, p):
        if not is_hermitian(p):
            return
        assert expectation_zero_state(p) == pytest.approx(dense_pauli(p)[0, 0].real, abs=1e-12)


class TestStrings:
    @pytest.mark.parametrize("text", ["X", "-Y", "iZ", "-iXY", "IIII", "XYZI"])
    def test_round_trip(self, text):
        assert to_string(from_pauli_string(text)) == text

    def test_plus_prefix(self):
        assert from_pauli_string("+XZ") == from_pauli_string("XZ")

    @pytest.mark.parametrize("bad", ["", "-", "XQ", "x"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            from_pauli_string(bad)

    @given(paulis())
    def test_parse_inverts_print(self, p):
        assert from_pauli_string(to_string(p)) == p

    def test_times_i_cycles(self):
        p = from_pauli_string("X")
        assert times_i(p, 2) == -p
        assert times_i(p, 4) == p


class TestPauliArray:
    @given(st.lists(paulis(3), min_size=1, max_size=20))
    def test_round_trip(self, elements):
        arr = PauliArray.from_elements(elements)
        assert [arr.element(i) for i in range(len(arr))] == elements

    def test_wide_packing(self):
        n = 130
        p = PauliElement(n, 0, 1, (1 << 129) | 5, (1 << 64) | 1)
        arr = PauliArray.broadcast(p, 3)
        assert arr.z.shape == (3, 3)
        assert arr.element(2) == p

    def test_expectation(self):
        els = [from_pauli_string(s) for s in ("Z", "-Z", "X", "Y")]
        np.testing.assert_array_equal(PauliArray.from_elements(els).expectation_zero_state(), [1, -1, 0, 0])
