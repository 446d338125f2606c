import numpy as np
import pytest

from walshlab.core import (
    AnfParseError,
    DenseCapExceeded,
    TruthTable,
    dense_cap,
    fwht_inplace,
    parse_anf,
    popcounts,
    reverse,
    set_dense_cap,
    table_from_anf,
    walsh_transform,
)
from walshlab.report import QUINTIC_MAX_ANF

from conftest import random_table


def slow_walsh(f: TruthTable) -> list[int]:
    """Direct O(4^n) definition of the integer correlations."""
    out = []
    for a in range(f.size):
        s = 0
        for x in range(f.size):
            s += (-1) ** (f.value(x) ^ (bin(x & a).count("1") & 1))
        out.append(s)
    return out


# --- truth tables ---------------------------------------------------------------


def test_hex_round_trip(rng):
    for n in (1, 2, 3, 5, 8):
        for _ in range(20):
            t = random_table(rng, n)
            assert TruthTable.from_hex(t.to_hex(), n) == t


def test_hex_digit_counts():
    assert TruthTable(1, 0b10).to_hex() == "2"
    assert TruthTable(2, 0b0110).to_hex() == "6"
    assert len(TruthTable(5, 0).to_hex()) == 8
    with pytest.raises(ValueError):
        TruthTable.from_hex("123", 5)


def test_table_basics():
    t = TruthTable(2, 0b0110)
    assert t.size == 4
    assert t.weight == 2
    assert t.balanced
    assert [t.value(x) for x in range(4)] == [0, 1, 1, 0]
    assert t.complement().bits == 0b1001
    assert TruthTable.from_bits([0, 1, 1, 0]) == t
    with pytest.raises(ValueError):
        TruthTable(0, 0)
    with pytest.raises(ValueError):
        TruthTable(1, 5)


# --- ANF ------------------------------------------------------------------------


def test_from_anf_single_variable():
    t = table_from_anf("X1", 1)
    assert (t.value(0), t.value(1)) == (0, 1)


def test_from_anf_product():
    t = table_from_anf("X1*X2", 2)
    assert [t.value(x) for x in range(4)] == [0, 0, 0, 1]
    assert table_from_anf("x1x2", 2) == t
    assert table_from_anf("X2·X1", 2) == t


def test_from_anf_constant_and_cancellation():
    one = table_from_anf("1", 2)
    assert one.weight == 4
    zero = table_from_anf("X1 + X1", 2)
    assert zero.weight == 0
    mixed = table_from_anf("1 ^ X1", 1)
    assert [mixed.value(x) for x in range(2)] == [1, 0]


def test_from_anf_quintic_witness_weight():
    # weight of the 16/7 witness, confirmed by direct evaluation
    t = table_from_anf(QUINTIC_MAX_ANF, 5)
    monos = [(4, 3), (5, 2), (5, 4, 1), (5, 4, 2), (5, 4, 3)]
    direct = 0
    for x in range(32):
        acc = 0
        for mono in monos:
            term = 1
            for j in mono:
                term &= (x >> (j - 1)) & 1
            acc ^= term
        direct += acc
        assert t.value(x) == acc
    assert t.weight == direct == 12


def test_parse_anf_errors():
    with pytest.raises(AnfParseError) as err:
        parse_anf("X1 + @", 2)
    assert err.value.position == 5
    with pytest.raises(AnfParseError):
        parse_anf("", 2)
    with pytest.raises(AnfParseError):
        parse_anf("+ X1", 2)
    with pytest.raises(ValueError):
        parse_anf("X3", 2)


def test_parse_anf_xor_symbols():
    assert parse_anf("X1 + X2", 2) == parse_anf("X1 ^ X2", 2) == parse_anf("X1 ⊕ X2", 2)


# --- Walsh transform ------------------------------------------------------------


def test_walsh_dictator():
    s = walsh_transform(table_from_anf("X1", 1))
    assert s.corr.tolist() == [0, 2]


def test_walsh_parity_two_vars():
    s = walsh_transform(table_from_anf("X1 + X2", 2))
    assert s.corr.tolist() == [0, 0, 0, 4]


def test_walsh_matches_direct_sum(rng):
    for v in range(256):
        t = TruthTable(3, v)
        assert walsh_transform(t).corr.tolist() == slow_walsh(t)
    for n in (4, 5, 6):
        for _ in range(10):
            t = random_table(rng, n)
            assert walsh_transform(t).corr.tolist() == slow_walsh(t)


def test_walsh_quintic_witness_support():
    # sixteen nonzero correlations, all of square 64 (Parseval: 16 * 64 = 4^5)
    s = walsh_transform(table_from_anf(QUINTIC_MAX_ANF, 5))
    nonzero = s.corr[s.corr != 0]
    assert nonzero.size == 16
    assert set((nonzero * nonzero).tolist()) == {64}


def test_parseval_random(rng):
    for n in range(1, 11):
        for _ in range(50):
            s = walsh_transform(random_table(rng, n))
            assert s.parseval_holds()
            assert int(np.abs(s.corr).max()) <= s.size
            assert not np.any(s.corr & 1)


def test_butterfly_involution(rng):
    for n in (1, 3, 6):
        t = random_table(rng, n)
        signs = t.signs().astype(np.int64)
        twice = fwht_inplace(fwht_inplace(signs.copy()))
        assert np.array_equal(twice, signs * t.size)


def test_spectrum_is_immutable():
    s = walsh_transform(TruthTable(2, 0b0110))
    with pytest.raises(ValueError):
        s.corr[0] = 1


def test_dense_cap_error():
    old = dense_cap()
    try:
        set_dense_cap(4)
        with pytest.raises(DenseCapExceeded) as err:
            walsh_transform(TruthTable(5, 0))
        assert "cap 4" in str(err.value)
        assert err.value.cap == 4
    finally:
        set_dense_cap(old)
    with pytest.raises(ValueError):
        set_dense_cap(0)


# --- reversal --------------------------------------------------------------------


def test_reverse_examples():
    assert reverse(TruthTable(1, 0b10)).bits == 0b01
    palindrome = TruthTable(2, 0b0110)
    assert reverse(palindrome) == palindrome


def test_reverse_involution(rng):
    for n in (1, 4, 7):
        for _ in range(20):
            t = random_table(rng, n)
            assert reverse(reverse(t)) == t


def test_reverse_spectrum_sign_rule(rng):
    # c_rev(a) = (-1)^wt(a) * c(a)
    for n in range(1, 11):
        signs = 1 - 2 * (popcounts(1 << n) & 1)
        for _ in range(30):
            t = random_table(rng, n)
            expected = signs * walsh_transform(t).corr
            assert np.array_equal(walsh_transform(reverse(t)).corr, expected)


def test_popcounts():
    assert popcounts(8).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]
