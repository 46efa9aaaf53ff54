import json
from itertools import combinations, product
from math import comb

import pytest
from hypothesis import given, strategies as st

from helpers import DATA
from sffgen import ecc
from sffgen.ecc import DecodeStatus, ProtectionMethod as PM


def brute_force_error_states(n_data, n_redundant, n_errors):
    n = n_data + n_redundant
    count = 0
    for _state in range(1 << n_data):
        for mask in range(1, 1 << n):
            if bin(mask).count("1") <= n_errors:
                count += 1
    return count


@pytest.mark.parametrize("method,width,expected", [
    (PM.SECDED, 4, 4),
    (PM.SECDED, 512, 11),
    (PM.DMR, 8, 8),
    (PM.TMR, 8, 16),
    (PM.PARITY, 100, 1),
    (PM.DED, 4, 3),
])
def test_redundant_bits(method, width, expected):
    assert ecc.redundant_bits(method, width) == expected


def test_redundant_bits_rejects_zero_width():
    with pytest.raises(ValueError):
        ecc.redundant_bits(PM.SECDED, 0)


@pytest.mark.parametrize("method", list(PM))
def test_redundant_bits_monotone(method):
    values = [ecc.redundant_bits(method, d) for d in range(1, 600)]
    assert values == sorted(values)


def test_secded_is_ded_plus_one():
    for d in range(1, 1025):
        assert ecc.redundant_bits(PM.SECDED, d) - ecc.redundant_bits(PM.DED, d) == 1


def test_code_rate():
    assert ecc.code_rate(PM.SECDED, 4) == 0.5
    assert ecc.code_rate(PM.SECDED, 512) == pytest.approx(512 / 523, abs=1e-12)
    for n in (1, 7, 64):
        assert ecc.code_rate(PM.TMR, n) == pytest.approx(1 / 3)
    # the rate climbs inside each plateau of constant check-bit count and dips at each step
    for d in range(1, 512):
        same_r = ecc.redundant_bits(PM.SECDED, d) == ecc.redundant_bits(PM.SECDED, d + 1)
        if same_r:
            assert ecc.code_rate(PM.SECDED, d) < ecc.code_rate(PM.SECDED, d + 1)
    assert ecc.code_rate(PM.SECDED, 12) < ecc.code_rate(PM.SECDED, 11)
    assert all(0 < ecc.code_rate(m, d) <= 1 for m in PM for d in range(1, 64))


@pytest.mark.parametrize("args,expected", [((4, 4, 2), 576), ((1, 1, 1), 4), ((8, 5, 2), 23296)])
def test_error_state_count_examples(args, expected):
    assert ecc.error_state_count(*args) == expected
    assert brute_force_error_states(*args) == expected


def test_error_state_count_matches_enumeration():
    for n_data in range(1, 9):
        for n_red in range(1, 13 - n_data + 1):
            for n_err in (1, 2):
                assert ecc.error_state_count(n_data, n_red, n_err) == \
                    brute_force_error_states(n_data, n_red, n_err)


def test_error_state_count_is_exact_for_wide_words():
    n = ecc.error_state_count(512, 11, 2)
    assert n == 2**512 * (523 + comb(523, 2))


def test_error_state_count_rejects_zero_budget():
    with pytest.raises(ValueError):
        ecc.error_state_count(4, 4, 0)


def test_secded_zero_maps_to_zero():
    for d in range(1, 40):
        assert ecc.secded_encode(0, d) == 0


def test_secded_known_codeword():
    cw = ecc.secded_encode(0b1011, 4)
    assert cw == 0b0011011
    assert ecc.secded_decode(cw, 8) == (0b1011, DecodeStatus.NO_ERROR)
    assert bin(cw).count("1") % 2 == 0


def test_secded_golden_vectors():
    golden = json.loads((DATA / "secded_golden.json").read_text())
    for width, vectors in golden.items():
        for data, codeword in vectors.items():
            assert ecc.secded_encode(int(data, 16), int(width)) == int(codeword, 16)


def test_secded_exhaustive_single_and_double():
    for d in range(1, 9):
        n = d + ecc.redundant_bits(PM.SECDED, d)
        for x in range(1 << d):
            cw = ecc.secded_encode(x, d)
            assert ecc.secded_decode(cw, n) == (x, DecodeStatus.NO_ERROR)
            for i in range(n):
                assert ecc.secded_decode(cw ^ (1 << i), n) == (x, DecodeStatus.CORRECTED_SINGLE)
            for i, j in combinations(range(n), 2):
                _, status = ecc.secded_decode(cw ^ (1 << i) ^ (1 << j), n)
                assert status is DecodeStatus.DETECTED_DOUBLE


@given(st.integers(1, 64).flatmap(
    lambda d: st.tuples(st.just(d), st.integers(0, 2**d - 1), st.integers(0, 2**d - 1))))
def test_secded_linearity(args):
    d, x, y = args
    assert ecc.secded_encode(x, d) ^ ecc.secded_encode(y, d) == ecc.secded_encode(x ^ y, d)


def test_secded_decode_rejects_bad_length():
    # a total width no SECDED geometry produces
    bad = next(n for n in range(2, 40)
               if all(d + ecc.redundant_bits(PM.SECDED, d) != n for d in range(1, 40)))
    with pytest.raises(ValueError):
        ecc.secded_decode(0, bad)


def test_secded_encode_rejects_empty():
    with pytest.raises(ValueError):
        ecc.secded_encode(0, 0)


def test_ded_detects_all_single_and_double():
    for d in range(1, 9):
        n = d + ecc.redundant_bits(PM.DED, d)
        for x in range(1 << d):
            cw = ecc.ded_encode(x, d)
            assert ecc.ded_check(cw, n) == (x, False)
            for k in (1, 2):
                for pos in combinations(range(n), k):
                    assert ecc.ded_check(cw ^ sum(1 << p for p in pos), n)[1]


def test_parity_detects_odd_weight_only():
    for d in range(1, 7):
        n = d + 1
        for x in range(1 << d):
            cw = ecc.parity_encode(x, d)
            for mask in range(1 << n):
                _, err = ecc.parity_check(cw ^ mask, n)
                assert err == bool(bin(mask).count("1") % 2)


def test_tmr_vote():
    for w in range(1, 7):
        for x in range(1 << w):
            assert ecc.tmr_vote(x, x, x, w) == (x, False)
            for e in range(1, 1 << w):
                for copies in ((x ^ e, x, x), (x, x ^ e, x), (x, x, x ^ e)):
                    assert ecc.tmr_vote(*copies, w) == (x, True)


def test_tmr_width_mismatch():
    with pytest.raises(ValueError):
        ecc.tmr_vote(0b100, 0, 0, 2)


def test_dmr_check():
    for x, e in product(range(16), range(1, 16)):
        assert ecc.dmr_check(x, x ^ e, 4) == (x, True)
    assert ecc.dmr_check(5, 5, 4) == (5, False)


@pytest.mark.parametrize("method", list(PM))
def test_generic_roundtrip(method):
    for d in range(1, 7):
        for x in range(1 << d):
            assert ecc.decode(method, ecc.encode(method, x, d), d) == (x, False, False)


def test_fig2_step_function():
    values = [ecc.redundant_bits(PM.SECDED, d) for d in range(4, 513)]
    assert values == sorted(values)
    assert sorted(set(values)) == list(range(4, 12))
