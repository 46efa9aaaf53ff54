"""Error detection/correction math for safety flip-flop wrappers.

Bit vectors are plain Python ints with an explicit width; bit 0 is the LSB.

Codeword layouts (low bits first):

    parity   data | parity
    ded      data | hamming checks
    secded   data | hamming checks | overall parity
    dmr      data | copy
    tmr      data | copy | copy
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from math import comb


class ProtectionMethod(str, enum.Enum):
    PARITY = "parity"
    DED = "ded"
    SECDED = "secded"
    DMR = "dmr"
    TMR = "tmr"

    @property
    def max_errors(self) -> int:
        """Number of simultaneous bit faults the method is guaranteed to handle."""
        return _MAX_ERRORS[self]

    @property
    def corrects(self) -> bool:
        return self in (ProtectionMethod.SECDED, ProtectionMethod.TMR)

    @classmethod
    def parse(cls, name: str) -> ProtectionMethod:
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown protection method {name!r}") from None


_MAX_ERRORS = {
    ProtectionMethod.PARITY: 1,
    ProtectionMethod.DED: 2,
    ProtectionMethod.SECDED: 2,
    ProtectionMethod.DMR: 1,
    ProtectionMethod.TMR: 1,
}


class DecodeStatus(str, enum.Enum):
    NO_ERROR = "NoError"
    CORRECTED_SINGLE = "CorrectedSingle"
    DETECTED_DOUBLE = "DetectedDouble"


@dataclass(frozen=True)
class CodeGeometry:
    method: ProtectionMethod
    data_width: int
    redundant_bits: int
    max_errors: int

    @property
    def total_width(self) -> int:
        return self.data_width + self.redundant_bits

    @classmethod
    def of(cls, method: ProtectionMethod, data_width: int) -> CodeGeometry:
        return cls(method, data_width, redundant_bits(method, data_width), method.max_errors)


def hamming_check_bits(data_width: int) -> int:
    """Smallest r with 2**r >= data_width + r + 1."""
    if data_width < 1:
        raise ValueError("data width must be >= 1")
    r = 1
    while (1 << r) < data_width + r + 1:
        r += 1
    return r


def redundant_bits(method: ProtectionMethod, data_width: int) -> int:
    if data_width < 1:
        raise ValueError("data width must be >= 1")
    method = ProtectionMethod(method)
    if method is ProtectionMethod.PARITY:
        return 1
    if method is ProtectionMethod.DED:
        return hamming_check_bits(data_width)
    if method is ProtectionMethod.SECDED:
        return hamming_check_bits(data_width) + 1
    if method is ProtectionMethod.DMR:
        return data_width
    return 2 * data_width


def code_rate(method: ProtectionMethod, data_width: int) -> float:
    return data_width / (data_width + redundant_bits(method, data_width))


def error_state_count(n_data: int, n_redundant: int, n_errors: int) -> int:
    """Register states times fault patterns of weight 1..n_errors (exact)."""
    if n_errors < 1:
        raise ValueError("n_errors must be >= 1")
    n = n_data + n_redundant
    if n_errors > n:
        raise ValueError("n_errors exceeds codeword width")
    return (1 << n_data) * sum(comb(n, i) for i in range(1, n_errors + 1))


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _mask(width: int) -> int:
    return (1 << width) - 1


@lru_cache(maxsize=None)
def _data_positions(data_width: int) -> tuple[int, ...]:
    # 1-based Hamming positions that are not powers of two
    positions = []
    pos = 1
    while len(positions) < data_width:
        if pos & (pos - 1):
            positions.append(pos)
        pos += 1
    return tuple(positions)


def _hamming_checks(data: int, data_width: int, r: int) -> int:
    checks = 0
    for i, pos in enumerate(_data_positions(data_width)):
        if (data >> i) & 1:
            checks ^= pos
    return checks & _mask(r)


def _check_data(data: int, width: int) -> None:
    if width < 1:
        raise ValueError("empty data vector")
    if data < 0 or data >> width:
        raise ValueError(f"data {data:#x} does not fit in {width} bits")


def secded_encode(data: int, data_width: int) -> int:
    _check_data(data, data_width)
    r = hamming_check_bits(data_width)
    word = data | (_hamming_checks(data, data_width, r) << data_width)
    overall = _popcount(word) & 1
    return word | (overall << (data_width + r))


@lru_cache(maxsize=None)
def _data_width_for(method: ProtectionMethod, total_width: int) -> int:
    d = 1
    while d + redundant_bits(method, d) < total_width:
        d += 1
    if d + redundant_bits(method, d) != total_width:
        raise ValueError(f"no {method.value} geometry has total width {total_width}")
    return d


def secded_decode(codeword: int, total_width: int) -> tuple[int, DecodeStatus]:
    d = _data_width_for(ProtectionMethod.SECDED, total_width)
    _check_data(codeword, total_width)
    r = total_width - d - 1
    data = codeword & _mask(d)
    checks = (codeword >> d) & _mask(r)
    syndrome = checks ^ _hamming_checks(data, d, r)
    parity_odd = _popcount(codeword) & 1
    if not parity_odd:
        if syndrome == 0:
            return data, DecodeStatus.NO_ERROR
        return data, DecodeStatus.DETECTED_DOUBLE
    if syndrome == 0 or not syndrome & (syndrome - 1):
        # the overall parity bit or a check bit flipped; data intact
        return data, DecodeStatus.CORRECTED_SINGLE
    positions = _data_positions(d)
    try:
        idx = positions.index(syndrome)
    except ValueError:
        # odd-weight pattern pointing outside the codeword
        return data, DecodeStatus.DETECTED_DOUBLE
    return data ^ (1 << idx), DecodeStatus.CORRECTED_SINGLE


def ded_encode(data: int, data_width: int) -> int:
    _check_data(data, data_width)
    r = hamming_check_bits(data_width)
    return data | (_hamming_checks(data, data_width, r) << data_width)


def ded_check(codeword: int, total_width: int) -> tuple[int, bool]:
    """Return (data, error_detected)."""
    d = _data_width_for(ProtectionMethod.DED, total_width)
    _check_data(codeword, total_width)
    r = total_width - d
    data = codeword & _mask(d)
    return data, ((codeword >> d) & _mask(r)) != _hamming_checks(data, d, r)


def parity_encode(data: int, data_width: int) -> int:
    _check_data(data, data_width)
    return data | ((_popcount(data) & 1) << data_width)


def parity_check(codeword: int, total_width: int) -> tuple[int, bool]:
    _check_data(codeword, total_width)
    if total_width < 2:
        raise ValueError("parity codeword needs at least 2 bits")
    return codeword & _mask(total_width - 1), bool(_popcount(codeword) & 1)


def dmr_check(a: int, b: int, width: int) -> tuple[int, bool]:
    _check_data(a, width)
    _check_data(b, width)
    return a, a != b


def tmr_vote(a: int, b: int, c: int, width: int) -> tuple[int, bool]:
    """Bitwise majority of three copies and whether any copy disagreed."""
    for x in (a, b, c):
        _check_data(x, width)
    voted = (a & b) | (a & c) | (b & c)
    return voted, not (a == b == c)


def encode(method: ProtectionMethod, data: int, data_width: int) -> int:
    method = ProtectionMethod(method)
    if method is ProtectionMethod.SECDED:
        return secded_encode(data, data_width)
    if method is ProtectionMethod.DED:
        return ded_encode(data, data_width)
    if method is ProtectionMethod.PARITY:
        return parity_encode(data, data_width)
    _check_data(data, data_width)
    if method is ProtectionMethod.DMR:
        return data | (data << data_width)
    return data | (data << data_width) | (data << 2 * data_width)


def decode(method: ProtectionMethod, codeword: int, data_width: int) -> tuple[int, bool, bool]:
    """Decode a stored codeword into (data_out, err, corrected)."""
    method = ProtectionMethod(method)
    total = data_width + redundant_bits(method, data_width)
    if method is ProtectionMethod.SECDED:
        data, status = secded_decode(codeword, total)
        return data, status is not DecodeStatus.NO_ERROR, status is DecodeStatus.CORRECTED_SINGLE
    if method is ProtectionMethod.DED:
        data, err = ded_check(codeword, total)
        return data, err, False
    if method is ProtectionMethod.PARITY:
        data, err = parity_check(codeword, total)
        return data, err, False
    m = _mask(data_width)
    if method is ProtectionMethod.DMR:
        data, err = dmr_check(codeword & m, (codeword >> data_width) & m, data_width)
        return data, err, False
    data, err = tmr_vote(codeword & m, (codeword >> data_width) & m,
                         (codeword >> 2 * data_width) & m, data_width)
    return data, err, err
