"""Binary BCH(31,21) code, corrects up to two bit errors per block.

Generator x^10+x^9+x^8+x^6+x^5+x^3+1.  Codewords are systematic: 21 data bits
followed by 10 parity bits.  Decoding uses a syndrome table over all error
patterns of weight <= 2 (497 entries, all distinct).
"""

from itertools import combinations

N = 31
K = 21
PARITY = N - K
GENERATOR = 0b11101101001


class BlockDecodeError(ValueError):
    pass


def poly_mod(value, poly=GENERATOR):
    deg = poly.bit_length() - 1
    for i in range(value.bit_length() - 1, deg - 1, -1):
        if value >> i & 1:
            value ^= poly << (i - deg)
    return value


def _build_table():
    table = {0: 0}
    for w in (1, 2):
        for pos in combinations(range(N), w):
            err = sum(1 << p for p in pos)
            syn = poly_mod(err)
            if syn in table:
                raise AssertionError("generator does not give distance 5")
            table[syn] = err
    return table


SYNDROMES = _build_table()


def bch_encode(data):
    if not 0 <= data < 1 << K:
        raise ValueError("data must fit in 21 bits")
    shifted = data << PARITY
    return shifted | poly_mod(shifted)


def bch_decode(word):
    """Return (data, corrected_bit_count); BlockDecodeError if uncorrectable."""
    if not 0 <= word < 1 << N:
        raise ValueError("codeword must fit in 31 bits")
    err = SYNDROMES.get(poly_mod(word))
    if err is None:
        raise BlockDecodeError("more than two bit errors in block")
    return (word ^ err) >> PARITY, bin(err).count("1")
