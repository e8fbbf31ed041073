"""COMP128-1, the GSM A3/A8 algorithm found on Iridium SIM cards.

The lookup tables are the published ones (Briceno, Goldberg and Wagner,
1998).  Besides the scalar ``comp128v1`` there is a numpy batch version used
by the simulated card and by the offline key search, and a few helpers that
expose the butterfly compression level by level.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AuthResult",
    "CompressionState",
    "butterfly_levels",
    "comp128v1",
    "comp128v1_many",
    "narrow_pipe",
]

_T0 = (
    102, 177, 186, 162, 2, 156, 112, 75, 55, 25, 8, 12, 251, 193, 246, 188,
    109, 213, 151, 53, 42, 79, 191, 115, 233, 242, 164, 223, 209, 148, 108, 161,
    252, 37, 244, 47, 64, 211, 6, 237, 185, 160, 139, 113, 76, 138, 59, 70,
    67, 26, 13, 157, 63, 179, 221, 30, 214, 36, 166, 69, 152, 124, 207, 116,
    247, 194, 41, 84, 71, 1, 49, 14, 95, 35, 169, 21, 96, 78, 215, 225,
    182, 243, 28, 92, 201, 118, 4, 74, 248, 128, 17, 11, 146, 132, 245, 48,
    149, 90, 120, 39, 87, 230, 106, 232, 175, 19, 126, 190, 202, 141, 137, 176,
    250, 27, 101, 40, 219, 227, 58, 20, 51, 178, 98, 216, 140, 22, 32, 121,
    61, 103, 203, 72, 29, 110, 85, 212, 180, 204, 150, 183, 15, 66, 172, 196,
    56, 197, 158, 0, 100, 45, 153, 7, 144, 222, 163, 167, 60, 135, 210, 231,
    174, 165, 38, 249, 224, 34, 220, 229, 217, 208, 241, 68, 206, 189, 125, 255,
    239, 54, 168, 89, 123, 122, 73, 145, 117, 234, 143, 99, 129, 200, 192, 82,
    104, 170, 136, 235, 93, 81, 205, 173, 236, 94, 105, 52, 46, 228, 198, 5,
    57, 254, 97, 155, 142, 133, 199, 171, 187, 50, 65, 181, 127, 107, 147, 226,
    184, 218, 131, 33, 77, 86, 31, 44, 88, 62, 238, 18, 24, 43, 154, 23,
    80, 159, 134, 111, 9, 114, 3, 91, 16, 130, 83, 10, 195, 240, 253, 119,
    177, 102, 162, 186, 156, 2, 75, 112, 25, 55, 12, 8, 193, 251, 188, 246,
    213, 109, 53, 151, 79, 42, 115, 191, 242, 233, 223, 164, 148, 209, 161, 108,
    37, 252, 47, 244, 211, 64, 237, 6, 160, 185, 113, 139, 138, 76, 70, 59,
    26, 67, 157, 13, 179, 63, 30, 221, 36, 214, 69, 166, 124, 152, 116, 207,
    194, 247, 84, 41, 1, 71, 14, 49, 35, 95, 21, 169, 78, 96, 225, 215,
    243, 182, 92, 28, 118, 201, 74, 4, 128, 248, 11, 17, 132, 146, 48, 245,
    90, 149, 39, 120, 230, 87, 232, 106, 19, 175, 190, 126, 141, 202, 176, 137,
    27, 250, 40, 101, 227, 219, 20, 58, 178, 51, 216, 98, 22, 140, 121, 32,
    103, 61, 72, 203, 110, 29, 212, 85, 204, 180, 183, 150, 66, 15, 196, 172,
    197, 56, 0, 158, 45, 100, 7, 153, 222, 144, 167, 163, 135, 60, 231, 210,
    165, 174, 249, 38, 34, 224, 229, 220, 208, 217, 68, 241, 189, 206, 255, 125,
    54, 239, 89, 168, 122, 123, 145, 73, 234, 117, 99, 143, 200, 129, 82, 192,
    170, 104, 235, 136, 81, 93, 173, 205, 94, 236, 52, 105, 228, 46, 5, 198,
    254, 57, 155, 97, 133, 142, 171, 199, 50, 187, 181, 65, 107, 127, 226, 147,
    218, 184, 33, 131, 86, 77, 44, 31, 62, 88, 18, 238, 43, 24, 23, 154,
    159, 80, 111, 134, 114, 9, 91, 3, 130, 16, 10, 83, 240, 195, 119, 253,
)
_T1 = (
    19, 11, 80, 114, 43, 1, 69, 94, 39, 18, 127, 117, 97, 3, 85, 43,
    27, 124, 70, 83, 47, 71, 63, 10, 47, 89, 79, 4, 14, 59, 11, 5,
    35, 107, 103, 68, 21, 86, 36, 91, 85, 126, 32, 50, 109, 94, 120, 6,
    53, 79, 28, 45, 99, 95, 41, 34, 88, 68, 93, 55, 110, 125, 105, 20,
    90, 80, 76, 96, 23, 60, 89, 64, 121, 56, 14, 74, 101, 8, 19, 78,
    76, 66, 104, 46, 111, 50, 32, 3, 39, 0, 58, 25, 92, 22, 18, 51,
    57, 65, 119, 116, 22, 109, 7, 86, 59, 93, 62, 110, 78, 99, 77, 67,
    12, 113, 87, 98, 102, 5, 88, 33, 38, 56, 23, 8, 75, 45, 13, 75,
    95, 63, 28, 49, 123, 120, 20, 112, 44, 30, 15, 98, 106, 2, 103, 29,
    82, 107, 42, 124, 24, 30, 41, 16, 108, 100, 117, 40, 73, 40, 7, 114,
    82, 115, 36, 112, 12, 102, 100, 84, 92, 48, 72, 97, 9, 54, 55, 74,
    113, 123, 17, 26, 53, 58, 4, 9, 69, 122, 21, 118, 42, 60, 27, 73,
    118, 125, 34, 15, 65, 115, 84, 64, 62, 81, 70, 1, 24, 111, 121, 83,
    104, 81, 49, 127, 48, 105, 31, 10, 6, 91, 87, 37, 16, 54, 116, 126,
    31, 38, 13, 0, 72, 106, 77, 61, 26, 67, 46, 29, 96, 37, 61, 52,
    101, 17, 44, 108, 71, 52, 66, 57, 33, 51, 25, 90, 2, 119, 122, 35,
)
_T2 = (
    52, 50, 44, 6, 21, 49, 41, 59, 39, 51, 25, 32, 51, 47, 52, 43,
    37, 4, 40, 34, 61, 12, 28, 4, 58, 23, 8, 15, 12, 22, 9, 18,
    55, 10, 33, 35, 50, 1, 43, 3, 57, 13, 62, 14, 7, 42, 44, 59,
    62, 57, 27, 6, 8, 31, 26, 54, 41, 22, 45, 20, 39, 3, 16, 56,
    48, 2, 21, 28, 36, 42, 60, 33, 34, 18, 0, 11, 24, 10, 17, 61,
    29, 14, 45, 26, 55, 46, 11, 17, 54, 46, 9, 24, 30, 60, 32, 0,
    20, 38, 2, 30, 58, 35, 1, 16, 56, 40, 23, 48, 13, 19, 19, 27,
    31, 53, 47, 38, 63, 15, 49, 5, 37, 53, 25, 36, 63, 29, 5, 7,
)
_T3 = (
    1, 5, 29, 6, 25, 1, 18, 23, 17, 19, 0, 9, 24, 25, 6, 31,
    28, 20, 24, 30, 4, 27, 3, 13, 15, 16, 14, 18, 4, 3, 8, 9,
    20, 0, 12, 26, 21, 8, 28, 2, 29, 2, 15, 7, 11, 22, 14, 10,
    17, 21, 12, 30, 26, 27, 16, 31, 11, 7, 13, 23, 10, 5, 22, 19,
)
_T4 = (
    15, 12, 10, 4, 1, 14, 11, 7, 5, 0, 14, 7, 1, 2, 13, 8,
    10, 3, 4, 9, 6, 0, 3, 2, 5, 6, 8, 9, 11, 13, 15, 12,
)

TABLES = (_T0, _T1, _T2, _T3, _T4)

# value width (bits) entering each level
_IN_WIDTH = (8, 8, 7, 6, 5)


def _check16(value, name):
    b = bytes(value)
    if len(b) != 16:
        raise ValueError(f"{name} must be 16 bytes, got {len(b)}")
    return b


@dataclass(frozen=True)
class AuthResult:
    """32-bit SRES plus 64-bit Kc; the last 10 bits of Kc are always zero."""

    sres: bytes
    kc: bytes

    def __post_init__(self):
        if len(self.sres) != 4 or len(self.kc) != 8:
            raise ValueError("SRES is 4 bytes and Kc 8 bytes")

    def __bytes__(self):
        return self.sres + self.kc

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if len(data) != 12:
            raise ValueError("auth result is 12 bytes")
        return cls(data[:4], data[4:])


@dataclass(frozen=True)
class CompressionState:
    values: tuple
    round: int
    level: int

    @property
    def width(self):
        """Bit width of every value at this level."""
        return 8 if self.level == 0 else 9 - self.level


def _level_pairs(level):
    m = 4 - level
    pairs = []
    for i in range(1 << level):
        for j in range(1 << m):
            a = j + i * (2 << m)
            pairs.append((a, a + (1 << m)))
    return pairs


_PAIRS = tuple(tuple(_level_pairs(n)) for n in range(5))


def _pair_table(level):
    tbl = TABLES[level]
    mask = len(tbl) - 1
    w = _IN_WIDTH[level]
    return tuple(
        (tbl[(a + 2 * b) & mask], tbl[(2 * a + b) & mask])
        for a in range(1 << w)
        for b in range(1 << w)
    )


_PAIR_TABLES = tuple(_pair_table(n) for n in range(5))


def _permutation_tables():
    # output bit i (MSB first over 16 bytes) takes nibble bit (17 * i) mod 128
    inv17 = pow(17, -1, 128)
    rows = []
    for j in range(16):
        row = []
        for v in range(256):
            out = 0
            for bit in range(8):
                if (v >> (7 - bit)) & 1:
                    i = ((8 * j + bit) * inv17) % 128
                    out |= 1 << (127 - i)
            row.append(out)
        rows.append(tuple(row))
    return tuple(rows)


_PERM = _permutation_tables()


def _compress(x, levels=5):
    for n in range(levels):
        pt = _PAIR_TABLES[n]
        sh = _IN_WIDTH[n]
        for a, b in _PAIRS[n]:
            x[a], x[b] = pt[(x[a] << sh) | x[b]]


def _permute(x):
    out = 0
    for j in range(16):
        out |= _PERM[j][(x[2 * j] << 4) | x[2 * j + 1]]
    x[16:] = out.to_bytes(16, "big")


def _pack_output(x):
    sres = bytes((x[i] << 4) | x[i + 1] for i in range(0, 8, 2))
    kc = bytes(
        ((x[i + 18] << 6) | (x[i + 19] << 2) | (x[i + 20] >> 2)) & 0xFF
        for i in range(0, 12, 2)
    )
    kc += bytes((((x[30] << 6) | (x[31] << 2)) & 0xFF, 0))
    return AuthResult(sres, kc)


def comp128v1(ki, rand):
    """Compute (SRES, Kc) for a 16-byte key and a 16-byte challenge."""
    key = list(_check16(ki, "ki"))
    x = [0] * 16 + list(_check16(rand, "rand"))
    for rnd in range(8):
        x[:16] = key
        _compress(x)
        if rnd < 7:
            _permute(x)
    return _pack_output(x)


def butterfly_levels(ki, rand, round, levels):
    """State after ``levels`` butterfly levels of round ``round`` (0-based).

    Earlier rounds run in full, so ``round=3, levels=5`` is the state right
    before the bit permutation of the fourth round.
    """
    if not 0 <= round <= 7:
        raise ValueError("round must be in 0..7")
    if not 1 <= levels <= 5:
        raise ValueError("levels must be in 1..5")
    key = list(_check16(ki, "ki"))
    x = [0] * 16 + list(_check16(rand, "rand"))
    for _ in range(round):
        x[:16] = key
        _compress(x)
        _permute(x)
    x[:16] = key
    _compress(x, levels)
    return CompressionState(tuple(x), round, levels)


# --- numpy batch version -------------------------------------------------

_NP_TABLES = tuple(np.asarray(t, dtype=np.int32) for t in TABLES)
_NP_PAIRS = tuple(
    (np.array([a for a, _ in p]), np.array([b for _, b in p])) for p in _PAIRS
)
_SRC = (17 * np.arange(128)) & 127
_SRC_NIBBLE = _SRC >> 2
_SRC_SHIFT = 3 - (_SRC & 3)


def _as_rows(a, name):
    if isinstance(a, (bytes, bytearray, memoryview)):
        a = np.frombuffer(bytes(a), dtype=np.uint8)
    a = np.asarray(a, dtype=np.uint8)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 16:
        raise ValueError(f"{name} must have shape (n, 16)")
    return a


def comp128v1_many(keys, rands):
    """Vectorised COMP128-1.

    ``keys`` and ``rands`` are uint8 arrays of shape (n, 16) (one of them may
    be a single row, which is broadcast).  Returns ``(sres, kc)`` arrays of
    shape (n, 4) and (n, 8).
    """
    keys = _as_rows(keys, "keys")
    rands = _as_rows(rands, "rands")
    n = max(len(keys), len(rands))
    # one row per state position keeps the gathers contiguous
    k = np.broadcast_to(keys, (n, 16)).T.astype(np.int32)
    x = np.empty((32, n), dtype=np.int32)
    x[16:] = np.broadcast_to(rands, (n, 16)).T
    for rnd in range(8):
        x[:16] = k
        for lvl in range(5):
            tbl = _NP_TABLES[lvl]
            mask = len(tbl) - 1
            ia, ib = _NP_PAIRS[lvl]
            a = x[ia]
            b = x[ib]
            x[ia] = tbl[(a + 2 * b) & mask]
            x[ib] = tbl[(2 * a + b) & mask]
        if rnd < 7:
            bits = ((x[_SRC_NIBBLE] >> _SRC_SHIFT[:, None]) & 1).astype(np.uint8)
            x[16:] = np.packbits(bits, axis=0)
    sres = ((x[0:8:2] << 4) | x[1:8:2]).T.astype(np.uint8)
    kc = np.zeros((n, 8), dtype=np.uint8)
    kc[:, :6] = (((x[18:30:2] << 6) | (x[19:30:2] << 2) | (x[20:31:2] >> 2)) & 0xFF).T
    kc[:, 6] = ((x[30] << 6) | (x[31] << 2)) & 0xFF
    return np.ascontiguousarray(sres), kc


def narrow_pipe(k_hi, k_lo, r_hi, r_lo):
    """Level-2 values at positions (i, i+8, i+16, i+24) of the first round.

    ``k_hi``/``k_lo`` are Ki bytes i and i+8, ``r_hi``/``r_lo`` the RAND bytes
    at the same positions.  These four 7-bit values depend on nothing else,
    which is what makes the collision attack work.  Arguments broadcast as
    numpy arrays; returns a tuple of four int arrays.
    """
    t0, t1 = _NP_TABLES[0], _NP_TABLES[1]
    k_hi, k_lo, r_hi, r_lo = (np.asarray(v, dtype=np.int32) for v in (k_hi, k_lo, r_hi, r_lo))
    a = t0[(k_hi + 2 * r_hi) & 511]  # position i
    b = t0[(2 * k_hi + r_hi) & 511]  # position i+16
    c = t0[(k_lo + 2 * r_lo) & 511]  # position i+8
    d = t0[(2 * k_lo + r_lo) & 511]  # position i+24
    return (
        t1[(a + 2 * c) & 255],
        t1[(2 * a + c) & 255],
        t1[(b + 2 * d) & 255],
        t1[(2 * b + d) & 255],
    )


def pack_narrow_pipe(state):
    """Fold the four 7-bit narrow-pipe values into one 28-bit integer."""
    p0, p1, p2, p3 = state
    return (p0 << 21) | (p1 << 14) | (p2 << 7) | p3
