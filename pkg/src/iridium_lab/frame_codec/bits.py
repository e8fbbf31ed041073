"""Bit-string helpers.  Frames are handled as str of '0'/'1', MSB first."""

import numpy as np


def int_to_bits(value, width):
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def bits_to_int(bits):
    return int(bits, 2) if bits else 0


def bytes_to_bits(data):
    return "".join(format(b, "08b") for b in data)


def bits_to_bytes(bits):
    if len(bits) % 8:
        raise ValueError("bit count is not a multiple of 8")
    return bytes(int(bits[i:i + 8], 2) for i in range(0, len(bits), 8))


def check_bits(bits):
    if not isinstance(bits, str) or set(bits) - {"0", "1"}:
        raise ValueError("bits must be a string of '0' and '1'")
    return bits


def hamming(a, b):
    return sum(x != y for x, y in zip(a, b)) + abs(len(a) - len(b))


def flip(bits, positions):
    out = list(bits)
    for p in positions:
        out[p] = "1" if out[p] == "0" else "0"
    return "".join(out)


def to_array(bits):
    return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")


def from_array(arr):
    return (np.asarray(arr, dtype=np.uint8) + ord("0")).tobytes().decode()


def crc16(bits, poly=0x1021):
    """CRC-16/CCITT over a bit string, zero initial value (so it is linear)."""
    reg = 0
    for b in bits:
        top = (reg >> 15) ^ (b == "1")
        reg = (reg << 1) & 0xFFFF
        if top:
            reg ^= poly
    return reg
