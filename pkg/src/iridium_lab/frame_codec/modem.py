"""DQPSK baseband modulator and SigMF recording writer.

25,000 symbols/s, two bits per symbol, Gray-coded phase increments
00 -> 0, 01 -> +pi/2, 11 -> pi, 10 -> -pi/2.  A reference symbol at phase 0
is sent first.  Pulses are root-raised-cosine (roll-off 0.4, 8 symbols long).

Samples are complex64 (cf32_le on disk).  Metadata follows SigMF 1.0:
core:datatype, core:sample_rate, a capture with core:frequency, and
annotations marking each burst.
"""

import json
import math
import pathlib

import numpy as np

from .bits import check_bits, from_array, to_array

SYMBOL_RATE = 25_000
MIN_SAMPLE_RATE = 100_000
DEFAULT_CENTER_HZ = 1_626_270_000
ROLLOFF = 0.4
SPAN_SYMBOLS = 8

_PHASE_STEP = {(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3}  # quarter turns
_DIBIT = {v: k for k, v in _PHASE_STEP.items()}


class ConfigError(ValueError):
    pass


def rrc_taps(sps, rolloff=ROLLOFF, span=SPAN_SYMBOLS):
    """Root-raised-cosine impulse response, unit energy."""
    t = (np.arange(span * sps + 1) - span * sps / 2) / sps
    h = np.empty_like(t)
    b = rolloff
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1 + b * (4 / math.pi - 1)
        elif b and abs(abs(ti) - 1 / (4 * b)) < 1e-9:
            h[i] = b / math.sqrt(2) * ((1 + 2 / math.pi) * math.sin(math.pi / (4 * b))
                                       + (1 - 2 / math.pi) * math.cos(math.pi / (4 * b)))
        else:
            num = math.sin(math.pi * ti * (1 - b)) + 4 * b * ti * math.cos(math.pi * ti * (1 + b))
            h[i] = num / (math.pi * ti * (1 - (4 * b * ti) ** 2))
    return h / np.sqrt(np.sum(h ** 2))


def _check_rate(sample_rate):
    if sample_rate < MIN_SAMPLE_RATE:
        raise ConfigError(f"sample_rate must be at least {MIN_SAMPLE_RATE} Hz")
    if sample_rate % SYMBOL_RATE:
        raise ConfigError(f"sample_rate must be a multiple of {SYMBOL_RATE} Hz")
    return int(sample_rate) // SYMBOL_RATE


def bits_to_symbols(bits):
    bits = check_bits(bits)
    if len(bits) % 2:
        raise ValueError("DQPSK needs an even number of bits")
    arr = to_array(bits).reshape(-1, 2)
    steps = np.array([_PHASE_STEP[tuple(p)] for p in arr.tolist()], dtype=np.int64)
    quarter = np.concatenate([[0], np.cumsum(steps)]) % 4
    return np.exp(1j * np.pi / 2 * quarter)


def modulate(bits, center_freq_hz=DEFAULT_CENTER_HZ, sample_rate=250_000, amplitude=1.0,
             freq_offset_hz=0.0, rolloff=ROLLOFF):
    """Return (iq, metadata).  iq is complex64 at ``sample_rate``."""
    sps = _check_rate(sample_rate)
    symbols = bits_to_symbols(bits)
    up = np.zeros(len(symbols) * sps, dtype=complex)
    up[::sps] = symbols
    taps = rrc_taps(sps, rolloff)
    iq = amplitude * np.convolve(up, taps)
    if freq_offset_hz:
        iq *= np.exp(2j * np.pi * freq_offset_hz * np.arange(len(iq)) / sample_rate)
    meta = sigmf_metadata(sample_rate, center_freq_hz + freq_offset_hz,
                          [(0, len(iq), f"dqpsk {len(bits)} bits")])
    return iq.astype(np.complex64), meta


def demodulate(iq, sample_rate=250_000, n_bits=None, rolloff=ROLLOFF):
    """Matched-filter receiver for ``modulate`` output at zero frequency offset."""
    sps = _check_rate(sample_rate)
    taps = rrc_taps(sps, rolloff)
    rx = np.convolve(np.asarray(iq, dtype=complex), taps)
    delay = len(taps) - 1
    n_sym = (len(iq) - len(taps) + 1) // sps
    samples = rx[delay:delay + n_sym * sps:sps]
    diff = samples[1:] * np.conj(samples[:-1])
    quarter = np.round(np.angle(diff) / (np.pi / 2)).astype(int) % 4
    bits = from_array(np.array([_DIBIT[q] for q in quarter], dtype=np.uint8).reshape(-1))
    return bits if n_bits is None else bits[:n_bits]


def sigmf_metadata(sample_rate, center_freq_hz, annotations=(), datetime=None):
    capture = {"core:sample_start": 0, "core:frequency": float(center_freq_hz)}
    if datetime:
        capture["core:datetime"] = datetime
    return {
        "global": {
            "core:datatype": "cf32_le",
            "core:sample_rate": float(sample_rate),
            "core:version": "1.0.0",
            "core:description": "synthetic Iridium DQPSK bursts",
        },
        "captures": [capture],
        "annotations": [
            {"core:sample_start": int(s), "core:sample_count": int(n), "core:label": label}
            for s, n, label in annotations
        ],
    }


def write_recording(stem, iq, meta):
    """Write <stem>.sigmf-data and <stem>.sigmf-meta; returns both paths."""
    stem = pathlib.Path(stem)
    data_path = stem.with_name(stem.name + ".sigmf-data")
    meta_path = stem.with_name(stem.name + ".sigmf-meta")
    np.asarray(iq, dtype="<c8").tofile(data_path)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return data_path, meta_path


def read_recording(stem):
    stem = pathlib.Path(stem)
    meta = json.loads(stem.with_name(stem.name + ".sigmf-meta").read_text())
    iq = np.fromfile(stem.with_name(stem.name + ".sigmf-data"), dtype="<c8")
    return iq, meta
