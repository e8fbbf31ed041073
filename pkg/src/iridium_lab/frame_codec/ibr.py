"""IBR burst record lines.

Grammar, single spaces, one record per line:

    IBR <timestamp_ms> <freq_hz> <snr_db> <confidence> <bits>

timestamp_ms and freq_hz are non-negative decimal integers, snr_db a decimal
real, confidence an integer 0..100, bits at least 64 characters of 0/1.
Serialization writes snr_db with Python's shortest round-trip float repr,
which makes that the canonical form.
"""

import math
import re
from dataclasses import dataclass

BAND_LOW_HZ = 1_616_000_000
BAND_HIGH_HZ = 1_626_500_000
MIN_BITS = 64


class ParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class BurstRecord:
    timestamp_ms: int
    freq_hz: int
    snr_db: float
    confidence: int
    bits: str

    def __post_init__(self):
        if not BAND_LOW_HZ <= self.freq_hz <= BAND_HIGH_HZ:
            raise RangeError(f"frequency {self.freq_hz} Hz outside the Iridium band")
        if self.timestamp_ms < 0:
            raise ValueError("timestamp must be non-negative")
        if not 0 <= self.confidence <= 100:
            raise ValueError("confidence must be 0..100")
        if len(self.bits) < MIN_BITS or set(self.bits) - {"0", "1"}:
            raise ValueError(f"bits must be >= {MIN_BITS} characters of 0/1")


_FIELDS = (
    ("timestamp_ms", re.compile(r"\d+"), int),
    ("freq_hz", re.compile(r"\d+"), int),
    ("snr_db", re.compile(r"[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?|[-+]?(inf|nan)"), float),
    ("confidence", re.compile(r"\d{1,3}"), int),
    ("bits", re.compile(r"[01]+"), str),
)


def parse_ibr_line(line):
    line = line.rstrip("\r\n")
    if not line.startswith("IBR "):
        raise ParseError("expected 'IBR ' tag", 0)
    pos = 4
    values, offsets = {}, {}
    for name, pattern, conv in _FIELDS:
        end = line.find(" ", pos)
        if end == -1:
            end = len(line)
        elif name == "bits":
            raise ParseError("trailing characters", end)
        token = line[pos:end]
        if not pattern.fullmatch(token):
            raise ParseError(f"malformed or missing {name}", pos)
        values[name] = conv(token)
        offsets[name] = pos
        pos = end + 1
        if pos > len(line) and name != "bits":
            raise ParseError("missing fields", len(line))
    if not math.isfinite(values["snr_db"]):
        raise ParseError("snr_db must be finite", offsets["snr_db"])
    if values["confidence"] > 100:
        raise ParseError("confidence above 100", offsets["confidence"])
    if len(values["bits"]) < MIN_BITS:
        raise ParseError(f"fewer than {MIN_BITS} bits", offsets["bits"])
    return BurstRecord(**values)


def serialize_ibr(record):
    return (f"IBR {record.timestamp_ms} {record.freq_hz} {float(record.snr_db)!r} "
            f"{record.confidence} {record.bits}")


def read_ibr(lines):
    """Parse an iterable of lines, skipping blanks and '#' comments."""
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            out.append(parse_ibr_line(line))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc.args[0]}", exc.offset) from None
    return out


def from_gr_iridium(line):
    """Map a gr-iridium ``RAW:`` line onto a BurstRecord.

    RAW: <name> <ts_ms> <freq_hz> N:<snr>-<noise> I:<id> <conf>% <level> <symbols> <bits>
    The timestamp is rounded to whole milliseconds.
    """
    parts = line.split()
    if len(parts) < 10 or parts[0] != "RAW:":
        raise ParseError("not a gr-iridium RAW line", 0)
    snr = parts[4][2:].split("-")[0] if parts[4].startswith("N:") else "0"
    return BurstRecord(
        timestamp_ms=round(float(parts[2])),
        freq_hz=int(parts[3]),
        snr_db=float(snr),
        confidence=int(parts[6].rstrip("%")),
        bits=parts[9],
    )
