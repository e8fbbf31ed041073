"""Synthetic Iridium frame layouts.

Every frame starts with a 48-bit header:

    preamble   16 bits   all zero
    unique word 24 bits  downlink 022220002002 / uplink 220002002022 as symbols
                          (symbol 0 -> 00, 2 -> 11)
    category tag 8 bits  see CATEGORY_TAGS, pairwise Hamming distance >= 3

Ring alert (simplex downlink channel), 142 bits:

    header 48 | 3 x BCH(31,21) block | 1 pad bit (0, keeps the symbol count whole)

    the 63 data bits inside the blocks are
    sat_id 7 | beam_id 6 | has_page 1 | tmsi 32 | reserved 1 (0) | CRC-16 16

Data frame (messaging, SBD, IP data, acquisition...), 262 bits:

    header 48 | LCW 30 | length 8 | payload 160 (20 bytes, FILLER after length) | CRC-16 16

    LCW metadata of a data frame: bit 20 end-of-message, bits 19..8 session id,
    bits 7..0 sequence number.  CRC covers LCW through payload.

Position report payload (in an Acquisition data frame), 7 bytes:
    kind 1 byte (0 last known, 1 network estimate) | x, y, z int16 km, big-endian
"""

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .bch import N as BLOCK_LEN, K as BLOCK_DATA, BlockDecodeError, bch_decode, bch_encode
from .bits import bits_to_bytes, bits_to_int, bytes_to_bits, crc16, hamming, int_to_bits
from .ibr import BurstRecord
from .lcw import Lcw, decode_lcw, encode_lcw


class FrameCategory(enum.Enum):
    Acquisition = "Acquisition"
    Messaging = "Messaging"
    Voice = "Voice"
    Next = "Next"
    RingAlert = "RingAlert"
    Stl = "Stl"
    IpData = "IpData"
    Broadcast = "Broadcast"
    SbdGsm = "SbdGsm"
    Sync = "Sync"
    Unknown = "Unknown"


class FrameDecodeError(ValueError):
    pass


class ImplausiblePosition(ValueError):
    pass


PREAMBLE = "0" * 16


def _symbols_to_bits(symbols):
    return "".join("00" if s == "0" else "11" for s in symbols)


UW_DOWNLINK = _symbols_to_bits("022220002002")
UW_UPLINK = _symbols_to_bits("220002002022")

CATEGORY_TAGS = {
    FrameCategory.Acquisition: "00000111",
    FrameCategory.Messaging: "00011001",
    FrameCategory.Voice: "00011110",
    FrameCategory.Next: "00101010",
    FrameCategory.RingAlert: "00101101",
    FrameCategory.Stl: "00110011",
    FrameCategory.IpData: "00110100",
    FrameCategory.Broadcast: "01001011",
    FrameCategory.SbdGsm: "01001100",
    FrameCategory.Sync: "01010010",
}
HEADER_LEN = 48
UW_TOLERANCE = 2
TAG_TOLERANCE = 1


def frame_header(category, uplink=False):
    if category is FrameCategory.Unknown:
        raise ValueError("Unknown has no header")
    return PREAMBLE + (UW_UPLINK if uplink else UW_DOWNLINK) + CATEGORY_TAGS[category]


def classify_bits(bits):
    if len(bits) < HEADER_LEN:
        return FrameCategory.Unknown
    uw = bits[16:40]
    if min(hamming(uw, UW_DOWNLINK), hamming(uw, UW_UPLINK)) > UW_TOLERANCE:
        return FrameCategory.Unknown
    tag = bits[40:48]
    for category, code in CATEGORY_TAGS.items():
        if hamming(tag, code) <= TAG_TOLERANCE:
            return category
    return FrameCategory.Unknown


def classify_frame(record):
    return classify_bits(record.bits)


# --- ring alert ------------------------------------------------------------

RING_ALERT_LEN = HEADER_LEN + 3 * BLOCK_LEN + 1


@dataclass(frozen=True)
class RingAlertFrame:
    beam_id: int
    sat_id: int = 0
    paged_identity: int | None = None

    def __post_init__(self):
        if not 0 <= self.beam_id < 64:
            raise ValueError("beam_id must fit in 6 bits")
        if not 0 <= self.sat_id < 128:
            raise ValueError("sat_id must fit in 7 bits")
        if self.paged_identity is not None and not 0 <= self.paged_identity < 1 << 32:
            raise ValueError("paged_identity must fit in 32 bits")


def ring_alert_blocks(frame):
    """The three 31-bit coded blocks as bit strings."""
    data = (int_to_bits(frame.sat_id, 7) + int_to_bits(frame.beam_id, 6)
            + ("0" if frame.paged_identity is None else "1")
            + int_to_bits(frame.paged_identity or 0, 32) + "0")
    data += int_to_bits(crc16(data), 16)
    return [int_to_bits(bch_encode(bits_to_int(data[i:i + BLOCK_DATA])), BLOCK_LEN)
            for i in range(0, 3 * BLOCK_DATA, BLOCK_DATA)]


def encode_ring_alert(frame):
    return frame_header(FrameCategory.RingAlert) + "".join(ring_alert_blocks(frame)) + "0"


def decode_ring_alert_blocks(blocks):
    """Decode three coded blocks; returns (frame, corrected bit count)."""
    data = ""
    corrected = 0
    for i, blk in enumerate(blocks):
        try:
            word, fixed = bch_decode(bits_to_int(blk))
        except BlockDecodeError as exc:
            raise FrameDecodeError(f"block {i}: {exc}") from None
        data += int_to_bits(word, BLOCK_DATA)
        corrected += fixed
    if crc16(data[:47]) != bits_to_int(data[47:]):
        raise FrameDecodeError("ring alert CRC mismatch")
    if data[46] != "0":
        raise FrameDecodeError("reserved bit set")
    has_page = data[13] == "1"
    page = bits_to_int(data[14:46])
    if not has_page and page:
        raise FrameDecodeError("page identity present without page flag")
    frame = RingAlertFrame(beam_id=bits_to_int(data[7:13]), sat_id=bits_to_int(data[:7]),
                           paged_identity=page if has_page else None)
    return frame, corrected


def decode_ring_alert(bits, check_header=True):
    """Ring alert from its frame bits.

    With ``check_header=False`` only the coded blocks are looked at, which is
    how a receiver parked on the ring-alert channel decodes.
    """
    if len(bits) != RING_ALERT_LEN:
        raise FrameDecodeError(f"ring alert must be {RING_ALERT_LEN} bits, got {len(bits)}")
    if check_header and classify_bits(bits) is not FrameCategory.RingAlert:
        raise FrameDecodeError("not a ring alert header")
    if bits[-1] != "0":
        raise FrameDecodeError("pad bit must be zero")
    body = bits[HEADER_LEN:HEADER_LEN + 3 * BLOCK_LEN]
    return decode_ring_alert_blocks([body[i:i + BLOCK_LEN] for i in range(0, len(body), BLOCK_LEN)])[0]


# --- data frames -----------------------------------------------------------

PAYLOAD_BYTES = 20
FILLER = 0x00
DATA_FRAME_LEN = HEADER_LEN + 30 + 8 + 8 * PAYLOAD_BYTES + 16
MAX_SESSION = (1 << 12) - 1


@dataclass(frozen=True)
class DataFrame:
    category: FrameCategory
    lcw: Lcw
    payload: bytes

    @property
    def session_id(self):
        return (self.lcw.metadata >> 8) & 0xFFF

    @property
    def seq(self):
        return self.lcw.metadata & 0xFF

    @property
    def end_of_message(self):
        return bool(self.lcw.metadata >> 20 & 1)


def data_lcw(session_id, seq, eom, payload_type=1, lcw_type=0, lcw_code=0):
    if not 0 <= session_id <= MAX_SESSION or not 0 <= seq < 256:
        raise ValueError("session id must fit 12 bits and seq 8 bits")
    meta = (int(bool(eom)) << 20) | (session_id << 8) | seq
    return Lcw(payload_type, lcw_type, lcw_code, meta)


def encode_data_frame(frame, uplink=False):
    if len(frame.payload) > PAYLOAD_BYTES:
        raise ValueError(f"payload longer than {PAYLOAD_BYTES} bytes")
    padded = bytes(frame.payload) + bytes([FILLER]) * (PAYLOAD_BYTES - len(frame.payload))
    body = (int_to_bits(encode_lcw(frame.lcw), 30) + int_to_bits(len(frame.payload), 8)
            + bytes_to_bits(padded))
    return frame_header(frame.category, uplink) + body + int_to_bits(crc16(body), 16)


def decode_data_frame(bits):
    """Strip header, filler and CRC; FrameDecodeError on any inconsistency."""
    if len(bits) != DATA_FRAME_LEN:
        raise FrameDecodeError(f"data frame must be {DATA_FRAME_LEN} bits, got {len(bits)}")
    category = classify_bits(bits)
    if category in (FrameCategory.Unknown, FrameCategory.RingAlert):
        raise FrameDecodeError(f"not a data frame ({category.value})")
    body, crc = bits[HEADER_LEN:-16], bits[-16:]
    if crc16(body) != bits_to_int(crc):
        raise FrameDecodeError("CRC mismatch")
    lcw = decode_lcw(bits_to_int(body[:30]))
    length = bits_to_int(body[30:38])
    if length > PAYLOAD_BYTES:
        raise FrameDecodeError("length field beyond payload area")
    raw = bits_to_bytes(body[38:])
    if any(b != FILLER for b in raw[length:]):
        raise FrameDecodeError("bad filler")
    return DataFrame(category, lcw, raw[:length])


# --- position reports ------------------------------------------------------

EARTH_RADIUS_KM = 6371.0
NORM_RANGE_KM = (6200.0, 6550.0)


class PositionKind(enum.Enum):
    last_known = 0
    network_estimate = 1


@dataclass(frozen=True)
class PositionReport:
    x_km: int
    y_km: int
    z_km: int
    kind: PositionKind = PositionKind.last_known

    @property
    def norm_km(self):
        return math.sqrt(self.x_km ** 2 + self.y_km ** 2 + self.z_km ** 2)

    def check(self):
        lo, hi = NORM_RANGE_KM
        if not lo <= self.norm_km <= hi:
            raise ImplausiblePosition(f"|r| = {self.norm_km:.1f} km outside [{lo}, {hi}]")
        return self


def position_payload(report):
    return struct.pack(">Bhhh", report.kind.value, report.x_km, report.y_km, report.z_km)


def encode_position_frame(report, session_id=0, seq=0):
    lcw = data_lcw(session_id, seq, True, payload_type=2)
    return encode_data_frame(DataFrame(FrameCategory.Acquisition, lcw, position_payload(report)),
                             uplink=True)


def decode_position_report(record):
    bits = record.bits if isinstance(record, BurstRecord) else record
    frame = decode_data_frame(bits)
    if frame.category not in (FrameCategory.Acquisition, FrameCategory.SbdGsm):
        raise FrameDecodeError(f"{frame.category.value} frames carry no position")
    if len(frame.payload) < 7:
        raise FrameDecodeError("position payload too short")
    kind, x, y, z = struct.unpack(">Bhhh", frame.payload[:7])
    try:
        kind = PositionKind(kind)
    except ValueError:
        raise FrameDecodeError(f"unknown position kind {kind}") from None
    return PositionReport(x, y, z, kind).check()


def convert_to_geodetic(report):
    """(lat, lon) in degrees on a spherical Earth."""
    x, y, z = report.x_km, report.y_km, report.z_km
    r = math.sqrt(x * x + y * y + z * z)
    return math.degrees(math.asin(z / r)), math.degrees(math.atan2(y, x))


def geodetic_to_report(lat, lon, radius_km=EARTH_RADIUS_KM, kind=PositionKind.last_known):
    la, lo = math.radians(lat), math.radians(lon)
    return PositionReport(round(radius_km * math.cos(la) * math.cos(lo)),
                          round(radius_km * math.cos(la) * math.sin(lo)),
                          round(radius_km * math.sin(la)), kind).check()


def great_circle_km(lat1, lon1, lat2, lon2, radius_km=EARTH_RADIUS_KM):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlat, dlon = p2 - p1, math.radians(lon2 - lon1)
    a = math.sin(dlat / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlon / 2) ** 2
    return 2 * radius_km * math.asin(min(1.0, math.sqrt(a)))


# --- synthetic corpus ------------------------------------------------------

def synthetic_corpus(n, seed=0, freq_hz=1_626_000_000):
    """Random mix of frames of every category; returns (records, labels)."""
    rng = np.random.default_rng(seed)
    cats = list(FrameCategory)
    records, labels = [], []
    for i in range(n):
        cat = cats[rng.integers(len(cats))]
        if cat is FrameCategory.RingAlert:
            page = int(rng.integers(1 << 32)) if rng.random() < 0.5 else None
            bits = encode_ring_alert(RingAlertFrame(int(rng.integers(64)), int(rng.integers(128)), page))
        elif cat is FrameCategory.Unknown:
            bits = "".join(rng.choice(["0", "1"], size=int(rng.integers(64, 300))))
        else:
            payload = rng.integers(0, 256, int(rng.integers(0, PAYLOAD_BYTES + 1)), dtype=np.uint8).tobytes()
            lcw = data_lcw(int(rng.integers(MAX_SESSION + 1)), int(rng.integers(256)), rng.random() < 0.3)
            bits = encode_data_frame(DataFrame(cat, lcw, payload), uplink=bool(rng.random() < 0.5))
        records.append(BurstRecord(i * 90, freq_hz, 20.0, 90, bits))
        labels.append(cat)
    return records, labels
