"""Lane clustering, session reassembly, entropy and privacy-preserving stats."""

import enum
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .frame_codec import (
    BurstRecord, DataFrame, FrameCategory, FrameDecodeError, classify_frame,
    data_lcw, decode_data_frame, encode_data_frame,
)
from .frame_codec.frames import PAYLOAD_BYTES

SLOT_MS = 90.0


class DuplicateSlot(ValueError):
    def __init__(self, first, second):
        super().__init__(f"conflicting bursts in one slot: {first.timestamp_ms} ms and {second.timestamp_ms} ms")
        self.bursts = (first, second)


@dataclass
class Lane:
    center_freq_hz: int
    drift_rate_hz_per_s: float = 0.0
    slot_phase_ms: float = 0.0
    members: list = field(default_factory=list)
    # fit state, not part of the lane's identity
    _t: list = field(default_factory=list, repr=False)
    _f: list = field(default_factory=list, repr=False)

    def predict(self, t_ms):
        return self._f[-1] + self.drift_rate_hz_per_s * (t_ms - self._t[-1]) / 1000.0

    def add(self, index, record):
        self.members.append(index)
        self._t.append(record.timestamp_ms)
        self._f.append(record.freq_hz)
        if len(self._t) >= 2 and self._t[-1] > self._t[0]:
            t = np.asarray(self._t, dtype=float) / 1000.0
            self.drift_rate_hz_per_s = float(np.polyfit(t, self._f, 1)[0])
        self.center_freq_hz = int(round(np.mean(self._f)))

    @property
    def last_ms(self):
        return self._t[-1]


def _phase_error(t_ms, phase_ms):
    d = (t_ms - phase_ms) % SLOT_MS
    return min(d, SLOT_MS - d)


def cluster_lanes(records, freq_tol_hz=5000.0, slot_tol_ms=9.0, drift_tol_hz_per_s=100.0,
                  max_gap_ms=10_000.0):
    """Greedy time-ordered assignment of bursts to lanes.

    Each burst joins the matching lane with the smallest normalised error, or
    opens a new lane.  Lanes idle for more than ``max_gap_ms`` are closed.
    """
    order = sorted(range(len(records)), key=lambda i: records[i].timestamp_ms)
    lanes = []
    for i in order:
        rec = records[i]
        best, best_score = None, None
        for lane in lanes:
            dt = rec.timestamp_ms - lane.last_ms
            if dt > max_gap_ms:
                continue
            allowed_f = freq_tol_hz + drift_tol_hz_per_s * dt / 1000.0
            df = abs(rec.freq_hz - lane.predict(rec.timestamp_ms))
            dp = _phase_error(rec.timestamp_ms, lane.slot_phase_ms)
            if df > allowed_f or dp > slot_tol_ms:
                continue
            score = df / allowed_f + dp / slot_tol_ms
            if best is None or score < best_score:
                best, best_score = lane, score
        if best is None:
            best = Lane(rec.freq_hz, slot_phase_ms=rec.timestamp_ms % SLOT_MS)
            lanes.append(best)
        best.add(i, rec)
    return lanes


# --- reassembly ------------------------------------------------------------

@dataclass
class Session:
    lane: Lane
    payload: bytes
    entropy_bits_per_byte: float
    category: FrameCategory
    complete: bool
    n_frames: int = 0
    session_id: int | None = None


def reassemble(lane, records):
    """Concatenate the payloads of a lane's data frames in slot order."""
    members = sorted((records[i] for i in lane.members), key=lambda r: r.timestamp_ms)
    if not members:
        return Session(lane, b"", 0.0, FrameCategory.Unknown, False)
    t0 = members[0].timestamp_ms
    slots = {}
    for rec in members:
        slot = round((rec.timestamp_ms - t0) / SLOT_MS)
        other = slots.get(slot)
        if other is None:
            slots[slot] = rec
        elif other.bits != rec.bits:
            raise DuplicateSlot(other, rec)

    frames, undecodable = [], 0
    for slot in sorted(slots):
        try:
            frames.append((slot, decode_data_frame(slots[slot].bits)))
        except FrameDecodeError:
            undecodable += 1
    if not frames:
        return Session(lane, b"", 0.0, FrameCategory.Unknown, False, 0)

    payload = b"".join(f.payload for _, f in frames)
    category = Counter(f.category for _, f in frames).most_common(1)[0][0]
    ids = {f.session_id for _, f in frames}
    seqs = [f.seq for _, f in frames]
    slot_ids = [s for s, _ in frames]
    complete = (
        undecodable == 0
        and len(ids) == 1
        and seqs == list(range(len(seqs)))
        and slot_ids == list(range(len(slot_ids)))
        and frames[-1][1].end_of_message
        and not any(f.end_of_message for _, f in frames[:-1])
    )
    h = shannon_entropy(payload) if payload else 0.0
    return Session(lane, payload, h, category, complete, len(frames),
                   ids.pop() if len(ids) == 1 else None)


# --- entropy ---------------------------------------------------------------

class EntropyClass(enum.Enum):
    HighEntropy = "HighEntropy"
    LowEntropy = "LowEntropy"
    Indeterminate = "Indeterminate"


HIGH_ENTROPY_BITS = 7.0
MIN_ENTROPY_LEN = 64


def shannon_entropy(payload):
    """Plug-in Shannon entropy in bits per byte."""
    data = np.frombuffer(bytes(payload), dtype=np.uint8)
    if data.size == 0:
        raise ValueError("entropy of an empty payload is undefined")
    p = np.bincount(data, minlength=256) / data.size
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def classify_entropy(h, length):
    if not 0.0 <= h <= 8.0:
        raise ValueError("entropy must be within [0, 8] bits/byte")
    if length < MIN_ENTROPY_LEN:
        return EntropyClass.Indeterminate
    return EntropyClass.HighEntropy if h > HIGH_ENTROPY_BITS else EntropyClass.LowEntropy


# --- aggregate statistics --------------------------------------------------

@dataclass(frozen=True)
class AggregateStats:
    """Counts only.  Percentages are derived when rendering."""

    frame_counts: dict
    high_entropy_counts: dict = field(default_factory=dict)

    def __post_init__(self):
        for cat, n in self.high_entropy_counts.items():
            if n > self.frame_counts.get(cat, 0):
                raise ValueError(f"{cat}: more high-entropy frames than frames")

    @property
    def total(self):
        return sum(self.frame_counts.values())

    @property
    def high_entropy_total(self):
        return sum(self.high_entropy_counts.values())

    def share(self, cat):
        return 100.0 * self.frame_counts.get(cat, 0) / self.total if self.total else 0.0

    def high_share(self, cat):
        n = self.frame_counts.get(cat, 0)
        return 100.0 * self.high_entropy_counts.get(cat, 0) / n if n else 0.0


def _name(cat):
    return cat.value if isinstance(cat, FrameCategory) else str(cat)


def privacy_stats(sessions, records=()):
    """Counts per category.  Nothing derived from payload bytes except entropy classes.

    ``records`` adds every classified burst to the frame counts; without it
    the counts come from the sessions' frames.
    """
    frames = Counter()
    high = Counter()
    for rec in records:
        frames[classify_frame(rec)] += 1
    for s in sessions:
        if not records:
            frames[s.category] += s.n_frames
        if s.payload and classify_entropy(s.entropy_bits_per_byte, len(s.payload)) is EntropyClass.HighEntropy:
            high[s.category] += s.n_frames
    for cat in high:
        frames.setdefault(cat, 0)
    return AggregateStats(dict(frames), dict(high))


def _fmt_count(n):
    return f"{n:,}".replace(",", " ")


def render_frame_table(stats):
    rows = sorted(stats.frame_counts.items(), key=lambda kv: (kv[1], _name(kv[0])))
    width = max([len("Category"), len("Total")] + [len(_name(c)) for c, _ in rows])
    lines = [f"{'Category':<{width}}  {'Count':>13}  {'[%]':>7}"]
    for cat, n in rows:
        lines.append(f"{_name(cat):<{width}}  {_fmt_count(n):>13}  {stats.share(cat):>6.2f}%")
    lines.append(f"{'Total':<{width}}  {_fmt_count(stats.total):>13}  {100.0 if stats.total else 0.0:>6.2f}%")
    return "\n".join(lines) + "\n"


def render_entropy_table(stats):
    cats = [c for c in stats.frame_counts if c in stats.high_entropy_counts]
    cats.sort(key=lambda c: (stats.frame_counts[c], _name(c)))
    width = max([len("Category"), len("Total")] + [len(_name(c)) for c in cats])
    lines = [f"{'Category':<{width}}  {'Total':>11}  {'High Entropy':>12}  {'[%]':>7}"]
    for cat in cats:
        lines.append(f"{_name(cat):<{width}}  {_fmt_count(stats.frame_counts[cat]):>11}  "
                     f"{_fmt_count(stats.high_entropy_counts[cat]):>12}  {stats.high_share(cat):>6.2f}%")
    total = sum(stats.frame_counts[c] for c in cats)
    high = stats.high_entropy_total
    pct = 100.0 * high / total if total else 0.0
    lines.append(f"{'Total':<{width}}  {_fmt_count(total):>11}  {_fmt_count(high):>12}  {pct:>6.2f}%")
    return "\n".join(lines) + "\n"


def stats_csv(stats):
    lines = ["category,frames,high_entropy"]
    for cat in sorted(stats.frame_counts, key=_name):
        lines.append(f"{_name(cat)},{stats.frame_counts[cat]},{stats.high_entropy_counts.get(cat, 0)}")
    return "\n".join(lines) + "\n"


# --- synthetic traces ------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSession:
    session_id: int
    freq_hz: int
    start_ms: int
    drift_hz_per_s: float
    payload: bytes
    category: FrameCategory


def session_frames(session):
    chunks = [session.payload[i:i + PAYLOAD_BYTES] for i in range(0, len(session.payload), PAYLOAD_BYTES)] or [b""]
    out = []
    for seq, chunk in enumerate(chunks):
        lcw = data_lcw(session.session_id, seq, seq == len(chunks) - 1)
        t = session.start_ms + seq * int(SLOT_MS)
        f = int(round(session.freq_hz + session.drift_hz_per_s * (t - session.start_ms) / 1000.0))
        bits = encode_data_frame(DataFrame(session.category, lcw, chunk))
        out.append(BurstRecord(t, f, 15.0, 95, bits))
    return out


CHANNEL_SPACING_HZ = 41_667
FIRST_CHANNEL_HZ = 1_616_020_833


def synthetic_trace(n_sessions, seed=0, loss=0.0, min_bytes=40, max_bytes=160,
                    drift_hz_per_s=(-50.0, 50.0), category=FrameCategory.IpData,
                    payload_fn=None, span_ms=2000):
    """Interleaved sessions on distinct channels.

    Returns (records, sessions).  Payload lengths are uniform in
    [min_bytes, max_bytes], so 2..8 frames at the defaults.  ``loss`` drops
    each frame independently.
    """
    rng = np.random.default_rng(seed)
    max_channels = (1_626_500_000 - FIRST_CHANNEL_HZ) // CHANNEL_SPACING_HZ
    if n_sessions > max_channels:
        raise ValueError(f"at most {max_channels} concurrent sessions")
    channels = rng.choice(max_channels, size=n_sessions, replace=False)
    sessions, records = [], []
    for sid, ch in enumerate(channels):
        n = int(rng.integers(min_bytes, max_bytes + 1))
        payload = payload_fn(rng, n) if payload_fn else rng.integers(0, 256, n, dtype=np.uint8).tobytes()
        s = SyntheticSession(sid, int(FIRST_CHANNEL_HZ + ch * CHANNEL_SPACING_HZ),
                             int(rng.integers(0, span_ms)),
                             float(rng.uniform(*drift_hz_per_s)), payload, category)
        sessions.append(s)
        for rec in session_frames(s):
            if loss and rng.random() < loss:
                continue
            records.append(rec)
    records.sort(key=lambda r: (r.timestamp_ms, r.freq_hz))
    return records, sessions


def reconstruct(records):
    """Cluster then reassemble every lane."""
    return [reassemble(lane, records) for lane in cluster_lanes(records)]


def completion_rate(sessions, reassembled):
    """Fraction of generated sessions reconstructed completely and exactly."""
    by_id = {s.session_id: s for s in reassembled if s.complete}
    ok = sum(1 for s in sessions if s.session_id in by_id and by_id[s.session_id].payload == s.payload)
    return ok / len(sessions) if sessions else math.nan
