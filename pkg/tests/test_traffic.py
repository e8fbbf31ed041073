import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iridium_lab.frame_codec import BurstRecord, FrameCategory
from iridium_lab.traffic import (
    AggregateStats, DuplicateSlot, EntropyClass, Session, classify_entropy, cluster_lanes,
    completion_rate, privacy_stats, reassemble, reconstruct, render_entropy_table,
    render_frame_table, shannon_entropy, stats_csv, synthetic_trace,
)


def english_text(min_bytes=20_000):
    from pydoc_data.topics import topics
    out = b""
    for key in sorted(topics):
        # whitespace runs collapsed so that indentation does not dominate the byte statistics
        out += " ".join(topics[key].split()).encode("ascii", "ignore") + b" "
        if len(out) >= min_bytes:
            return out
    raise AssertionError("not enough text")


def ascii_payload(rng, n):
    text = english_text()
    start = int(rng.integers(0, len(text) - n))
    return text[start:start + n]


# published "Observed Iridium frames" table, used as fixture values
OBSERVED = {
    FrameCategory.Acquisition: 47_127, FrameCategory.Messaging: 3_039_478,
    FrameCategory.Voice: 5_135_995, FrameCategory.Next: 7_184_915,
    FrameCategory.RingAlert: 10_186_711, FrameCategory.Stl: 10_843_844,
    FrameCategory.IpData: 24_223_233, FrameCategory.Broadcast: 26_817_173,
    FrameCategory.SbdGsm: 29_137_018, FrameCategory.Sync: 31_935_215,
    FrameCategory.Unknown: 38_237_477,
}
# "High entropy packets statistics": category -> (total, high)
HIGH = {"Pager": (7_545, 1_992), "Voice": (37_515, 17_284), "IP Data": (65_875, 43_664),
        "NEXT": (319_625, 117_670), "SBD/GSM": (1_144_874, 769)}


# --- lanes -------------------------------------------------------------------

def test_three_interleaved_sessions():
    records, sessions = synthetic_trace(3, seed=1, span_ms=300)
    lanes = cluster_lanes(records)
    assert len(lanes) == 3
    by_freq = {s.freq_hz: s for s in sessions}
    for lane in lanes:
        members = [records[i] for i in lane.members]
        first = min(members, key=lambda r: r.timestamp_ms)
        truth = by_freq[first.freq_hz]
        assert len(members) == -(-len(truth.payload) // 20)
        assert 0 <= lane.slot_phase_ms < 90
    out = reconstruct(records)
    assert sorted(s.payload for s in out) == sorted(s.payload for s in sessions)
    assert all(s.complete for s in out)
    assert completion_rate(sessions, out) == 1.0


def test_partition():
    records, _ = synthetic_trace(40, seed=2)
    lanes = cluster_lanes(records)
    members = sorted(i for lane in lanes for i in lane.members)
    assert members == list(range(len(records)))


def test_drifting_session_is_one_lane():
    rng = np.random.default_rng(3)
    f0 = 1_621_000_000
    records = []
    for k in range(int(60_000 / 90)):
        t = 1000 + k * 90
        f = int(round(f0 + 50.0 * (t - 1000) / 1000))
        records.append(BurstRecord(t, f, 10.0, 90, "".join(rng.choice(["0", "1"], 100))))
    lanes = cluster_lanes(records)
    assert len(lanes) == 1
    assert lanes[0].drift_rate_hz_per_s == pytest.approx(50.0, abs=0.5)


def test_empty_input():
    assert cluster_lanes([]) == []
    assert reconstruct([]) == []


def test_deterministic():
    records, _ = synthetic_trace(20, seed=4)
    a = [lane.members for lane in cluster_lanes(records)]
    b = [lane.members for lane in cluster_lanes(records)]
    assert a == b


def test_five_percent_loss_band():
    rates = []
    for seed in range(5):
        records, sessions = synthetic_trace(100, seed=seed, loss=0.05)
        rates.append(completion_rate(sessions, reconstruct(records)))
    assert all(0.63 <= r <= 0.93 for r in rates)


def test_lost_frame_marks_incomplete():
    records, sessions = synthetic_trace(1, seed=5, min_bytes=100, max_bytes=100)
    del records[2]
    (s,) = reconstruct(records)
    assert not s.complete
    assert completion_rate(sessions, [s]) == 0.0


def test_identical_duplicate_is_dropped():
    records, sessions = synthetic_trace(1, seed=6)
    doubled = records + [records[1]]
    (s,) = reconstruct(doubled)
    assert s.complete and s.payload == sessions[0].payload


def test_conflicting_duplicate_raises():
    records, _ = synthetic_trace(1, seed=7)
    r = records[1]
    bad = BurstRecord(r.timestamp_ms, r.freq_hz, r.snr_db, r.confidence, r.bits[:-1] + ("1" if r.bits[-1] == "0" else "0"))
    lanes = cluster_lanes(records + [bad])
    with pytest.raises(DuplicateSlot) as exc:
        reassemble(lanes[0], records + [bad])
    assert set(exc.value.bursts) == {r, bad}


# --- entropy -----------------------------------------------------------------

def test_entropy_examples():
    assert shannon_entropy(b"\x41" * 4096) == 0.0
    assert shannon_entropy(np.random.default_rng(8).bytes(65_536)) >= 7.9
    text = english_text()
    assert len(text) >= 10_000
    assert 3.5 <= shannon_entropy(text) <= 5.5
    assert shannon_entropy(bytes(range(256))) == pytest.approx(8.0)
    with pytest.raises(ValueError):
        shannon_entropy(b"")


@settings(max_examples=200)
@given(st.binary(min_size=1, max_size=2000))
def test_entropy_bounds(data):
    assert 0.0 <= shannon_entropy(data) <= 8.0


def test_entropy_rises_when_mixing_in_random_block():
    rng = np.random.default_rng(9)
    text = english_text()
    for _ in range(200):
        n = int(rng.integers(64, 4000))
        start = int(rng.integers(0, len(text) - n))
        base = text[start:start + n] if rng.random() < 0.5 else bytes([int(rng.integers(256))]) * n
        mixed = base + rng.bytes(int(rng.integers(64, 4000)))
        assert shannon_entropy(mixed) >= shannon_entropy(base) - 0.05


@pytest.mark.parametrize("h,n,cls", [
    (7.5, 1024, EntropyClass.HighEntropy), (4.5, 1024, EntropyClass.LowEntropy),
    (7.9, 16, EntropyClass.Indeterminate), (7.0, 64, EntropyClass.LowEntropy),
    (7.0001, 64, EntropyClass.HighEntropy), (0.0, 63, EntropyClass.Indeterminate),
])
def test_classify_entropy(h, n, cls):
    assert classify_entropy(h, n) is cls


@pytest.mark.parametrize("h", [-0.1, 8.1])
def test_classify_entropy_range(h):
    with pytest.raises(ValueError):
        classify_entropy(h, 100)


def test_uniform_high_text_low():
    rng = np.random.default_rng(10)
    data = rng.bytes(4096)
    assert classify_entropy(shannon_entropy(data), len(data)) is EntropyClass.HighEntropy
    text = english_text()
    assert classify_entropy(shannon_entropy(text), len(text)) is EntropyClass.LowEntropy


# --- aggregate statistics ----------------------------------------------------

def test_published_frame_table_fixture():
    stats = AggregateStats(OBSERVED)
    assert stats.total == 186_788_186
    table = render_frame_table(stats)
    rows = {line[:12].strip(): [c.strip() for c in line[12:].rsplit(None, 1)] for line in table.splitlines()[1:]}
    assert rows["RingAlert"] == ["10 186 711", "5.45%"]
    assert rows["Total"] == ["186 788 186", "100.00%"]
    for cat, n in OBSERVED.items():
        assert f"{n:,}".replace(",", " ") in table
    assert sum(round(stats.share(c), 2) for c in OBSERVED) == pytest.approx(100.0, abs=0.06)


def test_published_entropy_table_fixture():
    stats = AggregateStats({k: t for k, (t, _) in HIGH.items()}, {k: h for k, (_, h) in HIGH.items()})
    table = render_entropy_table(stats)
    lines = table.splitlines()
    assert lines[-1].split()[-1] == "11.51%"
    assert "1 575 434" in lines[-1] and "181 379" in lines[-1]
    assert "SBD/GSM" in table and "0.07%" in table
    assert stats.high_share("IP Data") == pytest.approx(66.28, abs=0.005)


def test_high_cannot_exceed_total():
    with pytest.raises(ValueError):
        AggregateStats({FrameCategory.Voice: 3}, {FrameCategory.Voice: 4})


def test_all_high_entropy_share():
    # long payloads, since the plug-in estimate of short random blocks falls below 7 bits/byte
    records, sessions = synthetic_trace(20, seed=11, min_bytes=2000, max_bytes=4000)
    stats = privacy_stats(reconstruct(records))
    assert stats.high_share(FrameCategory.IpData) == 100.0
    assert stats.total == len(records)


def test_text_sessions_are_low_entropy():
    records, _ = synthetic_trace(20, seed=12, min_bytes=100, max_bytes=160, payload_fn=ascii_payload)
    stats = privacy_stats(reconstruct(records))
    assert stats.high_entropy_total == 0


def eight_grams(data):
    return {data[i:i + 8] for i in range(len(data) - 7)}


def test_privacy_outputs_hold_no_payload(tmp_path):
    records, sessions = synthetic_trace(60, seed=13, payload_fn=ascii_payload)
    rng_records, rng_sessions = synthetic_trace(60, seed=14)
    reassembled = reconstruct(records) + reconstruct(rng_records)
    stats = privacy_stats(reassembled, records + rng_records)
    outputs = {"frames.txt": render_frame_table(stats), "entropy.txt": render_entropy_table(stats),
               "stats.csv": stats_csv(stats)}
    for name, text in outputs.items():
        (tmp_path / name).write_text(text)
    written = b"".join(p.read_bytes() for p in sorted(tmp_path.iterdir()))
    grams = eight_grams(written)
    for s in sessions + rng_sessions:
        assert not (eight_grams(s.payload) & grams)
        assert not (eight_grams(s.payload.hex().encode()) & grams)


def test_session_entropy_in_range():
    records, _ = synthetic_trace(10, seed=15)
    for s in reconstruct(records):
        assert isinstance(s, Session)
        assert 0.0 <= s.entropy_bits_per_byte <= 8.0
