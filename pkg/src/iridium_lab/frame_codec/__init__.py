"""Iridium burst records, frame layouts and a DQPSK modulator."""

from .bch import BlockDecodeError, bch_decode, bch_encode
from .frames import (
    CATEGORY_TAGS, DATA_FRAME_LEN, RING_ALERT_LEN, DataFrame, FrameCategory, FrameDecodeError,
    ImplausiblePosition, PositionKind, PositionReport, RingAlertFrame, classify_bits,
    classify_frame, convert_to_geodetic, data_lcw, decode_data_frame, decode_position_report,
    decode_ring_alert, decode_ring_alert_blocks, encode_data_frame, encode_position_frame,
    encode_ring_alert, frame_header, geodetic_to_report, great_circle_km, ring_alert_blocks,
    synthetic_corpus,
)
from .ibr import BurstRecord, ParseError, RangeError, from_gr_iridium, parse_ibr_line, read_ibr, serialize_ibr
from .lcw import Lcw, decode_lcw, encode_lcw
from .modem import ConfigError, demodulate, modulate, read_recording, sigmf_metadata, write_recording
