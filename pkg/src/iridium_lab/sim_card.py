"""Simulated SIM cards and the reader seam used by the key extraction attack.

A card answers RUN GSM ALGORITHM with COMP128-1.  Iridium SIMs have no
authentication counter, so ``counter_limit`` defaults to None; setting it
models the GSM-style countermeasure (about 60,000 runs on later GSM SIMs).

External readers speak GSM 11.11 APDUs:

    SELECT DF_GSM         A0 A4 00 00 02 7F 20
    RUN GSM ALGORITHM     A0 88 00 00 10 <RAND:16>      -> SW 9F 0C
    GET RESPONSE          A0 C0 00 00 0C                -> SRES:4 Kc:8, SW 90 00

The class byte and file layout of Iridium cards are not public; A0 is the
GSM default.  The bridge is only exercised with a real reader attached.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .comp128 import AuthResult, comp128v1, comp128v1_many

MAX_SLOTS = 12


class CardLocked(Exception):
    """The card refuses further RUN GSM ALGORITHM commands."""

    def __init__(self, counter, answered=()):
        super().__init__(f"authentication counter exhausted after {counter} runs")
        self.counter = counter
        # results returned in the same batch before the lock hit
        self.answered = list(answered)


class TransportError(Exception):
    pass


@dataclass(frozen=True)
class SubscriberIdentity:
    imsi: str
    ki: bytes

    def __post_init__(self):
        if not re.fullmatch(r"\d{1,15}", self.imsi or ""):
            raise ValueError(f"IMSI must be 1-15 decimal digits, got {self.imsi!r}")
        ki = bytes(self.ki)
        if len(ki) != 16:
            raise ValueError("Ki must be 16 bytes")
        object.__setattr__(self, "ki", ki)


@dataclass
class SimProfile:
    identity: SubscriberIdentity
    query_counter: int = 0
    counter_limit: int | None = None
    per_query_latency: float = 0.0
    # simulated time spent answering, in seconds; nothing actually sleeps
    elapsed: float = field(default=0.0, repr=False)
    locked: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.query_counter < 0:
            raise ValueError("query_counter must be non-negative")
        if self.counter_limit is not None:
            if self.counter_limit <= 0:
                raise ValueError("counter_limit must be positive")
            if self.query_counter > self.counter_limit:
                raise ValueError("query_counter exceeds counter_limit")

    @property
    def imsi(self):
        return self.identity.imsi

    @property
    def ki(self):
        return self.identity.ki

    def _remaining(self):
        if self.locked:
            return 0
        if self.counter_limit is None:
            return None
        return self.counter_limit - self.query_counter

    def run_gsm_algorithm(self, rand):
        remaining = self._remaining()
        if remaining is not None and remaining <= 0:
            self.locked = True
            raise CardLocked(self.query_counter)
        result = comp128v1(self.identity.ki, rand)
        self.query_counter += 1
        self.elapsed += self.per_query_latency
        return result

    def run_gsm_algorithm_many(self, rands):
        """Answer a sequence of challenges in order.

        Equivalent to calling run_gsm_algorithm once per challenge, only
        faster.  If the counter runs out part way, the answered prefix is
        attached to the CardLocked exception.
        """
        rands = np.asarray(rands, dtype=np.uint8).reshape(-1, 16)
        remaining = self._remaining()
        allowed = len(rands) if remaining is None else max(0, min(len(rands), remaining))
        results = []
        if allowed:
            sres, kc = comp128v1_many(self.identity.ki, rands[:allowed])
            results = [AuthResult(s.tobytes(), k.tobytes()) for s, k in zip(sres, kc)]
            self.query_counter += allowed
            self.elapsed += allowed * self.per_query_latency
        if allowed < len(rands):
            self.locked = True
            raise CardLocked(self.query_counter, results)
        return results

    def reset(self):
        """Administrative unlock; the only way the counter goes back to zero."""
        self.query_counter = 0
        self.locked = False


def run_gsm_algorithm(card, challenge):
    return card.run_gsm_algorithm(challenge)


class ProgrammableCard:
    """A blank multi-IMSI card ("12 in 1") that answers with the selected slot."""

    def __init__(self, slots=MAX_SLOTS):
        if not 1 <= slots <= MAX_SLOTS:
            raise ValueError(f"a programmable card holds 1..{MAX_SLOTS} slots")
        self.slots = [None] * slots
        self.active_slot = 0
        self._profiles = [None] * slots

    def program(self, slot, identity):
        self._check_slot(slot)
        self.slots[slot] = identity
        self._profiles[slot] = SimProfile(identity)
        return self

    def select(self, slot):
        self._check_slot(slot)
        if self.slots[slot] is None:
            raise ValueError(f"slot {slot} is empty")
        self.active_slot = slot
        return self

    def read_identity(self, slot=None):
        slot = self.active_slot if slot is None else slot
        self._check_slot(slot)
        return self.slots[slot]

    @property
    def profile(self):
        p = self._profiles[self.active_slot]
        if p is None:
            raise ValueError(f"active slot {self.active_slot} is empty")
        return p

    @property
    def imsi(self):
        return self.profile.imsi

    def run_gsm_algorithm(self, rand):
        return self.profile.run_gsm_algorithm(rand)

    def run_gsm_algorithm_many(self, rands):
        return self.profile.run_gsm_algorithm_many(rands)

    def _check_slot(self, slot):
        if not 0 <= slot < len(self.slots):
            raise ValueError(f"slot must be in 0..{len(self.slots) - 1}")


def program_card(card, slot, identity):
    return card.program(slot, identity)


# --- reader transport ------------------------------------------------------

@dataclass(frozen=True)
class AuthQuery:
    rand: bytes

    def __post_init__(self):
        if len(self.rand) != 16:
            raise ValueError("RAND must be 16 bytes")


SELECT_DF_GSM = bytes.fromhex("A0A40000027F20")


def run_gsm_apdu(rand):
    return bytes.fromhex("A088000010") + bytes(rand)


GET_RESPONSE_AUTH = bytes.fromhex("A0C000000C")


class ReaderTransport:
    """Single seam between the attack code and a card.

    ``mode="simulated"`` forwards to an in-process card object.  ``mode="external"``
    needs ``connection``, anything with a pyscard-style
    ``transmit(list[int]) -> (data, sw1, sw2)``.
    """

    def __init__(self, mode="simulated", card=None, connection=None):
        if mode not in ("simulated", "external"):
            raise ValueError(f"unknown transport mode {mode!r}")
        self.mode = mode
        self.card = card
        self.connection = connection
        self._selected = False

    @classmethod
    def from_pcsc(cls, reader_index=0):
        try:
            from smartcard.System import readers
        except ImportError as exc:
            raise TransportError("pyscard is not installed") from exc
        available = readers()
        if len(available) <= reader_index:
            raise TransportError("no PC/SC reader found")
        conn = available[reader_index].createConnection()
        conn.connect()
        return cls("external", connection=conn)

    def query(self, query):
        if not isinstance(query, AuthQuery):
            query = AuthQuery(bytes(query))
        if self.mode == "simulated":
            if self.card is None:
                raise TransportError("simulated transport has no card")
            return self.card.run_gsm_algorithm(query.rand)
        return self._query_external(query.rand)

    def run_gsm_algorithm(self, rand):
        return self.query(AuthQuery(bytes(rand)))

    def run_gsm_algorithm_many(self, rands):
        if self.mode == "simulated" and hasattr(self.card, "run_gsm_algorithm_many"):
            return self.card.run_gsm_algorithm_many(rands)
        return [self.run_gsm_algorithm(bytes(r)) for r in np.asarray(rands, np.uint8).reshape(-1, 16)]

    def _transmit(self, apdu):
        try:
            data, sw1, sw2 = self.connection.transmit(list(apdu))
        except Exception as exc:  # reader unplugged, card removed, ...
            raise TransportError(f"APDU exchange failed: {exc}") from exc
        return bytes(data), (sw1 << 8) | sw2

    def _query_external(self, rand):
        if self.connection is None:
            raise TransportError("external transport is not configured")
        if not self._selected:
            _, sw = self._transmit(SELECT_DF_GSM)
            if sw >> 8 not in (0x9F, 0x90):
                raise TransportError(f"SELECT DF_GSM failed, SW={sw:04X}")
            self._selected = True
        data, sw = self._transmit(run_gsm_apdu(rand))
        if sw == 0x9F0C:
            data, sw = self._transmit(GET_RESPONSE_AUTH)
        if sw == 0x9240 or sw == 0x9804:
            raise CardLocked(-1)
        if sw != 0x9000 or len(data) != 12:
            raise TransportError(f"RUN GSM ALGORITHM failed, SW={sw:04X}")
        return AuthResult.from_bytes(data)


def reader_transport(query, transport):
    return transport.query(query)


# --- profile files ---------------------------------------------------------

def dump_profile(profile):
    limit = "none" if profile.counter_limit is None else str(profile.counter_limit)
    return (
        f"imsi = {profile.identity.imsi}\n"
        f"ki = {profile.identity.ki.hex()}\n"
        f"query_counter = {profile.query_counter}\n"
        f"counter_limit = {limit}\n"
        f"per_query_latency = {profile.per_query_latency!r}\n"
    )


def load_profile(text):
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        fields[key] = value
    try:
        identity = SubscriberIdentity(fields["imsi"], bytes.fromhex(fields["ki"]))
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]}") from None
    limit = fields.get("counter_limit", "none")
    return SimProfile(
        identity,
        query_counter=int(fields.get("query_counter", 0)),
        counter_limit=None if limit.lower() == "none" else int(limit),
        per_query_latency=float(fields.get("per_query_latency", 0.0)),
    )
