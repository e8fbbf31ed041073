"""Jamming: J/S -> bit error rate -> 31-bit block error -> ring-alert PRR.

The jammer is treated as Gaussian noise with Eb/N0 = 1 / (2 J/S), so
p = erfc(sqrt(1 / (2 J/S))) / 2.  A block survives with at most two bit
errors in 31, and a ring alert needs all three blocks.
"""

import math
from dataclasses import dataclass

import numpy as np

BLOCK_BITS = 31
CORRECTABLE = 2
BLOCKS = 3
# 20 log10(4 pi / c) for metres and hertz, rounded
FSPL_CONSTANT_DB = -147.55


def erfc(x):
    """Complementary error function, absolute error below 1e-14.

    |x| < 3: erf(x) = 2x/sqrt(pi) exp(-x^2) sum_n (2x^2)^n / (2n+1)!!, a
    series with positive terms only.  Beyond that, the Laplace continued
    fraction evaluated with the modified Lentz method.
    """
    x = float(x)
    if math.isnan(x):
        return x
    if x < 0:
        return 2.0 - erfc(-x)
    if x < 3.0:
        term = total = x
        x2 = 2 * x * x
        n = 0
        while term > 1e-17 * total:
            n += 1
            term *= x2 / (2 * n + 1)
            total += term
        return 1.0 - 2 / math.sqrt(math.pi) * math.exp(-x * x) * total
    if x > 27.3:
        return 0.0
    # erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    k = 1
    while True:
        a = k / 2
        d = x + a * d
        d = 1 / (d if d else tiny)
        c = x + a / c
        c = c if c else tiny
        delta = c * d
        f *= delta
        if abs(delta - 1) < 1e-16:
            break
        k += 1
    return math.exp(-x * x) / math.sqrt(math.pi) / f


@dataclass(frozen=True)
class JsRatio:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("J/S must be positive")

    @classmethod
    def from_db(cls, db):
        return cls(10 ** (db / 10))

    @property
    def db(self):
        return 10 * math.log10(self.value)


@dataclass(frozen=True)
class BerPoint:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.5:
            raise ValueError("bit error probability must be within [0, 0.5]")


@dataclass(frozen=True)
class LinkBudget:
    jammer_power_dbm: float
    distance_m: float
    signal_dbm: float = -120.0
    freq_hz: float = 1_626_250_000.0

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ValueError("distance must be positive")
        if not self.freq_hz > 0:
            raise ValueError("frequency must be positive")


def _js(js):
    return js if isinstance(js, JsRatio) else JsRatio(js)


def ber_from_js(js):
    js = _js(js)
    return BerPoint(min(0.5, 0.5 * erfc(math.sqrt(1 / (2 * js.value)))))


def block_error(p):
    p = p.p if isinstance(p, BerPoint) else BerPoint(p).p
    q = 1.0 - p
    # summing the tail directly avoids the cancellation in 1 - P(<= 2 errors) at small p
    tail = sum(math.comb(BLOCK_BITS, k) * p ** k * q ** (BLOCK_BITS - k)
               for k in range(CORRECTABLE + 1, BLOCK_BITS + 1))
    return min(1.0, max(0.0, tail))


def prr(js):
    return (1.0 - block_error(ber_from_js(js))) ** BLOCKS


def js_for_prr(target, lo_db=-60.0, hi_db=40.0, tol=1e-9):
    """J/S at which PRR equals ``target``, by bisection in dB."""
    if not 0.0 < target < 1.0:
        raise ValueError("target PRR must be in (0, 1)")
    f_lo, f_hi = prr(JsRatio.from_db(lo_db)) - target, prr(JsRatio.from_db(hi_db)) - target
    if f_lo < 0 or f_hi > 0:
        raise ValueError("target not bracketed")
    for _ in range(200):
        mid = (lo_db + hi_db) / 2
        f = prr(JsRatio.from_db(mid)) - target
        if abs(f) < tol and hi_db - lo_db < 1e-9:
            break
        if f > 0:
            lo_db = mid
        else:
            hi_db = mid
    return JsRatio.from_db((lo_db + hi_db) / 2)


def monte_carlo_prr(js, trials=100_000, seed=0, chunk=20_000):
    """Fraction of trials in which every block has <= 2 flipped bits."""
    if trials < 10_000:
        raise ValueError("need at least 10,000 trials")
    p = ber_from_js(js).p
    ok = 0
    # each chunk has its own child seed so the answer does not depend on chunking order
    children = np.random.SeedSequence(seed).spawn(math.ceil(trials / chunk))
    for i, child in enumerate(children):
        n = min(chunk, trials - i * chunk)
        rng = np.random.default_rng(child)
        flips = (rng.random((n, BLOCKS, BLOCK_BITS)) < p).sum(axis=2)
        ok += int(np.all(flips <= CORRECTABLE, axis=1).sum())
    return ok / trials


def binomial_sigma(p, trials):
    return math.sqrt(p * (1 - p) / trials)


def fspl_db(distance_m, freq_hz):
    return 20 * math.log10(distance_m) + 20 * math.log10(freq_hz) + FSPL_CONSTANT_DB


def js_from_link_budget(budget):
    received = budget.jammer_power_dbm - fspl_db(budget.distance_m, budget.freq_hz)
    return JsRatio.from_db(received - budget.signal_dbm)


def jam_curve(from_db, to_db, step_db, trials=100_000, seed=0):
    """Rows of (js_db, analytic, empirical, sigma) on an inclusive grid."""
    n = int(math.floor((to_db - from_db) / step_db + 1e-9)) + 1
    rows = []
    for i in range(n):
        db = from_db + i * step_db
        js = JsRatio.from_db(db)
        a = prr(js)
        e = monte_carlo_prr(js, trials, seed=seed + i) if trials else math.nan
        rows.append((db, a, e, binomial_sigma(a, trials) if trials else math.nan))
    return rows
