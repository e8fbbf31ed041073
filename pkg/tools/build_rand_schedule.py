"""Build the prepared challenge schedule used by the Ki extraction attack.

For every key-byte pair (ki[i], ki[i+8]) we enumerate all 2**16 choices of
(rand[i], rand[i+8]) and record which challenge pairs collide in the 28-bit
narrow pipe after the second butterfly level.  That collision graph is the
same for all eight byte positions, so one ordering serves the whole attack.

The ordering is greedy: the next challenge is the one that completes a
collision for the most key pairs not yet covered, ties broken by how many
uncovered collisions it takes part in.  Since the card only ever answers
"collided" or "did not", a fixed ordering is as good as an adaptive one.

Outputs (big-endian uint16 arrays) under src/iridium_lab/data/:
  rand_schedule.bin       permutation of 0..65535, value = rand[i] << 8 | rand[i+8]
  collision_free.bin      key pairs (ki[i] << 8 | ki[i+8]) with no collision at all

Needs numba.  Takes about a minute.
"""

import argparse
import pathlib
import time

import numba
import numpy as np

from iridium_lab.comp128 import TABLES

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "iridium_lab" / "data"


@numba.njit(cache=True)
def collision_edges(t0, t1):
    out = np.empty((700000, 3), np.int32)
    n = 0
    hs = 1 << 18
    keys = np.empty(hs, np.int64)
    vals = np.empty(hs, np.int32)
    for k in range(65536):
        k1 = k >> 8
        k2 = k & 255
        keys[:] = -1
        for r in range(65536):
            r1 = r >> 8
            r2 = r & 255
            a = t0[(k1 + 2 * r1) & 511]
            b = t0[(2 * k1 + r1) & 511]
            c = t0[(k2 + 2 * r2) & 511]
            d = t0[(2 * k2 + r2) & 511]
            s = (
                (t1[(a + 2 * c) & 255] << 21)
                | (t1[(2 * a + c) & 255] << 14)
                | (t1[(b + 2 * d) & 255] << 7)
                | t1[(2 * b + d) & 255]
            )
            h = ((s * 2654435761) >> 7) & (hs - 1)
            while keys[h] != -1 and keys[h] != s:
                h = (h + 1) & (hs - 1)
            if keys[h] == -1:
                keys[h] = s
                vals[h] = r
            else:
                out[n, 0] = k
                out[n, 1] = vals[h]
                out[n, 2] = r
                n += 1
    return out[:n]


@numba.njit(cache=True)
def greedy_order(ea, eb, ek, eid, ptr, kedge, kptr):
    n_r = 65536
    in_s = np.zeros(n_r, np.bool_)
    covered = np.zeros(65536, np.bool_)
    gain = np.zeros(n_r, np.int64)
    pot = np.zeros(n_r, np.int64)
    for i in range(len(ea)):
        pot[ea[i]] += 1
        pot[eb[i]] += 1
    seq = np.empty(n_r, np.int64)
    for step in range(n_r):
        best = -1
        bg = -1
        bp = -1
        for r in range(n_r):
            if in_s[r]:
                continue
            if gain[r] > bg or (gain[r] == bg and pot[r] > bp):
                best = r
                bg = gain[r]
                bp = pot[r]
        r = best
        in_s[r] = True
        seq[step] = r
        for j in range(ptr[r], ptr[r + 1]):
            e = eid[j]
            o = ea[e] if eb[e] == r else eb[e]
            k = ek[e]
            if in_s[o] and not covered[k]:
                covered[k] = True
                for jj in range(kptr[k], kptr[k + 1]):
                    e2 = kedge[jj]
                    a = ea[e2]
                    b = eb[e2]
                    if in_s[a] and not in_s[b]:
                        gain[b] -= 1
                    elif in_s[b] and not in_s[a]:
                        gain[a] -= 1
                    if not in_s[a]:
                        pot[a] -= 1
                    if not in_s[b]:
                        pot[b] -= 1
        for j in range(ptr[r], ptr[r + 1]):
            e = eid[j]
            o = ea[e] if eb[e] == r else eb[e]
            if not covered[ek[e]] and not in_s[o]:
                gain[o] += 1
    return seq


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, default=DATA)
    args = ap.parse_args()

    t0 = np.asarray(TABLES[0], dtype=np.int64)
    t1 = np.asarray(TABLES[1], dtype=np.int64)
    start = time.time()
    edges = collision_edges(t0, t1)
    print(f"{len(edges)} collision pairs in {time.time() - start:.1f}s")

    ek, ea, eb = edges[:, 0], edges[:, 1], edges[:, 2]
    ends = np.concatenate([ea, eb])
    order = np.argsort(ends, kind="stable")
    eid = np.concatenate([np.arange(len(ea)), np.arange(len(ea))])[order]
    ptr = np.concatenate([[0], np.cumsum(np.bincount(ends, minlength=65536))])
    kedge = np.argsort(ek, kind="stable")
    kcount = np.bincount(ek, minlength=65536)
    kptr = np.concatenate([[0], np.cumsum(kcount)])

    start = time.time()
    seq = greedy_order(ea, eb, ek, eid, ptr, kedge, kptr)
    print(f"greedy ordering in {time.time() - start:.1f}s")
    assert sorted(seq) == list(range(65536))

    free = np.nonzero(kcount == 0)[0]
    args.out.mkdir(parents=True, exist_ok=True)
    seq.astype(">u2").tofile(args.out / "rand_schedule.bin")
    free.astype(">u2").tofile(args.out / "collision_free.bin")
    print(f"{len(free)} collision-free key pairs")


if __name__ == "__main__":
    main()
