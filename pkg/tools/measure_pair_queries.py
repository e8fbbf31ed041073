"""Record how many card queries the prepared schedule needs per byte pair.

For random key pairs, replays the schedule through the narrow pipe and notes
where the first collision completes, rounded up to whole batches of 64.
Output: tests/data/pair_queries.json (used as a regression fixture).
"""

import json
import pathlib

import numpy as np

from iridium_lab.comp128 import narrow_pipe, pack_narrow_pipe
from iridium_lab.ki_extraction import prepared_schedule

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "pair_queries.json"
BATCH = 64


def first_collision_queries(key_pair, schedule):
    r = np.asarray(schedule)
    packed = pack_narrow_pipe(narrow_pipe(key_pair >> 8, key_pair & 0xFF, r >> 8, r & 0xFF))
    _, first = np.unique(packed, return_index=True)
    repeat = np.ones(len(r), bool)
    repeat[first] = False
    hits = np.nonzero(repeat)[0]
    if not hits.size:
        return None
    return int(-(-(hits[0] + 1) // BATCH) * BATCH)


def main(n=200, seed=2024):
    rng = np.random.default_rng(seed)
    keys = [int(k) for k in rng.integers(0, 1 << 16, n)]
    schedule = prepared_schedule()
    queries = [first_collision_queries(k, schedule) for k in keys]
    found = [q for q in queries if q is not None]
    summary = {
        "median": float(np.median(found)),
        "p25": float(np.percentile(found, 25)),
        "p75": float(np.percentile(found, 75)),
        "collision_free": queries.count(None),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"seed": seed, "batch": BATCH, "key_pairs": keys, "queries": queries,
                               "summary": summary}, indent=1) + "\n")
    print(summary)


if __name__ == "__main__":
    main()
