"""Benchmark the compiled Jaro-Winkler kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_jaro.py [--pairs 200000] [--seed 0]

Generates brand-like string pairs (short, lowercase, with sub-brand suffixes
sometimes appended) and times both implementations over the same workload.
"""

from __future__ import annotations

import argparse
import random
import time

from matchfuse import strings
from matchfuse.strings import pure_python

WORDS = ["orion", "kestrel", "halcyon", "verity", "nimbus", "ardent",
         "solstice", "meridian", "cobalt", "fable", "atlas", "vista"]
SUFFIXES = ["", " originals", " terra", " studio", " sport", " kids"]


def make_pairs(n: int, seed: int) -> list[tuple[str, str]]:
    rnd = random.Random(seed)
    pairs = []
    for _ in range(n):
        a = rnd.choice(WORDS) + rnd.choice(SUFFIXES)
        if rnd.random() < 0.5:
            b = rnd.choice(WORDS) + rnd.choice(SUFFIXES)
        else:  # near-duplicate with a typo, the interesting case for blocking
            chars = list(a)
            i = rnd.randrange(len(chars))
            chars[i] = rnd.choice("abcdefghijklmnopqrstuvwxyz")
            b = "".join(chars)
        pairs.append((a, b))
    return pairs


def bench(fn, pairs) -> float:
    t0 = time.perf_counter()
    acc = 0.0
    for a, b in pairs:
        acc += fn(a, b)
    elapsed = time.perf_counter() - t0
    # keep the accumulator alive so the loop cannot be optimized away
    assert acc >= 0.0
    return elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    pairs = make_pairs(args.pairs, args.seed)
    print(f"active kernel: {strings.KERNEL}")

    t_py = bench(pure_python.jaro_winkler, pairs)
    print(f"pure python : {args.pairs / t_py:12,.0f} pairs/s  ({t_py:.3f} s)")

    if strings.KERNEL == "compiled":
        t_c = bench(strings.jaro_winkler, pairs)
        print(f"compiled    : {args.pairs / t_c:12,.0f} pairs/s  ({t_c:.3f} s)")
        print(f"speedup     : {t_py / t_c:.1f}x")

        # sanity: both kernels agree on the benchmark workload
        for a, b in pairs[:1000]:
            assert abs(strings.jaro_winkler(a, b)
                       - pure_python.jaro_winkler(a, b)) < 1e-12
    else:
        print("compiled kernel unavailable; only the fallback was timed")


if __name__ == "__main__":
    main()
