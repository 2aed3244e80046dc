"""Benchmark the two greedy dedup kernels (numba @njit vs pure numpy).

Run: python benchmarks/bench_dedup.py [--files N] [--tokens N] [--repeats N]

Generates a synthetic corpus with a controlled near-duplicate rate, warms the
JIT, then times both kernels on identical encoded inputs and verifies their
outputs match bit for bit.
"""

import argparse
import random
import statistics
import time

import numpy as np

from codediagram.similarity import (
    _greedy_dedup_numba,
    _greedy_dedup_numpy,
    encode_token_sets,
    numba_enabled,
)


def synthetic_corpus(files: int, tokens_per_file: int, duplicate_rate: float, rng: random.Random):
    vocabulary = [f"tok{i}" for i in range(5000)]
    texts = []
    for _ in range(files):
        if texts and rng.random() < duplicate_rate:
            base = rng.choice(texts).split()
            # perturb a handful of tokens so similarity hovers near the threshold
            for _ in range(max(1, len(base) // 20)):
                base[rng.randrange(len(base))] = rng.choice(vocabulary)
            texts.append(" ".join(base))
        else:
            texts.append(" ".join(rng.choices(vocabulary, k=tokens_per_file)))
    return texts


def time_kernel(kernel, tokens, offsets, threshold: float, repeats: int) -> list[float]:
    timings = []
    for _ in range(repeats):
        started = time.perf_counter()
        kernel(tokens, offsets, threshold)
        timings.append(time.perf_counter() - started)
    return timings


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--files", type=int, default=600)
    parser.add_argument("--tokens", type=int, default=400)
    parser.add_argument("--duplicate-rate", type=float, default=0.3)
    parser.add_argument("--threshold", type=float, default=0.8)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not numba_enabled():
        print("warning: numba path disabled or unavailable; timing the fallback twice")

    rng = random.Random(args.seed)
    texts = synthetic_corpus(args.files, args.tokens, args.duplicate_rate, rng)
    tokens, offsets = encode_token_sets(texts)
    print(
        f"{args.files} files, ~{args.tokens} tokens each, "
        f"{tokens.size} packed indices, threshold {args.threshold}"
    )

    # first call compiles the @njit kernel; keep it out of the timings
    _greedy_dedup_numba(tokens[:10], offsets[:3].copy(), args.threshold)

    nb = time_kernel(_greedy_dedup_numba, tokens, offsets, args.threshold, args.repeats)
    np_ = time_kernel(_greedy_dedup_numpy, tokens, offsets, args.threshold, args.repeats)

    out_nb = _greedy_dedup_numba(tokens, offsets, args.threshold)
    out_np = _greedy_dedup_numpy(tokens, offsets, args.threshold)
    identical = all(np.array_equal(a, b) for a, b in zip(out_nb, out_np))
    dropped = int((~out_nb[0]).sum())

    def fmt(timings: list[float]) -> str:
        return f"median {statistics.median(timings) * 1000:8.2f} ms  best {min(timings) * 1000:8.2f} ms"

    print(f"numba kernel : {fmt(nb)}")
    print(f"numpy kernel : {fmt(np_)}")
    print(f"speedup      : {statistics.median(np_) / statistics.median(nb):6.1f}x (median)")
    print(f"dropped {dropped}/{args.files} near-duplicates; outputs identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    raise SystemExit(main())
