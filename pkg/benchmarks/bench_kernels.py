#!/usr/bin/env python3
"""Benchmark the compiled Gibbs kernels against the pure-Python reference.

Both backends consume identical RNG streams, so besides timing this doubles
as an equivalence check: the final sampler states must match bit for bit.

    python benchmarks/bench_kernels.py [--docs 100] [--tokens 100]
        [--vocab 50] [--sweeps 50] [--seed 1]
"""

import argparse
import time

import numpy as np

from topicflow.backend import load_backend
from topicflow.corpus import Document
from topicflow.hdp import Hyperparams, gibbs_sweep, init_state


def build_corpus(n_docs, n_tokens, vocab_size, seed):
    gen = np.random.default_rng(seed)
    return [Document(id=f"d{j}", year=2000, tokens=[],
                     encoded=gen.integers(0, vocab_size,
                                          size=n_tokens).astype(np.int32))
            for j in range(n_docs)]


def run(kernels, docs, vocab_size, sweeps, seed):
    state = init_state(docs, Hyperparams(), k_init=4, seed=seed,
                       vocab_size=vocab_size)
    started = time.perf_counter()
    for _ in range(sweeps):
        gibbs_sweep(state, docs, kernels=kernels)
    elapsed = time.perf_counter() - started
    return state, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=100)
    parser.add_argument("--tokens", type=int, default=100)
    parser.add_argument("--vocab", type=int, default=50)
    parser.add_argument("--sweeps", type=int, default=50)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    docs = build_corpus(args.docs, args.tokens, args.vocab, args.seed)
    total_tokens = args.docs * args.tokens
    print(f"corpus: {args.docs} docs x {args.tokens} tokens, "
          f"V={args.vocab}, {args.sweeps} sweeps "
          f"({total_tokens * args.sweeps:,} token updates)")

    results = {}
    for name in ("python", "cython"):
        try:
            kernels = load_backend(name)
        except ImportError:
            print(f"{name:>8}: not available (extension not built)")
            continue
        state, elapsed = run(kernels, docs, args.vocab, args.sweeps,
                             args.seed)
        rate = total_tokens * args.sweeps / elapsed
        results[name] = (state, elapsed)
        print(f"{name:>8}: {elapsed:8.2f}s  {rate:12,.0f} tokens/s  "
              f"(final K={state.k})")

    if len(results) == 2:
        sp, sc = results["python"][0], results["cython"][0]
        identical = (sp.k == sc.k and np.array_equal(sp.z, sc.z)
                     and np.array_equal(sp.beta, sc.beta)
                     and sp.rng.state == sc.rng.state)
        speedup = results["python"][1] / results["cython"][1]
        print(f"\nspeedup: {speedup:.1f}x   "
              f"states bit-identical: {identical}")
        if not identical:
            raise SystemExit("backend mismatch: kernels have diverged")


if __name__ == "__main__":
    main()
