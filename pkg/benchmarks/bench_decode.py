#!/usr/bin/env python3
"""Benchmark: compiled decode kernel vs the pure-Python fallback.

Covers the single-span decode microbenchmark and an end-to-end page
extraction comparison. Run from the repository root:

    python benchmarks/bench_decode.py
"""

from __future__ import annotations

import random
import time

import numpy as np

from kvcanon._kernels import _decode_py

try:
    from kvcanon._kernels._decode import decode_best_span as compiled_decode
except ImportError:
    compiled_decode = None

from kvcanon.backends import RuleBackend
from kvcanon.corpus import deidentify
from kvcanon.extract import extract_page
from kvcanon.synthesis import GeneratorConfig, generate_synthetic_corpus


def bench_decode(n_cases: int = 2000, length: int = 448, seed: int = 1) -> None:
    rng = random.Random(seed)
    cases = []
    for _ in range(n_cases):
        starts = np.array([rng.gauss(0, 3) for _ in range(length)])
        ends = np.array([rng.gauss(0, 3) for _ in range(length)])
        cases.append((starts, ends, rng.gauss(0, 3)))

    def run(fn) -> float:
        t0 = time.perf_counter()
        for starts, ends, null in cases:
            fn(starts, ends, null, 20, 0.9, 64, 0.0)
        return time.perf_counter() - t0

    pure = run(_decode_py.decode_best_span)
    print(f"decode L={length}: pure python  {pure / n_cases * 1e6:8.1f} us/op")
    if compiled_decode is not None:
        fast = run(compiled_decode)
        print(f"decode L={length}: compiled     {fast / n_cases * 1e6:8.1f} us/op")
        print(f"decode L={length}: speedup      {pure / fast:8.1f}x")
    else:
        print("compiled kernel not built; skipping comparison")

    # outputs must agree bit for bit
    for starts, ends, null in cases[:200]:
        a = _decode_py.decode_best_span(starts, ends, null, 20, 0.9, 64, 0.0)
        if compiled_decode is not None:
            assert a == compiled_decode(starts, ends, null, 20, 0.9, 64, 0.0)


def bench_extraction(n_pages: int = 150, seed: int = 2) -> None:
    import kvcanon.decoder as decoder_mod

    corpus = generate_synthetic_corpus(
        GeneratorConfig(n_keys=150, n_pages=n_pages, seed=seed)
    )
    pages = [deidentify(p, corpus.pii_selectors.get(p.page_id, [])) for p in corpus.pages]
    backend = RuleBackend(corpus.inventory)

    kernels = [("pure python", _decode_py.decode_best_span)]
    if compiled_decode is not None:
        kernels.append(("compiled", compiled_decode))

    results = {}
    saved = decoder_mod.decode_best_span
    try:
        for label, kernel in kernels:
            decoder_mod.decode_best_span = kernel  # extraction resolves through decoder
            t0 = time.perf_counter()
            for page in pages:
                extract_page(page.text, corpus.inventory, backend)
            results[label] = time.perf_counter() - t0
    finally:
        decoder_mod.decode_best_span = saved
    for label, elapsed in results.items():
        print(f"extract {n_pages} pages x 150 keys: {label:12s} {elapsed:6.2f}s")
    if "compiled" in results:
        print(
            f"extract {n_pages} pages x 150 keys: speedup      "
            f"{results['pure python'] / results['compiled']:6.1f}x"
        )


if __name__ == "__main__":
    bench_decode()
    bench_extraction()
