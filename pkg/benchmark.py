#!/usr/bin/env python3
"""
Performance benchmark suite for RIDS.

This script measures:
- Frame record encode/decode speed
- Flood detector throughput (frames/sec)
- Per-batch classification latency (the controller's real-time budget)
- Training time and model size per classifier kind

Usage:
    python benchmark.py
    python benchmark.py --iterations 200
    python benchmark.py --acceptance
"""

import argparse
import os
import statistics
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Tuple

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent))

from rids.attacks import ATTACK_LABELS, gen_scenario, lab_scenario
from rids.classifier import MODEL_KINDS, fit_model, serialize_model
from rids.controller import handle_batch
from rids.evaluation import evaluate, stratified_split
from rids.fds import FloodDetector
from rids.frames import decode_frame, encode_frame
from rids.pipeline import acceptance_configs, acceptance_corpus, ap_view, build_corpus

BATCH_BUDGET_MS = 10.0


def percentile(xs: List[float], p: float) -> float:
    """
    Calculate percentile.

    Args:
        xs: List of values
        p: Percentile (0.0 to 1.0)

    Returns:
        Percentile value
    """
    if not xs:
        return 0.0
    xs_sorted = sorted(xs)
    k = (len(xs_sorted) - 1) * p
    f = int(k)
    c = min(f + 1, len(xs_sorted) - 1)
    if f == c:
        return xs_sorted[f]
    return xs_sorted[f] + (xs_sorted[c] - xs_sorted[f]) * (k - f)


def summarize(times: List[float]) -> Dict[str, float]:
    return {
        'mean_time': statistics.mean(times),
        'median_time': statistics.median(times),
        'p95_time': percentile(times, 0.95),
        'min_time': min(times),
        'max_time': max(times),
    }


class Benchmark:
    """Performance benchmarking suite."""

    def __init__(self, acceptance: bool = False, seed: int = 0):
        self.seed = seed
        if acceptance:
            self.configs = acceptance_configs(seed)
        else:
            self.configs = [lab_scenario([label], seed=seed + i) for i, label in enumerate(ATTACK_LABELS)]
        print(f"Generating {len(self.configs)} scenarios...")
        start = time.perf_counter()
        if acceptance:
            self.vectors = acceptance_corpus(seed, progress=True)
        else:
            self.vectors = build_corpus(self.configs, progress=True)
        print(f"✓ {len(self.vectors)} vectors in {time.perf_counter() - start:.1f} s\n")
        self.train, self.test = stratified_split(self.vectors, seed=seed)

    def time_function(self, func, *args, iterations: int = 100) -> Tuple[float, List[float], Any]:
        """Time ``iterations`` calls; returns (mean, per-call times, last result)."""
        times = []
        last_result = None
        for _ in range(iterations):
            start = time.perf_counter()
            last_result = func(*args)
            times.append(time.perf_counter() - start)
        return statistics.mean(times), times, last_result

    def benchmark_codec(self, iterations: int) -> Dict:
        frames = gen_scenario(self.configs[0])[:1000]
        records = [encode_frame(f) for f in frames]
        _, enc_times, _ = self.time_function(lambda: [encode_frame(f) for f in frames], iterations=iterations)
        _, dec_times, _ = self.time_function(lambda: [decode_frame(r) for r in records], iterations=iterations)
        return {
            'frames': len(frames),
            'encode_per_sec': len(frames) / statistics.median(enc_times),
            'decode_per_sec': len(frames) / statistics.median(dec_times),
        }

    def benchmark_fds(self) -> Dict:
        cfg = self.configs[0]
        ap = cfg.aps[0]
        view = ap_view(gen_scenario(cfg), ap)
        start = time.perf_counter()
        detector = FloodDetector(ap.bssid, stations=cfg.stations_of(ap))
        batches = detector.run(view, end_us=cfg.duration_us)
        elapsed = time.perf_counter() - start
        return {
            'frames': len(view),
            'batches': len(batches),
            'frames_per_sec': len(view) / elapsed if elapsed > 0 else 0,
        }

    def benchmark_batches(self, model, iterations: int) -> List[Tuple[str, Dict]]:
        results = []
        for cfg in self.configs:
            ap = cfg.aps[0]
            view = ap_view(gen_scenario(cfg), ap)
            batches = FloodDetector(ap.bssid, stations=cfg.stations_of(ap)).run(view, end_us=cfg.duration_us)
            batches = [b for b in batches if b.frames]
            if not batches:
                continue
            batch = max(batches, key=lambda b: len(b.frames))
            _, times, _ = self.time_function(handle_batch, batch, model, ap, iterations=iterations)
            stats = summarize(times)
            stats['frames'] = len(batch.frames)
            results.append((cfg.name, stats))
        return results

    def run_all_benchmarks(self, iterations: int = 100):
        print("=" * 70)
        print("RIDS PERFORMANCE BENCHMARK")
        print("=" * 70)

        print("\nFRAME CODEC")
        print("-" * 70)
        codec = self.benchmark_codec(max(1, iterations // 10))
        print(f"  Encode: {codec['encode_per_sec']:.0f} frames/sec")
        print(f"  Decode: {codec['decode_per_sec']:.0f} frames/sec")

        print("\nFLOOD DETECTOR")
        print("-" * 70)
        fds = self.benchmark_fds()
        print(f"  {fds['frames']} frames, {fds['batches']} captures")
        print(f"  Throughput: {fds['frames_per_sec']:.0f} frames/sec")

        print("\nTRAINING")
        print("-" * 70)
        models = {}
        for kind in sorted(MODEL_KINDS):
            start = time.perf_counter()
            model = fit_model(kind, self.train, seed=self.seed)
            elapsed = time.perf_counter() - start
            report = evaluate(model, self.test)
            models[kind] = model
            print(f"  {kind:<8} {elapsed:7.2f} s  accuracy {report.accuracy:.5f}  "
                  f"FPR {report.fpr:.5f}  size {len(serialize_model(model))} bytes")

        print("\nBATCH CLASSIFICATION (decision tree)")
        print("-" * 70)
        medians = []
        for name, stats in self.benchmark_batches(models["tree"], iterations):
            medians.append(stats['median_time'])
            print(f"\n{name}: {stats['frames']} frames")
            print(f"  Median time: {stats['median_time']*1000:.3f} ms")
            print(f"  P95 time: {stats['p95_time']*1000:.3f} ms")
            if stats['median_time'] * 1000 > BATCH_BUDGET_MS:
                print(f"  ⚠ Over the {BATCH_BUDGET_MS:.0f} ms budget")
        if medians:
            print(f"\nMedian over scenarios: {statistics.median(medians)*1000:.3f} ms")

        print("\n" + "=" * 70)
        print("BENCHMARK COMPLETE")
        print("=" * 70)


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description='Benchmark RIDS performance')
    parser.add_argument(
        '--iterations',
        type=int,
        default=100,
        help='Number of iterations per benchmark (default: 100)'
    )
    parser.add_argument(
        '--acceptance',
        action='store_true',
        help='Use the full acceptance corpus instead of one short scenario per attack'
    )
    parser.add_argument(
        '--seed',
        type=int,
        default=int(os.getenv('RIDS_BENCH_SEED', '0')),
        help='Corpus seed (default: RIDS_BENCH_SEED or 0)'
    )
    args = parser.parse_args()

    Benchmark(acceptance=args.acceptance, seed=args.seed).run_all_benchmarks(iterations=args.iterations)


if __name__ == '__main__':
    main()
