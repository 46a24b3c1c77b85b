"""
Acceptance and performance tests on the full generated corpus.
"""

import sys
import time
import unittest
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from rids._types import AttackLabel
from rids.attacks import ATTACK_LABELS
from rids.classifier import fit_forest, fit_tree, serialize_model
from rids.config import load_config
from rids.evaluation import evaluate, stratified_split
from rids.pipeline import acceptance_corpus, build_corpus, format_run_report, replay

SCENARIO_DIR = Path(__file__).parent.parent.parent / "scenarios"
MAX_MODEL_BYTES = 1_782_579

SINGLE_ATTACK_FILES = {
    "deauth.conf": AttackLabel.Deauth,
    "rogue_ap.conf": AttackLabel.RogueAp,
    "evil_twin.conf": AttackLabel.EvilTwin,
    "krack.conf": AttackLabel.Krack,
    "beacon_flood.conf": AttackLabel.BeaconFlood,
}


class TestAcceptance(unittest.TestCase):
    """Classifier quality and end-to-end detection on the acceptance corpus."""

    @classmethod
    def setUpClass(cls):
        start = time.perf_counter()
        cls.vectors = acceptance_corpus(seed=0)
        cls.train, cls.test = stratified_split(cls.vectors, test_fraction=0.3, seed=0)
        cls.tree = fit_tree(cls.train)
        cls.setup_s = time.perf_counter() - start

    def test_corpus_size_and_balance(self):
        self.assertGreaterEqual(len(self.vectors), 50_000)
        counts = Counter(int(v.label) for v in self.vectors)
        self.assertEqual(set(counts), {int(l) for l in AttackLabel})
        self.assertLessEqual(max(counts.values()) / min(counts.values()), 1.1, counts)
        self.assertGreater(min(counts.values()), 8000)

    def test_tree_accuracy(self):
        report = evaluate(self.tree, self.test)
        self.assertGreaterEqual(report.accuracy, 0.99, f"accuracy {report.accuracy:.5f}")
        self.assertLessEqual(report.fpr, 0.005, f"FPR {report.fpr:.5f}")
        self.assertGreaterEqual(report.tpr, 0.99, f"TPR {report.tpr:.5f}")

    def test_tree_size(self):
        self.assertLessEqual(len(serialize_model(self.tree)), MAX_MODEL_BYTES)

    def test_forest_size_and_accuracy(self):
        forest = fit_forest(self.train, seed=0)
        size = len(serialize_model(forest))
        self.assertLessEqual(size, MAX_MODEL_BYTES, f"forest is {size} bytes")
        self.assertGreaterEqual(evaluate(forest, self.test).accuracy, 0.99)

    def test_training_time(self):
        # Generation, feature extraction and the tree together
        self.assertLess(self.setup_s, 300, f"Setup took {self.setup_s:.1f}s, expected < 300s")

    def test_single_attack_scenarios(self):
        for name, label in SINGLE_ATTACK_FILES.items():
            with self.subTest(scenario=name):
                report = replay(load_config(SCENARIO_DIR / name), self.tree, evaluate_model=False)
                self.assertEqual(report.alarm_classes, {label}, format_run_report(report))
                self.assertTrue(report.passed(), report.failures())

    def test_benign_scenarios(self):
        for name in ("baseline.conf", "flash_crowd.conf"):
            with self.subTest(scenario=name):
                report = replay(load_config(SCENARIO_DIR / name), self.tree, evaluate_model=False)
                self.assertEqual(report.alarms, [], format_run_report(report))

    def test_composite_scenario(self):
        report = replay(load_config(SCENARIO_DIR / "composite.conf"), self.tree)
        self.assertEqual(report.alarm_classes, set(ATTACK_LABELS), format_run_report(report))
        self.assertTrue(report.passed(), report.failures())
        self.assertGreaterEqual(report.eval_report.accuracy, 0.98)

    def test_batch_latency(self):
        # One worker so batches are timed without contending for the GIL
        report = replay(load_config(SCENARIO_DIR / "composite.conf"), self.tree, evaluate_model=False,
                        workers=1)
        self.assertGreater(len(report.batch_ms), 0)
        self.assertLess(report.median_batch_ms, 10.0,
                        f"Median batch took {report.median_batch_ms:.2f}ms, expected < 10ms")


class TestThroughput(unittest.TestCase):
    """Generation and FDS throughput."""

    def test_replay_throughput(self):
        cfg = load_config(SCENARIO_DIR / "beacon_flood.conf")
        tree = fit_tree(build_corpus([cfg]))
        start = time.perf_counter()
        report = replay(cfg, tree, evaluate_model=False)
        elapsed = time.perf_counter() - start
        frames_per_sec = report.n_frames / elapsed
        # At least 2k frames per second end to end
        self.assertGreater(frames_per_sec, 2_000, f"Throughput: {frames_per_sec:.0f} frames/sec")


if __name__ == '__main__':
    unittest.main()
