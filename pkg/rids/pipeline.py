"""
End-to-end plumbing: per-AP views of a scenario, training corpora, dataset
directories, and the replay of a scenario through FDS, the wire and the
controller.
"""

import csv
import json
import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from ._types import ApProfile, AttackLabel, Frame, FrameKind, MacAddr
from .attacks import (
    ATTACK_LABELS, FlashCrowdSpec, LAB_AP, ScenarioConfig, gen_scenario, lab_scenario,
)
from .config import format_config, load_config
from .controller import Alarm, Controller, VOTE_THRESHOLD
from .errors import ConfigError, RidsError
from .evaluation import EvalReport, balance_by_label, evaluate
from .fds import (
    CaptureBatch, EMA_ALPHA, FloodDetector, MEAN_SPIKE_FACTOR, QUANTUM_US, TOTAL_SPIKE_FACTOR,
    TriggerDecision,
)
from .features import DEFAULT_WINDOW_US, LabeledVector, extract_stream
from .frames import label_counts, read_stream, write_csv, write_stream
from .wire import (
    InProcessChannel, MessageKind, batch_message, block_message, decode_batch, decode_block,
)

try:
    from tqdm import tqdm
    HAS_TQDM = True
except ImportError:
    HAS_TQDM = False

logger = logging.getLogger(__name__)

# Quanta allowed between attack onset and the first capture.
MAX_TRIGGER_LATENCY = 2

STREAM_FILE = "frames.bin"
CSV_FILE = "frames.csv"
CONFIG_FILE = "scenario.conf"
MANIFEST_FILE = "manifest.json"


def ap_view(frames: Iterable[Frame], ap: ApProfile, station_macs: Iterable[MacAddr] = ()) -> List[Frame]:
    """
    Frames within range of ``ap``'s receiver: anything in its BSS, anything
    advertising or requesting its ssid, and anything to or from it or one of
    its stations.
    """
    local = set(station_macs)
    local.add(ap.bssid)
    return [
        f for f in frames
        if f.bssid == ap.bssid
        or (ap.ssid and f.ssid == ap.ssid)
        or f.src in local
        or f.dst in local
    ]


def scenario_views(cfg: ScenarioConfig, frames: List[Frame]) -> List[Tuple[ApProfile, List[Frame]]]:
    return [(ap, ap_view(frames, ap, cfg.stations_of(ap))) for ap in cfg.aps]


def scenario_vectors(cfg: ScenarioConfig, frames: Optional[List[Frame]] = None,
                     window_us: int = DEFAULT_WINDOW_US) -> List[LabeledVector]:
    """Labeled vectors of every AP's view of a scenario, window by window."""
    if frames is None:
        frames = gen_scenario(cfg)
    vectors = []
    for ap, view in scenario_views(cfg, frames):
        vectors.extend(extract_stream(view, ap, window_us))
    return vectors


def build_corpus(configs: Sequence[ScenarioConfig], window_us: int = DEFAULT_WINDOW_US,
                 progress: bool = False) -> List[LabeledVector]:
    """Generate every scenario and concatenate their labeled vectors."""
    iterator = configs
    if progress and HAS_TQDM:
        iterator = tqdm(configs, desc="Generating scenarios", unit="scenario")
    vectors = []
    for cfg in iterator:
        vectors.extend(scenario_vectors(cfg, window_us=window_us))
    logger.info("corpus: %d vectors from %d scenarios", len(vectors), len(configs))
    return vectors


def acceptance_configs(seed: int = 0) -> List[ScenarioConfig]:
    """
    Scenarios of the acceptance corpus: each attack alone for 9 s at the
    default rate, a busier attack-free network, and a flash crowd. Every
    attack label comes out near 9,000 frames; Normal is about twice that
    until acceptance_corpus balances it.
    """
    configs = [
        lab_scenario([label], seed=seed + i, attack_len_s=9.0, name=f"acceptance-{label.name}")
        for i, label in enumerate(ATTACK_LABELS)
    ]
    configs.append(lab_scenario(
        [], seed=seed + 100, n_stations=8, baseline_rate_fps=30.0, attack_start_s=20.0, tail_s=10.0,
        reconnect_interval_s=5.0, name="acceptance-busy",
    ))
    configs.append(lab_scenario(
        [], seed=seed + 200, flash_crowds=[FlashCrowdSpec(LAB_AP.bssid, 5.0, 150, 0.8)],
        attack_start_s=8.0, tail_s=6.0, name="acceptance-flash-crowd",
    ))
    return configs


def acceptance_corpus(seed: int = 0, window_us: int = DEFAULT_WINDOW_US,
                      progress: bool = False) -> List[LabeledVector]:
    """
    The acceptance scenarios as one corpus, every label downsampled to the
    rarest label's count (more than 50,000 vectors in all).
    """
    vectors = balance_by_label(build_corpus(acceptance_configs(seed), window_us, progress), seed=seed)
    logger.info("balanced corpus: %d vectors, %d labels", len(vectors), len({v.label for v in vectors}))
    return vectors


# Dataset directories

def write_dataset(cfg: ScenarioConfig, out_dir: Union[str, Path]) -> dict:
    """
    Generate ``cfg`` into ``out_dir``: binary stream, CSV, the scenario file
    and a JSON manifest with per-label counts. Returns the manifest.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames = gen_scenario(cfg)
    n_bytes = write_stream(out / STREAM_FILE, frames)
    write_csv(out / CSV_FILE, frames)
    (out / CONFIG_FILE).write_text(format_config(cfg), encoding="utf-8")
    manifest = {
        "name": cfg.name,
        "seed": cfg.seed,
        "duration_s": cfg.duration_s,
        "n_frames": len(frames),
        "stream_bytes": n_bytes,
        "label_counts": label_counts(frames),
        "attacks": [
            {"label": a.label.name, "start_s": a.start_s, "end_s": a.end_s, "rate_fps": a.rate}
            for a in cfg.attacks
        ],
        "files": [STREAM_FILE, CSV_FILE, CONFIG_FILE],
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote dataset %s: %d frames", out, len(frames))
    return manifest


def load_dataset(path: Union[str, Path]) -> Tuple[ScenarioConfig, List[Frame]]:
    """Read a directory written by write_dataset."""
    path = Path(path)
    if not (path / CONFIG_FILE).exists() or not (path / STREAM_FILE).exists():
        raise ConfigError(f"{path} is not a dataset directory (needs {CONFIG_FILE} and {STREAM_FILE})")
    return load_config(path / CONFIG_FILE), read_stream(path / STREAM_FILE)


def dataset_vectors(paths: Sequence[Union[str, Path]]) -> List[LabeledVector]:
    vectors = []
    for p in paths:
        cfg, frames = load_dataset(p)
        vectors.extend(scenario_vectors(cfg, frames))
    return vectors


# FDS oracle

def users_per_quantum(frames: Iterable[Frame], ap_id: MacAddr, stations: Iterable[MacAddr],
                      n_quanta: int) -> List[int]:
    """Stations associated with ``ap_id`` at the end of each quantum."""
    members = set(stations)
    counts = [0] * n_quanta
    q = 0
    for f in frames:
        while q < n_quanta and f.timestamp_us >= (q + 1) * QUANTUM_US:
            counts[q] = len(members)
            q += 1
        if q == n_quanta:
            break
        unicast = not f.dst.octets[0] & 0x01
        if f.kind == FrameKind.AssociationResponse and f.src == ap_id and unicast:
            members.add(f.dst)
        elif f.kind in (FrameKind.Deauthentication, FrameKind.Disassociation):
            if f.src == ap_id and unicast:
                members.discard(f.dst)
            elif f.dst == ap_id:
                members.discard(f.src)
    for rest in range(q, n_quanta):
        counts[rest] = len(members)
    return counts


def fds_oracle(frames: Iterable[Frame], users: Union[int, Sequence[int]], n_quanta: int) -> List[bool]:
    """
    Trigger decisions recomputed by bucketing frames on timestamp // 1 s and
    applying both threshold tests quantum by quantum. ``users`` is either a
    fixed count or one count per quantum.
    """
    per_quantum = [users] * n_quanta if isinstance(users, int) else list(users)
    counts = [0] * n_quanta
    for f in frames:
        q = f.timestamp_us // QUANTUM_US
        if q < n_quanta:
            counts[q] += 1
    decisions = []
    old_diff: Optional[Fraction] = None
    old_mean: Optional[Fraction] = None
    for q, diff in enumerate(counts):
        n_users = per_quantum[q]
        triggered = False
        if q > 0:
            if n_users > 0 and old_mean is not None and Fraction(diff, n_users) > old_mean * MEAN_SPIKE_FACTOR:
                triggered = True
            elif old_diff is not None and diff > old_diff * TOTAL_SPIKE_FACTOR:
                triggered = True
        decisions.append(triggered)
        if triggered:
            continue
        old_diff = Fraction(diff) if old_diff is None else old_diff + EMA_ALPHA * (diff - old_diff)
        if n_users > 0:
            mean = Fraction(diff, n_users)
            old_mean = mean if old_mean is None else old_mean + EMA_ALPHA * (mean - old_mean)
    return decisions


# Replay

@dataclass
class RunReport:
    """Outcome of replaying one scenario through the full pipeline."""
    scenario: str
    n_frames: int
    expected: List[AttackLabel]
    alarms: List[Alarm]
    triggers: Dict[str, List[int]]
    latency_quanta: Dict[str, Optional[int]]
    oracle_ok: bool
    eval_report: Optional[EvalReport] = None
    n_batches: int = 0
    n_notifications: int = 0
    wire_bytes: int = 0
    timings_ms: Dict[str, float] = field(default_factory=dict)
    batch_ms: List[float] = field(default_factory=list)

    @property
    def alarm_classes(self) -> Set[AttackLabel]:
        return {a.attack for a in self.alarms}

    @property
    def alarms_correct(self) -> bool:
        return self.alarm_classes == set(self.expected)

    @property
    def latency_ok(self) -> bool:
        return all(q is not None and q <= MAX_TRIGGER_LATENCY for q in self.latency_quanta.values())

    @property
    def median_batch_ms(self) -> float:
        return statistics.median(self.batch_ms) if self.batch_ms else 0.0

    def failures(self) -> List[str]:
        problems = []
        if not self.alarms_correct:
            got = ", ".join(sorted(c.name for c in self.alarm_classes)) or "none"
            want = ", ".join(sorted(c.name for c in set(self.expected))) or "none"
            problems.append(f"alarm classes {{{got}}} != expected {{{want}}}")
        for label, q in self.latency_quanta.items():
            if q is None:
                problems.append(f"{label}: no capture triggered")
            elif q > MAX_TRIGGER_LATENCY:
                problems.append(f"{label}: capture {q} quanta after onset")
        if not self.oracle_ok:
            problems.append("FDS decisions disagree with the bucketing oracle")
        return problems

    def passed(self) -> bool:
        return not self.failures()


def _run_detector(ap: ApProfile, view: List[Frame], stations: List[MacAddr],
                  end_us: int) -> Tuple[FloodDetector, List[CaptureBatch]]:
    detector = FloodDetector(ap.bssid, stations=stations)
    batches = detector.run(view, end_us=end_us)
    return detector, batches


def replay(cfg: ScenarioConfig, model, threshold: float = VOTE_THRESHOLD,
           alarm_log: Optional[Union[str, Path]] = None, evaluate_model: bool = True,
           workers: int = 4) -> RunReport:
    """
    Stream a scenario through one FloodDetector per AP, ship every capture
    over the wire to a Controller, and collect alarms and timings.
    """
    t0 = time.perf_counter()
    frames = gen_scenario(cfg)
    t_gen = time.perf_counter()

    views = scenario_views(cfg, frames)
    uplink = InProcessChannel()
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(views)))) as pool:
        results = list(pool.map(
            lambda item: _run_detector(item[0], item[1], cfg.stations_of(item[0]), cfg.duration_us),
            views,
        ))
    for _, batches in results:
        for batch in batches:
            uplink.send(batch_message(batch))
    t_fds = time.perf_counter()

    received = []
    for m in uplink.drain():
        if m.kind != MessageKind.CaptureBatchMsg:
            raise RidsError(f"unexpected {m.kind.name} message on the uplink")
        received.append(decode_batch(m.payload))

    downlink = InProcessChannel()
    stations = [mac for mac, _ in cfg.stations]
    with Controller(model, cfg.aps, stations, threshold=threshold, alarm_log=alarm_log,
                    workers=workers) as controller:
        outcomes = controller.process_many(received)
        for note in controller.notifications:
            downlink.send(block_message(note))
        batch_ms = list(controller.batch_times_ms)
    notes = [decode_block(m.payload) for m in downlink.drain()]
    alarms = [a for a in outcomes if a is not None]
    t_ctrl = time.perf_counter()

    triggers = {}
    oracle_ok = True
    detectors = {}
    for (ap, view), (detector, _) in zip(views, results):
        detectors[ap.bssid] = detector
        triggers[str(ap.bssid)] = detector.triggers()
        decided = [q.decision == TriggerDecision.Capture for q in detector.history]
        n_quanta = len(detector.history)
        users = users_per_quantum(view, ap.bssid, cfg.stations_of(ap), n_quanta)
        if decided != fds_oracle(view, users, n_quanta):
            oracle_ok = False
    for alarm in alarms:
        if alarm.trigger_quantum not in detectors[alarm.ap_id].triggers():
            oracle_ok = False

    latency = {}
    for i, spec in enumerate(cfg.attacks):
        onset = spec.start_us // QUANTUM_US
        fired = [q for q in detectors[spec.target_ap].triggers() if q >= onset]
        latency[f"{i}:{spec.label.name}"] = (fired[0] - onset) if fired else None

    eval_report = None
    if evaluate_model:
        vectors = scenario_vectors(cfg, frames)
        if vectors:
            eval_report = evaluate(model, vectors)
    t_end = time.perf_counter()

    report = RunReport(
        scenario=cfg.name,
        n_frames=len(frames),
        expected=[spec.label for spec in cfg.attacks],
        alarms=alarms,
        triggers=triggers,
        latency_quanta=latency,
        oracle_ok=oracle_ok,
        eval_report=eval_report,
        n_batches=len(received),
        n_notifications=len(notes),
        wire_bytes=uplink.bytes_sent + downlink.bytes_sent,
        timings_ms={
            "generate": (t_gen - t0) * 1000,
            "fds": (t_fds - t_gen) * 1000,
            "controller": (t_ctrl - t_fds) * 1000,
            "total": (t_end - t0) * 1000,
        },
        batch_ms=batch_ms,
    )
    logger.info("replay %s: %d batches, %d alarms", cfg.name, report.n_batches, len(alarms))
    return report


def format_run_report(report: RunReport) -> str:
    lines = [
        f"Scenario: {report.scenario} ({report.n_frames} frames)",
        f"Expected: {', '.join(l.name for l in report.expected) or 'no attack'}",
        f"Captures: {report.n_batches}, wire bytes: {report.wire_bytes}",
    ]
    for ap, quanta in report.triggers.items():
        lines.append(f"  AP {ap}: triggers in quanta {quanta if quanta else 'none'}")
    for name, q in report.latency_quanta.items():
        lines.append(f"  latency {name}: {'no capture' if q is None else f'{q} quanta'}")
    lines.append(f"Alarms: {len(report.alarms)}")
    for a in report.alarms:
        attacker = str(a.attacker) if a.attacker is not None else "unknown"
        lines.append(f"  t={a.raised_at / 1e6:.3f}s AP {a.ap_id} {a.attack.name} "
                     f"confidence {a.confidence:.3f} attacker {attacker}")
    lines.append(f"Block notifications: {report.n_notifications}")
    if report.eval_report is not None:
        e = report.eval_report
        lines.append(f"Classifier on scenario: accuracy {e.accuracy:.5f}, FPR {e.fpr:.5f}, TPR {e.tpr:.5f}")
    lines.append("Timings: " + ", ".join(f"{k} {v:.1f} ms" for k, v in report.timings_ms.items()))
    lines.append(f"Median batch classification: {report.median_batch_ms:.2f} ms")
    failures = report.failures()
    lines.append("Result: PASS" if not failures else "Result: FAIL")
    lines.extend(f"  {problem}" for problem in failures)
    return "\n".join(lines) + "\n"


def write_run_reports_csv(path: Union[str, Path], reports: Sequence[RunReport]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "scenario", "n_frames", "expected", "alarm_classes", "alarms_correct", "max_latency_quanta",
            "n_batches", "n_alarms", "oracle_ok", "accuracy", "fpr", "tpr", "median_batch_ms", "total_ms",
        ])
        for r in reports:
            latencies = [q for q in r.latency_quanta.values() if q is not None]
            e = r.eval_report
            writer.writerow([
                r.scenario, r.n_frames,
                " ".join(l.name for l in r.expected),
                " ".join(sorted(c.name for c in r.alarm_classes)),
                int(r.alarms_correct),
                max(latencies) if latencies else "",
                r.n_batches, len(r.alarms), int(r.oracle_ok),
                f"{e.accuracy:.6f}" if e else "", f"{e.fpr:.6f}" if e else "", f"{e.tpr:.6f}" if e else "",
                f"{r.median_batch_ms:.3f}", f"{r.timings_ms.get('total', 0.0):.1f}",
            ])
