"""
The controller: second checkpoint of the detection system.

It classifies every CaptureBatch an AP forwards, raises an Alarm when an
attack class wins enough of the batch's per-frame votes, tries to name the
transmitting device, and distributes block instructions to every AP.
"""

import logging
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._types import ApProfile, AttackLabel, BlockNotification, MacAddr
from .errors import RidsError
from .features import extract_window, matrix_of
from .fds import CaptureBatch

logger = logging.getLogger(__name__)

VOTE_THRESHOLD = 0.2
DEFAULT_WORKERS = 4
UNKNOWN_ATTACKER = "unknown"


@dataclass(frozen=True)
class Alarm:
    """A network-wide intrusion alarm raised for one batch."""
    ap_id: MacAddr
    attack: AttackLabel
    confidence: float
    attacker: Optional[MacAddr]
    raised_at: int
    trigger_quantum: int = 0

    def __post_init__(self):
        if self.attack == AttackLabel.Normal:
            raise ValueError("an alarm cannot carry the Normal class")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside (0, 1]")

    def log_line(self) -> str:
        attacker = str(self.attacker) if self.attacker is not None else UNKNOWN_ATTACKER
        return f"{self.raised_at}\t{self.ap_id}\t{self.attack.name}\t{self.confidence:.4f}\t{attacker}"


class BlockList:
    """Blocked addresses with the time they were first blocked. Thread-safe."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: Dict[MacAddr, int] = {}

    def add(self, mac: MacAddr, blocked_at_us: int) -> bool:
        """Insert ``mac``; returns False if it was already blocked."""
        with self._lock:
            if mac in self._entries:
                return False
            self._entries[mac] = blocked_at_us
            return True

    def __contains__(self, mac: MacAddr) -> bool:
        with self._lock:
            return mac in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def entries(self) -> List[Tuple[MacAddr, int]]:
        """(mac, blocked_at_us) in insertion order."""
        with self._lock:
            return list(self._entries.items())

    def snapshot(self) -> FrozenSet[MacAddr]:
        with self._lock:
            return frozenset(self._entries)


def broadcast_block(block_list: BlockList, mac: MacAddr, aps: Iterable[MacAddr],
                    blocked_at_us: int = 0,
                    reason: AttackLabel = AttackLabel.Normal) -> Tuple[BlockList, List[BlockNotification]]:
    """
    Block ``mac`` and produce one notification per registered AP. Inserting
    an address that is already blocked leaves the list unchanged.
    """
    if block_list.add(mac, blocked_at_us):
        logger.info("blocked %s (%s)", mac, reason.name)
    notifications = [BlockNotification(ap, mac, blocked_at_us, reason) for ap in aps]
    return block_list, notifications


def vote(predictions: Sequence[int], threshold: float = VOTE_THRESHOLD) -> Optional[Tuple[AttackLabel, float]]:
    """
    The most frequent non-Normal prediction and its share of all frames, if
    that share exceeds ``threshold``. Equal counts go to the lower class code.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    if pred.size == 0:
        return None
    counts = np.bincount(pred, minlength=len(AttackLabel))
    counts[int(AttackLabel.Normal)] = 0
    if counts.max() == 0:
        return None
    winner = int(np.argmax(counts))
    share = counts[winner] / pred.size
    if share <= threshold:
        return None
    return AttackLabel(winner), float(share)


def attribute_attacker(batch: CaptureBatch, predicted: AttackLabel, predictions: Sequence[int],
                       known_macs: Iterable[MacAddr] = ()) -> Optional[MacAddr]:
    """
    Most frequent source address among frames predicted as ``predicted``,
    skipping addresses of known APs and stations (a spoofed source). None
    means the attacker is unknown.
    """
    known = set(known_macs)
    sources = Counter(
        f.src for f, p in zip(batch.frames, predictions)
        if p == int(predicted) and f.src not in known and f.src != MacAddr.broadcast()
    )
    if not sources:
        return None
    return sources.most_common(1)[0][0]


def classify_batch(batch: CaptureBatch, model, ap: ApProfile) -> np.ndarray:
    """Per-frame class predictions for a batch."""
    if not batch.frames:
        return np.zeros(0, dtype=np.int64)
    vectors = extract_window(batch.frames, ap)
    return model.predict_many(matrix_of(v.features for v in vectors))


def handle_batch(batch: CaptureBatch, model, ap: ApProfile, known_macs: Iterable[MacAddr] = (),
                 threshold: float = VOTE_THRESHOLD) -> Optional[Alarm]:
    """
    Classify a batch and decide whether it is an intrusion.

    Args:
        batch: Frames captured by one AP
        model: Trained classifier
        ap: Profile of the capturing AP
        known_macs: Addresses of legitimate APs and stations
        threshold: Minimum vote share of the winning attack class

    Returns:
        The Alarm, or None when there is no intrusion
    """
    predictions = classify_batch(batch, model, ap)
    decision = vote(predictions, threshold)
    if decision is None:
        return None
    label, share = decision
    attacker = attribute_attacker(batch, label, predictions, known_macs)
    return Alarm(
        ap_id=batch.ap_id,
        attack=label,
        confidence=share,
        attacker=attacker,
        raised_at=batch.end_us,
        trigger_quantum=batch.trigger_quantum,
    )


class AlarmLog:
    """Append-only alarm file, one tab-separated alarm per line."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, alarm: Alarm):
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(alarm.log_line() + "\n")

    def read(self) -> List[Alarm]:
        if not self.path.exists():
            return []
        alarms = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            raised_at, ap, attack, confidence, attacker = line.split("\t")
            alarms.append(Alarm(
                ap_id=MacAddr.parse(ap),
                attack=AttackLabel[attack],
                confidence=float(confidence),
                attacker=None if attacker == UNKNOWN_ATTACKER else MacAddr.parse(attacker),
                raised_at=int(raised_at),
            ))
        return alarms


class Controller:
    """
    Network controller holding the model, the registered APs and stations,
    the block list and the alarm history. Batches from different APs are
    classified independently on a thread pool.
    """

    def __init__(self, model, aps: Iterable[ApProfile] = (), stations: Iterable[MacAddr] = (),
                 threshold: float = VOTE_THRESHOLD, alarm_log: Optional[Union[str, Path]] = None,
                 workers: int = DEFAULT_WORKERS, auto_block: bool = True):
        self.model = model
        self.threshold = threshold
        self.auto_block = auto_block
        self.aps: Dict[MacAddr, ApProfile] = {}
        self.known_macs = set()
        self.block_list = BlockList()
        self.alarms: List[Alarm] = []
        self.notifications: List[BlockNotification] = []
        self.batch_times_ms: List[float] = []
        self.alarm_log = AlarmLog(alarm_log) if alarm_log is not None else None
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="rids-controller")
        for ap in aps:
            self.register_ap(ap)
        self.known_macs.update(stations)

    def register_ap(self, ap: ApProfile):
        self.aps[ap.bssid] = ap
        self.known_macs.add(ap.bssid)

    def register_station(self, mac: MacAddr):
        self.known_macs.add(mac)

    def process(self, batch: CaptureBatch) -> Optional[Alarm]:
        ap = self.aps.get(batch.ap_id)
        if ap is None:
            raise RidsError(f"batch from unregistered AP {batch.ap_id}")
        start = time.perf_counter()
        alarm = handle_batch(batch, self.model, ap, self.known_macs, self.threshold)
        elapsed = (time.perf_counter() - start) * 1000
        with self._lock:
            self.batch_times_ms.append(elapsed)
        if alarm is None:
            logger.debug("AP %s quantum %d: no intrusion (%d frames)",
                         batch.ap_id, batch.trigger_quantum, len(batch.frames))
            return None
        self._raise(alarm)
        return alarm

    def _raise(self, alarm: Alarm):
        logger.warning("alarm: %s at AP %s (confidence %.3f, attacker %s)", alarm.attack.name,
                       alarm.ap_id, alarm.confidence, alarm.attacker or UNKNOWN_ATTACKER)
        if self.alarm_log is not None:
            self.alarm_log.append(alarm)
        with self._lock:
            self.alarms.append(alarm)
            if self.auto_block and alarm.attacker is not None and alarm.attacker not in self.block_list:
                _, notes = broadcast_block(self.block_list, alarm.attacker, list(self.aps),
                                           alarm.raised_at, alarm.attack)
                self.notifications.extend(notes)

    def process_many(self, batches: Sequence[CaptureBatch]) -> List[Optional[Alarm]]:
        """Classify batches on the worker pool; results keep the input order."""
        return list(self._pool.map(self.process, batches))

    def close(self):
        self._pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
