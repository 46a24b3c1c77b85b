"""
Flood Detection System: the per-AP first checkpoint.

Frames are counted in 1 s quanta. When a quantum closes, a capture is
triggered if the per-user mean count exceeds 10x its baseline or, failing
that, the total count exceeds 15x its baseline. A trigger opens a 500 ms
capture whose frames are handed to the controller as one CaptureBatch.
The user count of a quantum is the number of stations associated with the
AP when it closes; stations joining in a burst raise it and damp the mean
test, leaving the total test to catch the flood.

Baselines are exponential moving averages (alpha = 1/4) updated only on
quanta that did not trigger. Counts and baselines are exact Fractions, so
threshold comparisons are never subject to rounding.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Deque, Iterable, List, Optional, Set, Tuple

from ._types import Frame, FrameKind, MacAddr
from .errors import OrderingError

logger = logging.getLogger(__name__)

QUANTUM_US = 1_000_000
CAPTURE_WINDOW_US = 500_000
EMA_ALPHA = Fraction(1, 4)
MEAN_SPIKE_FACTOR = 10
TOTAL_SPIKE_FACTOR = 15

LEAVE_KINDS = (FrameKind.Deauthentication, FrameKind.Disassociation)


class TriggerDecision(Enum):
    NoCapture = "none"
    Capture = "capture"


class SpikeBranch(Enum):
    """Which threshold test flagged a quantum."""
    Mean = "mean"
    Total = "total"


@dataclass(frozen=True)
class QuantumStats:
    """Counters of one closed quantum. ``branch`` is set on every spiking quantum."""
    ap_id: MacAddr
    quantum_index: int
    diff: int
    users: int
    decision: TriggerDecision = TriggerDecision.NoCapture
    branch: Optional[SpikeBranch] = None

    @property
    def mean_diff(self) -> Optional[Fraction]:
        if self.users <= 0:
            return None
        return Fraction(self.diff, self.users)


@dataclass
class CaptureBatch:
    """Frames an AP captured in the 500 ms following a trigger."""
    ap_id: MacAddr
    trigger_quantum: int
    frames: List[Frame] = field(default_factory=list)

    @property
    def start_us(self) -> int:
        return (self.trigger_quantum + 1) * QUANTUM_US

    @property
    def end_us(self) -> int:
        return self.start_us + CAPTURE_WINDOW_US

    def span_us(self) -> int:
        if not self.frames:
            return 0
        return self.frames[-1].timestamp_us - self.frames[0].timestamp_us


@dataclass
class FdsState:
    """Detector state for one AP."""
    ap_id: MacAddr
    old_diff: Optional[Fraction] = None
    old_mean_diff: Optional[Fraction] = None
    baseline_ready: bool = False
    capture_active_until: Optional[int] = None
    quantum_index: int = 0
    diff: int = 0
    last_timestamp_us: int = 0
    open_batch: Optional[CaptureBatch] = None
    completed: Deque[CaptureBatch] = field(default_factory=deque)
    history: List[QuantumStats] = field(default_factory=list)

    @property
    def quantum_start_us(self) -> int:
        return self.quantum_index * QUANTUM_US

    @property
    def quantum_end_us(self) -> int:
        return (self.quantum_index + 1) * QUANTUM_US

    @property
    def capture_active(self) -> bool:
        return self.open_batch is not None


def _finish_capture(state: FdsState):
    batch = state.open_batch
    state.open_batch = None
    state.capture_active_until = None
    state.completed.append(batch)
    logger.debug("AP %s: capture of quantum %d complete, %d frames",
                 state.ap_id, batch.trigger_quantum, len(batch.frames))


def observe(state: FdsState, f: Frame) -> FdsState:
    """
    Count ``f`` in the current quantum and add it to an open capture.

    ``f`` must fall inside the current quantum and not precede the last
    observed frame; quanta are advanced with close_quantum.
    """
    ts = f.timestamp_us
    if ts < state.last_timestamp_us:
        raise OrderingError(
            f"AP {state.ap_id}: frame {f.frame_number} at {ts}us precedes {state.last_timestamp_us}us"
        )
    if ts >= state.quantum_end_us:
        raise OrderingError(
            f"AP {state.ap_id}: frame at {ts}us is past quantum {state.quantum_index}; close it first"
        )
    state.last_timestamp_us = ts
    state.diff += 1
    if state.open_batch is not None:
        if ts >= state.capture_active_until:
            _finish_capture(state)
        else:
            state.open_batch.frames.append(f)
    return state


def spike_decision(diff: int, users: int, old_diff: Optional[Fraction],
                   old_mean_diff: Optional[Fraction]) -> Optional[SpikeBranch]:
    """Both threshold tests: the per-user mean branch, else the total branch."""
    if users > 0 and old_mean_diff is not None:
        if Fraction(diff, users) > old_mean_diff * MEAN_SPIKE_FACTOR:
            return SpikeBranch.Mean
    if old_diff is not None and diff > old_diff * TOTAL_SPIKE_FACTOR:
        return SpikeBranch.Total
    return None


def ema(old: Optional[Fraction], value: Fraction) -> Fraction:
    if old is None:
        return Fraction(value)
    return old + EMA_ALPHA * (value - old)


def close_quantum(state: FdsState, users: int) -> Tuple[FdsState, TriggerDecision]:
    """
    Close the current quantum, decide whether to capture and open the next one.

    Args:
        state: Detector state
        users: Stations associated with the AP during the quantum

    Returns:
        Tuple of (state, decision)
    """
    if users < 0:
        raise ValueError("users cannot be negative")
    boundary = state.quantum_end_us
    if state.open_batch is not None and state.capture_active_until <= boundary:
        _finish_capture(state)

    diff = state.diff
    decision = TriggerDecision.NoCapture
    branch = None
    if state.baseline_ready:
        branch = spike_decision(diff, users, state.old_diff, state.old_mean_diff)
    if branch is not None:
        if state.open_batch is None:
            decision = TriggerDecision.Capture
            state.open_batch = CaptureBatch(state.ap_id, state.quantum_index)
            state.capture_active_until = boundary + CAPTURE_WINDOW_US
            logger.info("AP %s: flood in quantum %d (%d frames, %d users, %s test), capturing",
                        state.ap_id, state.quantum_index, diff, users, branch.value)
    else:
        state.old_diff = ema(state.old_diff, Fraction(diff))
        if users > 0:
            state.old_mean_diff = ema(state.old_mean_diff, Fraction(diff, users))
        state.baseline_ready = True

    state.history.append(QuantumStats(state.ap_id, state.quantum_index, diff, users, decision, branch))
    state.quantum_index += 1
    state.diff = 0
    return state, decision


def emit_batch(state: FdsState) -> Optional[CaptureBatch]:
    """Pop the oldest completed capture, or None."""
    if state.completed:
        return state.completed.popleft()
    return None


def _is_group(mac: MacAddr) -> bool:
    return bool(mac.octets[0] & 0x01)


class AssociationTracker:
    """
    Stations associated with one AP, followed from the frames it sees. An
    AssociationResponse from the AP adds its receiver; a unicast
    Deauthentication or Disassociation between the AP and a station removes
    that station.
    """

    def __init__(self, ap_id: MacAddr, stations: Iterable[MacAddr] = ()):
        self.ap_id = ap_id
        self.associated: Set[MacAddr] = set(stations)

    @property
    def count(self) -> int:
        return len(self.associated)

    def observe(self, f: Frame):
        if f.kind == FrameKind.AssociationResponse:
            if f.src == self.ap_id and not _is_group(f.dst):
                self.associated.add(f.dst)
        elif f.kind in LEAVE_KINDS:
            if f.src == self.ap_id and not _is_group(f.dst):
                self.associated.discard(f.dst)
            elif f.dst == self.ap_id:
                self.associated.discard(f.src)


class FloodDetector:
    """
    Drives one FdsState over a time-ordered frame stream, closing quanta as
    frame timestamps cross their boundaries.

    With ``stations`` the user count of each quantum is the number of
    stations associated when it closes, starting from ``stations``.
    Otherwise every quantum uses the fixed ``users``.
    """

    def __init__(self, ap_id: MacAddr, users: int = 0, stations: Optional[Iterable[MacAddr]] = None):
        self.state = FdsState(ap_id)
        self.tracker = AssociationTracker(ap_id, stations) if stations is not None else None
        self._fixed_users = users

    @property
    def users(self) -> int:
        if self.tracker is not None:
            return self.tracker.count
        return self._fixed_users

    @property
    def ap_id(self) -> MacAddr:
        return self.state.ap_id

    @property
    def history(self) -> List[QuantumStats]:
        return self.state.history

    def triggers(self) -> List[int]:
        return [q.quantum_index for q in self.state.history if q.decision == TriggerDecision.Capture]

    def advance_to(self, timestamp_us: int):
        """Close every quantum that ends at or before ``timestamp_us``."""
        while timestamp_us >= self.state.quantum_end_us:
            close_quantum(self.state, self.users)

    def _drain(self) -> List[CaptureBatch]:
        batches = []
        batch = emit_batch(self.state)
        while batch is not None:
            batches.append(batch)
            batch = emit_batch(self.state)
        return batches

    def feed(self, f: Frame) -> List[CaptureBatch]:
        """Observe one frame; returns any batches completed so far."""
        if f.timestamp_us < self.state.last_timestamp_us:
            raise OrderingError(
                f"AP {self.ap_id}: frame {f.frame_number} at {f.timestamp_us}us is out of order"
            )
        self.advance_to(f.timestamp_us)
        observe(self.state, f)
        if self.tracker is not None:
            self.tracker.observe(f)
        return self._drain()

    def flush(self, end_us: Optional[int] = None) -> List[CaptureBatch]:
        """
        End of stream: close quanta up to ``end_us`` (if given) and complete
        any capture still open.
        """
        if end_us is not None:
            self.advance_to(end_us)
        if self.state.open_batch is not None:
            _finish_capture(self.state)
        return self._drain()

    def run(self, frames: Iterable[Frame], end_us: Optional[int] = None) -> List[CaptureBatch]:
        """Feed a whole stream and flush it."""
        batches = []
        for f in frames:
            batches.extend(self.feed(f))
        batches.extend(self.flush(end_us))
        return batches
