"""
Per-frame feature vectors with window context.

Every frame of a window becomes one 16-element vector: its own fields plus
aggregates computed over the whole window, and flags comparing it with the
profile of the AP that heard it. Feature order is fixed by FEATURE_NAMES.
"""

import csv
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, NamedTuple, Set, Tuple, Union

import numpy as np

from ._types import (
    ApProfile, AttackLabel, BEACON_KINDS, Frame, FrameKind, MacAddr, RSNE_KINDS,
)
from .errors import CsvError
from .handshake import ValidationResult, validate_rsne

DEFAULT_WINDOW_US = 500_000
MIN_RATE_SPAN_US = 500_000


class FeatureVector(NamedTuple):
    kind: float
    eapol_msg: float
    retry: float
    reason_code: float
    suite: float
    beacon_interval_tu: float
    inter_arrival_us: float
    window_deauth_count: float
    window_beacon_count: float
    window_eapol3_dup_count: float
    window_distinct_src_count: float
    window_frame_rate_fps: float
    window_mean_inter_arrival_us: float
    suite_mismatch_flag: float
    bssid_clone_flag: float
    beacon_interval_deviation: float


class LabeledVector(NamedTuple):
    features: FeatureVector
    label: AttackLabel


FEATURE_NAMES: Tuple[str, ...] = FeatureVector._fields
N_FEATURES = len(FEATURE_NAMES)


class WindowAggregates(NamedTuple):
    deauth_count: int
    beacon_count: int
    eapol3_dup_count: int
    distinct_src_count: int
    frame_rate_fps: float
    mean_inter_arrival_us: float
    ssid_bssids: Dict[str, Set[MacAddr]]


def window_aggregates(frames: List[Frame]) -> WindowAggregates:
    """Window-level counts; independent of the order of the frames."""
    n = len(frames)
    deauths = 0
    beacons = 0
    msg3: Counter = Counter()
    sources = set()
    ssid_bssids: Dict[str, Set[MacAddr]] = {}
    for f in frames:
        if f.kind == FrameKind.Deauthentication:
            deauths += 1
        elif f.kind == FrameKind.Beacon:
            beacons += 1
        elif f.kind == FrameKind.Eapol and f.eapol_msg == 3:
            msg3[(f.bssid, f.dst)] += 1
        sources.add(f.src)
        if f.ssid and f.kind in BEACON_KINDS:
            ssid_bssids.setdefault(f.ssid, set()).add(f.bssid)

    if n:
        first = min(f.timestamp_us for f in frames)
        last = max(f.timestamp_us for f in frames)
        span = last - first
    else:
        span = 0
    rate = n / (max(span, MIN_RATE_SPAN_US) / 1e6)
    mean_gap = span / (n - 1) if n > 1 else 0.0
    return WindowAggregates(
        deauth_count=deauths,
        beacon_count=beacons,
        eapol3_dup_count=sum(c - 1 for c in msg3.values() if c > 1),
        distinct_src_count=len(sources),
        frame_rate_fps=rate,
        mean_inter_arrival_us=mean_gap,
        ssid_bssids=ssid_bssids,
    )


def _frame_vector(f: Frame, gap_us: int, agg: WindowAggregates, ap: ApProfile) -> FeatureVector:
    mismatch = 0.0
    if f.kind in RSNE_KINDS and validate_rsne(f.suite, ap.suite) == ValidationResult.Mismatch:
        mismatch = 1.0
    clone = 0.0
    if f.bssid != ap.bssid and f.ssid == ap.ssid and len(agg.ssid_bssids.get(ap.ssid, ())) >= 2:
        clone = 1.0
    deviation = 0.0
    if f.kind in BEACON_KINDS:
        deviation = abs(f.beacon_interval_tu - ap.beacon_interval_tu) / ap.beacon_interval_tu
    return FeatureVector(
        kind=float(f.kind),
        eapol_msg=float(f.eapol_msg),
        retry=1.0 if f.retry else 0.0,
        reason_code=float(f.reason_code),
        suite=float(f.suite),
        beacon_interval_tu=float(f.beacon_interval_tu),
        inter_arrival_us=float(gap_us),
        window_deauth_count=float(agg.deauth_count),
        window_beacon_count=float(agg.beacon_count),
        window_eapol3_dup_count=float(agg.eapol3_dup_count),
        window_distinct_src_count=float(agg.distinct_src_count),
        window_frame_rate_fps=float(agg.frame_rate_fps),
        window_mean_inter_arrival_us=float(agg.mean_inter_arrival_us),
        suite_mismatch_flag=mismatch,
        bssid_clone_flag=clone,
        beacon_interval_deviation=float(deviation),
    )


def extract_window(frames: List[Frame], ap: ApProfile) -> List[LabeledVector]:
    """
    Convert one window of frames heard by ``ap`` into labeled vectors.

    Args:
        frames: Time-ordered frames of the window
        ap: Profile of the AP the frames were captured at

    Returns:
        One LabeledVector per frame, in input order
    """
    if not frames:
        return []
    agg = window_aggregates(frames)
    out = []
    prev_ts = frames[0].timestamp_us
    for f in frames:
        out.append(LabeledVector(_frame_vector(f, f.timestamp_us - prev_ts, agg, ap), f.label))
        prev_ts = f.timestamp_us
    return out


def windows(frames: Iterable[Frame], window_us: int = DEFAULT_WINDOW_US) -> Iterator[List[Frame]]:
    """Split a time-ordered stream into aligned windows [k*window_us, (k+1)*window_us)."""
    if window_us < 1:
        raise ValueError("window_us must be positive")
    current: List[Frame] = []
    current_idx = None
    for f in frames:
        idx = f.timestamp_us // window_us
        if idx != current_idx and current:
            yield current
            current = []
        current_idx = idx
        current.append(f)
    if current:
        yield current


def extract_stream(frames: Iterable[Frame], ap: ApProfile,
                   window_us: int = DEFAULT_WINDOW_US) -> List[LabeledVector]:
    """extract_window over every aligned window of a stream."""
    out = []
    for window in windows(frames, window_us):
        out.extend(extract_window(window, ap))
    return out


def vectors_to_matrix(vectors: List[LabeledVector]) -> Tuple[np.ndarray, np.ndarray]:
    """Stack vectors into an (n, 16) float64 matrix and an int64 label array."""
    if not vectors:
        return np.zeros((0, N_FEATURES)), np.zeros(0, dtype=np.int64)
    X = np.array([v.features for v in vectors], dtype=np.float64)
    y = np.array([int(v.label) for v in vectors], dtype=np.int64)
    return X, y


def matrix_of(features: Iterable[FeatureVector]) -> np.ndarray:
    rows = [tuple(v) for v in features]
    if not rows:
        return np.zeros((0, N_FEATURES))
    return np.array(rows, dtype=np.float64)


def write_feature_csv(path: Union[str, Path], vectors: Iterable[LabeledVector]) -> int:
    """Write a header (16 names + label) and one row per vector. Returns the row count."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FEATURE_NAMES + ("label",))
        for v in vectors:
            writer.writerow([repr(float(x)) for x in v.features] + [v.label.name])
            count += 1
    return count


def read_feature_csv(path: Union[str, Path]) -> List[LabeledVector]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FEATURE_NAMES + ("label",):
            raise CsvError("missing or unexpected feature header", 1)
        for row in reader:
            line = reader.line_num
            if len(row) != N_FEATURES + 1:
                raise CsvError(f"expected {N_FEATURES + 1} columns, got {len(row)}", line)
            try:
                values = [float(x) for x in row[:N_FEATURES]]
            except ValueError:
                raise CsvError("non-numeric feature value", line) from None
            try:
                label = AttackLabel[row[-1]]
            except KeyError:
                raise CsvError(f"unknown label {row[-1]!r}", line, "label") from None
            out.append(LabeledVector(FeatureVector(*values), label))
    return out
