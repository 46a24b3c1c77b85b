"""
Binary and CSV encodings of Frame records.

Binary record layout (all integers little-endian):

    u64 frame_number
    u64 timestamp_us
    u8  kind code
    6s  src, 6s dst, 6s bssid
    u16 ssid length, then that many UTF-8 bytes (at most 32)
    u8  suite code
    u16 beacon_interval_tu
    u8  eapol_msg
    u8  retry (0/1)
    u16 reason_code
    u8  label code

A scenario stream file is the plain concatenation of records.
"""

import csv
import io
import struct
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Tuple, Union

from ._types import (
    AttackLabel, Frame, FrameKind, MacAddr, MAX_SSID_BYTES, SecuritySuite,
)
from .errors import CsvError, DecodeError, EncodingError

_HEAD = struct.Struct("<QQB6s6s6sH")
_TAIL = struct.Struct("<BHBBHB")

# Size of a record with an empty ssid.
MIN_RECORD_SIZE = _HEAD.size + _TAIL.size

CSV_HEADER = (
    "frame_number", "timestamp_us", "kind", "src", "dst", "bssid", "ssid",
    "suite", "beacon_interval_tu", "eapol_msg", "retry", "reason_code", "label",
)


def encode_frame(f: Frame) -> bytes:
    """Encode one frame into its fixed-layout binary record."""
    ssid = f.ssid.encode("utf-8")
    if len(ssid) > MAX_SSID_BYTES:
        raise EncodingError(f"ssid is {len(ssid)} bytes, limit is {MAX_SSID_BYTES}")
    try:
        head = _HEAD.pack(
            f.frame_number, f.timestamp_us, int(f.kind),
            f.src.octets, f.dst.octets, f.bssid.octets, len(ssid),
        )
        tail = _TAIL.pack(
            int(f.suite), f.beacon_interval_tu, f.eapol_msg,
            1 if f.retry else 0, f.reason_code, int(f.label),
        )
    except struct.error as e:
        raise EncodingError(f"field out of range: {e}") from e
    return head + ssid + tail


def _enum(enum_cls, code: int, field_name: str, offset: int):
    try:
        return enum_cls(code)
    except ValueError:
        raise DecodeError(f"unknown {field_name} code {code}", offset=offset, field=field_name) from None


def decode_frame_from(buf: bytes, offset: int = 0) -> Tuple[Frame, int]:
    """
    Decode the record starting at ``offset``.

    Returns:
        Tuple of (frame, offset just past the record)
    """
    view = memoryview(buf)
    if len(view) - offset < _HEAD.size:
        raise DecodeError("truncated record header", offset=len(view))
    number, ts, kind_code, src, dst, bssid, ssid_len = _HEAD.unpack_from(view, offset)
    kind = _enum(FrameKind, kind_code, "kind", offset + 16)
    if ssid_len > MAX_SSID_BYTES:
        raise DecodeError(f"ssid length {ssid_len} exceeds {MAX_SSID_BYTES}",
                          offset=offset + 35, field="ssid")
    pos = offset + _HEAD.size
    if len(view) - pos < ssid_len + _TAIL.size:
        raise DecodeError("truncated record body", offset=len(view))
    try:
        ssid = bytes(view[pos:pos + ssid_len]).decode("utf-8")
    except UnicodeDecodeError:
        raise DecodeError("ssid is not valid UTF-8", offset=pos, field="ssid") from None
    pos += ssid_len
    suite_code, interval, eapol_msg, retry, reason, label_code = _TAIL.unpack_from(view, pos)
    suite = _enum(SecuritySuite, suite_code, "suite", pos)
    if retry > 1:
        raise DecodeError(f"retry flag {retry} is not 0/1", offset=pos + 4, field="retry")
    label = _enum(AttackLabel, label_code, "label", pos + 7)
    frame = Frame(
        frame_number=number,
        timestamp_us=ts,
        kind=kind,
        src=MacAddr(src),
        dst=MacAddr(dst),
        bssid=MacAddr(bssid),
        ssid=ssid,
        suite=suite,
        beacon_interval_tu=interval,
        eapol_msg=eapol_msg,
        retry=bool(retry),
        reason_code=reason,
        label=label,
    )
    return frame, pos + _TAIL.size


def decode_frame(b: bytes) -> Frame:
    """Decode exactly one record; trailing bytes are an error."""
    if not b:
        raise DecodeError("empty input", offset=0)
    frame, end = decode_frame_from(b, 0)
    if end != len(b):
        raise DecodeError(f"{len(b) - end} trailing bytes after record", offset=end)
    return frame


def encode_stream(frames: Iterable[Frame]) -> bytes:
    return b"".join(encode_frame(f) for f in frames)


def iter_stream(data: bytes) -> Iterator[Frame]:
    """Yield every record of a concatenated stream."""
    offset = 0
    while offset < len(data):
        frame, offset = decode_frame_from(data, offset)
        yield frame


def write_stream(path: Union[str, Path], frames: Iterable[Frame]) -> int:
    """Write frames as a binary stream file. Returns the byte count."""
    data = encode_stream(frames)
    Path(path).write_bytes(data)
    return len(data)


def read_stream(path: Union[str, Path]) -> List[Frame]:
    return list(iter_stream(Path(path).read_bytes()))


# CSV

def _csv_fields(f: Frame) -> List[str]:
    return [
        str(f.frame_number), str(f.timestamp_us), f.kind.name, str(f.src), str(f.dst),
        str(f.bssid), f.ssid, f.suite.name, str(f.beacon_interval_tu), str(f.eapol_msg),
        "1" if f.retry else "0", str(f.reason_code), f.label.name,
    ]


def frame_to_csv_row(f: Frame) -> str:
    """Render a frame as one CSV line (no trailing newline)."""
    out = io.StringIO()
    csv.writer(out, lineterminator="").writerow(_csv_fields(f))
    return out.getvalue()


def _parse_int(value: str, column: str, line: int) -> int:
    try:
        result = int(value)
    except ValueError:
        raise CsvError(f"expected an integer, got {value!r}", line, column) from None
    if result < 0:
        raise CsvError(f"negative value {result}", line, column)
    return result


def _parse_name(enum_cls, value: str, column: str, line: int):
    try:
        return enum_cls[value]
    except KeyError:
        raise CsvError(f"unknown {column} {value!r}", line, column) from None


def _parse_mac(value: str, column: str, line: int) -> MacAddr:
    try:
        return MacAddr.parse(value)
    except ValueError:
        raise CsvError(f"bad MAC address {value!r}", line, column) from None


def _fields_to_frame(fields: List[str], line: int) -> Frame:
    if len(fields) != len(CSV_HEADER):
        raise CsvError(f"expected {len(CSV_HEADER)} columns, got {len(fields)}", line)
    row = dict(zip(CSV_HEADER, fields))
    if row["retry"] not in ("0", "1"):
        raise CsvError(f"retry must be 0 or 1, got {row['retry']!r}", line, "retry")
    if len(row["ssid"].encode("utf-8")) > MAX_SSID_BYTES:
        raise CsvError("ssid longer than 32 bytes", line, "ssid")
    return Frame(
        frame_number=_parse_int(row["frame_number"], "frame_number", line),
        timestamp_us=_parse_int(row["timestamp_us"], "timestamp_us", line),
        kind=_parse_name(FrameKind, row["kind"], "kind", line),
        src=_parse_mac(row["src"], "src", line),
        dst=_parse_mac(row["dst"], "dst", line),
        bssid=_parse_mac(row["bssid"], "bssid", line),
        ssid=row["ssid"],
        suite=_parse_name(SecuritySuite, row["suite"], "suite", line),
        beacon_interval_tu=_parse_int(row["beacon_interval_tu"], "beacon_interval_tu", line),
        eapol_msg=_parse_int(row["eapol_msg"], "eapol_msg", line),
        retry=row["retry"] == "1",
        reason_code=_parse_int(row["reason_code"], "reason_code", line),
        label=_parse_name(AttackLabel, row["label"], "label", line),
    )


def csv_row_to_frame(row: str, line: int = 1) -> Frame:
    """Parse one CSV line produced by frame_to_csv_row."""
    parsed = list(csv.reader([row]))
    if len(parsed) != 1:
        raise CsvError("row must be a single CSV record", line)
    return _fields_to_frame(parsed[0], line)


def write_csv(path: Union[str, Path], frames: Iterable[Frame]) -> int:
    """Write the header plus one row per frame. Returns the row count."""
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for f in frames:
            writer.writerow(_csv_fields(f))
            count += 1
    return count


def read_csv(path: Union[str, Path]) -> List[Frame]:
    """Read a frame CSV, checking the header line."""
    frames = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise CsvError("missing or unexpected header", 1)
        for fields in reader:
            frames.append(_fields_to_frame(fields, reader.line_num))
    return frames


def label_counts(frames: Iterable[Frame]) -> Dict[str, int]:
    """Count frames per label name, listing every label."""
    counter = Counter(f.label for f in frames)
    return {label.name: counter.get(label, 0) for label in AttackLabel}
