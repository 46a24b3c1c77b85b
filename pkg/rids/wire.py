"""
AP-to-controller transport framing.

Every message is laid out as

    [magic "RWIR"][kind u8][length u32][payload][crc32 u32]

with little-endian integers and an IEEE CRC32 over the payload only. An
empty-payload Ack therefore takes 13 bytes.
"""

import logging
import queue
import struct
import threading
import zlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, List, Optional, Protocol, Tuple

from ._types import AttackLabel, BlockNotification, MacAddr
from .errors import DecodeError, NeedMoreData, ProtocolError, CorruptionError
from .fds import CaptureBatch
from .frames import decode_frame_from, encode_frame

logger = logging.getLogger(__name__)

MAGIC = b"RWIR"
MAX_PAYLOAD = 16 * 1024 * 1024

_HEADER = struct.Struct("<4sBI")
_CRC = struct.Struct("<I")
HEADER_SIZE = _HEADER.size
OVERHEAD = _HEADER.size + _CRC.size

_BATCH_HEAD = struct.Struct("<6sQI")
_BLOCK = struct.Struct("<6s6sQB")


class MessageKind(IntEnum):
    CaptureBatchMsg = 1
    BlockNotify = 2
    Ack = 3


class Reader(Protocol):
    """Anything with a blocking ``read(size)``."""

    def read(self, size: int) -> bytes: ...


@dataclass(frozen=True)
class WireMessage:
    kind: MessageKind
    payload: bytes = b""


def frame_message(m: WireMessage) -> bytes:
    """Encode one message with its header and checksum."""
    if len(m.payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(m.payload)} bytes exceeds {MAX_PAYLOAD}")
    return _HEADER.pack(MAGIC, int(m.kind), len(m.payload)) + m.payload + _CRC.pack(zlib.crc32(m.payload))


def _check_header(buf: bytes, offset: int) -> Tuple[MessageKind, int]:
    available = len(buf) - offset
    magic_len = min(available, len(MAGIC))
    if bytes(buf[offset:offset + magic_len]) != MAGIC[:magic_len]:
        raise ProtocolError(f"bad magic {bytes(buf[offset:offset + magic_len])!r}")
    if available < HEADER_SIZE:
        raise NeedMoreData(f"need {HEADER_SIZE} header bytes, have {available}")
    _, kind_code, length = _HEADER.unpack_from(buf, offset)
    try:
        kind = MessageKind(kind_code)
    except ValueError:
        raise ProtocolError(f"unknown message kind {kind_code}") from None
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared length {length} exceeds {MAX_PAYLOAD}")
    return kind, length


def parse_message(buf: bytes, offset: int = 0) -> Tuple[WireMessage, int]:
    """
    Parse exactly one message starting at ``offset``.

    Returns:
        Tuple of (message, bytes consumed)

    Raises:
        ProtocolError: bad magic, unknown kind or oversized length
        NeedMoreData: the buffer ends before the message does
        CorruptionError: the payload fails its checksum
    """
    kind, length = _check_header(buf, offset)
    total = OVERHEAD + length
    if len(buf) - offset < total:
        raise NeedMoreData(f"need {total} bytes, have {len(buf) - offset}")
    start = offset + HEADER_SIZE
    payload = bytes(buf[start:start + length])
    (crc,) = _CRC.unpack_from(buf, start + length)
    if zlib.crc32(payload) != crc:
        raise CorruptionError(f"{kind.name} message checksum mismatch")
    return WireMessage(kind, payload), total


def parse_stream(data: bytes) -> List[WireMessage]:
    """Parse a buffer holding only whole messages."""
    out = []
    offset = 0
    while offset < len(data):
        m, used = parse_message(data, offset)
        out.append(m)
        offset += used
    return out


def read_message(reader: Reader) -> Optional[WireMessage]:
    """
    Read one message from a byte stream. Returns None on a clean end of
    stream; a stream ending mid-message raises NeedMoreData.
    """
    header = reader.read(HEADER_SIZE)
    if not header:
        return None
    if len(header) < HEADER_SIZE:
        _check_header(header, 0)
        raise NeedMoreData("stream ended inside a message header")
    kind, length = _check_header(header, 0)
    rest = reader.read(length + _CRC.size)
    if len(rest) < length + _CRC.size:
        raise NeedMoreData("stream ended inside a message body")
    return parse_message(header + rest)[0]


class MessageParser:
    """
    Incremental parser for one byte stream: feed chunks as they arrive,
    poll complete messages. A corrupt message is dropped before its
    CorruptionError is raised, and a bad header drops bytes up to the next
    magic before its ProtocolError is raised, so parsing can continue.
    """

    def __init__(self):
        self._buf = bytearray()

    @property
    def buffered(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes):
        self._buf.extend(data)

    def poll(self) -> Optional[WireMessage]:
        try:
            m, used = parse_message(self._buf)
        except NeedMoreData:
            return None
        except CorruptionError:
            kind, length = _check_header(self._buf, 0)
            del self._buf[:OVERHEAD + length]
            logger.warning("dropped corrupt %s message (%d payload bytes)", kind.name, length)
            raise
        except ProtocolError:
            dropped = self._resync()
            logger.warning("dropped %d bytes with a bad message header", dropped)
            raise
        del self._buf[:used]
        return m

    def _resync(self) -> int:
        """Drop bytes up to the next magic, keeping a tail that may start one."""
        start = self._buf.find(MAGIC, 1)
        if start < 0:
            start = len(self._buf)
            for keep in range(len(MAGIC) - 1, 0, -1):
                if self._buf.endswith(MAGIC[:keep]):
                    start = len(self._buf) - keep
                    break
            start = max(start, 1)
        del self._buf[:start]
        return start

    def messages(self) -> Iterator[WireMessage]:
        m = self.poll()
        while m is not None:
            yield m
            m = self.poll()


# Payload codecs

def encode_batch(batch: CaptureBatch) -> bytes:
    parts = [_BATCH_HEAD.pack(batch.ap_id.octets, batch.trigger_quantum, len(batch.frames))]
    parts.extend(encode_frame(f) for f in batch.frames)
    return b"".join(parts)


def decode_batch(payload: bytes) -> CaptureBatch:
    if len(payload) < _BATCH_HEAD.size:
        raise ProtocolError("capture batch payload too short")
    ap, quantum, count = _BATCH_HEAD.unpack_from(payload, 0)
    offset = _BATCH_HEAD.size
    frames = []
    try:
        for _ in range(count):
            f, offset = decode_frame_from(payload, offset)
            frames.append(f)
    except DecodeError as e:
        raise ProtocolError(f"bad frame in capture batch: {e}") from e
    if offset != len(payload):
        raise ProtocolError(f"{len(payload) - offset} stray bytes after {count} frames")
    return CaptureBatch(MacAddr(ap), quantum, frames)


def encode_block(n: BlockNotification) -> bytes:
    return _BLOCK.pack(n.ap_id.octets, n.mac.octets, n.blocked_at_us, int(n.reason))


def decode_block(payload: bytes) -> BlockNotification:
    if len(payload) != _BLOCK.size:
        raise ProtocolError(f"block notification is {len(payload)} bytes, expected {_BLOCK.size}")
    ap, mac, ts, reason = _BLOCK.unpack(payload)
    try:
        label = AttackLabel(reason)
    except ValueError:
        raise ProtocolError(f"unknown attack code {reason}") from None
    return BlockNotification(MacAddr(ap), MacAddr(mac), ts, label)


def batch_message(batch: CaptureBatch) -> WireMessage:
    return WireMessage(MessageKind.CaptureBatchMsg, encode_batch(batch))


def block_message(n: BlockNotification) -> WireMessage:
    return WireMessage(MessageKind.BlockNotify, encode_block(n))


def ack_message() -> WireMessage:
    return WireMessage(MessageKind.Ack)


class InProcessChannel:
    """
    One-way channel carrying encoded messages between threads. Messages
    cross it as bytes, exactly as they would over a socket.
    """

    def __init__(self):
        self._queue: "queue.Queue[bytes]" = queue.Queue()
        self._lock = threading.Lock()
        self.bytes_sent = 0
        self.messages_sent = 0

    def send(self, m: WireMessage):
        data = frame_message(m)
        with self._lock:
            self.bytes_sent += len(data)
            self.messages_sent += 1
        self._queue.put(data)

    def receive(self, timeout: Optional[float] = None) -> Optional[WireMessage]:
        """Next message, or None if nothing arrives within ``timeout``."""
        try:
            data = self._queue.get(timeout=timeout) if timeout is not None else self._queue.get_nowait()
        except queue.Empty:
            return None
        m, used = parse_message(data)
        if used != len(data):
            raise ProtocolError("channel item holds more than one message")
        return m

    def drain(self) -> List[WireMessage]:
        out = []
        m = self.receive()
        while m is not None:
            out.append(m)
            m = self.receive()
        return out

    def empty(self) -> bool:
        return self._queue.empty()
