"""
Type definitions shared by every RIDS module.

Integer codes of FrameKind, SecuritySuite and AttackLabel are part of the
binary record layout and must never be renumbered.
"""

import re
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import List


_MAC_RE = re.compile(r"^[0-9a-fA-F]{2}(:[0-9a-fA-F]{2}){5}$")


@dataclass(frozen=True, order=True)
class MacAddr:
    """A 48-bit IEEE MAC address."""
    octets: bytes

    def __post_init__(self):
        if not isinstance(self.octets, (bytes, bytearray)) or len(self.octets) != 6:
            raise ValueError(f"MAC address needs exactly six octets, got {self.octets!r}")
        if isinstance(self.octets, bytearray):
            object.__setattr__(self, "octets", bytes(self.octets))

    @classmethod
    def parse(cls, text: str) -> "MacAddr":
        """Parse "aa:bb:cc:dd:ee:ff" (either case)."""
        text = text.strip()
        if not _MAC_RE.match(text):
            raise ValueError(f"not a MAC address: {text!r}")
        return cls(bytes.fromhex(text.replace(":", "")))

    @classmethod
    def from_int(cls, value: int) -> "MacAddr":
        return cls(value.to_bytes(6, "big"))

    @classmethod
    def zero(cls) -> "MacAddr":
        return cls(bytes(6))

    @classmethod
    def broadcast(cls) -> "MacAddr":
        return cls(b"\xff" * 6)

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)

    def __repr__(self) -> str:
        return f"MacAddr('{self}')"


class FrameKind(IntEnum):
    """Management/EAPOL frame subtypes modeled by the lab."""
    Beacon = 0
    ProbeResponse = 1
    Authentication = 2
    Deauthentication = 3
    AssociationRequest = 4
    AssociationResponse = 5
    Disassociation = 6
    SaeCommit = 7
    SaeConfirm = 8
    Eapol = 9


class SecuritySuite(IntEnum):
    """Advertised security suite; ordering is weakest to strongest."""
    Open = 0
    Wpa2Psk = 1
    Wpa3Sae = 2


class AttackLabel(IntEnum):
    """Ground-truth class of a frame."""
    Normal = 0
    Deauth = 1
    RogueAp = 2
    EvilTwin = 3
    Krack = 4
    BeaconFlood = 5


# Kinds that advertise a beacon interval.
BEACON_KINDS = frozenset({FrameKind.Beacon, FrameKind.ProbeResponse})

# Kinds carrying an RSN element (or its EAPOL message-3 copy).
RSNE_KINDS = frozenset({
    FrameKind.Beacon,
    FrameKind.ProbeResponse,
    FrameKind.AssociationRequest,
    FrameKind.AssociationResponse,
    FrameKind.Eapol,
})

# Kinds that carry a reason code.
REASON_KINDS = frozenset({FrameKind.Deauthentication, FrameKind.Disassociation})

MAX_SSID_BYTES = 32
DEFAULT_BEACON_INTERVAL_TU = 100
TU_US = 1024


@dataclass(frozen=True)
class Frame:
    """One 802.11 management or EAPOL frame with its ground-truth label."""
    frame_number: int
    timestamp_us: int
    kind: FrameKind
    src: MacAddr
    dst: MacAddr
    bssid: MacAddr
    ssid: str = ""
    suite: SecuritySuite = SecuritySuite.Open
    beacon_interval_tu: int = 0
    eapol_msg: int = 0
    retry: bool = False
    reason_code: int = 0
    label: AttackLabel = AttackLabel.Normal

    def invariant_violations(self) -> List[str]:
        """Return a description of every per-frame invariant this frame breaks."""
        problems = []
        if self.timestamp_us < 0:
            problems.append("negative timestamp")
        if (self.eapol_msg > 0) != (self.kind == FrameKind.Eapol):
            problems.append("eapol_msg > 0 must hold exactly for Eapol frames")
        if not 0 <= self.eapol_msg <= 4:
            problems.append("eapol_msg outside 0-4")
        if (self.beacon_interval_tu > 0) != (self.kind in BEACON_KINDS):
            problems.append("beacon_interval_tu > 0 must hold exactly for Beacon/ProbeResponse")
        if self.reason_code and self.kind not in REASON_KINDS:
            problems.append("reason_code set on a frame without one")
        if len(self.ssid.encode("utf-8")) > MAX_SSID_BYTES:
            problems.append("ssid longer than 32 bytes")
        return problems

    def renumbered(self, frame_number: int) -> "Frame":
        return replace(self, frame_number=frame_number)


@dataclass(frozen=True)
class ApProfile:
    """What the network operator knows about a legitimate access point."""
    bssid: MacAddr
    ssid: str
    suite: SecuritySuite = SecuritySuite.Wpa3Sae
    beacon_interval_tu: int = DEFAULT_BEACON_INTERVAL_TU
    mfp_enabled: bool = False

    def __post_init__(self):
        if self.beacon_interval_tu < 1:
            raise ValueError("beacon_interval_tu must be at least 1")
        if len(self.ssid.encode("utf-8")) > MAX_SSID_BYTES:
            raise ValueError("ssid longer than 32 bytes")

    @property
    def beacon_interval_us(self) -> int:
        return self.beacon_interval_tu * TU_US


@dataclass(frozen=True)
class BlockNotification:
    """Instruction to one AP to drop frames from ``mac``."""
    ap_id: MacAddr
    mac: MacAddr
    blocked_at_us: int
    reason: AttackLabel
