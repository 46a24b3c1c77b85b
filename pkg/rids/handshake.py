"""
Legitimate connection sequences for Open, WPA2 and WPA3 access points.

WPA2:  Authentication, AssociationRequest, AssociationResponse, EAPOL 1-4
WPA3:  SAE Commit x2, SAE Confirm x2, AssociationRequest, AssociationResponse, EAPOL 1-4
Open:  Authentication, AssociationRequest, AssociationResponse

Key material is not modeled; EAPOL frames carry only their message number.
"""

from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import List, Optional

from ._types import (
    ApProfile, AttackLabel, Frame, FrameKind, MacAddr, SecuritySuite,
)
from .errors import HandshakeError

DEFAULT_GAP_US = 2000

# Frame count of a complete connection, by suite.
SEQUENCE_LENGTH = {
    SecuritySuite.Open: 3,
    SecuritySuite.Wpa2Psk: 7,
    SecuritySuite.Wpa3Sae: 10,
}


class ValidationResult(Enum):
    Consistent = "consistent"
    Mismatch = "mismatch"


class StationPhase(IntEnum):
    Idle = 0
    Authenticating = 1
    Associated = 2
    HandshakeInProgress = 3
    Connected = 4


@dataclass(frozen=True)
class StationState:
    """
    Connection progress of one station.

    ``handshake_step`` is the last EAPOL message seen while the phase is
    HandshakeInProgress, else 0. ``negotiated`` is only set once Connected.
    """
    mac: MacAddr
    phase: StationPhase = StationPhase.Idle
    handshake_step: int = 0
    negotiated: Optional[SecuritySuite] = None
    sae_committed: bool = False

    def apply(self, frame: Frame) -> "StationState":
        """Return the state after ``frame``; illegal steps raise HandshakeError."""
        kind = frame.kind
        phase = self.phase

        if kind in (FrameKind.Deauthentication, FrameKind.Disassociation):
            return StationState(self.mac)

        if kind == FrameKind.Authentication and phase == StationPhase.Idle:
            return replace(self, phase=StationPhase.Authenticating)
        if kind == FrameKind.SaeCommit and phase == StationPhase.Idle:
            return replace(self, phase=StationPhase.Authenticating, sae_committed=True)
        if kind in (FrameKind.SaeCommit, FrameKind.SaeConfirm) and phase == StationPhase.Authenticating \
                and self.sae_committed:
            return self
        if kind == FrameKind.AssociationRequest and phase == StationPhase.Authenticating:
            return self
        if kind == FrameKind.AssociationResponse and phase == StationPhase.Authenticating:
            if frame.suite == SecuritySuite.Open:
                return replace(self, phase=StationPhase.Connected, negotiated=SecuritySuite.Open)
            return replace(self, phase=StationPhase.Associated)
        if kind == FrameKind.Eapol:
            msg = frame.eapol_msg
            if msg == 1 and phase == StationPhase.Associated:
                return replace(self, phase=StationPhase.HandshakeInProgress, handshake_step=1)
            if phase == StationPhase.HandshakeInProgress:
                if msg == self.handshake_step + 1 and msg < 4:
                    return replace(self, handshake_step=msg)
                if msg == 4 and self.handshake_step == 3:
                    return replace(self, phase=StationPhase.Connected, handshake_step=0,
                                   negotiated=frame.suite)
                # Retransmitted message 3 while waiting for message 4.
                if msg == 3 and self.handshake_step == 3 and frame.retry:
                    return self

        raise HandshakeError(
            f"station {self.mac}: {kind.name}"
            f"{'(' + str(frame.eapol_msg) + ')' if kind == FrameKind.Eapol else ''}"
            f" not allowed in phase {phase.name}"
        )


def connect_sequence(
    sta: MacAddr,
    ap: ApProfile,
    t0: int,
    gap_us: int = DEFAULT_GAP_US,
    label: AttackLabel = AttackLabel.Normal,
    suite: Optional[SecuritySuite] = None,
    msg3_suite: Optional[SecuritySuite] = None,
    stop_after_eapol: int = 4,
) -> List[Frame]:
    """
    Generate the frames of one station connecting to ``ap``.

    Args:
        sta: Station address
        ap: Profile of the AP being joined
        t0: Timestamp of the first frame (microseconds)
        gap_us: Spacing between consecutive frames
        label: Label put on every frame (Normal for legitimate traffic)
        suite: Suite actually negotiated, defaults to ap.suite
        msg3_suite: RSNE suite carried in EAPOL message 3, defaults to ``suite``
        stop_after_eapol: Last EAPOL message emitted (4 for a full handshake)

    Returns:
        List of frames with strictly increasing timestamps, numbered from 0
    """
    if gap_us < 1:
        raise ValueError("gap_us must be positive")
    suite = ap.suite if suite is None else suite
    msg3_suite = suite if msg3_suite is None else msg3_suite
    bssid = ap.bssid

    # (kind, src, dst, ssid, eapol_msg, suite)
    steps = []
    if suite == SecuritySuite.Wpa3Sae:
        # SAE commit and confirm go both ways.
        steps.append((FrameKind.SaeCommit, sta, bssid, "", 0, suite))
        steps.append((FrameKind.SaeCommit, bssid, sta, "", 0, suite))
        steps.append((FrameKind.SaeConfirm, sta, bssid, "", 0, suite))
        steps.append((FrameKind.SaeConfirm, bssid, sta, "", 0, suite))
    else:
        steps.append((FrameKind.Authentication, sta, bssid, "", 0, suite))
    steps.append((FrameKind.AssociationRequest, sta, bssid, ap.ssid, 0, suite))
    steps.append((FrameKind.AssociationResponse, bssid, sta, "", 0, suite))
    if suite != SecuritySuite.Open:
        for msg in range(1, stop_after_eapol + 1):
            from_ap = msg % 2 == 1
            steps.append((
                FrameKind.Eapol,
                bssid if from_ap else sta,
                sta if from_ap else bssid,
                "",
                msg,
                msg3_suite if msg == 3 else suite,
            ))

    return [
        Frame(
            frame_number=i,
            timestamp_us=t0 + i * gap_us,
            kind=kind,
            src=src,
            dst=dst,
            bssid=bssid,
            ssid=ssid,
            suite=frame_suite,
            eapol_msg=msg,
            label=label,
        )
        for i, (kind, src, dst, ssid, msg, frame_suite) in enumerate(steps)
    ]


def validate_rsne(beacon_suite: SecuritySuite, msg3_suite: SecuritySuite) -> ValidationResult:
    """Compare the advertised RSNE with the copy in EAPOL message 3."""
    if beacon_suite == msg3_suite:
        return ValidationResult.Consistent
    return ValidationResult.Mismatch


def run_station(mac: MacAddr, frames: List[Frame]) -> StationState:
    """Replay ``frames`` through a fresh StationState."""
    state = StationState(mac)
    for f in frames:
        state = state.apply(f)
    return state
