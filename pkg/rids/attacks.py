"""
Scenario generation: legitimate baseline traffic plus the five injected attacks.

Every generator is a pure function of its inputs (and the scenario seed), so a
ScenarioConfig always reproduces the same frame stream.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from ._types import (
    ApProfile, AttackLabel, Frame, FrameKind, MacAddr, SecuritySuite,
)
from .errors import ConfigError
from .handshake import DEFAULT_GAP_US, connect_sequence

logger = logging.getLogger(__name__)

US_PER_S = 1_000_000

DEFAULT_ATTACK_RATES: Dict[AttackLabel, float] = {
    AttackLabel.Deauth: 1000.0,
    AttackLabel.RogueAp: 1000.0,
    AttackLabel.EvilTwin: 1000.0,
    AttackLabel.Krack: 1000.0,
    AttackLabel.BeaconFlood: 1000.0,
}

# Class-3 frame received from nonassociated station.
DEAUTH_REASON = 7
# Disassociated because sending station is leaving the BSS.
LEAVING_REASON = 8

DEAUTH_LEAD_US = 200
EVIL_TWIN_DEAUTH_FRAMES = 16
EVIL_TWIN_DEAUTH_SPACING_US = 1000
LURE_DELAY_US = 100_000
KRACK_DOWNGRADE_US = 300_000
# Six WPA2 handshake frames, then a retransmission and message 4
KRACK_MIN_GAPS = 7

FLASH_CROWD_PREFIX = 0x02FC00000000


@dataclass(frozen=True)
class AttackSpec:
    """One injected attack session."""
    label: AttackLabel
    attacker_mac: MacAddr
    target_ap: MacAddr
    target_sta: Optional[MacAddr] = None
    start_s: float = 0.0
    end_s: float = 1.0
    rate_fps: Optional[float] = None

    @property
    def rate(self) -> float:
        if self.rate_fps is None:
            return DEFAULT_ATTACK_RATES[self.label]
        return self.rate_fps

    @property
    def start_us(self) -> int:
        return int(round(self.start_s * US_PER_S))

    @property
    def end_us(self) -> int:
        return int(round(self.end_s * US_PER_S))

    def validate(self):
        if self.label == AttackLabel.Normal:
            raise ConfigError("attack label cannot be Normal")
        if not self.start_s < self.end_s:
            raise ConfigError(f"attack window [{self.start_s}, {self.end_s}] is empty")
        if self.rate <= 0:
            raise ConfigError("attack rate_fps must be positive")
        if self.label == AttackLabel.Krack and self.target_sta is None:
            raise ConfigError("Krack needs a target_sta")


@dataclass(frozen=True)
class FlashCrowdSpec:
    """
    A burst of new stations joining ``ap`` within ``spread_s``. Their MACs
    count up from ``prefix``, or from a per-crowd default block.
    """
    ap: MacAddr
    start_s: float
    count: int
    spread_s: float = 1.0
    prefix: Optional[MacAddr] = None


@dataclass
class ScenarioConfig:
    """Declarative description of one lab run."""
    duration_s: float
    aps: List[ApProfile]
    stations: List[Tuple[MacAddr, ApProfile]] = field(default_factory=list)
    baseline_rate_fps: float = 20.0
    attacks: List[AttackSpec] = field(default_factory=list)
    seed: int = 0
    reconnect_interval_s: float = 20.0
    handshake_gap_us: int = DEFAULT_GAP_US
    flash_crowds: List[FlashCrowdSpec] = field(default_factory=list)
    name: str = "scenario"

    @property
    def duration_us(self) -> int:
        return int(round(self.duration_s * US_PER_S))

    def ap_by_bssid(self, bssid: MacAddr) -> ApProfile:
        for ap in self.aps:
            if ap.bssid == bssid:
                return ap
        raise ConfigError(f"no AP with bssid {bssid}")

    def stations_of(self, ap: ApProfile) -> List[MacAddr]:
        return [mac for mac, sta_ap in self.stations if sta_ap.bssid == ap.bssid]

    def validate(self):
        if self.duration_s < 1:
            raise ConfigError("duration_s must be at least 1")
        if self.baseline_rate_fps <= 0:
            raise ConfigError("baseline_rate_fps must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.reconnect_interval_s < 0:
            raise ConfigError("reconnect_interval_s cannot be negative")
        if not self.aps:
            raise ConfigError("scenario needs at least one AP")
        bssids = [ap.bssid for ap in self.aps]
        if len(set(bssids)) != len(bssids):
            raise ConfigError("duplicate AP bssid")
        for mac, ap in self.stations:
            if ap not in self.aps:
                raise ConfigError(f"station {mac} joins unknown AP {ap.bssid}")
        for spec in self.attacks:
            spec.validate()
            ap = self.ap_by_bssid(spec.target_ap)
            if spec.end_s > self.duration_s or spec.start_s < 0:
                raise ConfigError(
                    f"{spec.label.name} window [{spec.start_s}, {spec.end_s}] "
                    f"falls outside [0, {self.duration_s}]"
                )
            if spec.label == AttackLabel.Krack and not krack_fits(spec, ap, self.handshake_gap_us):
                raise ConfigError(
                    f"Krack window [{spec.start_s}, {spec.end_s}] is too short for the handshake"
                )
        for crowd in self.flash_crowds:
            self.ap_by_bssid(crowd.ap)
            if crowd.count < 0 or crowd.spread_s <= 0:
                raise ConfigError("flash crowd needs count >= 0 and spread_s > 0")
            if crowd.start_s < 0 or crowd.start_s + crowd.spread_s > self.duration_s:
                raise ConfigError("flash crowd falls outside the scenario")


def _schedule(start_us: int, end_us: int, rate_fps: float) -> List[int]:
    """Evenly spaced send times for ``rate_fps`` over [start_us, end_us)."""
    span = end_us - start_us
    if span <= 0:
        return []
    n = int(round(span * rate_fps / US_PER_S))
    return [start_us + (i * span) // n for i in range(n)]


def _numbered(frames: List[Frame]) -> List[Frame]:
    return [f.renumbered(i) for i, f in enumerate(frames)]


def _beacon(ts: int, src: MacAddr, ap: ApProfile, suite: SecuritySuite, interval_tu: int,
            label: AttackLabel, kind: FrameKind = FrameKind.Beacon,
            dst: Optional[MacAddr] = None) -> Frame:
    return Frame(
        frame_number=0,
        timestamp_us=ts,
        kind=kind,
        src=src,
        dst=dst if dst is not None else MacAddr.broadcast(),
        bssid=src,
        ssid=ap.ssid,
        suite=suite,
        beacon_interval_tu=interval_tu,
        label=label,
    )


# Baseline

def _station_traffic(rng: np.random.Generator, sta: MacAddr, ap: ApProfile,
                     cfg: ScenarioConfig) -> List[Frame]:
    """Poisson probe-response proxies plus periodic reconnects for one station."""
    frames = []
    duration_us = cfg.duration_us
    mean_gap_us = US_PER_S / cfg.baseline_rate_fps
    t = 0.0
    while True:
        t += rng.exponential(mean_gap_us)
        if t >= duration_us:
            break
        frames.append(Frame(
            frame_number=0,
            timestamp_us=int(t),
            kind=FrameKind.ProbeResponse,
            src=ap.bssid,
            dst=sta,
            bssid=ap.bssid,
            ssid=ap.ssid,
            suite=ap.suite,
            beacon_interval_tu=ap.beacon_interval_tu,
        ))

    if cfg.reconnect_interval_s > 0:
        interval_us = cfg.reconnect_interval_s * US_PER_S
        t = rng.uniform(0, interval_us)
        while True:
            start = int(t)
            seq = connect_sequence(sta, ap, start + cfg.handshake_gap_us, gap_us=cfg.handshake_gap_us)
            if seq[-1].timestamp_us >= duration_us:
                break
            frames.append(Frame(
                frame_number=0,
                timestamp_us=start,
                kind=FrameKind.Disassociation,
                src=sta,
                dst=ap.bssid,
                bssid=ap.bssid,
                suite=ap.suite,
                reason_code=LEAVING_REASON,
            ))
            frames.extend(seq)
            t += interval_us
    return frames


def _flash_crowd(rng: np.random.Generator, index: int, crowd: FlashCrowdSpec,
                 cfg: ScenarioConfig) -> List[Frame]:
    ap = cfg.ap_by_bssid(crowd.ap)
    start_us = int(round(crowd.start_s * US_PER_S))
    spread_us = int(round(crowd.spread_s * US_PER_S))
    if crowd.prefix is not None:
        base = int.from_bytes(crowd.prefix.octets, "big")
    else:
        base = FLASH_CROWD_PREFIX + (index << 16)
    frames = []
    for i in range(crowd.count):
        sta = MacAddr.from_int(base + i)
        t0 = start_us + int(rng.integers(0, spread_us))
        frames.extend(connect_sequence(sta, ap, t0, gap_us=cfg.handshake_gap_us))
    return frames


def gen_baseline(cfg: ScenarioConfig) -> List[Frame]:
    """
    Legitimate traffic: AP beacons, per-station Poisson traffic and reconnects,
    and any configured flash crowds. All frames are labeled Normal.
    """
    streams: List[List[Frame]] = []
    duration_us = cfg.duration_us
    for ap in cfg.aps:
        streams.append([
            _beacon(ts, ap.bssid, ap, ap.suite, ap.beacon_interval_tu, AttackLabel.Normal)
            for ts in range(0, duration_us, ap.beacon_interval_us)
        ])
    for idx, (sta, ap) in enumerate(cfg.stations):
        rng = np.random.default_rng([cfg.seed, idx])
        streams.append(_station_traffic(rng, sta, ap, cfg))
    for idx, crowd in enumerate(cfg.flash_crowds):
        rng = np.random.default_rng([cfg.seed, 1 << 20, idx])
        streams.append(_flash_crowd(rng, idx, crowd, cfg))

    tagged = []
    seq = 0
    for stream in streams:
        for f in stream:
            tagged.append((f.timestamp_us, seq, f))
            seq += 1
    tagged.sort(key=lambda item: item[:2])
    return [f.renumbered(i) for i, (_, _, f) in enumerate(tagged)]


# Attacks

def inject_deauth_flood(spec: AttackSpec, ap: ApProfile) -> List[Frame]:
    """
    Deauthentication frames spoofing ``ap`` towards the target station, sent
    right after a fresh AssociationRequest from that station.
    """
    start, end = spec.start_us, spec.end_us
    if end <= start:
        return []
    victim = spec.target_sta if spec.target_sta is not None else MacAddr.broadcast()
    frames = []
    if spec.target_sta is not None:
        frames.append(Frame(
            frame_number=0,
            timestamp_us=start,
            kind=FrameKind.AssociationRequest,
            src=spec.target_sta,
            dst=ap.bssid,
            bssid=ap.bssid,
            ssid=ap.ssid,
            suite=ap.suite,
        ))
    lead = min(DEAUTH_LEAD_US, (end - start) // 2)
    count = len(_schedule(start, end, spec.rate))
    span = end - start - lead
    for i in range(count):
        frames.append(Frame(
            frame_number=0,
            timestamp_us=start + lead + (i * span) // count,
            kind=FrameKind.Deauthentication,
            src=ap.bssid,
            dst=victim,
            bssid=ap.bssid,
            suite=ap.suite,
            reason_code=DEAUTH_REASON,
            label=AttackLabel.Deauth,
        ))
    return _numbered(frames)


def _rogue_beacons(start: int, end: int, rate: float, ap: ApProfile, label: AttackLabel) -> List[Frame]:
    interval = max(1, ap.beacon_interval_tu // 2)
    return [
        _beacon(ts, ap.bssid, ap, SecuritySuite.Wpa2Psk, interval, label)
        for ts in _schedule(start, end, rate)
    ]


def inject_rogue_ap(spec: AttackSpec, ap: ApProfile, gap_us: int = DEFAULT_GAP_US) -> List[Frame]:
    """
    Beacons cloning ``ap``'s ssid and bssid but advertising WPA2 at half the
    beacon interval, then the lured station's WPA2 handshake, which stops at
    EAPOL message 3 when the station sees the WPA3 RSNE.
    """
    start, end = spec.start_us, spec.end_us
    if end <= start:
        return []
    frames = _rogue_beacons(start, end, spec.rate, ap, AttackLabel.RogueAp)
    if spec.target_sta is not None:
        t0 = start + min(LURE_DELAY_US, (end - start) // 4)
        frames.extend(connect_sequence(
            spec.target_sta, ap, t0, gap_us=gap_us, label=AttackLabel.RogueAp,
            suite=SecuritySuite.Wpa2Psk, msg3_suite=ap.suite, stop_after_eapol=3,
        ))
    frames.sort(key=lambda f: f.timestamp_us)
    return _numbered(frames)


def inject_evil_twin(spec: AttackSpec, ap: ApProfile, gap_us: int = DEFAULT_GAP_US) -> List[Frame]:
    """
    A short spoofed deauth burst, then a twin AP (same ssid and suite, the
    attacker's bssid) beaconing and answering probes, then the target station
    joining the twin.
    """
    start, end = spec.start_us, spec.end_us
    if end <= start:
        return []
    victim = spec.target_sta if spec.target_sta is not None else MacAddr.broadcast()
    twin = replace(ap, bssid=spec.attacker_mac)

    burst = max(1, min(EVIL_TWIN_DEAUTH_FRAMES, (end - start) // (4 * EVIL_TWIN_DEAUTH_SPACING_US)))
    frames = [
        Frame(
            frame_number=0,
            timestamp_us=start + i * EVIL_TWIN_DEAUTH_SPACING_US,
            kind=FrameKind.Deauthentication,
            src=ap.bssid,
            dst=victim,
            bssid=ap.bssid,
            suite=ap.suite,
            reason_code=DEAUTH_REASON,
            label=AttackLabel.EvilTwin,
        )
        for i in range(burst)
    ]
    twin_start = start + burst * EVIL_TWIN_DEAUTH_SPACING_US
    for i, ts in enumerate(_schedule(twin_start, end, spec.rate)):
        if i % 2 == 0:
            frames.append(_beacon(ts, twin.bssid, twin, twin.suite, twin.beacon_interval_tu,
                                  AttackLabel.EvilTwin))
        else:
            frames.append(_beacon(ts, twin.bssid, twin, twin.suite, twin.beacon_interval_tu,
                                  AttackLabel.EvilTwin, kind=FrameKind.ProbeResponse, dst=victim))
    if spec.target_sta is not None:
        t0 = twin_start + min(LURE_DELAY_US // 2, (end - twin_start) // 4)
        frames.extend(connect_sequence(spec.target_sta, twin, t0, gap_us=gap_us,
                                       label=AttackLabel.EvilTwin))
    frames.sort(key=lambda f: f.timestamp_us)
    return _numbered(frames)


def _krack_handshake_start(spec: AttackSpec, ap: ApProfile) -> int:
    if ap.suite == SecuritySuite.Wpa3Sae:
        return spec.start_us + min(KRACK_DOWNGRADE_US, (spec.end_us - spec.start_us) // 4)
    return spec.start_us


def krack_fits(spec: AttackSpec, ap: ApProfile, gap_us: int = DEFAULT_GAP_US) -> bool:
    """
    True when the handshake, one message 3 retransmission and message 4 all
    land before ``spec.end_us``.
    """
    return _krack_handshake_start(spec, ap) + KRACK_MIN_GAPS * gap_us <= spec.end_us


def inject_krack(spec: AttackSpec, ap: ApProfile, gap_us: int = DEFAULT_GAP_US) -> List[Frame]:
    """
    Key reinstallation: message 4 is blocked so the AP keeps retransmitting
    message 3. A WPA3 target is first downgraded by a rogue-AP segment.
    Raises ValueError when the window is too short for the handshake.
    """
    start, end = spec.start_us, spec.end_us
    if end <= start:
        return []
    if spec.target_sta is None:
        raise ValueError("Krack needs a target station")
    if not krack_fits(spec, ap, gap_us):
        raise ValueError(f"Krack window of {end - start}us is too short for gap_us={gap_us}")
    sta = spec.target_sta
    frames: List[Frame] = []
    t = _krack_handshake_start(spec, ap)
    if ap.suite == SecuritySuite.Wpa3Sae:
        frames.extend(_rogue_beacons(start, t, spec.rate, ap, AttackLabel.RogueAp))

    handshake = connect_sequence(sta, ap, t, gap_us=gap_us, label=AttackLabel.Krack,
                                 suite=SecuritySuite.Wpa2Psk, stop_after_eapol=3)
    frames.extend(handshake)
    msg3 = handshake[-1]
    first_retry = msg3.timestamp_us + gap_us
    last_slot = max(first_retry + 1, end - gap_us)
    retries = _schedule(first_retry, last_slot, spec.rate) or [first_retry]
    for ts in retries:
        frames.append(replace(msg3, timestamp_us=ts, retry=True))
    frames.append(Frame(
        frame_number=0,
        timestamp_us=max(retries[-1] + 1, end - 1),
        kind=FrameKind.Eapol,
        src=sta,
        dst=ap.bssid,
        bssid=ap.bssid,
        suite=SecuritySuite.Wpa2Psk,
        eapol_msg=4,
        label=AttackLabel.Krack,
    ))
    return _numbered(frames)


def inject_beacon_flood(spec: AttackSpec, ap: ApProfile) -> List[Frame]:
    """Beacons and probe responses from the attacker advertising ``ap``'s ssid as an open network."""
    start, end = spec.start_us, spec.end_us
    if end <= start:
        return []
    probe_dst = spec.target_sta if spec.target_sta is not None else MacAddr.broadcast()
    frames = []
    for i, ts in enumerate(_schedule(start, end, spec.rate)):
        kind = FrameKind.Beacon if i % 2 == 0 else FrameKind.ProbeResponse
        frames.append(_beacon(
            ts, spec.attacker_mac, ap, SecuritySuite.Open, ap.beacon_interval_tu,
            AttackLabel.BeaconFlood, kind=kind,
            dst=None if kind == FrameKind.Beacon else probe_dst,
        ))
    return _numbered(frames)


def inject(spec: AttackSpec, ap: ApProfile, gap_us: int = DEFAULT_GAP_US) -> List[Frame]:
    """Dispatch ``spec`` to its injector."""
    if spec.label == AttackLabel.Deauth:
        return inject_deauth_flood(spec, ap)
    if spec.label == AttackLabel.RogueAp:
        return inject_rogue_ap(spec, ap, gap_us)
    if spec.label == AttackLabel.EvilTwin:
        return inject_evil_twin(spec, ap, gap_us)
    if spec.label == AttackLabel.Krack:
        return inject_krack(spec, ap, gap_us)
    if spec.label == AttackLabel.BeaconFlood:
        return inject_beacon_flood(spec, ap)
    raise ValueError(f"no injector for {spec.label.name}")


# Scenario assembly

BASELINE_STREAM = "baseline"


def scenario_streams(cfg: ScenarioConfig) -> List[Tuple[str, List[Frame]]]:
    """The baseline stream followed by one stream per attack, in config order."""
    cfg.validate()
    streams = [(BASELINE_STREAM, gen_baseline(cfg))]
    for i, spec in enumerate(cfg.attacks):
        ap = cfg.ap_by_bssid(spec.target_ap)
        streams.append((f"attack{i}:{spec.label.name}", inject(spec, ap, cfg.handshake_gap_us)))
    return streams


def merge_streams(streams: List[Tuple[str, List[Frame]]]) -> List[Frame]:
    """
    Time-merge streams and renumber from 0. Equal timestamps order attacker
    frames before legitimate ones, then by stream and position.
    """
    tagged = []
    for stream_idx, (name, frames) in enumerate(streams):
        rank = 1 if name == BASELINE_STREAM else 0
        for pos, f in enumerate(frames):
            tagged.append((f.timestamp_us, rank, stream_idx, pos, f))
    tagged.sort(key=lambda item: item[:4])
    return [item[4].renumbered(n) for n, item in enumerate(tagged)]


def gen_scenario(cfg: ScenarioConfig) -> List[Frame]:
    """Generate the full labeled frame stream of a scenario."""
    streams = scenario_streams(cfg)
    merged = merge_streams(streams)
    logger.debug("scenario %s: %d frames from %d streams", cfg.name, len(merged), len(streams))
    return merged


# Default desk topology

LAB_AP = ApProfile(
    bssid=MacAddr.parse("02:00:00:00:00:01"),
    ssid="RIDS-Lab",
    suite=SecuritySuite.Wpa3Sae,
)

ATTACK_LABELS = [label for label in AttackLabel if label != AttackLabel.Normal]


def lab_station(i: int) -> MacAddr:
    return MacAddr.from_int(0x020000001000 + i)


def lab_attacker(label: AttackLabel) -> MacAddr:
    return MacAddr.from_int(0x02AD00000000 + int(label))


def lab_scenario(
    labels: Optional[List[AttackLabel]] = None,
    seed: int = 0,
    n_stations: int = 3,
    baseline_rate_fps: float = 20.0,
    attack_start_s: float = 8.0,
    attack_len_s: float = 3.0,
    attack_gap_s: float = 5.0,
    tail_s: float = 9.0,
    ap: ApProfile = LAB_AP,
    flash_crowds: Optional[List[FlashCrowdSpec]] = None,
    rate_fps: Optional[float] = None,
    reconnect_interval_s: float = 20.0,
    name: Optional[str] = None,
) -> ScenarioConfig:
    """
    One AP with ``n_stations`` stations; the given attacks run one after
    another, each for ``attack_len_s`` seconds, separated by ``attack_gap_s``.
    """
    labels = list(labels or [])
    stations = [(lab_station(i), ap) for i in range(n_stations)]
    target = stations[0][0] if stations else None
    attacks = []
    t = attack_start_s
    for label in labels:
        attacks.append(AttackSpec(
            label=label,
            attacker_mac=lab_attacker(label),
            target_ap=ap.bssid,
            target_sta=target,
            start_s=t,
            end_s=t + attack_len_s,
            rate_fps=rate_fps,
        ))
        t += attack_len_s + attack_gap_s
    duration = (t - attack_gap_s + tail_s) if labels else attack_start_s + tail_s
    return ScenarioConfig(
        duration_s=duration,
        aps=[ap],
        stations=stations,
        baseline_rate_fps=baseline_rate_fps,
        attacks=attacks,
        seed=seed,
        reconnect_interval_s=reconnect_interval_s,
        flash_crowds=list(flash_crowds or []),
        name=name or ("-".join(label.name for label in labels) or "baseline"),
    )
