"""
Plain-text scenario files.

One ``key = value`` per line; ``#`` at the start of a line or after whitespace
starts a comment unless it is quoted. Scalar keys:

    name, duration_s, seed, baseline_rate_fps, reconnect_interval_s, handshake_gap_us

Record keys take space-separated ``field=value`` pairs (values may be quoted)
and can be repeated:

    ap          = bssid=02:00:00:00:00:01 ssid=RIDS-Lab suite=Wpa3Sae beacon_interval_tu=100 mfp=0
    station     = mac=02:00:00:00:10:00 ap=02:00:00:00:00:01
    stations    = count=3 ap=02:00:00:00:00:01 prefix=02:00:00:00:10:00
    attack      = label=Deauth attacker=02:ad:00:00:00:01 target_ap=02:00:00:00:00:01
                  target_sta=02:00:00:00:10:00 start_s=8 end_s=11 rate_fps=1000
    flash_crowd = ap=02:00:00:00:00:01 start_s=5 spread_s=1 count=40 prefix=02:fc:00:00:00:00

(a record is always written on a single line).
"""

import logging
import shlex
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from ._types import ApProfile, AttackLabel, MacAddr, SecuritySuite
from .attacks import AttackSpec, FlashCrowdSpec, ScenarioConfig, krack_fits
from .errors import ConfigError
from .handshake import DEFAULT_GAP_US

logger = logging.getLogger(__name__)

DEFAULT_STATION_PREFIX = MacAddr.parse("02:00:00:00:10:00")

SCALAR_KEYS = (
    "name", "duration_s", "seed", "baseline_rate_fps", "reconnect_interval_s", "handshake_gap_us",
)
RECORD_FIELDS = {
    "ap": ({"bssid", "ssid"}, {"suite", "beacon_interval_tu", "mfp"}),
    "station": ({"mac", "ap"}, set()),
    "stations": ({"count", "ap"}, {"prefix"}),
    "attack": ({"label", "attacker", "target_ap", "start_s", "end_s"}, {"target_sta", "rate_fps"}),
    "flash_crowd": ({"ap", "start_s", "count"}, {"spread_s", "prefix"}),
}


def _convert(value: str, conv: Callable, what: str, line: int):
    try:
        return conv(value)
    except (ValueError, KeyError):
        raise ConfigError(f"bad {what} {value!r}", line) from None


def _mac(value: str, what: str, line: int) -> MacAddr:
    return _convert(value, MacAddr.parse, what, line)


def _enum(enum_cls, value: str, what: str, line: int):
    return _convert(value, lambda v: enum_cls[v], what, line)


def _bool(value: str, what: str, line: int) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad {what} {value!r}", line)


def _fields(key: str, value: str, line: int) -> Dict[str, str]:
    try:
        tokens = shlex.split(value)
    except ValueError as e:
        raise ConfigError(f"{key}: {e}", line) from None
    out = {}
    for token in tokens:
        name, sep, field_value = token.partition("=")
        if not sep:
            raise ConfigError(f"{key}: expected field=value, got {token!r}", line)
        if name in out:
            raise ConfigError(f"{key}: field {name!r} given twice", line)
        out[name] = field_value
    required, optional = RECORD_FIELDS[key]
    missing = required - set(out)
    if missing:
        raise ConfigError(f"{key}: missing {', '.join(sorted(missing))}", line)
    unknown = set(out) - required - optional
    if unknown:
        raise ConfigError(f"{key}: unknown field {', '.join(sorted(unknown))}", line)
    return out


class _Builder:
    """Accumulates records with their line numbers until the file is read."""

    def __init__(self):
        self.scalars: Dict[str, Tuple[str, int]] = {}
        self.aps: List[Tuple[ApProfile, int]] = []
        self.station_records: List[Tuple[Dict[str, str], int]] = []
        self.attack_records: List[Tuple[Dict[str, str], int]] = []
        self.crowd_records: List[Tuple[Dict[str, str], int]] = []

    def add(self, key: str, value: str, line: int):
        if key in SCALAR_KEYS:
            if key in self.scalars:
                raise ConfigError(f"{key} given twice", line)
            self.scalars[key] = (value, line)
        elif key == "ap":
            self.aps.append((self._ap(_fields(key, value, line), line), line))
        elif key in ("station", "stations"):
            fields = _fields(key, value, line)
            fields["_key"] = key
            self.station_records.append((fields, line))
        elif key == "attack":
            self.attack_records.append((_fields(key, value, line), line))
        elif key == "flash_crowd":
            self.crowd_records.append((_fields(key, value, line), line))
        else:
            raise ConfigError(f"unknown key {key!r}", line)

    @staticmethod
    def _ap(fields: Dict[str, str], line: int) -> ApProfile:
        try:
            return ApProfile(
                bssid=_mac(fields["bssid"], "bssid", line),
                ssid=fields["ssid"],
                suite=_enum(SecuritySuite, fields.get("suite", "Wpa3Sae"), "suite", line),
                beacon_interval_tu=_convert(fields.get("beacon_interval_tu", "100"), int,
                                            "beacon_interval_tu", line),
                mfp_enabled=_bool(fields.get("mfp", "0"), "mfp", line),
            )
        except ValueError as e:
            raise ConfigError(str(e), line) from None

    def _scalar(self, key: str, conv: Callable, default):
        if key not in self.scalars:
            return default
        value, line = self.scalars[key]
        return _convert(value, conv, key, line)

    def _find_ap(self, bssid: MacAddr, line: int) -> ApProfile:
        for ap, _ in self.aps:
            if ap.bssid == bssid:
                return ap
        raise ConfigError(f"no ap record with bssid {bssid}", line)

    def build(self) -> ScenarioConfig:
        if not self.aps:
            raise ConfigError("no ap record", None)
        seen = {}
        for ap, line in self.aps:
            if ap.bssid in seen:
                raise ConfigError(f"duplicate ap {ap.bssid} (first on line {seen[ap.bssid]})", line)
            seen[ap.bssid] = line

        stations = []
        for fields, line in self.station_records:
            ap = self._find_ap(_mac(fields["ap"], "ap", line), line)
            if fields["_key"] == "station":
                stations.append((_mac(fields["mac"], "mac", line), ap))
            else:
                count = _convert(fields["count"], int, "count", line)
                if count < 0:
                    raise ConfigError("stations count cannot be negative", line)
                prefix = _mac(fields["prefix"], "prefix", line) if "prefix" in fields \
                    else DEFAULT_STATION_PREFIX
                base = int.from_bytes(prefix.octets, "big")
                stations.extend((MacAddr.from_int(base + i), ap) for i in range(count))

        cfg = ScenarioConfig(
            duration_s=self._scalar("duration_s", float, 20.0),
            aps=[ap for ap, _ in self.aps],
            stations=stations,
            baseline_rate_fps=self._scalar("baseline_rate_fps", float, 20.0),
            seed=self._scalar("seed", int, 0),
            reconnect_interval_s=self._scalar("reconnect_interval_s", float, 20.0),
            handshake_gap_us=self._scalar("handshake_gap_us", int, DEFAULT_GAP_US),
            name=self._scalar("name", str, "scenario"),
        )

        for fields, line in self.attack_records:
            spec = AttackSpec(
                label=_enum(AttackLabel, fields["label"], "label", line),
                attacker_mac=_mac(fields["attacker"], "attacker", line),
                target_ap=_mac(fields["target_ap"], "target_ap", line),
                target_sta=_mac(fields["target_sta"], "target_sta", line) if "target_sta" in fields else None,
                start_s=_convert(fields["start_s"], float, "start_s", line),
                end_s=_convert(fields["end_s"], float, "end_s", line),
                rate_fps=_convert(fields["rate_fps"], float, "rate_fps", line) if "rate_fps" in fields else None,
            )
            self._find_ap(spec.target_ap, line)
            _checked(spec.validate, line)
            if spec.start_s < 0 or spec.end_s > cfg.duration_s:
                raise ConfigError(
                    f"attack window [{spec.start_s}, {spec.end_s}] falls outside [0, {cfg.duration_s}]", line
                )
            if spec.label == AttackLabel.Krack and not krack_fits(
                    spec, self._find_ap(spec.target_ap, line), cfg.handshake_gap_us):
                raise ConfigError(f"Krack window [{spec.start_s}, {spec.end_s}] is too short for the handshake", line)
            cfg.attacks.append(spec)

        for fields, line in self.crowd_records:
            crowd = FlashCrowdSpec(
                ap=_mac(fields["ap"], "ap", line),
                start_s=_convert(fields["start_s"], float, "start_s", line),
                count=_convert(fields["count"], int, "count", line),
                spread_s=_convert(fields.get("spread_s", "1"), float, "spread_s", line),
                prefix=_mac(fields["prefix"], "prefix", line) if "prefix" in fields else None,
            )
            self._find_ap(crowd.ap, line)
            if crowd.count < 0 or crowd.spread_s <= 0:
                raise ConfigError("flash_crowd needs count >= 0 and spread_s > 0", line)
            if crowd.start_s < 0 or crowd.start_s + crowd.spread_s > cfg.duration_s:
                raise ConfigError("flash_crowd falls outside the scenario", line)
            cfg.flash_crowds.append(crowd)

        _checked(cfg.validate, self._line_of_first_scalar())
        return cfg

    def _line_of_first_scalar(self) -> Optional[int]:
        lines = [line for _, line in self.scalars.values()]
        return min(lines) if lines else None


def _checked(fn: Callable, line: Optional[int]):
    try:
        fn()
    except ConfigError as e:
        if e.line is not None:
            raise
        raise ConfigError(str(e), line) from None


def _strip_comment(raw: str) -> str:
    """Cut a ``#`` comment that starts a line or follows whitespace, outside quotes."""
    quote = None
    escaped = False
    for i, ch in enumerate(raw):
        if escaped:
            escaped = False
        elif ch == "\\" and quote != "'":
            escaped = True
        elif quote is not None:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#" and (i == 0 or raw[i - 1].isspace()):
            return raw[:i]
    return raw


def parse_config(text: str) -> ScenarioConfig:
    """Parse scenario file text into a validated ScenarioConfig."""
    builder = _Builder()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        builder.add(key.strip(), value.strip(), lineno)
    return builder.build()


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    cfg = parse_config(text)
    logger.info("loaded scenario %s from %s (%d attacks)", cfg.name, path, len(cfg.attacks))
    return cfg


def _fmt_float(value: float) -> str:
    return repr(float(value))


def format_config(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` in scenario file syntax; parse_config reads it back."""
    lines = [
        f"name = {cfg.name}",
        f"duration_s = {_fmt_float(cfg.duration_s)}",
        f"seed = {cfg.seed}",
        f"baseline_rate_fps = {_fmt_float(cfg.baseline_rate_fps)}",
        f"reconnect_interval_s = {_fmt_float(cfg.reconnect_interval_s)}",
        f"handshake_gap_us = {cfg.handshake_gap_us}",
    ]
    for ap in cfg.aps:
        lines.append(
            f"ap = bssid={ap.bssid} ssid={shlex.quote(ap.ssid)} suite={ap.suite.name} "
            f"beacon_interval_tu={ap.beacon_interval_tu} mfp={int(ap.mfp_enabled)}"
        )
    for mac, ap in cfg.stations:
        lines.append(f"station = mac={mac} ap={ap.bssid}")
    for spec in cfg.attacks:
        parts = [
            f"label={spec.label.name}", f"attacker={spec.attacker_mac}", f"target_ap={spec.target_ap}",
        ]
        if spec.target_sta is not None:
            parts.append(f"target_sta={spec.target_sta}")
        parts += [f"start_s={_fmt_float(spec.start_s)}", f"end_s={_fmt_float(spec.end_s)}"]
        if spec.rate_fps is not None:
            parts.append(f"rate_fps={_fmt_float(spec.rate_fps)}")
        lines.append("attack = " + " ".join(parts))
    for crowd in cfg.flash_crowds:
        line = (
            f"flash_crowd = ap={crowd.ap} start_s={_fmt_float(crowd.start_s)} "
            f"spread_s={_fmt_float(crowd.spread_s)} count={crowd.count}"
        )
        if crowd.prefix is not None:
            line += f" prefix={crowd.prefix}"
        lines.append(line)
    return "\n".join(lines) + "\n"
