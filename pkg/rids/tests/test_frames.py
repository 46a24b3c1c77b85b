"""
Tests for the frame record: MAC addresses, binary records and CSV rows.
"""

import random
import sys
import tempfile
import unittest
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from rids._types import (
    ApProfile, AttackLabel, Frame, FrameKind, MacAddr, SecuritySuite, BEACON_KINDS, REASON_KINDS,
)
from rids.attacks import ATTACK_LABELS, gen_scenario, lab_scenario
from rids.errors import CsvError, DecodeError, EncodingError
from rids.frames import (
    CSV_HEADER, MIN_RECORD_SIZE, csv_row_to_frame, decode_frame, decode_frame_from, encode_frame,
    encode_stream, frame_to_csv_row, iter_stream, label_counts, read_csv, read_stream, write_csv,
    write_stream,
)

SSID_ALPHABET = "abcXYZ019 -_,\"'éü日本"


def random_mac(rng: random.Random) -> MacAddr:
    return MacAddr(bytes(rng.getrandbits(8) for _ in range(6)))


def random_ssid(rng: random.Random) -> str:
    ssid = "".join(rng.choice(SSID_ALPHABET) for _ in range(rng.randint(0, 14)))
    while len(ssid.encode("utf-8")) > 32:
        ssid = ssid[:-1]
    return ssid


def random_frame(rng: random.Random) -> Frame:
    """A random frame satisfying every per-frame invariant."""
    kind = rng.choice(list(FrameKind))
    return Frame(
        frame_number=rng.getrandbits(64),
        timestamp_us=rng.getrandbits(63),
        kind=kind,
        src=random_mac(rng),
        dst=random_mac(rng),
        bssid=random_mac(rng),
        ssid=random_ssid(rng),
        suite=rng.choice(list(SecuritySuite)),
        beacon_interval_tu=rng.randint(1, 65535) if kind in BEACON_KINDS else 0,
        eapol_msg=rng.randint(1, 4) if kind == FrameKind.Eapol else 0,
        retry=rng.random() < 0.5,
        reason_code=rng.randint(1, 65535) if kind in REASON_KINDS else 0,
        label=rng.choice(list(AttackLabel)),
    )


def zero_beacon() -> Frame:
    return Frame(
        frame_number=0, timestamp_us=0, kind=FrameKind.Beacon,
        src=MacAddr.zero(), dst=MacAddr.zero(), bssid=MacAddr.zero(), ssid="",
    )


class TestMacAddr(unittest.TestCase):
    """Test MAC address parsing and formatting."""

    def test_round_trip(self):
        mac = MacAddr.parse("aa:bb:cc:dd:ee:ff")
        self.assertEqual(str(mac), "aa:bb:cc:dd:ee:ff")
        self.assertEqual(MacAddr.parse(str(mac)), mac)

    def test_uppercase_input_formats_lowercase(self):
        self.assertEqual(str(MacAddr.parse("AA:0B:CC:DD:EE:FF")), "aa:0b:cc:dd:ee:ff")

    def test_rejects_malformed(self):
        for text in ["", "aa:bb:cc:dd:ee", "aa-bb-cc-dd-ee-ff", "gg:bb:cc:dd:ee:ff", "aabbccddeeff"]:
            with self.assertRaises(ValueError, msg=text):
                MacAddr.parse(text)

    def test_needs_six_octets(self):
        with self.assertRaises(ValueError):
            MacAddr(b"\x00" * 5)

    def test_from_int(self):
        self.assertEqual(str(MacAddr.from_int(0x020000001002)), "02:00:00:00:10:02")
        self.assertEqual(MacAddr.broadcast(), MacAddr.parse("ff:ff:ff:ff:ff:ff"))

    def test_random_round_trip(self):
        rng = random.Random(1)
        for _ in range(1000):
            mac = random_mac(rng)
            self.assertEqual(MacAddr.parse(str(mac)), mac)


class TestStableCodes(unittest.TestCase):
    """The integer codes are part of the binary layout."""

    def test_frame_kind_codes(self):
        expected = {
            "Beacon": 0, "ProbeResponse": 1, "Authentication": 2, "Deauthentication": 3,
            "AssociationRequest": 4, "AssociationResponse": 5, "Disassociation": 6,
            "SaeCommit": 7, "SaeConfirm": 8, "Eapol": 9,
        }
        self.assertEqual({k.name: int(k) for k in FrameKind}, expected)

    def test_attack_label_codes(self):
        expected = {"Normal": 0, "Deauth": 1, "RogueAp": 2, "EvilTwin": 3, "Krack": 4, "BeaconFlood": 5}
        self.assertEqual({l.name: int(l) for l in AttackLabel}, expected)

    def test_suite_order(self):
        self.assertLess(SecuritySuite.Open, SecuritySuite.Wpa2Psk)
        self.assertLess(SecuritySuite.Wpa2Psk, SecuritySuite.Wpa3Sae)


class TestFrameInvariants(unittest.TestCase):

    def test_valid_frame_has_no_violations(self):
        rng = random.Random(2)
        for _ in range(200):
            self.assertEqual(random_frame(rng).invariant_violations(), [])

    def test_eapol_msg_on_non_eapol(self):
        f = Frame(0, 0, FrameKind.Authentication, MacAddr.zero(), MacAddr.zero(), MacAddr.zero(), eapol_msg=2)
        self.assertTrue(f.invariant_violations())

    def test_beacon_without_interval(self):
        self.assertTrue(zero_beacon().invariant_violations())

    def test_ap_profile_validation(self):
        with self.assertRaises(ValueError):
            ApProfile(MacAddr.zero(), "x", beacon_interval_tu=0)
        with self.assertRaises(ValueError):
            ApProfile(MacAddr.zero(), "x" * 33)
        self.assertFalse(ApProfile(MacAddr.zero(), "x").mfp_enabled)


class TestBinaryEncoding(unittest.TestCase):
    """Test encode_frame / decode_frame."""

    def test_zero_beacon_record(self):
        record = encode_frame(zero_beacon())
        self.assertEqual(len(record), MIN_RECORD_SIZE)
        self.assertEqual(len(record), 45)
        self.assertEqual(record, bytes(45))
        self.assertEqual(decode_frame(record), zero_beacon())

    def test_field_positions(self):
        f = Frame(
            frame_number=1, timestamp_us=2, kind=FrameKind.Eapol,
            src=MacAddr.parse("01:02:03:04:05:06"), dst=MacAddr.broadcast(), bssid=MacAddr.zero(),
            ssid="ab", suite=SecuritySuite.Wpa3Sae, eapol_msg=3, retry=True, label=AttackLabel.Krack,
        )
        record = encode_frame(f)
        self.assertEqual(len(record), 47)
        self.assertEqual(record[0:8], (1).to_bytes(8, "little"))
        self.assertEqual(record[8:16], (2).to_bytes(8, "little"))
        self.assertEqual(record[16], 9)
        self.assertEqual(record[17:23], bytes([1, 2, 3, 4, 5, 6]))
        self.assertEqual(record[35:37], (2).to_bytes(2, "little"))
        self.assertEqual(record[37:39], b"ab")
        self.assertEqual(record[39], 2)
        self.assertEqual(record[42], 3)
        self.assertEqual(record[43], 1)
        self.assertEqual(record[46], 4)

    def test_long_ssid_rejected(self):
        f = Frame(0, 0, FrameKind.Beacon, MacAddr.zero(), MacAddr.zero(), MacAddr.zero(),
                  ssid="x" * 33, beacon_interval_tu=100)
        with self.assertRaises(EncodingError):
            encode_frame(f)

    def test_multibyte_ssid_limit_is_bytes(self):
        f = Frame(0, 0, FrameKind.Beacon, MacAddr.zero(), MacAddr.zero(), MacAddr.zero(),
                  ssid="日" * 11, beacon_interval_tu=100)
        with self.assertRaises(EncodingError):
            encode_frame(f)

    def test_empty_input(self):
        with self.assertRaises(DecodeError):
            decode_frame(b"")

    def test_truncated_input(self):
        record = encode_frame(zero_beacon())
        for cut in (1, 20, 37, 44):
            with self.assertRaises(DecodeError) as ctx:
                decode_frame(record[:cut])
            self.assertIsNotNone(ctx.exception.offset)

    def test_bad_kind_byte(self):
        record = bytearray(encode_frame(zero_beacon()))
        record[16] = 0xFF
        with self.assertRaises(DecodeError) as ctx:
            decode_frame(bytes(record))
        self.assertEqual(ctx.exception.field, "kind")

    def test_bad_label_byte(self):
        record = bytearray(encode_frame(zero_beacon()))
        record[-1] = 6
        with self.assertRaises(DecodeError) as ctx:
            decode_frame(bytes(record))
        self.assertEqual(ctx.exception.field, "label")

    def test_trailing_bytes(self):
        with self.assertRaises(DecodeError):
            decode_frame(encode_frame(zero_beacon()) + b"\x00")

    def test_random_round_trip(self):
        rng = random.Random(3)
        for _ in range(10000):
            f = random_frame(rng)
            self.assertEqual(decode_frame(encode_frame(f)), f)

    def test_decode_from_offset(self):
        rng = random.Random(4)
        frames = [random_frame(rng) for _ in range(50)]
        data = encode_stream(frames)
        offset = 0
        for f in frames:
            decoded, offset = decode_frame_from(data, offset)
            self.assertEqual(decoded, f)
        self.assertEqual(offset, len(data))


class TestScenarioStream(unittest.TestCase):
    """Round-trip a generated scenario of more than 10,000 frames."""

    @classmethod
    def setUpClass(cls):
        cls.frames = gen_scenario(lab_scenario(ATTACK_LABELS, seed=5))

    def test_corpus_size(self):
        self.assertGreater(len(self.frames), 10000)

    def test_byte_identical_reencoding(self):
        data = encode_stream(self.frames)
        decoded = list(iter_stream(data))
        self.assertEqual(decoded, self.frames)
        self.assertEqual(encode_stream(decoded), data)

    def test_stream_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "frames.bin"
            size = write_stream(path, self.frames)
            self.assertEqual(size, path.stat().st_size)
            self.assertEqual(read_stream(path), self.frames)

    def test_csv_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "frames.csv"
            self.assertEqual(write_csv(path, self.frames), len(self.frames))
            self.assertEqual(read_csv(path), self.frames)
            with open(path, encoding="utf-8") as fh:
                self.assertEqual(fh.readline().strip(), ",".join(CSV_HEADER))


class TestCsv(unittest.TestCase):
    """Test frame_to_csv_row / csv_row_to_frame."""

    def test_header(self):
        self.assertEqual(
            ",".join(CSV_HEADER),
            "frame_number,timestamp_us,kind,src,dst,bssid,ssid,suite,beacon_interval_tu,"
            "eapol_msg,retry,reason_code,label",
        )

    def test_beacon_row(self):
        f = Frame(0, 0, FrameKind.Beacon, MacAddr.parse("02:00:00:00:00:01"), MacAddr.broadcast(),
                  MacAddr.parse("02:00:00:00:00:01"), ssid="lab", suite=SecuritySuite.Wpa3Sae,
                  beacon_interval_tu=100)
        row = frame_to_csv_row(f)
        self.assertTrue(row.startswith("0,0,Beacon,"))
        self.assertEqual(
            row, "0,0,Beacon,02:00:00:00:00:01,ff:ff:ff:ff:ff:ff,02:00:00:00:00:01,lab,Wpa3Sae,100,0,0,0,Normal"
        )
        self.assertEqual(csv_row_to_frame(row), f)

    def test_krack_label(self):
        row = "7,1000,Eapol,02:00:00:00:00:01,02:00:00:00:10:00,02:00:00:00:00:01,,Wpa2Psk,0,3,1,0,Krack"
        f = csv_row_to_frame(row)
        self.assertEqual(f.label, AttackLabel.Krack)
        self.assertEqual(f.eapol_msg, 3)
        self.assertTrue(f.retry)

    def test_quoted_ssid(self):
        f = Frame(1, 1, FrameKind.ProbeResponse, MacAddr.zero(), MacAddr.zero(), MacAddr.zero(),
                  ssid='a,"b"', beacon_interval_tu=50)
        self.assertEqual(csv_row_to_frame(frame_to_csv_row(f)), f)

    def test_random_round_trip(self):
        rng = random.Random(6)
        for _ in range(10000):
            f = random_frame(rng)
            self.assertEqual(csv_row_to_frame(frame_to_csv_row(f)), f)

    def test_wrong_column_count(self):
        with self.assertRaises(CsvError) as ctx:
            csv_row_to_frame("0,0,Beacon", line=4)
        self.assertEqual(ctx.exception.line, 4)

    def test_bad_column_is_named(self):
        good = frame_to_csv_row(zero_beacon())
        cases = {
            "src": good.replace("00:00:00:00:00:00", "zz", 1),
            "kind": good.replace("Beacon", "Bacon"),
            "timestamp_us": "0,-5" + good[3:],
            "label": good.replace("Normal", "Evil"),
        }
        for column, row in cases.items():
            with self.assertRaises(CsvError, msg=column) as ctx:
                csv_row_to_frame(row, line=9)
            self.assertEqual(ctx.exception.column, column)
            self.assertEqual(ctx.exception.line, 9)

    def test_read_csv_reports_line(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.csv"
            rows = [",".join(CSV_HEADER), frame_to_csv_row(zero_beacon()), "1,2,Nope,x,y,z,,Open,0,0,0,0,Normal"]
            path.write_text("\n".join(rows) + "\n", encoding="utf-8")
            with self.assertRaises(CsvError) as ctx:
                read_csv(path)
            self.assertEqual(ctx.exception.line, 3)

    def test_read_csv_header_checked(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.csv"
            path.write_text("a,b,c\n", encoding="utf-8")
            with self.assertRaises(CsvError):
                read_csv(path)

    def test_label_counts_lists_every_label(self):
        counts = label_counts([zero_beacon()])
        self.assertEqual(counts["Normal"], 1)
        self.assertEqual(set(counts), {l.name for l in AttackLabel})


if __name__ == '__main__':
    unittest.main()
