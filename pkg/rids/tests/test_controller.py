"""
Tests for batch classification, alarms, attribution and blocking.
"""

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from rids._types import ApProfile, AttackLabel, MacAddr
from rids.attacks import (
    LAB_AP, AttackSpec, inject_beacon_flood, inject_deauth_flood, inject_evil_twin, lab_attacker,
    lab_station,
)
from rids.controller import (
    Alarm, AlarmLog, BlockList, Controller, attribute_attacker, broadcast_block, handle_batch, vote,
)
from rids.errors import RidsError
from rids.fds import CaptureBatch

STATIONS = [lab_station(i) for i in range(3)]
KNOWN = {LAB_AP.bssid, *STATIONS}
SECOND_AP = ApProfile(MacAddr.parse("02:00:00:00:00:02"), "RIDS-Lab-2")


class FixedModel:
    """Returns the same prediction list for every batch."""

    def __init__(self, predictions):
        self.predictions = np.asarray(predictions, dtype=np.int64)

    def predict_many(self, X):
        return self.predictions[:len(X)]


class ConstantModel:
    def __init__(self, label):
        self.label = int(label)

    def predict_many(self, X):
        return np.full(len(X), self.label, dtype=np.int64)


def attack_batch(label, injector, start_s=9.0, end_s=9.5):
    spec = AttackSpec(label, lab_attacker(label), LAB_AP.bssid, target_sta=STATIONS[0],
                      start_s=start_s, end_s=end_s)
    return CaptureBatch(LAB_AP.bssid, trigger_quantum=int(start_s) - 1, frames=injector(spec, LAB_AP))


class TestVote(unittest.TestCase):
    """Test the majority rule."""

    def test_majority(self):
        label, share = vote([1] * 480 + [0] * 20)
        self.assertEqual(label, AttackLabel.Deauth)
        self.assertAlmostEqual(share, 0.96)

    def test_all_normal(self):
        self.assertIsNone(vote([0] * 100))
        self.assertIsNone(vote([]))

    def test_threshold_is_strict(self):
        self.assertIsNone(vote([5] * 100 + [0] * 400))
        self.assertEqual(vote([5] * 101 + [0] * 399)[0], AttackLabel.BeaconFlood)

    def test_tie_goes_to_lower_code(self):
        self.assertEqual(vote([4] * 150 + [1] * 150 + [0] * 200)[0], AttackLabel.Deauth)

    def test_custom_threshold(self):
        self.assertIsNone(vote([2] * 40 + [0] * 60, threshold=0.5))
        self.assertEqual(vote([2] * 40 + [0] * 60, threshold=0.3)[0], AttackLabel.RogueAp)


class TestHandleBatch(unittest.TestCase):

    def test_deauth_alarm(self):
        batch = attack_batch(AttackLabel.Deauth, inject_deauth_flood)
        frames = batch.frames[:500]
        batch = CaptureBatch(batch.ap_id, batch.trigger_quantum, frames)
        alarm = handle_batch(batch, FixedModel([1] * 480 + [0] * 20), LAB_AP, KNOWN)
        self.assertEqual(alarm.attack, AttackLabel.Deauth)
        self.assertAlmostEqual(alarm.confidence, 0.96)
        self.assertEqual(alarm.raised_at, batch.end_us)
        self.assertEqual(alarm.trigger_quantum, 8)
        # Every deauth spoofs the AP.
        self.assertIsNone(alarm.attacker)

    def test_no_intrusion(self):
        batch = attack_batch(AttackLabel.BeaconFlood, inject_beacon_flood)
        self.assertIsNone(handle_batch(batch, ConstantModel(AttackLabel.Normal), LAB_AP, KNOWN))

    def test_empty_batch(self):
        batch = CaptureBatch(LAB_AP.bssid, 3)
        self.assertIsNone(handle_batch(batch, ConstantModel(AttackLabel.Deauth), LAB_AP))

    def test_beacon_flood_attribution(self):
        batch = attack_batch(AttackLabel.BeaconFlood, inject_beacon_flood)
        alarm = handle_batch(batch, ConstantModel(AttackLabel.BeaconFlood), LAB_AP, KNOWN)
        self.assertEqual(alarm.attacker, lab_attacker(AttackLabel.BeaconFlood))
        self.assertEqual(alarm.confidence, 1.0)

    def test_evil_twin_attribution(self):
        batch = attack_batch(AttackLabel.EvilTwin, inject_evil_twin, start_s=9.0, end_s=12.0)
        truth = [int(f.label) for f in batch.frames]
        attacker = attribute_attacker(batch, AttackLabel.EvilTwin, truth, KNOWN)
        self.assertEqual(attacker, lab_attacker(AttackLabel.EvilTwin))

    def test_attribution_ignores_other_classes(self):
        batch = attack_batch(AttackLabel.BeaconFlood, inject_beacon_flood)
        preds = [int(AttackLabel.Normal)] * len(batch.frames)
        self.assertIsNone(attribute_attacker(batch, AttackLabel.BeaconFlood, preds, KNOWN))


class TestAlarm(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ValueError):
            Alarm(LAB_AP.bssid, AttackLabel.Normal, 0.5, None, 0)
        with self.assertRaises(ValueError):
            Alarm(LAB_AP.bssid, AttackLabel.Deauth, 0.0, None, 0)
        with self.assertRaises(ValueError):
            Alarm(LAB_AP.bssid, AttackLabel.Deauth, 1.5, None, 0)

    def test_log_line(self):
        alarm = Alarm(LAB_AP.bssid, AttackLabel.Krack, 0.5, None, 1234)
        self.assertEqual(alarm.log_line(), "1234\t02:00:00:00:00:01\tKrack\t0.5000\tunknown")


class TestBlockList(unittest.TestCase):
    """Test broadcast_block."""

    def test_idempotent(self):
        blocks = BlockList()
        mac = lab_attacker(AttackLabel.Deauth)
        broadcast_block(blocks, mac, [LAB_AP.bssid])
        broadcast_block(blocks, mac, [LAB_AP.bssid], blocked_at_us=99)
        self.assertEqual(len(blocks), 1)
        self.assertEqual(blocks.entries(), [(mac, 0)])
        self.assertIn(mac, blocks)

    def test_fan_out(self):
        aps = [MacAddr.from_int(0x020000000001 + i) for i in range(3)]
        _, notes = broadcast_block(BlockList(), lab_attacker(AttackLabel.RogueAp), aps, 5, AttackLabel.RogueAp)
        self.assertEqual(len(notes), 3)
        self.assertEqual([n.ap_id for n in notes], aps)
        self.assertTrue(all(n.reason == AttackLabel.RogueAp and n.blocked_at_us == 5 for n in notes))

    def test_empty_network(self):
        _, notes = broadcast_block(BlockList(), lab_attacker(AttackLabel.RogueAp), [])
        self.assertEqual(notes, [])


class TestController(unittest.TestCase):
    """Test the Controller object."""

    def test_alarm_blocks_attacker_everywhere(self):
        batch = attack_batch(AttackLabel.BeaconFlood, inject_beacon_flood)
        with tempfile.TemporaryDirectory() as tmp:
            log_path = Path(tmp) / "alarms.log"
            with Controller(ConstantModel(AttackLabel.BeaconFlood), aps=[LAB_AP, SECOND_AP],
                            stations=STATIONS, alarm_log=log_path) as ctl:
                alarm = ctl.process(batch)
                self.assertEqual(ctl.alarms, [alarm])
                self.assertIn(lab_attacker(AttackLabel.BeaconFlood), ctl.block_list)
                self.assertEqual(len(ctl.notifications), 2)
                self.assertEqual(len(ctl.batch_times_ms), 1)

                ctl.process(batch)
                self.assertEqual(len(ctl.alarms), 2)
                self.assertEqual(len(ctl.notifications), 2)

            logged = AlarmLog(log_path).read()
            self.assertEqual(len(logged), 2)
            self.assertEqual(logged[0].attack, AttackLabel.BeaconFlood)
            self.assertEqual(logged[0].attacker, lab_attacker(AttackLabel.BeaconFlood))
            self.assertEqual(logged[0].raised_at, batch.end_us)

    def test_no_block_without_attacker(self):
        batch = attack_batch(AttackLabel.Deauth, inject_deauth_flood)
        with Controller(ConstantModel(AttackLabel.Deauth), aps=[LAB_AP], stations=STATIONS) as ctl:
            alarm = ctl.process(batch)
            self.assertIsNone(alarm.attacker)
            self.assertEqual(len(ctl.block_list), 0)
            self.assertEqual(ctl.notifications, [])

    def test_unregistered_ap(self):
        batch = CaptureBatch(SECOND_AP.bssid, 0)
        with Controller(ConstantModel(AttackLabel.Normal), aps=[LAB_AP]) as ctl:
            with self.assertRaises(RidsError):
                ctl.process(batch)

    def test_process_many_keeps_order(self):
        flood = attack_batch(AttackLabel.BeaconFlood, inject_beacon_flood)
        quiet = CaptureBatch(LAB_AP.bssid, 1)
        batches = [flood, quiet, flood, quiet]
        with Controller(ConstantModel(AttackLabel.BeaconFlood), aps=[LAB_AP]) as ctl:
            results = ctl.process_many(batches)
        self.assertEqual([r is not None for r in results], [True, False, True, False])


if __name__ == '__main__':
    unittest.main()
