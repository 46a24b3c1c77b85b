"""
RIDS - a desk-scale WLAN intrusion-detection lab.

Simulates WPA2/WPA3 management-frame traffic with five injected attacks
(deauthentication flood, rogue AP, evil twin, KRACK, beacon flood), runs the
two-checkpoint detection pipeline (per-AP flood detection, then a controller
side classifier) and measures detection quality.
"""

__version__ = "0.2.1"

from ._types import (
    ApProfile, AttackLabel, BlockNotification, Frame, FrameKind, MacAddr, SecuritySuite,
)
from .errors import RidsError
from .frames import decode_frame, encode_frame, frame_to_csv_row, csv_row_to_frame
from .handshake import connect_sequence, validate_rsne, ValidationResult
from .attacks import AttackSpec, FlashCrowdSpec, ScenarioConfig, gen_baseline, gen_scenario, lab_scenario
from .config import load_config, parse_config
from .fds import CaptureBatch, FloodDetector, QuantumStats, TriggerDecision
from .features import FEATURE_NAMES, FeatureVector, LabeledVector, extract_window
from .classifier import (
    ForestModel, LogRegModel, TreeModel, fit_forest, fit_logreg, fit_tree, predict,
    deserialize_model, serialize_model, load_model, save_model,
)
from .evaluation import EvalReport, evaluate, stratified_split
from .controller import Alarm, BlockList, Controller, handle_batch
from .pipeline import RunReport, build_corpus, replay

__all__ = [
    "ApProfile",
    "AttackLabel",
    "BlockNotification",
    "Frame",
    "FrameKind",
    "MacAddr",
    "SecuritySuite",
    "RidsError",
    "decode_frame",
    "encode_frame",
    "frame_to_csv_row",
    "csv_row_to_frame",
    "connect_sequence",
    "validate_rsne",
    "ValidationResult",
    "AttackSpec",
    "FlashCrowdSpec",
    "ScenarioConfig",
    "gen_baseline",
    "gen_scenario",
    "lab_scenario",
    "load_config",
    "parse_config",
    "CaptureBatch",
    "FloodDetector",
    "QuantumStats",
    "TriggerDecision",
    "FEATURE_NAMES",
    "FeatureVector",
    "LabeledVector",
    "extract_window",
    "ForestModel",
    "LogRegModel",
    "TreeModel",
    "fit_forest",
    "fit_logreg",
    "fit_tree",
    "predict",
    "deserialize_model",
    "serialize_model",
    "load_model",
    "save_model",
    "EvalReport",
    "evaluate",
    "stratified_split",
    "Alarm",
    "BlockList",
    "Controller",
    "handle_batch",
    "RunReport",
    "build_corpus",
    "replay",
]
