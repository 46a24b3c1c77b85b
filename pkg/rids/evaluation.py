"""
Train/test splitting and classifier evaluation: confusion matrix, accuracy
and the binary intrusion-vs-normal FPR/TPR pair.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from ._types import AttackLabel
from .errors import DomainError
from .features import LabeledVector, vectors_to_matrix

N_CLASSES = len(AttackLabel)
DEFAULT_TEST_FRACTION = 0.3

T = TypeVar("T")


@dataclass(frozen=True)
class EvalReport:
    """
    Evaluation of one model on one test set.

    ``confusion[i][j]`` counts samples of true class i predicted as class j.
    """
    accuracy: float
    confusion: Tuple[Tuple[int, ...], ...]
    fpr: float
    tpr: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.confusion, dtype=np.int64)

    @property
    def n_samples(self) -> int:
        return int(self.matrix.sum())

    def class_counts(self) -> Dict[str, int]:
        rows = self.matrix.sum(axis=1)
        return {label.name: int(rows[label]) for label in AttackLabel}

    def recall(self) -> Dict[str, Optional[float]]:
        """Per-class recall; None for classes absent from the test set."""
        m = self.matrix
        out = {}
        for label in AttackLabel:
            total = m[label].sum()
            out[label.name] = float(m[label, label] / total) if total else None
        return out


def report_from_predictions(y_true: Sequence[int], y_pred: Sequence[int]) -> EvalReport:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred differ in length")
    if len(y_true) == 0:
        raise DomainError("cannot evaluate on an empty test set")
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)

    normal = int(AttackLabel.Normal)
    is_normal = y_true == normal
    flagged = y_pred != normal
    n_normal = int(is_normal.sum())
    n_attack = len(y_true) - n_normal
    fpr = float(np.sum(flagged & is_normal) / n_normal) if n_normal else 0.0
    tpr = float(np.sum(flagged & ~is_normal) / n_attack) if n_attack else 0.0
    return EvalReport(
        accuracy=float(np.trace(confusion) / len(y_true)),
        confusion=tuple(tuple(int(c) for c in row) for row in confusion),
        fpr=fpr,
        tpr=tpr,
    )


def evaluate(model, test: Union[List[LabeledVector], Tuple[np.ndarray, np.ndarray]]) -> EvalReport:
    """Predict every test vector and score the predictions."""
    if isinstance(test, tuple):
        X, y = test
    else:
        X, y = vectors_to_matrix(test)
    if len(y) == 0:
        raise DomainError("cannot evaluate on an empty test set")
    return report_from_predictions(y, model.predict_many(X))


def stratified_indices(y: Sequence[int], test_fraction: float = DEFAULT_TEST_FRACTION,
                       seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split sample indices so each label keeps ``test_fraction`` of its samples
    in the test part.

    Returns:
        Tuple of (train indices, test indices), each sorted
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be strictly between 0 and 1")
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == label))
        n_test = int(round(len(idx) * test_fraction))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    if not train:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(data: List[T], labels: Optional[Sequence[int]] = None,
                     test_fraction: float = DEFAULT_TEST_FRACTION,
                     seed: int = 0) -> Tuple[List[T], List[T]]:
    """Stratified split of LabeledVectors (or any items with ``labels`` given)."""
    if labels is None:
        labels = [int(v.label) for v in data]
    train_idx, test_idx = stratified_indices(labels, test_fraction, seed)
    return [data[i] for i in train_idx], [data[i] for i in test_idx]


def balance_by_label(vectors: List[LabeledVector], per_label: Optional[int] = None,
                     seed: int = 0) -> List[LabeledVector]:
    """
    Downsample every label to ``per_label`` samples (default: the rarest
    label's count). Original order is kept.
    """
    if not vectors:
        return []
    y = np.array([int(v.label) for v in vectors], dtype=np.int64)
    present = np.unique(y)
    cap = per_label if per_label is not None else min(int(np.sum(y == c)) for c in present)
    rng = np.random.default_rng(seed)
    keep = []
    for label in present:
        idx = np.flatnonzero(y == label)
        if len(idx) > cap:
            idx = rng.choice(idx, size=cap, replace=False)
        keep.append(idx)
    return [vectors[i] for i in np.sort(np.concatenate(keep))]


def format_report(reports: Dict[str, EvalReport]) -> str:
    """
    Plain-text comparison table (classifier, accuracy, FPR, TPR) followed by
    each classifier's confusion matrix.
    """
    names = [label.name for label in AttackLabel]
    width = max([len("Classifier")] + [len(name) for name in reports])
    lines = [
        f"{'Classifier':<{width}}  {'Accuracy':>9}  {'FPR':>9}  {'TPR':>9}",
        "-" * (width + 33),
    ]
    for name, report in reports.items():
        lines.append(f"{name:<{width}}  {report.accuracy:>9.5f}  {report.fpr:>9.5f}  {report.tpr:>9.5f}")

    cell = max(len(n) for n in names) + 1
    for name, report in reports.items():
        lines.append("")
        lines.append(f"Confusion matrix: {name} (rows = true, columns = predicted)")
        lines.append(" " * cell + "".join(f"{n:>{cell}}" for n in names))
        for label, row in zip(names, report.confusion):
            lines.append(f"{label:<{cell}}" + "".join(f"{c:>{cell}}" for c in row))
    return "\n".join(lines) + "\n"


def report_csv_header() -> List[str]:
    names = [label.name for label in AttackLabel]
    return ["model", "accuracy", "fpr", "tpr", "n_samples"] + [
        f"{t}->{p}" for t in names for p in names
    ]


def write_report_csv(path: Union[str, Path], reports: Dict[str, EvalReport]) -> None:
    """One row per model: scalar metrics then the flattened confusion matrix."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(report_csv_header())
        for name, report in reports.items():
            writer.writerow(
                [name, repr(report.accuracy), repr(report.fpr), repr(report.tpr), report.n_samples]
                + [c for row in report.confusion for c in row]
            )


def read_report_csv(path: Union[str, Path]) -> Dict[str, EvalReport]:
    reports = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != report_csv_header():
            raise DomainError(f"{path}: not an evaluation report")
        for row in reader:
            cells = [int(c) for c in row[5:]]
            confusion = tuple(tuple(cells[i * N_CLASSES:(i + 1) * N_CLASSES]) for i in range(N_CLASSES))
            reports[row[0]] = EvalReport(float(row[1]), confusion, float(row[2]), float(row[3]))
    return reports
