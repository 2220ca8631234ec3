"""Confusion matrices and macro precision/recall/F1 at label and group level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activities import (
    NUM_ACTIVITIES,
    NUM_GROUPS,
    ActivityGroup,
    ActivityLabel,
    GroupMap,
    group_of,
)


def confusion(preds, truth, k: int) -> np.ndarray:
    """k x k count matrix with rows = truth, columns = prediction."""
    preds = np.asarray(preds, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if preds.shape != truth.shape or preds.ndim != 1:
        raise ValueError(
            f"prediction/truth length mismatch: {preds.shape} vs {truth.shape}"
        )
    if preds.size and (
        preds.min() < 0 or preds.max() >= k or truth.min() < 0 or truth.max() >= k
    ):
        raise ValueError(f"label codes out of range for k={k}")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (truth, preds), 1)
    return cm


@dataclass
class MacroMetrics:
    """Accuracy plus unweighted per-class macro averages.

    ``macro_f1`` is the mean of per-class F1 scores; ``macro_f1_from_means``
    is the harmonic mean of macro precision and macro recall, exposed because
    reported numbers elsewhere do not always say which convention they use.
    Classes with a zero denominator contribute 0, not NaN.
    """

    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_f1_from_means: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray


def macro_metrics(cm: np.ndarray) -> MacroMetrics:
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise ValueError("confusion matrix is empty")
    k = cm.shape[0]
    tp = np.diag(cm).astype(float)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    precision = np.divide(tp, tp + fp, out=np.zeros(k), where=(tp + fp) > 0)
    recall = np.divide(tp, tp + fn, out=np.zeros(k), where=(tp + fn) > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(k), where=pr > 0)
    mp = float(precision.mean())
    mr = float(recall.mean())
    from_means = 2 * mp * mr / (mp + mr) if mp + mr > 0 else 0.0
    return MacroMetrics(
        accuracy=float(tp.sum() / total),
        macro_precision=mp,
        macro_recall=mr,
        macro_f1=float(f1.mean()),
        macro_f1_from_means=from_means,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def collapse_to_groups(cm: np.ndarray, gmap: GroupMap | None = None) -> np.ndarray:
    """Sum 12-class confusion cells into the 5-group matrix; totals preserved."""
    cm = np.asarray(cm)
    if cm.shape != (NUM_ACTIVITIES, NUM_ACTIVITIES):
        raise ValueError(f"expected a 12x12 matrix, got {cm.shape}")
    out = np.zeros((NUM_GROUPS, NUM_GROUPS), dtype=cm.dtype)
    codes = np.array(
        [group_of(ActivityLabel(i), gmap).value for i in range(NUM_ACTIVITIES)]
    )
    for t in range(NUM_ACTIVITIES):
        for p in range(NUM_ACTIVITIES):
            out[codes[t], codes[p]] += cm[t, p]
    return out


def confusion_to_csv(cm: np.ndarray, names: list[str]) -> str:
    """CSV rendering with named truth rows and prediction columns."""
    if len(names) != cm.shape[0]:
        raise ValueError("one name per class required")
    lines = ["truth\\pred," + ",".join(names)]
    for i, name in enumerate(names):
        lines.append(name + "," + ",".join(str(int(v)) for v in cm[i]))
    return "\n".join(lines) + "\n"


def metrics_table(m: MacroMetrics, title: str) -> str:
    """One-row overview table (accuracy and the three macro averages)."""
    header = f"{'':<12}{'Accuracy':>10}{'MacroPrec':>11}{'MacroRec':>10}{'MacroF1':>9}"
    row = (
        f"{title:<12}{m.accuracy:>10.4f}{m.macro_precision:>11.4f}"
        f"{m.macro_recall:>10.4f}{m.macro_f1:>9.4f}"
    )
    return header + "\n" + row


def per_class_table(m: MacroMetrics, names: list[str]) -> str:
    """Per-class precision/recall/F1 listing."""
    lines = [f"{'class':<20}{'Prec':>8}{'Rec':>8}{'F1':>8}"]
    for i, name in enumerate(names):
        lines.append(
            f"{name:<20}{m.precision[i]:>8.4f}{m.recall[i]:>8.4f}{m.f1[i]:>8.4f}"
        )
    return "\n".join(lines)


LABEL_NAMES = [a.key for a in ActivityLabel]
GROUP_NAMES = [g.key for g in ActivityGroup]
