from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..delay import ClassBoundaries
from .dataset import Dataset


@dataclass
class Metrics:
    accuracy: float
    f1_weighted: float
    confusion: np.ndarray   # rows: true class, columns: predicted class
    f1_per_class: np.ndarray


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    return np.bincount(y_true * n_classes + y_pred,
                       minlength=n_classes * n_classes).reshape(n_classes, n_classes)


def metrics_from_labels(y_true, y_pred, n_classes: int) -> Metrics:
    cm = confusion_matrix(y_true, y_pred, n_classes)
    total = cm.sum()
    if total == 0:
        raise ValueError("empty evaluation set")
    tp = np.diag(cm).astype(np.float64)
    pred_n = cm.sum(axis=0)
    true_n = cm.sum(axis=1)
    f1 = np.zeros(n_classes)
    for k in range(n_classes):
        p = tp[k] / pred_n[k] if pred_n[k] else 0.0
        r = tp[k] / true_n[k] if true_n[k] else 0.0
        f1[k] = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return Metrics(float(tp.sum() / total), float((f1 * true_n).sum() / total), cm, f1)


def evaluate(model, test: Dataset) -> Metrics:
    if len(test) == 0:
        raise ValueError("empty evaluation set")
    return metrics_from_labels(test.y, model.predict_batch(test.X), test.n_classes)


def estimate_static_speedup(preds, trues, bounds: ClassBoundaries, replay_cycles: int = 4) -> float:
    """Percent speed-up over always clocking at the worst case.

    A correctly or pessimistically classified instruction costs its predicted
    class period; an optimistic miss also pays ``replay_cycles`` worst-case
    periods.
    """
    preds = np.asarray(preds, dtype=np.int64)
    trues = np.asarray(trues, dtype=np.int64)
    if preds.shape != trues.shape:
        raise ValueError("preds and trues differ in length")
    if preds.size == 0:
        return 0.0
    ups = np.asarray(bounds.uppers)
    cost = ups[preds] + np.where(trues > preds, replay_cycles * bounds.t_wc, 0.0)
    return 100.0 * (preds.size * bounds.t_wc / cost.sum() - 1.0)
