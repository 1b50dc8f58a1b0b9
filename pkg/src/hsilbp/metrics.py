"""Confusion matrix, OA / AA / Cohen's kappa, and Monte Carlo aggregation."""
from __future__ import annotations

from dataclasses import dataclass, field
import warnings

import numpy as np

from hsilbp.errors import (
    DimensionMismatchError,
    EmptyEvaluationError,
    InvalidLabelError,
    UnlabeledPredictionError,
)
from hsilbp.hsidata import LabelField


class MetricWarning(UserWarning):
    pass


@dataclass
class RunReport:
    oa: float
    aa: float
    kappa: float
    per_class: np.ndarray
    timing: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    run: int = 0
    stage: str = "spatial"


def _as_array(labels):
    return labels.labels if isinstance(labels, LabelField) else np.asarray(labels)


def confusion(truth, pred, eval_indices, num_classes=None):
    """Counts[a-1, b-1] = number of evaluated pixels with truth a predicted as b."""
    t, p = _as_array(truth), _as_array(pred)
    if t.shape != p.shape:
        raise DimensionMismatchError(f"truth {t.shape} and prediction {p.shape} differ")
    if num_classes is None:
        num_classes = truth.num_classes if isinstance(truth, LabelField) else int(t.max())
    idx = np.asarray(eval_indices, dtype=np.int64).reshape(-1, 2)
    tv, pv = t[idx[:, 0], idx[:, 1]], p[idx[:, 0], idx[:, 1]]
    if (tv == 0).any():
        raise InvalidLabelError("evaluation set contains background pixels")
    if (pv == 0).any():
        raise UnlabeledPredictionError("prediction is 0 (unlabeled) on an evaluated pixel")
    M = int(num_classes)
    if tv.size and (max(tv.max(), pv.max()) > M):
        raise InvalidLabelError(f"label exceeds num_classes={M}")
    return np.bincount((tv - 1) * M + (pv - 1), minlength=M * M).reshape(M, M)


def _total(cm):
    cm = np.asarray(cm)
    total = cm.sum()
    if total <= 0:
        raise EmptyEvaluationError("confusion matrix is empty")
    return cm, total


def overall_accuracy(cm):
    cm, total = _total(cm)
    return float(np.trace(cm) / total)


def per_class_accuracy(cm):
    """Row recalls; NaN for classes with no evaluated pixels."""
    cm, _ = _total(cm)
    rows = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, np.diag(cm) / np.maximum(rows, 1), np.nan)


def average_accuracy(cm):
    recall = per_class_accuracy(cm)
    present = ~np.isnan(recall)
    if not present.all():
        missing = (np.flatnonzero(~present) + 1).tolist()
        warnings.warn(f"classes {missing} have no evaluated pixels; excluded from AA", MetricWarning, stacklevel=2)
    return float(recall[present].mean())


def kappa(cm):
    cm, total = _total(cm)
    cm = cm.astype(np.float64)
    p_o = np.trace(cm) / total
    p_e = float(cm.sum(axis=1) @ cm.sum(axis=0)) / total**2
    if p_e >= 1.0:
        warnings.warn("degenerate single-class agreement; kappa set by convention", MetricWarning, stacklevel=2)
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def evaluate(truth, pred, eval_indices, num_classes=None, **extra):
    cm = confusion(truth, pred, eval_indices, num_classes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MetricWarning)
        aa = average_accuracy(cm)
        k = kappa(cm)
    return RunReport(overall_accuracy(cm), aa, k, per_class_accuracy(cm), **extra)


def aggregate(reports):
    """Mean and sample standard deviation (n - 1; 0 for a single run) of OA, AA, kappa and per-class accuracy."""
    if not reports:
        raise EmptyEvaluationError("no reports to aggregate")
    out = {}
    for name in ("oa", "aa", "kappa"):
        vals = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        out[name] = (float(vals.mean()), float(vals.std(ddof=1)) if len(vals) > 1 else 0.0)
    pc = np.array([r.per_class for r in reports], dtype=np.float64)
    out["per_class"] = (
        np.nanmean(pc, axis=0) if len(pc) else pc,
        np.nanstd(pc, axis=0, ddof=1) if len(pc) > 1 else np.zeros(pc.shape[1]),
    )
    return out
