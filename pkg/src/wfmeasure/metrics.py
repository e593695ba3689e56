"""Conventional saliency metrics and dataset-level aggregation."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .approx import afw_forward
from .errors import UndefinedMetricError
from .grid import as_mask, as_prediction, check_same_shape
from .params import WfmParams

#: beta^2 of the thresholded F-measure reported for saliency benchmarks
SALIENCY_BETA_SQ = 0.3

COLUMNS = ("mae", "auroc", "fbeta_max", "best_threshold", "iou_at_half", "fw1")


def _pair(y, yhat) -> Tuple[np.ndarray, np.ndarray]:
    y = as_mask(y, "ground truth")
    yhat = as_prediction(yhat)
    check_same_shape(y, yhat)
    return y, yhat


def _require_foreground(y: np.ndarray) -> None:
    if not np.any(y > 0.5):
        raise UndefinedMetricError("ground truth has no foreground pixels")


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(yhat - y)))


def auroc(y, yhat) -> float:
    """Area under the ROC curve via the Mann-Whitney rank-sum statistic.

    Tied scores count one half, so this equals the fraction of
    (foreground, background) pixel pairs the prediction orders correctly.
    """
    y, yhat = _pair(y, yhat)
    pos = y.ravel() > 0.5
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both foreground and background pixels")
    ranks = rankdata(yhat.ravel(), method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def fbeta_max(y, yhat, beta_sq: float = SALIENCY_BETA_SQ, levels: Optional[int] = None) -> Tuple[float, float]:
    """Best thresholded F-measure and the threshold that reaches it.

    A pixel passes threshold ``t`` when ``yhat > t``.  By default the sweep
    covers 0 and every distinct prediction value, which finds the exact
    optimum.  ``levels=256`` sweeps ``k/255`` instead, like fixed-grid
    benchmark scripts.  Ties go to the smallest threshold.
    """
    y, yhat = _pair(y, yhat)
    _require_foreground(y)
    scores = yhat.ravel()
    pos = y.ravel() > 0.5
    n_pos = int(pos.sum())

    if levels is None:
        thresholds = np.union1d(np.unique(scores), [0.0])
    else:
        thresholds = np.arange(levels, dtype=np.float64) / (levels - 1)

    # number of positives / all pixels with score strictly above each threshold
    pos_sorted = np.sort(scores[pos])
    all_sorted = np.sort(scores)
    tp = n_pos - np.searchsorted(pos_sorted, thresholds, side="right")
    predicted = scores.size - np.searchsorted(all_sorted, thresholds, side="right")

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
        recall = tp / n_pos
        f = np.where(
            tp > 0,
            (1.0 + beta_sq) * precision * recall / (beta_sq * precision + recall),
            0.0,
        )
    best = int(np.argmax(f))
    return float(f[best]), float(thresholds[best])


def iou_at_half(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    _require_foreground(y)
    pred = yhat > 0.5
    gt = y > 0.5
    return float(np.sum(pred & gt) / np.sum(pred | gt))


def fw1_eval(y, yhat, params: WfmParams = WfmParams()) -> float:
    """Weighted F_1 evaluated with the truncated (convolutional) weights."""
    f, _ = afw_forward(y, yhat, params.replace(beta=1.0))
    return f


@dataclasses.dataclass
class ImageMetrics:
    image_id: str
    mae: float
    auroc: float
    fbeta_max: float
    best_threshold: float
    iou_at_half: float
    fw1: float

    def row(self) -> List[float]:
        return [getattr(self, c) for c in COLUMNS]


@dataclasses.dataclass
class MetricsReport:
    per_image: List[ImageMetrics]
    aggregate: dict
    params: WfmParams
    errors: List[dict] = dataclasses.field(default_factory=list)
    beta_sq: float = SALIENCY_BETA_SQ

    def to_dict(self) -> dict:
        return {
            "per_image": [dataclasses.asdict(m) for m in self.per_image],
            "aggregate": dict(self.aggregate),
            "params": self.params.to_dict(),
            "fbeta_beta_sq": self.beta_sq,
            "errors": list(self.errors),
        }


def evaluate_image(
    image_id: str, y, yhat, params: WfmParams = WfmParams(), beta_sq: float = SALIENCY_BETA_SQ
) -> ImageMetrics:
    f, thr = fbeta_max(y, yhat, beta_sq)
    return ImageMetrics(
        image_id=image_id,
        mae=mae(y, yhat),
        auroc=auroc(y, yhat),
        fbeta_max=f,
        best_threshold=thr,
        iou_at_half=iou_at_half(y, yhat),
        fw1=fw1_eval(y, yhat, params),
    )


def aggregate(rows: Sequence[ImageMetrics]) -> dict:
    """Column means; images are summed in id order so the result is order-independent."""
    rows = sorted(rows, key=lambda m: m.image_id)
    if not rows:
        return {c: float("nan") for c in COLUMNS}
    table = np.array([m.row() for m in rows], dtype=np.float64)
    return {c: float(v) for c, v in zip(COLUMNS, table.mean(axis=0))}


def evaluate_dataset(
    pairs: Iterable[Tuple[str, object, object]],
    params: WfmParams = WfmParams(),
    beta_sq: float = SALIENCY_BETA_SQ,
    jobs: int = 1,
) -> MetricsReport:
    """Evaluate ``(image_id, y, yhat)`` triples.

    ``y``/``yhat`` may be arrays or zero-argument callables that load them;
    a failure on one image is recorded in ``errors`` and does not stop the
    rest of the batch.
    """

    def one(item):
        image_id, y, yhat = item
        try:
            y = y() if callable(y) else y
            yhat = yhat() if callable(yhat) else yhat
            return evaluate_image(image_id, y, yhat, params, beta_sq), None
        except Exception as exc:  # noqa: BLE001 - reported per image
            return None, {"id": image_id, "error": f"{type(exc).__name__}: {exc}"}

    items = list(pairs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]

    per_image = sorted((m for m, _ in results if m is not None), key=lambda m: m.image_id)
    errors = sorted((e for _, e in results if e is not None), key=lambda e: e["id"])
    return MetricsReport(per_image, aggregate(per_image), params, errors, beta_sq)
