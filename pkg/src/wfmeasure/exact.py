"""Brute-force weighted F-measure.

Every quantity is computed straight from its pixel-pair definition with
O(n^2) work, so this module is slow on purpose.  It is the reference the
fast approximation in :mod:`wfmeasure.approx` is checked against.
"""

from __future__ import annotations

import dataclasses
from typing import Iterator, Optional

import numpy as np

from .errors import OracleSizeError, ParameterError, UndefinedMetricError
from .grid import as_mask, as_prediction, check_same_shape, gaussian_weight
from .params import DeltaMode, ErrorNorm, WfmParams

#: largest pixel count the dense oracle accepts without an explicit override
ORACLE_MAX_PIXELS = 128 * 128

# rows of A materialised at once by the chunked product
_CHUNK_ELEMENTS = 1 << 18


@dataclasses.dataclass(frozen=True)
class WeightedCounts:
    tp_w: float
    fp_w: float
    fn_w: float
    tn_w: float
    p_w: float
    r_w: float
    f_w: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def weighted_counts(ew: np.ndarray, y: np.ndarray, beta: float) -> WeightedCounts:
    """Turn a weighted error map into TP/FP/FN/TN, precision, recall and F.

    When TP^w is 0 both precision and recall vanish and F is defined as 0.
    """
    ew = ew.ravel()
    y = y.ravel()
    bg = 1.0 - y
    tp = float(np.dot(1.0 - ew, y))
    fn = float(np.dot(ew, y))
    fp = float(np.dot(ew, bg))
    tn = float(np.dot(1.0 - ew, bg))
    if tp <= 0.0:
        return WeightedCounts(tp, fp, fn, tn, 0.0, 0.0, 0.0)
    p = tp / (tp + fp)
    r = tp / (tp + fn)
    b2 = beta * beta
    f = (1.0 + b2) * p * r / (b2 * p + r)
    return WeightedCounts(tp, fp, fn, tn, p, r, f)


def error_map(y, yhat, norm: ErrorNorm = ErrorNorm.L2) -> np.ndarray:
    y = as_mask(y, "ground truth")
    yhat = as_prediction(yhat)
    check_same_shape(y, yhat)
    diff = yhat - y
    if ErrorNorm(norm) is ErrorNorm.L1:
        return np.abs(diff)
    return diff * diff


def _require_foreground(y: np.ndarray) -> None:
    if not np.any(y > 0.5):
        raise UndefinedMetricError("ground truth has no foreground pixels; the weighted F-measure is undefined")


def _check_size(y: np.ndarray, allow_large: bool) -> None:
    if y.size > ORACLE_MAX_PIXELS and not allow_large:
        raise OracleSizeError(
            f"image has {y.size} pixels; the dense oracle is capped at {ORACLE_MAX_PIXELS} "
            "(pass allow_large=True to override)"
        )


def _coords(shape) -> np.ndarray:
    rr, cc = np.indices(shape, dtype=np.float64)
    return np.stack([rr.ravel(), cc.ravel()], axis=1)


def _matrix_a_rows(
    coords: np.ndarray, yflat: np.ndarray, rows, params: WfmParams, cols=None
) -> np.ndarray:
    """Block of the n x n matrix A: rows j in ``rows``, columns i in ``cols`` (default all)."""
    idx = np.arange(yflat.size)
    rows = np.atleast_1d(idx[rows])
    cols = idx if cols is None else np.atleast_1d(idx[cols])
    cj = coords[rows]
    ci = coords[cols]
    d2 = np.subtract.outer(cj[:, 0], ci[:, 0])
    d2 *= d2
    dc = np.subtract.outer(cj[:, 1], ci[:, 1])
    dc *= dc
    d2 += dc
    block = gaussian_weight(d2, params.resolved_sigma, params.exponent_form)
    fg_j = yflat[rows] > 0.5
    block *= fg_j[:, None] & (yflat[cols] > 0.5)[None, :]
    # identity on background pixels: A_ii = 1 where y_i = 0
    r_pos, c_pos = np.nonzero((rows[:, None] == cols[None, :]) & ~fg_j[:, None])
    block[r_pos, c_pos] = 1.0
    return block


def _row_chunks(index: np.ndarray, n_cols: int) -> Iterator[np.ndarray]:
    step = max(1, _CHUNK_ELEMENTS // max(n_cols, 1))
    for start in range(0, len(index), step):
        yield index[start:start + step]


def build_matrix_a(y, params: WfmParams = WfmParams(), allow_large: bool = False) -> np.ndarray:
    """Dense n x n matrix A; entry [j, i] is A_ji (pixels in row-major order)."""
    y = as_mask(y, "ground truth")
    _check_size(y, allow_large)
    yflat = y.ravel()
    coords = _coords(y.shape)
    n = yflat.size
    out = np.empty((n, n))
    for rows in _row_chunks(np.arange(n), n):
        out[rows] = _matrix_a_rows(coords, yflat, rows, params)
    return out


def error_times_a(e, y, params: WfmParams = WfmParams(), allow_large: bool = False) -> np.ndarray:
    """The product (E A)_i = sum_j E_j A_ji, built from row blocks of A.

    Equivalent to ``e.ravel() @ build_matrix_a(y)`` without holding all of A.
    Only the foreground x foreground block of A holds Gaussian weights; a
    background row j is the unit vector e_j and a background column i of a
    foreground row is zero, so background pixels take E_i directly and the
    foreground block is built entry by entry.
    """
    y = as_mask(y, "ground truth")
    e = np.asarray(e, dtype=np.float64)
    check_same_shape(y, e)
    _check_size(y, allow_large)
    yflat = y.ravel()
    eflat = e.ravel()
    coords = _coords(y.shape)
    fg = yflat > 0.5
    fg_idx = np.nonzero(fg)[0]
    acc = np.where(fg, 0.0, eflat)
    fg_acc = np.zeros(len(fg_idx))
    for rows in _row_chunks(fg_idx, len(fg_idx)):
        fg_acc += eflat[rows] @ _matrix_a_rows(coords, yflat, rows, params, cols=fg_idx)
    acc[fg_idx] = fg_acc
    return acc.reshape(y.shape)


def nearest_foreground_delta(y, params: WfmParams = WfmParams()) -> np.ndarray:
    """Per-pixel distance term for the false-positive weight, by exhaustive search.

    ``PLAIN_UNBOUNDED``: Euclidean distance to the nearest foreground pixel.
    ``SQUARED_BANDED``: squared distance to the nearest foreground pixel
    with |dr|, |dc| <= phi, ``inf`` if there is none.
    """
    y = as_mask(y, "ground truth")
    _require_foreground(y)
    coords = _coords(y.shape)
    fg = coords[y.ravel() > 0.5]
    banded = params.delta_mode is DeltaMode.SQUARED_BANDED
    out = np.empty(y.size)
    step = max(1, _CHUNK_ELEMENTS // len(fg))
    for start in range(0, y.size, step):
        c = coords[start:start + step]
        dr = c[:, 0:1] - fg[None, :, 0]
        dc = c[:, 1:2] - fg[None, :, 1]
        d2 = dr * dr + dc * dc
        if banded:
            outside = (np.abs(dr) > params.phi) | (np.abs(dc) > params.phi)
            d2[outside] = np.inf
            out[start:start + step] = d2.min(axis=1)
        else:
            out[start:start + step] = np.sqrt(d2.min(axis=1))
    return out.reshape(y.shape)


def build_vector_b(y, params: WfmParams = WfmParams()) -> np.ndarray:
    """False-positive weights: 1 on foreground, 2 - exp(alpha * delta) elsewhere."""
    y = as_mask(y, "ground truth")
    delta = nearest_foreground_delta(y, params)
    with np.errstate(invalid="ignore"):
        bg_weight = 2.0 - np.exp(params.alpha * delta)  # exp(-inf) == 0
    return np.where(y > 0.5, 1.0, bg_weight)


def weighted_error(e, a: np.ndarray, b) -> np.ndarray:
    """E^w = min(E A, E) * B with a dense A."""
    e = np.asarray(e, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(e, b)
    n = e.size
    if a.shape != (n, n):
        raise ParameterError(f"matrix A must be {n}x{n}, got {a.shape}")
    ea = (e.ravel() @ a).reshape(e.shape)
    return np.minimum(ea, e) * b


def fw_beta_exact(
    y, yhat, params: WfmParams = WfmParams(), allow_large: bool = False
) -> WeightedCounts:
    """Weighted F-measure by brute force.

    Raises :class:`UndefinedMetricError` for an all-background ground truth
    and :class:`OracleSizeError` for images above ``ORACLE_MAX_PIXELS``
    unless ``allow_large`` is set.
    """
    y = as_mask(y, "ground truth")
    yhat = as_prediction(yhat)
    check_same_shape(y, yhat)
    _require_foreground(y)
    _check_size(y, allow_large)
    e = error_map(y, yhat, params.error_norm)
    ea = error_times_a(e, y, params, allow_large=True)
    b = build_vector_b(y, params)
    ew = np.minimum(ea, e) * b
    return weighted_counts(ew, y, params.beta)


def exact_score(y, yhat, params: Optional[WfmParams] = None, allow_large: bool = False) -> float:
    return fw_beta_exact(y, yhat, params or WfmParams(), allow_large).f_w
