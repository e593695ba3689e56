"""Convolutional approximation of the weighted F-measure and its gradient.

The n x n matrix product E A is replaced by a truncated Gaussian convolution
restricted to the foreground, and the nearest-foreground search behind B by a
(2*phi+1)^2 windowed minimum.  Forward cost is O(n * theta^2 + n * phi^2).
The loss is ``1 - F``; :func:`afw_backward` returns its exact derivative with
respect to every prediction pixel.
"""

from __future__ import annotations

import dataclasses
import hashlib
from typing import Tuple

import numpy as np

from .errors import ParameterError, StaleCacheError, UndefinedMetricError
from .exact import WeightedCounts, error_map, weighted_counts
from .grid import (
    GaussianKernel,
    as_mask,
    as_prediction,
    check_same_shape,
    convolve_same,
    make_gaussian_kernel,
    min_squared_distance_field,
)
from .params import DeltaMode, ErrorNorm, WfmParams


@dataclasses.dataclass
class ForwardCache:
    e: np.ndarray
    ye_conv: np.ndarray
    ea_approx: np.ndarray
    # True where min(EA, E) took the EA branch (EA < E strictly)
    min_branch: np.ndarray
    b: np.ndarray
    counts: WeightedCounts
    fingerprint: str = ""


def kernel_for(params: WfmParams) -> GaussianKernel:
    return make_gaussian_kernel(params.theta, params.resolved_sigma, params.exponent_form)


def approx_ea(y, e, kernel: GaussianKernel) -> np.ndarray:
    """Y * ((Y * E) conv K) + (1 - Y); background pixels come out as exactly 1."""
    y = as_mask(y, "ground truth")
    e = np.asarray(e, dtype=np.float64)
    check_same_shape(y, e)
    return np.where(y > 0.5, convolve_same(y * e, kernel), 1.0)


def approx_b(y, params: WfmParams = WfmParams()) -> np.ndarray:
    y = as_mask(y, "ground truth")
    if not np.any(y > 0.5):
        raise UndefinedMetricError("ground truth has no foreground pixels")
    delta = min_squared_distance_field(y, params.phi)
    return np.where(y > 0.5, 1.0, 2.0 - np.exp(params.alpha * delta))


def _fingerprint(y: np.ndarray, yhat: np.ndarray, params: WfmParams) -> str:
    h = hashlib.blake2b(digest_size=16)
    h.update(repr(y.shape).encode())
    h.update(np.ascontiguousarray(y).tobytes())
    h.update(np.ascontiguousarray(yhat).tobytes())
    h.update(repr(sorted(params.to_dict().items())).encode())
    return h.hexdigest()


def _check_params(params: WfmParams) -> None:
    if params.delta_mode is not DeltaMode.SQUARED_BANDED:
        raise ParameterError("the approximation only supports delta_mode=squared-banded")


def afw_forward(y, yhat, params: WfmParams = WfmParams()) -> Tuple[float, ForwardCache]:
    y = as_mask(y, "ground truth")
    yhat = as_prediction(yhat)
    check_same_shape(y, yhat)
    _check_params(params)
    b = approx_b(y, params)
    e = error_map(y, yhat, params.error_norm)
    fg = y > 0.5
    ye_conv = convolve_same(y * e, kernel_for(params))
    ea = np.where(fg, ye_conv, 1.0)
    take_ea = ea < e
    ew = np.where(take_ea, ea, e) * b
    counts = weighted_counts(ew, y, params.beta)
    cache = ForwardCache(e, ye_conv, ea, take_ea, b, counts, _fingerprint(y, yhat, params))
    return counts.f_w, cache


def afw_backward(cache: ForwardCache, y, yhat, params: WfmParams = WfmParams()) -> np.ndarray:
    """Gradient of ``1 - F`` with respect to ``yhat``.

    Ties in the min follow the E branch.  B and the kernel do not depend on
    ``yhat``.  The adjoint of the (symmetric, zero-padded) correlation is the
    same correlation.
    """
    y = as_mask(y, "ground truth")
    yhat = as_prediction(yhat)
    if cache.fingerprint != _fingerprint(y, yhat, params):
        raise StaleCacheError("forward cache does not match these inputs/parameters")

    c = cache.counts
    b2 = params.beta_sq
    # F = (1+b2) TP / D with D = (1+b2) TP + b2 FN + FP and TP = n_fg - FN
    denom = (1.0 + b2) * c.tp_w + b2 * c.fn_w + c.fp_w
    d_fn = (1.0 + b2) * (c.tp_w - denom) / (denom * denom)
    d_fp = -(1.0 + b2) * c.tp_w / (denom * denom)

    fg = y > 0.5
    # dL/dE^w, L = 1 - F
    g_ew = np.where(fg, -d_fn, -d_fp)
    g_min = g_ew * cache.b
    g_conv = np.where(cache.min_branch & fg, g_min, 0.0)
    g_e = np.where(cache.min_branch, 0.0, g_min) + y * convolve_same(g_conv, kernel_for(params))

    diff = yhat - y
    if params.error_norm is ErrorNorm.L1:
        de = np.sign(diff)
    else:
        de = 2.0 * diff
    return g_e * de


def afw_loss(y, yhat, params: WfmParams = WfmParams()) -> Tuple[float, np.ndarray]:
    """Fused ``(1 - F, dL/dyhat)``."""
    f, cache = afw_forward(y, yhat, params)
    return 1.0 - f, afw_backward(cache, y, yhat, params)
