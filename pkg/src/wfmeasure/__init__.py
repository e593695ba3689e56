"""Weighted F-measure for foreground maps.

``fw_beta_exact`` is the brute-force O(n^2) metric; ``afw_forward`` /
``afw_loss`` are the fast convolutional approximation and its gradient;
``wfmeasure.metrics`` has the usual saliency benchmark metrics.
"""

from .approx import afw_backward, afw_forward, afw_loss, approx_b, approx_ea
from .errors import (
    ImageFormatError,
    OracleSizeError,
    ParameterError,
    ShapeError,
    StaleCacheError,
    UndefinedMetricError,
    WfmError,
)
from .exact import WeightedCounts, build_matrix_a, build_vector_b, error_map, fw_beta_exact, weighted_error
from .grid import GaussianKernel, convolve_same, make_gaussian_kernel, min_squared_distance_field
from .metrics import auroc, fbeta_max, fw1_eval, iou_at_half, mae
from .params import DeltaMode, ErrorNorm, ExponentForm, WfmParams

__version__ = "0.1.0"
