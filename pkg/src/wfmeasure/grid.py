"""Dense 2-D grid helpers, Gaussian kernels and the two window primitives.

Grids are plain ``numpy`` arrays of shape ``(H, W)``, row-major, float64.
Ground-truth masks hold exactly 0/1, prediction maps hold values in [0, 1].
"""

from __future__ import annotations

import dataclasses
import math
from typing import Union

import numpy as np
from scipy import ndimage

from .errors import ParameterError, ShapeError
from .params import ExponentForm

#: value of the distance field where no foreground pixel is inside the window
INF = np.inf


def as_grid(values, name: str = "grid") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def as_mask(values, name: str = "mask") -> np.ndarray:
    """Validate a binary ground-truth mask and return it as float64."""
    arr = as_grid(values, name)
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ShapeError(f"{name} must contain only 0 and 1")
    return arr


def as_prediction(values, name: str = "prediction") -> np.ndarray:
    arr = as_grid(values, name)
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise ShapeError(f"{name} values must lie in [0, 1]")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def kernel_distance(p2: np.ndarray, form: ExponentForm) -> np.ndarray:
    """Map squared offsets p^2+q^2 to the quantity D used in the exponent."""
    if ExponentForm(form) is ExponentForm.SQUARED_DISTANCE:
        return p2
    return np.sqrt(p2)


def gaussian_weight(p2, sigma: float, form: ExponentForm) -> np.ndarray:
    """(2 pi sigma^2)^(-1/2) * exp(-D / (2 sigma^2)); not normalised to sum 1."""
    coef = 1.0 / math.sqrt(2.0 * math.pi * sigma * sigma)
    return coef * np.exp(-kernel_distance(np.asarray(p2, dtype=np.float64), form) / (2.0 * sigma * sigma))


@dataclasses.dataclass(frozen=True)
class GaussianKernel:
    theta: int
    sigma: float
    exponent_form: ExponentForm
    weights: np.ndarray = dataclasses.field(repr=False)

    @property
    def size(self) -> int:
        return 2 * self.theta + 1

    @property
    def center_weight(self) -> float:
        return float(self.weights[self.theta, self.theta])


def make_gaussian_kernel(
    theta: int, sigma: float, exponent_form: ExponentForm = ExponentForm.SQUARED_DISTANCE
) -> GaussianKernel:
    """Build the (2*theta+1)^2 Gaussian kernel with offsets -theta..theta."""
    if int(theta) != theta or theta < 1:
        raise ParameterError(f"theta must be an integer >= 1, got {theta}")
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ParameterError(f"sigma must be positive, got {sigma}")
    theta = int(theta)
    form = ExponentForm(exponent_form)
    off = np.arange(-theta, theta + 1, dtype=np.float64)
    p2 = off[:, None] ** 2 + off[None, :] ** 2
    weights = gaussian_weight(p2, float(sigma), form)
    weights.setflags(write=False)
    return GaussianKernel(theta, float(sigma), form, weights)


KernelLike = Union[GaussianKernel, np.ndarray]


def convolve_same(values: np.ndarray, kernel: KernelLike) -> np.ndarray:
    """Same-size zero-padded convolution.

    ``out[r, c] = sum_{p,q} values[r+p, c+q] * w[p, q]`` over in-bounds
    offsets.  This is a correlation; for the centrally symmetric kernels
    used here it coincides with convolution, and it is also its own adjoint.
    """
    values = as_grid(values, "input")
    weights = kernel.weights if isinstance(kernel, GaussianKernel) else np.asarray(kernel, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] % 2 == 0 or weights.shape[1] % 2 == 0:
        raise ShapeError(f"kernel must be 2-D with odd side lengths, got {weights.shape}")
    return ndimage.correlate(values, weights, mode="constant", cval=0.0)


def min_squared_distance_field(mask: np.ndarray, phi: int) -> np.ndarray:
    """Windowed masked minimum of squared offsets to foreground.

    For each pixel: min of p^2+q^2 over offsets with |p|, |q| <= phi whose
    target is a foreground pixel; ``INF`` if the window holds none.  Pixels
    outside the image count as background.
    """
    if int(phi) != phi or phi < 1:
        raise ParameterError(f"phi must be an integer >= 1, got {phi}")
    phi = int(phi)
    fg = as_mask(mask) > 0.5
    h, w = fg.shape
    out = np.full((h, w), INF)
    # offsets ordered by squared distance so each pixel's first hit is its minimum
    offsets = sorted(
        ((p * p + q * q, p, q) for p in range(-phi, phi + 1) for q in range(-phi, phi + 1)),
    )
    for d2, p, q in offsets:
        if abs(p) >= h or abs(q) >= w:
            continue
        # destination rows r with r+p in range
        r0, r1 = max(0, -p), min(h, h - p)
        c0, c1 = max(0, -q), min(w, w - q)
        dst = out[r0:r1, c0:c1]
        hit = fg[r0 + p:r1 + p, c0 + q:c1 + q] & (dst > d2)
        dst[hit] = d2
    return out
