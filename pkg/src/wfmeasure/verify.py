"""Oracles and harnesses: gradient checking, exact-vs-approximate deviation,
timing, and a direct map-optimisation demo."""

from __future__ import annotations

import dataclasses
import math
import platform
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .approx import afw_forward, afw_loss
from .exact import ORACLE_MAX_PIXELS, fw_beta_exact
from .errors import OracleSizeError
from .grid import as_mask, as_prediction, gaussian_weight
from .params import WfmParams


def random_instance(rng: np.random.Generator, size: int, smooth: float = 2.0) -> Tuple[np.ndarray, np.ndarray]:
    """A seeded (y, yhat) pair: y is thresholded smoothed noise, yhat i.i.d. uniform.

    The threshold is a random quantile in [0.3, 0.8] of the smoothed field,
    so both classes are always present and foreground comes in blobs.
    """
    noise = ndimage.gaussian_filter(rng.standard_normal((size, size)), smooth)
    cut = np.quantile(noise, rng.uniform(0.3, 0.8))
    y = (noise > cut).astype(np.float64)
    if not y.any():
        y.flat[int(np.argmax(noise))] = 1.0
    if y.all():
        y.flat[int(np.argmin(noise))] = 0.0
    yhat = rng.uniform(0.0, 1.0, size=(size, size))
    return y, yhat


def disk_mask(size: int, radius: Optional[float] = None) -> np.ndarray:
    radius = size * 5.0 / 16.0 if radius is None else radius
    c = (size - 1) / 2.0
    rr, cc = np.indices((size, size))
    return (((rr - c) ** 2 + (cc - c) ** 2) <= radius * radius).astype(np.float64)


# -- gradient checking -------------------------------------------------------


def finite_diff_grad(y, yhat, params: WfmParams = WfmParams(), h: float = 1e-4, jobs: int = 1) -> np.ndarray:
    """Central-difference estimate of d(1 - F)/d yhat, one pixel at a time.

    Near the box boundary the step is clipped to [0, 1] and the difference
    becomes one-sided.
    """
    y = as_mask(y, "ground truth")
    yhat = as_prediction(yhat)

    def loss_at(idx: int, value: float) -> float:
        probe = yhat.copy()
        probe.flat[idx] = value
        return 1.0 - afw_forward(y, probe, params)[0]

    def one(idx: int) -> float:
        v = yhat.flat[idx]
        hi = min(1.0, v + h)
        lo = max(0.0, v - h)
        return (loss_at(idx, hi) - loss_at(idx, lo)) / (hi - lo)

    idx = range(yhat.size)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(one, idx))
    else:
        values = [one(i) for i in idx]
    return np.array(values).reshape(yhat.shape)


def tie_gap(y, yhat, params: WfmParams = WfmParams()) -> np.ndarray:
    """|EA - E| per pixel: how close each pixel's min is to switching branch."""
    _, cache = afw_forward(y, yhat, params)
    return np.abs(cache.ea_approx - cache.e)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


@dataclasses.dataclass
class GradCheckResult:
    checked: int
    passed: int
    max_rel_error: float
    nonfinite: int

    @property
    def pass_rate(self) -> float:
        return self.passed / self.checked if self.checked else 1.0


def check_gradient(
    y, yhat, params: WfmParams = WfmParams(), h: float = 1e-4, rtol: float = 1e-4, tie_tol: float = 1e-6
) -> GradCheckResult:
    """Compare the analytic gradient against central differences on non-tied pixels."""
    _, analytic = afw_loss(y, yhat, params)
    numeric = finite_diff_grad(y, yhat, params, h)
    eligible = tie_gap(y, yhat, params) > tie_tol
    rel = relative_error(analytic, numeric)[eligible]
    return GradCheckResult(
        checked=int(eligible.sum()),
        passed=int(np.sum(rel <= rtol)),
        max_rel_error=float(rel.max()) if rel.size else 0.0,
        nonfinite=int(np.sum(~np.isfinite(analytic))),
    )


# -- exact vs approximate ----------------------------------------------------


@dataclasses.dataclass
class DeviationInstance:
    size: int
    f_exact: float
    f_approx: float
    abs_gap: float
    bound: float


@dataclasses.dataclass
class DeviationReport:
    instances: List[DeviationInstance]
    max_gap: float
    mean_gap: float
    params: WfmParams
    seed: int

    def to_dict(self) -> dict:
        return {
            "instances": [dataclasses.asdict(i) for i in self.instances],
            "max_gap": self.max_gap,
            "mean_gap": self.mean_gap,
            "params": self.params.to_dict(),
            "seed": self.seed,
        }


def truncation_bound(y: np.ndarray, params: WfmParams) -> float:
    """Loose union bound on |F_exact - F_approx| from dropping kernel offsets beyond theta."""
    edge = gaussian_weight(float(params.theta) ** 2, params.resolved_sigma, params.exponent_form)
    return float(np.sum(y > 0.5) * edge * 2.0)


def compare_exact_approx(
    sizes: Sequence[int], trials: int, params: WfmParams = WfmParams(), seed: int = 0
) -> DeviationReport:
    for s in sizes:
        if s * s > ORACLE_MAX_PIXELS:
            raise OracleSizeError(f"size {s}x{s} exceeds the oracle cap of {ORACLE_MAX_PIXELS} pixels")
    rng = np.random.default_rng(seed)
    out = []
    for s in sizes:
        for _ in range(trials):
            y, yhat = random_instance(rng, s)
            fe = fw_beta_exact(y, yhat, params).f_w
            fa = afw_forward(y, yhat, params)[0]
            out.append(DeviationInstance(s, fe, fa, abs(fe - fa), truncation_bound(y, params)))
    gaps = [i.abs_gap for i in out]
    return DeviationReport(
        out,
        max(gaps, default=0.0),
        float(np.mean(gaps)) if gaps else 0.0,
        params,
        seed,
    )


# -- timing ------------------------------------------------------------------


def machine_descriptor() -> str:
    return f"{platform.platform()} | {platform.processor() or platform.machine()} | python {platform.python_version()}"


def time_call(fn: Callable[[], object], reps: int, warmup: int = 1) -> List[float]:
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return times


@dataclasses.dataclass
class BenchReport:
    size: int
    exact_seconds: float
    approx_seconds: float
    exact_mean_seconds: float
    approx_mean_seconds: float
    speedup: float
    approx_images_per_second: float
    reps: int
    machine: str

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def bench(
    size: int,
    reps: int = 5,
    params: WfmParams = WfmParams(),
    allow_large_oracle: bool = False,
    seed: int = 0,
) -> BenchReport:
    """Median wall time of the exact oracle and the approximate forward pass.

    Each path gets one warm-up call and then ``reps`` timed calls.
    """
    if size * size > ORACLE_MAX_PIXELS and not allow_large_oracle:
        raise OracleSizeError(
            f"size {size}x{size} exceeds the oracle cap of {ORACLE_MAX_PIXELS} pixels; "
            "pass allow_large_oracle=True"
        )
    reps = max(int(reps), 1)
    y, yhat = random_instance(np.random.default_rng(seed), size, smooth=size / 16.0)
    exact_t = time_call(lambda: fw_beta_exact(y, yhat, params, allow_large=True), reps)
    approx_t = time_call(lambda: afw_forward(y, yhat, params), reps)
    ex, ap = statistics.median(exact_t), statistics.median(approx_t)
    return BenchReport(
        size=size,
        exact_seconds=ex,
        approx_seconds=ap,
        exact_mean_seconds=statistics.fmean(exact_t),
        approx_mean_seconds=statistics.fmean(approx_t),
        speedup=ex / ap,
        approx_images_per_second=1.0 / ap,
        reps=reps,
        machine=machine_descriptor(),
    )


@dataclasses.dataclass
class ScalingReport:
    pixels: List[int]
    seconds: List[float]
    fitted: List[float]
    slope: float
    intercept: float

    @property
    def max_relative_deviation(self) -> float:
        return max(abs(t - f) / t for t, f in zip(self.seconds, self.fitted))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["max_relative_deviation"] = self.max_relative_deviation
        return d


def time_scaling(
    sizes: Sequence[int] = (64, 128, 224, 448), reps: int = 7, params: WfmParams = WfmParams(), seed: int = 0
) -> ScalingReport:
    """Median forward time per image size, with a least-squares line t = a + b*n."""
    rng = np.random.default_rng(seed)
    pixels, seconds = [], []
    for s in sizes:
        y, yhat = random_instance(rng, s, smooth=s / 16.0)
        seconds.append(statistics.median(time_call(lambda: afw_forward(y, yhat, params), reps)))
        pixels.append(s * s)
    slope, intercept = np.polyfit(np.array(pixels, float), np.array(seconds), 1)
    fitted = [float(intercept + slope * n) for n in pixels]
    return ScalingReport(pixels, seconds, fitted, float(slope), float(intercept))


# -- optimisation demo -------------------------------------------------------


@dataclasses.dataclass
class OptimStep:
    step: int
    loss: float
    fw: float


@dataclasses.dataclass
class OptimTrace:
    steps: List[OptimStep]
    final_map: np.ndarray
    final_loss: float
    final_fw: float

    def to_dict(self) -> dict:
        return {
            "steps": [dataclasses.asdict(s) for s in self.steps],
            "final_loss": self.final_loss,
            "final_fw": self.final_fw,
        }


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def optimize_map(y, steps: int = 200, step_size: float = 0.5, params: WfmParams = WfmParams()) -> OptimTrace:
    """Fit a prediction map to ``y`` by gradient descent on the loss alone.

    ``yhat = sigmoid(z)`` with ``z`` starting at 0.  Each update is
    ``z -= step_size * n * dL/dz`` where n is the pixel count, i.e. the step
    is taken on the per-pixel-summed objective n * (1 - F) so that the step
    size does not shrink with image area.  Entry k of the trace holds the
    loss at the iterate the k-th update starts from.
    """
    y = as_mask(y, "ground truth")
    z = np.zeros_like(y)
    n = y.size
    trace = []
    for k in range(int(steps)):
        yhat = _sigmoid(z)
        loss, grad = afw_loss(y, yhat, params)
        trace.append(OptimStep(k, loss, 1.0 - loss))
        z = z - step_size * n * grad * yhat * (1.0 - yhat)
    final = _sigmoid(z)
    f, _ = afw_forward(y, final, params)
    return OptimTrace(trace, final, 1.0 - f, f)


def window_increases(losses: Sequence[float], start: int = 20, window: int = 10) -> List[int]:
    """Steps t >= start where loss[t + window] > loss[t]."""
    return [t for t in range(start, len(losses) - window) if losses[t + window] > losses[t]]
