"""Scalar configuration of the weighted F-measure family."""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Any, Optional

from .errors import ParameterError

DEFAULT_ALPHA = math.log(0.5) / 5.0


class ExponentForm(str, enum.Enum):
    """What goes into the Gaussian exponent: d^2 or d."""

    SQUARED_DISTANCE = "squared"
    DISTANCE = "distance"


class DeltaMode(str, enum.Enum):
    """How the false-positive distance term is measured.

    ``PLAIN_UNBOUNDED`` is the Euclidean distance to the nearest foreground
    pixel anywhere in the image.  ``SQUARED_BANDED`` is the squared distance
    to the nearest foreground pixel inside a (2*phi+1)^2 window, infinite
    when the window holds no foreground.
    """

    SQUARED_BANDED = "squared-banded"
    PLAIN_UNBOUNDED = "plain"


class ErrorNorm(str, enum.Enum):
    L2 = "l2"
    L1 = "l1"


@dataclasses.dataclass(frozen=True)
class WfmParams:
    """All constants of the metric.

    ``sigma=None`` means ``theta / 4``.  The defaults give the
    convolution-friendly configuration used for both training and
    evaluation: beta=1, theta=9, sigma=2.25, phi=5, squared-distance
    exponent, banded squared delta and an L2 error map.
    """

    beta: float = 1.0
    theta: int = 9
    sigma: Optional[float] = None
    phi: int = 5
    alpha: float = DEFAULT_ALPHA
    exponent_form: ExponentForm = ExponentForm.SQUARED_DISTANCE
    delta_mode: DeltaMode = DeltaMode.SQUARED_BANDED
    error_norm: ErrorNorm = ErrorNorm.L2

    def __post_init__(self):
        # accept plain strings for the enum fields (CLI / JSON round trips)
        for name, cls in (
            ("exponent_form", ExponentForm),
            ("delta_mode", DeltaMode),
            ("error_norm", ErrorNorm),
        ):
            value = getattr(self, name)
            if not isinstance(value, cls):
                try:
                    object.__setattr__(self, name, cls(value))
                except ValueError:
                    raise ParameterError(f"invalid {name}: {value!r}") from None

        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if int(self.theta) != self.theta or self.theta < 1:
            raise ParameterError(f"theta must be an integer >= 1, got {self.theta}")
        if int(self.phi) != self.phi or self.phi < 1:
            raise ParameterError(f"phi must be an integer >= 1, got {self.phi}")
        object.__setattr__(self, "theta", int(self.theta))
        object.__setattr__(self, "phi", int(self.phi))
        if self.sigma is not None and not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not (self.alpha < 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be negative, got {self.alpha}")

    @property
    def resolved_sigma(self) -> float:
        return self.theta / 4.0 if self.sigma is None else float(self.sigma)

    @property
    def beta_sq(self) -> float:
        return self.beta * self.beta

    def replace(self, **changes: Any) -> "WfmParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "beta": float(self.beta),
            "theta": self.theta,
            "sigma": self.resolved_sigma,
            "phi": self.phi,
            "alpha": float(self.alpha),
            "exponent_form": self.exponent_form.value,
            "delta_mode": self.delta_mode.value,
            "error_norm": self.error_norm.value,
        }
