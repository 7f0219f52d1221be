"""Per-component clipping bounds and sensitivity calibration.

Bounds come from column quantiles of a reference dataset; the widths of
the clipped box are what the noise mechanism treats as per-component
sensitivities, since after clipping no input pair can differ by more
than the box width in any coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .latent import FileFormatError, as_matrix, as_vector, dump_json, load_json

_BOUNDS_KEYS = ("p_low", "p_high", "lower", "upper", "sensitivity")


@dataclass(frozen=True)
class ClipBounds:
    """Admissible per-component box [lower_j, upper_j].

    ``p_low`` and ``p_high`` record the quantile levels the bounds were
    derived from; they are provenance metadata and do not constrain the
    values.
    """

    lower: np.ndarray
    upper: np.ndarray
    p_low: float
    p_high: float

    def __post_init__(self):
        lower = as_vector(self.lower)
        upper = as_vector(self.upper, dim=lower.size)
        if np.any(lower > upper):
            raise ValueError("bounds violated: lower_j > upper_j for some component")
        if not (0.0 <= self.p_low <= self.p_high <= 1.0):
            raise ValueError(
                f"quantile levels must satisfy 0 <= p_low <= p_high <= 1, "
                f"got ({self.p_low}, {self.p_high})"
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "p_low", float(self.p_low))
        object.__setattr__(self, "p_high", float(self.p_high))

    @property
    def dim(self) -> int:
        return self.lower.size

    def width(self) -> np.ndarray:
        """Box width per component, the post-clipping sensitivity."""
        return self.upper - self.lower


def compute_raw_sensitivity(data) -> np.ndarray:
    """Observed range (max minus min) of each column of a dataset.

    This is the raw per-component range of the reference data, kept as a
    diagnostic. The mechanism itself uses sensitivity_from_bounds, the
    width of the clipped box, which is what actually bounds its input.
    """
    z = as_matrix(data)
    return z.max(axis=0) - z.min(axis=0)


def compute_clip_bounds(data, p_low: float, p_high: float) -> ClipBounds:
    """Column quantiles of a reference dataset as clipping bounds.

    Quantiles interpolate linearly between order statistics: for level p
    on a sorted column x of length n, h = p * (n - 1) and the value is
    x[floor(h)] + (h - floor(h)) * (x[ceil(h)] - x[floor(h)]).
    """
    z = as_matrix(data)
    if not (0.0 <= p_low <= p_high <= 1.0):
        raise ValueError(
            f"quantile levels must satisfy 0 <= p_low <= p_high <= 1, "
            f"got ({p_low}, {p_high})"
        )
    lower = np.quantile(z, p_low, axis=0)
    upper = np.quantile(z, p_high, axis=0)
    return ClipBounds(lower=lower, upper=upper, p_low=p_low, p_high=p_high)


def clip(v, bounds: ClipBounds) -> np.ndarray:
    """Project a vector into the admissible box, componentwise."""
    x = as_vector(v, dim=bounds.dim)
    return np.minimum(bounds.upper, np.maximum(bounds.lower, x))


def clip_matrix(data, bounds: ClipBounds) -> np.ndarray:
    z = as_matrix(data, dim=bounds.dim)
    return np.clip(z, bounds.lower, bounds.upper)


def sensitivity_from_bounds(bounds: ClipBounds) -> np.ndarray:
    """Per-component sensitivity of the clipped representation."""
    return bounds.width()


def peak_sensitivity(sensitivity) -> float:
    """Largest per-component sensitivity, for reporting only."""
    s = as_vector(sensitivity)
    return float(s.max())


def save_bounds(path, bounds: ClipBounds, sensitivity=None) -> None:
    """Write bounds plus sensitivity as a JSON document."""
    if sensitivity is None:
        sensitivity = sensitivity_from_bounds(bounds)
    s = as_vector(sensitivity, dim=bounds.dim)
    if np.any(s < 0):
        raise ValueError("sensitivity must be nonnegative")
    doc = {
        "p_low": bounds.p_low,
        "p_high": bounds.p_high,
        "lower": bounds.lower,
        "upper": bounds.upper,
        "sensitivity": s,
    }
    dump_json(path, doc)


def load_bounds(path) -> tuple[ClipBounds, np.ndarray]:
    """Read a bounds JSON document; returns (bounds, sensitivity)."""
    doc = load_json(path)
    if set(doc) != set(_BOUNDS_KEYS):
        unexpected = sorted(set(doc) - set(_BOUNDS_KEYS))
        missing = sorted(set(_BOUNDS_KEYS) - set(doc))
        raise FileFormatError(
            f"{path}: bad bounds document (missing {missing}, unexpected {unexpected})"
        )
    try:
        bounds = ClipBounds(
            lower=np.asarray(doc["lower"], dtype=np.float64),
            upper=np.asarray(doc["upper"], dtype=np.float64),
            p_low=float(doc["p_low"]),
            p_high=float(doc["p_high"]),
        )
        sensitivity = as_vector(doc["sensitivity"], dim=bounds.dim)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad bounds document ({exc})") from None
    if np.any(sensitivity < 0):
        raise FileFormatError(f"{path}: negative sensitivity")
    return bounds, sensitivity
