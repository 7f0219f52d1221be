"""Fidelity metrics between images and between latent vectors.

PSNR and SSIM quantify pixel-level distortion of regenerated images;
L1 and Linf distances between latent vectors quantify how far the noise
moved the representation itself. Together they trace the
privacy-utility trade-off as the budget varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .codec import as_image
from .latent import as_vector, format_float

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2  # (k1 * L)^2 with dynamic range L = 1
SSIM_C2 = 0.03**2


@dataclass(frozen=True)
class MetricReport:
    """One comparison: pixel metrics plus optional latent distances."""

    psnr: float
    ssim: float
    latent_l1: float | None = None
    latent_linf: float | None = None

    def to_doc(self) -> dict:
        """JSON-ready dict; infinite PSNR becomes the string "inf"."""
        doc = {
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
            "latent_l1": self.latent_l1,
            "latent_linf": self.latent_linf,
        }
        return doc


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for unit-range images.

    10 * log10(1 / MSE); identical images return math.inf as an explicit
    sentinel rather than overflowing.
    """
    x = as_image(a)
    y = as_image(b)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def ssim(a, b) -> float:
    """Mean local structural similarity over Gaussian windows.

    Local means, variances, and covariance are computed under an 11x11
    Gaussian window (sigma 1.5, normalized to sum 1) at every position
    where the window fits entirely inside the image, then combined as

        (2 mu_a mu_b + C1)(2 cov + C2)
        ------------------------------------------
        (mu_a^2 + mu_b^2 + C1)(var_a + var_b + C2)

    with C1 = 0.0001 and C2 = 0.0009 for unit dynamic range. The result
    is the mean over window positions.
    """
    x = as_image(a)
    y = as_image(b)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}"
        )
    w = _ssim_window()
    mu_x = _windowed(x, w)
    mu_y = _windowed(y, w)
    var_x = _windowed(x * x, w) - mu_x**2
    var_y = _windowed(y * y, w) - mu_y**2
    cov = _windowed(x * y, w) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x**2 + mu_y**2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


def latent_distance(z, z_other) -> tuple[float, float]:
    """(L1, Linf) distance between two latent vectors."""
    a = as_vector(z)
    b = as_vector(z_other, dim=a.size)
    diff = np.abs(a - b)
    return float(diff.sum()), float(diff.max())


def compare(original, regenerated, z=None, z_private=None) -> MetricReport:
    """Bundle pixel metrics, and latent distances when vectors are given."""
    l1 = linf = None
    if z is not None and z_private is not None:
        l1, linf = latent_distance(z, z_private)
    return MetricReport(
        psnr=psnr(original, regenerated),
        ssim=ssim(original, regenerated),
        latent_l1=l1,
        latent_linf=linf,
    )


def aggregate_csv_row(epsilon: float, reports: list[MetricReport]) -> str:
    """One CSV line: epsilon, mean SSIM, mean PSNR (infinite PSNRs excluded).

    An unknown epsilon (NaN) is written as "nan" so the row still
    parses.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    mean_ssim = float(np.mean([r.ssim for r in reports]))
    finite = [r.psnr for r in reports if math.isfinite(r.psnr)]
    mean_psnr = float(np.mean(finite)) if finite else math.inf
    psnr_text = "inf" if math.isinf(mean_psnr) else format_float(mean_psnr)
    eps_text = format_float(epsilon) if math.isfinite(epsilon) else str(epsilon)
    return f"{eps_text},{format_float(mean_ssim)},{psnr_text}"


_WINDOW_CACHE: dict[tuple[int, float], np.ndarray] = {}


def _ssim_window() -> np.ndarray:
    key = (SSIM_WINDOW, SSIM_SIGMA)
    if key not in _WINDOW_CACHE:
        half = (SSIM_WINDOW - 1) / 2.0
        t = np.arange(SSIM_WINDOW, dtype=np.float64) - half
        g = np.exp(-0.5 * (t / SSIM_SIGMA) ** 2)
        window = np.outer(g, g)
        _WINDOW_CACHE[key] = window / window.sum()
    return _WINDOW_CACHE[key]


def _windowed(field: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Weighted window sums at every fully interior position."""
    views = sliding_window_view(field, window.shape)
    return np.tensordot(views, window, axes=([2, 3], [0, 1]))
