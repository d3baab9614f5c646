"""Image quality metrics evaluated on the interior of an image.

Both metrics work on the 0-255 scale and ignore a border of ``border``
pixels on every side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DimensionError, ParameterError

DEFAULT_BORDER = 16
PEAK = 255.0

# SSIM constants of Wang et al. (2004)
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _interior(ref, rec, border):
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(rec, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionError(f"image shapes differ: {a.shape} vs {b.shape}")
    if border < 0 or 2 * border >= min(a.shape):
        raise ParameterError(f"border {border} leaves no interior in a {a.shape[0]}x{a.shape[1]} image")
    if border:
        a = a[border:-border, border:-border]
        b = b[border:-border, border:-border]
    return a * PEAK, b * PEAK


def psnr(ref, rec, border: int = DEFAULT_BORDER) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical interiors."""
    a, b = _interior(ref, rec, border)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK ** 2 / mse)


def ssim(ref, rec, border: int = DEFAULT_BORDER) -> float:
    """Mean structural similarity over the interior.

    Gaussian window of 11x11 taps (sigma 1.5), K1 = 0.01, K2 = 0.03 and a
    dynamic range of 255.  Local statistics use reflected borders and the
    mean skips the 5-pixel margin where the window leaves the interior.
    """
    a, b = _interior(ref, rec, border)
    if min(a.shape) < SSIM_WINDOW:
        raise DimensionError(f"SSIM needs an interior of at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
                             f"got {a.shape[0]}x{a.shape[1]}")
    radius = (SSIM_WINDOW - 1) // 2
    truncate = radius / SSIM_SIGMA

    def blur(x):
        return gaussian_filter(x, SSIM_SIGMA, truncate=truncate, mode="reflect")

    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2
    mu_a = blur(a)
    mu_b = blur(b)
    var_a = blur(a * a) - mu_a ** 2
    var_b = blur(b * b) - mu_b ** 2
    cov = blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    smap = num / den
    return float(smap[radius:-radius, radius:-radius].mean())


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float
    border: int
    M: int
    N: int

    def psnr_text(self) -> str:
        return "inf" if math.isinf(self.psnr_db) else f"{self.psnr_db:.6f}"


def evaluate(ref, rec, border: int = DEFAULT_BORDER) -> MetricReport:
    ref = np.asarray(ref)
    return MetricReport(psnr(ref, rec, border), ssim(ref, rec, border), border, *ref.shape)
