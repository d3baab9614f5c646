"""Grayscale image handling: raster I/O, cropping and synthetic test charts.

Images are plain 2-D ``float64`` numpy arrays with samples in ``[0, 1]``,
row index first (origin upper left).  Quantization to 8 bit happens only
when reading or writing files.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionError, ImageFormatError, ParameterError

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

IMAGE_SUFFIXES = (".png", ".pgm")
_PIL_FORMATS = {"PNG", "PPM"}  # Pillow reports binary PGM as PPM


def check_image(img, name="image"):
    """Return ``img`` as a float array after checking shape and range."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite samples")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ParameterError(f"{name} samples must lie in [0, 1]")
    return arr


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG or binary PGM file as a grayscale image in [0, 1].

    Color files are converted with BT.601 luma weights in floating point.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in _PIL_FORMATS:
                raise ImageFormatError(f"{path}: unsupported raster format {fmt!r}")
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            if mode not in ("L", "LA", "RGB", "RGBA", "1"):
                raise ImageFormatError(f"{path}: unsupported pixel mode {mode!r} (8-bit only)")
            if mode == "1":
                im = im.convert("L")
                mode = "L"
            data = np.asarray(im, dtype=np.float64)
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a readable raster image") from exc

    if mode in ("L",):
        gray = data
    elif mode == "LA":
        gray = data[..., 0]
    else:
        rgb = data[..., :3]
        gray = rgb @ np.asarray(LUMA_WEIGHTS)
    return np.clip(gray / 255.0, 0.0, 1.0)


def to_uint8(img) -> np.ndarray:
    """Quantize samples with ``round(s * 255)`` clamped to [0, 255]."""
    return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_image(img, path) -> None:
    """Write an 8-bit grayscale PNG."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {arr.shape}")
    Image.fromarray(to_uint8(arr), mode="L").save(Path(path), format="PNG")


def list_images(directory) -> list[Path]:
    """Sorted PNG/PGM files directly inside ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def crop_divisible(img, cell: int) -> np.ndarray:
    """Largest top-left-anchored sub-image with both sides divisible by ``cell``."""
    if cell < 2:
        raise ParameterError(f"cell must be >= 2, got {cell}")
    arr = np.asarray(img)
    M = arr.shape[0] - arr.shape[0] % cell
    N = arr.shape[1] - arr.shape[1] % cell
    if M == 0 or N == 0:
        raise DimensionError(f"image {arr.shape[0]}x{arr.shape[1]} is smaller than cell {cell}")
    return arr[:M, :N]


def center_crop(img, M: int, N: int) -> np.ndarray:
    arr = np.asarray(img)
    if arr.shape[0] < M or arr.shape[1] < N:
        raise DimensionError(f"cannot crop {arr.shape[0]}x{arr.shape[1]} to {M}x{N}")
    r0 = (arr.shape[0] - M) // 2
    c0 = (arr.shape[1] - N) // 2
    return arr[r0:r0 + M, c0:c0 + N]


class ChartKind(str, enum.Enum):
    FINE_LINES = "fine-lines"
    DIAGONAL_STRIPES = "diagonal-stripes"
    ZONE_PLATE = "zone-plate"
    CONSTANT = "constant"


@dataclass(frozen=True)
class ChartSpec:
    """Parameters of a synthetic resolution chart.

    ``period`` is in pixels, ``orientation`` in degrees (0 means the pattern
    varies along the row index, i.e. horizontal lines).
    """

    kind: ChartKind = ChartKind.FINE_LINES
    period: float = 2.0
    orientation: float = 0.0
    contrast: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChartKind(self.kind))
        if not self.period >= 1.0:
            raise ParameterError(f"chart period must be >= 1 pixel, got {self.period}")
        if not 0.0 < self.contrast <= 1.0:
            raise ParameterError(f"chart contrast must lie in (0, 1], got {self.contrast}")


def make_chart(spec: ChartSpec, M: int, N: int) -> np.ndarray:
    """Render a deterministic test chart of size ``M x N``."""
    if M < 16 or N < 16:
        raise DimensionError(f"charts need at least 16x16 pixels, got {M}x{N}")
    amp = 0.5 * spec.contrast
    if spec.kind is ChartKind.CONSTANT:
        return np.full((M, N), 0.5)

    alpha, beta = np.mgrid[0:M, 0:N].astype(np.float64)
    theta = math.radians(spec.orientation)
    # coordinate across the lines
    t = alpha * math.cos(theta) + beta * math.sin(theta)

    if spec.kind is ChartKind.FINE_LINES:
        # square wave; the small offset keeps exact half-period samples stable
        phase = np.floor(2.0 * t / spec.period + 1e-9).astype(np.int64) % 2
        img = np.where(phase == 0, 0.5 + amp, 0.5 - amp)
    elif spec.kind is ChartKind.DIAGONAL_STRIPES:
        img = 0.5 + amp * np.cos(2.0 * np.pi * t / spec.period)
    else:
        # zone plate: local frequency grows linearly with radius and reaches
        # 1/period cycles per pixel at the farthest corner
        r2 = (alpha - M // 2) ** 2 + (beta - N // 2) ** 2
        r_max = math.hypot(max(M // 2, M - 1 - M // 2), max(N // 2, N - 1 - N // 2))
        k = math.pi / (spec.period * r_max)
        img = 0.5 + amp * np.cos(k * r2)
    return np.clip(img, 0.0, 1.0)
