"""Binned acquisition as a linear operator ``y = A f``.

Every measurement sums the four image samples covered by one pixel group;
all coefficients are 0 or 1 and the supports partition the image grid.  The
operator is stored as an ``owner`` map giving, for every image position, the
index of the measurement that reads it.  Forward and adjoint application are
then a ``bincount`` and a gather.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParameterError, UnsupportedCombination
from .tiling import SensorLayout, ShapeClass

BORDER_POLICIES = ("periodic", "clip")


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    """Sum-binning operator of a layout tiled over an ``M x N`` image.

    Measurement ``i`` enumerates cell replicas in raster order and, within
    a replica, the layout's groups in order.
    """

    M: int
    N: int
    layout: SensorLayout
    owner: np.ndarray  # (M, N) measurement index per pixel
    counts: np.ndarray  # (L,) support size per measurement
    border: str = "periodic"

    @property
    def L(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.M, self.N)

    @property
    def layout_id(self) -> str:
        return self.layout.name

    def supports(self) -> list[np.ndarray]:
        """Image coordinates ``(k, 2)`` read by each measurement, row-major sorted."""
        flat = self.owner.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.cumsum(self.counts)[:-1]
        rows, cols = np.divmod(order, self.N)
        coords = np.stack([rows, cols], axis=1)
        return np.split(coords, bounds)

    def support_array(self) -> np.ndarray:
        """Supports as an ``(L, 4)`` array of flat pixel indices (periodic operators only)."""
        if not np.all(self.counts == 4):
            raise DimensionError("support array needs every measurement to read exactly 4 pixels")
        order = np.argsort(self.owner.ravel(), kind="stable")
        return order.reshape(self.L, 4)

    def matrix(self):
        """The operator as a ``scipy.sparse`` CSR matrix of shape ``(L, M*N)``."""
        from scipy import sparse

        flat = self.owner.ravel()
        return sparse.csr_matrix((np.ones(flat.size), (flat, np.arange(flat.size))),
                                 shape=(self.L, self.M * self.N))


def build_operator(layout: SensorLayout, M: int, N: int, border: str = "periodic") -> MeasurementOperator:
    """Tile ``layout`` over an ``M x N`` image.

    ``border="periodic"`` requires both sizes to be multiples of the cell and
    places the periodic tiling on the image torus, so groups that protrude
    from the last cell replica wrap to the opposite image border.  Every
    measurement then reads exactly four pixels and ``L = M*N/4``.

    ``border="clip"`` accepts any size: the tiling is anchored at the origin
    and groups crossing the image border are truncated to their in-image
    pixels (used for coherence analysis on sizes such as 30x30 with a 4x4
    cell).
    """
    if border not in BORDER_POLICIES:
        raise ParameterError(f"unknown border policy {border!r}")
    if M <= 0 or N <= 0:
        raise DimensionError(f"image size must be positive, got {M}x{N}")
    k = layout.cell
    if border == "periodic" and (M % k or N % k):
        raise DimensionError(f"image size {M}x{N} is not divisible by the layout cell {k}")

    offsets = layout.offsets()  # (G, 4, 2) unwrapped, may leave [0, k)
    G = len(offsets)
    group_of = np.full((k, k), -1, dtype=np.int64)
    shift_r = np.zeros((k, k), dtype=np.int64)
    shift_c = np.zeros((k, k), dtype=np.int64)
    for g, pts in enumerate(offsets):
        for r, c in pts:
            rr, cc = r % k, c % k
            group_of[rr, cc] = g
            # replica offset of the group's anchor relative to this pixel's replica
            shift_r[rr, cc] = (r - rr) // k
            shift_c[rr, cc] = (c - cc) // k
    if np.any(group_of < 0):
        raise DimensionError(f"layout {layout.name!r} does not cover its cell")

    alpha, beta = np.mgrid[0:M, 0:N]
    lr, lc = alpha % k, beta % k
    rep_r = alpha // k - shift_r[lr, lc]
    rep_c = beta // k - shift_c[lr, lc]
    g = group_of[lr, lc]
    if border == "periodic":
        nR, nC = M // k, N // k
        key = ((rep_r % nR) * nC + rep_c % nC) * G + g
        owner = key
        counts = np.bincount(owner.ravel(), minlength=nR * nC * G)
    else:
        r0, c0 = rep_r.min(), rep_c.min()
        nC = rep_c.max() - c0 + 1
        key = ((rep_r - r0) * nC + (rep_c - c0)) * G + g
        uniq, inverse, counts = np.unique(key.ravel(), return_inverse=True, return_counts=True)
        owner = inverse.reshape(M, N)
    owner = np.ascontiguousarray(owner, dtype=np.int64)
    owner.flags.writeable = False
    counts = np.asarray(counts, dtype=np.int64)
    counts.flags.writeable = False
    return MeasurementOperator(M, N, layout, owner, counts, border)


def measure(op: MeasurementOperator, img) -> np.ndarray:
    """Acquire ``y_i = sum of the samples in support i`` (no normalization)."""
    f = np.asarray(img, dtype=np.float64)
    if f.shape != op.shape:
        raise DimensionError(f"image shape {f.shape} does not match operator {op.shape}")
    return np.bincount(op.owner.ravel(), weights=f.ravel(), minlength=op.L)


def adjoint(op: MeasurementOperator, y) -> np.ndarray:
    """Back-projection ``A^T y``: every pixel receives its measurement's value."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.L,):
        raise DimensionError(f"measurement vector length {y.shape} != L = {op.L}")
    return y[op.owner]


def lr_reorder(op: MeasurementOperator, y) -> np.ndarray:
    """Low-resolution image ``0.25 * y`` on the ``(M/2) x (N/2)`` grid of a 2x2 binning."""
    if op.layout.shape_class is not ShapeClass.SQUARE or op.layout.cell != 2:
        raise UnsupportedCombination(
            f"low-resolution reordering needs the square2x2 layout, got {op.layout.name!r}")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.L,):
        raise DimensionError(f"measurement vector length {y.shape} != L = {op.L}")
    return 0.25 * y.reshape(op.M // 2, op.N // 2)


def residual(op: MeasurementOperator, img, y) -> float:
    """Relative measurement residual ``||A f - y|| / ||y||``."""
    y = np.asarray(y, dtype=np.float64)
    r = np.linalg.norm(measure(op, img) - y)
    ny = np.linalg.norm(y)
    return float(r / ny) if ny > 0 else float(r)


# ----------------------------------------------------------- measurement file

def write_measurements(path, op: MeasurementOperator, y) -> None:
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.L,):
        raise DimensionError(f"measurement vector length {y.shape} != L = {op.L}")
    lines = [f"M {op.M}", f"N {op.N}", f"L {op.L}", f"layout {op.layout_id}"]
    lines.extend(repr(float(v)) for v in y)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_measurements(path) -> tuple[dict, np.ndarray]:
    """Read a measurement file; returns ``(header, values)``."""
    header = {}
    values = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if len(header) < 4:
            key, _, val = line.partition(" ")
            if key not in ("M", "N", "L", "layout") or not val:
                raise ParameterError(f"{path}:{lineno}: bad header line {line!r}")
            header[key] = val.strip() if key == "layout" else int(val)
            continue
        values.append(float(line))
    if len(header) < 4:
        raise ParameterError(f"{path}: incomplete header")
    y = np.asarray(values, dtype=np.float64)
    if len(y) != header["L"]:
        raise ParameterError(f"{path}: expected {header['L']} values, found {len(y)}")
    return header, y
