"""Image reconstruction from binned measurements.

Two solvers are provided: bicubic upscaling of the low-resolution image
(square 2x2 binning only) and a smoothed projected Landweber (SPL) iteration
run on overlapping model windows, which works for any layout.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from scipy import fft as sfft
from scipy.ndimage import uniform_filter

from .errors import DimensionError, ParameterError, UnsupportedCombination
from .sensing import MeasurementOperator, adjoint, lr_reorder, residual
from .tiling import ShapeClass

# Keys cubic convolution parameter
BICUBIC_A = -0.5


@dataclass(frozen=True)
class SplConfig:
    """SPL hyperparameters.

    ``target`` and ``window`` are the sides of the written target block and
    of the model window around it.  Thresholds decay as
    ``lambda0 * decay**k`` in iteration ``k``.
    """

    target: int = 16
    window: int = 32
    wiener: int = 3
    wiener_noise: float = 1e-3
    max_iters: int = 200
    tol: float = 1e-4
    lambda0: float = 0.05
    decay: float = 0.95

    def __post_init__(self):
        if self.target < 1 or self.window < self.target:
            raise ParameterError(f"need 1 <= target <= window, got {self.target}, {self.window}")
        if (self.window - self.target) % 2:
            raise ParameterError("window - target must be even")
        if self.wiener < 1 or self.wiener % 2 == 0:
            raise ParameterError("wiener kernel side must be a positive odd integer")
        if self.max_iters < 1 or self.tol < 0 or self.lambda0 < 0 or not 0 < self.decay <= 1:
            raise ParameterError("invalid iteration or threshold settings")
        if self.wiener_noise < 0:
            raise ParameterError("wiener_noise must be non-negative")

    @classmethod
    def from_mapping(cls, values: dict) -> "SplConfig":
        """Build from string or numeric values keyed by field name."""
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, val in values.items():
            name = key.replace("-", "_")
            if name.startswith("spl_"):
                name = name[4:]
            if name not in types:
                raise ParameterError(f"unknown SPL setting {key!r}")
            kwargs[name] = int(val) if types[name] in (int, "int") else float(val)
        return cls(**kwargs)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Reconstruction:
    image: np.ndarray
    method: str
    residual: float
    iterations_used: int = 0
    seconds: float = 0.0
    history: dict = field(default_factory=dict, repr=False)


# ------------------------------------------------------------------- bicubic

def _keys(x, a=BICUBIC_A):
    x = np.abs(x)
    return np.where(
        x <= 1, (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1,
        np.where(x < 2, a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a, 0.0))


def _upscale_matrix(n: int, factor: int = 2) -> np.ndarray:
    """``(factor*n, n)`` interpolation matrix with half-pixel alignment and clamped edges."""
    out = np.arange(factor * n)
    src = (out + 0.5) / factor - 0.5
    base = np.floor(src).astype(np.int64)
    W = np.zeros((factor * n, n))
    for tap in range(-1, 3):
        idx = base + tap
        w = _keys(src - idx)
        np.add.at(W, (out, np.clip(idx, 0, n - 1)), w)
    return W


def bicubic_upscale(lr) -> np.ndarray:
    """Factor-2 bicubic interpolation (Keys kernel, a = -0.5), output clamped to [0, 1]."""
    lr = np.asarray(lr, dtype=np.float64)
    if lr.ndim != 2:
        raise DimensionError(f"expected a 2-D image, got shape {lr.shape}")
    Wr = _upscale_matrix(lr.shape[0])
    Wc = _upscale_matrix(lr.shape[1])
    return np.clip(Wr @ lr @ Wc.T, 0.0, 1.0)


def reconstruct_bicubic(op: MeasurementOperator, y, cfg=None) -> Reconstruction:
    t0 = time.perf_counter()
    img = bicubic_upscale(lr_reorder(op, y))
    return Reconstruction(img, "bicubic", residual(op, img, y), 0, time.perf_counter() - t0)


# ----------------------------------------------------------------------- SPL

class _WindowSystem:
    """Measurement subsets of all model windows, batched along axis 0.

    A measurement belongs to a window when its whole support lies inside the
    window.  Slot ``n_slots`` collects pixels of all other measurements and is
    discarded.
    """

    def __init__(self, op: MeasurementOperator, y, cfg: SplConfig):
        M, N = op.shape
        B, W = cfg.target, cfg.window
        if W > M or W > N:
            raise DimensionError(f"model window {W} exceeds image size {M}x{N}")
        pad = (W - B) // 2
        self.origins = [(r, c) for r in range(0, M, B) for c in range(0, N, B)]
        starts_r = np.array([r - pad for r, _ in self.origins])
        starts_c = np.array([c - pad for _, c in self.origins])
        offs = np.arange(W)
        self.rows = (starts_r[:, None] + offs) % M  # (nwin, W)
        self.cols = (starts_c[:, None] + offs) % N
        self.pad = pad
        self.B = B

        owner_w = op.owner[self.rows[:, :, None], self.cols[:, None, :]]  # (nwin, W, W)
        nwin = len(self.origins)
        slots = np.empty_like(owner_w)
        ids = []
        offset = 0
        for w in range(nwin):
            ow = owner_w[w].ravel()
            uniq, inv, cnt = np.unique(ow, return_inverse=True, return_counts=True)
            full = cnt == op.counts[uniq]
            local = np.full(len(uniq), -1, dtype=np.int64)
            local[full] = offset + np.arange(full.sum())
            ids.append(uniq[full])
            offset += int(full.sum())
            slots[w] = local[inv].reshape(W, W)
        self.n_slots = offset
        slots[slots < 0] = offset
        self.slots = slots
        self.meas_ids = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
        self.window_of_slot = np.repeat(np.arange(nwin), [len(i) for i in ids])
        self.y = np.asarray(y, dtype=np.float64)[self.meas_ids]
        self.nwin = nwin

    def gather(self, img):
        return img[self.rows[:, :, None], self.cols[:, None, :]]

    def forward(self, f):
        return np.bincount(self.slots.ravel(), weights=f.ravel(), minlength=self.n_slots + 1)[:self.n_slots]

    def back(self, r):
        return np.append(r, 0.0)[self.slots]

    def window_norms(self, r):
        return np.sqrt(np.bincount(self.window_of_slot, weights=r * r, minlength=self.nwin))


def _wiener(f, size, noise):
    """Local empirical Wiener filter over ``size x size`` neighborhoods of each window."""
    k = (1, size, size)
    mean = uniform_filter(f, size=k, mode="reflect")
    var = np.maximum(uniform_filter(f * f, size=k, mode="reflect") - mean * mean, 0.0)
    gain = np.maximum(var - noise, 0.0) / np.maximum(var, noise) if noise > 0 else np.ones_like(var)
    return mean + gain * (f - mean)


def _soft(x, lam):
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def spl_reconstruct(op: MeasurementOperator, y, cfg: SplConfig | None = None,
                    record_history: bool = False) -> Reconstruction:
    """Smoothed projected Landweber reconstruction with overlapping model windows.

    Each window starts from the back-projection ``A^T y / 4`` and repeats:
    Wiener smoothing, a Landweber projection ``f += A^T (y - A f) / 4``,
    soft thresholding of the window's orthonormal DCT coefficients and a
    second projection.  A window stops once the relative change of its
    iterate drops below ``cfg.tol``.  Only the central target block of every
    window is written to the output, which is clamped to [0, 1] at the end.
    """
    cfg = cfg or SplConfig()
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (op.L,):
        raise DimensionError(f"measurement vector length {y.shape} != L = {op.L}")
    t0 = time.perf_counter()
    sysw = _WindowSystem(op, y, cfg)
    gamma = 0.25  # 1 / ||A||^2 since A A^T = 4 I

    f = sysw.gather(adjoint(op, y) / 4.0)
    active = np.ones(sysw.nwin, dtype=bool)
    iters = np.zeros(sysw.nwin, dtype=np.int64)
    hist = {"pre_projection": [], "post_projection": [], "pre_threshold": []} if record_history else {}

    def project(f):
        r = sysw.y - sysw.forward(f)
        if record_history:
            hist["pre_projection"].append(sysw.window_norms(r))
        f = f + gamma * sysw.back(r)
        if record_history:
            hist["post_projection"].append(sysw.window_norms(sysw.y - sysw.forward(f)))
        return f

    for k in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        lam = cfg.lambda0 * cfg.decay ** k
        prev = f[idx]
        g = _wiener(prev, cfg.wiener, cfg.wiener_noise)
        full = f.copy()
        full[idx] = g
        full = project(full)
        if record_history:
            hist["pre_threshold"].append(hist["post_projection"][-1])
        g = full[idx]
        coeffs = sfft.dctn(g, axes=(1, 2), norm="ortho")
        g = sfft.idctn(_soft(coeffs, lam), axes=(1, 2), norm="ortho")
        full[idx] = g
        full = project(full)
        f[idx] = full[idx]
        iters[idx] += 1
        change = np.linalg.norm((f[idx] - prev).reshape(len(idx), -1), axis=1)
        scale = np.maximum(np.linalg.norm(prev.reshape(len(idx), -1), axis=1), 1e-12)
        active[idx[change / scale < cfg.tol]] = False

    M, N = op.shape
    out = np.empty((M, N))
    p, B = sysw.pad, sysw.B
    for w, (r0, c0) in enumerate(sysw.origins):
        h = min(B, M - r0)
        wd = min(B, N - c0)
        out[r0:r0 + h, c0:c0 + wd] = f[w, p:p + h, p:p + wd]
    out = np.clip(out, 0.0, 1.0)
    rec = Reconstruction(out, "spl", residual(op, out, y), int(iters.max()),
                         time.perf_counter() - t0)
    if record_history:
        rec.history = {k: np.array(v) for k, v in hist.items()}
        rec.history["window_iterations"] = iters
    return rec


# ------------------------------------------------------------------ registry

@dataclass(frozen=True)
class SolverInfo:
    name: str
    description: str
    layouts: tuple  # supported shape classes
    run: Callable


_SOLVERS = (
    SolverInfo("bicubic", "bicubic upscaling of the 2x2-binned low-resolution image",
               (ShapeClass.SQUARE,), reconstruct_bicubic),
    SolverInfo("spl", "smoothed projected Landweber on overlapping model windows",
               (ShapeClass.SQUARE, ShapeClass.T, ShapeClass.TLZ), spl_reconstruct),
)


def solver_registry() -> list[SolverInfo]:
    return list(_SOLVERS)


def get_solver(method: str, op: MeasurementOperator | None = None) -> SolverInfo:
    for s in _SOLVERS:
        if s.name == method:
            break
    else:
        raise ParameterError(f"unknown method {method!r}; available: "
                             f"{', '.join(x.name for x in _SOLVERS)}")
    if op is not None:
        if op.layout.shape_class not in s.layouts or (
                s.name == "bicubic" and op.layout.cell != 2):
            raise UnsupportedCombination(
                f"method {method!r} does not support layout {op.layout_id!r}")
    return s


def reconstruct(op: MeasurementOperator, y, method: str = "spl", cfg: SplConfig | None = None) -> Reconstruction:
    solver = get_solver(method, op)
    return solver.run(op, y, cfg)
