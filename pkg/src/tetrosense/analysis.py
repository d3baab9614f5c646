"""Transform-domain measurement matrices, mutual coherence and the Welch bound."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import DimensionError, ParameterError
from .sensing import MeasurementOperator


class TransformKind(str, enum.Enum):
    DFT2D = "dft"
    DCT2D = "dct"
    IDENTITY = "identity"


@dataclass(frozen=True)
class TransformBasis:
    """Orthonormal 2-D basis; atom ``(sigma, rho)`` is column ``sigma*N + rho``.

    DFT atoms are ``exp(2j*pi*(alpha*sigma/M + beta*rho/N)) / sqrt(M*N)``;
    DCT atoms are products of orthonormal DCT-II basis vectors.
    """

    kind: TransformKind
    M: int
    N: int

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind(self.kind))

    def _axis(self, n):
        if self.kind is TransformKind.DFT2D:
            k = np.arange(n)
            return np.exp(2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)
        if self.kind is TransformKind.DCT2D:
            # rows of the forward DCT matrix are the atoms; transpose to columns
            return sfft.dct(np.eye(n), norm="ortho", axis=0).T
        return np.eye(n)

    def matrix(self) -> np.ndarray:
        """Dense ``(M*N, M*N)`` matrix with pixel rows and atom columns."""
        return np.kron(self._axis(self.M), self._axis(self.N))

    def atom(self, sigma: int, rho: int) -> np.ndarray:
        return np.outer(self._axis(self.M)[:, sigma], self._axis(self.N)[:, rho])


@dataclass
class CoherenceReport:
    mu: float
    welch: float
    transform: TransformKind
    M: int
    N: int
    L: int
    argmax_pair: tuple[tuple[int, int], tuple[int, int]]
    zero_columns: list = None
    layout: str = ""

    CSV_HEADER = "layout,transform,M,N,L,mu,welch,argmax_sigma_rho,argmax_sigma2_rho2"

    def csv_row(self) -> str:
        (s1, r1), (s2, r2) = self.argmax_pair
        return (f"{self.layout},{self.transform.value},{self.M},{self.N},{self.L},"
                f"{self.mu:.6f},{self.welch:.6f},{s1}:{r1},{s2}:{r2}")


def transformed_matrix(op: MeasurementOperator, phi: TransformBasis) -> np.ndarray:
    """``A'[i, (sigma, rho)]``: atom ``(sigma, rho)`` summed over support ``i``."""
    if (phi.M, phi.N) != op.shape:
        raise DimensionError(f"transform {phi.M}x{phi.N} does not match operator {op.M}x{op.N}")
    return np.asarray(op.matrix() @ phi.matrix())


def mutual_coherence(Ap, zero_tol: float = 1e-10):
    """Largest normalized inner product between distinct columns of ``Ap``.

    Columns whose norm is below ``zero_tol`` are left out.  Returns
    ``(mu, (j, k), zero_columns)`` with ``j < k`` the maximizing column pair.
    """
    Ap = np.asarray(Ap)
    gram = Ap.conj().T @ Ap
    norms = np.sqrt(np.abs(np.real(np.diag(gram))))
    keep = np.flatnonzero(norms > zero_tol)
    zero = np.flatnonzero(norms <= zero_tol).tolist()
    if len(keep) < 2:
        raise ParameterError("coherence is undefined with fewer than two nonzero columns")
    sub = np.abs(gram[np.ix_(keep, keep)]) / np.outer(norms[keep], norms[keep])
    np.fill_diagonal(sub, -np.inf)
    flat = int(np.argmax(sub))
    j, k = divmod(flat, len(keep))
    j, k = sorted((int(keep[j]), int(keep[k])))
    return float(sub.flat[flat]), (j, k), zero


def coherence(op: MeasurementOperator, phi: TransformBasis | None = None) -> CoherenceReport:
    """Mutual coherence of the measurement matrix in the basis ``phi`` (default DFT)."""
    if phi is None:
        phi = TransformBasis(TransformKind.DFT2D, op.M, op.N)
    mu, (j, k), zero = mutual_coherence(transformed_matrix(op, phi))
    pair = (divmod(j, op.N), divmod(k, op.N))
    return CoherenceReport(
        mu=mu,
        welch=welch_bound(op.M, op.N, op.L),
        transform=phi.kind,
        M=op.M,
        N=op.N,
        L=op.L,
        argmax_pair=pair,
        zero_columns=[divmod(z, op.N) for z in zero],
        layout=op.layout_id,
    )


def welch_bound(M: int, N: int, L: int) -> float:
    """First Welch bound ``sqrt((MN - L) / (L (MN - 1)))`` for ``1 <= L <= MN``."""
    n = M * N
    if not 1 <= L <= n:
        raise ParameterError(f"L = {L} outside [1, M*N = {n}]")
    if L == n:
        return 0.0
    return math.sqrt((n - L) / (L * (n - 1)))
