"""Ice-graph encoding of T-tetromino tilings on a periodic cell.

Geometry (all coordinates are pixel-corner coordinates, row first):

* The cell is cut into even-aligned 2x2 blocks.  Every T-tetromino owns one
  block: it covers both pixels on the block's *diagonal* plus one of the two
  *off-diagonal* pixels, which is the center of the T.  The diagonal of block
  ``(a, b)`` runs from ``(a, b)`` to ``(a+2, b+2)`` when ``a + b = 0 mod 4``
  and along the other diagonal otherwise.
* Graph nodes are the block corners not on a diagonal, i.e. the points with
  even coordinates and ``r + c = 2 mod 4``.  They form a diagonal square
  lattice with ``cell**2 / 8`` nodes per cell.  Each block contributes the
  edge joining its two off-diagonal corners, so there are ``(cell/2)**2``
  edges and every node has degree 4 on the torus.
* The arrow of a block points at the corner touched by the T's center pixel,
  the middle of its long side.  Bit 0 means the upper corner, bit 1 the lower.

A tiling exists iff every node has two incoming and two outgoing arrows.
Where the two centers at a node sit on opposite sides, the pairing of
centers with the protruding bar ends is fixed counter-clockwise around the
node; this is the chirality of :func:`tetrosense.tiling.layout_t4x4`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IceGraphError, ParameterError, SearchFailure
from .tiling import PixelGroup, SensorLayout, ShapeClass

SUPPORTED_GENERATOR_CELLS = (4, 8)

# quadrants around a node, clockwise: offset of the pixel from the node corner
_QUADRANTS = ((-1, -1), (-1, 0), (0, 0), (0, -1))  # TL, TR, BR, BL


@dataclass(frozen=True)
class IceGraph:
    cell: int
    arrows: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "arrows", tuple(int(b) for b in self.arrows))
        _check_cell(self.cell)
        if len(self.arrows) != n_edges(self.cell):
            raise IceGraphError(f"cell {self.cell} needs {n_edges(self.cell)} arrows, "
                                f"got {len(self.arrows)}")
        if any(b not in (0, 1) for b in self.arrows):
            raise IceGraphError("arrow bits must be 0 or 1")

    @classmethod
    def from_int(cls, cell: int, code: int) -> "IceGraph":
        """Graph whose arrow ``e`` is bit ``e`` of ``code``."""
        return cls(cell, tuple((code >> e) & 1 for e in range(n_edges(cell))))


def _check_cell(cell):
    if cell <= 0 or cell % 4:
        raise IceGraphError(f"ice graphs need a cell size divisible by 4, got {cell}")


def n_edges(cell: int) -> int:
    return (cell // 2) ** 2


def n_nodes(cell: int) -> int:
    return cell * cell // 8


def blocks(cell: int) -> list[tuple[int, int]]:
    """Top-left corners of the 2x2 blocks in raster order (one per edge)."""
    return [(a, b) for a in range(0, cell, 2) for b in range(0, cell, 2)]


def _block_geometry(a, b):
    """Diagonal pixels, then (upper, lower) off-diagonal pixels with their node corners."""
    if (a + b) % 4 == 0:
        diag = ((a, b), (a + 1, b + 1))
        upper = ((a, b + 1), (a, b + 2))
        lower = ((a + 1, b), (a + 2, b))
    else:
        diag = ((a, b + 1), (a + 1, b))
        upper = ((a, b), (a, b))
        lower = ((a + 1, b + 1), (a + 2, b + 2))
    return diag, upper, lower


@lru_cache(maxsize=None)
def _incidence(cell: int):
    """Node index of the upper and lower endpoint of every edge."""
    nodes = {}
    upper = []
    lower = []
    for a, b in blocks(cell):
        _, (_, zu), (_, zl) = _block_geometry(a, b)
        for z, out in ((zu, upper), (zl, lower)):
            key = (z[0] % cell, z[1] % cell)
            out.append(nodes.setdefault(key, len(nodes)))
    return np.array(upper), np.array(lower), tuple(nodes)


def node_positions(cell: int) -> tuple[tuple[int, int], ...]:
    return _incidence(cell)[2]


def in_degrees(g: IceGraph) -> np.ndarray:
    upper, lower, nodes = _incidence(g.cell)
    heads = np.where(np.asarray(g.arrows) == 1, lower, upper)
    return np.bincount(heads, minlength=len(nodes))


def icegraph_validate(g: IceGraph) -> bool:
    """True iff every node has exactly two incoming and two outgoing arrows."""
    return bool(np.all(in_degrees(g) == 2))


def _valid_mask(cell: int, bits: np.ndarray) -> np.ndarray:
    """Vectorized node rule for a batch of arrow assignments (rows)."""
    upper, lower, nodes = _incidence(cell)
    n = len(nodes)
    up = np.zeros((len(upper), n))
    up[np.arange(len(upper)), upper] = 1
    lo = np.zeros((len(lower), n))
    lo[np.arange(len(lower)), lower] = 1
    deg = (1 - bits) @ up + bits @ lo
    return np.all(deg == 2, axis=1)


def count_valid(cell: int) -> int:
    """Exhaustive count of valid graphs among all ``2**edges`` assignments."""
    e = n_edges(cell)
    if e > 20:
        raise ParameterError(f"exhaustive enumeration of 2**{e} graphs is not supported")
    codes = np.arange(2 ** e, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(e)) & 1).astype(np.float64)
    return int(_valid_mask(cell, bits).sum())


def icegraph_to_layout(g: IceGraph) -> SensorLayout:
    """Convert a valid ice graph to its T-only layout (group order = block order)."""
    if not icegraph_validate(g):
        raise IceGraphError("ice graph violates the two-in/two-out node rule")
    cell = g.cell
    # per node: list of (block index, quadrant of the center pixel, node corner in block coordinates)
    centers = {}
    info = []
    for e, (a, b) in enumerate(blocks(cell)):
        diag, upper, lower = _block_geometry(a, b)
        center, corner = lower if g.arrows[e] else upper
        quadrant = _QUADRANTS.index((center[0] - corner[0], center[1] - corner[1]))
        key = (corner[0] % cell, corner[1] % cell)
        centers.setdefault(key, []).append((e, quadrant))
        info.append((diag, center, corner, quadrant, key))

    groups = []
    for e, (diag, center, corner, q, key) in enumerate(info):
        (e1, q1), (e2, q2) = centers[key]
        other = q2 if e1 == e else q1
        # adjacent centers force the pairing; opposite ones pair counter-clockwise
        ext_q = (q + 1) % 4 if (other - q) % 4 == 3 else (q - 1) % 4
        ext = (corner[0] + _QUADRANTS[ext_q][0], corner[1] + _QUADRANTS[ext_q][1])
        bar_end = (2 * center[0] - ext[0], 2 * center[1] - ext[1])
        stem = diag[0] if diag[1] == bar_end else diag[1]
        assert bar_end in diag
        cells = (ext, center, bar_end, stem)
        groups.append(PixelGroup(tuple((r % cell, c % cell) for r, c in cells)))
    return SensorLayout(cell, tuple(groups), ShapeClass.T, f"ice{cell}x{cell}")


def layout_to_icegraph(layout: SensorLayout) -> IceGraph:
    """Inverse of :func:`icegraph_to_layout` for layouts in its image."""
    cell = layout.cell
    _check_cell(cell)
    if layout.shape_class is not ShapeClass.T:
        raise IceGraphError("only T-only layouts have an ice-graph encoding")
    index = {blk: e for e, blk in enumerate(blocks(cell))}
    bits = [None] * n_edges(cell)
    for grp in layout.groups:
        pts = grp.offsets(cell)
        pset = {tuple(p) for p in pts}
        deg = [sum((r + dr, c + dc) in pset for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)))
               for r, c in pts]
        if deg.count(3) != 1:
            raise IceGraphError(f"group {grp.cells} is not a T-tetromino")
        cr, cc = (int(v) % cell for v in pts[deg.index(3)])
        blk = (cr - cr % 2, cc - cc % 2)
        _, upper, lower = _block_geometry(*blk)
        if (cr, cc) == upper[0]:
            bit = 0
        elif (cr, cc) == lower[0]:
            bit = 1
        else:
            raise IceGraphError(f"T center {(cr, cc)} is on a block diagonal")
        e = index[blk]
        if bits[e] is not None:
            raise IceGraphError(f"block {blk} holds two T centers")
        bits[e] = bit
    if any(b is None for b in bits):
        raise IceGraphError("layout does not assign one T to every block")
    g = IceGraph(cell, tuple(bits))
    if not icegraph_validate(g) or icegraph_to_layout(g).cell_sets() != layout.cell_sets():
        raise IceGraphError("layout is not in the image of the ice-graph conversion")
    return g


def generate_geared(cell: int, seed: int, max_tries: int, batch: int = 4096) -> SensorLayout:
    """Draw uniform random ice graphs until one is valid; return its layout.

    Deterministic for a given ``seed``.  Raises :class:`SearchFailure` after
    ``max_tries`` invalid draws.
    """
    if cell not in SUPPORTED_GENERATOR_CELLS:
        raise ParameterError(f"unsupported cell size {cell}; random search supports "
                             f"{', '.join(map(str, SUPPORTED_GENERATOR_CELLS))}")
    if max_tries < 1:
        raise ParameterError("max_tries must be positive")
    rng = np.random.default_rng(seed)
    e = n_edges(cell)
    tried = 0
    while tried < max_tries:
        draws = rng.integers(0, 2, size=(batch, e))
        take = min(batch, max_tries - tried)
        ok = np.flatnonzero(_valid_mask(cell, draws[:take].astype(np.float64)))
        if len(ok):
            g = IceGraph(cell, tuple(draws[ok[0]]))
            layout = icegraph_to_layout(g)
            return SensorLayout(cell, layout.groups, ShapeClass.T, f"geared{cell}x{cell}-seed{seed}")
        tried += take
    raise SearchFailure(f"no valid {cell}x{cell} ice graph within {tried} tries", tried)
