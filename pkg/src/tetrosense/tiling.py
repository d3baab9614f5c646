"""Periodic sensor layouts built from four-pixel groups.

A layout is a square cell of side ``cell`` partitioned into ``cell**2 / 4``
pixel groups.  Coordinates are stored modulo the cell (the cell is a torus),
so a group that protrudes into the neighboring cell replica simply wraps.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import LayoutParseError, LayoutValidationError, ParameterError

_NEIGHBORS = ((0, 1), (1, 0), (0, -1), (-1, 0))


class ShapeClass(str, enum.Enum):
    SQUARE = "square2x2"
    T = "T"
    TLZ = "TLZ"


@dataclass(frozen=True)
class PixelGroup:
    """Four cell positions read out as one binned pixel."""

    cells: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple((int(r), int(c)) for r, c in self.cells))

    def offsets(self, cell: int) -> np.ndarray:
        """Connected embedding of the group in the plane (shape ``(4, 2)``).

        Groups that are connected without wrapping keep their coordinates;
        otherwise the group is unwrapped across the cell border starting from
        its first cell.  Raises ``ValueError`` if the group is not connected
        on the torus.
        """
        return _unwrap(self.cells, cell)


def _connected(points) -> bool:
    pts = set(points)
    if not pts:
        return False
    start = next(iter(pts))
    seen = {start}
    stack = [start]
    while stack:
        r, c = stack.pop()
        for dr, dc in _NEIGHBORS:
            q = (r + dr, c + dc)
            if q in pts and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen) == len(pts)


def _unwrap(cells, cell):
    cells = [tuple(p) for p in cells]
    if len(set(cells)) == len(cells) and _connected(cells):
        return np.array(cells, dtype=np.int64)
    members = {(r % cell, c % cell) for r, c in cells}
    start = min(members)
    placed = {start: start}
    queue = [start]
    while queue:
        key = queue.pop(0)
        r, c = placed[key]
        for dr, dc in _NEIGHBORS:
            q = (r + dr, c + dc)
            qk = (q[0] % cell, q[1] % cell)
            if qk in members and qk not in placed:
                placed[qk] = q
                queue.append(qk)
    if len(placed) != len(members) or len(members) != len(cells):
        raise ValueError(f"group {cells} is not edge-connected on the {cell}x{cell} torus")
    # keep the caller's cell order
    return np.array([placed[(r % cell, c % cell)] for r, c in cells], dtype=np.int64)


# canonical forms of the free tetrominoes (rotations and mirror images identified)
def _canonical(points) -> tuple:
    pts = [tuple(p) for p in points]
    best = None
    for k in range(8):
        q = pts
        for _ in range(k % 4):
            q = [(c, -r) for r, c in q]
        if k >= 4:
            q = [(r, -c) for r, c in q]
        r0 = min(p[0] for p in q)
        c0 = min(p[1] for p in q)
        form = tuple(sorted((r - r0, c - c0) for r, c in q))
        if best is None or form < best:
            best = form
    return best


_TETROMINOES = {
    _canonical([(0, 0), (0, 1), (1, 0), (1, 1)]): "O",
    _canonical([(0, 0), (0, 1), (0, 2), (0, 3)]): "I",
    _canonical([(0, 0), (0, 1), (0, 2), (1, 1)]): "T",
    _canonical([(0, 0), (1, 0), (2, 0), (2, 1)]): "L",
    _canonical([(0, 0), (0, 1), (1, 1), (1, 2)]): "Z",
}

_ALLOWED = {
    ShapeClass.SQUARE: {"O"},
    ShapeClass.T: {"T"},
    ShapeClass.TLZ: {"T", "L", "Z"},
}


def classify_shape(points) -> str | None:
    """Name of the tetromino formed by ``points`` ("O", "I", "T", "L", "Z") or None."""
    pts = [tuple(p) for p in points]
    if len(pts) != 4 or len(set(pts)) != 4 or not _connected(pts):
        return None
    return _TETROMINOES.get(_canonical(pts))


def is_t_shape(points) -> bool:
    """T predicate: exactly one cell has three in-group 4-neighbors."""
    pts = {tuple(p) for p in points}
    if len(pts) != 4:
        return False
    degrees = [sum((r + dr, c + dc) in pts for dr, dc in _NEIGHBORS) for r, c in pts]
    return degrees.count(3) == 1 and _connected(pts)


@dataclass(frozen=True)
class SensorLayout:
    cell: int
    groups: tuple[PixelGroup, ...]
    shape_class: ShapeClass
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "shape_class", ShapeClass(self.shape_class))
        object.__setattr__(self, "groups", tuple(
            g if isinstance(g, PixelGroup) else PixelGroup(g) for g in self.groups))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def offsets(self) -> np.ndarray:
        """Unwrapped group coordinates, shape ``(n_groups, 4, 2)``."""
        return np.stack([g.offsets(self.cell) for g in self.groups])

    def cell_sets(self) -> frozenset:
        """Groups as a set of frozensets, for order-independent comparison."""
        return frozenset(frozenset(g.cells) for g in self.groups)

    def sorted(self) -> "SensorLayout":
        """Same layout with groups in (min row, min col) order."""
        def key(g):
            return (min(r for r, _ in g.cells), min(c for _, c in g.cells), sorted(g.cells))
        groups = tuple(PixelGroup(tuple(sorted(g.cells))) for g in sorted(self.groups, key=key))
        return SensorLayout(self.cell, groups, self.shape_class, self.name)


@dataclass
class ValidationReport:
    cell: int
    shape_class: ShapeClass
    group_count: int
    expected_groups: int
    exact_cover: bool
    first_bad_position: tuple[int, int] | None
    shapes: list
    shape_failures: list[int]
    errors: list[str]

    @property
    def ok(self) -> bool:
        return not self.errors

    def lines(self) -> list[str]:
        out = [
            f"cell: {self.cell}",
            f"shape class: {self.shape_class.value}",
            f"groups: {self.group_count} (expected {self.expected_groups})",
            f"exact cover: {'pass' if self.exact_cover else 'FAIL'}",
        ]
        counts = {}
        for s in self.shapes:
            counts[s or "?"] = counts.get(s or "?", 0) + 1
        out.append("shapes: " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
        out.extend(f"error: {e}" for e in self.errors)
        out.append("status: " + ("OK" if self.ok else "INVALID"))
        return out

    def __str__(self):
        return "\n".join(self.lines())


def validate_layout(layout: SensorLayout) -> ValidationReport:
    """Check exact cover on the torus, group count and per-group shapes."""
    k = layout.cell
    errors = []
    expected = (k * k) // 4 if k > 0 else 0
    if k <= 0 or (k * k) % 4:
        errors.append(f"cell {k}: cell**2 must be a positive multiple of 4")
    if layout.n_groups != expected:
        errors.append(f"group count {layout.n_groups} != cell**2/4 = {expected}")

    count = np.zeros((max(k, 1), max(k, 1)), dtype=np.int64)
    range_ok = True
    for i, g in enumerate(layout.groups):
        if len(g.cells) != 4:
            errors.append(f"group {i} has {len(g.cells)} cells, expected 4")
        for r, c in g.cells:
            if not (0 <= r < k and 0 <= c < k):
                errors.append(f"group {i}: cell ({r}, {c}) outside [0, {k})")
                range_ok = False
            else:
                count[r, c] += 1

    first_bad = None
    if range_ok and k > 0:
        bad = np.argwhere(count != 1)
        if len(bad):
            first_bad = (int(bad[0][0]), int(bad[0][1]))
            n = int(count[first_bad])
            what = "uncovered" if n == 0 else f"covered {n} times"
            errors.append(f"exact cover violated at cell position {first_bad}: {what}")
    exact = range_ok and first_bad is None

    shapes = []
    failures = []
    allowed = _ALLOWED[layout.shape_class]
    for i, g in enumerate(layout.groups):
        try:
            name = classify_shape(g.offsets(k)) if k > 0 else None
        except ValueError:
            name = None
        shapes.append(name)
        if name not in allowed:
            failures.append(i)
            errors.append(f"group {i} at {min(g.cells)} is {name or 'not a tetromino'}, "
                          f"not allowed in class {layout.shape_class.value}")
            if first_bad is None:
                first_bad = min(g.cells)
    return ValidationReport(k, layout.shape_class, layout.n_groups, expected, exact,
                            first_bad, shapes, failures, errors)


def require_valid(layout: SensorLayout) -> SensorLayout:
    report = validate_layout(layout)
    if not report.ok:
        raise LayoutValidationError(f"layout {layout.name!r}: {report.errors[0]}",
                                    report.first_bad_position)
    return layout


# ---------------------------------------------------------------- built-ins

def layout_square2x2() -> SensorLayout:
    """Conventional 2x2 binning: one square group per 2x2 cell."""
    return SensorLayout(2, (PixelGroup(((0, 0), (0, 1), (1, 0), (1, 1))),),
                        ShapeClass.SQUARE, "square2x2")


def layout_t4x4() -> SensorLayout:
    """Four T-tetrominoes in a pinwheel around the cell center.

    Chirality: the top T has its bar on row 0 (columns 0-2) and its stem at
    (1, 1); the others follow by clockwise quarter turns about the point
    (2, 2).  The mirror image is the only other T tiling of the 4x4 square.
    """
    groups = (
        ((0, 0), (0, 1), (0, 2), (1, 1)),
        ((0, 3), (1, 3), (2, 3), (1, 2)),
        ((3, 1), (3, 2), (3, 3), (2, 2)),
        ((1, 0), (2, 0), (3, 0), (2, 1)),
    )
    return SensorLayout(4, tuple(PixelGroup(g) for g in groups), ShapeClass.T, "t4x4")


def _data_layout(filename, name):
    text = resources.files("tetrosense").joinpath("data").joinpath(filename).read_text(encoding="utf-8")
    layout = parse_layout(text, name=name)
    return require_valid(layout)


def layout_galdo6x6() -> SensorLayout:
    return _data_layout("galdo6x6.layout", "galdo6x6")


def layout_geared8x8() -> SensorLayout:
    return _data_layout("geared8x8.layout", "geared8x8")


BUILTIN_LAYOUTS = {
    "square2x2": layout_square2x2,
    "t4x4": layout_t4x4,
    "galdo6x6": layout_galdo6x6,
    "geared8x8": layout_geared8x8,
}


def get_layout(spec: str) -> SensorLayout:
    """Resolve a built-in layout id or a path to a layout file."""
    if spec in BUILTIN_LAYOUTS:
        return BUILTIN_LAYOUTS[spec]()
    path = Path(spec)
    if path.is_file():
        return layout_from_file(path)
    raise ParameterError(f"unknown layout {spec!r}: not a built-in id "
                         f"({', '.join(BUILTIN_LAYOUTS)}) or an existing file")


# --------------------------------------------------------------- file format

def parse_layout(text: str, name: str = "custom") -> SensorLayout:
    """Parse the text layout format (no validation beyond syntax)."""
    cell = None
    shape = None
    groups = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "cell":
                if cell is not None or len(rest) != 1:
                    raise ValueError("expected a single 'cell <k>' line")
                cell = int(rest[0])
                if cell <= 0:
                    raise ValueError("cell must be positive")
            elif key == "shape":
                if shape is not None or len(rest) != 1:
                    raise ValueError("expected a single 'shape <class>' line")
                shape = ShapeClass(rest[0])
            elif key == "group":
                if cell is None or shape is None:
                    raise ValueError("'group' before 'cell' and 'shape' headers")
                if len(rest) != 4:
                    raise ValueError(f"group needs 4 cells, got {len(rest)}")
                pts = []
                for tok in rest:
                    r, c = tok.split(",")
                    r, c = int(r), int(c)
                    if not (0 <= r < cell and 0 <= c < cell):
                        raise ValueError(f"coordinate {tok} outside [0, {cell})")
                    pts.append((r, c))
                groups.append(PixelGroup(tuple(pts)))
            else:
                raise ValueError(f"unknown keyword {key!r}")
        except ValueError as exc:
            raise LayoutParseError(f"line {lineno}: {exc}") from None
    if cell is None or shape is None:
        raise LayoutParseError("missing 'cell' or 'shape' header")
    return SensorLayout(cell, tuple(groups), shape, name)


def format_layout(layout: SensorLayout) -> str:
    lay = layout.sorted()
    lines = [f"cell {lay.cell}", f"shape {lay.shape_class.value}"]
    for g in lay.groups:
        lines.append("group " + " ".join(f"{r},{c}" for r, c in g.cells))
    return "\n".join(lines) + "\n"


def layout_from_file(path) -> SensorLayout:
    """Read and validate a layout file; raises on parse or invariant errors."""
    path = Path(path)
    layout = parse_layout(path.read_text(encoding="utf-8"), name=path.stem)
    return require_valid(layout)


def write_layout(layout: SensorLayout, path, header: str | None = None) -> None:
    text = format_layout(layout)
    if header:
        text = "".join(f"# {line}\n" for line in header.splitlines()) + text
    Path(path).write_text(text, encoding="utf-8")


def layout_ascii(layout: SensorLayout, reps: int = 1) -> str:
    """Text picture of ``reps x reps`` cell replicas, one symbol per group."""
    symbols = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"
    k = layout.cell
    grid = np.full((k, k), ".", dtype=object)
    for i, g in enumerate(layout.groups):
        for r, c in g.cells:
            grid[r, c] = symbols[i % len(symbols)]
    tiled = np.tile(grid, (reps, reps))
    return "\n".join("".join(row) for row in tiled)


def all_group_index(layout: SensorLayout) -> np.ndarray:
    """``cell x cell`` array giving the group index covering each position."""
    k = layout.cell
    out = np.full((k, k), -1, dtype=np.int64)
    for i, g in enumerate(layout.groups):
        for r, c in g.cells:
            out[r, c] = i
    return out

