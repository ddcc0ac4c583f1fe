"""The 11-tile checkerboard set and a constructive pattern generator."""
from __future__ import annotations

import numpy as np

from .core import Tile, TileSet, Tiling

# (name, (N, E, S, W)); R*/B* are the starred colours
CHECKER_TILES = (
    ("corner", ("R", "B", "R*", "B*")),
    ("red_a", ("R*", "0", "R", "1")),
    ("red_b", ("R", "0", "R*", "1")),
    ("blue_a", ("0", "B*", "1", "B")),
    ("blue_b", ("0", "B", "1", "B*")),
    ("diag_top", ("1", "1", "D", "0")),
    ("diag_end", ("1", "1", "0", "D")),
    ("diag_upper", ("1", "1", "D", "D")),
    ("diag_lower", ("D", "D", "0", "0")),
    ("zero", ("0", "0", "0", "0")),
    ("one", ("1", "1", "1", "1")),
)
ID = {name: i for i, (name, _) in enumerate(CHECKER_TILES)}
EDGE_TILES = tuple(ID[n] for n in ("corner", "red_a", "red_b", "blue_a", "blue_b"))
INTERIOR_TILES = tuple(range(5, 11))
BLUE_TILES = (ID["blue_a"], ID["blue_b"])
RED_TILES = (ID["red_a"], ID["red_b"])


def checkerboard_tileset(constrained: bool = True) -> TileSet:
    tiles = tuple(Tile(i, edges, name=name) for i, (name, edges) in enumerate(CHECKER_TILES))
    bonuses = {}
    if constrained:
        for t in INTERIOR_TILES:
            bonuses[(t, "unconditional")] = 2
            bonuses[(t, "above")] = -1
            bonuses[(t, "right")] = -1
    return TileSet(tiles, {}, bonuses, name="checkerboard" + ("'" if constrained else ""))


def checkerboard_cell(u: int, v: int, s: int) -> int:
    """Tile at local offset ``(u, v)`` inside a period-``s`` square (corner at 0, 0)."""
    k = s - 1
    if v == 0:
        if u == 0:
            return ID["corner"]
        return ID["blue_a"] if u % 2 else ID["blue_b"]
    r = s - v  # interior row, 1 = just below the top edge
    if u == 0:
        return ID["red_a"] if r % 2 else ID["red_b"]
    if r == 1:
        return ID["diag_top"] if u == 1 else ID["one"]
    if u == r - 1:
        return ID["diag_lower"]
    if u == r:
        return ID["diag_end"] if r == k else ID["diag_upper"]
    return ID["zero"] if u < r - 1 else ID["one"]


def valid_periods(limit: int):
    """Square periods admitted by the tileset: even and at least 4."""
    return [s for s in range(4, limit + 1, 2)]


def checkerboard_pattern(s: int, width: int, height: int | None = None, x0: int = 0, y0: int = 0) -> Tiling:
    """Period-``s`` checkerboard with a corner at ``(x0, y0)`` (mod s)."""
    if s < 4 or s % 2:
        raise ValueError("checkerboard periods are even and >= 4")
    height = width if height is None else height
    arr = np.empty((height, width), dtype=int)
    for y in range(height):
        for x in range(width):
            arr[y, x] = checkerboard_cell((x - x0) % s, (y - y0) % s, s)
    return Tiling.from_array(arr)


def corner_at_origin_family(width: int, height: int | None = None):
    """All distinct crops of corner-at-origin checkerboards, any period.

    Crops stop changing once ``s`` exceeds ``width + height + 2``; larger
    squares show only the corner row, the red column and zeros.
    """
    height = width if height is None else height
    seen = {}
    for s in valid_periods(width + height + 6):
        t = checkerboard_pattern(s, width, height)
        seen.setdefault(t.cells, (s, t))
    return sorted(seen.values(), key=lambda p: (p[0], p[1].cells))


def complete_squares(t: Tiling, s: int | None = None):
    """Squares whose four corner tiles all lie in the tiling.

    Returns ``(x0, y0, s)`` for each square with corners at ``(x0, y0)``,
    ``(x0+s, y0)``, ``(x0, y0+s)`` and ``(x0+s, y0+s)``.  When ``s`` is not
    given it is read off from corner spacing along each row.
    """
    arr = t.array()
    corners = set(zip(*np.nonzero(arr == ID["corner"])))  # (y, x)
    out = []
    for (y, x) in sorted(corners):
        sizes = [s] if s is not None else sorted({x2 - x for (y2, x2) in corners if y2 == y and x2 > x})
        for size in sizes[:1]:
            if {(y, x + size), (y + size, x), (y + size, x + size)} <= corners:
                out.append((int(x), int(y), int(size)))
    return out


def skeleton(t: Tiling) -> tuple:
    """Edge and corner tiles kept, every interior tile replaced by ``-1``."""
    arr = t.array()
    return tuple(map(tuple, np.where(np.isin(arr, INTERIOR_TILES), -1, arr)))
