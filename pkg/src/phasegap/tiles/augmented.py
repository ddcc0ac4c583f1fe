"""Checkerboard tiles carrying a single ● on each square's top edge.

Two realizations of the marker layer:

* ``semantic``: ● variants of the two blue edge tiles plus a global rule that
  checks every horizontal blue run against the offset ``ceil(s^(1/8))``.
* ``full``: blue tiles carry a counter ``(a, b)`` (offset from the left
  corner, distance to the right one), and the ● position comes from a table
  filled in by running the counter and root machines.  Only local terms.

Both modes share ``base_of`` (underlying checkerboard tile) and ``marked``
(whether the tile carries ●) so tilings can be projected onto the semantic
alphabet and compared.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ValidationError
from .checkerboard import BLUE_TILES, CHECKER_TILES, ID, INTERIOR_TILES, checkerboard_pattern
from .core import Tile, TileSet, Tiling
from .tm import ceil_root

MARK = "●"
BLUE_A, BLUE_B, CORNER = ID["blue_a"], ID["blue_b"], ID["corner"]
MARKED_IDS = {BLUE_A: 11, BLUE_B: 12}  # semantic ids of the ● variants
DEFAULT_S_MAX = 8


def marker_offset(s: int) -> int:
    """Offset of ● from the left corner of a side-``s`` square."""
    if s < 1:
        raise ValidationError("square side must be positive")
    return ceil_root(s, 8)


@lru_cache(maxsize=None)
def machine_offset(s: int) -> int:
    """Same offset, but read off the dovetailed counter/root machine run."""
    from .layers import side_length_root
    return side_length_root(s).root


@dataclass(frozen=True)
class AugmentedTileSet(TileSet):
    mode: str = "semantic"
    s_max: int = DEFAULT_S_MAX
    base_of: tuple = ()
    marked: tuple = ()

    def leaf_constraints(self) -> tuple:
        if self.mode != "semantic":
            return ()
        base, mk, s_max = np.array(self.base_of), np.array(self.marked), self.s_max
        return (lambda arr: marker_cost(base[arr], mk[arr], s_max),)

    def project(self, t: Tiling) -> Tiling:
        """Map onto the semantic alphabet (checkerboard ids, ● variants 11/12)."""
        arr = t.array()
        base, mk = np.array(self.base_of)[arr], np.array(self.marked)[arr]
        out = base.copy()
        for b, m in MARKED_IDS.items():
            out[(base == b) & mk] = m
        return Tiling.from_array(out)


def _base_bonuses():
    out = {}
    for t in INTERIOR_TILES:
        out[(t, "unconditional")] = 2
        out[(t, "above")] = -1
        out[(t, "right")] = -1
    return out


def augmented_checkerboard_tileset(mode: str = "semantic", s_max: int = DEFAULT_S_MAX) -> AugmentedTileSet:
    """Constrained checkerboard plus the ● layer (see the module docstring).

    In ``full`` mode a ● variant costs ``+1`` unconditionally and ``-1`` when
    it sits above another tile, while an unmarked tile at a ● offset costs
    ``+1`` above; so off the bottom row exactly the prescribed position
    carries ● at zero cost, and the bottom row carries none.
    """
    if mode == "semantic":
        tiles = [Tile(i, e, name=n) for i, (n, e) in enumerate(CHECKER_TILES)]
        for b, m in MARKED_IDS.items():
            name, edges = CHECKER_TILES[b]
            tiles.append(Tile(m, edges, {MARK}, name + MARK))
        base = tuple(range(11)) + tuple(MARKED_IDS)
        marked = (False,) * 11 + (True, True)
        return AugmentedTileSet(tuple(tiles), {}, _base_bonuses(), ("base",), frozenset({MARK}),
                                "augmented-semantic", mode="semantic", s_max=s_max,
                                base_of=base, marked=marked)
    if mode != "full":
        raise ValidationError(f"unknown mode {mode!r}")

    tiles, base, marked, bonuses = [], [], [], {}
    interior = _base_bonuses()

    def add(edges, b, mk=False, name=""):
        i = len(tiles)
        tiles.append(Tile(i, edges, {MARK} if mk else (), name))
        base.append(b)
        marked.append(mk)
        for ctx in ("unconditional", "above", "right"):
            if (b, ctx) in interior:
                bonuses[(i, ctx)] = interior[(b, ctx)]
        return i

    for i, (name, edges) in enumerate(CHECKER_TILES):
        if i not in BLUE_TILES and i != CORNER:
            add(edges, i, name=name)
    for s in range(2, s_max + 1):
        add(("R", ("B", 1, s - 1), "R*", ("B*", "end")), CORNER, name=f"corner[{s}]")
    for a in range(1, s_max):
        for b in range(1, s_max - a + 1):
            kind = BLUE_A if a % 2 else BLUE_B
            n, e_col, s_col, w_col = CHECKER_TILES[kind][1]
            east = (e_col, a + 1, b - 1) if b > 1 else (e_col, "end")
            edges = (n, east, s_col, (w_col, a, b))
            nm = f"{CHECKER_TILES[kind][0]}[{a},{b}]"
            plain = add(edges, kind, name=nm)
            if a == machine_offset(a + b):
                bonuses[(plain, "above")] = 1
                m = add(edges, kind, True, nm + MARK)
                bonuses[(m, "unconditional")] = 1
                bonuses[(m, "above")] = -1
    return AugmentedTileSet(tuple(tiles), {}, bonuses, ("base",), frozenset({MARK}), "augmented-full",
                            mode="full", s_max=s_max, base_of=tuple(base), marked=tuple(marked))


def _runs(row_base):
    """Maximal runs of blue tiles as ``(start, end)`` (inclusive)."""
    blue = np.isin(row_base, BLUE_TILES)
    out, x, w = [], 0, len(row_base)
    while x < w:
        if blue[x]:
            j = x
            while j + 1 < w and blue[j + 1]:
                j += 1
            out.append((x, j))
            x = j + 1
        else:
            x += 1
    return out


def run_candidates(row_base, i: int, j: int, s_max: int):
    """Counter assignments ``(a0, s)`` consistent with the run ``i..j``.

    ``a0`` is the offset of cell ``i`` from its left corner; its parity is
    fixed by the colour of the first tile.  A run closed by a corner has
    ``s = a0 + k``; an open run only needs ``s >= a0 + k``.
    """
    w, k = len(row_base), j - i + 1
    anchored = i > 0 and row_base[i - 1] == CORNER
    closed = j + 1 < w and row_base[j + 1] == CORNER
    parity = 1 if row_base[i] == BLUE_A else 0
    a0s = [1] if anchored else [a for a in range(1, s_max + 1) if a % 2 == parity]
    out = []
    for a0 in a0s:
        if a0 % 2 != parity:
            continue
        lo = a0 + k
        for s in ([lo] if closed else range(lo, s_max + 1)):
            if 2 <= s <= s_max:
                out.append((a0, s))
    return out


def _run_errors(row_base, row_mk, i, j, s_max, bottom):
    """Best candidate's wrong cells, or ``None`` when no counter fits."""
    best = None
    for a0, s in run_candidates(row_base, i, j, s_max):
        want = np.zeros(j - i + 1, dtype=bool)
        if not bottom:
            r = marker_offset(s) - a0
            if 0 <= r <= j - i:
                want[r] = True
        wrong = np.flatnonzero(want != row_mk[i:j + 1]) + i
        if best is None or len(wrong) < len(best):
            best = wrong
    return best


def marker_cost(base: np.ndarray, mk: np.ndarray, s_max: int = DEFAULT_S_MAX) -> int:
    """Number of misplaced ● (plus one per run no counter can explain)."""
    return int(marker_error_map(base, mk, s_max).sum())


def marker_error_map(base: np.ndarray, mk: np.ndarray, s_max: int = DEFAULT_S_MAX) -> np.ndarray:
    out = np.zeros(base.shape, dtype=np.int64)
    for y in range(base.shape[0]):
        for i, j in _runs(base[y]):
            wrong = _run_errors(base[y], mk[y], i, j, s_max, bottom=(y == 0))
            if wrong is None:
                out[y, i] += 1 + int(mk[y, i:j + 1].sum())
            else:
                out[y, wrong] += 1
    return out


def augmented_pattern(s: int, width: int, height: int | None = None) -> Tiling:
    """Corner-at-origin checkerboard in semantic ids with ● on every top edge above y=0."""
    t = checkerboard_pattern(s, width, height).array()
    r = marker_offset(s)
    for y in range(s, t.shape[0], s):
        for x in range(r, t.shape[1], s):
            t[y, x] = MARKED_IDS[int(t[y, x])]
    return Tiling.from_array(t)


@dataclass(frozen=True)
class MarkerFinding:
    corner: tuple
    kind: str  # intact | bottom_edge | truncated | penalty
    side: int | None = None
    location: tuple | None = None
    penalty: int = 0


def penalty_map(ts: AugmentedTileSet, t: Tiling) -> np.ndarray:
    """Local penalty per cell: site term, east and north bonds, ● errors."""
    arr = t.array()
    h, w = arr.shape
    wh, wv, _ = ts.tables()
    site = ts.site_costs(w, h)
    pen = np.take_along_axis(site, arr[..., None], axis=2)[..., 0].astype(np.int64)
    pen[:, :-1] += wh[arr[:, :-1], arr[:, 1:]]
    pen[:-1, :] += wv[arr[:-1, :], arr[1:, :]]
    if ts.mode == "semantic":
        pen += marker_error_map(np.array(ts.base_of)[arr], np.array(ts.marked)[arr], ts.s_max)
    return pen


def audit_markers(ts: AugmentedTileSet, t: Tiling) -> list:
    """One finding per corner tile with a blue tile to its right.

    ``intact``: the run closes at a corner ``s`` cells away, the side-``s``
    square below it lies in the grid and is penalty-free, and the run has a
    single ● at ``marker_offset(s)``.  Otherwise the nearest positive
    penalty (Manhattan distance, ties by ``(y, x)``) is reported; when the
    whole grid is penalty-free the square is cut off by the grid
    (``bottom_edge`` on row 0, else ``truncated``).
    """
    arr = t.array()
    if arr.size == 0:
        return []
    h, w = arr.shape
    base = np.array(ts.base_of)[arr]
    mk = np.array(ts.marked)[arr]
    pen = penalty_map(ts, t)
    bad = [(int(y), int(x)) for y, x in zip(*np.nonzero(pen > 0))]
    out = []
    for y0 in range(h):
        for x0 in range(w - 1):
            if base[y0, x0] != CORNER or base[y0, x0 + 1] not in BLUE_TILES:
                continue
            x1 = x0 + 1
            while x1 < w and base[y0, x1] in BLUE_TILES:
                x1 += 1
            s = x1 - x0 if x1 < w and base[y0, x1] == CORNER else None
            if s is not None and y0 - s >= 0:
                region = (slice(y0 - s, y0 + 1), slice(x0, x0 + s + 1))
                want = checkerboard_pattern(s, s + 1, s + 1).array()
                clean = (pen[y0 - s:y0, x0:x0 + s].sum() == 0 and pen[y0, x0:x0 + s].sum() == 0
                         and np.array_equal(base[region], want))
                marks = np.flatnonzero(mk[y0, x0:x1])
                if clean and list(marks) == [marker_offset(s)]:
                    out.append(MarkerFinding((x0, y0), "intact", s))
                    continue
            if bad:
                yb, xb = min(bad, key=lambda p: (abs(p[1] - x0) + abs(p[0] - y0), p))
                out.append(MarkerFinding((x0, y0), "penalty", s, (xb, yb), int(pen[yb, xb])))
            else:
                out.append(MarkerFinding((x0, y0), "bottom_edge" if y0 == 0 else "truncated", s))
    return out
