"""Weighted Wang tiles: data types, scoring and a branch-and-bound enumerator.

Conventions
-----------
* Edges are stored as ``(north, east, south, west)``.
* ``Tiling.cells[y][x]`` holds a tile id, ``y = 0`` is the bottom row.
* A horizontal pair ``(left, right)`` matches when ``left.E == right.W``; a
  vertical pair ``(below, above)`` matches when ``below.N == above.S``.
* Site bonuses are keyed by context: ``"unconditional"``, ``"above"`` (the
  tile sits on top of another tile, i.e. ``y > 0``) and ``"right"`` (``x > 0``).

All scores are Python integers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import BudgetExhausted, ValidationError

N, E, S, W = range(4)
CONTEXTS = ("unconditional", "above", "right")
SIDES = ("north", "east", "south", "west")
DEFAULT_NODE_BUDGET = 2_000_000
TABLE_LIMIT = 1500  # above this many tiles the scorer compares edges directly


@dataclass(frozen=True)
class Tile:
    id: int
    edges: tuple
    decorations: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        if len(self.edges) != 4:
            raise ValidationError("a tile needs exactly four edges (n, e, s, w)")
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "decorations", frozenset(self.decorations))

    @property
    def n(self):
        return self.edges[N]

    @property
    def e(self):
        return self.edges[E]

    @property
    def s(self):
        return self.edges[S]

    @property
    def w(self):
        return self.edges[W]


@dataclass(frozen=True)
class TileSet:
    tiles: tuple
    pair_weights: dict = field(default_factory=dict)
    site_bonuses: dict = field(default_factory=dict)
    layers: tuple = ("base",)
    decoration_alphabet: frozenset = frozenset()
    name: str = ""
    border_costs: dict = field(default_factory=dict)

    def __post_init__(self):
        tiles = tuple(self.tiles)
        if [t.id for t in tiles] != list(range(len(tiles))):
            raise ValidationError("tile ids must be 0..n-1 in order")
        for t in tiles:
            extra = t.decorations - set(self.decoration_alphabet)
            if extra:
                raise ValidationError(f"tile {t.id} uses undeclared decorations {sorted(extra)}")
            if len(self.layers) > 1 and not all(isinstance(c, tuple) and len(c) == len(self.layers) for c in t.edges):
                raise ValidationError(f"tile {t.id} is missing a layer")
        for (a, b, o), w in self.pair_weights.items():
            if o not in ("h", "v") or not (0 <= a < len(tiles) and 0 <= b < len(tiles)):
                raise ValidationError(f"bad pair weight key {(a, b, o)}")
            if int(w) != w:
                raise ValidationError("pair weights must be integers")
        for (a, ctx), w in self.site_bonuses.items():
            if ctx not in CONTEXTS or not 0 <= a < len(tiles):
                raise ValidationError(f"bad site bonus key {(a, ctx)}")
            if int(w) != w:
                raise ValidationError("site bonuses must be integers")
        for (a, side), w in self.border_costs.items():
            if side not in SIDES or not 0 <= a < len(tiles) or int(w) != w:
                raise ValidationError(f"bad border cost key {(a, side)}")
        object.__setattr__(self, "tiles", tiles)

    def __len__(self):
        return len(self.tiles)

    def leaf_constraints(self) -> tuple:
        """Global terms evaluated on complete tilings; none for plain tilesets."""
        return ()

    def by_name(self, name: str) -> Tile:
        for t in self.tiles:
            if t.name == name:
                return t
        raise KeyError(name)

    # integer tables used by the scorer and the enumerator
    def tables(self):
        cache = self.__dict__.get("_tables")
        if cache is not None:
            return cache
        n = len(self.tiles)
        east = [t.e for t in self.tiles]
        west = [t.w for t in self.tiles]
        north = [t.n for t in self.tiles]
        south = [t.s for t in self.tiles]
        wh = np.array([[0 if east[a] == west[b] else 1 for b in range(n)] for a in range(n)], dtype=np.int64)
        wv = np.array([[0 if north[a] == south[b] else 1 for b in range(n)] for a in range(n)], dtype=np.int64)
        for (a, b, o), w in self.pair_weights.items():
            (wh if o == "h" else wv)[a, b] = int(w)
        out = (wh, wv, self.bonus_table())
        object.__setattr__(self, "_tables", out)
        return out

    def bonus_table(self) -> np.ndarray:
        bon = np.zeros((3, len(self.tiles)), dtype=np.int64)
        for (a, ctx), w in self.site_bonuses.items():
            bon[CONTEXTS.index(ctx), a] += int(w)
        return bon

    def pair_weight(self, a: int, b: int, orientation: str) -> int:
        w = self.pair_weights.get((a, b, orientation))
        if w is not None:
            return int(w)
        ta, tb = self.tiles[a], self.tiles[b]
        if orientation == "h":
            return int(ta.e != tb.w)
        return int(ta.n != tb.s)

    def site_costs(self, width: int, height: int) -> np.ndarray:
        """Per-cell, per-tile site term, shape ``(height, width, ntiles)``."""
        bon = self.bonus_table()
        ys = (np.arange(height) > 0)[:, None, None]
        xs = (np.arange(width) > 0)[None, :, None]
        out = bon[0][None, None, :] + ys * bon[1][None, None, :] + xs * bon[2][None, None, :]
        if self.border_costs:
            out = out.copy()
            for (a, side), w in self.border_costs.items():
                if side == "north":
                    out[height - 1, :, a] += w
                elif side == "south":
                    out[0, :, a] += w
                elif side == "west":
                    out[:, 0, a] += w
                else:
                    out[:, width - 1, a] += w
        return out

    def relabel(self, perm: Sequence[int]) -> "TileSet":
        """Return the same tileset with tile ``i`` renamed to ``perm[i]``."""
        inv = {p: i for i, p in enumerate(perm)}
        tiles = tuple(
            Tile(k, self.tiles[inv[k]].edges, self.tiles[inv[k]].decorations, self.tiles[inv[k]].name)
            for k in range(len(self.tiles))
        )
        pw = {(perm[a], perm[b], o): w for (a, b, o), w in self.pair_weights.items()}
        sb = {(perm[a], c): w for (a, c), w in self.site_bonuses.items()}
        bc = {(perm[a], c): w for (a, c), w in self.border_costs.items()}
        return TileSet(tiles, pw, sb, self.layers, self.decoration_alphabet, self.name, bc)

    def to_json(self) -> dict:
        def edge(c):
            return [edge(x) for x in c] if isinstance(c, tuple) else c

        return {
            "name": self.name,
            "layers": list(self.layers),
            "tiles": [
                {"id": t.id, "name": t.name,
                 "edges": {"n": edge(t.n), "e": edge(t.e), "s": edge(t.s), "w": edge(t.w)},
                 "decorations": sorted(t.decorations)}
                for t in self.tiles
            ],
            "weights": [[a, b, o, int(w)] for (a, b, o), w in sorted(self.pair_weights.items())],
            "bonuses": [[a, c, int(w)] for (a, c), w in sorted(self.site_bonuses.items())],
            "border": [[a, c, int(w)] for (a, c), w in sorted(self.border_costs.items())],
        }

    @classmethod
    def from_json(cls, obj) -> "TileSet":
        if isinstance(obj, str):
            obj = json.loads(obj)

        def edge(c):
            return tuple(edge(x) for x in c) if isinstance(c, list) else c

        tiles = tuple(
            Tile(int(t["id"]), tuple(edge(t["edges"][k]) for k in "nesw"), frozenset(t.get("decorations", ())),
                 t.get("name", ""))
            for t in obj["tiles"]
        )
        decos = frozenset(d for t in tiles for d in t.decorations)
        return cls(
            tiles,
            {(int(a), int(b), o): int(w) for a, b, o, w in obj.get("weights", [])},
            {(int(a), c): int(w) for a, c, w in obj.get("bonuses", [])},
            tuple(obj.get("layers", ["base"])),
            decos,
            obj.get("name", ""),
            {(int(a), c): int(w) for a, c, w in obj.get("border", [])},
        )


@dataclass(frozen=True)
class Tiling:
    width: int
    height: int
    cells: tuple

    def __post_init__(self):
        cells = tuple(tuple(int(c) for c in row) for row in self.cells)
        if len(cells) != self.height or any(len(r) != self.width for r in cells):
            raise ValidationError("cells do not match width/height")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_array(cls, arr) -> "Tiling":
        arr = np.asarray(arr, dtype=int)
        return cls(arr.shape[1], arr.shape[0], tuple(map(tuple, arr)))

    def array(self) -> np.ndarray:
        return np.array(self.cells, dtype=int).reshape(self.height, self.width)

    def __getitem__(self, xy):
        x, y = xy
        return self.cells[y][x]

    def to_json(self) -> dict:
        return {"width": self.width, "height": self.height, "cells": [list(r) for r in self.cells]}

    @classmethod
    def from_json(cls, obj) -> "Tiling":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(int(obj["width"]), int(obj["height"]), tuple(tuple(r) for r in obj["cells"]))

    def render(self, ts: TileSet | None = None) -> str:
        """Top row first, for eyeballing."""
        def lab(i):
            return ts.tiles[i].name if ts is not None and ts.tiles[i].name else str(i)
        return "\n".join(" ".join(f"{lab(c):>10}" for c in row) for row in reversed(self.cells))


@dataclass(frozen=True)
class Boundary:
    """Colours imposed on the outer edges; ``None`` leaves a side free.

    ``south[x]`` constrains the S edge of cell ``(x, 0)``, ``north[x]`` the N
    edge of the top row, ``west[y]`` / ``east[y]`` the W / E edges of the left
    and right columns.  A scalar applies to the whole side.  An entry may be
    a predicate on the edge colour instead of a colour.  Each violation costs
    ``weight``.
    """

    north: object = None
    east: object = None
    south: object = None
    west: object = None
    weight: int = 1

    def costs(self, ts: TileSet, width: int, height: int) -> np.ndarray:
        out = np.zeros((height, width, len(ts)), dtype=np.int64)

        def side(spec, length):
            if spec is None:
                return None
            if isinstance(spec, (list, tuple)) and len(spec) == length and not _is_colour(spec, ts):
                return list(spec)
            return [spec] * length

        for spec, length, cells, k in (
            (self.south, width, [(x, 0) for x in range(width)], S),
            (self.north, width, [(x, height - 1) for x in range(width)], N),
            (self.west, height, [(0, y) for y in range(height)], W),
            (self.east, height, [(width - 1, y) for y in range(height)], E),
        ):
            cols = side(spec, length)
            if cols is None:
                continue
            for (x, y), col in zip(cells, cols):
                if col is None:
                    continue
                if callable(col):
                    bad = [not col(t.edges[k]) for t in ts.tiles]
                else:
                    bad = [t.edges[k] != col for t in ts.tiles]
                out[y, x] += self.weight * np.array(bad, dtype=np.int64)
        return out


def _is_colour(spec, ts: TileSet) -> bool:
    # a tuple can itself be a (layered) colour; treat it as one if any tile uses it
    return any(spec in t.edges for t in ts.tiles)


LeafConstraint = Callable[[np.ndarray], int]


def _site_score(ts: TileSet, arr: np.ndarray) -> int:
    bon = ts.bonus_table()
    h, w = arr.shape
    total = int(bon[0][arr].sum()) + int(bon[1][arr[1:, :]].sum()) + int(bon[2][arr[:, 1:]].sum())
    rows = {"north": arr[h - 1, :], "south": arr[0, :], "west": arr[:, 0], "east": arr[:, w - 1]}
    for (a, side), c in ts.border_costs.items():
        total += int(c) * int(np.count_nonzero(rows[side] == a))
    return total


def score_tiling(ts: TileSet, t: Tiling, boundary: Boundary | None = None,
                 constraints: Iterable[LeafConstraint] = ()) -> int:
    """Sum of pair weights, site terms, boundary violations and global constraints."""
    arr = t.array()
    n = len(ts)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValidationError("tiling references an unknown tile id")
    if n > TABLE_LIMIT:
        total = sum(ts.pair_weight(int(a), int(b), "h") for a, b in zip(arr[:, :-1].ravel(), arr[:, 1:].ravel()))
        total += sum(ts.pair_weight(int(a), int(b), "v") for a, b in zip(arr[:-1, :].ravel(), arr[1:, :].ravel()))
    else:
        wh, wv, _ = ts.tables()
        total = int(wh[arr[:, :-1], arr[:, 1:]].sum()) + int(wv[arr[:-1, :], arr[1:, :]].sum())
    total += _site_score(ts, arr)
    constraints = tuple(constraints) + tuple(ts.leaf_constraints())
    if boundary is not None:
        bc = boundary.costs(ts, t.width, t.height)
        total += int(np.take_along_axis(bc, arr[..., None], axis=2).sum())
    for c in constraints:
        total += int(c(arr))
    return total


@dataclass
class EnumerationResult:
    min_score: int
    tilings: list
    nodes: int
    scores: list = field(default_factory=list)

    def by_score(self):
        out: dict = {}
        for s, t in zip(self.scores, self.tilings):
            out.setdefault(s, []).append(t)
        return out


def enumerate_min_tilings(ts: TileSet, L: int, node_budget: int = DEFAULT_NODE_BUDGET, *,
                          height: int | None = None, boundary: Boundary | None = None,
                          fixed: dict | None = None, constraints: Sequence[LeafConstraint] = (),
                          cap: int | None = None) -> EnumerationResult:
    """Exact branch-and-bound over ``L x height`` tilings.

    Without ``cap`` the minimum score and every tiling attaining it are
    returned.  With ``cap`` every tiling of score ``<= cap`` is returned
    (``min_score`` is then the smallest score seen).  ``fixed`` maps
    ``(x, y)`` to a tile id.  Leaf constraints must be non-negative; they are
    only evaluated on complete tilings.  Results are sorted by score, then
    lexicographically by cells (bottom row first).
    """
    width = L
    height = L if height is None else height
    constraints = tuple(constraints) + tuple(ts.leaf_constraints())
    n = len(ts)
    wh, wv, _ = ts.tables()
    if wh.min() < 0 or wv.min() < 0:
        raise ValidationError("the enumerator needs non-negative pair weights")
    ncell = width * height
    local = ts.site_costs(width, height).reshape(ncell, n).astype(np.int64)
    if boundary is not None:
        local = local + boundary.costs(ts, width, height).reshape(ncell, n)
    big = 1 << 40
    for (x, y), tid in (fixed or {}).items():
        mask = np.full(n, big, dtype=np.int64)
        mask[tid] = 0
        local[y * width + x] += mask

    # neighbours as (cell, table, assigned-is-first)
    nbrs: list[list] = [[] for _ in range(ncell)]
    bonds = []
    zh, zv = wh == 0, wv == 0
    for y in range(height):
        for x in range(width):
            c = y * width + x
            if x + 1 < width:
                nbrs[c].append((c + 1, wh, True))
                nbrs[c + 1].append((c, wh, False))
                bonds.append((c, c + 1, zh))
            if y + 1 < height:
                nbrs[c].append((c + width, wv, True))
                nbrs[c + width].append((c, wv, False))
                bonds.append((c, c + width, zv))

    assign = np.full(ncell, -1, dtype=np.int64)
    unassigned = np.ones(ncell, dtype=bool)
    state = {"best": big, "nodes": 0, "mode": "cap"}
    found: list = []

    def record(score):
        arr = assign.reshape(height, width).copy()
        total = score + sum(int(c(arr)) for c in constraints)
        if state["mode"] == "min":
            if total < state["best"]:
                state["best"] = total
                found.clear()
            if total == state["best"]:
                found.append((total, arr))
        elif total <= state["best"]:
            found.append((total, arr))

    def propagate():
        """Arc consistency on zero-slack domains; None when some domain empties."""
        dom = np.zeros((ncell, n), dtype=bool)
        idx = np.flatnonzero(unassigned)
        sub = local[idx]
        dom[idx] = (sub == sub.min(axis=1)[:, None]) & (sub < big)
        changed = True
        while changed:
            changed = False
            for a, b, z in bonds:
                # bonds to placed tiles are already folded into ``local``
                if not (unassigned[a] and unassigned[b]):
                    continue
                na = dom[a] & z[:, dom[b]].any(axis=1)
                nb = dom[b] & z[dom[a], :].any(axis=0)
                if na.sum() != dom[a].sum() or nb.sum() != dom[b].sum():
                    dom[a], dom[b] = na, nb
                    changed = True
                    if not na.any() or not nb.any():
                        return None
        return dom

    def place(c, t):
        assign[c] = t
        unassigned[c] = False
        touched = []
        for nb, tab, first in nbrs[c]:
            if unassigned[nb]:
                delta = tab[t, :] if first else tab[:, t]
                local[nb] += delta
                touched.append((nb, delta))
        return touched

    def unplace(c, touched):
        for nb, delta in touched:
            local[nb] -= delta
        assign[c] = -1
        unassigned[c] = True

    def search(score):
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            raise _Stop
        if not unassigned.any():
            record(score)
            return
        idx = np.flatnonzero(unassigned)
        mins = local[idx].min(axis=1)
        bound = score + int(mins.sum())
        slack = state["best"] - bound
        if slack < 0:
            return
        if slack == 0:
            dom = propagate()
            if dom is None:
                return
            sizes = dom[idx].sum(axis=1)
            c = int(idx[int(np.argmin(sizes))])
            for t in np.flatnonzero(dom[c]):
                t = int(t)
                cost = int(local[c, t])
                touched = place(c, t)
                search(score + cost)
                unplace(c, touched)
                if state["best"] - bound < 0:
                    break
            return
        # most constrained cell: fewest tiles within slack; ties by row-major order
        sizes = (local[idx] - mins[:, None] <= slack).sum(axis=1)
        c = int(idx[int(np.argmin(sizes))])
        row = local[c]
        order = np.lexsort((np.arange(n), row))
        base_min = int(row.min())
        for t in order:
            t = int(t)
            cost = int(row[t])
            if cost - base_min > slack or cost >= big:
                break
            touched = place(c, t)
            search(score + cost)
            unplace(c, touched)
            slack = state["best"] - bound

    try:
        if cap is not None:
            state["best"] = cap
            search(0)
        else:
            # small caps first: zero-slack nodes get full arc consistency
            for trial in range(3):
                state["best"] = trial
                search(0)
                if found:
                    low = min(sc for sc, _ in found)
                    found[:] = [p for p in found if p[0] == low]
                    break
            if not found:
                state["mode"], state["best"] = "min", big
                search(0)
    except _Stop:
        partial = _finish(found, state["nodes"])
        raise BudgetExhausted(
            f"node budget {node_budget} exhausted", partial=partial, nodes=state["nodes"]
        ) from None
    return _finish(found, state["nodes"])


class _Stop(Exception):
    pass


def _finish(found, nodes) -> EnumerationResult:
    found = sorted(found, key=lambda p: (p[0], p[1].ravel().tolist()))
    tilings = [Tiling.from_array(a) for _, a in found]
    scores = [s for s, _ in found]
    return EnumerationResult(min(scores) if scores else None, tilings, nodes, scores)


def all_tilings(n_tiles: int, width: int, height: int):
    """Every assignment as an array of shape ``(n_tiles**cells, height, width)``."""
    cells = width * height
    idx = np.arange(n_tiles**cells)
    digits = (idx[:, None] // n_tiles ** np.arange(cells - 1, -1, -1)[None, :]) % n_tiles
    return digits.reshape(-1, height, width)


def batch_scores(ts: TileSet, arrs: np.ndarray) -> np.ndarray:
    """Vectorized scores of a stack of tilings (no boundary, no constraints)."""
    wh, wv, _ = ts.tables()
    _, h, w = arrs.shape
    site = ts.site_costs(w, h)
    tot = wh[arrs[:, :, :-1], arrs[:, :, 1:]].sum(axis=(1, 2)) + wv[arrs[:, :-1, :], arrs[:, 1:, :]].sum(axis=(1, 2))
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    tot = tot + site[ys[None], xs[None], arrs].sum(axis=(1, 2))
    return tot
