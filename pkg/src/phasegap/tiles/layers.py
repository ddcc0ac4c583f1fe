"""Layered meta-tilesets and dovetailing of Turing machine tilings."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from ..errors import ValidationError
from .core import SIDES, Boundary, Tile, TileSet, Tiling, score_tiling
from .tm import (
    NO_SIGNAL, TMSpec, counter_tape, counter_tm, head, padded_configs, root_output, root_tm,
    run_tm, sym, tm_tileset, trace_tiling,
)


@dataclass(frozen=True)
class InterlayerRule:
    """Keep only meta tiles whose components on ``layers`` satisfy ``allowed``."""

    layers: tuple
    allowed: Callable[..., bool]
    name: str = ""


@dataclass(frozen=True)
class BorderRule:
    """Cost ``weight`` for a meta tile on ``side`` unless ``allowed`` holds."""

    side: str
    layers: tuple
    allowed: Callable[..., bool]
    weight: int = 1
    name: str = ""


def _check_layers(rule, k):
    bad = [i for i in rule.layers if not 0 <= i < k]
    if bad:
        raise ValidationError(f"rule {rule.name or rule!r} references missing layer(s) {bad}")


def layer_and_dovetail(layers: Sequence[TileSet], interlayer_rules: Sequence[InterlayerRule] = (),
                       border_rules: Sequence[BorderRule] = (), names: Sequence[str] | None = None) -> TileSet:
    """Cartesian product of ``layers`` filtered by the interlayer rules.

    A meta edge is the tuple of the component edges, so two meta tiles match
    exactly when every layer matches; a mismatch costs 1 (or the largest
    custom layer weight).  Site bonuses and border costs add up across
    layers; border rules add further side costs.
    """
    layers = list(layers)
    k = len(layers)
    if k == 0:
        raise ValidationError("need at least one layer")
    for r in list(interlayer_rules) + list(border_rules):
        _check_layers(r, k)
    for r in border_rules:
        if r.side not in SIDES:
            raise ValidationError(f"unknown side {r.side!r}")
    names = tuple(names) if names is not None else tuple(ts.name or f"layer{i}" for i, ts in enumerate(layers))

    combos = []
    for combo in itertools.product(*(ts.tiles for ts in layers)):
        if all(r.allowed(*(combo[i] for i in r.layers)) for r in interlayer_rules):
            combos.append(combo)
    tiles = []
    for i, combo in enumerate(combos):
        edges = tuple(tuple(t.edges[d] for t in combo) for d in range(4))
        decos = frozenset().union(*(t.decorations for t in combo))
        tiles.append(Tile(i, edges, decos, "|".join(t.name or str(t.id) for t in combo)))

    bonuses: dict = {}
    border: dict = {}
    for i, combo in enumerate(combos):
        for layer, t in zip(layers, combo):
            for (a, ctx), w in layer.site_bonuses.items():
                if a == t.id:
                    bonuses[(i, ctx)] = bonuses.get((i, ctx), 0) + w
            for (a, side), w in layer.border_costs.items():
                if a == t.id:
                    border[(i, side)] = border.get((i, side), 0) + w
        for r in border_rules:
            if not r.allowed(*(combo[j] for j in r.layers)):
                border[(i, r.side)] = border.get((i, r.side), 0) + r.weight
    bonuses = {key: w for key, w in bonuses.items() if w}

    weights: dict = {}
    if any(layer.pair_weights for layer in layers):
        for (a, ca), (b, cb) in itertools.product(enumerate(combos), repeat=2):
            for o in ("h", "v"):
                w = max(layer.pair_weight(x.id, y.id, o) for layer, x, y in zip(layers, ca, cb))
                default = int(any(
                    (x.e != y.w) if o == "h" else (x.n != y.s) for x, y in zip(ca, cb)))
                if w != default:
                    weights[(a, b, o)] = w
    decos = frozenset().union(*(layer.decoration_alphabet for layer in layers))
    layer_names = names if k > 1 else ("base",)
    if k == 1:
        # a single layer keeps plain edges so it stays interchangeable with its source
        tiles = [Tile(t.id, tuple(e[0] for e in t.edges), t.decorations, t.name) for t in tiles]
    return TileSet(tuple(tiles), weights, bonuses, layer_names, decos, "+".join(names), border)


def dedupe_tiles(ts: TileSet) -> TileSet:
    """Merge tiles with identical edges, decorations and site terms."""
    seen: dict = {}
    keep = []
    for t in ts.tiles:
        key = (t.edges, t.decorations,
               tuple(sorted((c, w) for (a, c), w in ts.site_bonuses.items() if a == t.id)),
               tuple(sorted((c, w) for (a, c), w in ts.border_costs.items() if a == t.id)))
        if key not in seen:
            seen[key] = len(keep)
            keep.append(t)
    if ts.pair_weights:
        return ts
    remap = {t.id: i for i, t in enumerate(keep)}
    tiles = tuple(Tile(i, t.edges, t.decorations, t.name) for i, t in enumerate(keep))
    sb = {(remap[a], c): w for (a, c), w in ts.site_bonuses.items() if a in remap}
    bc = {(remap[a], c): w for (a, c), w in ts.border_costs.items() if a in remap}
    return TileSet(tiles, {}, sb, ts.layers, ts.decoration_alphabet, ts.name, bc)


def flip_vertical(ts: TileSet) -> TileSet:
    """Swap north and south edges; a TM layer then runs from top to bottom."""
    tiles = tuple(Tile(t.id, (t.s, t.e, t.n, t.w), t.decorations, t.name) for t in ts.tiles)
    pw = {}
    for (a, b, o), w in ts.pair_weights.items():
        pw[(b, a, o) if o == "v" else (a, b, o)] = w
    bc = {(a, {"north": "south", "south": "north"}.get(s, s)): w for (a, s), w in ts.border_costs.items()}
    return TileSet(tiles, pw, dict(ts.site_bonuses), ts.layers, ts.decoration_alphabet, ts.name + "^flip", bc)


def translate_config(edge, symbol_map=None, state_map=None):
    """Map a tape edge colour of one machine to the other's alphabet and states."""
    symbol_map = symbol_map or {}
    state_map = state_map or {}
    if isinstance(edge, tuple) and edge[0] == "s":
        return ("s", symbol_map.get(edge[1], edge[1]))
    if isinstance(edge, tuple) and edge[0] == "h":
        return ("h", symbol_map.get(edge[1], edge[1]), state_map.get(edge[2], edge[2]))
    return edge


def output_equals_input(i: int, j: int, symbol_map=None, state_map=None, side: str = "north") -> BorderRule:
    """Tiles next to the upper border must carry layer ``i``'s output as layer ``j``'s input.

    Layer ``j`` is expected to be vertically flipped, so both read their tape
    off the north edge of the top row.
    """
    def allowed(ti, tj):
        return translate_config(ti.n, symbol_map, state_map) == tj.n

    return BorderRule(side, (i, j), allowed, name=f"output[{i}]==input[{j}]")


def dovetail_tileset(tm1: TMSpec, tm2: TMSpec, symbol_map=None, idle_on_halt: bool = True) -> TileSet:
    """Two TM layers: ``tm1`` runs upward, ``tm2`` downward from ``tm1``'s output."""
    l1 = tm_tileset(tm1, idle_on_halt=idle_on_halt)
    l2 = flip_vertical(tm_tileset(tm2, idle_on_halt=idle_on_halt))
    rule = output_equals_input(0, 1, symbol_map, {tm1.qa: tm2.q0})
    return layer_and_dovetail([l1, l2], (), [rule], names=(tm1.name, tm2.name))


def dovetail_boundary(tape1) -> Boundary:
    """Layer 0 bottom row forced to ``tape1`` with ``q0`` at cell 0; sides closed."""
    def at(i, c):
        want = head(c, "q0") if i == 0 else sym(c)
        return lambda e: e[0] == want
    closed = lambda e: all(x == NO_SIGNAL for x in e)  # noqa: E731
    return Boundary(south=[at(i, c) for i, c in enumerate(tape1)], west=closed, east=closed)


def dovetail_rows(ts: TileSet, t: Tiling):
    """Per-layer tape rows: layer 0 bottom-up, layer 1 top-down (inputs first)."""
    up = [[ts.tiles[c].s[0] for c in row] for row in t.cells] + [[ts.tiles[c].n[0] for c in t.cells[-1]]]
    down = [[ts.tiles[c].n[1] for c in row] for row in reversed(t.cells)] + [[ts.tiles[c].s[1] for c in t.cells[0]]]
    return up, down


def sweep_tms():
    """A right sweep and a left sweep; dovetailed they run for twice the width."""
    A = ("0", "a", "b", "#")
    right = TMSpec(A, ("q0", "qa"), {("q0", c): ("q0", "a", "R") for c in A}, name="sweep_right")
    left = TMSpec(A, ("q0", "qa"), {("q0", c): ("q0", "b", "L") for c in A}, name="sweep_left")
    return right, left


@dataclass(frozen=True)
class PipelineResult:
    side: int
    binary: int
    root: int
    counter_steps: int
    root_steps: int
    width: int
    height: int
    layer_scores: tuple
    border_ok: bool


def side_length_root(N: int, levels: int = 3) -> PipelineResult:
    """Counter layer (unary width -> binary) dovetailed with the root layer.

    Both layers are realized as TM tilings on one ``width x height`` grid,
    the counter running upward and the root machine downward from the
    counter's output, each idling once halted.  The grid height is the larger
    of the two run times.  Returns the computed ``ceil(N^(1/2^levels))`` and
    the zero-penalty evidence (per-layer scores and the border equality).
    """
    ctm, rtm = counter_tm(), root_tm(levels)
    tape = counter_tape(N)
    width = len(tape) + N + 24
    tape = tape + ["#"] * (width - len(tape))
    t1 = run_tm(ctm, tape, 10**6)
    if t1.status != "halted":
        raise RuntimeError("counter did not halt")
    out1 = t1.final
    tape2 = ["^" if c == "1" else c for c in out1.tape]
    t2 = run_tm(rtm, tape2, 10**7, head=out1.head)
    if t2.status != "halted":
        raise RuntimeError(f"root machine {t2.status}")
    height = max(t1.steps, t2.steps) + 1
    ts1 = tm_tileset(ctm, idle_on_halt=True)
    ts2 = tm_tileset(rtm, idle_on_halt=True)
    til1 = trace_tiling(ctm, ts1, t1, height)
    til2 = trace_tiling(rtm, ts2, t2, height)
    b1 = Boundary(south=[head(c, ctm.q0) if i == 0 else sym(c) for i, c in enumerate(tape)],
                  west=NO_SIGNAL, east=NO_SIGNAL)
    b2 = Boundary(south=[head(c, rtm.q0) if i == out1.head else sym(c) for i, c in enumerate(tape2)],
                  west=NO_SIGNAL, east=NO_SIGNAL)
    s1 = score_tiling(ts1, til1, b1)
    s2 = score_tiling(ts2, til2, b2)
    top1 = padded_configs(t1, height)[-1]
    top_edges = [head(c, ctm.qa) if i == top1.head else sym(c) for i, c in enumerate(top1.tape)]
    border_ok = [translate_config(e, {"1": "^"}, {ctm.qa: rtm.q0}) for e in top_edges] == \
        [head(c, rtm.q0) if i == out1.head else sym(c) for i, c in enumerate(tape2)]
    binary = int(counter_output_value(out1.tape))
    return PipelineResult(N, binary, root_output(t2.final.tape), t1.steps, t2.steps, width, height,
                          (s1, s2), border_ok)


def counter_output_value(tape) -> int:
    from .tm import counter_output
    return int(counter_output(tape), 2)
