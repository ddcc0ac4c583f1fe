"""Weighted Wang tiles, Turing machine tilings and the checkerboard constructions."""
from .augmented import (
    AugmentedTileSet, MarkerFinding, audit_markers, augmented_checkerboard_tileset, augmented_pattern,
    machine_offset, marker_offset,
)
from .checkerboard import (
    checkerboard_cell, checkerboard_pattern, checkerboard_tileset, complete_squares, corner_at_origin_family,
    skeleton, valid_periods,
)
from .core import Boundary, EnumerationResult, Tile, TileSet, Tiling, enumerate_min_tilings, score_tiling
from .layers import (
    BorderRule, InterlayerRule, dovetail_tileset, layer_and_dovetail, side_length_root, sweep_tms,
)
from .tm import TMSpec, ceil_root, make_tm, root_tm, run_tm, tm_boundary, tm_tileset, trace_tiling

__all__ = [
    "AugmentedTileSet", "MarkerFinding", "audit_markers", "augmented_checkerboard_tileset", "augmented_pattern",
    "machine_offset", "marker_offset", "checkerboard_cell", "checkerboard_pattern", "checkerboard_tileset",
    "complete_squares", "corner_at_origin_family", "skeleton", "valid_periods", "Boundary",
    "EnumerationResult", "Tile", "TileSet", "Tiling", "enumerate_min_tilings", "score_tiling", "BorderRule",
    "InterlayerRule", "dovetail_tileset", "layer_and_dovetail", "side_length_root", "sweep_tms", "TMSpec",
    "ceil_root", "make_tm", "root_tm", "run_tm", "tm_boundary", "tm_tileset", "trace_tiling",
]
