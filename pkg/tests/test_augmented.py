import itertools

import numpy as np
import pytest

from phasegap.tiles.augmented import (
    BLUE_A, MARKED_IDS, audit_markers, augmented_checkerboard_tileset, augmented_pattern, machine_offset,
    marker_offset,
)
from phasegap.tiles.checkerboard import ID, checkerboard_pattern, checkerboard_tileset, complete_squares
from phasegap.tiles.core import Tiling, enumerate_min_tilings, score_tiling

SEM = augmented_checkerboard_tileset("semantic")
FULL = augmented_checkerboard_tileset("full")


@pytest.mark.parametrize("s,want", [(1, 1), (2, 2), (4, 2), (255, 2), (256, 2), (257, 3)])
def test_marker_offset(s, want):
    assert marker_offset(s) == want


@pytest.mark.parametrize("s", range(1, 9))
def test_machine_offset_agrees(s):
    assert machine_offset(s) == marker_offset(s)


def test_tile_counts():
    assert len(SEM) == 13
    assert sum(FULL.marked) == sum(1 for a in range(1, 8) for b in range(1, 9 - a) if a == marker_offset(a + b))


@pytest.mark.parametrize("s", [4, 6, 8])
def test_marked_pattern_scores_zero(s):
    assert score_tiling(SEM, augmented_pattern(s, 2 * s + 1)) == 0


def test_unmarked_pattern_costs():
    t = checkerboard_pattern(4, 9)
    assert score_tiling(SEM, t) == 4  # rows 4 and 8 each hold two edges lacking their ●


def test_bottom_row_mark_costs():
    arr = augmented_pattern(4, 5).array()
    arr[0, 2] = MARKED_IDS[int(arr[0, 2])]
    assert score_tiling(SEM, Tiling.from_array(arr)) == 1


def test_two_marks_on_one_edge_cost():
    # exhaustive over mark subsets on one top edge of a side-6 square
    base = checkerboard_pattern(6, 7).array()
    for k in range(0, 6):
        for pos in itertools.combinations(range(1, 6), k):
            arr = base.copy()
            for x in pos:
                arr[6, x] = MARKED_IDS[int(arr[6, x])]
            sc = score_tiling(SEM, Tiling.from_array(arr))
            if k >= 2:
                assert sc >= 1
            assert (sc == 0) == (pos == (marker_offset(6),))


@pytest.mark.parametrize("L", [3, 4])
def test_modes_agree(L):
    a = enumerate_min_tilings(SEM, L)
    b = enumerate_min_tilings(FULL, L)
    assert a.min_score == b.min_score == 0
    assert {t.cells for t in a.tilings} == {FULL.project(t).cells for t in b.tilings}


def test_one_mark_per_complete_square():
    r = enumerate_min_tilings(SEM, 5)
    seen = 0
    for t in r.tilings:
        arr = t.array()
        base = Tiling.from_array(np.array(SEM.base_of)[arr])
        for x0, y0, s in complete_squares(base):
            top = y0 + s
            if top < arr.shape[0]:
                marks = [x - x0 for x in range(x0, x0 + s + 1) if SEM.marked[arr[top, x]]]
                assert marks == [marker_offset(s)]
                seen += 1
    assert seen > 0


@pytest.mark.parametrize("L", [3, 4, 5])
def test_marks_are_forced(L):
    # dropping the ● gives back the plain zero set, one marking per tiling
    r = enumerate_min_tilings(SEM, L)
    plain = enumerate_min_tilings(checkerboard_tileset(True), L)
    bases = [tuple(map(tuple, np.array(SEM.base_of)[t.array()])) for t in r.tilings]
    assert len(bases) == len(set(bases))
    assert set(bases) == {t.cells for t in plain.tilings}


def test_project_full_to_semantic():
    r = enumerate_min_tilings(FULL, 5)
    for t in r.tilings:
        assert score_tiling(SEM, FULL.project(t)) == 0


# --- audit --------------------------------------------------------------------

def test_audit_ground_pattern():
    found = audit_markers(SEM, augmented_pattern(4, 13))
    kinds = {f.kind for f in found}
    assert kinds <= {"intact", "bottom_edge"}
    assert all(f.kind == "intact" for f in found if f.corner[1] > 0)
    assert sum(f.kind == "intact" for f in found) == 9


def test_audit_broken_blue_edge():
    arr = augmented_pattern(4, 9).array()
    arr[4, 3] = ID["zero"]
    found = [f for f in audit_markers(SEM, Tiling.from_array(arr)) if f.corner == (0, 4)]
    assert len(found) == 1
    f = found[0]
    assert f.kind == "penalty" and f.penalty >= 1
    assert abs(f.location[0] - 3) + abs(f.location[1] - 4) <= 1


def test_audit_misplaced_mark():
    arr = augmented_pattern(4, 9).array()
    arr[4, 2] = ID["blue_b"]
    arr[4, 1] = MARKED_IDS[BLUE_A]
    f = [f for f in audit_markers(SEM, Tiling.from_array(arr)) if f.corner == (0, 4)][0]
    assert f.kind == "penalty" and f.location in {(1, 4), (2, 4)}


def test_audit_empty():
    assert audit_markers(SEM, Tiling(0, 0, ())) == []
    assert audit_markers(SEM, Tiling.from_array(np.full((3, 3), ID["zero"]))) == []
