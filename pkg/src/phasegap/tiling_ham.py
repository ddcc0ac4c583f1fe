"""Diagonal Hamiltonians whose energies are tiling scores.

The product basis state ``|t>`` of an ``L x H`` patch has one site per cell,
ordered row-major from the bottom row, most significant site first (the same
order as :func:`phasegap.spectra.embed`).  Its energy is ``score_tiling``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ResourceError, ValidationError
from .spectra import HermitianOperator, embed
from .tiles.core import (
    DEFAULT_NODE_BUDGET, CONTEXTS, TileSet, Tiling, all_tilings, batch_scores, enumerate_min_tilings, score_tiling,
)

BASIS_BUDGET = 1 << 21


@dataclass(frozen=True)
class DiagonalHamiltonian:
    diagonal: np.ndarray
    width: int
    height: int
    n_tiles: int
    basis: tuple | None = None  # explicit Tiling labels in restricted mode

    def __post_init__(self):
        d = np.asarray(self.diagonal)
        if not np.issubdtype(d.dtype, np.integer):
            raise ValidationError("tiling energies are integers")
        object.__setattr__(self, "diagonal", d.astype(np.int64))

    @property
    def dim(self) -> int:
        return len(self.diagonal)

    @property
    def restricted(self) -> bool:
        return self.basis is not None

    def label(self, i: int) -> Tiling:
        if self.basis is not None:
            return self.basis[i]
        cells = self.width * self.height
        digits = [(i // self.n_tiles ** (cells - 1 - k)) % self.n_tiles for k in range(cells)]
        return Tiling.from_array(np.array(digits).reshape(self.height, self.width))

    def index_of(self, t: Tiling) -> int:
        if self.basis is not None:
            return self.basis.index(t)
        idx = 0
        for c in t.array().ravel():
            idx = idx * self.n_tiles + int(c)
        return idx

    def operator(self, label: str = "tiling") -> HermitianOperator:
        return HermitianOperator(self.dim, sp.diags(self.diagonal.astype(complex), format="csr"), label)

    def to_json(self) -> dict:
        obj = self.operator().to_json()
        if self.basis is not None:
            obj["basis"] = [t.to_json()["cells"] for t in self.basis]
        obj.update(width=self.width, height=self.height, n_tiles=self.n_tiles)
        return obj


def tiling_to_hamiltonian(ts: TileSet, L: int, *, height: int | None = None, budget: int = BASIS_BUDGET,
                          restricted: bool = False, cap: int | None = None,
                          node_budget: int = DEFAULT_NODE_BUDGET) -> DiagonalHamiltonian:
    """Energies of every product state (full mode) or of all tilings scoring at most ``cap``.

    ``cap`` defaults to the minimum score plus two.
    """
    height = L if height is None else height
    if L < 1 or height < 1:
        raise ValidationError("lattice sides must be positive")
    n = len(ts)
    if not restricted:
        dim = n ** (L * height)
        if dim > budget:
            raise ResourceError(
                f"{n}^{L * height} basis states exceed the budget {budget}; use restricted mode",
                requested=dim, budget=budget)
        arrs = all_tilings(n, L, height)
        diag = np.asarray(batch_scores(ts, arrs), dtype=np.int64)
        for c in ts.leaf_constraints():
            diag = diag + np.array([int(c(a)) for a in arrs], dtype=np.int64)
        return DiagonalHamiltonian(diag, L, height, n)
    if cap is None:
        low = enumerate_min_tilings(ts, L, node_budget, height=height).min_score
        cap = low + 2
    res = enumerate_min_tilings(ts, L, node_budget, height=height, cap=cap)
    return DiagonalHamiltonian(np.array(res.scores, dtype=np.int64), L, height, n, tuple(res.tilings))


def local_term_operator(ts: TileSet, L: int, height: int | None = None, parts=("h", "v", "site")) -> sp.csr_matrix:
    """The same Hamiltonian assembled from weighted projectors, one per bond or site."""
    height = L if height is None else height
    wh, wv, bon = ts.tables()
    n = len(ts)
    cells = L * height
    if n ** cells > BASIS_BUDGET:
        raise ResourceError("local-term assembly exceeds the basis budget", requested=n ** cells, budget=BASIS_BUDGET)
    out = sp.csr_matrix((n ** cells, n ** cells))
    hterm = sp.diags(wh.ravel().astype(float))
    vterm = sp.diags(wv.ravel().astype(float))
    for y in range(height):
        for x in range(L):
            k = y * L + x
            if "h" in parts and x + 1 < L:
                out = out + embed(hterm, [k, k + 1], cells, n)
            if "v" in parts and y + 1 < height:
                out = out + embed(vterm, [k, k + L], cells, n)
            if "site" in parts:
                w = bon[CONTEXTS.index("unconditional")] + (y > 0) * bon[CONTEXTS.index("above")] \
                    + (x > 0) * bon[CONTEXTS.index("right")]
                if np.any(w):
                    out = out + embed(sp.diags(w.astype(float)), [k], cells, n)
    return out.tocsr()


def ground_space(ts: TileSet, L: int, *, height: int | None = None, budget: int = BASIS_BUDGET,
                 node_budget: int = DEFAULT_NODE_BUDGET):
    """``(min_energy, degeneracy)``; the enumerator stands in when the basis is too large."""
    height = L if height is None else height
    if len(ts) ** (L * height) <= budget:
        d = tiling_to_hamiltonian(ts, L, height=height, budget=budget).diagonal
        low = int(d.min())
        return low, int(np.count_nonzero(d == low))
    res = enumerate_min_tilings(ts, L, node_budget, height=height)
    return res.min_score, len(res.tilings)


def check_diagonal(ts: TileSet, H: DiagonalHamiltonian) -> bool:
    """Every diagonal entry equals ``score_tiling`` of its label."""
    return all(int(H.diagonal[i]) == score_tiling(ts, H.label(i)) for i in range(H.dim))
