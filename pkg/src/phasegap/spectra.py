"""Sparse Hermitian operators, lattice assembly and spectral gaps.

Every Hamiltonian in the package is carried around as a
:class:`HermitianOperator`, a thin frozen wrapper over a scipy CSR matrix
that refuses to exist unless the matrix is Hermitian to ``HERM_TOL``.

Site ordering is big-endian throughout: site 0 is the most significant
digit of a basis index.  On an ``L x L`` lattice the site ``(x, y)`` has
index ``y * L + x`` with ``y = 0`` the bottom row.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, ResourceError, ValidationError

HERM_TOL = 1e-12
DENSE_THRESHOLD = 4096
DIM_BUDGET = 1 << 16
EIGSH_TOL = 1e-10


def _as_csr(m) -> sp.csr_matrix:
    if sp.issparse(m):
        return sp.csr_matrix(m, dtype=complex)
    return sp.csr_matrix(np.asarray(m, dtype=complex))


def _hermiticity_defect(m: sp.csr_matrix) -> float:
    diff = (m - m.conj().T).tocoo()
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


@dataclass(frozen=True)
class HermitianOperator:
    dim: int
    matrix: sp.csr_matrix = field(repr=False, compare=False)
    label: str = ""

    def __post_init__(self):
        m = _as_csr(self.matrix)
        if m.shape != (self.dim, self.dim):
            raise ValidationError(f"matrix shape {m.shape} does not match dim {self.dim}")
        defect = _hermiticity_defect(m)
        if defect > HERM_TOL:
            raise ValidationError(f"operator {self.label!r} is not Hermitian (defect {defect:.3e})")
        m.eliminate_zeros()
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, dim, entries, label=""):
        entries = list(entries)
        if not entries:
            return cls(dim, sp.csr_matrix((dim, dim), dtype=complex), label)
        rows, cols, vals = zip(*entries)
        if max(rows) >= dim or max(cols) >= dim or min(rows) < 0 or min(cols) < 0:
            raise ValidationError("entry index out of range")
        m = sp.coo_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(dim, dim))
        return cls(dim, m.tocsr(), label)

    @classmethod
    def from_dense(cls, m, label=""):
        m = np.asarray(m, dtype=complex)
        return cls(m.shape[0], sp.csr_matrix(m), label)

    def entries(self):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[i]), int(coo.col[i]), complex(coo.data[i])) for i in order]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __add__(self, other):
        if not isinstance(other, HermitianOperator):
            return NotImplemented
        if other.dim != self.dim:
            raise ValidationError("dimension mismatch in operator sum")
        return HermitianOperator(self.dim, self.matrix + other.matrix, f"{self.label}+{other.label}")

    def scaled(self, alpha: float):
        return HermitianOperator(self.dim, self.matrix * float(alpha), self.label)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "label": self.label,
            "entries": [[i, j, v.real, v.imag] for i, j, v in self.entries()],
        }

    @classmethod
    def from_json(cls, obj) -> "HermitianOperator":
        if isinstance(obj, str):
            obj = json.loads(obj)
        ents = [(int(i), int(j), complex(re, im)) for i, j, re, im in obj["entries"]]
        return cls.from_entries(int(obj["dim"]), ents, obj.get("label", ""))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple
    dim: int

    def __post_init__(self):
        ev = tuple(float(x) for x in self.eigenvalues)
        if any(b < a for a, b in zip(ev, ev[1:])):
            raise ValidationError("spectrum must be sorted ascending")
        if len(ev) > self.dim:
            raise ValidationError("more eigenvalues than the dimension")
        object.__setattr__(self, "eigenvalues", ev)

    @classmethod
    def of(cls, values, dim=None):
        vals = sorted(float(v) for v in values)
        return cls(tuple(vals), len(vals) if dim is None else dim)

    @property
    def min(self) -> float:
        return self.eigenvalues[0]

    def __len__(self):
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(self.eigenvalues)

    def to_json(self):
        return list(self.eigenvalues)


# ---------------------------------------------------------------------------
# local terms


@dataclass(frozen=True)
class LocalTerms:
    """Row/column interaction data ``a, a', b, c, c'`` plus coupling and phase."""

    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c_prime: np.ndarray
    beta: float = 1.0
    phi_prime: float = 0.0


def _is_integer(m, tol=1e-12) -> bool:
    return bool(np.all(np.abs(m - np.round(m.real)) < tol))


def _is_diagonal(m) -> bool:
    return bool(np.all(m == np.diag(np.diag(m))))


def local_terms(lt: LocalTerms, check_norms: bool = True):
    """Return ``(h_row, h_col)`` for the given coupling data.

    ``h_row = a + beta (a' + e^{i pi phi'} b + e^{-i pi phi'} b^dag)`` and
    ``h_col = c + beta c'``.
    """
    a, ap, b, c, cp = (np.asarray(m, dtype=complex) for m in (lt.a, lt.a_prime, lt.b, lt.c, lt.c_prime))
    shape = a.shape
    if len(shape) != 2 or shape[0] != shape[1] or any(m.shape != shape for m in (ap, b, c, cp)):
        raise ValidationError("local term matrices must be square and of equal shape")
    if not 0.0 <= lt.beta <= 1.0:
        raise ValidationError("beta must lie in [0, 1]")
    if not 0.0 <= lt.phi_prime <= 1.0:
        raise ValidationError("phi_prime must lie in [0, 1]")
    if not (_is_diagonal(a) and _is_integer(a) and _is_diagonal(c) and _is_integer(c)):
        raise ValidationError("a and c must be diagonal with integer entries")
    if not _is_integer(b):
        raise ValidationError("b must have integer entries")
    for name, m in (("a_prime", ap), ("c_prime", cp)):
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERM_TOL:
            raise ValidationError(f"{name} must be Hermitian")
    if not _is_integer(cp):
        raise ValidationError("c_prime must have integer entries")
    phase = np.exp(1j * np.pi * lt.phi_prime)
    h_row = a + lt.beta * (ap + phase * b + np.conj(phase) * b.conj().T)
    h_col = c + lt.beta * cp
    if check_norms:
        nr, nc = np.linalg.norm(h_row, 2), np.linalg.norm(h_col, 2)
        if nr > 2 + 1e-12 or nc > 1 + 1e-12:
            raise ValidationError(f"norm caps violated: |h_row|={nr:.6g} (<=2), |h_col|={nc:.6g} (<=1)")
    return h_row, h_col


# ---------------------------------------------------------------------------
# assembly


def embed(op, sites, n_sites: int, d: int) -> sp.csr_matrix:
    """Place a k-site operator on ``sites`` of an ``n_sites`` chain of qudits."""
    op = _as_csr(op).tocoo()
    sites = list(sites)
    k = len(sites)
    if op.shape != (d**k, d**k):
        raise ValidationError(f"operator of shape {op.shape} cannot act on {k} sites of dimension {d}")
    D = d**n_sites
    idx = np.arange(D, dtype=np.int64)
    weights = d ** (n_sites - 1 - np.asarray(sites, dtype=np.int64))
    site_digits = (idx[:, None] // weights[None, :]) % d
    # local index of each global basis state on the chosen sites
    local = site_digits @ (d ** np.arange(k - 1, -1, -1, dtype=np.int64))
    rows, cols, vals = [], [], []
    local_weights = d ** np.arange(k - 1, -1, -1, dtype=np.int64)
    for r, c, v in zip(op.row, op.col, op.data):
        if v == 0:
            continue
        sel = idx[local == c]
        rdig = (r // local_weights) % d
        cdig = (c // local_weights) % d
        shift = int(np.dot(rdig - cdig, weights))
        rows.append(sel + shift)
        cols.append(sel)
        vals.append(np.full(sel.shape, v))
    if not rows:
        return sp.csr_matrix((D, D), dtype=complex)
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(D, D)
    ).tocsr()


def lattice_bonds(L: int, H: int | None = None):
    """Horizontal and vertical nearest-neighbour pairs of an open ``L x H`` grid."""
    H = L if H is None else H
    site = lambda x, y: y * L + x  # noqa: E731
    horizontal = [(site(x, y), site(x + 1, y)) for y in range(H) for x in range(L - 1)]
    vertical = [(site(x, y), site(x, y + 1)) for y in range(H - 1) for x in range(L)]
    return horizontal, vertical


def assemble_lattice_hamiltonian(h_row, h_col, L: int, budget: int = DIM_BUDGET) -> HermitianOperator:
    """Sum ``h_row`` over horizontal and ``h_col`` over vertical bonds (open boundary)."""
    if L < 2:
        raise ValidationError("lattice side must be at least 2")
    h_row = np.asarray(h_row, dtype=complex)
    h_col = np.asarray(h_col, dtype=complex)
    if h_row.shape != h_col.shape or h_row.shape[0] != h_row.shape[1]:
        raise ValidationError("h_row and h_col must be square with equal shape")
    d = int(round(np.sqrt(h_row.shape[0])))
    if d * d != h_row.shape[0]:
        raise ValidationError("two-site terms must have dimension d^2")
    for m in (h_row, h_col):
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERM_TOL:
            raise ValidationError("local terms must be Hermitian")
    n = L * L
    dim = d**n
    if dim > budget:
        raise ResourceError(f"lattice dimension {d}^{n} exceeds budget {budget}", requested=dim, budget=budget)
    horizontal, vertical = lattice_bonds(L)
    total = sp.csr_matrix((dim, dim), dtype=complex)
    if np.any(h_row):
        for i, j in horizontal:
            total = total + embed(h_row, (i, j), n, d)
    if np.any(h_col):
        for i, j in vertical:
            total = total + embed(h_col, (i, j), n, d)
    return HermitianOperator(dim, total, f"lattice L={L} d={d} bonds={len(horizontal) + len(vertical)}")


# ---------------------------------------------------------------------------
# spectra


def eigen_spectrum(H: HermitianOperator, k: int | None = None, dense_threshold: int = DENSE_THRESHOLD,
                   tol: float = EIGSH_TOL) -> Spectrum:
    """Ascending eigenvalues; all of them (dense path) or the ``k`` smallest."""
    m = H.matrix.tocoo()
    if np.all(m.row == m.col):
        # diagonal input: exact, and Lanczos stalls on heavily degenerate diagonals
        vals = np.sort(np.real(H.matrix.diagonal()))
        return Spectrum(tuple(vals if k is None else vals[:k]), H.dim)
    if H.dim <= dense_threshold:
        vals = np.linalg.eigvalsh(H.toarray())
        if k is not None:
            vals = vals[:k]
        return Spectrum(tuple(vals), H.dim)
    if k is None:
        raise ResourceError(
            f"dimension {H.dim} above dense threshold {dense_threshold}; request k smallest eigenvalues",
            requested=H.dim, budget=dense_threshold,
        )
    k = min(k, H.dim - 2)
    v0 = np.random.default_rng(0).standard_normal(H.dim).astype(complex)
    try:
        vals, vecs = spla.eigsh(H.matrix, k=k, which="SA", tol=tol, v0=v0, maxiter=20 * H.dim)
    except spla.ArpackNoConvergence as exc:
        res = None
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            r = H.matrix @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues
            res = float(np.max(np.linalg.norm(r, axis=0)))
        raise ConvergenceError("iterative eigensolver did not converge", residual=res) from exc
    residual = float(np.max(np.linalg.norm(H.matrix @ vecs - vecs * vals, axis=0)))
    if residual > 1e3 * tol * max(1.0, float(np.max(np.abs(vals)))):
        raise ConvergenceError(f"residual {residual:.3e} above tolerance", residual=residual)
    return Spectrum(tuple(np.sort(vals)), H.dim)


def spectral_gap(s: Spectrum) -> float:
    if len(s) < 2:
        raise ValidationError("spectral gap needs at least two eigenvalues")
    return s.eigenvalues[1] - s.eigenvalues[0]


def shift_energy(H: HermitianOperator, amount: float) -> HermitianOperator:
    eye = sp.identity(H.dim, dtype=complex, format="csr")
    return HermitianOperator(H.dim, H.matrix + float(amount) * eye, f"{H.label}{amount:+g}")


def dedup(values, tol: float = HERM_TOL):
    out = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def minkowski_sum(a, b, tol: float = HERM_TOL):
    return dedup((x + y for x, y in itertools.product(a, b)), tol)


# ---------------------------------------------------------------------------
# undecidable-family spectrum composition


def trivial_hamiltonian(d3: int, n_sites: int, gap: float = 1.0) -> np.ndarray:
    """Diagonal operator with a unique zero ground state ``|0...0>`` and ``gap`` elsewhere."""
    diag = np.full(d3**n_sites, float(gap))
    diag[0] = 0.0
    return np.diag(diag)


def undec_block_operator(H, H_dens, H_triv, n_sites: int = 2) -> HermitianOperator:
    """Explicit ``(H x 1 + 1 x H_dens) (+) H_triv + H_guard`` on a chain of ``n_sites``.

    Each site carries ``C^{d1} x C^{d2} (+) C^{d3}``.  ``H`` acts on the
    ``d1^n`` register, ``H_dens`` on the ``d2^n`` register, both only inside
    the sector where every site is in the first summand; ``H_triv`` acts on the
    sector where every site is in the second.  The guard adds one unit for each
    neighbouring pair that straddles the two summands.  With ``n_sites=1`` there
    are no bonds and the result is the plain direct sum.
    """
    H = np.asarray(H, dtype=complex)
    H_dens = np.asarray(H_dens, dtype=complex)
    H_triv = np.asarray(H_triv, dtype=complex)
    n = n_sites
    d1 = int(round(H.shape[0] ** (1 / n)))
    d2 = int(round(H_dens.shape[0] ** (1 / n)))
    d3 = int(round(H_triv.shape[0] ** (1 / n)))
    if d1**n != H.shape[0] or d2**n != H_dens.shape[0] or d3**n != H_triv.shape[0]:
        raise ValidationError("stand-in dimensions are not n-th powers")
    if np.min(np.linalg.eigvalsh(H_dens)) < -HERM_TOL:
        raise ValidationError("dense-spectrum stand-in must be positive semidefinite")
    da = d1 * d2
    dl = da + d3
    D = dl**n
    # site-local labels: (sector, local index) for every global basis state
    digits = np.array(list(itertools.product(range(dl), repeat=n)), dtype=np.int64).reshape(-1, n)
    in_a = digits < da
    total = np.zeros((D, D), dtype=complex)

    all_a = np.where(in_a.all(axis=1))[0]
    if len(all_a):
        # all-A sector ordered as product over sites of (d1 x d2); reorder H x 1 + 1 x H_dens into it
        HA = np.kron(H, np.eye(d2**n)) + np.kron(np.eye(d1**n), H_dens)
        # HA is in (d1^n, d2^n) ordering; sector digits are per site (i1*d2 + i2)
        sd = digits[all_a]
        i1 = sd // d2
        i2 = sd % d2
        p1 = i1 @ (d1 ** np.arange(n - 1, -1, -1))
        p2 = i2 @ (d2 ** np.arange(n - 1, -1, -1))
        pos = p1 * d2**n + p2
        total[np.ix_(all_a, all_a)] += HA[np.ix_(pos, pos)]

    all_b = np.where((~in_a).all(axis=1))[0]
    if len(all_b):
        sd = digits[all_b] - da
        pos = sd @ (d3 ** np.arange(n - 1, -1, -1))
        total[np.ix_(all_b, all_b)] += H_triv[np.ix_(pos, pos)]

    guard = np.zeros(D)
    for i in range(n - 1):
        guard += (in_a[:, i] != in_a[:, i + 1]).astype(float)
    total += np.diag(guard)
    return HermitianOperator.from_dense(total, f"undec n={n} d=({d1},{d2},{d3})")


def compose_undec_spectrum(specH: Spectrum, specDense: Spectrum, trivGap: float = 1.0,
                           guard: bool = True) -> Spectrum:
    """``{0} u (spec H + spec H_dens) u G`` as a deduplicated spectrum.

    ``H_triv`` is modelled as :func:`trivial_hamiltonian` (levels ``0`` and
    ``trivGap``); the guard contributes level ``1`` for the mixed sectors of a
    two-site chain, so ``G = {trivGap} u {1}``.
    """
    if trivGap < 1:
        raise ValidationError("trivGap must be at least 1")
    if specDense.eigenvalues and specDense.min < -HERM_TOL:
        raise ValidationError("dense-spectrum stand-in has negative eigenvalues")
    levels = [0.0, float(trivGap)] + minkowski_sum(specH, specDense)
    if guard:
        levels.append(1.0)
    vals = dedup(levels)
    return Spectrum(tuple(vals), len(vals))
