"""The marker matrix Δ'_w, its characteristic polynomial and the edge-energy bounds.

Δ^(w) is the path Laplacian (diagonal 1, 2, ..., 2, 1; off-diagonal -1) and
Δ'_w = Δ^(w) - |w><w|.  The characteristic polynomial is taken monic,
p_w(λ) = det(λ I - Δ'_w).  Quantities of size 4^-f are handled through
their log2 magnitude.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ResourceError, ValidationError
from .spectra import DENSE_THRESHOLD, HermitianOperator, eigen_spectrum


@dataclass(frozen=True)
class MarkerMatrix:
    w: int
    matrix: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class FalloffSpec:
    C: int
    L: int
    r: int

    def __post_init__(self):
        if self.C < 1 or self.L < 1:
            raise ValidationError("C and L must be positive")
        if not 1 <= self.r <= self.L:
            raise ValidationError("marker offset r must satisfy 1 <= r <= L")

    @property
    def f(self) -> int:
        return self.C * (self.L + self.r)


def path_laplacian(w: int) -> np.ndarray:
    if w < 1:
        raise ValidationError("w must be >= 1")
    if w == 1:
        return np.zeros((1, 1))
    d = np.full(w, 2.0)
    d[0] = d[-1] = 1.0
    return np.diag(d) - np.eye(w, k=1) - np.eye(w, k=-1)


def _det_recurrence(w: int, lam) -> complex:
    """det(λI - Δ'_w) by the tridiagonal three-term recurrence."""
    d = np.diag(path_laplacian(w)).copy()
    d[-1] -= 1.0
    prev, cur = 1.0, lam - d[0]
    for k in range(1, w):
        prev, cur = cur, (lam - d[k]) * cur - prev
    return complex(cur)


def char_poly_value(w: int, lam) -> complex:
    """Closed-form p_w(λ).

    Real λ < 0 and λ > 4 use a cancellation-free rearrangement of the same
    expression; the branch points λ = 0 and λ = 4 use the polynomial's value
    there (its limit).
    """
    if w < 1:
        raise ValidationError("w must be >= 1")
    if isinstance(lam, (int, float, np.floating, np.integer)):
        lam = float(lam)
        if lam == 0.0 or lam == 4.0:
            return _det_recurrence(w, lam)
        if lam < 0:
            a, b = math.sqrt(-lam), math.sqrt(4 - lam)  # √λ = i a, √(λ-4) = i b
            far = lam - 2 - a * b
            near = 4.0 / far  # = λ - 2 + a b without cancellation
            c_near = 1 + 3 * a / b
            c_far = (4 + 8 * lam) / (b * (b + 3 * a))  # = 1 - 3a/b
            return complex(-(2.0 ** (-w - 1)) * (c_near * near**w + c_far * far**w))
        if lam > 4:
            a, b = math.sqrt(lam), math.sqrt(lam - 4)
            far = lam - 2 + a * b
            near = 4.0 / far  # = λ - 2 - a b
            return complex(-(2.0 ** (-w - 1)) / b * (3 * a * (near**w - far**w) + b * (near**w + far**w)))
    lam = complex(lam)
    if lam == 0 or lam == 4:
        return _det_recurrence(w, lam)
    s, s4 = cmath.sqrt(lam), cmath.sqrt(lam - 4)
    x = (lam - s4 * s - 2) ** w
    y = (lam + s4 * s - 2) ** w
    return -(2.0 ** (-w - 1)) / s4 * (3 * s * (x - y) + s4 * (x + y))


def delta_prime(w: int, check: bool = True) -> MarkerMatrix:
    m = path_laplacian(w)
    m[-1, -1] -= 1.0
    mm = MarkerMatrix(w, m)
    if check:
        det = np.linalg.det(-0.5 * np.eye(w) - m)
        val = char_poly_value(w, -0.5).real
        if not math.isclose(det, val, rel_tol=1e-8, abs_tol=1e-300):
            raise ValidationError(f"closed form disagrees with determinant at w={w}")
    return mm


def lambda_min_bounds(w: int):
    if w < 1:
        raise ValidationError("w must be >= 1")
    return -0.5 - 3.0 * 4.0 ** (-w), -0.5 - 4.0 ** (-w)


def lambda_min_offset(w: int):
    """``u`` with λ_min(Δ'_w) = -1/2 - u·4^-w, solved without forming λ.

    The only negative root of p_w lies in ``u ∈ [1, 3]``.  Writing
    λ = -1/2 - δ the equation p_w(λ) = 0 becomes
    (1 + 3a/b)(16 / far²)^w = 8u / (b(b + 3a)), which is well conditioned
    for every w.
    """
    if w < 1:
        raise ValidationError("w must be >= 1")

    def g(u):
        delta = u * 4.0 ** (-w)
        lam = -0.5 - delta
        a, b = math.sqrt(0.5 + delta), math.sqrt(4.5 + delta)
        far = lam - 2 - a * b
        ratio = math.exp(w * math.log(16.0 / far**2))
        return (1 + 3 * a / b) * ratio - 8 * u / (b * (b + 3 * a))

    return brentq(g, 1.0, 3.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def edge_energy_bounds(spec: FalloffSpec):
    """Log2 magnitudes of the interval [-3·4^-f, -4^-f] (both ends negative)."""
    f = spec.f
    return math.log2(3.0) - 2 * f, -2.0 * f


def segment_energy_log2(spec: FalloffSpec) -> float:
    """log2 |λ_min(Δ'_f) + 1/2|; the energy itself is negative."""
    return math.log2(lambda_min_offset(spec.f)) - 2 * spec.f


@dataclass(frozen=True)
class SegmentResult:
    operator: HermitianOperator
    f: int
    lambda_min: float
    energy: float  # λ_min + 1/2
    labels: tuple


def marker_segment_hamiltonian(spec: FalloffSpec, pad: int = 0, budget: int = DENSE_THRESHOLD) -> SegmentResult:
    """Path clock over the ``f = C(L + r)`` sweep steps with a bonus on the last one.

    Clock state ``(k, j)`` is step ``j`` of sweep round ``k``; hopping
    between consecutive steps is the path Laplacian and the final step gets
    ``-1``.  ``pad`` appends decoupled zero-energy states.  The +1/2 shift
    stands for the boundary trick.
    """
    f = spec.f
    dim = f + pad
    if dim > budget:
        raise ResourceError(f"segment dimension {dim} exceeds {budget}", requested=dim, budget=budget)
    m = np.zeros((dim, dim))
    m[:f, :f] = delta_prime(f, check=False).matrix
    per_round = spec.L + spec.r
    labels = tuple((j // per_round, j % per_round) for j in range(f)) + tuple(("pad", i) for i in range(pad))
    op = HermitianOperator.from_dense(m, label=f"marker_segment(C={spec.C},L={spec.L},r={spec.r})")
    lam = eigen_spectrum(op).min
    return SegmentResult(op, f, lam, lam + 0.5, labels)


def falloff(C: int, L: int) -> int:
    """f(L) = C(L + ceil(L^(1/8)))."""
    from .tiles.tm import ceil_root
    return C * (L + ceil_root(L))
