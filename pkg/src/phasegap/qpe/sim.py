"""Circuit-level phase estimation on U_φ = diag(1, e^{2πiφ}).

Qubit 0 is the most significant phase bit (big-endian fraction); the
eigenstate ancilla |1> is the last qubit.  The inverse QFT uses controlled
phase gates R_k^† = diag(1, e^{-2πi/2^k}); in the approximate variant each
one is replaced by a controlled Solovay-Kitaev word (with its recorded
global phase, which a controlled gate turns into a relative phase).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ResourceError, ValidationError
from .sk import GATES, sk_synthesize

SIM_MAX_QUBITS = 12
NORM_TOL = 1e-12


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != (2 ** self.n_qubits,):
            raise ValidationError("amplitude vector has the wrong length")
        if abs(np.linalg.norm(a) - 1) > NORM_TOL:
            raise ValidationError("state is not normalized")
        object.__setattr__(self, "amplitudes", a)

    def overlap(self, index: int) -> float:
        return float(abs(self.amplitudes[index]))

    def to_json(self):
        return [[float(z.real), float(z.imag)] for z in self.amplitudes]


@dataclass(frozen=True)
class PhaseEncoding:
    eta: int
    ell: int
    phi_prime: float

    def __post_init__(self):
        if self.eta < 1 or self.ell < 1:
            raise ValidationError("eta and ell must be >= 1")
        lo = 2.0 ** -self.eta
        if not 0 <= self.phi_prime - lo < 2.0 ** (-self.eta - self.ell):
            raise ValidationError("phi_prime outside [2^-eta, 2^-eta + 2^-(eta+ell))")

    @property
    def exact(self) -> bool:
        return self.phi_prime == 2.0 ** -self.eta


def encode_unary(eta: int) -> float:
    if eta < 1:
        raise ValidationError("eta must be >= 1")
    return 2.0 ** -eta


def qpe_weights(phi: float, t: int) -> np.ndarray:
    """Output amplitudes indexed by the measured basis state y = b + x (mod 2^t).

    β = 2^-t (1 - e^{2πi(2^t φ - y)}) / (1 - e^{2πi(φ - y/2^t)}), evaluated as
    the Dirichlet kernel e^{iπ(2^t-1)x} sin(π2^t x) / (2^t sin πx), x = φ - y/2^t,
    which stays accurate near the removable 0/0 at y = 2^t φ.
    """
    if t < 1:
        raise ValidationError("t must be >= 1")
    if not 0 <= phi < 1:
        raise ValidationError("phi must lie in [0, 1)")
    n = 2 ** t
    x = phi - np.arange(n) / n  # in (-1, 1), so sin(πx) vanishes only at x = 0
    s = np.sin(np.pi * x)
    hit = np.abs(x) < 1e-150  # kernel equals n to double precision; avoids subnormal sines
    ratio = np.where(hit, n, np.sin(np.pi * n * x) / np.where(hit, 1.0, s))
    return np.exp(1j * np.pi * (n - 1) * x) * ratio / n


# --- statevector machinery -------------------------------------------------------

def _apply_1q(psi: np.ndarray, n: int, q: int, g: np.ndarray) -> np.ndarray:
    psi = psi.reshape((2,) * n)
    psi = np.moveaxis(np.tensordot(g, psi, axes=([1], [q])), 0, q)
    return psi.reshape(-1)


def _apply_controlled(psi: np.ndarray, n: int, c: int, q: int, g: np.ndarray) -> np.ndarray:
    psi = psi.reshape((2,) * n).copy()
    idx = [slice(None)] * n
    idx[c] = 1
    sub = psi[tuple(idx)]
    qq = q - (q > c)
    psi[tuple(idx)] = np.moveaxis(np.tensordot(g, sub, axes=([1], [qq])), 0, qq)
    return psi.reshape(-1)


def _swap(psi: np.ndarray, n: int, a: int, b: int) -> np.ndarray:
    return np.swapaxes(psi.reshape((2,) * n), a, b).reshape(-1)


def _rk_dagger(k: int) -> np.ndarray:
    return np.diag([1, np.exp(-2j * np.pi / 2 ** k)])


def inverse_qft_gates(t: int, epsilon: float | None = None, depth_budget: int = 5):
    """Gate list for the inverse QFT on qubits 0..t-1 (big-endian in, big-endian out)."""
    gates = [("swap", i, t - 1 - i, None) for i in range(t // 2)]
    for j in range(t - 1, -1, -1):
        for m in range(t - 1, j, -1):
            k = m - j + 1
            if epsilon is None:
                g = _rk_dagger(k)
            else:
                g = sk_synthesize(-2 * math.pi / 2 ** k, epsilon, depth_budget).matrix()
            gates.append(("cu", m, j, g))
        gates.append(("u", j, None, GATES["H"]))
    return gates


def _run(psi, n, gates):
    for kind, a, b, g in gates:
        if kind == "swap":
            psi = _swap(psi, n, a, b)
        elif kind == "cu":
            psi = _apply_controlled(psi, n, a, b, g)
        else:
            psi = _apply_1q(psi, n, a, g)
    return psi


def _phase_ladder(phi: float, t: int):
    u = np.diag([1, np.exp(2j * np.pi * phi)])
    gates = [("u", j, None, GATES["H"]) for j in range(t)]
    for j in range(t):
        gates.append(("cu", j, t, np.linalg.matrix_power(u, 2 ** (t - 1 - j))))
    return gates


def _check(phi, t):
    if t < 1:
        raise ValidationError("t must be >= 1")
    if t > SIM_MAX_QUBITS:
        raise ResourceError(f"t={t} exceeds the simulation budget {SIM_MAX_QUBITS}", requested=t,
                            budget=SIM_MAX_QUBITS)
    if not 0 <= phi < 1:
        raise ValidationError("phi must lie in [0, 1)")


def _simulate(phi, t, qft_gates) -> StateVector:
    n = t + 1
    psi = np.zeros(2 ** n, dtype=complex)
    psi[1] = 1.0  # ancilla in the eigenstate |1>
    psi = _run(psi, n, _phase_ladder(phi, t) + qft_gates)
    reg = psi.reshape(2 ** t, 2)
    anc = reg[:, 1]
    if np.linalg.norm(reg[:, 0]) > 1e-9:
        raise ValidationError("ancilla left its eigenstate")
    anc = anc / np.linalg.norm(anc)
    return StateVector(t, anc)


def qpe_exact_sim(phi: float, t: int) -> StateVector:
    _check(phi, t)
    return _simulate(phi, t, inverse_qft_gates(t))


def qpe_approx_sim(phi: float, t: int, epsilon: float, depth_budget: int = 5):
    """(output state, bound (t²/2)ε) with every controlled rotation an SK word."""
    _check(phi, t)
    return _simulate(phi, t, inverse_qft_gates(t, epsilon, depth_budget)), t * t / 2 * epsilon


def qpe_unitary(phi: float, t: int, epsilon: float | None = None, depth_budget: int = 5) -> np.ndarray:
    """Full (t+1)-qubit circuit unitary, exact or with SK rotations."""
    _check(phi, t)
    n = t + 1
    gates = _phase_ladder(phi, t) + inverse_qft_gates(t, epsilon, depth_budget)
    cols = [_run(e, n, gates) for e in np.eye(2 ** n, dtype=complex)]
    return np.array(cols).T


def qpe_deviation(phi: float, t: int, epsilon: float, depth_budget: int = 5) -> float:
    """‖Ũ_QPE - U_QPE‖ in operator norm."""
    return float(np.linalg.norm(qpe_unitary(phi, t, epsilon, depth_budget) - qpe_unitary(phi, t), 2))


# --- error budget ------------------------------------------------------------------

def delta_bound(L: int, m: int, c1: float = 3.985, c2: float = 1.0) -> float:
    """log2 of m²/2 · 2^(-c2 L^(1/c1))."""
    if L < 1 or m < 1:
        raise ValidationError("L and m must be positive")
    if m > L:
        raise ValidationError("m must not exceed L")
    return 2 * math.log2(m) - 1 - c2 * L ** (1 / c1)


def min_lattice_for_delta(delta0_log2: float, c1: float = 3.985, c2: float = 1.0, m: int | None = None) -> int:
    """Smallest L0 with δ(L, m) < 2^delta0_log2 for every L >= L0.

    With ``m`` omitted the worst case m = L is used.
    """
    def g(L):
        return delta_bound(L, L if m is None else m, c1, c2)

    if m is None:
        # g rises up to L* = (2 c1 / (c2 ln 2))^c1 and falls after it
        peak = max(1, math.floor((2 * c1 / (c2 * math.log(2))) ** c1))
        peak = max((peak, peak + 1), key=g)
        if g(peak) < delta0_log2:
            return 1
        lo = peak
    else:
        lo = m  # g is decreasing for L >= m
        if g(lo) < delta0_log2:
            return lo
    hi = 2 * lo
    while g(hi) >= delta0_log2:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if g(mid) < delta0_log2:
            hi = mid
        else:
            lo = mid
    return hi


def predicted_overlap(enc: PhaseEncoding, t: int, delta: float = 0.0):
    """(target bitstring, lower bound on |<target|χ̃>|)."""
    if t < 1:
        raise ValidationError("t must be >= 1")
    if t >= enc.eta:
        target = 2 ** (t - enc.eta)
        bound = (1.0 if enc.exact else 1 - 2.0 ** -enc.ell) - delta
    else:
        target = 0
        bound = (0.5 if enc.exact else 0.25) - delta
    return format(target, f"0{t}b"), bound
