"""Solovay-Kitaev synthesis of single-qubit phase gates over {H, T}.

Words are strings over ``H T t S s X`` (lower case = adjoint).  The base
case is an exhaustive net of {H, T} words up to length 12, searched by
nearest neighbour on unit quaternions; the recursion is the balanced
group-commutator scheme.  Everything is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from ..errors import SynthesisError, ValidationError

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_T = np.diag([1, np.exp(1j * math.pi / 4)])
_S = np.diag([1, 1j])
_X = np.array([[0, 1], [1, 0]], dtype=complex)
GATES = {"H": _H, "T": _T, "t": _T.conj().T, "S": _S, "s": _S.conj().T, "X": _X}
_ADJ = {"H": "H", "T": "t", "t": "T", "S": "s", "s": "S", "X": "X"}

NET_LENGTH = 12
MIN_EPSILON = 1e-4


def phase_gate(theta: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * theta)])


def word_matrix(word: str) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for g in word:
        m = m @ GATES[g]
    return m


def adjoint_word(word: str) -> str:
    return "".join(_ADJ[g] for g in reversed(word))


def op_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b, 2))


def best_phase(w: np.ndarray, target: np.ndarray) -> float:
    """Global phase γ minimizing ‖e^{iγ} w - target‖ (exact for 2x2 unitaries near each other)."""
    return float(np.angle(np.trace(w.conj().T @ target)))


@dataclass(frozen=True)
class GateSequence:
    """A word over the gate alphabet approximating ``target`` up to the recorded global phase."""

    word: str
    target: np.ndarray
    global_phase: float = 0.0
    depth: int = 0
    achieved_error: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "achieved_error", op_distance(self.matrix(), self.target))

    def matrix(self) -> np.ndarray:
        return np.exp(1j * self.global_phase) * word_matrix(self.word)

    def __len__(self):
        return len(self.word)

    def to_json(self) -> dict:
        return {"word": self.word, "global_phase": self.global_phase, "achieved_error": self.achieved_error,
                "depth": self.depth}


# --- SU(2) helpers ------------------------------------------------------------------

def _to_su2(m: np.ndarray) -> np.ndarray:
    return m / np.sqrt(np.linalg.det(m))


def _quat(m: np.ndarray) -> np.ndarray:
    """Unit quaternion of an SU(2) matrix, sign fixed so the first nonzero entry is positive."""
    q = np.array([m[0, 0].real, m[0, 0].imag, m[0, 1].real, m[0, 1].imag])
    for v in q:
        if abs(v) > 1e-12:
            return q if v > 0 else -q
    return q


def _axis_angle(m: np.ndarray):
    """SU(2) m = cos(a/2) I - i sin(a/2) n.σ; returns (a, n)."""
    a0 = m[0, 0].real if abs(m[0, 0].real) <= 1 else math.copysign(1, m[0, 0].real)
    nx, ny, nz = -m[0, 1].imag, -m[0, 1].real, -m[0, 0].imag
    s = math.sqrt(nx * nx + ny * ny + nz * nz)
    angle = 2 * math.atan2(s, a0)
    if s < 1e-15:
        return 0.0, np.array([0.0, 0.0, 1.0])
    return angle, np.array([nx, ny, nz]) / s


def _rotation(angle: float, axis) -> np.ndarray:
    nx, ny, nz = axis
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c - 1j * s * nz, -1j * s * nx - s * ny], [-1j * s * nx + s * ny, c + 1j * s * nz]])


def _gc_decompose(delta: np.ndarray):
    """V, W with V W V† W† = Δ (balanced group commutator)."""
    theta, axis = _axis_angle(delta)
    st = math.sin(theta / 2)
    # sin(θ/2) = 2 sin²(φ/2) sqrt(1 - sin⁴(φ/2))
    x = math.sqrt(max(0.0, 0.5 - 0.5 * math.sqrt(max(0.0, 1 - st * st))))
    phi = 2 * math.asin(min(1.0, math.sqrt(x))) if x > 0 else 0.0
    v = _rotation(phi, (1.0, 0.0, 0.0))
    w = _rotation(phi, (0.0, 1.0, 0.0))
    comm = v @ w @ v.conj().T @ w.conj().T
    _, caxis = _axis_angle(comm)
    s = _basis_change(caxis, axis)
    return s @ v @ s.conj().T, s @ w @ s.conj().T


def _basis_change(a, b) -> np.ndarray:
    """SU(2) element rotating axis a onto axis b."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    cross = np.cross(a, b)
    n = np.linalg.norm(cross)
    dot = float(np.clip(a @ b, -1, 1))
    if n < 1e-14:
        if dot > 0:
            return np.eye(2, dtype=complex)
        perp = np.cross(a, [1.0, 0, 0])
        if np.linalg.norm(perp) < 1e-8:
            perp = np.cross(a, [0, 1.0, 0])
        return _rotation(math.pi, perp / np.linalg.norm(perp))
    return _rotation(math.atan2(n, dot), cross / n)


# --- base net ------------------------------------------------------------------------

@dataclass(frozen=True)
class _Net:
    words: tuple
    mats: np.ndarray  # SU(2) representatives
    tree: cKDTree

    def nearest(self, u: np.ndarray):
        # net quaternions are sign-normalized, so query both lifts of u
        q = _quat(u)
        cands = []
        for j in {int(self.tree.query(q)[1]), int(self.tree.query(-q)[1])}:
            for sign in (1, -1):
                m = sign * self.mats[j]
                cands.append((op_distance(m, u), j, sign))
        _, j, sign = min(cands)
        return self.words[j], sign * self.mats[j]


@lru_cache(maxsize=None)
def base_net(length: int = NET_LENGTH) -> _Net:
    """Every distinct {H, T} word up to ``length``, deduplicated modulo global phase."""
    seen = {}
    frontier = [("", np.eye(2, dtype=complex))]
    seen[tuple(np.round(_quat(np.eye(2, dtype=complex)), 9))] = ("", np.eye(2, dtype=complex))
    hs, ts = _to_su2(_H), _to_su2(_T)
    for _ in range(length):
        nxt = []
        for w, m in frontier:
            for g, gm in (("H", hs), ("T", ts)):
                mm = m @ gm
                key = tuple(np.round(_quat(mm), 9))
                if key not in seen:
                    seen[key] = (w + g, mm)
                    nxt.append((w + g, mm))
        frontier = nxt
    words = tuple(v[0] for v in seen.values())
    mats = np.array([v[1] for v in seen.values()])
    quats = np.array([_quat(m) for m in mats])
    return _Net(words, mats, cKDTree(quats))


def _sk(u: np.ndarray, n: int, net: _Net):
    """Recursive SK on SU(2); returns (word, SU(2) matrix of the word up to sign)."""
    if n == 0:
        return net.nearest(u)
    w_prev, m_prev = _sk(u, n - 1, net)
    delta = u @ m_prev.conj().T
    v, w = _gc_decompose(delta)
    vw, vm = _sk(v, n - 1, net)
    ww, wm = _sk(w, n - 1, net)
    word = vw + ww + adjoint_word(vw) + adjoint_word(ww) + w_prev
    mat = vm @ wm @ vm.conj().T @ wm.conj().T @ m_prev
    return word, mat


def _exact_word(theta: float):
    k = theta / (math.pi / 4)
    r = round(k)
    if abs(k - r) > 1e-12:
        return None
    return ["", "T", "S", "ST", "SS", "st", "s", "t"][r % 8]


@lru_cache(maxsize=4096)
def _synth_cached(theta: float, epsilon: float, depth_budget: int) -> GateSequence:
    target = phase_gate(theta)
    exact = _exact_word(theta)
    if exact is not None:
        return GateSequence(exact, target, 0.0, 0)
    net = base_net()
    u = _to_su2(target)
    best = None
    for depth in range(depth_budget + 1):
        word, _ = _sk(u, depth, net)
        wm = word_matrix(word)
        seq = GateSequence(word, target, best_phase(wm, target), depth)
        if best is None or seq.achieved_error < best.achieved_error:
            best = seq
        if seq.achieved_error <= epsilon:
            return seq
    raise SynthesisError(
        f"depth budget {depth_budget} reached error {best.achieved_error:.3e} > {epsilon:.3e}", best=best)


def sk_synthesize(theta: float, epsilon: float, depth_budget: int = 5) -> GateSequence:
    """Word within ``epsilon`` of diag(1, e^{iθ}) in operator norm, up to a recorded global phase."""
    if not epsilon >= MIN_EPSILON:
        raise ValidationError(f"epsilon must be >= {MIN_EPSILON}")
    if depth_budget < 0:
        raise ValidationError("depth_budget must be >= 0")
    theta = math.remainder(float(theta), 2 * math.pi)
    return _synth_cached(theta, float(epsilon), int(depth_budget))


def polylog_exponent(epsilons, lengths) -> float:
    """Least-squares slope of log(length) against log(log(1/ε))."""
    x = np.log(np.log(1 / np.asarray(epsilons, float)))
    y = np.log(np.asarray(lengths, float))
    return float(np.polyfit(x, y, 1)[0])
