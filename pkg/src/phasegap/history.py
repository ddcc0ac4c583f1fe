"""Feynman-Kitaev path-clock Hamiltonians, the single-ancilla guard and standard-form checks.

Clock states run 0..T; clock t carries |ψ_t> = U_t ⋯ U_1 |ψ_0>.  The
propagation term is Kitaev's
H_prop = ½ Σ_t (|t><t| + |t-1><t-1|) ⊗ 1 - |t><t-1| ⊗ U_t - |t-1><t| ⊗ U_t†,
unitarily equivalent to ½ Δ ⊗ 1 for the path Laplacian Δ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ResourceError, ValidationError
from .spectra import DIM_BUDGET, HermitianOperator, eigen_spectrum

HERM_TOL = 1e-12

_GATES = {
    "I": np.eye(2),
    "H": np.array([[1, 1], [1, -1]]) / math.sqrt(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * math.pi / 4)]),
}


def rotation(theta: float) -> np.ndarray:
    """Real rotation R_θ|0> = cos θ |0> + sin θ |1>."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def gate_matrix(name: str, params=()) -> np.ndarray:
    if name in _GATES:
        return np.asarray(_GATES[name], dtype=complex)
    if name == "RY":
        return rotation(params[0] / 2)
    if name == "RZ":
        return np.diag([np.exp(-0.5j * params[0]), np.exp(0.5j * params[0])])
    if name == "R":
        return rotation(params[0])
    if name == "PHASE":
        return np.diag([1, np.exp(1j * params[0])])
    raise ValidationError(f"unknown gate {name!r}")


@dataclass(frozen=True)
class Gate:
    name: str
    targets: tuple
    controls: tuple = ()
    params: tuple = ()
    matrix: np.ndarray | None = None  # explicit unitary overrides name

    def local(self) -> np.ndarray:
        if self.matrix is not None:
            return np.asarray(self.matrix, dtype=complex)
        return gate_matrix(self.name, self.params)


def apply_gate(psi: np.ndarray, n: int, g: Gate) -> np.ndarray:
    """Apply ``g`` to an n-qubit state (qubit 0 most significant)."""
    u = g.local()
    k = len(g.targets)
    if u.shape != (2**k, 2**k):
        raise ValidationError(f"gate {g.name} does not match {k} targets")
    psi = psi.reshape((2,) * n).copy()
    sel = [slice(None)] * n
    for c in g.controls:
        sel[c] = 1
    sub = psi[tuple(sel)]
    rest = [q for q in range(n) if q not in g.controls]
    axes = [rest.index(q) for q in g.targets]
    moved = np.moveaxis(sub, axes, range(k))
    shape = moved.shape
    out = (u @ moved.reshape(2**k, -1)).reshape(shape)
    psi[tuple(sel)] = np.moveaxis(out, range(k), axes)
    return psi.reshape(-1)


def gate_unitary(n: int, g: Gate) -> np.ndarray:
    return np.array([apply_gate(e, n, g) for e in np.eye(2**n, dtype=complex)]).T


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    gates: tuple

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("circuit needs at least one qubit")
        if len(self.gates) < 1:
            raise ValidationError("circuit needs T >= 1 gates")
        for g in self.gates:
            wires = tuple(g.targets) + tuple(g.controls)
            if len(set(wires)) != len(wires) or any(not 0 <= q < self.n_qubits for q in wires):
                raise ValidationError(f"bad placement for gate {g.name}")
            if len(wires) > 2:
                raise ValidationError("gates act on at most two qubits")

    @property
    def T(self) -> int:
        return len(self.gates)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def unitaries(self):
        return [gate_unitary(self.n_qubits, g) for g in self.gates]

    @classmethod
    def from_json(cls, obj: dict) -> "CircuitSpec":
        gates = tuple(Gate(g["name"], tuple(g["targets"]), tuple(g.get("controls", ())), tuple(g.get("params", ())))
                      for g in obj["gates"])
        return cls(int(obj["n"]), gates)

    def to_json(self) -> dict:
        return {"n": self.n_qubits, "gates": [
            {"name": g.name, "targets": list(g.targets), "controls": list(g.controls), "params": list(g.params)}
            for g in self.gates]}


@dataclass(frozen=True)
class PenaltySpec:
    """Input projector on clock window [0, T_init) and output projector at clock T."""

    pi_in: np.ndarray
    pi_out: np.ndarray
    T_init: int = 1
    w_in: float = 1.0
    w_out: float = 1.0

    def __post_init__(self):
        for name, p in (("pi_in", self.pi_in), ("pi_out", self.pi_out)):
            p = np.asarray(p, dtype=complex)
            if not (np.allclose(p, p.conj().T, atol=HERM_TOL) and np.allclose(p @ p, p, atol=1e-10)):
                raise ValidationError(f"{name} is not an orthogonal projector")
        if self.w_in < 0 or self.w_out < 0:
            raise ValidationError("penalty weights must be nonnegative")
        if self.T_init < 0:
            raise ValidationError("T_init must be >= 0")

    @classmethod
    def none(cls, dim: int, T_init: int = 1) -> "PenaltySpec":
        z = np.zeros((dim, dim))
        return cls(z, z, T_init, 0.0, 0.0)


def default_t_init(T: int) -> int:
    return max(1, math.ceil(math.log2(T))) if T > 1 else 0


def history_state(c: CircuitSpec, psi0) -> np.ndarray:
    """(T+1)^-1/2 Σ_{t=0}^{T} |t> ⊗ U_t ⋯ U_1 |ψ_0>, clock index most significant."""
    psi = np.asarray(psi0, dtype=complex).ravel()
    if psi.shape != (c.dim,):
        raise ValidationError(f"initial state has dimension {psi.size}, circuit needs {c.dim}")
    psi = psi / np.linalg.norm(psi)
    steps = [psi]
    for g in c.gates:
        steps.append(apply_gate(steps[-1], c.n_qubits, g))
    return np.concatenate(steps) / math.sqrt(c.T + 1)


def feynman_kitaev(c: CircuitSpec, p: PenaltySpec, budget: int = DIM_BUDGET) -> HermitianOperator:
    T, d = c.T, c.dim
    if not p.T_init < T:
        raise ValidationError("T_init must be smaller than T")
    dim = (T + 1) * d
    if dim > budget:
        raise ResourceError(f"clock x register dimension {dim} exceeds {budget}", requested=dim, budget=budget)
    eye = sp.identity(d, format="csr", dtype=complex)
    blocks = [[None] * (T + 1) for _ in range(T + 1)]
    diag = [0.0] * (T + 1)
    for t, u in enumerate(c.unitaries(), start=1):
        diag[t - 1] += 0.5
        diag[t] += 0.5
        blocks[t][t - 1] = sp.csr_matrix(-0.5 * u)
        blocks[t - 1][t] = sp.csr_matrix(-0.5 * u.conj().T)
    pin = sp.csr_matrix(np.asarray(p.pi_in, dtype=complex))
    pout = sp.csr_matrix(np.asarray(p.pi_out, dtype=complex))
    for t in range(T + 1):
        b = diag[t] * eye
        if t < p.T_init:
            b = b + p.w_in * pin
        if t == T:
            b = b + p.w_out * pout
        blocks[t][t] = b
    m = sp.bmat(blocks, format="csr")
    return HermitianOperator(dim, m, f"feynman_kitaev(T={T},n={c.n_qubits},T_init={p.T_init})")


def gs_upper_bound(eps: float, T: int, T_init: int) -> float:
    if not T_init < T:
        raise ValidationError("T_init must be smaller than T")
    return eps * (1 - math.cos(math.pi / (2 * (T - T_init) + 1)))


def terminal_overlap(c: CircuitSpec, p: PenaltySpec, psi0) -> float:
    """<ψ_T| w_out Π_out |ψ_T> for the computational path started at ψ0."""
    h = history_state(c, psi0)[-c.dim:] * math.sqrt(c.T + 1)
    return float(np.real(h.conj() @ (p.w_out * np.asarray(p.pi_out)) @ h))


def violated_lower_constant(T_values, T_init=None) -> float:
    """min_T λ_min·T² for a one-qubit idle circuit whose output is always penalized."""
    out = []
    for T in T_values:
        ti = default_t_init(T) if T_init is None else T_init
        c = CircuitSpec(1, tuple(Gate("I", (0,)) for _ in range(T)))
        p = PenaltySpec(np.diag([0.0, 1.0]), np.eye(2), ti)
        out.append(eigen_spectrum(feynman_kitaev(c, p)).min * T * T)
    return float(min(out))


# --- the single-ancilla guard ---------------------------------------------------------

def guard_circuit(alpha: float, eps: float, eps_other: float = 0.3, n_reg: int = 2):
    """Qubits: ancilla 0, register 1..n_reg, halting flag n_reg+1.

    The toy machine rotates the flag to amplitude ε when the register is
    |1..1> and to ``eps_other`` otherwise; the final R_{-π/3} fires on the flag.
    """
    n = n_reg + 2
    reg = tuple(range(1, n_reg + 1))
    flag = n_reg + 1
    psi = np.zeros(2**n, dtype=complex)
    ones = int("0" + "1" * n_reg + "0", 2)
    others = [int("0" + format(k, f"0{n_reg}b") + "0", 2) for k in range(2**n_reg - 1)]
    psi[ones] = alpha
    psi[others] = math.sqrt(max(0.0, 1 - alpha * alpha)) / math.sqrt(len(others))
    gates = [Gate("R", (0,), (), (2 * math.pi / 3,))]
    gates += _multi_controlled(n, 0, reg, rotation(-math.pi / 3))
    gates += _multi_controlled(n, flag, reg, rotation(math.asin(eps)))
    gates += _multi_anti(n, flag, reg, rotation(math.asin(eps_other)))
    gates.append(Gate("R", (0,), (flag,), (-math.pi / 3,)))
    return n, psi, gates


def _multi_controlled(n, target, controls, u):
    # realized as one gate over the whole register; the guard check needs the algebra, not a decomposition
    return [_FullGate(n, target, tuple(controls), u, all_ones=True)]


def _multi_anti(n, target, controls, u):
    return [_FullGate(n, target, tuple(controls), u, all_ones=False)]


@dataclass(frozen=True)
class _FullGate:
    n: int
    target: int
    controls: tuple
    u: np.ndarray
    all_ones: bool


def _apply_any(psi, n, g):
    if isinstance(g, Gate):
        return apply_gate(psi, n, g)
    psi = psi.reshape((2,) * n).copy()
    out = psi.copy()
    for idx in np.ndindex(*(2,) * n):
        if idx[g.target] != 0:
            continue
        fire = all(idx[c] == 1 for c in g.controls)
        if fire != g.all_ones:
            continue
        j = list(idx)
        j[g.target] = 1
        j = tuple(j)
        a, b = psi[idx], psi[j]
        out[idx] = g.u[0, 0] * a + g.u[0, 1] * b
        out[j] = g.u[1, 0] * a + g.u[1, 1] * b
    return out.reshape(-1)


def ancilla_guard_overlap(alpha: float, eps: float, eps_other: float = 0.3) -> float:
    """Simulated <ψ_T| (|1><1|_anc ⊗ 1) |ψ_T>; equals (3/4)(1 - α²ε²)."""
    for name, v in (("alpha", alpha), ("eps", eps), ("eps_other", eps_other)):
        if not 0 <= v <= 1:
            raise ValidationError(f"{name} must lie in [0, 1]")
    n, psi, gates = guard_circuit(alpha, eps, eps_other)
    for g in gates:
        psi = _apply_any(psi, n, g)
    probs = np.abs(psi.reshape(2, -1)) ** 2
    return float(probs[1].sum())


# --- halting / non-halting energy cases ------------------------------------------------

@dataclass(frozen=True)
class EnergyInterval:
    """[2^lo_log2, 2^hi_log2]; -inf stands for 0 and +inf for unbounded."""

    lo_log2: float
    hi_log2: float
    case: str


def hqtm_spectrum_case(enc, m: int, L: int, halting: bool, params) -> EnergyInterval:
    from .balance import clock_runtime_bounds
    from .qpe import delta_bound

    if m > L:
        raise ValidationError("m must not exceed L")
    t_lo, t_hi = clock_runtime_bounds(L, params.xi)
    if m < enc.eta:
        return EnergyInterval(math.log2(params.K1) - 2 * t_hi, math.inf, "too_short")
    if not halting:
        return EnergyInterval(math.log2(params.K1) - 2 * t_hi, math.inf, "non_halting")
    d = delta_bound(L, m, params.c1, params.c2)
    amp = float(np.logaddexp2(-enc.ell, d))
    return EnergyInterval(-math.inf, math.log2(params.K2) + 2 * amp - 2 * t_lo, "halting")


# --- standard form ---------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionSystem:
    """Clock basis labels, rules a -> b carrying a unitary on the register, illegal labels and in/out projectors."""

    labels: tuple
    q_dim: int
    rules: tuple = ()  # (a, b, U)
    illegal: frozenset = frozenset()
    in_pen: dict = field(default_factory=dict)  # label -> projector
    out_pen: dict = field(default_factory=dict)

    def index(self, a) -> int:
        return self.labels.index(a)

    def to_json(self) -> dict:
        def mat(m):
            m = np.asarray(m, dtype=complex)
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]
        return {"labels": list(self.labels), "q_dim": self.q_dim,
                "rules": [{"from": a, "to": b, "unitary": mat(u)} for a, b, u in self.rules],
                "illegal": sorted(self.illegal), "in": {k: mat(v) for k, v in self.in_pen.items()},
                "out": {k: mat(v) for k, v in self.out_pen.items()}}


def check_standard_form(ts: TransitionSystem) -> None:
    seen = set()
    for a, b, u in ts.rules:
        if a not in ts.labels or b not in ts.labels:
            raise ValidationError(f"rule {a}->{b} uses an unknown clock label")
        if a == b:
            raise ValidationError(f"rule {a}->{b} does not move the clock")
        if (a, b) in seen or (b, a) in seen:
            raise ValidationError(f"more than one rule between {a} and {b}")
        seen.add((a, b))
        u = np.asarray(u, dtype=complex)
        if u.shape != (ts.q_dim, ts.q_dim) or not np.allclose(u.conj().T @ u, np.eye(ts.q_dim), atol=1e-10):
            raise ValidationError(f"rule {a}->{b} carries a non-unitary")
    for pen in (ts.in_pen, ts.out_pen):
        for k, p in pen.items():
            p = np.asarray(p, dtype=complex)
            if k not in ts.labels or not np.allclose(p @ p, p, atol=1e-10) or not np.allclose(p, p.conj().T):
                raise ValidationError(f"bad in/out projector at {k}")


def assemble_standard_form(ts: TransitionSystem) -> np.ndarray:
    check_standard_form(ts)
    n, q = len(ts.labels), ts.q_dim
    H = np.zeros((n * q, n * q), dtype=complex)

    def blk(i, j):
        return slice(i * q, (i + 1) * q), slice(j * q, (j + 1) * q)

    for a, b, u in ts.rules:
        i, j = ts.index(a), ts.index(b)
        u = np.asarray(u, dtype=complex)
        H[blk(i, i)] += np.eye(q)
        H[blk(j, j)] += u @ u.conj().T
        H[blk(j, i)] -= u
        H[blk(i, j)] -= u.conj().T
    for a in ts.illegal:
        i = ts.index(a)
        H[blk(i, i)] += np.eye(q)
    for pen in (ts.in_pen, ts.out_pen):
        for a, p in pen.items():
            i = ts.index(a)
            H[blk(i, i)] += np.asarray(p, dtype=complex)
    return H


@dataclass(frozen=True)
class Partition:
    blocks: tuple  # tuples of labels, in label order
    off_block_max: float
    block_diagonal: bool


def standard_form_partition(ts: TransitionSystem) -> Partition:
    """Minimal transition-closed subsets of the clock basis, with the block check."""
    check_standard_form(ts)
    n = len(ts.labels)
    adj = sp.lil_matrix((n, n))
    for a, b, _ in ts.rules:
        adj[ts.index(a), ts.index(b)] = 1
    ncomp, comp = sp.csgraph.connected_components(adj.tocsr(), directed=True, connection="weak")
    order = sorted(range(ncomp), key=lambda k: int(np.flatnonzero(comp == k)[0]))
    blocks = tuple(tuple(ts.labels[i] for i in np.flatnonzero(comp == k)) for k in order)
    H = assemble_standard_form(ts)
    q = ts.q_dim
    site = np.repeat(comp, q)
    off = np.abs(H[site[:, None] != site[None, :]])
    worst = float(off.max()) if off.size else 0.0
    return Partition(blocks, worst, worst <= 1e-12)


@dataclass(frozen=True)
class ClairvoyanceResult:
    category: int
    lambda_min: float
    certified_bound: float
    holds: bool


def _path_order(ts: TransitionSystem, S) -> list:
    nbrs = {a: set() for a in S}
    for a, b, _ in ts.rules:
        if a in nbrs and b in nbrs:
            nbrs[a].add(b)
            nbrs[b].add(a)
    if any(len(v) > 2 for v in nbrs.values()) or sum(len(v) for v in nbrs.values()) != 2 * (len(S) - 1):
        raise ValidationError("subset is not a linear clock")
    start = min((a for a in S if len(nbrs[a]) <= 1), key=ts.labels.index)
    order, prev = [start], None
    while len(order) < len(S):
        nxt = next(iter(nbrs[order[-1]] - {prev}))
        prev = order[-1]
        order.append(nxt)
    return order


def clairvoyance_classify(ts: TransitionSystem, S) -> ClairvoyanceResult:
    """Category of a partition element and the bound it certifies."""
    S = tuple(S)
    H = assemble_standard_form(ts)
    q = ts.q_dim
    idx = np.concatenate([np.arange(ts.index(a) * q, (ts.index(a) + 1) * q) for a in S])
    lam = float(np.linalg.eigvalsh(H[np.ix_(idx, idx)])[0])
    bad = [a for a in S if a in ts.illegal]
    if len(bad) == len(S):
        return ClairvoyanceResult(1, lam, 1.0, lam >= 1 - 1e-12)
    if bad:
        order = _path_order(ts, S)
        from .marker import path_laplacian
        comp = path_laplacian(len(S))
        for a in bad:
            k = order.index(a)
            comp[k, k] += 1
        bound = float(np.linalg.eigvalsh(comp)[0])
        return ClairvoyanceResult(2, lam, bound, lam >= bound - 1e-12)
    return ClairvoyanceResult(3, lam, 0.0, lam >= -1e-12)
