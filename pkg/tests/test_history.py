import math

import numpy as np
import pytest

from phasegap.balance import BalanceParams
from phasegap.errors import ResourceError, ValidationError
from phasegap.history import (
    CircuitSpec, Gate, PenaltySpec, TransitionSystem, ancilla_guard_overlap, assemble_standard_form,
    check_standard_form, clairvoyance_classify, default_t_init, feynman_kitaev, gs_upper_bound, history_state,
    hqtm_spectrum_case, rotation, standard_form_partition, terminal_overlap, violated_lower_constant,
)
from phasegap.marker import path_laplacian
from phasegap.qpe import PhaseEncoding
from phasegap.spectra import eigen_spectrum

P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
NAMES_1Q = ["H", "X", "Y", "Z", "S", "T"]


def random_circuit(rng, n, T):
    gates = []
    for _ in range(T):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(n, 2, replace=False)
            gates.append(Gate("X", (int(b),), (int(a),)))
        elif rng.random() < 0.5:
            gates.append(Gate("RY", (int(rng.integers(n)),), (), (float(rng.uniform(0, 2 * math.pi)),)))
        else:
            gates.append(Gate(str(rng.choice(NAMES_1Q)), (int(rng.integers(n)),)))
    return CircuitSpec(n, tuple(gates))


def eps_circuit(eps, T, T_init):
    """Identity prefix of length T_init, then rotations bringing |0> to overlap ε with |1>."""
    theta = math.asin(math.sqrt(eps)) / (T - T_init)
    gates = [Gate("I", (0,))] * T_init + [Gate("R", (0,), (), (theta,))] * (T - T_init)
    return CircuitSpec(1, tuple(gates))


# --- circuits and history states ----------------------------------------------------

def test_history_single_identity_step():
    c = CircuitSpec(1, (Gate("I", (0,)),))
    h = history_state(c, [1, 0])
    assert np.allclose(h, np.array([1, 0, 1, 0]) / math.sqrt(2))


def test_history_bit_flip():
    c = CircuitSpec(1, (Gate("X", (0,)), Gate("X", (0,))))
    h = history_state(c, [1, 0])
    # clock 0: |0>, clock 1: |1>, clock 2: |0>
    assert np.allclose(h, np.array([1, 0, 0, 1, 1, 0]) / math.sqrt(3))


def test_history_dimension_mismatch():
    c = CircuitSpec(2, (Gate("H", (0,)),))
    with pytest.raises(ValidationError):
        history_state(c, [1, 0])


@pytest.mark.parametrize("bad", [
    dict(n=1, gates=()),
    dict(n=1, gates=(Gate("H", (1,)),)),
    dict(n=3, gates=(Gate("X", (0,), (1, 2)),)),
    dict(n=2, gates=(Gate("X", (0,), (0,)),)),
])
def test_circuit_validation(bad):
    with pytest.raises(ValidationError):
        CircuitSpec(bad["n"], bad["gates"])


def test_circuit_json_roundtrip(rng):
    c = random_circuit(rng, 3, 10)
    c2 = CircuitSpec.from_json(c.to_json())
    assert c2.to_json() == c.to_json()
    assert all(np.allclose(a, b) for a, b in zip(c.unitaries(), c2.unitaries()))


def test_controlled_gate_is_cnot():
    c = CircuitSpec(2, (Gate("X", (1,), (0,)),))
    cnot = np.eye(4)[[0, 1, 3, 2]]
    assert np.allclose(c.unitaries()[0], cnot)


def test_rotation_convention():
    assert np.allclose(rotation(0.3) @ [1, 0], [math.cos(0.3), math.sin(0.3)])


def test_penalty_validation():
    with pytest.raises(ValidationError):
        PenaltySpec(np.array([[1, 1], [0, 0]]), P1)
    with pytest.raises(ValidationError):
        PenaltySpec(P0, P1, w_out=-1)


def test_default_t_init():
    assert [default_t_init(T) for T in (2, 4, 5, 64)] == [1, 2, 3, 6]


# --- Feynman-Kitaev ----------------------------------------------------------------------

@pytest.mark.parametrize("n,T", [(1, 1), (1, 64), (2, 7), (2, 32), (3, 16), (4, 5), (4, 40)])
def test_frustration_free(n, T, rng):
    c = random_circuit(rng, n, T)
    H = feynman_kitaev(c, PenaltySpec.none(c.dim, 0))
    vals, vecs = np.linalg.eigh(H.toarray())
    assert abs(vals[0]) < 1e-11
    ground = vecs[:, vals < 1e-9]
    psi0 = rng.standard_normal(c.dim) + 1j * rng.standard_normal(c.dim)
    h = history_state(c, psi0)
    assert np.linalg.norm(ground.conj().T @ h) ** 2 >= 1 - 1e-10
    assert np.linalg.norm(H.matrix @ h) < 1e-11


def test_frustration_free_with_satisfied_penalties(rng):
    # input checks run while the register is idle
    c = random_circuit(rng, 2, 12)
    c = CircuitSpec(2, (Gate("I", (0,)),) * 3 + c.gates)
    pin = np.kron(P1, np.eye(2))
    u = np.eye(4)
    for m in c.unitaries():
        u = m @ u
    out = u @ np.array([1, 0, 0, 0])
    pout = np.eye(4) - np.outer(out, out.conj())
    H = feynman_kitaev(c, PenaltySpec(pin, pout, 3))
    h = history_state(c, [1, 0, 0, 0])
    assert eigen_spectrum(H).min == pytest.approx(0, abs=1e-11)
    assert np.linalg.norm(H.matrix @ h) < 1e-11


def test_feynman_kitaev_budget():
    c = CircuitSpec(4, tuple(Gate("H", (0,)) for _ in range(20)))
    with pytest.raises(ResourceError):
        feynman_kitaev(c, PenaltySpec.none(16), budget=100)


def test_feynman_kitaev_t_init_checked():
    c = CircuitSpec(1, (Gate("H", (0,)),) * 2)
    with pytest.raises(ValidationError):
        feynman_kitaev(c, PenaltySpec(P1, P1, 2))


def test_propagation_is_half_path_laplacian():
    c = CircuitSpec(1, tuple(Gate("I", (0,)) for _ in range(5)))
    H = feynman_kitaev(c, PenaltySpec.none(2, 0)).toarray()
    assert np.allclose(H, np.kron(path_laplacian(6) / 2, np.eye(2)))


def test_upper_bound_example():
    assert gs_upper_bound(1, 4, 1) == pytest.approx(1 - math.cos(math.pi / 7))
    assert gs_upper_bound(1, 4, 1) == pytest.approx(0.09903, abs=1e-5)
    assert gs_upper_bound(0, 9, 3) == 0
    with pytest.raises(ValidationError):
        gs_upper_bound(1, 3, 3)


def test_violated_example_t4():
    c = CircuitSpec(1, tuple(Gate("I", (0,)) for _ in range(4)))
    H = feynman_kitaev(c, PenaltySpec(P1, np.eye(2), 1))
    assert eigen_spectrum(H).min <= 0.09903


@pytest.mark.parametrize("T", [2, 3, 4, 8, 16, 32, 64])
@pytest.mark.parametrize("eps", [0.0, 0.05, 0.3, 0.7, 1.0])
def test_upper_bound_dominance(T, eps):
    for ti in sorted({1, default_t_init(T)}):
        if ti >= T:
            continue
        c = eps_circuit(eps, T, ti)
        p = PenaltySpec(P1, P1, ti)
        assert terminal_overlap(c, p, [1, 0]) == pytest.approx(eps, abs=1e-12)
        lam = eigen_spectrum(feynman_kitaev(c, p)).min
        assert lam <= gs_upper_bound(eps, T, ti) + 1e-12


def test_quadratic_lower_bound():
    const = violated_lower_constant(range(4, 65, 4))
    assert const > 0
    # the fitted constant is stable: T^2 λ_min approaches a limit as T grows
    assert const == pytest.approx(violated_lower_constant([64]), rel=0.5)


# --- ancilla guard -------------------------------------------------------------------------

@pytest.mark.parametrize("alpha", np.linspace(0, 1, 5))
@pytest.mark.parametrize("eps", np.linspace(0, 1, 5))
def test_guard_identity(alpha, eps):
    assert ancilla_guard_overlap(alpha, eps) == pytest.approx(0.75 * (1 - alpha**2 * eps**2), abs=1e-10)


@pytest.mark.parametrize("alpha,eps,want", [(1, 1, 0.0), (0, 0.4, 0.75), (1, 0.5, 9 / 16)])
def test_guard_examples(alpha, eps, want):
    assert ancilla_guard_overlap(alpha, eps) == pytest.approx(want, abs=1e-10)


def test_guard_independent_of_other_branch():
    assert ancilla_guard_overlap(1, 0.5, 0.9) == pytest.approx(9 / 16, abs=1e-10)


def test_guard_rejects():
    with pytest.raises(ValidationError):
        ancilla_guard_overlap(1.2, 0.5)


# --- halting / non-halting cases -------------------------------------------------------

def test_hqtm_too_short_positive():
    iv = hqtm_spectrum_case(PhaseEncoding(5, 1, 2.0**-5), 3, 8, True, BalanceParams())
    assert iv.case == "too_short" and math.isfinite(iv.lo_log2) and iv.hi_log2 == math.inf


def test_hqtm_discrimination_at_large_L():
    p = BalanceParams()
    L = 2**24
    halt = hqtm_spectrum_case(PhaseEncoding(3, 200, 2.0**-3), L - 3, L, True, p)
    non = hqtm_spectrum_case(PhaseEncoding(3, 200, 2.0**-3), L - 3, L, False, p)
    assert halt.case == "halting" and non.case == "non_halting"
    assert halt.hi_log2 < non.lo_log2


def test_hqtm_halting_vanishes_in_limit():
    p = BalanceParams()
    vals = [hqtm_spectrum_case(PhaseEncoding(2, ell, 0.25), 4, 2**k, True, p).hi_log2
            for ell, k in [(10, 10), (100, 20), (1000, 40)]]
    assert vals == sorted(vals, reverse=True) and vals[-1] < -1e12


def test_hqtm_m_exceeds_L():
    with pytest.raises(ValidationError):
        hqtm_spectrum_case(PhaseEncoding(2, 1, 0.25), 9, 8, True, BalanceParams())


# --- standard form ---------------------------------------------------------------------------

def _ts_path(n, q=2, illegal=(), rng=None):
    labels = tuple(range(n))
    rules = []
    for a in range(n - 1):
        u = np.eye(q) if rng is None else np.linalg.qr(rng.standard_normal((q, q)))[0]
        rules.append((a, a + 1, u))
    return TransitionSystem(labels, q, tuple(rules), frozenset(illegal))


def test_partition_disconnected():
    ts = TransitionSystem(("a", "b"), 1)
    part = standard_form_partition(ts)
    assert part.blocks == (("a",), ("b",)) and part.block_diagonal


def test_partition_linear_clock(rng):
    ts = _ts_path(6, 2, rng=rng)
    part = standard_form_partition(ts)
    assert part.blocks == (tuple(range(6)),)
    H = assemble_standard_form(ts)
    clock = np.abs(H).reshape(6, 2, 6, 2).sum(axis=(1, 3))
    assert all(clock[i, j] == 0 for i in range(6) for j in range(6) if abs(i - j) > 1)
    assert all(clock[i, i + 1] > 0 for i in range(5))


def reach_oracle(n, edges):
    reach = np.eye(n, dtype=bool)
    for a, b in edges:
        reach[a, b] = reach[b, a] = True
    for _ in range(n):
        reach = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
    return {tuple(np.flatnonzero(r)) for r in reach}


@pytest.mark.parametrize("seed", range(8))
def test_partition_random_matches_reachability(seed):
    rng = np.random.default_rng(seed)
    pairs = [(a, b) for a in range(6) for b in range(a + 1, 6)]
    pick = rng.choice(len(pairs), size=int(rng.integers(0, 7)), replace=False)
    rules = []
    for k in pick:
        a, b = pairs[k]
        if rng.random() < 0.5:
            a, b = b, a
        rules.append((a, b, np.linalg.qr(rng.standard_normal((2, 2)))[0]))
    ts = TransitionSystem(tuple(range(6)), 2, tuple(rules), frozenset(int(x) for x in rng.choice(6, 2)))
    part = standard_form_partition(ts)
    assert set(part.blocks) == reach_oracle(6, [(a, b) for a, b, _ in rules])
    assert part.off_block_max <= 1e-12 and part.block_diagonal


@pytest.mark.parametrize("rules", [
    [(0, 0, np.eye(2))],
    [(0, 1, np.eye(2)), (1, 0, np.eye(2))],
    [(0, 1, np.array([[1, 1], [0, 1]]))],
    [(0, 7, np.eye(2))],
])
def test_standard_form_rejects(rules):
    with pytest.raises(ValidationError):
        check_standard_form(TransitionSystem(tuple(range(3)), 2, tuple(rules)))


def test_clairvoyance_all_illegal():
    ts = TransitionSystem(("x", "y"), 2, (("x", "y", np.eye(2)),), frozenset({"x", "y"}))
    r = clairvoyance_classify(ts, ("x", "y"))
    assert r.category == 1 and r.lambda_min >= 1 and r.holds


def test_clairvoyance_legal_path():
    ts = _ts_path(5)
    ts = TransitionSystem(ts.labels, 2, ts.rules, frozenset(), {}, {4: P1})
    r = clairvoyance_classify(ts, range(5))
    assert r.category == 3 and r.lambda_min >= -1e-12 and r.holds


@pytest.mark.parametrize("k", range(6))
def test_clairvoyance_mixed_path(k, rng):
    ts = _ts_path(6, 2, illegal=(k,), rng=rng)
    r = clairvoyance_classify(ts, range(6))
    comp = path_laplacian(6)
    comp[k, k] += 1
    assert r.category == 2
    assert r.certified_bound == pytest.approx(np.linalg.eigvalsh(comp)[0], abs=1e-12)
    assert r.holds and r.lambda_min >= r.certified_bound - 1e-12


def test_transition_system_json():
    ts = _ts_path(3)
    d = ts.to_json()
    assert d["labels"] == [0, 1, 2] and len(d["rules"]) == 2
