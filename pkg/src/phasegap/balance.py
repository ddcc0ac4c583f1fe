"""Energy balance between marker bonus and history-state penalties, in log2 arithmetic.

Every energy is carried as its log2 magnitude, so nothing underflows even
for L far beyond what could be diagonalized.  Asymptotic Ω/O statements use
unit constants plus the configurable K1, K2.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

from scipy.optimize import minimize_scalar

from .errors import ValidationError

VERDICTS = ("Gapped", "Gapless", "OutsideCertifiedInterval")
CSV_FIELDS = ("phi_prime", "eta", "interval_lo", "interval_hi", "verdict", "witness_w", "edge_log2", "pen_log2")


# --- toy halting oracles -----------------------------------------------------------------

@dataclass(frozen=True)
class ToyOracle:
    """Decidable stand-in for the universal machine: η -> (halts, halting tape length L0).

    kind: never | always | even | odd | set; L0 = η + space_offset.
    """

    kind: str = "never"
    space_offset: int = 0
    etas: tuple = ()

    def __post_init__(self):
        if self.kind not in ("never", "always", "even", "odd", "set"):
            raise ValidationError(f"unknown oracle kind {self.kind!r}")
        if self.space_offset < 0:
            raise ValidationError("space_offset must be >= 0")

    def __call__(self, eta: int):
        halts = {"never": False, "always": True, "even": eta % 2 == 0, "odd": eta % 2 == 1,
                 "set": eta in self.etas}[self.kind]
        return halts, eta + self.space_offset

    def to_json(self) -> dict:
        return {"kind": self.kind, "space_offset": self.space_offset, "etas": list(self.etas)}


@dataclass(frozen=True)
class BalanceParams:
    xi: float = 5.0
    K1: float = 1.0
    K2: float = 1.0
    C: int = 1
    c1: float = 3.985
    c2: float = 1.0
    oracle: Callable = field(default_factory=ToyOracle)

    def __post_init__(self):
        if self.xi < 2:
            raise ValidationError("xi must be >= 2")
        if min(self.K1, self.K2, self.c2) <= 0:
            raise ValidationError("K1, K2 and c2 must be positive")
        if not (isinstance(self.C, int) and self.C >= 1):
            raise ValidationError("C must be a positive integer")
        if not 3.97 < self.c1 < 4:
            raise ValidationError("c1 must lie in (3.97, 4)")

    @classmethod
    def from_json(cls, obj: dict) -> "BalanceParams":
        known = {"xi", "K1", "K2", "C", "c1", "c2", "oracle"}
        extra = set(obj) - known
        if extra:
            raise ValidationError(f"unknown balance fields {sorted(extra)}")
        kw = {k: obj[k] for k in known - {"oracle"} if k in obj}
        if "C" in kw:
            if float(kw["C"]) != int(kw["C"]):
                raise ValidationError("C must be an integer")
            kw["C"] = int(kw["C"])
        if "oracle" in obj:
            o = obj["oracle"]
            bad = set(o) - {"kind", "space_offset", "etas"}
            if bad:
                raise ValidationError(f"unknown oracle fields {sorted(bad)}")
            kw["oracle"] = ToyOracle(o.get("kind", "never"), int(o.get("space_offset", 0)), tuple(o.get("etas", ())))
        return cls(**kw)

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in ("xi", "K1", "K2", "C", "c1", "c2")}
        if isinstance(self.oracle, ToyOracle):
            d["oracle"] = self.oracle.to_json()
        return d


# --- runtime and penalties ---------------------------------------------------------------

def _check_L(L):
    if L < 2:
        raise ValidationError("L must be >= 2")


def clock_runtime_bounds(L: float, xi: float):
    """log2 of (L ξ^L, L ξ^L log2 L)."""
    _check_L(L)
    lo = math.log2(L) + L * math.log2(xi)
    return lo, lo + math.log2(math.log2(L))


def _fourth_root(L) -> float:
    r = round(L ** 0.25)
    return float(r) if isinstance(L, int) and r**4 == L else L ** 0.25


def ell_threshold(L: int) -> int:
    """max(1, ceil(L^(1/4) - 2 log2 L))."""
    _check_L(L)
    raw = _fourth_root(L) - 2 * math.log2(L)
    return max(1, math.ceil(raw - 1e-9))


@dataclass(frozen=True)
class PenaltyBounds:
    nonhalt_lower_log2: float
    halt_upper_log2: float
    halt_valid: bool


def penalty_bounds(L: float, ell: int, params: BalanceParams) -> PenaltyBounds:
    """K1 / (L² ξ^{2L} log² L) and K2 2^{-L^{1/4}} / ξ^{2L}; the second needs ℓ >= ell_threshold(L)."""
    _check_L(L)
    _, t_hi = clock_runtime_bounds(L, params.xi)
    nonhalt = math.log2(params.K1) - 2 * t_hi
    halt = math.log2(params.K2) - _fourth_root(L) - 2 * L * math.log2(params.xi)
    valid = ell >= ell_threshold(int(L)) if float(L).is_integer() else True
    return PenaltyBounds(nonhalt, halt, valid)


def penalty_gap_log2(L: float, params: BalanceParams) -> float:
    """nonhalt_lower - halt_upper, with the shared ξ^{-2L} cancelled symbolically."""
    _check_L(L)
    return (math.log2(params.K1) - math.log2(params.K2) + _fourth_root(L)
            - 2 * math.log2(L) - 2 * math.log2(math.log2(L)))


def penalty_crossover(params: BalanceParams, L_max: float = 1e30) -> int:
    """Smallest L* with nonhalt_lower > halt_upper for every L >= L*.

    The log difference K-terms + L^{1/4} - 2 log2 L - 2 log2 log2 L is
    independent of ξ, falls to a single minimum and then grows.
    """
    def diff(L):
        return penalty_gap_log2(L, params)

    res = minimize_scalar(lambda x: diff(2.0**x), bounds=(1.0, math.log2(L_max)), method="bounded",
                          options={"xatol": 1e-9})
    lo = max(2, int(2.0**res.x))
    if diff(lo) > 0 and all(diff(L) > 0 for L in range(2, lo + 1)):
        return 2
    hi = lo
    while diff(hi) <= 0:
        hi *= 2
        if hi > L_max:
            raise ValidationError("no crossover below L_max")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if diff(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


# --- falloff window ----------------------------------------------------------------------

def falloff_exponent(C: int, L: int) -> int:
    from .marker import falloff
    return falloff(C, L)


def edge_log2(C: int, L: int) -> float:
    """log2 of 4^{-f(L)}, the magnitude of the marker bonus."""
    return -2.0 * falloff_exponent(C, L)


@dataclass(frozen=True)
class WindowRow:
    L: int
    edge_log2: float
    nonhalt_lower_log2: float
    halt_upper_log2: float
    too_strong: bool  # bonus beats the non-halting penalty
    too_weak: bool  # bonus loses to the halting penalty

    @property
    def ok(self) -> bool:
        return not (self.too_strong or self.too_weak)


@dataclass(frozen=True)
class WindowReport:
    C: int
    rows: tuple
    satisfied_range: tuple | None  # longest run of consecutive scanned L that pass

    @property
    def violations(self):
        return tuple(r for r in self.rows if not r.ok)


def window_margins(C: int, L: int, params: BalanceParams):
    """(nonhalt_lower - edge, edge - halt_upper) in log2, both positive inside the window.

    The common ξ^{-2L} factor is cancelled symbolically so the small terms
    survive at L where the absolute logs exceed double precision.
    """
    from .tiles.tm import ceil_root
    _check_L(L)
    lead = 2 * L * (C - math.log2(params.xi)) if C != math.log2(params.xi) else 0.0
    r = 2 * C * ceil_root(L)
    lower = math.log2(params.K1) - 2 * math.log2(L) - 2 * math.log2(math.log2(L)) + lead + r
    upper = -lead - r + _fourth_root(L) - math.log2(params.K2)
    return lower, upper


def falloff_window_check(C: int, L_values, params: BalanceParams) -> WindowReport:
    """Check halt_upper < 4^{-C(L + ceil(L^{1/8}))} < nonhalt_lower at every scanned L."""
    rows = []
    for L in L_values:
        L = int(L)
        b = penalty_bounds(L, 10**9, params)
        lo_m, hi_m = window_margins(C, L, params)
        rows.append(WindowRow(L, edge_log2(C, L), b.nonhalt_lower_log2, b.halt_upper_log2, lo_m <= 0, hi_m <= 0))
    best, cur = None, None
    for r in rows:
        if r.ok:
            cur = (cur[0], r.L) if cur else (r.L, r.L)
            if best is None or _span(cur, rows) > _span(best, rows):
                best = cur
        else:
            cur = None
    return WindowReport(C, tuple(rows), best)


def _span(rng, rows):
    ls = [r.L for r in rows]
    return ls.index(rng[1]) - ls.index(rng[0])


def geometric_L_grid(lo: int, hi: int, per_octave: int = 4):
    """Sorted distinct integers spaced geometrically between lo and hi (inclusive)."""
    if lo < 2 or hi < lo:
        raise ValidationError("need 2 <= lo <= hi")
    out = {lo, hi}
    x = math.log2(lo)
    while x < math.log2(hi):
        out.add(int(round(2.0**x)))
        x += 1 / per_octave
    return sorted(v for v in out if lo <= v <= hi)


@dataclass(frozen=True)
class GrowthCheck:
    L: tuple
    ratio_low: tuple  # f / (L + log2 L + log2 log2 L)
    ratio_high: tuple  # f / (L + L^{1/4})
    excess_low: tuple  # (f - C L) / log2 L
    excess_high: tuple  # (f - C L) / L^{1/4}


def falloff_growth(C: int, L_values) -> GrowthCheck:
    Ls = tuple(int(L) for L in L_values)
    f = [falloff_exponent(C, L) for L in Ls]
    return GrowthCheck(
        Ls,
        tuple(fi / (L + math.log2(L) + math.log2(max(1.0, math.log2(L)))) for fi, L in zip(f, Ls)),
        tuple(fi / (L + L ** 0.25) for fi, L in zip(f, Ls)),
        tuple((fi - C * L) / math.log2(L) for fi, L in zip(f, Ls)),
        tuple((fi - C * L) / L ** 0.25 for fi, L in zip(f, Ls)),
    )


# --- squares and lattices ----------------------------------------------------------------

@dataclass(frozen=True)
class SquareEnergy:
    s: int
    sign: str  # nonnegative | negative | uncertified
    case: str
    edge_log2: float
    pen_log2: float
    consistent: bool  # the log-domain numbers agree with the sign under these params


def square_energy_sign(s: int, enc, params: BalanceParams) -> SquareEnergy:
    """Sign of the lowest energy of one side-s square, by the halting case analysis."""
    if s < 2:
        raise ValidationError("square side must be >= 2")
    e = edge_log2(params.C, s)
    b = penalty_bounds(s, enc.ell, params)
    if s < enc.eta:
        return SquareEnergy(s, "nonnegative", "too_short", e, b.nonhalt_lower_log2, b.nonhalt_lower_log2 >= e)
    halts, L0 = params.oracle(enc.eta)
    if not halts or s < L0:
        return SquareEnergy(s, "nonnegative", "non_halting", e, b.nonhalt_lower_log2, b.nonhalt_lower_log2 >= e)
    if enc.ell >= ell_threshold(s):
        return SquareEnergy(s, "negative", "halting", e, b.halt_upper_log2, e > b.halt_upper_log2)
    return SquareEnergy(s, "uncertified", "halting_ell_too_small", e, b.halt_upper_log2, False)


def halting_square(enc, params: BalanceParams, s_max: int):
    """Smallest side with negative energy; it also minimizes the energy since |E_edge| falls with s."""
    for s in range(2, s_max + 1):
        if square_energy_sign(s, enc, params).sign == "negative":
            return s
    return None


def lattice_energy(L: int, H: int, w: int, per_square: float) -> float:
    if w < 1:
        raise ValidationError("w must be >= 1")
    return (L // w) * (H // w) * per_square


# --- phase classification ----------------------------------------------------------------

@dataclass(frozen=True)
class PhaseVerdict:
    phi_prime: float
    classification: str
    eta: int | None = None
    interval_lo: float | None = None
    interval_hi: float | None = None
    witness_w: int | None = None
    edge_log2: float | None = None
    pen_log2: float | None = None

    def row(self) -> dict:
        d = asdict(self)
        d["verdict"] = d.pop("classification")
        return {k: d[k] for k in CSV_FIELDS}


def eta_of(phi_prime: float) -> int | None:
    """The η with φ' ∈ [2^-η, 2^-η+1), or None for φ' in {0, 1}."""
    if not 0 <= phi_prime <= 1:
        raise ValidationError("phi_prime must lie in [0, 1]")
    if phi_prime == 0 or phi_prime == 1:
        return None
    return 1 - math.frexp(phi_prime)[1]


def certified_ell(eta: int, params: BalanceParams) -> int:
    halts, L0 = params.oracle(eta)
    if not halts:
        return 1
    return ell_threshold(max(2, L0, eta))


def certified_interval(eta: int, params: BalanceParams):
    lo = 2.0**-eta
    return lo, lo + 2.0 ** (-eta - certified_ell(eta, params))


def classify_phase(phi_prime: float, params: BalanceParams, s_max: int) -> PhaseVerdict:
    from .qpe import PhaseEncoding

    eta = eta_of(phi_prime)
    if eta is None:
        return PhaseVerdict(phi_prime, "OutsideCertifiedInterval")
    lo, hi = certified_interval(eta, params)
    if not lo <= phi_prime < hi:
        return PhaseVerdict(phi_prime, "OutsideCertifiedInterval", eta, lo, hi)
    ell = certified_ell(eta, params)
    enc = PhaseEncoding(eta, ell, lo)  # every φ' in the interval behaves like its left end
    w = halting_square(enc, params, s_max)
    if w is not None:
        sq = square_energy_sign(w, enc, params)
        return PhaseVerdict(phi_prime, "Gapless", eta, lo, hi, w, sq.edge_log2, sq.pen_log2)
    sq = square_energy_sign(max(2, eta), enc, params)
    return PhaseVerdict(phi_prime, "Gapped", eta, lo, hi, None, sq.edge_log2, sq.pen_log2)


def phi_grid(eta_range, samples: int, include_outside: bool = True):
    """Sample points per η: ``samples`` points inside the certified interval,
    one at 2^-η(1 - 1e-9) (still distinct at 12 digits) and one in the
    uncertified rest of [2^-η, 2^-η+1)."""
    out = []
    for eta in eta_range:
        lo = 2.0**-eta
        if include_outside:
            out.append(lo * (1 - 1e-9) if eta > 1 else None)
        out.extend(lo + k / samples * 2.0 ** (-eta - 1) for k in range(samples))
        if include_outside:
            out.append(lo + 0.75 * lo)
    return [p for p in out if p is not None]


def sweep(params: BalanceParams, eta_range, samples: int, s_max: int, include_outside: bool = True):
    """Verdicts over a φ' grid, sorted by φ' descending (η ascending)."""
    pts = sorted(set(phi_grid(eta_range, samples, include_outside)), reverse=True)
    return [classify_phase(p, params, s_max) for p in pts]
