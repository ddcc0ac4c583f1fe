"""Classical Turing machines, a few toy machines and their Wang-tile encoding.

A configuration is ``(tape, head, state)``.  ``run_tm`` records
configurations starting with the initial one; ``max_steps`` caps the number
of configurations returned.

Tile encoding, one row per time step (row ``t`` has configuration ``t`` on
its south edges and configuration ``t + 1`` on its north edges):

* plain ``(c)``: S = N = tape symbol ``c``, no signal on E/W;
* arriving ``(c, q, l|r)``: S = ``c``, N = head symbol ``(c, q)``, the move
  signal ``q`` enters from the west (``l``, head came from the left) or the
  east (``r``);
* departing ``(c, q)``: S = ``(c, q)``, N = the written symbol, the new state
  leaves as a signal through E (move R) or W (move L).

There is no departing tile for the accepting state, so a run that halts
strictly inside the grid cannot be tiled without a penalty.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..errors import ValidationError
from .core import Boundary, Tile, TileSet, Tiling

NO_SIGNAL = "-"


@dataclass(frozen=True)
class TMSpec:
    alphabet: tuple
    states: tuple
    delta: dict = field(hash=False)
    q0: str = "q0"
    qa: str = "qa"
    blank: str = "#"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        if self.blank not in self.alphabet:
            raise ValidationError("blank must be in the alphabet")
        if self.q0 not in self.states or self.qa not in self.states:
            raise ValidationError("q0 and qa must be states")
        for (q, c), (q2, c2, d) in self.delta.items():
            if q == self.qa:
                raise ValidationError("the accepting state has no outgoing transition")
            if q not in self.states or q2 not in self.states:
                raise ValidationError(f"unknown state in transition {(q, c)}")
            if c not in self.alphabet or c2 not in self.alphabet:
                raise ValidationError(f"unknown symbol in transition {(q, c)}")
            if d not in ("L", "R"):
                raise ValidationError("moves are L or R")
        missing = [(q, c) for q in self.states if q != self.qa for c in self.alphabet if (q, c) not in self.delta]
        if missing:
            raise ValidationError(f"transition function not total, missing {missing[:4]}")

    def to_json(self) -> dict:
        return {
            "alphabet": list(self.alphabet), "states": list(self.states),
            "delta": [[q, c, q2, c2, d] for (q, c), (q2, c2, d) in sorted(self.delta.items())],
            "q0": self.q0, "qa": self.qa, "blank": self.blank,
        }

    @classmethod
    def from_json(cls, obj) -> "TMSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        delta = {(q, c): (q2, c2, d) for q, c, q2, c2, d in obj["delta"]}
        return cls(tuple(obj["alphabet"]), tuple(obj["states"]), delta, obj["q0"], obj["qa"], obj["blank"])


def make_tm(alphabet, states, rules, q0="q0", qa="qa", blank="#", name="") -> TMSpec:
    """Build a TMSpec, completing unspecified pairs with a right-moving no-op.

    The filler never fires on well-formed inputs; it only makes the
    transition function total as the type requires.
    """
    delta = dict(rules)
    for q in states:
        if q == qa:
            continue
        for c in alphabet:
            delta.setdefault((q, c), (q, c, "R"))
    return TMSpec(tuple(alphabet), tuple(states), delta, q0, qa, blank, name)


@dataclass(frozen=True)
class Config:
    tape: tuple
    head: int
    state: str


@dataclass(frozen=True)
class TMTrace:
    configs: tuple
    status: str  # halted | running | out_of_tape

    def __len__(self):
        return len(self.configs)

    def __getitem__(self, i):
        return self.configs[i]

    @property
    def final(self) -> Config:
        return self.configs[-1]

    @property
    def steps(self) -> int:
        return len(self.configs) - 1


def run_tm(tm: TMSpec, tape, max_steps: int, head: int = 0) -> TMTrace:
    tape = list(tape)
    if not tape:
        raise ValidationError("tape must be non-empty")
    bad = [c for c in tape if c not in tm.alphabet]
    if bad:
        raise ValidationError(f"tape symbols {bad[:3]} not in alphabet")
    if max_steps < 1:
        raise ValidationError("max_steps counts configurations and must be >= 1")
    if not 0 <= head < len(tape):
        raise ValidationError("initial head outside the tape")
    state = tm.q0
    configs = [Config(tuple(tape), head, state)]
    while True:
        if state == tm.qa:
            status = "halted"
            break
        if len(configs) >= max_steps:
            status = "running"
            break
        q2, c2, d = tm.delta[(state, tape[head])]
        tape[head] = c2
        head += 1 if d == "R" else -1
        state = q2
        if not 0 <= head < len(tape):
            status = "out_of_tape"
            break
        configs.append(Config(tuple(tape), head, state))
    return TMTrace(tuple(configs), status)


def run_fast(tm: TMSpec, tape, max_steps: int = 10**8, head: int = 0):
    """Final tape, head, state, step count and status without storing the trace."""
    tape = list(tape)
    state, steps = tm.q0, 0
    delta = tm.delta
    n = len(tape)
    while state != tm.qa:
        if steps + 1 >= max_steps:
            return tape, head, state, steps, "running"
        q2, c2, d = delta[(state, tape[head])]
        tape[head] = c2
        head += 1 if d == "R" else -1
        state = q2
        steps += 1
        if not 0 <= head < n:
            return tape, head, state, steps, "out_of_tape"
    return tape, head, state, steps, "halted"


# ---------------------------------------------------------------------------
# toy machines


def halt_tm() -> TMSpec:
    """Enters the accepting state on its first move."""
    return make_tm(("0", "1", "#"), ("q0", "qa"), {("q0", c): ("qa", c, "R") for c in ("0", "1", "#")},
                   name="halt")


def right_mover_tm() -> TMSpec:
    """Never halts; walks right writing 1s."""
    return make_tm(("0", "1", "#"), ("q0", "qa"), {("q0", c): ("q0", "1", "R") for c in ("0", "1", "#")},
                   name="right_mover")


def incrementer_tm() -> TMSpec:
    """Two working states: add one to an LSB-first binary number, then walk back.

    ``inc`` propagates the carry to the right, ``back`` returns to the ``^``
    marker and restarts, so the machine counts forever.
    """
    A = ("^", "0", "1", "#")
    rules = {
        ("q0", "^"): ("inc", "^", "R"),
        ("inc", "1"): ("inc", "0", "R"),
        ("inc", "0"): ("back", "1", "L"),
        ("inc", "#"): ("back", "1", "L"),
        ("back", "0"): ("back", "0", "L"),
        ("back", "1"): ("back", "1", "L"),
        ("back", "^"): ("inc", "^", "R"),
    }
    return make_tm(A, ("q0", "inc", "back", "qa"), rules, name="incrementer")


def bouncer_tm() -> TMSpec:
    """Walks between two walls ``|`` forever, flipping the bits it passes."""
    A = ("|", "0", "1", "#")
    rules = {
        ("q0", "|"): ("r", "|", "R"),
        ("r", "0"): ("r", "1", "R"),
        ("r", "1"): ("r", "0", "R"),
        ("r", "|"): ("l", "|", "L"),
        ("l", "0"): ("l", "0", "L"),
        ("l", "1"): ("l", "1", "L"),
        ("l", "|"): ("r", "|", "R"),
    }
    return make_tm(A, ("q0", "r", "l", "qa"), rules, name="bouncer")


COUNTER_ALPHABET = ("0", "1", "X", "z", "o", "|", "#")


def counter_tm() -> TMSpec:
    """Unary-to-binary converter.

    Input ``0^n 1`` followed by blanks.  Each unmarked ``0`` is turned into
    ``X`` and a binary counter right of the ``1`` (digits ``z``/``o``,
    least significant first) is incremented.  Once it reads the ``1`` it
    closes the number with ``|`` and halts on its last digit.
    """
    rules = {
        ("q0", "X"): ("q0", "X", "R"),
        ("q0", "0"): ("seek", "X", "R"),
        ("q0", "1"): ("close", "1", "R"),
        ("close", "z"): ("close", "z", "R"),
        ("close", "o"): ("close", "o", "R"),
        ("close", "#"): ("qa", "|", "L"),
        ("seek", "0"): ("seek", "0", "R"),
        ("seek", "1"): ("inc", "1", "R"),
        ("inc", "z"): ("back", "o", "L"),
        ("inc", "#"): ("back", "o", "L"),
        ("inc", "o"): ("inc", "z", "R"),
        ("back", "z"): ("back", "z", "L"),
        ("back", "o"): ("back", "o", "L"),
        ("back", "1"): ("back", "1", "L"),
        ("back", "0"): ("back", "0", "L"),
        ("back", "X"): ("q0", "X", "R"),
    }
    return make_tm(COUNTER_ALPHABET, ("q0", "seek", "inc", "back", "close", "qa"), rules, name="counter")


def counter_tape(n: int, pad: int | None = None):
    pad = max(2, n.bit_length() + 1) if pad is None else pad
    return ["0"] * n + ["1"] + ["#"] * pad


def read_binary_lsb(cells) -> int:
    value = 0
    for i, c in enumerate(cells):
        if c == "o":
            value |= 1 << i
        elif c != "z":
            break
    return value


def counter_output(tape) -> str:
    """MSB-first binary string right of the ``1`` marker."""
    i = list(tape).index("1")
    digits = []
    for c in tape[i + 1:]:
        if c not in ("z", "o"):
            break
        digits.append("1" if c == "o" else "0")
    return "".join(reversed(digits)) or "0"


# ---------------------------------------------------------------------------
# eighth-root machine

ROOT_ALPHABET = ("^", "z", "o", "|", "1", "_", "r", "R", "[", "/", "X", "#")


def root_tm(levels: int = 3) -> TMSpec:
    """Compute ``ceil(x^(1/2^levels))`` of a binary input; ``levels=3`` is the 8th root.

    Tape layout: ``^ <x LSB-first in z/o> | #...``.

    1. Decrement the binary number until it underflows, appending one ``1``
       right of ``|`` per decrement (binary to unary).
    2. ``levels`` times: ceiling square root in unary by removing the odd
       numbers 1, 3, 5, ... from the pile of ``1``; each round appends an
       ``r`` mark.  The marks become the next pile.
    3. Convert the marks to binary after a ``/`` marker.

    The machine is deliberately simple rather than fast; its step count is
    polynomial in ``x``.
    """
    T = {}

    def rule(q, c, q2, c2, d):
        T[(q, c)] = (q2, c2, d)

    # phase 1: at q0 on '^' start a decrement
    for c in ("z", "o", "|", "#"):
        rule("q0", c, "q0", c, "L")            # started elsewhere: find '^'
    rule("q0", "^", "dec", "^", "R")
    rule("dec", "z", "dec", "o", "R")         # borrow
    rule("dec", "o", "app", "z", "R")         # done, go append a unary mark
    rule("dec", "|", "wipe", "|", "L")        # underflow: x was zero
    for c in ("z", "o", "|", "1"):
        rule("app", c, "app", c, "R")
    rule("app", "#", "ret", "1", "L")
    for c in ("z", "o", "|", "1"):
        rule("ret", c, "ret", c, "L")
    rule("ret", "^", "dec", "^", "R")
    # underflow left the digits as all 'o'; blank them and walk to the pile
    rule("wipe", "o", "wipe", "_", "L")
    rule("wipe", "^", "go", "^", "R")
    rule("go", "_", "go", "_", "R")
    rule("go", "|", "s_start", "[", "R")
    # the pile of 1s now sits right of '['; append the mark separator
    # s_start: walk right to the end of the pile, write '|' there
    rule("s_start", "1", "s_start", "1", "R")
    rule("s_start", "_", "s_start", "_", "R")
    rule("s_start", "#", "s_round", "|", "L")

    # phase 2 (one level).  Pile: cells between the last '[' and '|' holding 1 or _.
    # r-marks live right of '|'.  Start of a round: state s_round anywhere left of '|'.
    # s_round: move left to the wall, then scan right for a remaining 1.
    for c in ("1", "_"):
        rule("s_round", c, "s_round", c, "L")
    rule("s_round", "[", "chk", "[", "R")
    rule("chk", "_", "chk", "_", "R")
    rule("chk", "1", "mk", "1", "R")          # pile nonempty: process marks
    rule("chk", "|", "done_lvl", "|", "R")    # pile empty: level finished
    # mk: go to '|' then find the first unprocessed mark 'r'
    for c in ("1", "_"):
        rule("mk", c, "mk", c, "R")
    rule("mk", "|", "mk2", "|", "R")
    rule("mk2", "R", "mk2", "R", "R")
    rule("mk2", "r", "er2a", "R", "L")        # take a mark, erase two 1s
    rule("mk2", "#", "er1", "#", "L")         # all marks processed: erase one 1
    # walk left to the pile and erase its rightmost 1
    for tag, nxt in (("er2a", "er2b"), ("er2b", "back2"), ("er1", "addr")):
        for c in ("R", "r"):
            rule(tag, c, tag, c, "L")
        rule(tag, "|", tag + "_p", "|", "L")
        rule(tag + "_p", "_", tag + "_p", "_", "L")
        rule(tag + "_p", "1", nxt + "_o", "_", "R")
        rule(tag + "_p", "[", "fin", "[", "R")   # nothing left: finish the round
    # after the first erase of a pair, erase the second
    for c in ("_",):
        rule("er2b_o", c, "er2b_o", c, "R")
    rule("er2b_o", "|", "er2b_p", "|", "L")
    # after the pair, return to the marks
    rule("back2_o", "_", "back2_o", "_", "R")
    rule("back2_o", "|", "mk2", "|", "R")
    # after the single erase, append a mark and reset processed marks
    rule("addr_o", "_", "addr_o", "_", "R")
    rule("addr_o", "|", "addr", "|", "R")
    rule("addr", "R", "addr", "r", "R")
    rule("addr", "r", "addr", "r", "R")
    rule("addr", "#", "rew", "r", "L")
    for c in ("r", "R"):
        rule("rew", c, "rew", c, "L")
    rule("rew", "|", "s_round", "|", "L")
    # pile ran out mid-round: append the mark anyway, round count is the ceiling
    for c in ("_",):
        rule("fin", c, "fin", c, "R")
    rule("fin", "|", "fin2", "|", "R")
    rule("fin2", "R", "fin2", "r", "R")
    rule("fin2", "r", "fin2", "r", "R")
    rule("fin2", "#", "fin3", "r", "L")
    for c in ("r", "R"):
        rule("fin3", c, "fin3", c, "L")
    rule("fin3", "|", "done_lvl0", "|", "L")
    # fin3 leaves the head left of '|'; step back onto the marks
    for c in ("_",):
        rule("done_lvl0", c, "done_lvl0", c, "L")
    rule("done_lvl0", "[", "done_skip", "[", "R")
    rule("done_skip", "_", "done_skip", "_", "R")
    rule("done_skip", "|", "done_lvl", "|", "R")

    # done_lvl sits just right of '|' on the marks.  Either start the next
    # level or convert to binary.  Levels are counted by the number of '['.
    # Turn the old '|' into a new wall '[' and the marks into a pile of 1s.
    # The level counter is carried in the state name.
    states = set()
    for lvl in range(levels):
        states.add(lvl)

    # we relabel the phase-2 states per level to carry the level index
    base_rules = dict(T)
    T.clear()
    phase2 = {"s_round", "chk", "mk", "mk2", "er2a", "er2b", "er1", "er2a_p", "er2b_p", "er1_p",
              "er2b_o", "back2_o", "addr_o", "addr", "rew", "fin", "fin2", "fin3", "done_lvl0",
              "done_skip", "done_lvl", "s_start"}

    def tag(q, lvl):
        return f"{q}@{lvl}" if q in phase2 else q

    for lvl in range(levels):
        for (q, c), (q2, c2, d) in base_rules.items():
            if q in phase2:
                T[(tag(q, lvl), c)] = (tag(q2, lvl), c2, d)
    for (q, c), (q2, c2, d) in base_rules.items():
        if q not in phase2:
            T[(q, c)] = (tag(q2, 0), c2, d)

    for lvl in range(levels):
        dl = f"done_lvl@{lvl}"
        if lvl + 1 < levels:
            # convert marks to pile: go back to '|', make it '[', then r->1 to the right
            nxt = f"s_start@{lvl + 1}"
            T[(dl, "r")] = (f"cv@{lvl}", "r", "L")
            T[(dl, "#")] = (f"cv@{lvl}", "#", "L")  # zero marks: pile stays empty
            T[(f"cv@{lvl}", "|")] = (f"cv2@{lvl}", "[", "R")
            T[(f"cv2@{lvl}", "r")] = (f"cv2@{lvl}", "1", "R")
            T[(f"cv2@{lvl}", "#")] = (nxt, "#", "L")
            # s_start at next level expects to move right to '#': we are just left of it
        else:
            # binary conversion: write '/' after the marks, then move marks into a counter
            T[(dl, "r")] = ("bend", "r", "R")
            T[(dl, "#")] = ("bout0", "/", "R")
    # the pile-making pass leaves the head on the last pile cell; s_start walks right
    # over 1/_ to '#' and writes '|'.  For an empty pile it lands on '[' first:
    for lvl in range(levels):
        T[(f"s_start@{lvl}", "[")] = (f"s_start@{lvl}", "[", "R")

    rule("bend", "r", "bend", "r", "R")
    rule("bend", "#", "bscan", "/", "L")
    # bscan: walk left to find the rightmost remaining mark
    rule("bscan", "_", "bscan", "_", "L")
    rule("bscan", "r", "binc", "_", "R")
    rule("bscan", "|", "bzero", "|", "R")    # no marks left: finished
    rule("binc", "_", "binc", "_", "R")
    rule("binc", "/", "binc2", "/", "R")
    rule("binc2", "o", "binc2", "z", "R")
    rule("binc2", "z", "bret", "o", "L")
    rule("binc2", "#", "bret", "o", "L")
    for c in ("z", "o", "_"):
        rule("bret", c, "bret", c, "L")
    rule("bret", "/", "bscan", "/", "L")
    # zero marks at the end: output is empty (value zero)
    rule("bout0", "#", "qa", "#", "R")
    rule("bzero", "_", "bzero", "_", "R")
    rule("bzero", "/", "qa", "/", "R")
    # bout0 variants needed if tape continues
    for c in ("z", "o", "_", "r"):
        rule("bout0", c, "qa", c, "R")

    states = {q for q, _ in T} | {q2 for q2, _, _ in T.values()}
    states.discard("qa")
    return make_tm(ROOT_ALPHABET, tuple(sorted(states)) + ("qa",), T, name=f"root{2**levels}")


def root_tape(x: int, extra: int | None = None):
    bits = ["o" if (x >> i) & 1 else "z" for i in range(max(1, x.bit_length()))]
    need = x + 2 * int(math.isqrt(x) + 2) + 16 if extra is None else extra
    return ["^"] + bits + ["|"] + ["#"] * need


def root_output(tape) -> int:
    tape = list(tape)
    i = len(tape) - 1 - tape[::-1].index("/")
    return read_binary_lsb(tape[i + 1:])


def ceil_root(x: int, k: int = 8) -> int:
    """Integer oracle ``ceil(x^(1/k))``."""
    if x < 0:
        raise ValueError("x must be non-negative")
    r = int(round(x ** (1.0 / k)))
    while r**k < x:
        r += 1
    while r > 0 and (r - 1) ** k >= x:
        r -= 1
    return r


def ceil_isqrt(x: int) -> int:
    r = math.isqrt(x)
    return r if r * r == x else r + 1


def run_root(x: int, levels: int = 3, max_steps: int = 10**8):
    tm = root_tm(levels)
    tape, _, state, steps, status = run_fast(tm, root_tape(x), max_steps)
    if status != "halted":
        raise RuntimeError(f"root machine did not halt on {x}: {status}")
    return root_output(tape), steps


def fit_root_constant(xs) -> float:
    """Smallest ``c`` with ``steps(x) <= c * log2(x)^8`` on the sample (x >= 2)."""
    return max(run_root(x)[1] / math.log2(x) ** 8 for x in xs if x >= 2)


# ---------------------------------------------------------------------------
# tiles


def sym(c):
    return ("s", c)


def head(c, q):
    return ("h", c, q)


def signal(q, d):
    """Move signal; ``d`` is the direction of travel so that two arriving tiles
    can never hand a head to each other."""
    return ("m", q, d)


def tm_tileset(tm: TMSpec, idle_on_halt: bool = False) -> TileSet:
    """Tiles of the three varieties.

    With ``idle_on_halt`` a halted head is copied forward unchanged, so a
    finished computation can fill the rest of the grid; by default there is
    no such tile and halting inside the grid costs a penalty.
    """
    tiles = []

    def add(edges, name):
        tiles.append(Tile(len(tiles), edges, name=name))

    for c in tm.alphabet:
        add((sym(c), NO_SIGNAL, sym(c), NO_SIGNAL), f"plain({c})")
    for c in tm.alphabet:
        for q in tm.states:
            add((head(c, q), NO_SIGNAL, sym(c), signal(q, "R")), f"arrive({c},{q},l)")
            add((head(c, q), signal(q, "L"), sym(c), NO_SIGNAL), f"arrive({c},{q},r)")
    for (q, c), (q2, c2, d) in sorted(tm.delta.items()):
        if d == "R":
            add((sym(c2), signal(q2, "R"), head(c, q), NO_SIGNAL), f"depart({c},{q})")
        else:
            add((sym(c2), NO_SIGNAL, head(c, q), signal(q2, "L")), f"depart({c},{q})")
    if idle_on_halt:
        for c in tm.alphabet:
            add((head(c, tm.qa), NO_SIGNAL, head(c, tm.qa), NO_SIGNAL), f"idle({c})")
    return TileSet(tuple(tiles), name=f"tm:{tm.name}")


def config_edges(cfg: Config):
    return [head(c, cfg.state) if i == cfg.head else sym(c) for i, c in enumerate(cfg.tape)]


def tm_boundary(tm: TMSpec, tape, head_pos: int = 0) -> Boundary:
    """Bottom row forced to the initial configuration, sides closed."""
    south = [head(c, tm.q0) if i == head_pos else sym(c) for i, c in enumerate(tape)]
    return Boundary(south=south, west=NO_SIGNAL, east=NO_SIGNAL)


def padded_configs(trace: TMTrace, rows: int):
    """Configurations ``0..rows``, repeating a halted final configuration."""
    cfgs = list(trace.configs)
    if len(cfgs) < rows + 1:
        if trace.status != "halted":
            raise ValidationError("trace too short for the requested rows")
        cfgs += [cfgs[-1]] * (rows + 1 - len(cfgs))
    return cfgs[: rows + 1]


def trace_tiling(tm: TMSpec, ts: TileSet, trace: TMTrace, rows: int) -> Tiling:
    """Tiling whose row ``t`` carries configuration ``t`` on its south edges."""
    lookup = {t.edges: t.id for t in ts.tiles}
    cfgs = padded_configs(trace, rows)
    out = []
    for r in range(rows):
        cur, nxt = cfgs[r], cfgs[r + 1]
        row = []
        for x, c in enumerate(cur.tape):
            if cur.state == tm.qa and x == cur.head:
                row.append(lookup[(head(c, tm.qa), NO_SIGNAL, head(c, tm.qa), NO_SIGNAL)])
            elif x == cur.head:
                q2, c2, d = tm.delta[(cur.state, c)]
                e = signal(q2, "R") if d == "R" else NO_SIGNAL
                w = signal(q2, "L") if d == "L" else NO_SIGNAL
                row.append(lookup[(sym(c2), e, head(c, cur.state), w)])
            elif x == nxt.head:
                if nxt.head == cur.head + 1:
                    row.append(lookup[(head(c, nxt.state), NO_SIGNAL, sym(c), signal(nxt.state, "R"))])
                else:
                    row.append(lookup[(head(c, nxt.state), signal(nxt.state, "L"), sym(c), NO_SIGNAL)])
            else:
                row.append(lookup[(sym(c), NO_SIGNAL, sym(c), NO_SIGNAL)])
        out.append(row)
    return Tiling.from_array(out)


def decode_rows(ts: TileSet, t: Tiling):
    """South-edge configuration of every row plus the north edge of the top row."""
    rows = [[ts.tiles[c].s for c in row] for row in t.cells]
    rows.append([ts.tiles[c].n for c in t.cells[-1]])
    return rows
