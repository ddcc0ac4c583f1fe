"""Command-line front end.

Every subcommand produces a list of flat rows with a fixed column order and
writes them as CSV (default) or JSON.  Floats carry 12 significant digits;
log2 quantities end in ``_log2``.  Errors go to stderr as one JSON object and
the exit code is nonzero; output files are only created on success.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from .errors import PhaseGapError, ValidationError

SCHEMA = "phasegap/1"
CONFIG_SCHEMA = "phasegap-config/1"
BUDGET_ENV = "PHASEGAP_BUDGET"
EXIT_CODES = {"validation": 2, "usage": 2, "resource": 3, "budget": 3, "convergence": 4, "synthesis": 4}


class UsageError(PhaseGapError):
    kind = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- formatting --------------------------------------------------------------------------

def fmt_value(v):
    """Canonical scalar: 12 significant digits, inf/nan as strings, None as null."""
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(format(v, ".12g"))
    return str(v)


def _csv_cell(v):
    v = fmt_value(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def render(columns, rows, fmt: str, meta: dict | None = None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_csv_cell(r.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        doc = {"schema": SCHEMA, "columns": list(columns),
               "rows": [{c: fmt_value(r.get(c)) for c in columns} for r in rows]}
        if meta:
            doc["meta"] = {k: fmt_value(v) if not isinstance(v, (list, dict)) else v for k, v in meta.items()}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    raise ValidationError(f"unknown format {fmt!r}")


def emit_report(columns, rows, fmt: str, out: str | None, meta: dict | None = None) -> None:
    text = render(columns, rows, fmt, meta)
    if out is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".phasegap-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_csv(text: str):
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    return header, [dict(zip(header, r)) for r in rd]


# --- argument helpers ----------------------------------------------------------------------

def int_range(s: str):
    """'2..8' (inclusive), '3', or '1,4,9'."""
    try:
        if ".." in s:
            a, b = s.split("..")
            a, b = int(float(a)), int(float(b))
            if b < a:
                raise ValueError
            return list(range(a, b + 1))
        return [int(float(x)) for x in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {s!r}") from None


def float_list(s: str):
    try:
        return [float(x) for x in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {s!r}") from None


def resolve_budget(args, default: int) -> int:
    if getattr(args, "budget", None) is not None:
        b = args.budget
    elif os.environ.get(BUDGET_ENV):
        try:
            b = int(os.environ[BUDGET_ENV])
        except ValueError:
            raise ValidationError(f"{BUDGET_ENV} must be an integer") from None
    else:
        b = default
    if b < 1:
        raise ValidationError("budget must be positive")
    return b


CONFIG_FIELDS = {"schema", "balance", "sweep", "format"}
SWEEP_FIELDS = {"eta", "samples", "s_max", "include_outside"}


def load_config(path: str | None) -> dict:
    if path is None:
        return {"schema": CONFIG_SCHEMA}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValidationError(f"malformed config {path}: {e}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    if cfg.get("schema") != CONFIG_SCHEMA:
        raise ValidationError(f"config schema must be {CONFIG_SCHEMA!r}")
    extra = set(cfg) - CONFIG_FIELDS
    if extra:
        raise ValidationError(f"unknown config fields {sorted(extra)}")
    extra = set(cfg.get("sweep", {})) - SWEEP_FIELDS
    if extra:
        raise ValidationError(f"unknown sweep fields {sorted(extra)}")
    if cfg.get("format", "csv") not in ("csv", "json"):
        raise ValidationError("format must be csv or json")
    return cfg


def _params(cfg):
    from .balance import BalanceParams
    return BalanceParams.from_json(cfg.get("balance", {}))


# --- subcommands -------------------------------------------------------------------------------

def cmd_tiles_enumerate(args, cfg):
    from .tiles import augmented_checkerboard_tileset, checkerboard_tileset, enumerate_min_tilings
    from .tiles.core import DEFAULT_NODE_BUDGET

    ts = {"checkerboard": lambda: checkerboard_tileset(True),
          "checkerboard-free": lambda: checkerboard_tileset(False),
          "augmented-semantic": lambda: augmented_checkerboard_tileset("semantic"),
          "augmented-full": lambda: augmented_checkerboard_tileset("full")}[args.tileset]()
    res = enumerate_min_tilings(ts, args.L, resolve_budget(args, DEFAULT_NODE_BUDGET), height=args.height,
                                cap=args.cap)
    rows = [{"rank": i, "score": s, "cells": "/".join(" ".join(map(str, r)) for r in t.cells)}
            for i, (s, t) in enumerate(zip(res.scores, res.tilings))]
    return ("rank", "score", "cells"), rows, {"min_score": res.min_score, "nodes": res.nodes}


def cmd_tiles_audit(args, cfg):
    from .tiles import audit_markers, augmented_checkerboard_tileset, augmented_pattern

    ts = augmented_checkerboard_tileset(args.mode)
    t = augmented_pattern(args.s, args.width, args.height)
    rows = [{"corner_x": f.corner[1], "corner_y": f.corner[0], "kind": f.kind, "side": f.side,
             "location": None if f.location is None else f"{f.location[1]},{f.location[0]}", "penalty": f.penalty}
            for f in audit_markers(ts, t)]
    return ("corner_x", "corner_y", "kind", "side", "location", "penalty"), rows, None


def cmd_marker_bounds(args, cfg):
    from .marker import delta_prime, lambda_min_bounds, lambda_min_offset

    rows = []
    for w in args.w:
        lo, hi = lambda_min_bounds(w)
        lam = delta_prime(w).lambda_min if w <= 400 else -0.5 - lambda_min_offset(w) * 4.0**-w
        rows.append({"w": w, "lower": lo, "lambda_min": lam, "upper": hi, "offset": lambda_min_offset(w),
                     "inside": bool(lo < lam < hi)})
    return ("w", "lower", "lambda_min", "upper", "offset", "inside"), rows, None


def cmd_marker_segment(args, cfg):
    from .marker import FalloffSpec, edge_energy_bounds, marker_segment_hamiltonian, segment_energy_log2
    from .spectra import DENSE_THRESHOLD
    from .tiles import ceil_root

    spec = FalloffSpec(args.C, args.L, args.r if args.r is not None else ceil_root(args.L))
    lo, hi = edge_energy_bounds(spec)
    row = {"C": spec.C, "L": spec.L, "r": spec.r, "f": spec.f, "energy_log2": segment_energy_log2(spec),
           "edge_lower_log2": lo, "edge_upper_log2": hi, "lambda_min": None}
    if not args.log_only:
        seg = marker_segment_hamiltonian(spec, args.pad, resolve_budget(args, DENSE_THRESHOLD))
        row["lambda_min"] = seg.lambda_min
    cols = ("C", "L", "r", "f", "lambda_min", "energy_log2", "edge_lower_log2", "edge_upper_log2")
    return cols, [row], None


def cmd_qpe_simulate(args, cfg):
    from .qpe import PhaseEncoding, encode_unary, predicted_overlap, qpe_approx_sim, qpe_exact_sim

    phi = encode_unary(args.eta) + (args.perturb or 0.0)
    enc = PhaseEncoding(args.eta, args.ell, phi)
    if args.epsilon is None:
        state, delta = qpe_exact_sim(phi, args.t), 0.0
    else:
        state, delta = qpe_approx_sim(phi, args.t, args.epsilon)
    target, bound = predicted_overlap(enc, args.t, delta)
    ov = state.overlap(int(target, 2))
    row = {"eta": args.eta, "ell": args.ell, "phi_prime": phi, "t": args.t, "target": target,
           "target_overlap": ov, "beta0": state.overlap(0), "bound": bound, "holds": bool(ov >= bound - 1e-12)}
    return ("eta", "ell", "phi_prime", "t", "target", "target_overlap", "beta0", "bound", "holds"), [row], None


def cmd_qpe_sk(args, cfg):
    from .qpe import sk_synthesize

    rows = []
    for theta in args.theta:
        s = sk_synthesize(theta, args.epsilon, args.depth)
        rows.append({"theta": theta, "epsilon": args.epsilon, "word": s.word, "length": len(s), "depth": s.depth,
                     "global_phase": s.global_phase, "achieved_error": s.achieved_error})
    return ("theta", "epsilon", "word", "length", "depth", "global_phase", "achieved_error"), rows, None


def cmd_history_diag(args, cfg):
    from .history import CircuitSpec, Gate, PenaltySpec, default_t_init, feynman_kitaev, gs_upper_bound
    from .spectra import DIM_BUDGET, eigen_spectrum

    budget = resolve_budget(args, DIM_BUDGET)
    rows = []
    if args.circuit:
        with open(args.circuit) as fh:
            c = CircuitSpec.from_json(json.load(fh))
        H = feynman_kitaev(c, PenaltySpec.none(c.dim, 0), budget)
        rows.append({"T": c.T, "n": c.n_qubits, "T_init": 0, "eps": 0.0,
                     "lambda_min": eigen_spectrum(H, k=1).min, "upper_bound": 0.0})
    else:
        for T in args.T:
            ti = default_t_init(T) if args.t_init is None else args.t_init
            theta = math.asin(math.sqrt(args.eps)) / (T - ti) if T > ti else 0.0
            c = CircuitSpec(1, tuple([Gate("I", (0,))] * ti + [Gate("R", (0,), (), (theta,))] * (T - ti)))
            p = PenaltySpec(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]), ti)
            lam = eigen_spectrum(feynman_kitaev(c, p, budget)).min
            rows.append({"T": T, "n": 1, "T_init": ti, "eps": args.eps, "lambda_min": lam,
                         "upper_bound": gs_upper_bound(args.eps, T, ti)})
    for r in rows:
        r["lambda_T2"] = r["lambda_min"] * r["T"] ** 2
    return ("T", "n", "T_init", "eps", "lambda_min", "upper_bound", "lambda_T2"), rows, None


def cmd_history_guard(args, cfg):
    from .history import ancilla_guard_overlap

    rows = []
    for a in args.alpha:
        for e in args.eps:
            ov = ancilla_guard_overlap(a, e)
            want = 0.75 * (1 - a * a * e * e)
            rows.append({"alpha": a, "eps": e, "overlap": ov, "formula": want, "abs_error": abs(ov - want)})
    return ("alpha", "eps", "overlap", "formula", "abs_error"), rows, None


def cmd_balance_window(args, cfg):
    from .balance import falloff_window_check, geometric_L_grid

    p = _params(cfg)
    C = args.C if args.C is not None else p.C
    Ls = geometric_L_grid(args.L_lo, args.L_hi, args.per_octave)
    rep = falloff_window_check(C, Ls, p)
    rows = [{"L": r.L, "edge_log2": r.edge_log2, "nonhalt_lower_log2": r.nonhalt_lower_log2,
             "halt_upper_log2": r.halt_upper_log2, "too_strong": r.too_strong, "too_weak": r.too_weak,
             "ok": r.ok} for r in rep.rows]
    meta = {"C": C, "satisfied_range": list(rep.satisfied_range) if rep.satisfied_range else None}
    cols = ("L", "edge_log2", "nonhalt_lower_log2", "halt_upper_log2", "too_strong", "too_weak", "ok")
    return cols, rows, meta


def cmd_balance_classify(args, cfg):
    from .balance import CSV_FIELDS, classify_phase

    p = _params(cfg)
    return CSV_FIELDS, [classify_phase(phi, p, args.s_max).row() for phi in args.phi], None


def cmd_sweep(args, cfg):
    from .balance import CSV_FIELDS, sweep

    p = _params(cfg)
    sw = cfg.get("sweep", {})
    eta = sw.get("eta", [1, 8])
    if args.eta is not None:
        eta = [args.eta[0], args.eta[-1]]
    samples = int(args.samples if args.samples is not None else sw.get("samples", 5))
    s_max = int(args.s_max if args.s_max is not None else sw.get("s_max", 32))
    if len(eta) != 2 or eta[0] < 1 or eta[1] < eta[0] or samples < 1:
        raise ValidationError("sweep grid is empty")
    verdicts = sweep(p, range(int(eta[0]), int(eta[1]) + 1), samples, s_max, bool(sw.get("include_outside", True)))
    return CSV_FIELDS, [v.row() for v in verdicts], None


# --- parser ----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config (schema phasegap-config/1)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--budget", type=int, help=f"node or dimension budget (env {BUDGET_ENV})")

    p = _Parser(prog="phasegap", description="Toy-scale numerics for gapped/gapless phase diagrams.")
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def add(group_sub, name, fn, **kw):
        q = group_sub.add_parser(name, parents=[common], **kw)
        q.set_defaults(fn=fn)
        return q

    tiles = sub.add_parser("tiles").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = add(tiles, "enumerate", cmd_tiles_enumerate, help="minimum-score tilings of an L x H grid")
    q.add_argument("--L", type=int, required=True)
    q.add_argument("--height", type=int)
    q.add_argument("--cap", type=int, help="return every tiling with score <= cap")
    q.add_argument("--tileset", default="checkerboard",
                   choices=("checkerboard", "checkerboard-free", "augmented-semantic", "augmented-full"))
    q = add(tiles, "audit", cmd_tiles_audit, help="audit the ● markers of a checkerboard pattern")
    q.add_argument("--s", type=int, required=True)
    q.add_argument("--width", type=int, required=True)
    q.add_argument("--height", type=int)
    q.add_argument("--mode", choices=("semantic", "full"), default="semantic")

    marker = sub.add_parser("marker").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = add(marker, "bounds", cmd_marker_bounds, help="λ_min of Δ'_w against its bounds")
    q.add_argument("--w", type=int_range, required=True)
    q = add(marker, "segment", cmd_marker_segment, help="energy of one marker segment")
    q.add_argument("--C", type=int, default=1)
    q.add_argument("--L", type=int, required=True)
    q.add_argument("--r", type=int)
    q.add_argument("--pad", type=int, default=0)
    q.add_argument("--log-only", action="store_true", help="skip diagonalization")

    qpe = sub.add_parser("qpe").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = add(qpe, "simulate", cmd_qpe_simulate, help="phase estimation on the unary encoding")
    q.add_argument("--eta", type=int, required=True)
    q.add_argument("--t", type=int, required=True)
    q.add_argument("--ell", type=int, default=1)
    q.add_argument("--perturb", type=float, help="offset added to 2^-eta")
    q.add_argument("--epsilon", type=float, help="use SK rotations at this accuracy")
    q = add(qpe, "sk", cmd_qpe_sk, help="Solovay-Kitaev words for phase gates")
    q.add_argument("--theta", type=float_list, required=True)
    q.add_argument("--epsilon", type=float, default=1e-3)
    q.add_argument("--depth", type=int, default=5)

    hist = sub.add_parser("history").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = add(hist, "diag", cmd_history_diag, help="ground energy of Feynman-Kitaev Hamiltonians")
    q.add_argument("--T", type=int_range, default=[4])
    q.add_argument("--t-init", type=int)
    q.add_argument("--eps", type=float, default=1.0, help="terminal overlap with the penalized output")
    q.add_argument("--circuit", help="circuit JSON; diagonalized without penalties")
    q = add(hist, "guard", cmd_history_guard, help="single-ancilla guard overlaps")
    q.add_argument("--alpha", type=float_list, default=[0, 0.25, 0.5, 0.75, 1])
    q.add_argument("--eps", type=float_list, default=[0, 0.25, 0.5, 0.75, 1])

    bal = sub.add_parser("balance").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = add(bal, "window", cmd_balance_window, help="falloff window scan over a geometric L grid")
    q.add_argument("--C", type=int)
    q.add_argument("--L-lo", type=int, default=2)
    q.add_argument("--L-hi", type=int, default=2**64)
    q.add_argument("--per-octave", type=int, default=2)
    q = add(bal, "classify", cmd_balance_classify, help="phase verdicts at given φ'")
    q.add_argument("--phi", type=float_list, required=True)
    q.add_argument("--s-max", type=int, default=32)

    pd = sub.add_parser("phase-diagram").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = add(pd, "sweep", cmd_sweep, help="verdict rows over a φ' grid")
    q.add_argument("--eta", type=int_range)
    q.add_argument("--samples", type=int)
    q.add_argument("--s-max", type=int)
    return p


def run_subcommand(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        fmt = args.format or cfg.get("format", "csv")
        cols, rows, meta = args.fn(args, cfg)
        emit_report(cols, rows, fmt, args.out, meta)
        return 0
    except PhaseGapError as e:
        _fail(e.to_dict(), EXIT_CODES.get(e.kind, 1))
        return EXIT_CODES.get(e.kind, 1)
    except (OSError, KeyError, TypeError, ValueError) as e:
        kind = "io" if isinstance(e, OSError) else "validation"
        _fail({"error": kind, "message": str(e)}, 1 if kind == "io" else 2)
        return 1 if kind == "io" else 2


def _fail(d, code):
    sys.stderr.write(json.dumps(d, default=str) + "\n")


def main(argv=None) -> int:
    return run_subcommand(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
