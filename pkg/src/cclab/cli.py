"""``cclab`` command line.

Exit codes: 0 pass, 1 condition/criterion failure, 2 solver infeasibility,
3 input or I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import bell, epr_model, mcsim, quantum, rpcc
from .prob_core import FLOAT, RATIONAL, ProbError, read_space, space_to_dict
from .report import dumps, emit, manifest, to_csv

EXIT_PASS, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _angles(text: str) -> tuple:
    try:
        vals = [v.strip() for v in text.split(",") if v.strip()]
        return tuple(int(v) if v.lstrip("-").isdigit() else float(v) for v in vals)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle list {text!r}") from None


def _mode() -> str:
    mode = os.environ.get("CCLAB_MODE", RATIONAL)
    if mode not in (RATIONAL, FLOAT):
        raise UsageError(f"CCLAB_MODE must be 'rational' or 'float', not {mode!r}")
    return mode


def _write(doc: dict, args, rows=None, columns=None) -> None:
    fmt = getattr(args, "format", "json")
    dest = getattr(args, "out", None)
    if dest in ("json", "csv"):
        fmt, dest = dest, None
    if fmt == "csv":
        if rows is None:
            raise UsageError("this report has no tabular form; use --format json")
        text = to_csv(rows, columns, doc.get("manifest"))
    else:
        text = dumps(doc)
    try:
        emit(text, dest)
    except OSError as exc:
        raise UsageError(f"cannot write {dest}: {exc}") from exc


def _params(args, *keys) -> dict:
    return {k: getattr(args, k) for k in keys}


# -- subcommands -------------------------------------------------------------

def cmd_quantum(args) -> int:
    left = args.angles
    right = args.right_angles or left
    if len(left) != 3 or len(right) != 3:
        raise UsageError("three angles per wing are required")
    exact = _mode() == RATIONAL
    rows = quantum.joint_table(left, right, exact=exact)
    table = []
    for k in range(0, len(rows), 4):
        block = rows[k:k + 4]
        entry = {"i": block[0]["i"], "j": block[0]["j"],
                 "theta_L": block[0]["theta_L"], "theta_R": block[0]["theta_R"]}
        for r in block:
            entry[("p" if r["a"] == "+" else "m") + ("p" if r["b"] == "+" else "m")] = r["p"]
        entry["E"] = sum(quantum.outcome(r["a"]) * quantum.outcome(r["b"]) * r["p"] for r in block)
        table.append(entry)
    half = Fraction(1, 2) if exact else 0.5
    doc = {
        "table": table,
        "marginals": {f"{s}{k}_{v}": half for s in "LR" for k in quantum.SETTINGS for v in "pm"},
        "manifest": manifest("quantum", {"angles": list(left), "right_angles": list(right),
                                         "mode": _mode()}),
    }
    _write(doc, args, table, ["i", "j", "theta_L", "theta_R", "pp", "pm", "mp", "mm", "E"])
    return EXIT_PASS


def _load_abc(args, names):
    try:
        space, events = read_space(args.space)
    except OSError as exc:
        raise UsageError(f"cannot read {args.space}: {exc}") from exc
    out = []
    for n in names:
        key = getattr(args, n)
        if key not in events:
            raise UsageError(f"event {key!r} not defined in {args.space}")
        out.append(events[key])
    return space, events, out


def cmd_rpcc_check(args) -> int:
    space, _, (a, b, c) = _load_abc(args, ("a", "b", "c"))
    report = rpcc.check_common_cause(space, a, b, c, tol=args.tol, margin=args.margin)
    doc = {"report": report.to_dict(), "passed": report.passed,
           "manifest": manifest("rpcc check", _params(args, "a", "b", "c", "tol", "margin"),
                                [args.space])}
    _write(doc, args)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_rpcc_extend(args) -> int:
    space, events, (a, b) = _load_abc(args, ("a", "b"))
    man = manifest("rpcc extend", _params(args, "a", "b", "seed", "tol", "margin"), [args.space])
    try:
        res = rpcc.complete_with_common_cause(space, a, b, tol=args.tol, margin=args.margin,
                                              seed=args.seed)
    except rpcc.InfeasibleError as exc:
        doc = {"infeasible": True, "best_residual": exc.best_residual,
               "best_point": exc.best_point, "message": str(exc), "manifest": man}
        emit(dumps(doc), args.report)
        return EXIT_INFEASIBLE
    new_events = {k: res.embedding(e) for k, e in events.items()}
    new_events[args.cause_name] = res.common_cause
    ext_doc = space_to_dict(res.extended_space, new_events)
    ext_doc["manifest"] = man
    try:
        emit(dumps(ext_doc), args.out)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from exc
    if args.out not in (None, "-"):
        emit(dumps({"result": res.to_dict(), "manifest": man}), args.report)
    return EXIT_PASS


def cmd_bell_chsh(args) -> int:
    if len(args.angles) != 4:
        raise UsageError("chsh needs four angles: a1,a2,b1,b2")
    res = bell.chsh_from_angles(*args.angles)
    doc = dict(res.to_dict(), manifest=manifest("bell chsh", {"angles": list(args.angles)}))
    _write(doc, args)
    return EXIT_PASS


def cmd_bell_wigner(args) -> int:
    if len(args.angles) != 3:
        raise UsageError("wigner needs three angles")
    exact = _mode() == RATIONAL
    if exact and all(quantum.singlet_joint_exact(x, y, 1, 1) is not None
                     for x in args.angles for y in args.angles):
        joint = quantum.singlet_joint_exact
    else:
        joint = quantum.singlet_joint
    res = bell.wigner(joint, *args.angles, tol=args.tol)
    doc = dict(res.to_dict(), manifest=manifest("bell wigner", {"angles": list(args.angles)}))
    _write(doc, args)
    return EXIT_PASS


def cmd_model_build(args) -> int:
    spec = epr_model.ModelSpec(angles=args.angles, pi=quantum.parse_setting_distribution(args.pi),
                               null_mass=args.null_mass, margin=args.margin, seed=args.seed,
                               tol=args.tol, positive_only=args.positive_only,
                               starts=args.starts)
    man = manifest("model build", {"spec": spec.to_dict()})
    code = EXIT_PASS
    try:
        model = epr_model.build_model(spec)
        failures = {}
    except epr_model.InfeasibleModelError as exc:
        model, failures, code = exc.model, exc.failures, EXIT_INFEASIBLE
        print(f"cclab: {exc}", file=sys.stderr)
    try:
        epr_model.write_model(args.out, model, {"manifest": man})
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from exc
    summary = {"out": args.out, "atoms": len(model.space), "causes": len(model.targets),
               "feasible": not failures, "infeasible_causes": failures,
               "starts_used": model.diagnostics.get("starts_used"), "manifest": man}
    emit(dumps(summary), args.report)
    return code


def cmd_model_audit(args) -> int:
    try:
        model = epr_model.read_model(args.model)
    except OSError as exc:
        raise UsageError(f"cannot read {args.model}: {exc}") from exc
    rep = epr_model.audit(model, tol=args.tol, margin=args.margin)
    doc = rep.to_dict()
    doc["manifest"] = manifest("model audit", _params(args, "tol", "margin"), [args.model])
    args.out = args.report
    _write(doc, args, rep.rows(), ["clause", "mandatory", "instance", "residual", "passed"])
    if not rep.passed:
        print("cclab: audit failed: " + ", ".join(rep.failing), file=sys.stderr)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_sim_run(args) -> int:
    try:
        model = epr_model.read_model(args.model)
    except OSError as exc:
        raise UsageError(f"cannot read {args.model}: {exc}") from exc
    except ProbError:
        # plain space files are accepted too
        model, _ = read_space(args.model)
    cfg = mcsim.SimConfig(trials=args.trials, seed=args.seed, chunk=args.chunk,
                          workers=args.workers)
    rep = mcsim.sample(model, cfg)
    doc = rep.to_dict()
    doc["manifest"] = manifest("sim run", _params(args, "trials", "seed", "chunk"), [args.model])
    args.out = args.report
    _write(doc, args, rep.conditional or None,
           ["i", "j", "a", "b", "n_block", "n_cell", "p_hat", "p", "deviation"])
    return EXIT_PASS


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cclab", description="Common-cause models of EPR correlations.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantum", help="singlet joint-probability table")
    q.add_argument("--angles", type=_angles, default=quantum.DEFAULT_ANGLES)
    q.add_argument("--right-angles", type=_angles, default=None)
    q.add_argument("--out", default=None, help="'json', 'csv' or an output path")
    q.add_argument("--format", choices=("json", "csv"), default="json")
    q.set_defaults(func=cmd_quantum)

    r = sub.add_parser("rpcc", help="Reichenbachian common causes")
    rs = r.add_subparsers(dest="action", required=True)
    rc = rs.add_parser("check", help="check a candidate common cause")
    rc.add_argument("--space", required=True)
    rc.add_argument("--a", required=True)
    rc.add_argument("--b", required=True)
    rc.add_argument("--c", required=True)
    rc.add_argument("--tol", type=float, default=None)
    rc.add_argument("--margin", type=float, default=None)
    rc.add_argument("--out", default=None)
    rc.set_defaults(func=cmd_rpcc_check)
    re_ = rs.add_parser("extend", help="extend a space with a common cause")
    re_.add_argument("--space", required=True)
    re_.add_argument("--a", required=True)
    re_.add_argument("--b", required=True)
    re_.add_argument("--seed", type=int, default=0)
    re_.add_argument("--tol", type=float, default=1e-9)
    re_.add_argument("--margin", type=float, default=None)
    re_.add_argument("--cause-name", default="C")
    re_.add_argument("--out", default=None, help="extended space file (default stdout)")
    re_.add_argument("--report", default=None, help="solver report (default stdout)")
    re_.set_defaults(func=cmd_rpcc_extend)

    b = sub.add_parser("bell", help="Bell-type inequalities on the singlet")
    bs = b.add_subparsers(dest="action", required=True)
    bc = bs.add_parser("chsh", help="CHSH value for angles a1,a2,b1,b2")
    bc.add_argument("--angles", type=_angles, default=(0, 90, 45, 135))
    bc.add_argument("--out", default=None)
    bc.set_defaults(func=cmd_bell_chsh)
    bw = bs.add_parser("wigner", help="Wigner inequality for three angles")
    bw.add_argument("--angles", type=_angles, default=(0, 60, 120))
    bw.add_argument("--tol", type=float, default=0.0)
    bw.add_argument("--out", default=None)
    bw.set_defaults(func=cmd_bell_wigner)

    m = sub.add_parser("model", help="build or audit the common-cause model")
    ms = m.add_subparsers(dest="action", required=True)
    mb = ms.add_parser("build")
    mb.add_argument("--angles", type=_angles, default=quantum.DEFAULT_ANGLES)
    mb.add_argument("--pi", default="uniform")
    mb.add_argument("--null-mass", type=float, default=epr_model.DEFAULT_NULL_MASS)
    mb.add_argument("--seed", type=int, default=42)
    mb.add_argument("--margin", type=float, default=1e-6)
    mb.add_argument("--tol", type=float, default=1e-6)
    mb.add_argument("--starts", type=int, default=epr_model.DEFAULT_STARTS)
    mb.add_argument("--positive-only", action="store_true",
                    help="construct causes only for positively correlated outcome pairs")
    mb.add_argument("--out", required=True)
    mb.add_argument("--report", default=None, help="build summary (default stdout)")
    mb.set_defaults(func=cmd_model_build)
    ma = ms.add_parser("audit")
    ma.add_argument("model")
    ma.add_argument("--tol", type=float, default=1e-6)
    ma.add_argument("--margin", type=float, default=1e-6)
    ma.add_argument("--report", default=None)
    ma.add_argument("--format", choices=("json", "csv"), default="json")
    ma.set_defaults(func=cmd_model_audit)

    s = sub.add_parser("sim", help="Monte-Carlo sampling")
    ss = s.add_subparsers(dest="action", required=True)
    sr = ss.add_parser("run")
    sr.add_argument("model")
    sr.add_argument("--trials", type=int, default=1_000_000)
    sr.add_argument("--seed", type=int, default=0)
    sr.add_argument("--chunk", type=int, default=250_000)
    sr.add_argument("--workers", type=int, default=1)
    sr.add_argument("--report", default=None)
    sr.add_argument("--format", choices=("json", "csv"), default="json")
    sr.set_defaults(func=cmd_sim_run)
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    except (UsageError, ProbError, FileNotFoundError, OSError) as exc:
        print(f"cclab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
