"""Synthesis and audit of the individual-common-cause model of EPR correlations.

The model space has, for every setting block ``(i, j)``, one atom per
(outcome pair, cause label) where the label says which ``C_ij^{ab}`` the
atom belongs to (``x`` = none of them), plus a null-preparation atom whose
complement is ``Lambda``.  Containment in ``L_i & R_j & Lambda`` and mutual
exclusivity of the causes therefore hold by construction; only the
screening and relevance conditions are left to the numerical search.

Quantum fidelity is imposed first: each outcome cell of a block carries
exactly ``(1 - null_mass) pi_L(i) pi_R(j) p_singlet(a, b)``.  With the cell
masses fixed, every global quantity entering the not-C screening condition
is a constant, so blocks are solved independently.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import bell
from .bell import SettingModel
from .prob_core import (
    FLOAT,
    Event,
    NullConditionError,
    ProbError,
    ProbSpace,
    conditional,
    probability,
    read_space,
    space_from_dict,
    space_to_dict,
)
from .quantum import (
    DEFAULT_ANGLES,
    OUTCOMES,
    SETTINGS,
    SettingDistribution,
    cause_name,
    event_name,
    outcome_tag,
    setting_events,
    singlet_joint,
)
from .rpcc import DegenerateCauseError, check_common_cause
from .solver import DEFAULT_ITERATIONS, DEFAULT_STARTS, multistart

LABELS = ("pp", "pm", "mp", "mm")
REMAINDER = "x"
NULL_ATOM = "null"
DEFAULT_NULL_MASS = 0.02
SOLVER_TOL = 1e-11


def _pair(label: str) -> tuple:
    return tuple(1 if ch == "p" else -1 for ch in label)


def _label(a, b) -> str:
    return outcome_tag(a) + outcome_tag(b)


@dataclass(frozen=True)
class ModelSpec:
    angles: tuple = DEFAULT_ANGLES
    pi: SettingDistribution = field(default_factory=SettingDistribution.uniform)
    null_mass: float = DEFAULT_NULL_MASS
    margin: float = 1e-6
    seed: int = 42
    tol: float = 1e-6
    positive_only: bool = False
    starts: int = DEFAULT_STARTS
    max_iter: int = DEFAULT_ITERATIONS

    def __post_init__(self):
        if len(self.angles) != 3:
            raise ProbError("three measurement directions are required")
        if not 0 <= float(self.null_mass) < 1:
            raise ProbError("null_mass must lie in [0, 1)")
        if not self.margin > 0:
            raise ProbError("margin must be positive")
        if not isinstance(self.pi, SettingDistribution):
            raise ProbError("pi must be a SettingDistribution")

    def to_dict(self) -> dict:
        return {"angles": [float(a) for a in self.angles], "pi": self.pi.to_dict(),
                "null_mass": float(self.null_mass), "margin": float(self.margin),
                "seed": int(self.seed), "tol": float(self.tol),
                "positive_only": self.positive_only, "starts": self.starts,
                "max_iter": self.max_iter}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ModelSpec":
        pi = doc.get("pi")
        pi = SettingDistribution(tuple(_num(v) for v in pi["left"]),
                                 tuple(_num(v) for v in pi["right"])) if pi else SettingDistribution.uniform()
        return cls(angles=tuple(doc.get("angles", DEFAULT_ANGLES)), pi=pi,
                   null_mass=doc.get("null_mass", DEFAULT_NULL_MASS),
                   margin=doc.get("margin", 1e-6), seed=doc.get("seed", 42),
                   tol=doc.get("tol", 1e-6), positive_only=doc.get("positive_only", False),
                   starts=doc.get("starts", DEFAULT_STARTS),
                   max_iter=doc.get("max_iter", DEFAULT_ITERATIONS))


def _num(v):
    from .prob_core import to_fraction

    return to_fraction(v) if isinstance(v, str) else v


@dataclass(frozen=True)
class EprModel(SettingModel):
    spec: ModelSpec = field(default_factory=ModelSpec)
    targets: tuple = ()
    diagnostics: Mapping = field(default_factory=dict)

    def cause(self, i, j, a, b) -> Event:
        return self.ev(cause_name(i, j, a, b))

    def block(self, i, j) -> Event:
        return self.ev(event_name("L", i)) & self.ev(event_name("R", j)) & self.ev("Lambda")

    def to_dict(self) -> dict:
        doc = space_to_dict(self.space, self.events)
        doc["model"] = {"spec": self.spec.to_dict(),
                        "targets": [cause_name(*t) for t in self.targets],
                        "diagnostics": dict(self.diagnostics)}
        return doc


class InfeasibleModelError(RuntimeError):
    """Some causes could not be solved to tolerance.

    ``model`` is the best-effort construction (flagged infeasible in its
    diagnostics); ``failures`` maps cause names to their best residuals.
    """

    def __init__(self, message: str, model: EprModel, failures: Mapping):
        super().__init__(message)
        self.model = model
        self.failures = dict(failures)


# -- construction -----------------------------------------------------------

def cell_masses(spec: ModelSpec) -> dict:
    keep = 1.0 - float(spec.null_mass)
    W = {}
    for i, tl in enumerate(spec.angles, 1):
        for j, tr in enumerate(spec.angles, 1):
            for a in OUTCOMES:
                for b in OUTCOMES:
                    W[i, j, a, b] = (keep * float(spec.pi.left[i - 1]) * float(spec.pi.right[j - 1])
                                     * singlet_joint(tl, tr, a, b))
    return W


def _marginals(W: Mapping):
    PL = {(i, a): math.fsum(W[i, j, a, b] for j in SETTINGS for b in OUTCOMES)
          for i in SETTINGS for a in OUTCOMES}
    PR = {(j, b): math.fsum(W[i, j, a, b] for i in SETTINGS for a in OUTCOMES)
          for j in SETTINGS for b in OUTCOMES}
    return PL, PR


def _stick_fracs(s: np.ndarray) -> np.ndarray:
    """Stick-breaking: rows are cells, columns labels; returns label fractions."""
    out = np.empty_like(s)
    left = np.ones(s.shape[0])
    for k in range(s.shape[1]):
        out[:, k] = left * s[:, k]
        left = left * (1.0 - s[:, k])
    return out


class _BlockProblem:
    """Screening/relevance equations for a set of causes sharing one block.

    Cell capacities are what remains of each outcome cell; unknowns are
    stick-breaking shares of that capacity, one column per cause.
    """

    CELLS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

    def __init__(self, i, j, labels, capacity, W, PL, PR, margin):
        self.i, self.j, self.labels = i, j, list(labels)
        self.cap = np.array([capacity[c] for c in self.CELLS])
        self.m = len(self.labels)
        self.margin = float(margin)
        self.target = max(10 * self.margin, 1e-4)
        self.consts = []
        for lab in self.labels:
            a, b = _pair(lab)
            corr = W[i, j, a, b] - PL[i, a] * PR[j, b]
            self.consts.append((a, b, W[i, j, a, b], PL[i, a], PR[j, b], -1 if corr < 0 else 1))

    def masses(self, x: np.ndarray) -> np.ndarray:
        """(cell, cause) masses for a flat vector of shares."""
        return _stick_fracs(x.reshape(4, self.m)) * self.cap[:, None]

    def _pieces(self, x):
        M = self.masses(x)
        for k, (a, b, w, pl, pr, orient) in enumerate(self.consts):
            col = {cell: M[n, k] for n, cell in enumerate(self.CELLS)}
            cab = col[a, b]
            ca = cab + col[a, -b]
            cb = cab + col[-a, b]
            c = M[:, k].sum()
            yield c, cab, ca, cb, w - cab, pl - ca, pr - cb, 1.0 - c, orient

    def residuals(self, x):
        out = []
        for c, cab, ca, cb, nab, na, nb, nc, orient in self._pieces(x):
            c_ = max(c, 1e-300)
            out.append((cab * c - ca * cb) / (c_ * c_))
            out.append((nab * nc - na * nb) / (nc * nc))
            out.append(max(0.0, self.target - (ca / c_ - na / nc)))
            out.append(max(0.0, self.target - orient * (cb / c_ - nb / nc)))
        return np.array(out)

    def per_cause_score(self, x):
        scores = []
        for c, cab, ca, cb, nab, na, nb, nc, orient in self._pieces(x):
            if c <= 0:
                scores.append(math.inf)
                continue
            e9 = abs(cab * c - ca * cb)
            e10 = abs(nab * nc - na * nb)
            short = (max(0.0, 2 * self.margin - (ca / c - na / nc))
                     + max(0.0, 2 * self.margin - orient * (cb / c - nb / nc)))
            scores.append(max(e9, e10) + short)
        return scores

    def score(self, x):
        return max(self.per_cause_score(x))


def _solve_block(problem: _BlockProblem, seed: int, spec: ModelSpec):
    result = multistart(problem.residuals, problem.score, 4 * problem.m, seed=seed,
                        tol=SOLVER_TOL, starts=spec.starts, max_iter=spec.max_iter)
    return result, problem.per_cause_score(result.x)


def _correlation_sign(W, PL, PR, i, j, a, b) -> int:
    return 1 if W[i, j, a, b] - PL[i, a] * PR[j, b] > 0 else -1


def _assemble(spec: ModelSpec, W: Mapping, fracs: Mapping, targets: Sequence,
              diagnostics: Mapping) -> EprModel:
    """Build the space from per-(block, cell) label fractions."""
    atoms, tags, causes = [], {}, {cause_name(*t): set() for t in targets}
    target_labels = {(i, j): [_label(a, b) for (ti, tj, a, b) in targets if (ti, tj) == (i, j)]
                     for i in SETTINGS for j in SETTINGS}
    for i in SETTINGS:
        for j in SETTINGS:
            for a in OUTCOMES:
                for b in OUTCOMES:
                    w = W[i, j, a, b]
                    cell = _label(a, b)
                    f = fracs.get((i, j, a, b), {})
                    used = 0.0
                    for lab in target_labels[i, j]:
                        share = float(f.get(lab, 0.0))
                        used += share
                        name = f"b{i}{j}_{cell}_{lab}"
                        atoms.append((name, w * share))
                        tags[name] = (i, j, a, b)
                        causes[cause_name(i, j, *_pair(lab))].add(name)
                    name = f"b{i}{j}_{cell}_{REMAINDER}"
                    atoms.append((name, w * max(0.0, 1.0 - used)))
                    tags[name] = (i, j, a, b)
    if float(spec.null_mass) > 0:
        atoms.append((NULL_ATOM, float(spec.null_mass)))
    total = math.fsum(wt for _, wt in atoms)
    if abs(total - 1.0) > 1e-12:
        raise ProbError(f"assembled measure sums to {total!r}")
    space = ProbSpace(atoms, mode=FLOAT)
    events = setting_events(space, tags)
    events.update({k: space.event(v) for k, v in causes.items()})
    return EprModel(space, events, spec=spec, targets=tuple(targets), diagnostics=diagnostics)


def model_targets(spec: ModelSpec) -> list:
    W = cell_masses(spec)
    PL, PR = _marginals(W)
    out = []
    for i in SETTINGS:
        for j in SETTINGS:
            for a in OUTCOMES:
                for b in OUTCOMES:
                    if spec.positive_only and _correlation_sign(W, PL, PR, i, j, a, b) < 0:
                        continue
                    out.append((i, j, a, b))
    return out


def build_model(spec: ModelSpec | None = None) -> EprModel:
    """Solve for cause labels in every block and assemble the model.

    Within a block, positively correlated causes are solved jointly first,
    then negatively correlated ones on the leftover capacity.  Raises
    :class:`InfeasibleModelError` (carrying the best-effort model) if any
    cause misses the solver tolerance.
    """
    spec = spec or ModelSpec()
    W = cell_masses(spec)
    PL, PR = _marginals(W)
    targets = model_targets(spec)
    fracs: dict = {}
    per_cause: dict = {}
    failures: dict = {}
    starts_used = 0
    for bi, (i, j) in enumerate((i, j) for i in SETTINGS for j in SETTINGS):
        block_targets = [(a, b) for (ti, tj, a, b) in targets if (ti, tj) == (i, j)]
        capacity = {(a, b): W[i, j, a, b] for a in OUTCOMES for b in OUTCOMES}
        stages = (
            [t for t in block_targets if _correlation_sign(W, PL, PR, i, j, *t) > 0],
            [t for t in block_targets if _correlation_sign(W, PL, PR, i, j, *t) < 0],
        )
        for si, stage in enumerate(stages):
            if not stage:
                continue
            labels = [_label(a, b) for a, b in stage]
            prob = _BlockProblem(i, j, labels, capacity, W, PL, PR, spec.margin)
            seed = [spec.seed, bi, si]
            result, scores = _solve_block(prob, int(np.random.SeedSequence(seed).generate_state(1)[0]),
                                          spec)
            starts_used += result.starts_used
            M = prob.masses(result.x)
            for n, cell in enumerate(_BlockProblem.CELLS):
                entry = fracs.setdefault((i, j) + cell, {})
                for k, lab in enumerate(labels):
                    entry[lab] = M[n, k] / W[(i, j) + cell] if W[(i, j) + cell] > 0 else 0.0
                capacity[cell] -= M[n, :].sum()
                capacity[cell] = max(capacity[cell], 0.0)
            for (a, b), s in zip(stage, scores):
                name = cause_name(i, j, a, b)
                ok = s <= SOLVER_TOL
                per_cause[name] = {"score": s, "feasible": ok,
                                   "orientation": "negative" if si else "positive"}
                if not ok:
                    failures[name] = s
    diagnostics = {"starts_used": starts_used, "feasible": not failures,
                   "final_objective": max((v["score"] for v in per_cause.values()), default=0.0),
                   "causes": per_cause}
    model = _assemble(spec, W, fracs, targets, diagnostics)
    if failures:
        raise InfeasibleModelError(
            f"{len(failures)} of {len(targets)} causes could not be solved "
            f"(worst residual {max(failures.values()):.3g})", model, failures)
    return model


def build_model_best_effort(spec: ModelSpec | None = None) -> EprModel:
    """Like :func:`build_model` but returns the flagged model on infeasibility."""
    try:
        return build_model(spec)
    except InfeasibleModelError as err:
        return err.model


def deterministic_cause_model(spec: ModelSpec | None = None) -> EprModel:
    """Counterexample fixture: every ``C_ij^ab`` is its whole outcome cell.

    Such causes fail not-C screening whenever other blocks give the
    outcome positive mass.
    """
    spec = spec or ModelSpec()
    W = cell_masses(spec)
    targets = [(i, j, a, b) for i in SETTINGS for j in SETTINGS for a in OUTCOMES for b in OUTCOMES]
    fracs = {(i, j, a, b): {_label(a, b): 1.0} for (i, j, a, b) in targets}
    return _assemble(spec, W, fracs, targets, {"fixture": "deterministic_cause"})


# -- files ------------------------------------------------------------------

def model_from_dict(doc: Mapping) -> EprModel:
    space, events = space_from_dict(doc)
    meta = doc.get("model", {}) or {}
    spec = ModelSpec.from_dict(meta.get("spec", {}))
    required = ["Lambda"] + [event_name(s, k) for s in "LR" for k in SETTINGS] + [
        event_name(s, k, v) for s in "LR" for k in SETTINGS for v in OUTCOMES]
    missing = [r for r in required if r not in events]
    if missing:
        raise ProbError(f"model is missing events {missing}")
    targets = []
    for name in events:
        if name.startswith("C_"):
            try:
                _, ij, ab = name.split("_")
                targets.append((int(ij[0]), int(ij[1]), *_pair(ab)))
            except (ValueError, IndexError):
                raise ProbError(f"malformed cause name {name!r}") from None
    targets.sort(key=lambda t: (t[0], t[1], -t[2], -t[3]))
    return EprModel(space, events, spec=spec, targets=tuple(targets),
                    diagnostics=meta.get("diagnostics", {}))


def read_model(path) -> EprModel:
    import json

    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProbError(f"{path}: invalid JSON: {exc}") from exc
    return model_from_dict(doc)


def write_model(path, model: EprModel, extra: Mapping | None = None) -> None:
    from .report import dumps

    doc = model.to_dict()
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        fh.write(dumps(doc))


# -- audit ------------------------------------------------------------------

@dataclass
class Clause:
    name: str
    mandatory: bool = True
    passed: bool = True
    worst: float = 0.0
    witness: dict = field(default_factory=dict)
    instances: list = field(default_factory=list)
    note: str = ""

    def add(self, label: dict, residual, ok: bool) -> None:
        r = float(residual) if residual is not None else math.inf
        self.instances.append({"instance": label, "residual": r, "passed": bool(ok)})
        self.passed = self.passed and bool(ok)
        # witness: largest residual among failures if any, else overall
        pool = [x for x in self.instances if not x["passed"]] or self.instances
        top = max(pool, key=lambda x: abs(x["residual"]))
        self.worst, self.witness = top["residual"], top["instance"]

    def to_dict(self) -> dict:
        return {"name": self.name, "mandatory": self.mandatory, "passed": self.passed,
                "worst": self.worst, "witness": self.witness, "note": self.note,
                "failures": sum(not i["passed"] for i in self.instances),
                "instances": self.instances}


@dataclass
class AuditReport:
    clauses: dict
    warnings: list
    tol: float
    margin: float
    diagnostics: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses.values() if c.mandatory)

    @property
    def failing(self) -> list:
        return [c.name for c in self.clauses.values() if c.mandatory and not c.passed]

    @property
    def max_residual(self) -> float:
        keys = ("screen_C", "screen_notC", "outcome_independence", "quantum_fidelity")
        return max((abs(self.clauses[k].worst) for k in keys if k in self.clauses), default=0.0)

    def to_dict(self) -> dict:
        return {"summary": {"passed": self.passed, "failing_clauses": self.failing,
                            "max_residual": self.max_residual},
                "tol": self.tol, "margin": self.margin, "warnings": list(self.warnings),
                "solver": dict(self.diagnostics),
                "clauses": {k: c.to_dict() for k, c in self.clauses.items()}}

    def rows(self) -> list:
        out = []
        for c in self.clauses.values():
            for inst in c.instances:
                out.append({"clause": c.name, "mandatory": c.mandatory,
                            "instance": ";".join(f"{k}={v}" for k, v in inst["instance"].items()),
                            "residual": inst["residual"], "passed": inst["passed"]})
        return out


@dataclass(frozen=True)
class FidelityReport:
    max_deviation: float
    witness: dict
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {"max_deviation": self.max_deviation, "witness": self.witness,
                "passed": self.passed, "tol": self.tol}


def verify_quantum_fidelity(model, oracle=singlet_joint, angles: Sequence | None = None,
                            tol: float = 1e-9) -> FidelityReport:
    """Max |p(La Rb | Li Rj) - oracle(thi, thj, a, b)| over all 36 combinations."""
    angles = angles if angles is not None else model.spec.angles
    worst, witness = -1.0, {}
    for i, tl in enumerate(angles, 1):
        for j, tr in enumerate(angles, 1):
            for a in OUTCOMES:
                for b in OUTCOMES:
                    try:
                        p = bell.model_conditional(model, i, j, a, b)
                    except NullConditionError:
                        raise ProbError(f"setting block ({i},{j}) has no mass") from None
                    d = abs(float(p) - oracle(tl, tr, a, b))
                    if d > worst:
                        worst, witness = d, {"i": i, "j": j, "a": outcome_tag(a), "b": outcome_tag(b)}
    return FidelityReport(worst, witness, worst <= tol, tol)


def audit(model: EprModel, tol: float = 1e-6, margin: float = 1e-6,
          fidelity_tol: float = 1e-9, require_nondeterministic: bool = True) -> AuditReport:
    """Recompute every model condition from the measure itself.

    Solver residuals are never consulted.  Mandatory clauses: the four
    common-cause clauses and outcome independence for each constructed
    cause; containment and exclusivity; measurement dependence (with its
    closed form), hidden-locality, parameter-independence and
    factorizability *violations*; non-screening of ``Lambda`` and of each
    ``L_i & R_j & Lambda``; quantum fidelity; one non-deterministic cause.
    """
    if not isinstance(model, SettingModel):
        raise ProbError("audit needs a model with a space and events")
    sp, ev = model.space, model.events
    for name in ("Lambda",) + tuple(event_name(s, k) for s in "LR" for k in SETTINGS):
        if name not in ev:
            raise ProbError(f"model is missing event {name!r}")
    names = ["screen_C", "screen_notC", "relevance_L", "relevance_R",
             "containment", "union_containment", "disjoint",
             "outcome_independence", "measurement_dependence_L",
             "measurement_dependence_R", "hidden_locality_violated",
             "parameter_independence_violated", "factorizability_violated",
             "lambda_non_screening", "block_lambda_non_screening", "quantum_fidelity",
             "non_determinism_witness"]
    cl = {n: Clause(n) for n in names}
    cl["non_determinism_witness"].mandatory = require_nondeterministic
    warnings = []
    lam = ev["Lambda"]
    if lam == sp.sure():
        warnings.append("Lambda is the sure event (no null-preparation mass)")

    nondeterministic = False
    for (i, j, a, b) in model.targets:
        cname = cause_name(i, j, a, b)
        C = ev[cname]
        lab = {"C": cname}
        la, rb = ev[event_name("L", i, a)], ev[event_name("R", j, b)]
        block = ev[event_name("L", i)] & ev[event_name("R", j)] & lam
        cl["containment"].add(lab, probability(sp, C - block), C.issubset(block))
        try:
            rep = check_common_cause(sp, la, rb, C, tol=tol, margin=margin)
        except DegenerateCauseError:
            for n in ("screen_C", "screen_notC", "relevance_L", "relevance_R",
                      "outcome_independence"):
                cl[n].add(lab, None, False)
            for n in ("measurement_dependence_L", "measurement_dependence_R",
                      "hidden_locality_violated", "parameter_independence_violated",
                      "factorizability_violated"):
                cl[n].add(lab, 0.0, False)
            continue
        olab = dict(lab, orientation=rep.correlation_sign)
        cl["screen_C"].add(olab, rep.screen_on_C, rep.verdict["screen_C"])
        cl["screen_notC"].add(olab, rep.screen_on_notC, rep.verdict["screen_notC"])
        cl["relevance_L"].add(olab, rep.relevance_A, rep.verdict["relevance_A"])
        cl["relevance_R"].add(olab, rep.relevance_B, rep.verdict["relevance_B"])

        oi = bell.check_outcome_independence(model, C, i, j, a, b, tol=tol, c_name=cname)
        cl["outcome_independence"].add(lab, oi.residual, oi.holds)

        pc = _exact_probability(sp, C)
        for n, side, k in (("measurement_dependence_L", "L", i),
                           ("measurement_dependence_R", "R", j)):
            s = ev[event_name(side, k)]
            res = bell.measurement_dependence_residual(model, C, event_name(side, k))
            # identity checked on the exact values of the stored weights
            ps = _exact_probability(sp, s)
            closed = pc * (1 - ps)
            exact = C.issubset(s) and _exact_probability(sp, C & s) - pc * ps == closed
            cl[n].add(dict(lab, setting=event_name(side, k), closed_form=float(closed)),
                      res, abs(res) > tol and exact)

        hl = bell.check_hidden_locality(model, C, i, j, tol=tol, c_name=cname)
        cl["hidden_locality_violated"].add(lab, hl.residual, not hl.holds)
        pi_ = bell.check_parameter_independence(model, C, i, j, a, b, tol=tol, c_name=cname)
        cl["parameter_independence_violated"].add(lab, pi_.residual, not pi_.holds)
        fz = bell.check_factorizability(model, C, i, j, a, b, tol=tol, c_name=cname)
        cl["factorizability_violated"].add(lab, fz.residual, not fz.holds)

        if conditional(sp, la, C) < 1 or conditional(sp, rb, C) < 1:
            nondeterministic = True

    by_block: dict = {}
    for (i, j, a, b) in model.targets:
        by_block.setdefault((i, j), []).append(ev[cause_name(i, j, a, b)])
    for (i, j), cs in sorted(by_block.items()):
        block = ev[event_name("L", i)] & ev[event_name("R", j)] & lam
        union = sp.empty()
        for c in cs:
            union = union | c
        cl["union_containment"].add({"block": f"{i}{j}", "uncovered_mass": float(probability(sp, block - union))},
                                         probability(sp, union - block), union.issubset(block))
        overlap = max((probability(sp, x & y) for n, x in enumerate(cs) for y in cs[n + 1:]),
                      default=0.0)
        disjoint = all((x & y).is_empty() for n, x in enumerate(cs) for y in cs[n + 1:])
        cl["disjoint"].add({"block": f"{i}{j}"}, overlap, disjoint)

    for i in SETTINGS:
        for j in SETTINGS:
            block = ev[event_name("L", i)] & ev[event_name("R", j)] & lam
            for n, C, cname in (("lambda_non_screening", lam, "Lambda"),
                                ("block_lambda_non_screening", block, f"L{i}&R{j}&Lambda")):
                worst = 0.0
                for a in OUTCOMES:
                    for b in OUTCOMES:
                        try:
                            r = bell.check_outcome_independence(model, C, i, j, a, b, tol=tol).residual
                        except NullConditionError:
                            r = 0.0
                        worst = max(worst, float(r))
                cl[n].add({"C": cname, "block": f"{i}{j}"}, worst, worst > tol)

    fid = verify_quantum_fidelity(model, tol=fidelity_tol)
    cl["quantum_fidelity"].add(fid.witness, fid.max_deviation, fid.passed)
    cl["non_determinism_witness"].add({"causes": len(model.targets)}, 0.0, nondeterministic)
    cl["union_containment"].note = "containment may be non-strict; uncovered block mass is reported"
    cl["parameter_independence_violated"].note = "zero by algebra whenever C lies inside L_i & R_j"
    cl["factorizability_violated"].note = "equals the outcome-independence residual when C lies inside L_i & R_j"
    return AuditReport(cl, warnings, tol, margin, dict(model.diagnostics))


def _exact_probability(space: ProbSpace, e: Event) -> Fraction:
    return sum((Fraction(space.weight(n)) for n in e.members), Fraction(0))


def with_events(model: EprModel, **events: Event) -> EprModel:
    """Copy of ``model`` with some events replaced (for mutation studies)."""
    merged = dict(model.events)
    merged.update(events)
    return replace(model, events=merged)
