"""Reichenbachian common causes: checking, exhaustive search, completion.

A common cause C of correlated A, B must screen off the correlation on both
C and not-C, and be statistically relevant to each relatum.  For negative
correlations the relevance inequality for B is reversed (C raises A and
lowers B); :attr:`CriterionReport.correlation_sign` records which
convention was applied.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .prob_core import (
    FLOAT,
    RATIONAL,
    Embedding,
    Event,
    ProbError,
    ProbSpace,
    correlation,
    extend,
    probability,
)
from .solver import DEFAULT_ITERATIONS, DEFAULT_STARTS, multistart

DEFAULT_MARGIN = 1e-6
MAX_SEARCH_ATOMS = 20

POSITIVE, NEGATIVE, ZERO = "positive", "negative", "zero"


class DegenerateCauseError(ProbError):
    """Candidate cause has probability 0 or 1."""


class SearchSizeError(ProbError):
    """Space too large for exhaustive enumeration."""


class InfeasibleError(RuntimeError):
    """The feasibility search ran out of budget; carries the best attempt."""

    def __init__(self, message: str, best_residual: float, best_point=None, report=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best_point = best_point
        self.report = report


def default_tol(space: ProbSpace, tol=None):
    if tol is not None:
        return tol
    return Fraction(0) if space.mode == RATIONAL else 1e-9


def default_margin(space: ProbSpace, margin=None):
    if margin is not None:
        return margin
    return Fraction(0) if space.mode == RATIONAL else DEFAULT_MARGIN


def sign_of(value) -> str:
    if value > 0:
        return POSITIVE
    if value < 0:
        return NEGATIVE
    return ZERO


@dataclass(frozen=True)
class CriterionReport:
    screen_on_C: object
    screen_on_notC: object
    relevance_A: object
    relevance_B: object
    correlation_sign: str
    verdict: dict
    tol: object
    margin: object

    @property
    def passed(self) -> bool:
        return all(self.verdict.values())

    @property
    def max_residual(self) -> float:
        return max(abs(float(self.screen_on_C)), abs(float(self.screen_on_notC)))

    def to_dict(self) -> dict:
        return {
            "screen_on_C": self.screen_on_C,
            "screen_on_notC": self.screen_on_notC,
            "relevance_A": self.relevance_A,
            "relevance_B": self.relevance_B,
            "correlation_sign": self.correlation_sign,
            "verdict": dict(self.verdict),
            "passed": self.passed,
            "tol": self.tol,
            "margin": self.margin,
        }


def check_common_cause(space: ProbSpace, a: Event, b: Event, c: Event,
                       tol=None, margin=None) -> CriterionReport:
    """Evaluate the four common-cause clauses for ``c`` against ``(a, b)``.

    Screening residuals use the cleared-denominator form
    ``p(abc) p(c) - p(ac) p(bc)``; relevance margins are differences of
    conditionals.  Raises :class:`DegenerateCauseError` if ``p(c)`` is 0 or 1.
    """
    tol = default_tol(space, tol)
    margin = default_margin(space, margin)
    nc = ~c
    pc = probability(space, c)
    pnc = probability(space, nc)
    if pc == 0 or pnc == 0:
        raise DegenerateCauseError(f"candidate cause has probability {pc}")
    ab = a & b
    screen_c = (probability(space, ab & c) * pc
                - probability(space, a & c) * probability(space, b & c))
    screen_nc = (probability(space, ab & nc) * pnc
                 - probability(space, a & nc) * probability(space, b & nc))
    rel_a = probability(space, a & c) / pc - probability(space, a & nc) / pnc
    rel_b = probability(space, b & c) / pc - probability(space, b & nc) / pnc
    sign = sign_of(correlation(space, a, b))
    orient = -1 if sign == NEGATIVE else 1
    verdict = {
        "screen_C": abs(screen_c) <= tol,
        "screen_notC": abs(screen_nc) <= tol,
        "relevance_A": rel_a > margin,
        "relevance_B": orient * rel_b > margin,
    }
    return CriterionReport(screen_c, screen_nc, rel_a, rel_b, sign, verdict, tol, margin)


# -- exhaustive search -------------------------------------------------------

def canonical_subsets(n: int):
    """All index tuples of ``range(n)``: by cardinality, then lexicographic."""
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


def _integer_weights(space: ProbSpace):
    fr = [Fraction(w) for w in space.weights]
    den = math.lcm(*(f.denominator for f in fr))
    return [f.numerator * (den // f.denominator) for f in fr], den


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def find_common_cause(space: ProbSpace, a: Event, b: Event, tol=None, margin=None):
    """First event (canonical order) that is a common cause of ``a``, ``b``.

    Candidates with probability 0 or 1 are skipped.  The scan is vectorised
    per cardinality; rational spaces are evaluated in exact integer
    arithmetic, float spaces in float64.  Returns None when nothing passes.
    """
    n = len(space)
    if n > MAX_SEARCH_ATOMS:
        raise SearchSizeError(f"{n} atoms exceeds exhaustive-search limit {MAX_SEARCH_ATOMS}")
    space.check(a), space.check(b)
    tol = default_tol(space, tol)
    margin = default_margin(space, margin)
    in_a = np.array([nm in a.members for nm in space.names])
    in_b = np.array([nm in b.members for nm in space.names])
    negative = correlation(space, a, b) < 0

    if space.mode == RATIONAL:
        ints, den = _integer_weights(space)
        big = den.bit_length() * 2 + 8 > 62
        w = np.array(ints, dtype=object if big else np.int64)
        tol_f, margin_f = _as_fraction(tol), _as_fraction(margin)
        total = den
    else:
        w = np.asarray(space.weights, dtype=float)
        total = 1.0
    wa, wb, wab = w * in_a, w * in_b, w * (in_a & in_b)
    pa, pb, pab = wa.sum(), wb.sum(), wab.sum()

    for k in range(1, n):
        combos = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
        c = w[combos].sum(axis=1)
        ca, cb, cab = wa[combos].sum(axis=1), wb[combos].sum(axis=1), wab[combos].sum(axis=1)
        nc, nca, ncb, ncab = total - c, pa - ca, pb - cb, pab - cab
        ok = (c > 0) & (nc > 0)
        e2 = cab * c - ca * cb
        e3 = ncab * nc - nca * ncb
        rel_a = ca * nc - nca * c   # sign of p(a|c) - p(a|~c), scaled by c * nc
        rel_b = cb * nc - ncb * c
        if negative:
            rel_b = -rel_b
        if space.mode == RATIONAL:
            scale = den * den
            ok &= _abs(e2) * tol_f.denominator <= tol_f.numerator * scale
            ok &= _abs(e3) * tol_f.denominator <= tol_f.numerator * scale
            # margin compares differences of conditionals: rel / (c * nc)
            ok &= rel_a * margin_f.denominator > margin_f.numerator * c * nc
            ok &= rel_b * margin_f.denominator > margin_f.numerator * c * nc
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                denom = c * nc
                ok &= np.abs(e2) <= tol
                ok &= np.abs(e3) <= tol
                ok &= rel_a / denom > margin
                ok &= rel_b / denom > margin
        hit = np.flatnonzero(ok.astype(bool))
        if hit.size:
            return space.event(space.names[i] for i in combos[hit[0]])
    return None


def _abs(x):
    return np.abs(x) if x.dtype != object else np.array([abs(v) for v in x], dtype=object)


# -- completability ----------------------------------------------------------

@dataclass(frozen=True)
class CompletabilityResult:
    extended_space: ProbSpace
    common_cause: Event
    embedding: Embedding
    residuals: CriterionReport
    fractions: tuple
    solver: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fractions": {"t11": self.fractions[0], "t10": self.fractions[1],
                          "t01": self.fractions[2], "t00": self.fractions[3]},
            "residuals": self.residuals.to_dict(),
            "solver": dict(self.solver),
        }


def cell_events(space: ProbSpace, a: Event, b: Event) -> tuple:
    """The four cells a&b, a&~b, ~a&b, ~a&~b."""
    return a & b, a & ~b, ~a & b, ~a & ~b


def _screening_problem(masses: Sequence[float], orient: int, target: float):
    m = np.asarray(masses, dtype=float)
    eps = 1e-300

    def parts(t):
        inc = t * m
        out = (1.0 - t) * m
        c, nc = inc.sum(), out.sum()
        return inc, out, c, nc

    def residuals(t):
        inc, out, c, nc = parts(t)
        c_, nc_ = max(c, eps), max(nc, eps)
        r1 = (inc[0] * c - (inc[0] + inc[1]) * (inc[0] + inc[2])) / (c_ * c_)
        r2 = (out[0] * nc - (out[0] + out[1]) * (out[0] + out[2])) / (nc_ * nc_)
        ra = (inc[0] + inc[1]) / c_ - (out[0] + out[1]) / nc_
        rb = orient * ((inc[0] + inc[2]) / c_ - (out[0] + out[2]) / nc_)
        return np.array([r1, r2, max(0.0, target - ra), max(0.0, target - rb)])

    return parts, residuals


def complete_with_common_cause(space: ProbSpace, a: Event, b: Event, tol: float = 1e-9,
                               margin=None, seed: int = 0, *,
                               starts: int = DEFAULT_STARTS,
                               max_iter: int = DEFAULT_ITERATIONS,
                               workers: int = 1) -> CompletabilityResult:
    """Extend ``space`` so that it contains a common cause of ``a`` and ``b``.

    Every atom of cell ``xy`` (x, y in {a, ~a} x {b, ~b}) is split into an
    in-cause part carrying fraction ``t_xy`` of its mass and an out-of-cause
    remainder.  The four fractions are found by seeded multi-start search;
    the result is re-verified with :func:`check_common_cause` on the
    extended space before it is returned.
    """
    margin = default_margin(space, margin)
    corr = correlation(space, a, b)
    if corr == 0:
        raise ProbError("events are uncorrelated; there is nothing to explain")
    orient = -1 if corr < 0 else 1
    cells = cell_events(space, a, b)
    masses = [float(probability(space, e)) for e in cells]
    target = max(10 * float(margin), 1e-4)
    parts, residuals = _screening_problem(masses, orient, target)
    m_margin = float(margin)

    def score(t):
        inc, out, c, nc = parts(t)
        if c <= 0 or nc <= 0:
            return math.inf
        e2 = inc[0] * c - (inc[0] + inc[1]) * (inc[0] + inc[2])
        e3 = out[0] * nc - (out[0] + out[1]) * (out[0] + out[2])
        ra = (inc[0] + inc[1]) / c - (out[0] + out[1]) / nc
        rb = orient * ((inc[0] + inc[2]) / c - (out[0] + out[2]) / nc)
        short = max(0.0, 2 * m_margin - ra) + max(0.0, 2 * m_margin - rb)
        return max(abs(e2), abs(e3)) + short

    result = multistart(residuals, score, 4, seed=seed, tol=float(tol) / 4,
                        starts=starts, max_iter=max_iter, workers=workers)
    t = result.x
    diag = {"starts_used": result.starts_used, "best_start": result.start_index,
            "objective": result.score, "seed": seed}
    if not result.success:
        raise InfeasibleError(f"no common cause found within budget (best residual {result.score:.3g})",
                              result.score, tuple(float(v) for v in t))

    fracs = [Fraction(float(v)) for v in t] if space.mode == RATIONAL else [float(v) for v in t]
    one = Fraction(1) if space.mode == RATIONAL else 1.0
    splits = {}
    for frac, cell in zip(fracs, cells):
        for name in cell.members:
            splits[name] = (frac, one - frac)
    ext, emb = extend(space, splits)
    cause = ext.event(f"{n}#0" for n in splits)
    report = check_common_cause(ext, emb(a), emb(b), cause, tol=tol, margin=margin)
    if not report.passed:
        raise InfeasibleError("solver output failed the independent check",
                              report.max_residual, tuple(float(v) for v in t), report)
    return CompletabilityResult(ext, cause, emb, report, tuple(fracs), diag)


@dataclass(frozen=True)
class CommonCommonReport:
    per_pair: tuple
    verdict: bool

    def to_dict(self) -> dict:
        return {"verdict": self.verdict,
                "per_pair": [r.to_dict() for r in self.per_pair]}


def check_common_common_cause(space: ProbSpace, pairs: Sequence, c: Event,
                              tol=None, margin=None) -> CommonCommonReport:
    """One event against several correlations; passes only if it screens all."""
    reports = tuple(check_common_cause(space, a, b, c, tol=tol, margin=margin) for a, b in pairs)
    return CommonCommonReport(reports, all(r.passed for r in reports))
