"""Locality-type conditions on setting/outcome models and Bell-type inequalities.

A *setting model* is any object with a ``space`` and an ``events``
dictionary naming ``L1..L3``, ``R1..R3`` and outcome events ``L1_p``,
``R2_m`` and so on (see :func:`cclab.quantum.setting_events`).  Every
checker reports a residual magnitude and the worst instance, never just a
boolean.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .prob_core import Event, ProbError, ProbSpace, conditional, probability
from .quantum import (
    OUTCOMES,
    SETTINGS,
    direction,
    event_name,
    outcome,
    outcome_tag,
    setting_events,
    singlet_expectation,
)

HOLDS, VIOLATED = "holds", "violated"


class CoverageError(ProbError):
    """A requested setting pair is not available in the model or sample."""


@dataclass(frozen=True)
class SettingModel:
    space: ProbSpace
    events: Mapping[str, Event]

    def ev(self, name: str) -> Event:
        try:
            return self.events[name]
        except KeyError:
            raise ProbError(f"model has no event {name!r}") from None


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    residual: object
    verdict: str
    witness: dict
    instances: tuple = field(default=(), repr=False)
    tol: object = 0

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_dict(self) -> dict:
        return {"condition": self.condition, "residual": self.residual, "verdict": self.verdict,
                "witness": dict(self.witness), "tol": self.tol,
                "instances": [{"instance": dict(w), "residual": r} for w, r in self.instances]}


def _report(condition: str, instances: list, tol) -> ConditionReport:
    """Collapse (witness, residual) pairs into a report on the worst one."""
    worst_w, worst = max(instances, key=lambda wr: abs(wr[1]))
    worst = abs(worst)
    verdict = HOLDS if worst <= tol else VIOLATED
    return ConditionReport(condition, worst, verdict, worst_w,
                           tuple((w, abs(r)) for w, r in instances), tol)


def _events(model, i, j, a, b):
    return (model.ev(event_name("L", i)), model.ev(event_name("R", j)),
            model.ev(event_name("L", i, a)), model.ev(event_name("R", j, b)))


def _label(c_name, **kw) -> dict:
    w = {"C": c_name}
    for k, v in kw.items():
        w[k] = outcome_tag(v) if k in ("a", "b") else v
    return w


def check_factorizability(model, C: Event, i: int, j: int, a, b, tol=0, c_name: str = "C"):
    """p(La Rb | Li Rj C) - p(La | Li C) p(Rb | Rj C)."""
    li, rj, la, rb = _events(model, i, j, a, b)
    sp = model.space
    joint = conditional(sp, la & rb, li & rj & C)
    res = joint - conditional(sp, la, li & C) * conditional(sp, rb, rj & C)
    return _report("factorizability", [(_label(c_name, i=i, j=j, a=a, b=b), res)], tol)


def check_outcome_independence(model, C: Event, i: int, j: int, a, b, tol=0, c_name: str = "C"):
    """p(La Rb | Li Rj C) - p(La | Li Rj C) p(Rb | Li Rj C)."""
    li, rj, la, rb = _events(model, i, j, a, b)
    sp = model.space
    cond = li & rj & C
    res = (conditional(sp, la & rb, cond)
           - conditional(sp, la, cond) * conditional(sp, rb, cond))
    return _report("outcome_independence", [(_label(c_name, i=i, j=j, a=a, b=b), res)], tol)


def check_parameter_independence(model, C: Event, i: int, j: int, a, b, tol=0,
                                 c_name: str = "C"):
    """Dependence of each wing's outcome on the distant setting, given C."""
    li, rj, la, rb = _events(model, i, j, a, b)
    sp = model.space
    both = li & rj & C
    left = conditional(sp, la, both) - conditional(sp, la, li & C)
    right = conditional(sp, rb, both) - conditional(sp, rb, rj & C)
    return _report("parameter_independence", [
        (_label(c_name, i=i, j=j, a=a, wing="L"), left),
        (_label(c_name, i=i, j=j, b=b, wing="R"), right),
    ], tol)


def check_measurement_independence(model, C: Event, tol=0, c_name: str = "C"):
    """|p(C Li) - p(C) p(Li)| and |p(C Rj) - p(C) p(Rj)| for every setting."""
    sp = model.space
    pc = probability(sp, C)
    instances = []
    for side in "LR":
        for k in SETTINGS:
            s = model.ev(event_name(side, k))
            instances.append(({"C": c_name, "setting": event_name(side, k)},
                              probability(sp, C & s) - pc * probability(sp, s)))
    return _report("measurement_independence", instances, tol)


def measurement_dependence_residual(model, C: Event, setting: str):
    """Signed p(C & S) - p(C) p(S) for one named setting event."""
    sp = model.space
    s = model.ev(setting)
    return probability(sp, C & s) - probability(sp, C) * probability(sp, s)


def check_hidden_locality(model, C: Event, i: int, j: int, tol=0, c_name: str = "C"):
    """|p(C Li Rj) - p(C) p(Li Rj)|."""
    sp = model.space
    both = model.ev(event_name("L", i)) & model.ev(event_name("R", j))
    res = probability(sp, C & both) - probability(sp, C) * probability(sp, both)
    return _report("hidden_locality", [({"C": c_name, "i": i, "j": j}, res)], tol)


# -- inequalities -------------------------------------------------------------

@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs: float
    value: float
    violated: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "value": self.value, "violated": self.violated}


def chsh(E) -> float:
    """S = E11 + E12 + E21 - E22 for a 2x2 table of correlators."""
    E = np.asarray(E, dtype=float)
    if E.shape != (2, 2):
        raise ProbError(f"expected a 2x2 correlator table, got shape {E.shape}")
    if np.any(np.abs(E) > 1 + 1e-12) or not np.all(np.isfinite(E)):
        raise ProbError("correlators must lie in [-1, 1]")
    return float(E[0, 0] + E[0, 1] + E[1, 0] - E[1, 1])


def chsh_table(a1, a2, b1, b2, expectation: Callable = singlet_expectation) -> np.ndarray:
    """Correlator table for left directions (a1, a2) and right (b1, b2).

    Rows are ordered (a2, a1) so that :func:`chsh` subtracts E(a1, b2),
    the textbook arrangement S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
    """
    return np.array([[expectation(a2, b1), expectation(a2, b2)],
                     [expectation(a1, b1), expectation(a1, b2)]])


def chsh_from_angles(a1, a2, b1, b2, expectation: Callable = singlet_expectation,
                     tol: float = 1e-12) -> InequalityResult:
    s = chsh(chsh_table(a1, a2, b1, b2, expectation))
    return InequalityResult(abs(s), 2.0, s, abs(s) > 2.0 + tol)


def wigner(joint: Callable, theta1, theta2, theta3, tol=0) -> InequalityResult:
    """p(++|t1,t3) <= p(++|t1,t2) + p(++|t2,t3); ``joint(tL, tR, a, b)``."""
    if len({float(direction(t)) for t in (theta1, theta2, theta3)}) != 3:
        raise ProbError("Wigner inequality needs three distinct directions")
    lhs = joint(theta1, theta3, 1, 1)
    rhs = joint(theta1, theta2, 1, 1) + joint(theta2, theta3, 1, 1)
    return InequalityResult(lhs, rhs, lhs - rhs, lhs > rhs + tol)


# -- model-backed accessors -------------------------------------------------

def resolve_setting(angles: Sequence, theta, value: int):
    """Index of ``theta`` among ``angles`` and the outcome to read there.

    A direction antipodal to an available one is read with the outcome
    flipped, since spin-up along ``theta + 180`` is spin-down along ``theta``.
    """
    t = float(direction(theta))
    for k, ang in enumerate(angles, 1):
        d = (float(direction(ang)) - t) % 360.0
        if min(d, 360.0 - d) < 1e-9:
            return k, value
        if abs(d - 180.0) < 1e-9:
            return k, -value
    raise CoverageError(f"direction {theta} is not available (settings {list(angles)})")


def model_conditional(model, i: int, j: int, a, b):
    li, rj, la, rb = _events(model, i, j, a, b)
    return conditional(model.space, la & rb, li & rj)


def model_joint(model, left_angles: Sequence, right_angles: Sequence | None = None) -> Callable:
    """``joint(tL, tR, a, b)`` read off the model's conditional statistics."""
    right_angles = left_angles if right_angles is None else right_angles

    def joint(tl, tr, a, b):
        i, a2 = resolve_setting(left_angles, tl, outcome(a))
        j, b2 = resolve_setting(right_angles, tr, outcome(b))
        return model_conditional(model, i, j, a2, b2)

    return joint


# -- local deterministic strategies ------------------------------------------

def deterministic_strategies(settings_per_wing: int = 2) -> list:
    """All outcome assignments (A_1..A_n, B_1..B_n), each entry +1/-1."""
    return list(itertools.product(OUTCOMES, repeat=2 * settings_per_wing))


def local_chsh(weights: Sequence[float]) -> float:
    """CHSH value of a mixture over the 16 two-setting deterministic strategies."""
    strategies = deterministic_strategies(2)
    if len(weights) != len(strategies):
        raise ProbError("need one weight per deterministic strategy (16)")
    E = np.zeros((2, 2))
    for w, (a1, a2, b1, b2) in zip(weights, strategies):
        A, B = (a1, a2), (b1, b2)
        for x in range(2):
            for y in range(2):
                E[x, y] += w * A[x] * B[y]
    return chsh(E)


def local_strategy_model(weights: Sequence, pi_left=None, pi_right=None) -> SettingModel:
    """Two-setting local hidden-variable model as an explicit finite space.

    Atoms are ``(strategy, i, j)``; strategy ``k`` is exposed as event
    ``H<k>``.  Settings are chosen independently of the strategy.
    """
    strategies = deterministic_strategies(2)
    if len(weights) != len(strategies):
        raise ProbError("need one weight per deterministic strategy (16)")
    pl = pi_left or (Fraction(1, 2), Fraction(1, 2))
    pr = pi_right or (Fraction(1, 2), Fraction(1, 2))
    exact = not any(isinstance(x, float) for x in list(weights) + list(pl) + list(pr))
    atoms, tags, hidden = [], {}, {}
    for k, (w, (a1, a2, b1, b2)) in enumerate(zip(weights, strategies)):
        A, B = (a1, a2), (b1, b2)
        for i in (1, 2):
            for j in (1, 2):
                name = f"h{k}_s{i}{j}"
                atoms.append((name, w * pl[i - 1] * pr[j - 1]))
                tags[name] = (i, j, A[i - 1], B[j - 1])
                hidden.setdefault(f"H{k}", set()).add(name)
    space = ProbSpace(atoms, mode="rational" if exact else "float")
    events = setting_events(space, tags)
    events.update({k: space.event(v) for k, v in hidden.items()})
    return SettingModel(space, events)


def anticorrelated_joint(weights: Sequence, angles: Sequence) -> Callable:
    """Wigner-style joint for a mixture of 8 perfectly anticorrelated assignments.

    Assignment ``s`` fixes the left outcome ``s[k]`` along ``angles[k]``;
    the right outcome along the same direction is ``-s[k]``.
    """
    assignments = list(itertools.product(OUTCOMES, repeat=3))
    if len(weights) != len(assignments):
        raise ProbError("need one weight per sign assignment (8)")

    def joint(tl, tr, a, b):
        i, a2 = resolve_setting(angles, tl, outcome(a))
        j, b2 = resolve_setting(angles, tr, outcome(b))
        return sum(w for w, s in zip(weights, assignments)
                   if s[i - 1] == a2 and -s[j - 1] == b2)

    return joint


def product_model(left_probs: Sequence = None, right_probs: Sequence = None,
                  hidden: int = 2) -> SettingModel:
    """Toy model whose outcomes factorize given a hidden index ``H<k>``.

    Hidden value ``k`` fixes independent spin-up probabilities per setting
    on each wing, taken from ``left_probs[k][i-1]``, ``right_probs[k][j-1]``.
    Settings and hidden value are uniform and mutually independent.
    """
    third = Fraction(1, 3)
    left_probs = left_probs or [(Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)),
                                (Fraction(2, 3), Fraction(1, 5), Fraction(1, 2))][:hidden]
    right_probs = right_probs or [(Fraction(1, 3), Fraction(3, 5), Fraction(1, 8)),
                                  (Fraction(1, 2), Fraction(7, 8), Fraction(1, 4))][:hidden]
    h = Fraction(1, len(left_probs))
    atoms, tags, hidden_ev = [], {}, {}
    for k, (lp, rp) in enumerate(zip(left_probs, right_probs)):
        for i in SETTINGS:
            for j in SETTINGS:
                for a in OUTCOMES:
                    for b in OUTCOMES:
                        pa = lp[i - 1] if a == 1 else 1 - lp[i - 1]
                        pb = rp[j - 1] if b == 1 else 1 - rp[j - 1]
                        name = f"h{k}_s{i}{j}_{outcome_tag(a)}{outcome_tag(b)}"
                        atoms.append((name, h * third * third * pa * pb))
                        tags[name] = (i, j, a, b)
                        hidden_ev.setdefault(f"H{k}", set()).add(name)
    space = ProbSpace(atoms)
    events = setting_events(space, tags)
    events.update({k: space.event(v) for k, v in hidden_ev.items()})
    return SettingModel(space, events)


def tsirelson() -> float:
    return 2.0 * math.sqrt(2.0)
