"""Singlet-state outcome probabilities and the classical "surface" space.

Directions are coplanar angles in degrees.  The public probabilities use
the closed form ``(1 - a b cos(thL - thR)) / 4``; a density-matrix trace
computation is kept alongside as an internal cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .prob_core import (
    FLOAT,
    RATIONAL,
    Event,
    ProbError,
    ProbSpace,
    apply_isomorphism,
    map_event,
    to_fraction,
)

DEFAULT_ANGLES = (0, 120, 240)
OUTCOMES = (1, -1)
SETTINGS = (1, 2, 3)

_EXACT_COS = {0: 1, 60: Fraction(1, 2), 90: 0, 120: Fraction(-1, 2), 180: -1,
              240: Fraction(-1, 2), 270: 0, 300: Fraction(1, 2)}


def outcome(value) -> int:
    """Normalise an outcome label (+1/-1, '+'/'-', 'p'/'m') to +1/-1."""
    if value in (1, "+", "p", "up"):
        return 1
    if value in (-1, "-", "m", "down"):
        return -1
    raise ProbError(f"not a spin outcome: {value!r}")


def outcome_tag(value) -> str:
    return "p" if outcome(value) == 1 else "m"


def direction(angle):
    """Normalise an angle in degrees to [0, 360); exact inputs stay exact."""
    if isinstance(angle, (int, Fraction)):
        return Fraction(angle) % 360
    angle = float(angle)
    if not math.isfinite(angle):
        raise ProbError(f"angle must be finite: {angle!r}")
    return angle % 360.0


def exact_cos(delta):
    """cos of an angle in degrees as a Fraction, or None if it is irrational."""
    if isinstance(delta, float):
        if not delta.is_integer():
            return None
        delta = int(delta)
    d = Fraction(delta) % 360
    if d.denominator != 1:
        return None
    c = _EXACT_COS.get(int(d))
    return None if c is None else Fraction(c)


def singlet_joint(theta_l, theta_r, a, b) -> float:
    """p(a, b | thL, thR) for the spin singlet."""
    delta = math.radians(float(direction(theta_l)) - float(direction(theta_r)))
    return (1.0 - outcome(a) * outcome(b) * math.cos(delta)) / 4.0


def singlet_joint_exact(theta_l, theta_r, a, b):
    """Exact version of :func:`singlet_joint`; None when cos is irrational."""
    c = exact_cos(direction(theta_l) - direction(theta_r))
    if c is None:
        return None
    return (1 - outcome(a) * outcome(b) * c) / 4


def singlet_expectation(theta_l, theta_r) -> float:
    """E = sum_ab a b p(a, b) = -cos(thL - thR)."""
    return -math.cos(math.radians(float(direction(theta_l)) - float(direction(theta_r))))


# -- density-matrix path (internal oracle) ----------------------------------

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_UP = np.array([1, 0], dtype=complex)
_DOWN = np.array([0, 1], dtype=complex)
_PSI = (np.kron(_UP, _DOWN) - np.kron(_DOWN, _UP)) / math.sqrt(2)
_RHO = np.outer(_PSI, _PSI.conj())


def _projector(theta_deg: float, a: int) -> np.ndarray:
    t = math.radians(theta_deg)
    spin = math.sin(t) * _SX + math.cos(t) * _SZ
    return (np.eye(2) + a * spin) / 2


def _trace_joint(theta_l, theta_r, a, b) -> float:
    op = np.kron(_projector(float(theta_l), outcome(a)), _projector(float(theta_r), outcome(b)))
    return float(np.trace(_RHO @ op).real)


# -- settings and surface space ---------------------------------------------

@dataclass(frozen=True)
class SettingDistribution:
    """Independent setting choices on the two wings."""

    left: tuple
    right: tuple

    def __post_init__(self):
        for side, probs in (("left", self.left), ("right", self.right)):
            if len(probs) != 3:
                raise ProbError(f"{side} setting distribution needs 3 entries")
            if any(not p > 0 for p in probs):
                raise ProbError(f"{side} setting probabilities must be positive")
            total = sum(Fraction(p) if not isinstance(p, float) else p for p in probs)
            if abs(float(total) - 1.0) > 1e-12 or (
                    all(not isinstance(p, float) for p in probs) and total != 1):
                raise ProbError(f"{side} setting probabilities sum to {total}, not 1")

    @classmethod
    def uniform(cls) -> "SettingDistribution":
        third = Fraction(1, 3)
        return cls((third,) * 3, (third,) * 3)

    @property
    def exact(self) -> bool:
        return all(not isinstance(p, float) for p in self.left + self.right)

    def to_dict(self) -> dict:
        return {"left": list(self.left), "right": list(self.right)}


def parse_setting_distribution(text: str) -> SettingDistribution:
    """``uniform``, ``p1,p2,p3`` (both wings) or ``p1,p2,p3;q1,q2,q3``."""
    text = text.strip()
    if text == "uniform":
        return SettingDistribution.uniform()
    sides = text.split(";")
    if len(sides) not in (1, 2):
        raise ProbError(f"cannot parse setting distribution {text!r}")
    parsed = [tuple(to_fraction(v.strip()) for v in side.split(",")) for side in sides]
    return SettingDistribution(parsed[0], parsed[-1])


def event_name(side: str, k: int, value=None) -> str:
    """``L1``, ``R2`` for settings; ``L1_p``, ``R2_m`` for outcomes."""
    return f"{side}{k}" if value is None else f"{side}{k}_{outcome_tag(value)}"


def cause_name(i: int, j: int, a, b) -> str:
    return f"C_{i}{j}_{outcome_tag(a)}{outcome_tag(b)}"


def setting_events(space: ProbSpace, tags: Mapping[str, tuple]) -> dict:
    """Setting/outcome events from ``atom -> (i, j, a, b)`` tags.

    Atoms absent from ``tags`` (the null preparation) belong to no setting.
    """
    groups: dict = {"Lambda": set(tags)}
    for i in SETTINGS:
        groups[event_name("L", i)] = set()
        groups[event_name("R", i)] = set()
        for v in OUTCOMES:
            groups[event_name("L", i, v)] = set()
            groups[event_name("R", i, v)] = set()
    for name, (i, j, a, b) in tags.items():
        groups[event_name("L", i)].add(name)
        groups[event_name("R", j)].add(name)
        groups[event_name("L", i, a)].add(name)
        groups[event_name("R", j, b)].add(name)
    return {k: space.event(v) for k, v in groups.items()}


def _resolve_mode(mode, exact_ok: bool) -> str:
    if mode is None:
        return RATIONAL if exact_ok else FLOAT
    if mode == RATIONAL and not exact_ok:
        raise ProbError("rational mode needs angle differences with rational cosines "
                        "and rational setting probabilities")
    return mode


def build_surface_space(left_angles: Sequence = DEFAULT_ANGLES, right_angles: Sequence | None = None,
                        pi: SettingDistribution | None = None, null_mass=0, mode: str | None = None):
    """Space of (setting pair, outcome pair) atoms plus a null-preparation atom.

    Returns ``(space, events)``.  Conditional on ``L_i & R_j`` the outcome
    statistics are exactly the singlet ones.  With ``null_mass == 0`` the
    null atom is omitted and ``Lambda`` is the sure event.
    """
    right_angles = left_angles if right_angles is None else right_angles
    if len(left_angles) != 3 or len(right_angles) != 3:
        raise ProbError("three directions per wing are required")
    pi = pi or SettingDistribution.uniform()
    if not isinstance(pi, SettingDistribution):
        raise ProbError("pi must be a SettingDistribution")
    nm = null_mass if isinstance(null_mass, float) else to_fraction(null_mass)
    if not 0 <= nm < 1:
        raise ProbError(f"null_mass must lie in [0, 1), got {null_mass}")
    joints = {}
    exact_ok = pi.exact and not isinstance(nm, float)
    for i, tl in enumerate(left_angles, 1):
        for j, tr in enumerate(right_angles, 1):
            for a in OUTCOMES:
                for b in OUTCOMES:
                    q = singlet_joint_exact(tl, tr, a, b)
                    if q is None:
                        exact_ok = False
                        q = singlet_joint(tl, tr, a, b)
                    joints[i, j, a, b] = q
    mode = _resolve_mode(mode, exact_ok)
    conv = Fraction if mode == RATIONAL else float
    keep = conv(1) - conv(nm)
    atoms, tags = [], {}
    for (i, j, a, b), q in joints.items():
        name = f"s{i}{j}_{outcome_tag(a)}{outcome_tag(b)}"
        atoms.append((name, keep * conv(pi.left[i - 1]) * conv(pi.right[j - 1]) * conv(q)))
        tags[name] = (i, j, a, b)
    if nm > 0:
        atoms.append(("null", conv(nm)))
    if mode == FLOAT:
        # absorb rounding so the float space normalises
        total = math.fsum(w for _, w in atoms)
        atoms = [(n, w / total) for n, w in atoms]
    space = ProbSpace(atoms, mode=mode)
    return space, setting_events(space, tags)


def joint_table(left_angles: Sequence = DEFAULT_ANGLES, right_angles: Sequence | None = None,
                exact: bool = False) -> list:
    """Rows ``{i, j, theta_L, theta_R, a, b, p}`` for all 36 combinations."""
    right_angles = left_angles if right_angles is None else right_angles
    rows = []
    for i, tl in enumerate(left_angles, 1):
        for j, tr in enumerate(right_angles, 1):
            for a in OUTCOMES:
                for b in OUTCOMES:
                    p = singlet_joint_exact(tl, tr, a, b) if exact else None
                    rows.append({"i": i, "j": j, "theta_L": tl, "theta_R": tr,
                                 "a": "+" if a > 0 else "-", "b": "+" if b > 0 else "-",
                                 "p": p if p is not None else singlet_joint(tl, tr, a, b)})
    return rows


# -- flashing-lights view ----------------------------------------------------

def panel_view(space: ProbSpace, events: Mapping[str, Event]):
    """Relabel outcome atoms as panel light flashes.

    Left outcomes drive panel A, right outcomes panel B; spin-up is the
    green light of the row numbered by the setting, spin-down the red one.
    Returns ``(panel_space, panel_events, relabel)``; correlations of
    mapped events equal those of the originals.
    """
    colour = {"p": "green", "m": "red"}
    relabel = {}
    for name in space.names:
        if name.startswith("s") and len(name) == 6 and name[3] == "_":
            i, j, a, b = name[1], name[2], name[4], name[5]
            relabel[name] = f"A{i}{colour[a]}_B{j}{colour[b]}"
        else:
            relabel[name] = f"dark_{name}"
    panel = apply_isomorphism(space, relabel)
    rename = {}
    for key in events:
        if key[0] in "LR" and "_" in key:
            side, rest = key[0], key[1:]
            k, v = rest.split("_")
            rename[key] = f"{'A' if side == 'L' else 'B'}_row{k}_{colour[v]}"
        elif key[0] in "LR":
            rename[key] = f"{'A' if key[0] == 'L' else 'B'}_row{key[1:]}"
        else:
            rename[key] = key
    panel_events = {rename[k]: map_event(e, relabel, panel) for k, e in events.items()}
    return panel, panel_events, relabel
