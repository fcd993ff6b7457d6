"""Finite probability spaces, events, correlation, extensions and relabelings.

A space is an ordered list of named atoms carrying non-negative mass.  Two
numeric modes are supported: ``"rational"`` (weights are
:class:`fractions.Fraction`, every comparison exact) and ``"float"``.
Events are sets of atom names bound to the atom universe of their host
space, so mixing events of different spaces is caught early.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Mapping, Sequence

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

FLOAT_NORM_TOL = 1e-12
DEFAULT_FLOAT_TOL = 1e-9


class ProbError(ValueError):
    """Invalid input to a probability operation."""


class NullConditionError(ProbError):
    """Conditioning on an event of probability zero."""


def to_fraction(value) -> Fraction:
    """Parse an ``"n/d"`` string, int, Fraction or float into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ProbError(f"not a probability: {value!r}")
    if isinstance(value, (int, float, str)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ProbError(f"cannot parse rational {value!r}") from exc
    raise ProbError(f"cannot parse rational {value!r}")


@dataclass(frozen=True)
class Atom:
    name: str
    weight: Real


@dataclass(frozen=True, eq=False)
class Event:
    """A set of atom names, tied to the atom universe of its host space."""

    members: frozenset
    universe: frozenset = field(repr=False)

    def _same_space(self, other: "Event") -> None:
        if not isinstance(other, Event):
            raise ProbError(f"expected Event, got {type(other).__name__}")
        if self.universe is not other.universe and self.universe != other.universe:
            raise ProbError("events belong to different spaces")

    def __and__(self, other: "Event") -> "Event":
        self._same_space(other)
        return Event(self.members & other.members, self.universe)

    def __or__(self, other: "Event") -> "Event":
        self._same_space(other)
        return Event(self.members | other.members, self.universe)

    def __invert__(self) -> "Event":
        return Event(self.universe - self.members, self.universe)

    def __sub__(self, other: "Event") -> "Event":
        self._same_space(other)
        return Event(self.members - other.members, self.universe)

    def __le__(self, other: "Event") -> bool:
        return self.issubset(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Event):
            return NotImplemented
        return self.members == other.members and self.universe == other.universe

    def __hash__(self) -> int:
        return hash(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def issubset(self, other: "Event") -> bool:
        self._same_space(other)
        return self.members <= other.members

    def is_empty(self) -> bool:
        return not self.members


class ProbSpace:
    """Finite measure over named atoms.

    Weights are kept in the order given; that order is the canonical atom
    order used by enumeration, sampling and summation.
    """

    __slots__ = ("_names", "_weights", "_index", "_universe", "mode")

    def __init__(self, atoms: Iterable, mode: str = RATIONAL):
        if mode not in MODES:
            raise ProbError(f"unknown mode {mode!r}")
        names, weights = [], []
        for atom in atoms:
            if isinstance(atom, Atom):
                name, w = atom.name, atom.weight
            else:
                name, w = atom
            if not isinstance(name, str) or not name:
                raise ProbError(f"atom name must be a non-empty string: {name!r}")
            w = to_fraction(w) if mode == RATIONAL else float(w)
            if not w >= 0:
                raise ProbError(f"negative or NaN weight for atom {name!r}")
            names.append(name)
            weights.append(w)
        if not names:
            raise ProbError("a probability space needs at least one atom")
        if len(set(names)) != len(names):
            raise ProbError("atom names must be unique")
        total = math.fsum(weights) if mode == FLOAT else sum(weights, Fraction(0))
        if mode == RATIONAL and total != 1:
            raise ProbError(f"weights sum to {total}, not 1")
        if mode == FLOAT and abs(total - 1.0) > FLOAT_NORM_TOL:
            raise ProbError(f"weights sum to {total!r}, not 1 within {FLOAT_NORM_TOL}")
        self._names = tuple(names)
        self._weights = tuple(weights)
        self._index = {n: k for k, n in enumerate(names)}
        self._universe = frozenset(names)
        self.mode = mode

    @classmethod
    def from_weights(cls, weights: Mapping[str, Real], mode: str = RATIONAL) -> "ProbSpace":
        return cls(weights.items(), mode=mode)

    @property
    def names(self) -> tuple:
        return self._names

    @property
    def weights(self) -> tuple:
        return self._weights

    @property
    def atoms(self) -> tuple:
        return tuple(Atom(n, w) for n, w in zip(self._names, self._weights))

    @property
    def universe(self) -> frozenset:
        return self._universe

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbSpace):
            return NotImplemented
        return (self.mode == other.mode and self._names == other._names
                and self._weights == other._weights)

    def __hash__(self) -> int:
        return hash((self.mode, self._names, self._weights))

    def __repr__(self) -> str:
        return f"ProbSpace({len(self)} atoms, mode={self.mode!r})"

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ProbError(f"unknown atom {name!r}") from None

    def weight(self, name: str):
        return self._weights[self.index(name)]

    @property
    def zero(self):
        return Fraction(0) if self.mode == RATIONAL else 0.0

    @property
    def one(self):
        return Fraction(1) if self.mode == RATIONAL else 1.0

    def event(self, members: Iterable[str] = ()) -> Event:
        members = frozenset(members)
        unknown = members - self._universe
        if unknown:
            raise ProbError(f"unknown atom(s) {sorted(unknown)}")
        return Event(members, self._universe)

    def empty(self) -> Event:
        return Event(frozenset(), self._universe)

    def sure(self) -> Event:
        return Event(self._universe, self._universe)

    def check(self, e: Event) -> Event:
        if not isinstance(e, Event):
            raise ProbError(f"expected Event, got {type(e).__name__}")
        if e.universe is not self._universe and not e.members <= self._universe:
            raise ProbError(f"event has atoms outside this space: {sorted(e.members - self._universe)}")
        return e


def probability(space: ProbSpace, e: Event):
    """Measure of an event: sum of member weights in canonical atom order."""
    space.check(e)
    idx = sorted(space.index(n) for n in e.members)
    w = space.weights
    if space.mode == FLOAT:
        return math.fsum(w[k] for k in idx)
    return sum((w[k] for k in idx), Fraction(0))


def conditional(space: ProbSpace, a: Event, b: Event):
    """p(a | b) = p(a and b) / p(b); raises on a null condition."""
    pb = probability(space, b)
    if pb == 0:
        raise NullConditionError("conditioning event has probability zero")
    return probability(space, a & b) / pb


def correlation(space: ProbSpace, a: Event, b: Event):
    """p(a and b) - p(a) p(b)."""
    return probability(space, a & b) - probability(space, a) * probability(space, b)


@dataclass(frozen=True)
class Embedding:
    """Maps atoms of a space onto disjoint successor sets in an extension."""

    atom_map: Mapping[str, tuple]
    target: ProbSpace

    def __call__(self, e: Event) -> Event:
        return self.embed(e)

    def embed(self, e: Event) -> Event:
        out = set()
        for name in e.members:
            try:
                out.update(self.atom_map[name])
            except KeyError:
                raise ProbError(f"atom {name!r} is not in the embedded space") from None
        return self.target.event(out)


def extend(space: ProbSpace, splits: Mapping[str, Sequence]) -> tuple:
    """Split atoms into successors carrying ``fraction * weight``.

    Atoms absent from ``splits`` are carried over unchanged.  A split of
    length one keeps the atom name; longer splits name successors
    ``<atom>#<k>``.  Returns ``(extended_space, embedding)``.
    """
    for name in splits:
        space.index(name)
    rational = space.mode == RATIONAL
    atoms, atom_map = [], {}
    for name, w in zip(space.names, space.weights):
        fracs = splits.get(name, (1,))
        fracs = [to_fraction(f) if rational else float(f) for f in fracs]
        if not fracs or any(not f >= 0 for f in fracs):
            raise ProbError(f"split for {name!r} must be non-empty and non-negative")
        total = sum(fracs, Fraction(0)) if rational else math.fsum(fracs)
        if (rational and total != 1) or (not rational and abs(total - 1) > FLOAT_NORM_TOL):
            raise ProbError(f"split fractions for {name!r} sum to {total}, not 1")
        if len(fracs) == 1:
            succ = (name,)
            atoms.append((name, w))
        else:
            succ = tuple(f"{name}#{k}" for k in range(len(fracs)))
            atoms.extend((s, f * w) for s, f in zip(succ, fracs))
        atom_map[name] = succ
    new = ProbSpace(atoms, mode=space.mode)
    return new, Embedding(atom_map, new)


def apply_isomorphism(space: ProbSpace, relabel: Mapping[str, str]) -> ProbSpace:
    """Rename atoms through a bijection; weights follow their atoms."""
    if set(relabel) != set(space.names):
        raise ProbError("relabeling must be defined on exactly the atoms of the space")
    if len(set(relabel.values())) != len(relabel):
        raise ProbError("relabeling is not injective")
    return ProbSpace(((relabel[n], w) for n, w in zip(space.names, space.weights)),
                     mode=space.mode)


def map_event(e: Event, relabel: Mapping[str, str], target: ProbSpace) -> Event:
    """Image of an event under an atom relabeling."""
    return target.event(relabel[n] for n in e.members)


def to_float(space: ProbSpace) -> ProbSpace:
    if space.mode == FLOAT:
        return space
    return ProbSpace(zip(space.names, (float(w) for w in space.weights)), mode=FLOAT)


# -- files ------------------------------------------------------------------

def format_weight(w, mode: str):
    if mode == RATIONAL:
        w = to_fraction(w)
        return f"{w.numerator}/{w.denominator}"
    return float(w)


def space_to_dict(space: ProbSpace, events: Mapping[str, Event] | None = None) -> dict:
    doc = {
        "mode": space.mode,
        "atoms": [{"name": n, "weight": format_weight(w, space.mode)}
                  for n, w in zip(space.names, space.weights)],
    }
    if events is not None:
        doc["events"] = {k: sorted(e.members, key=space.index) for k, e in events.items()}
    return doc


def space_from_dict(doc: Mapping) -> tuple:
    """Parse a space document; returns ``(space, events)``."""
    try:
        mode = doc.get("mode", RATIONAL)
        atoms = [(a["name"], a["weight"]) for a in doc["atoms"]]
    except (KeyError, TypeError, AttributeError) as exc:
        raise ProbError(f"malformed space document: {exc}") from exc
    if mode == FLOAT and any(isinstance(w, str) for _, w in atoms):
        raise ProbError("float-mode space with string weights")
    space = ProbSpace(atoms, mode=mode)
    raw = doc.get("events", {}) or {}
    if not isinstance(raw, Mapping):
        raise ProbError("'events' must be an object")
    events = {k: space.event(v) for k, v in raw.items()}
    return space, events


def read_space(path) -> tuple:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProbError(f"{path}: invalid JSON: {exc}") from exc
    return space_from_dict(doc)


def write_space(path, space: ProbSpace, events: Mapping[str, Event] | None = None,
                extra: Mapping | None = None) -> None:
    from .report import dumps

    doc = space_to_dict(space, events)
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        fh.write(dumps(doc))
