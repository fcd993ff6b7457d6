"""Seeded Monte-Carlo sampling from finite spaces and setting models.

Stream rule: trials are cut into chunks of ``cfg.chunk`` draws; chunk ``k``
draws from ``PCG64(SeedSequence(seed, spawn_key=(k,)))``.  Atoms are picked
by inverse CDF over the canonical atom order.  Counts from all chunks are
summed, so the report does not depend on how many workers ran or in what
order chunks finished.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bell
from .bell import CoverageError, SettingModel
from .prob_core import ProbError, ProbSpace, probability
from .quantum import OUTCOMES, SETTINGS, event_name, outcome, outcome_tag

GENERATOR = "PCG64 via SeedSequence(seed, spawn_key=(chunk,))"


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0
    chunk: int = 250_000
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ProbError("trials must be at least 1")
        if int(self.chunk) < 1:
            raise ProbError("chunk must be at least 1")

    def to_dict(self) -> dict:
        return {"trials": int(self.trials), "seed": int(self.seed), "chunk": int(self.chunk),
                "generator": GENERATOR}


@dataclass
class SimReport:
    config: SimConfig
    atoms: tuple
    counts: np.ndarray
    weights: tuple
    conditional: list = field(default_factory=list)
    angles: tuple | None = None

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.counts.sum()

    @property
    def max_atom_deviation(self) -> float:
        return float(np.max(np.abs(self.frequencies - np.asarray(self.weights, dtype=float))))

    @property
    def max_conditional_deviation(self) -> float | None:
        devs = [r["deviation"] for r in self.conditional if r["deviation"] is not None]
        return max(devs) if devs else None

    def lookup(self, i: int, j: int, a, b) -> dict:
        for row in self.conditional:
            if (row["i"], row["j"], row["a"], row["b"]) == (i, j, outcome_tag(a), outcome_tag(b)):
                return row
        raise CoverageError(f"no conditional entry for setting pair ({i},{j})")

    def joint(self, tl, tr, a, b) -> float:
        """Empirical p(a, b | tL, tR), resolving directions against the model angles."""
        if self.angles is None:
            raise CoverageError("report carries no setting angles")
        i, a2 = bell.resolve_setting(self.angles, tl, outcome(a))
        j, b2 = bell.resolve_setting(self.angles, tr, outcome(b))
        row = self.lookup(i, j, a2, b2)
        if row["p_hat"] is None:
            raise CoverageError(f"setting pair ({i},{j}) was never sampled")
        return row["p_hat"]

    def inequalities(self) -> dict:
        out = {}
        if self.angles is None:
            return out
        for triple in (tuple(self.angles), (0, 60, 120)):
            key = "wigner_" + "_".join(f"{float(t):g}" for t in triple)
            try:
                out[key] = empirical_wigner(self, triple).to_dict()
            except CoverageError as exc:
                out[key] = {"error": str(exc)}
        try:
            E = np.zeros((2, 2))
            for r, i in enumerate((2, 1)):
                for c, j in enumerate((1, 2)):
                    E[r, c] = sum(outcome(a) * outcome(b) * self.lookup(i, j, a, b)["p_hat"]
                                  for a in "pm" for b in "pm")
            s = bell.chsh(E)
            out["chsh_settings_12"] = {"value": s, "lhs": abs(s), "rhs": 2.0, "violated": abs(s) > 2.0}
        except (CoverageError, TypeError):
            out["chsh_settings_12"] = {"error": "setting pairs not covered"}
        return out

    def to_dict(self) -> dict:
        doc = {
            "config": self.config.to_dict(),
            "atoms": [{"name": n, "count": int(c), "frequency": float(f), "weight": float(w)}
                      for n, c, f, w in zip(self.atoms, self.counts, self.frequencies, self.weights)],
            "max_atom_deviation": self.max_atom_deviation,
        }
        if self.conditional:
            doc["conditional"] = self.conditional
            doc["max_conditional_deviation"] = self.max_conditional_deviation
            doc["inequalities"] = self.inequalities()
        if self.angles is not None:
            doc["angles"] = [float(a) for a in self.angles]
        return doc


def _chunk_counts(cdf: np.ndarray, seed: int, k: int, n: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    return np.bincount(idx, minlength=len(cdf))


def sample_counts(space: ProbSpace, cfg: SimConfig) -> np.ndarray:
    w = np.asarray([float(x) for x in space.weights])
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    sizes = [cfg.chunk] * (cfg.trials // cfg.chunk)
    if cfg.trials % cfg.chunk:
        sizes.append(cfg.trials % cfg.chunk)
    jobs = [(k, n) for k, n in enumerate(sizes)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda kn: _chunk_counts(cdf, cfg.seed, *kn), jobs))
    else:
        parts = [_chunk_counts(cdf, cfg.seed, k, n) for k, n in jobs]
    total = np.zeros(len(cdf), dtype=np.int64)
    for p in parts:
        total += p
    return total


def sample(target, cfg: SimConfig) -> SimReport:
    """Draw ``cfg.trials`` atoms; add the conditional table for setting models."""
    if isinstance(target, SettingModel):
        space = target.space
    elif isinstance(target, ProbSpace):
        space = target
    else:
        raise ProbError("sample needs a ProbSpace or a setting model")
    counts = sample_counts(space, cfg)
    report = SimReport(cfg, space.names, counts, space.weights)
    if isinstance(target, SettingModel):
        report.conditional = _conditional_table(target, counts)
        spec = getattr(target, "spec", None)
        report.angles = tuple(spec.angles) if spec is not None else None
    return report


def _conditional_table(model: SettingModel, counts: np.ndarray) -> list:
    sp = model.space
    by_name = dict(zip(sp.names, counts.tolist()))

    def n_of(e):
        return sum(by_name[n] for n in e.members)

    rows = []
    for i in SETTINGS:
        for j in SETTINGS:
            li, rj = model.ev(event_name("L", i)), model.ev(event_name("R", j))
            block = li & rj
            nb = n_of(block)
            pb = probability(sp, block)
            for a in OUTCOMES:
                for b in OUTCOMES:
                    cell = block & model.ev(event_name("L", i, a)) & model.ev(event_name("R", j, b))
                    nc = n_of(cell)
                    p = float(probability(sp, cell) / pb) if pb > 0 else None
                    ph = nc / nb if nb else None
                    dev = abs(ph - p) if (ph is not None and p is not None) else None
                    rows.append({"i": i, "j": j, "a": outcome_tag(a), "b": outcome_tag(b),
                                 "n_block": nb, "n_cell": nc, "p_hat": ph, "p": p,
                                 "deviation": dev})
    return rows


def empirical_wigner(report: SimReport, triple: Sequence, tol: float = 0.0):
    """Wigner inequality evaluated on empirical conditionals."""
    if not report.conditional:
        raise CoverageError("report has no conditional table")
    return bell.wigner(report.joint, *triple, tol=tol)
