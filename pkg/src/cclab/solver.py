"""Seeded multi-start bounded least squares for small feasibility problems.

Each start runs a trust-region reflective solve (``scipy.optimize.least_squares``)
on the unit box.  Starts are drawn from ``PCG64(SeedSequence(seed))`` and
evaluated in fixed-size batches; the search stops after the first batch that
contains a feasible point.  The winner is the lowest score, ties going to the
lowest start index, so the result never depends on evaluation order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

DEFAULT_STARTS = 64
DEFAULT_ITERATIONS = 500


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    score: float
    start_index: int
    starts_used: int
    success: bool


def _one_start(residuals, x0, max_iter):
    try:
        res = least_squares(residuals, x0, bounds=(0.0, 1.0), method="trf",
                            max_nfev=max_iter, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        return np.clip(res.x, 0.0, 1.0)
    except (ValueError, FloatingPointError):
        return np.clip(x0, 0.0, 1.0)


def multistart(residuals: Callable[[np.ndarray], np.ndarray],
               score: Callable[[np.ndarray], float],
               n: int,
               *,
               seed: int = 0,
               tol: float = 1e-9,
               starts: int = DEFAULT_STARTS,
               max_iter: int = DEFAULT_ITERATIONS,
               batch: int = 8,
               workers: int = 1,
               initial: np.ndarray | None = None) -> SolveResult:
    """Minimise ``residuals`` over ``[0, 1]**n`` until ``score(x) <= tol``.

    ``score`` is the caller's independent feasibility measure (0 means
    every constraint met); it decides success, not the solver's cost.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    points = rng.uniform(0.02, 0.98, size=(starts, n))
    if initial is not None:
        points[0] = initial
    best = None
    used = 0
    with ThreadPoolExecutor(max_workers=workers) if workers > 1 else _Serial() as pool:
        for lo in range(0, starts, batch):
            idx = range(lo, min(lo + batch, starts))
            xs = list(pool.map(lambda k: _one_start(residuals, points[k], max_iter), idx))
            used = idx[-1] + 1
            for k, x in zip(idx, xs):
                for cand in (x, _snap(x)):
                    s = float(score(cand))
                    if not np.isfinite(s):
                        s = np.inf
                    if best is None or s < best[1]:
                        best = (cand, s, k)
            if best[1] <= tol:
                break
    x, s, k = best
    return SolveResult(x=x, score=s, start_index=k, starts_used=used, success=s <= tol)


def _snap(x, eps=1e-5):
    # trust-region steps approach box faces slowly; corner solutions need the push
    x = x.copy()
    x[x < eps] = 0.0
    x[x > 1.0 - eps] = 1.0
    return x


class _Serial:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    @staticmethod
    def map(fn, items):
        return map(fn, items)
