import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from cclab.prob_core import FLOAT, ProbError, ProbSpace, correlation, probability
from cclab.rpcc import (
    DegenerateCauseError,
    InfeasibleError,
    SearchSizeError,
    canonical_subsets,
    check_common_cause,
    check_common_common_cause,
    complete_with_common_cause,
    find_common_cause,
)


def pass_example():
    sp = ProbSpace([("ab", F(4, 10)), ("nb", F(3, 10)), ("nn", F(3, 10))])
    return sp, sp.event({"ab"}), sp.event({"ab", "nb"})


def exhaustive(space, a, b, **kw):
    """Reference search: every subset through the public checker."""
    for idx in canonical_subsets(len(space)):
        c = space.event(space.names[k] for k in idx)
        try:
            if check_common_cause(space, a, b, c, **kw).passed:
                return c
        except DegenerateCauseError:
            continue
    return None


def random_space(rng, n, mode="rational"):
    raw = [rng.randint(0, 9) for _ in range(n)]
    raw[rng.randrange(n)] += 1
    total = sum(raw)
    atoms = [(f"x{k}", F(r, total) if mode == "rational" else r / total) for k, r in enumerate(raw)]
    if mode == FLOAT:
        s = sum(w for _, w in atoms)
        atoms = [(nm, w / s) for nm, w in atoms]
    sp = ProbSpace(atoms, mode=mode)
    pick = lambda: sp.event(nm for nm in sp.names if rng.random() < 0.5)
    return sp, pick(), pick()


def test_check_pass_example():
    sp, a, b = pass_example()
    rep = check_common_cause(sp, a, b, a & b)
    assert rep.screen_on_C == 0 and rep.screen_on_notC == 0
    assert (rep.relevance_A, rep.relevance_B) == (1, F(1, 2))
    assert rep.passed and rep.correlation_sign == "positive"


def test_independent_cause_is_irrelevant():
    sp = ProbSpace([(f"{x}{y}{z}", F(1, 8)) for x in "01" for y in "01" for z in "01"])
    a = sp.event(n for n in sp.names if n[0] == "1" and n[1] == "1")
    b = sp.event(n for n in sp.names if n[0] == "1")
    c = sp.event(n for n in sp.names if n[2] == "1")
    rep = check_common_cause(sp, a, b, c)
    assert rep.relevance_A == 0 and rep.relevance_B == 0
    assert not rep.verdict["relevance_A"] and not rep.verdict["relevance_B"]


def test_degenerate_cause():
    sp, a, b = pass_example()
    with pytest.raises(DegenerateCauseError):
        check_common_cause(sp, a, b, sp.sure())
    with pytest.raises(DegenerateCauseError):
        check_common_cause(sp, a, b, sp.empty())


def test_negative_orientation():
    sp = ProbSpace([("ab", F(1, 10)), ("a_", F(4, 10)), ("_b", F(4, 10)), ("__", F(1, 10))])
    a, b = sp.event({"ab", "a_"}), sp.event({"ab", "_b"})
    c = sp.event({"a_"})
    rep = check_common_cause(sp, a, b, c)
    assert rep.correlation_sign == "negative"
    assert rep.relevance_B < 0 and rep.verdict["relevance_B"]


def test_find_examples():
    sp, a, b = pass_example()
    found = find_common_cause(sp, a, b)
    assert found is not None and found == exhaustive(sp, a, b)
    # in two atoms any correlated pair is perfectly (anti)correlated and the
    # event itself screens it
    two = ProbSpace([("x", F(1, 3)), ("y", F(2, 3))])
    x, y = two.event({"x"}), two.event({"y"})
    assert find_common_cause(two, x, x) == x == exhaustive(two, x, x)
    assert find_common_cause(two, x, y) == x == exhaustive(two, x, y)
    assert find_common_cause(two, x, two.sure()) is None
    big = ProbSpace([(f"x{k}", F(1, 21)) for k in range(21)])
    with pytest.raises(SearchSizeError):
        find_common_cause(big, big.event({"x0"}), big.event({"x1"}))


@pytest.mark.parametrize("seed", range(40))
def test_find_agrees_with_exhaustive(seed):
    rng = random.Random(seed)
    sp, a, b = random_space(rng, rng.randint(2, 8))
    assert find_common_cause(sp, a, b) == exhaustive(sp, a, b)


@pytest.mark.parametrize("seed", range(10))
def test_find_agrees_with_exhaustive_float(seed):
    rng = random.Random(1000 + seed)
    sp, a, b = random_space(rng, rng.randint(2, 7), mode=FLOAT)
    assert find_common_cause(sp, a, b) == exhaustive(sp, a, b)


def test_screening_identity():
    # with both screening equalities, Corr = p(C) p(~C) dA dB
    rng = random.Random(3)
    for _ in range(20):
        sp, a, b = random_space(rng, 8)
        c = find_common_cause(sp, a, b)
        if c is None:
            continue
        rep = check_common_cause(sp, a, b, c)
        pc = probability(sp, c)
        assert correlation(sp, a, b) == pc * (1 - pc) * rep.relevance_A * rep.relevance_B


def test_complete_perfect_correlation():
    sp = ProbSpace([("x", F(1, 2)), ("y", F(1, 2))])
    a = sp.event({"x"})
    res = complete_with_common_cause(sp, a, a, seed=1)
    assert res.residuals.passed
    assert res.residuals.relevance_A == pytest.approx(1.0, abs=1e-9)


def test_complete_worked_example():
    sp = ProbSpace([("ab", 0.3), ("a_", 0.2), ("_b", 0.2), ("__", 0.3)], mode=FLOAT)
    a, b = sp.event({"ab", "a_"}), sp.event({"ab", "_b"})
    res = complete_with_common_cause(sp, a, b, seed=42)
    assert res.residuals.max_residual <= 1e-9
    rep = check_common_cause(res.extended_space, res.embedding(a), res.embedding(b),
                             res.common_cause, tol=1e-9)
    assert rep.passed


def test_complete_rejects_uncorrelated():
    sp = ProbSpace([(f"{i}{j}", F(1, 4)) for i in "01" for j in "01"])
    with pytest.raises(ProbError):
        complete_with_common_cause(sp, sp.event({"10", "11"}), sp.event({"01", "11"}))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=4, max_size=4))
def test_complete_preserves_original_probabilities(raw):
    total = sum(raw)
    sp = ProbSpace([(n, F(r, total)) for n, r in zip(("ab", "a_", "_b", "__"), raw)])
    a, b = sp.event({"ab", "a_"}), sp.event({"ab", "_b"})
    if correlation(sp, a, b) == 0:
        return
    res = complete_with_common_cause(sp, a, b, seed=0)
    for ev in (a, b, a & b, ~a | b, sp.sure()):
        assert probability(res.extended_space, res.embedding(ev)) == probability(sp, ev)
    assert check_common_cause(res.extended_space, res.embedding(a), res.embedding(b),
                              res.common_cause, tol=1e-9).passed


def test_infeasible_error_carries_best_residual():
    err = InfeasibleError("no luck", best_residual=0.5, best_point=[0.1], report=None)
    assert err.best_residual == 0.5


def test_common_common_cause():
    sp, a, b = pass_example()
    single = check_common_common_cause(sp, [(a, b)], a & b)
    assert single.verdict and single.per_pair[0].passed
    # an independent coin d: the cause of (a, b) is irrelevant to (d, d)
    sp2 = ProbSpace([(f"{n}{d}", w / 2) for n, w in zip(sp.names, sp.weights) for d in "01"])
    lift = lambda e: sp2.event(f"{n}{d}" for n in e.members for d in "01")
    a, b = lift(a), lift(b)
    d = sp2.event(n for n in sp2.names if n.endswith("1"))
    bad = check_common_common_cause(sp2, [(a, b), (d, d)], a & b)
    assert not bad.verdict
    assert bad.per_pair[0].passed and not bad.per_pair[1].passed
