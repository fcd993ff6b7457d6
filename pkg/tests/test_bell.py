import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cclab import bell
from cclab.bell import SettingModel
from cclab.prob_core import ProbError, probability
from cclab.quantum import build_surface_space, singlet_joint, singlet_joint_exact

PAIRS = [(a, b) for a in (1, -1) for b in (1, -1)]

weights16 = st.lists(st.floats(0, 1, allow_nan=False), min_size=16, max_size=16).filter(
    lambda w: sum(w) > 1e-6).map(lambda w: [x / sum(w) for x in w])


def surface_model():
    sp, ev = build_surface_space((0, 120, 240), null_mass=F(1, 50))
    return SettingModel(sp, ev)


def test_product_model_satisfies_every_condition():
    m = bell.product_model()
    for h in ("H0", "H1"):
        C = m.ev(h)
        assert bell.check_measurement_independence(m, C).residual == 0
        for i, j in itertools.product((1, 2, 3), repeat=2):
            assert bell.check_hidden_locality(m, C, i, j).residual == 0
            for a, b in PAIRS:
                for check in (bell.check_factorizability, bell.check_outcome_independence,
                              bell.check_parameter_independence):
                    rep = check(m, C, i, j, a, b)
                    assert rep.holds and rep.residual == 0


def test_local_strategies_factorize():
    w = [F(k + 1, 136) for k in range(16)]
    m = bell.local_strategy_model(w)
    for k in range(16):
        C = m.ev(f"H{k}")
        for i, j in itertools.product((1, 2), repeat=2):
            for a, b in PAIRS:
                assert bell.check_factorizability(m, C, i, j, a, b).residual == 0


def test_containment_forces_measurement_dependence():
    m = surface_model()
    sp = m.space
    for i, j in itertools.product((1, 2, 3), repeat=2):
        C = m.ev(f"L{i}_p") & m.ev(f"R{j}_m")
        pc = probability(sp, C)
        assert bell.measurement_dependence_residual(m, C, f"L{i}") == pc * (1 - probability(sp, m.ev(f"L{i}")))
        rep = bell.check_measurement_independence(m, C)
        assert not rep.holds and rep.residual > 0
        hl = bell.check_hidden_locality(m, C, i, j)
        block = m.ev(f"L{i}") & m.ev(f"R{j}")
        assert hl.residual == pc * (1 - probability(sp, block))


def test_uniform_containment_value():
    sp, ev = build_surface_space((0, 120, 240))
    m = SettingModel(sp, ev)
    C = m.ev("L1_p") & m.ev("R1_m")
    assert bell.measurement_dependence_residual(m, C, "L1") == probability(sp, C) * F(2, 3)
    # the null atom belongs to no setting, so p(L1) shrinks with it
    m = surface_model()
    C = m.ev("L1_p") & m.ev("R1_m")
    assert probability(m.space, m.ev("L1")) == F(49, 150)
    assert bell.measurement_dependence_residual(m, C, "L1") == probability(m.space, C) * F(101, 150)


def test_oi_equals_factorizability_inside_block():
    m = surface_model()
    for i, j in itertools.product((1, 2, 3), repeat=2):
        block = m.ev(f"L{i}") & m.ev(f"R{j}")
        C = block - (m.ev(f"L{i}_m") & m.ev(f"R{j}_m"))
        for a, b in PAIRS:
            oi = bell.check_outcome_independence(m, C, i, j, a, b)
            fz = bell.check_factorizability(m, C, i, j, a, b)
            assert oi.residual == fz.residual


def test_lambda_does_not_screen_singlet():
    m = surface_model()
    rep = bell.check_outcome_independence(m, m.ev("Lambda"), 1, 2, 1, 1, tol=1e-9)
    assert not rep.holds
    assert rep.residual == F(3, 8) - F(1, 4)


def test_chsh_singlet():
    res = bell.chsh_from_angles(0, 90, 45, 135)
    assert abs(res.lhs - 2 * math.sqrt(2)) <= 1e-9 and res.violated
    assert abs(res.lhs - bell.tsirelson()) <= 1e-12


def test_chsh_plumbing():
    assert bell.chsh(np.zeros((2, 2))) == 0
    with pytest.raises(ProbError):
        bell.chsh([[1.5, 0], [0, 0]])
    with pytest.raises(ProbError):
        bell.chsh([1, 0, 0])


@given(weights16)
def test_local_mixtures_obey_chsh(w):
    assert abs(bell.local_chsh(w)) <= 2 + 1e-12


def test_chsh_bound_is_tight_for_local_strategies():
    values = [abs(bell.local_chsh([1.0 if k == s else 0.0 for k in range(16)])) for s in range(16)]
    assert max(values) == 2


def test_wigner_examples():
    res = bell.wigner(singlet_joint_exact, 0, 60, 120)
    assert (res.lhs, res.rhs, res.value, res.violated) == (F(3, 8), F(1, 4), F(1, 8), True)
    res = bell.wigner(singlet_joint, 0, 120, 240)
    assert res.lhs == pytest.approx(0.375, abs=1e-12)
    assert res.rhs == pytest.approx(0.75, abs=1e-12)
    assert not res.violated
    with pytest.raises(ProbError):
        bell.wigner(singlet_joint, 0, 360, 120)


@pytest.mark.parametrize("s", range(8))
def test_anticorrelated_assignments_never_violate(s):
    w = [1 if k == s else 0 for k in range(8)]
    for triple in itertools.permutations((0, 60, 120)):
        assert not bell.wigner(bell.anticorrelated_joint(w, (0, 60, 120)), *triple).violated


@given(st.lists(st.fractions(0, 1), min_size=8, max_size=8).filter(lambda w: sum(w) > 0))
def test_anticorrelated_mixtures_never_violate(raw):
    w = [x / sum(raw) for x in raw]
    assert not bell.wigner(bell.anticorrelated_joint(w, (0, 60, 120)), 0, 60, 120).violated


def test_resolve_setting_antipodal():
    assert bell.resolve_setting((0, 120, 240), 240, 1) == (3, 1)
    assert bell.resolve_setting((0, 120, 240), 60, 1) == (3, -1)
    with pytest.raises(bell.CoverageError):
        bell.resolve_setting((0, 120, 240), 45, 1)


def test_model_joint_reads_surface_conditionals():
    m = surface_model()
    joint = bell.model_joint(m, (0, 120, 240))
    for tl, tr in itertools.product((0, 60, 120, 180, 240, 300), repeat=2):
        for a, b in PAIRS:
            assert joint(tl, tr, a, b) == singlet_joint_exact(tl, tr, a, b)
