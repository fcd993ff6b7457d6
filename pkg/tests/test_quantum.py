import math
from fractions import Fraction as F

import numpy as np
import pytest

from cclab import quantum
from cclab.prob_core import FLOAT, ProbError, conditional, correlation, probability
from cclab.quantum import (
    SettingDistribution,
    _trace_joint,
    build_surface_space,
    panel_view,
    parse_setting_distribution,
    singlet_expectation,
    singlet_joint,
    singlet_joint_exact,
)

PAIRS = [(a, b) for a in (1, -1) for b in (1, -1)]


def test_trace_matches_closed_form_on_grid():
    worst = 0.0
    for delta in range(0, 360):
        for a, b in PAIRS:
            worst = max(worst, abs(_trace_joint(delta, 0, a, b) - singlet_joint(delta, 0, a, b)))
    assert worst <= 1e-12


def test_examples():
    assert singlet_joint_exact(0, 0, 1, 1) == 0
    assert _trace_joint(0, 0, 1, 1) == pytest.approx(0, abs=1e-15)
    assert singlet_joint_exact(120, 0, 1, 1) == F(3, 8)
    assert _trace_joint(120, 0, 1, 1) == pytest.approx(0.375, abs=1e-12)
    assert singlet_expectation(10, 10) == -1
    assert singlet_expectation(90, 0) == pytest.approx(0, abs=1e-15)
    assert singlet_expectation(60, 0) == pytest.approx(-0.5, abs=1e-12)


def test_expectation_is_outcome_weighted_sum():
    for delta in np.arange(0, 360, 7.5):
        s = sum(a * b * singlet_joint(delta, 0, a, b) for a, b in PAIRS)
        assert abs(s - singlet_expectation(delta, 0)) <= 1e-12


def test_marginals_exact():
    for delta in (0, 60, 90, 120, 180, 240, 270, 300):
        for a in (1, -1):
            assert sum(singlet_joint_exact(delta, 0, a, b) for b in (1, -1)) == F(1, 2)


def test_rotation_invariance():
    for tl, tr in [(10, 70), (200, 5), (359.5, 0.5)]:
        for shift in (0, 33, 180.25):
            for a, b in PAIRS:
                assert singlet_joint(tl + shift, tr + shift, a, b) == pytest.approx(
                    singlet_joint(tl, tr, a, b), abs=1e-12)


def test_exact_cos_only_where_rational():
    assert quantum.exact_cos(45) is None
    assert quantum.exact_cos(-120) == F(-1, 2)
    assert singlet_joint_exact(0, 45, 1, 1) is None


def test_surface_space_examples():
    sp, ev = build_surface_space((0, 120, 240))
    assert probability(sp, ev["L1"]) == F(1, 3)
    assert probability(sp, sp.sure()) == 1
    assert probability(sp, ev["L1_p"] & ev["R2_p"]) == F(1, 24)
    assert correlation(sp, ev["L1_p"], ev["R2_p"]) == F(1, 24) - F(1, 36)


def test_surface_space_fidelity_and_null_mass():
    sp, ev = build_surface_space((0, 120, 240), null_mass=F(1, 50))
    assert probability(sp, ev["Lambda"]) == F(49, 50)
    for i, tl in enumerate((0, 120, 240), 1):
        for j, tr in enumerate((0, 120, 240), 1):
            block = ev[f"L{i}"] & ev[f"R{j}"]
            for a, b in PAIRS:
                cell = ev[quantum.event_name("L", i, a)] & ev[quantum.event_name("R", j, b)]
                assert conditional(sp, cell, block) == singlet_joint_exact(tl, tr, a, b)


def test_surface_space_float_for_irrational_angles():
    sp, ev = build_surface_space((0, 45, 90))
    assert sp.mode == FLOAT
    block = ev["L1"] & ev["R2"]
    got = conditional(sp, ev["L1_p"] & ev["R2_p"], block)
    assert got == pytest.approx(singlet_joint(0, 45, 1, 1), abs=1e-12)
    with pytest.raises(ProbError):
        build_surface_space((0, 45, 90), mode="rational")


def test_setting_distribution_validation():
    assert parse_setting_distribution("uniform") == SettingDistribution.uniform()
    pi = parse_setting_distribution("1/2,1/4,1/4;1/3,1/3,1/3")
    assert pi.left == (F(1, 2), F(1, 4), F(1, 4))
    with pytest.raises(ProbError):
        SettingDistribution((F(1, 2), F(1, 2), F(0)), (F(1, 3),) * 3)
    with pytest.raises(ProbError):
        parse_setting_distribution("1/2,1/2,1/2")
    with pytest.raises(ProbError):
        build_surface_space(null_mass=1)


def test_panel_view_preserves_correlations():
    sp, ev = build_surface_space((0, 120, 240), null_mass=F(1, 50))
    panel, pev, relabel = panel_view(sp, ev)
    assert panel.weights == sp.weights
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            for a, b in [("p", "p"), ("p", "m"), ("m", "m")]:
                colour = {"p": "green", "m": "red"}
                before = correlation(sp, ev[f"L{i}_{a}"], ev[f"R{j}_{b}"])
                after = correlation(panel, pev[f"A_row{i}_{colour[a]}"], pev[f"B_row{j}_{colour[b]}"])
                assert before == after
