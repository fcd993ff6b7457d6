import itertools

import pytest

from cclab import bell, epr_model
from cclab.epr_model import ModelSpec, audit, verify_quantum_fidelity, with_events
from cclab.prob_core import ProbError, ProbSpace, correlation, probability
from cclab.quantum import OUTCOMES, SETTINGS, cause_name, event_name
from cclab.rpcc import check_common_cause

CELLS = list(itertools.product(OUTCOMES, repeat=2))
BLOCKS = list(itertools.product(SETTINGS, repeat=2))


def outcome_sign(model, i, j, a, b):
    corr = correlation(model.space, model.ev(event_name("L", i, a)), model.ev(event_name("R", j, b)))
    return 1 if corr > 0 else -1


def test_structure(default_model):
    m = default_model
    assert len(m.targets) == 36
    lam = m.ev("Lambda")
    assert probability(m.space, lam) == pytest.approx(0.98, abs=1e-12)
    union = m.space.empty()
    for i, j in BLOCKS:
        block = m.block(i, j)
        assert (union & block).is_empty()
        union = union | block
        causes = [m.cause(i, j, a, b) for a, b in CELLS]
        for x, y in itertools.combinations(causes, 2):
            assert (x & y).is_empty() and probability(m.space, x & y) == 0
        for c in causes:
            assert c.issubset(block)
    assert union == lam
    for side, k, v in itertools.product("LR", SETTINGS, OUTCOMES):
        assert m.ev(event_name(side, k, v)).issubset(m.ev(event_name(side, k)))


def test_quantum_fidelity(default_model):
    rep = verify_quantum_fidelity(default_model)
    assert rep.passed and rep.max_deviation <= 1e-9
    p = bell.model_conditional(default_model, 1, 2, 1, 1)
    assert p == pytest.approx(0.375, abs=1e-12)


def test_fidelity_detects_perturbation(default_model):
    m = default_model
    names = list(m.space.names)
    weights = list(m.space.weights)
    k = names.index(next(n for n in names if n.startswith("b12_pp")))
    other = names.index("null")
    weights[k] += 1e-4
    weights[other] -= 1e-4
    bumped = epr_model.EprModel(ProbSpace(zip(names, weights), mode=m.space.mode), m.events,
                                spec=m.spec, targets=m.targets)
    rep = verify_quantum_fidelity(bumped)
    assert not rep.passed and rep.max_deviation > 1e-6
    assert (rep.witness["i"], rep.witness["j"]) == (1, 2)


def test_positive_causes_satisfy_criterion(default_model):
    m = default_model
    for (i, j, a, b) in m.targets:
        if outcome_sign(m, i, j, a, b) < 0:
            continue
        rep = check_common_cause(m.space, m.ev(event_name("L", i, a)), m.ev(event_name("R", j, b)),
                                 m.cause(i, j, a, b), tol=1e-6, margin=1e-6)
        assert rep.passed, (i, j, a, b, rep.to_dict())


def test_negative_pairs_fail_not_c_screening(default_model):
    # recorded limitation: no cause inside the block screens a negative pair
    m = default_model
    diag = m.diagnostics["causes"]
    negative = [t for t in m.targets if outcome_sign(m, *t) < 0]
    assert len(negative) == 18
    for t in negative:
        name = cause_name(*t)
        assert not diag[name]["feasible"]
        rep = check_common_cause(m.space, m.ev(event_name("L", t[0], t[2])),
                                 m.ev(event_name("R", t[1], t[3])), m.cause(*t), tol=1e-6)
        assert rep.verdict["screen_C"] and not rep.verdict["screen_notC"]


def test_default_audit_failing_clauses(default_model):
    rep = audit(default_model)
    assert set(rep.failing) == {"screen_notC", "parameter_independence_violated",
                                "factorizability_violated"}
    for name in ("screen_C", "containment", "union_containment", "disjoint",
                 "outcome_independence", "measurement_dependence_L",
                 "measurement_dependence_R", "hidden_locality_violated",
                 "lambda_non_screening", "block_lambda_non_screening", "quantum_fidelity",
                 "non_determinism_witness"):
        assert rep.clauses[name].passed, name


def test_positive_only_audit(positive_model):
    m = positive_model
    assert len(m.targets) == 18
    rep = audit(m)
    assert set(rep.failing) == {"parameter_independence_violated", "factorizability_violated"}


def test_parameter_independence_is_forced_by_containment(positive_model):
    m = positive_model
    for t in m.targets:
        pi_ = bell.check_parameter_independence(m, m.cause(*t), *t)
        assert pi_.residual == 0
        oi = bell.check_outcome_independence(m, m.cause(*t), *t)
        fz = bell.check_factorizability(m, m.cause(*t), *t)
        assert oi.residual == fz.residual


def test_measurement_dependence_closed_form(positive_model):
    m = positive_model
    for (i, j, a, b) in m.targets:
        C = m.cause(i, j, a, b)
        pc = probability(m.space, C)
        res = bell.measurement_dependence_residual(m, C, f"L{i}")
        assert res == pytest.approx(pc * (1 - probability(m.space, m.ev(f"L{i}"))), abs=1e-15)
        assert res > 0


def test_enlarged_cause_fails_not_c_screening(positive_model):
    m = positive_model
    mutated = with_events(m, C_12_pp=m.block(1, 2))
    rep = audit(mutated)
    assert not rep.passed
    assert not rep.clauses["screen_notC"].passed
    assert rep.clauses["screen_notC"].witness["C"] == "C_12_pp"


def test_deterministic_fixture_fails_not_c_screening():
    rep = audit(epr_model.deterministic_cause_model())
    assert not rep.clauses["screen_notC"].passed
    assert not rep.clauses["non_determinism_witness"].passed


def test_null_mass_zero_warns_and_keeps_structure():
    m = epr_model.build_model(ModelSpec(null_mass=0, positive_only=True))
    rep = audit(m)
    assert any("sure event" in w for w in rep.warnings)
    for name in ("containment", "union_containment", "disjoint"):
        assert rep.clauses[name].passed
    C = m.cause(1, 1, 1, -1)
    assert bell.measurement_dependence_residual(m, C, "L1") == pytest.approx(
        probability(m.space, C) * 2 / 3, abs=1e-15)


def test_model_file_round_trip(tmp_path, positive_model):
    path = tmp_path / "model.json"
    epr_model.write_model(path, positive_model)
    back = epr_model.read_model(path)
    assert back.space.names == positive_model.space.names
    assert back.space.weights == positive_model.space.weights
    assert back.targets == positive_model.targets
    assert back.spec == positive_model.spec


def test_malformed_model_rejected():
    doc = {"mode": "rational", "atoms": [{"name": "x", "weight": "1/1"}], "events": {"Lambda": ["x"]}}
    with pytest.raises(ProbError):
        epr_model.model_from_dict(doc)


def test_spec_validation():
    with pytest.raises(ProbError):
        ModelSpec(margin=0)
    with pytest.raises(ProbError):
        ModelSpec(null_mass=1.0)
    with pytest.raises(ProbError):
        ModelSpec(angles=(0, 120))
