import math

import numpy as np
import pytest

from spinldp.badness import (
    SolverOpts,
    badness_scan,
    is_bad,
    nature_nurture_classify,
    optimal_initials,
    rate_function_from_descriptor,
    transition_cost,
)
from spinldp.magnetization import mag_model
from spinldp.rate_functions import bernoulli_rate, double_well_rate, tabulated_rate
from spinldp.trajectory import ActionProblem, FixedStart, minimize_action_fixed

FAST = SolverOpts(dt_target=0.02, min_steps=100, max_iter=800, gtol=1e-8)
MODEL = mag_model()


def test_rate_function_normalization_and_wells():
    dw = double_well_rate(1.5)
    assert len(dw.minimizers) == 2
    m_beta = dw.minimizers[1]
    assert abs(math.atanh(m_beta) - 1.5 * m_beta) <= 1e-10
    assert abs(float(dw.evaluator(m_beta))) <= 1e-12
    assert float(dw.evaluator(0.0)) > 0.1
    grid = np.linspace(-0.999, 0.999, 2001)
    assert float(np.min(dw.evaluator(grid))) >= -1e-12
    b = bernoulli_rate(0.5)
    from spinldp.finite_jump import product_lagrangian

    for m in (-0.7, 0.0, 0.4):
        assert abs(float(b.evaluator(m)) - product_lagrangian(m, 0.5)) <= 1e-14


def test_rate_function_infinite_outside_interval():
    dw = double_well_rate(1.5)
    assert float(dw.evaluator(1.2)) == math.inf
    b = bernoulli_rate(0.3)
    assert float(b.evaluator(-1.5)) == math.inf


def test_tabulated_rate_function():
    grid = np.linspace(-1, 1, 41)
    vals = (grid - 0.2) ** 2 + 3.0
    tab = tabulated_rate(grid, vals)
    assert abs(float(tab.evaluator(0.2))) <= 1e-12
    assert tab.minimizers == (0.19999999999999996,) or abs(tab.minimizers[0] - 0.2) <= 0.05


def test_transition_cost_drift_free():
    cost = transition_cost(MODEL, 0.5, 0.5 * math.exp(-2.0), 1.0, opts=FAST)
    assert cost <= 1e-6
    cost2 = transition_cost(MODEL, 0.5, 0.0, 1.0, opts=FAST)
    problem = ActionProblem(MODEL, FixedStart(0.5), 0.0, 1.0)
    _, direct = minimize_action_fixed(problem, steps=FAST.steps_for(1.0), seed=FAST.seed)
    assert abs(cost2 - direct) <= 1e-12
    assert cost2 >= 0.0


def test_transition_cost_continuous_in_endpoint():
    vals = [transition_cost(MODEL, 0.5, m, 1.0, opts=FAST) for m in (0.0, 0.02, 0.04)]
    assert abs(vals[1] - vals[0]) <= 0.1
    assert abs(vals[2] - vals[1]) <= 0.1


def test_optimal_initials_typical_state():
    mins = optimal_initials(bernoulli_rate(0.5), 0.5 * math.exp(-6.0), 3.0, opts=FAST)
    assert len(mins) == 1
    assert abs(mins[0].gamma0 - 0.5) <= 5e-3
    assert mins[0].value <= 1e-4


def test_optimal_initials_double_well_pair_and_symmetry():
    mins = optimal_initials(double_well_rate(1.5), 0.0, 3.0, opts=FAST)
    assert len(mins) == 2
    g = sorted(m.gamma0 for m in mins)
    assert abs(g[0] + g[1]) <= 1e-6  # set symmetry under negation
    assert abs(abs(g[0]) - 0.8586) <= 2e-3
    assert abs(mins[0].value - mins[1].value) <= 1e-5


def test_optimal_initials_short_horizon_pins_start():
    mins = optimal_initials(double_well_rate(1.5), 0.0, 0.01,
                            opts=SolverOpts(dt_target=0.001, min_steps=60,
                                            max_iter=600, gtol=1e-8))
    assert len(mins) == 1
    assert abs(mins[0].gamma0) <= 0.02


def test_is_bad_double_well_long_horizon():
    flag, diag = is_bad(double_well_rate(1.5), 0.0, 3.0, epsilon=0.1, delta=0.05, opts=FAST)
    assert flag
    assert diag["plus_branch"][-1] > 0 > diag["minus_branch"][-1]
    assert diag["separation"] > 1.0


def test_is_bad_short_horizon_false():
    flag, diag = is_bad(double_well_rate(1.5), 0.0, 0.05, epsilon=0.1, delta=0.05, opts=FAST)
    assert not flag
    assert diag["n_minimizers"] == 1
    assert diag["plus_branch"] == []  # structural short-circuit


def test_is_bad_convex_rate_false():
    flag, diag = is_bad(bernoulli_rate(0.5), 0.0, 1.0, epsilon=0.1, delta=0.05, opts=FAST)
    assert not flag


def test_nature_nurture_labels():
    label_short, recs = nature_nurture_classify(double_well_rate(1.5), 0.0, 0.02,
                                                opts=SolverOpts(dt_target=0.001,
                                                                min_steps=60,
                                                                max_iter=600,
                                                                gtol=1e-8))
    assert label_short == "nature"
    label_long, recs = nature_nurture_classify(double_well_rate(1.5), 0.0, 3.0, opts=FAST)
    assert label_long == "nurture"
    for g0, lab, d_nat, d_nur in recs:
        assert d_nur < d_nat


def test_nature_nurture_single_crossover_in_T():
    # label flips nature -> nurture exactly once along a refined horizon grid
    labels = []
    for T in np.logspace(math.log10(0.02), math.log10(3.0), 12):
        opts = SolverOpts(dt_target=0.02, min_steps=80, max_iter=600, gtol=1e-8)
        lab, _ = nature_nurture_classify(double_well_rate(1.5), 0.0, float(T), opts=opts)
        labels.append(lab)
    collapsed = [lab for lab in labels if lab != "mixed"]
    changes = sum(1 for a, b in zip(collapsed, collapsed[1:]) if a != b)
    assert collapsed[0] == "nature" and collapsed[-1] == "nurture"
    assert changes == 1


def test_scan_records_and_determinism():
    T_grid = np.logspace(math.log10(0.1), math.log10(2.0), 3)
    mT_grid = [-0.3, 0.0, 0.3]
    opts = SolverOpts(dt_target=0.02, min_steps=80, max_iter=500, gtol=1e-8)
    res1 = badness_scan("bernoulli", (0.5,), T_grid, mT_grid, opts=opts, master_seed=5)
    res2 = badness_scan("bernoulli", (0.5,), T_grid, mT_grid, opts=opts, master_seed=5,
                        workers=3)
    assert res1 == res2
    assert len(res1.cells) == 9
    assert res1.bad_count() == 0
    for cell in res1.cells:
        assert cell.n_minimizers >= 1
        assert cell.error == ""
        if cell.n_minimizers == 1:
            assert not cell.bad  # structural: badness needs two minimizers
        assert not cell.bad  # |M*| = 1 everywhere for strictly convex I


def test_scan_empty_grid():
    res = badness_scan("bernoulli", (0.5,), [], [], master_seed=1)
    assert res.cells == ()
    assert res.bad_count() == 0


def test_scan_csv_schema(tmp_path):
    out = tmp_path / "scan.csv"
    badness_scan("double_well", (1.5,), [3.0], [0.0],
                 opts=FAST, master_seed=2, csv_path=out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "T,mT,n_minimizers,gamma0_list,cost,bad,label,d_nature,d_nurture,error"
    cell = lines[1].split(",")
    assert cell[2] == "2"  # two minimizers
    assert ";" in cell[3]  # semicolon-joined gamma0 list
    assert cell[5] == "1"  # bad


def test_descriptor_round_trip():
    dw = rate_function_from_descriptor("double_well", (1.5,))
    assert dw.kind == "double_well"
    with pytest.raises(ValueError):
        rate_function_from_descriptor("unknown", ())
