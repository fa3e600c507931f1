import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinldp.coefficients import (
    CoefficientMap,
    apply_D,
    empirical_average,
    evaluate_translations,
)
from spinldp.errors import DependenceSetTooLarge
from spinldp.lattice import LocalRateSpec, SpinConfiguration, nonlinear_generator_exact
from spinldp.seeding import child_seed, rng_from


def test_apply_d_constant_vanishes():
    one = CoefficientMap.constant(1, 3.5)
    assert apply_D(one).terms == {}


def test_apply_d_single_site_eigenfunction():
    f0 = CoefficientMap.basis(1, [(0,)])
    out = apply_D(f0, side=21)
    assert out.terms == {((0,),): -2.0}


def test_apply_d_pair_observable():
    f = CoefficientMap.basis(1, [(0,), (1,)])
    out = apply_D(f, side=21)
    assert out.terms == {((0,), (1,)): -2.0, ((-1,), (0,)): -2.0}


def test_apply_d_linearity_exact():
    rng = rng_from(3)
    f = CoefficientMap.build(1, [([(0,)], 0.3), ([(1,), (2,)], -0.7)])
    g = CoefficientMap.build(1, [([(0,)], 1.1), ([(0,), (3,)], 0.4)])
    lhs = apply_D(f.scale(2.0) + g.scale(-3.0), side=11)
    rhs = apply_D(f, side=11).scale(2.0) + apply_D(g, side=11).scale(-3.0)
    assert lhs.terms == rhs.terms


def test_repeated_offsets_cancel():
    # s_i^2 = 1: a doubled site drops out of the product set
    f = CoefficientMap.build(1, [([(0,), (0,), (1,)], 2.0)])
    assert f.terms == {((1,),): 2.0}


def test_d2_apply_d():
    f = CoefficientMap.basis(2, [(0, 0), (1, 0)])
    out = apply_D(f, side=9)
    assert out.terms == {
        ((0, 0), (1, 0)): -2.0,
        ((-1, 0), (0, 0)): -2.0,
    }


def test_empirical_average_basics():
    cfg = SpinConfiguration.random(1, 31, seed=5)
    one = CoefficientMap.constant(1, 1.0)
    assert empirical_average(one, cfg.values) == 1.0
    f0 = CoefficientMap.basis(1, [(0,)])
    assert abs(empirical_average(f0, cfg.values) - cfg.magnetization()) <= 1e-15


def test_empirical_average_against_site_by_site():
    rng = rng_from(11)
    cfg = SpinConfiguration.random(1, 11, seed=7)
    f = CoefficientMap.build(
        1, [([(0,), (2,)], 0.5), ([(1,)], -1.2), ([(0,), (1,), (3,)], 0.25)]
    )
    direct = 0.0
    s = cfg.values
    for j in range(11):
        val = 0.0
        for key, coef in f.terms.items():
            prod = 1.0
            for (o,) in key:
                prod *= s[(j + o) % 11]
            val += coef * prod
        direct += val
    assert abs(empirical_average(f, s) - direct / 11) <= 1e-13


def test_dependence_set_too_large():
    f = CoefficientMap.basis(1, [(0,), (6,)])
    cfg = SpinConfiguration.random(1, 11, seed=1)
    with pytest.raises(DependenceSetTooLarge):
        empirical_average(f, cfg.values)


def test_translation_covariance_exhaustive_small_torus():
    # sum_j [f(tau_j s^k) - f(tau_j s)] equals (Df)(tau_k s), checked over
    # every configuration of a side-7 ring
    side = 7
    f = CoefficientMap.build(1, [([(0,)], 1.0), ([(0,), (1,)], -0.5), ([(2,)], 0.25)])
    df = apply_D(f, side=side)
    for bits in itertools.product((-1, 1), repeat=side):
        s = np.array(bits, dtype=np.int8)
        base = evaluate_translations(f, s).sum()
        df_vals = evaluate_translations(df, s)
        for k in range(side):
            flipped = s.copy()
            flipped[k] = -flipped[k]
            lhs = evaluate_translations(f, flipped).sum() - base
            assert abs(lhs - df_vals[k]) <= 1e-10


def test_nonlinear_generator_identity_random():
    worst = 0.0
    for i in range(25):
        rng = rng_from(child_seed(21, i))
        dim, side = (1, 21) if i % 2 == 0 else (2, 9)
        cfg = SpinConfiguration.random(dim, side, child_seed(22, i))
        rates = LocalRateSpec.random_table(dim, 1, child_seed(23, i))
        entries = []
        for _ in range(int(rng.integers(1, 4))):
            size = int(rng.integers(1, 4))
            offs = set()
            while len(offs) < size:
                offs.add(tuple(int(x) for x in rng.integers(-3, 4, size=dim)))
            entries.append((tuple(sorted(offs)), float(rng.uniform(-0.15, 0.15))))
        f = CoefficientMap.build(dim, entries)
        lhs, rhs = nonlinear_generator_exact(cfg, f, rates)
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-12


def test_nonlinear_generator_single_site_reduces_to_hamiltonian():
    from spinldp.magnetization import mag_hamiltonian

    cfg = SpinConfiguration.random(1, 41, seed=2)
    rates = LocalRateSpec.constant(1.0, 1)
    lam = 0.61
    f = CoefficientMap.basis(1, [(0,)]).scale(lam)
    lhs, rhs = nonlinear_generator_exact(cfg, f, rates)
    expect = mag_hamiltonian(cfg.magnetization(), lam)
    assert abs(rhs - expect) <= 1e-12
    assert abs(lhs - expect) <= 1e-12


def test_zero_function_gives_zero():
    cfg = SpinConfiguration.random(1, 11, seed=3)
    rates = LocalRateSpec.random_table(1, 1, seed=4)
    f = CoefficientMap.build(1, [])
    lhs, rhs = nonlinear_generator_exact(cfg, f, rates)
    assert lhs == 0.0 and rhs == 0.0


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_apply_d_linearity_property(a, b):
    f = CoefficientMap.build(1, [([(0,)], 0.4), ([(1,), (3,)], -0.9)])
    g = CoefficientMap.build(1, [([(2,)], 0.7)])
    lhs = apply_D(f.scale(a) + g.scale(b))
    rhs = apply_D(f).scale(a) + apply_D(g).scale(b)
    keys = set(lhs.terms) | set(rhs.terms)
    for k in keys:
        assert abs(lhs.terms.get(k, 0.0) - rhs.terms.get(k, 0.0)) <= 1e-12
