import dataclasses
import math

import numpy as np
import pytest

from porohyst import constitutive as cst
from porohyst import diagnostics as dg


def test_defaults_are_admissible():
    assert cst.validate(cst.MaterialParams())


@pytest.mark.parametrize("change,clause", [
    ({"growth_a": 1.0, "growth_b": 1.0}, "conductivity-growth"),
    ({"growth_a": 0.1, "growth_b": 6.0}, "conductivity-growth"),
    ({"a_kappa": 2.0}, "conductivity-growth"),
    ({"kappa1": 0.0}, "conductivity-growth"),
    ({"mu0": 1.0, "mu1": 0.5}, "mobility-bounds"),
    ({"eta": 0.0}, "viscosity"),
    ({"c0": -1.0}, "positivity"),
    ({"sigma_y": 0.0}, "yield-set"),
    ({"lame_p_mu": 0.0}, "elasticity-tensor"),
    ({"p_star_amp": 50.0}, "memory-cutoff"),
    ({"theta_star": 0.5}, "boundary-temperature"),
    ({"gamma_p": 0.0}, "boundary-permeability"),
])
def test_validator_names_the_clause(change, clause):
    p = dataclasses.replace(cst.MaterialParams(), **change)
    with pytest.raises(cst.HypothesisViolation) as info:
        cst.validate(p)
    assert info.value.clause == clause
    assert clause in str(info.value)


def test_cutoffs():
    z = np.array([-7.0, -2.0, 0.0, 3.0, 6.0])
    Q, K, Kh = cst.cutoffs(z, 5.0)
    np.testing.assert_array_equal(Q, [0, 0, 0, 3, 5])
    np.testing.assert_array_equal(K, [-2, 0, 0, 0, 1])
    np.testing.assert_allclose(Kh, [12, 0, 0, 0, 5.5])
    np.testing.assert_array_equal(cst.cutoff_K_slope(z, 5.0), [1, 0, 0, 0, 1])
    # Khat is the primitive of K' s
    s = np.linspace(0, 9, 90001)
    integrand = cst.cutoff_K_slope(s, 5.0) * s
    assert np.trapezoid(integrand, s) == pytest.approx(cst.cutoffs(9.0, 5.0)[2], rel=1e-4)  # O(h) from the jump at R
    with pytest.raises(ValueError):
        cst.cutoffs(1.0, 0.0)


def test_laws():
    p = cst.MaterialParams()
    mob, sat, cond = cst.mobility(p), cst.saturation_f(p), cst.conductivity(p)
    x = np.linspace(-30, 30, 601)
    assert np.all((mob(x) >= p.mu0) & (mob(x) <= p.mu1))
    h = 1e-6
    np.testing.assert_allclose((mob.primitive(x + h) - mob.primitive(x - h)) / (2 * h), mob(x), atol=1e-8)
    for m in (-3.0, 0.0, 2.5):
        assert mob.primitive(mob.inverse_primitive(m)) == pytest.approx(m, abs=1e-10)
    np.testing.assert_allclose((sat(x + h) - sat(x - h)) / (2 * h), sat.derivative(x), atol=1e-8)
    np.testing.assert_allclose((sat.primitive(x + h) - sat.primitive(x - h)) / (2 * h), sat(x), atol=1e-7)
    np.testing.assert_allclose(sat.derivative(x) * (1 + x * x), p.f1 / math.pi)
    assert np.all(sat.potential(x) >= 0)
    assert cond(0.0) == pytest.approx(p.kappa0 + p.kappa1)
    t = np.array([10.0, 100.0])
    ratio = (cond(t) - p.kappa0) / t ** (1 + p.a_kappa)
    assert ratio[1] == pytest.approx(p.kappa1, rel=1e-3)


def test_derived_tensors():
    p = cst.MaterialParams()
    assert p.Ae.mu == p.lame_e_mu
    assert p.B.mu == p.eta and p.B.lam == p.omega
    assert p.Z.sigma_y == p.sigma_y
    assert p.p_star(0.25) == pytest.approx(p.p_star_mean + p.p_star_amp)


def test_q_star_bound():
    # 2 + b - r_max <= 0 gives eta_sup = 1 and q* = 4
    assert dg.q_star_bound(0.25, 1.0) == pytest.approx(4.0)
    a, b = 0.25, 5.0
    r_max = 16 / 5 + 6 * a / 5
    eta = (2 * r_max - 1 - b) / (2 + b - r_max)
    assert dg.q_star_bound(a, b) == pytest.approx(2 * (1 + eta) / eta)
