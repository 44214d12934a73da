import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from porohyst import oracles, plasticity as pl

mandel = st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6).map(np.array)


def test_mandel_round_trip(rng):
    m = rng.normal(size=(3, 3))
    m = m + m.T
    v = pl.from_matrix(m)
    np.testing.assert_allclose(pl.to_matrix(v), m, atol=1e-15)
    assert pl.inner(v, v) == pytest.approx(np.sum(m * m))
    assert pl.trace(v) == pytest.approx(np.trace(m))


def test_tensor_solve_inverts_apply(rng):
    A = pl.IsotropicTensor4(0.7, 1.3)
    x = rng.normal(size=(5, 6))
    np.testing.assert_allclose(A.solve(A.apply(x)), x, atol=1e-14)
    with pytest.raises(ValueError):
        pl.IsotropicTensor4(-1.0, 1.0)


def test_viscosity_tensor_layout():
    B = pl.IsotropicTensor4.viscosity(eta=0.3, omega=0.2)
    e = np.array([1.0, 0, 0, 0, 0, 0])
    np.testing.assert_allclose(B.apply(e), [0.8, 0.2, 0.2, 0, 0, 0])


@settings(max_examples=200, deadline=None)
@given(mandel, st.floats(0.05, 2.0))
def test_projection_is_admissible_and_idempotent(tau, sy):
    A = pl.IsotropicTensor4(1.0, 1.0)
    Z = pl.YieldSet(sy)
    y = pl.project_Z(tau, Z, A)
    assert Z.contains(y)
    np.testing.assert_allclose(pl.project_Z(y, Z, A), y, atol=1e-14)
    assert pl.trace(y) == pytest.approx(pl.trace(tau), abs=1e-12)


def test_projection_variational_inequality(rng):
    # <tau - P tau, z - P tau> <= 0 for admissible z in the A^{-1} metric
    A = pl.IsotropicTensor4(0.4, 0.9)
    Z = pl.YieldSet(0.3)
    for _ in range(200):
        tau = rng.normal(size=6) * 2
        y = pl.project_Z(tau, Z, A)
        z = pl.project_Z(rng.normal(size=6) * 2, Z, A)
        assert A.metric(tau - y, z - y) <= 1e-12


def test_projection_matches_oracle(rng):
    A = pl.IsotropicTensor4(2.0, 0.5)
    Z = pl.YieldSet(0.4)
    tau = rng.normal(size=6) * 3
    np.testing.assert_allclose(pl.project_Z(tau, Z, A), oracles.metric_projection_pg(tau, 0.4, 2.0, 0.5), atol=1e-10)


def test_stop_step_heat_identity(rng):
    A = pl.IsotropicTensor4(1.0, 1.0)
    Z = pl.YieldSet(0.2)
    st_ = pl.stop_init(np.zeros(6), A, Z)
    for _ in range(100):
        de = rng.normal(size=6) * 0.2
        new, dq, dep = pl.stop_step(st_, de, A, Z)
        ds = new.sigma - st_.sigma
        assert dq == pytest.approx(Z.sigma_y * pl.norm(dep) + 0.5 * A.metric(ds, ds), abs=1e-12)
        # heat equals sigma_new : deps minus the change of stored energy
        stored = 0.5 * (A.metric(new.sigma, new.sigma) - A.metric(st_.sigma, st_.sigma))
        assert dq == pytest.approx(float(pl.inner(new.sigma, de)) - stored, abs=1e-12)
        assert new.dissipation == pytest.approx(st_.dissipation + dq)
        st_ = new


def test_elastic_step_only_releases_the_increment_term():
    A = pl.IsotropicTensor4(1.0, 1.0)
    Z = pl.YieldSet(1.0)
    st_ = pl.stop_init(np.zeros(6), A, Z)
    new, dq, dep = pl.stop_step(st_, np.full(6, 0.01), A, Z)
    assert not np.any(dep)
    assert dq == pytest.approx(0.5 * A.metric(new.sigma, new.sigma))


def test_scalar_stop_matches_reference(rng):
    strains = np.cumsum(rng.normal(size=300) * 0.05)
    ref = oracles.scalar_stop_reference(0.0, strains, 3.0, 0.1)
    sig = 0.0
    out = [sig]
    for k in range(1, strains.size):
        s, _, dq = pl.scalar_stop_step(sig, strains[k] - strains[k - 1], 3.0, 0.1)
        assert dq[0] >= 0
        sig = float(s[0])
        out.append(sig)
    np.testing.assert_allclose(out, ref, atol=1e-15)


def test_minkowski_polar():
    Z = pl.YieldSet(0.5)
    dev = np.array([1.0, -1.0, 0, 0, 0, 0])
    assert pl.minkowski_polar(dev, Z) == pytest.approx(0.5 * math.sqrt(2))
    assert pl.minkowski_polar(np.array([1.0, 0, 0, 0, 0, 0]), Z) == math.inf


def test_vp_energy_and_p_operator():
    Ae = pl.IsotropicTensor4(1.0, 1.0)
    Ap = pl.IsotropicTensor4(1.0, 1.0)
    st_ = pl.PlasticPointState(np.array([0.1, -0.1, 0, 0, 0, 0]))
    eps = np.array([0.01, 0, 0, 0, 0, 0])
    np.testing.assert_allclose(pl.p_operator(eps, st_, Ae), Ae.apply(eps) + st_.sigma)
    expected = 0.5 * pl.inner(Ae.apply(eps), eps) + 0.5 * Ap.metric(st_.sigma, st_.sigma)
    assert pl.vp_energy(eps, st_, Ae, Ap) == pytest.approx(expected)


def test_bank_scalar_and_tensor_agree_with_points(rng):
    A = pl.IsotropicTensor4(1.0, 1.0)
    Z = pl.YieldSet(0.1)
    bank = pl.PlasticBank.create(np.zeros((4, 6)), A, Z)
    pts = [pl.stop_init(np.zeros(6), A, Z) for _ in range(4)]
    for _ in range(20):
        de = rng.normal(size=(4, 6)) * 0.05
        bank.commit(bank.trial(de))
        pts = [pl.stop_step(p, d, A, Z)[0] for p, d in zip(pts, de)]
    for i, p in enumerate(pts):
        np.testing.assert_allclose(bank[i].sigma, p.sigma, atol=1e-15)
        assert bank.dissipation[i] == pytest.approx(p.dissipation, abs=1e-14)
    sb = pl.PlasticBank.create(np.array([[0.5], [-0.01]]), A, Z)
    assert sb.scalar
    np.testing.assert_allclose(sb.sigma[:, 0], [0.1, -0.03])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-0.5, 3.0), st.floats(0.2, 3.0))
def test_stop_is_lipschitz_in_the_strain_path(seed, lam_ratio, mu):
    # the projection is nonexpansive in the A^{-1} metric, which gives the
    # Euclidean constant C = largest eigenvalue of A = max(2 mu, 3 lam + 2 mu)
    lam = lam_ratio * mu
    if 3 * lam + 2 * mu <= 0:
        lam = 0.0
    A = pl.IsotropicTensor4(lam, mu)
    Z = pl.YieldSet(0.2)
    C = max(2 * mu, A.bulk3)
    rng = np.random.default_rng(seed)
    e1 = np.cumsum(rng.normal(size=(40, 6)) * 0.1, axis=0)
    e2 = e1 + np.cumsum(rng.normal(size=(40, 6)) * 0.01, axis=0)
    s1, s2 = pl.stop_init(e1[0], A, Z), pl.stop_init(e2[0], A, Z)
    budget = float(pl.norm(e1[0] - e2[0]))
    for k in range(1, 40):
        s1 = pl.stop_step(s1, e1[k] - e1[k - 1], A, Z)[0]
        s2 = pl.stop_step(s2, e2[k] - e2[k - 1], A, Z)[0]
        budget += float(pl.norm((e1[k] - e1[k - 1]) - (e2[k] - e2[k - 1])))
        assert float(pl.norm(s1.sigma - s2.sigma)) <= C * budget * (1 + 1e-12) + 1e-14
