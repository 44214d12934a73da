import os
import subprocess
import sys

import numpy as np
import pytest

from porohyst import _backend, kernels

needs_numba = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not installed")


def _inputs(rng, n=300, m=64):
    r = (np.arange(m) + 0.5) / m * 2.0
    xi = np.clip(rng.normal(size=(n, m)) * 0.3, -r, r)
    p = rng.uniform(-2.5, 2.5, n)
    return xi, p, r


@needs_numba
def test_play_twins_agree_exactly(rng):
    xi, p, r = _inputs(rng)
    np.testing.assert_array_equal(kernels.play_batch_numpy(xi, p, r), kernels.play_batch_jit(xi, p, r))


@needs_numba
def test_box_preisach_twins_agree(rng):
    xi, p, r = _inputs(rng)
    wr = np.where(r <= 1.0, 0.5, 0.0) * (r[1] - r[0])
    a = kernels.box_preisach_numpy(xi, p, r, wr, 0.8)
    b = kernels.box_preisach_jit(xi, p, r, wr, 0.8)
    np.testing.assert_array_equal(a[0], b[0])
    for x, y in zip(a[1:], b[1:]):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-13)


@needs_numba
def test_stop_twins_agree(rng):
    sig = rng.normal(size=(200, 6)) * 0.05
    deps = rng.normal(size=(200, 6)) * 0.1
    a = kernels.radial_return_numpy(sig, deps, 1.3, 0.7, 0.05)
    b = kernels.radial_return_jit(sig, deps, 1.3, 0.7, 0.05)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-14)
    a = kernels.scalar_stop_numpy(sig[:, 0].copy(), deps[:, 0].copy(), 3.0, 0.05)
    b = kernels.scalar_stop_jit(sig[:, 0].copy(), deps[:, 0].copy(), 3.0, 0.05)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-15)


def test_box_preisach_heat_identity(rng):
    # dq = dG0 * p - dV0 at every point
    xi, p, r = _inputs(rng)
    wr = np.full(r.size, 0.5 * (r[1] - r[0]))
    G_old = (wr * np.clip(xi, -1, 1)).sum(axis=1)
    V_old = (wr * 0.5 * np.clip(xi, -1, 1) ** 2).sum(axis=1)
    _, G0, V0, dq, _ = kernels.box_preisach(xi, p, r, wr, 1.0)
    np.testing.assert_allclose(dq, (G0 - G_old) * p - (V0 - V_old), atol=1e-12)
    assert np.all(dq >= 0)


def test_box_preisach_slope_matches_difference_quotient(rng):
    xi, p, r = _inputs(rng, n=50)
    wr = np.full(r.size, 0.5 * (r[1] - r[0]))
    _, G0, _, _, dGdp = kernels.box_preisach(xi, p, r, wr, 10.0)
    h = 1e-7
    _, G1, _, _, _ = kernels.box_preisach(xi, p + h, r, wr, 10.0)
    np.testing.assert_allclose(dGdp, (G1 - G0) / h, atol=1e-5)


def test_disable_flag_selects_numpy():
    env = dict(os.environ, POROHYST_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from porohyst import kernels, backend_name; "
                               "print(backend_name(), kernels.radial_return.__name__)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split() == ["numpy", "radial_return_numpy"]


@needs_numba
def test_backends_give_same_short_run(tmp_path):
    script = (
        "import json, sys\n"
        "from porohyst import config\n"
        "from porohyst.solver import Simulation\n"
        "c = config.from_preset('smooth_1d', solver__t_end=0.02)\n"
        "s = Simulation(c.params, c.solver)\n"
        "r = s.run(data=c.initial_data())\n"
        "print(json.dumps({'p': list(r.state.p), 'theta': list(r.state.theta)}))\n"
    )
    import json

    runs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, POROHYST_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True)
        runs[flag] = json.loads(out.stdout)
    for k in ("p", "theta"):
        np.testing.assert_allclose(runs["0"][k], runs["1"][k], rtol=0, atol=1e-12)
