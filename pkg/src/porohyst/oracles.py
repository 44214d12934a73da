"""Slow, independent reference computations used by the self-test and the test suite.

Nothing here shares code with the operators it checks: the Preisach oracle
integrates the density by brute-force counting on a v-grid, and the
projection oracle runs projected gradient descent on 3x3 matrices.
"""

from __future__ import annotations

import numpy as np


def brute_preisach_G(path, rho, r_max, v_max, n_r=100_000, n_v=200, lam=None):
    """Preisach output after feeding ``path`` through the play family.

    The play values live on a midpoint ``n_r`` grid of ``(0, r_max]``; the
    inner integral sums ``rho`` over an even ``n_v`` cell grid of
    ``[-v_max, v_max]`` weighted by the overlap of each cell with
    ``[0, xi]``, so it is exact for densities constant in ``v`` on cells.
    """
    if n_v % 2:
        raise ValueError("n_v must be even so that v = 0 is a cell edge")
    dr = r_max / n_r
    r = (np.arange(n_r) + 0.5) * dr
    xi = np.zeros(n_r) if lam is None else np.asarray(lam(r), dtype=float)
    p0 = path[0]
    xi = np.maximum(p0 - r, np.minimum(xi, p0 + r))
    for p in path[1:]:
        xi = np.minimum(p + r, np.maximum(p - r, xi))
    dv = 2.0 * v_max / n_v
    lo = -v_max + np.arange(n_v) * dv
    mid = lo + 0.5 * dv
    upper = mid > 0
    total = 0.0
    for s in range(0, n_r, 4_000):
        rr = r[s : s + 4_000, None]
        xx = xi[s : s + 4_000, None]
        dens = rho(rr, mid[None, :])
        pos = np.clip((xx - lo) / dv, 0.0, 1.0) * upper
        neg = np.clip((lo + dv - xx) / dv, 0.0, 1.0) * ~upper
        total += np.sum(dens * (pos - neg)) * dv * dr
    return float(total)


def brute_preisach_path(path, rho, r_max, v_max, n_r=20_000, n_v=20):
    """Preisach output at every sample of ``path``, by the same brute-force counting.

    Returns an array of ``len(path)`` values; the play family is carried along
    the path so the cost is one density sweep per sample.
    """
    if n_v % 2:
        raise ValueError("n_v must be even so that v = 0 is a cell edge")
    dr = r_max / n_r
    r = (np.arange(n_r) + 0.5) * dr
    dv = 2.0 * v_max / n_v
    lo = -v_max + np.arange(n_v) * dv
    mid = lo + 0.5 * dv
    upper = mid > 0
    dens = rho(r[:, None], mid[None, :]) * dv * dr
    xi = np.maximum(path[0] - r, np.minimum(0.0, path[0] + r))
    out = []
    for k, p in enumerate(path):
        if k:
            xi = np.minimum(p + r, np.maximum(p - r, xi))
        pos = np.clip((xi[:, None] - lo) / dv, 0.0, 1.0) * upper
        neg = np.clip((lo + dv - xi[:, None]) / dv, 0.0, 1.0) * ~upper
        out.append(float(np.sum(dens * (pos - neg))))
    return np.array(out)


def uniform_G_virgin_ascent(p, r_hat=1.0):
    """Closed form of ``int_0^{r_hat} max(0, p - r) dr`` for the unit box density."""
    a = min(max(p, 0.0), r_hat)
    return a * p - 0.5 * a * a


def _sym_to_mandel(m):
    s = np.sqrt(2.0)
    return np.array([m[0, 0], m[1, 1], m[2, 2], s * m[1, 2], s * m[0, 2], s * m[0, 1]])


def _mandel_to_sym(v):
    s = np.sqrt(2.0)
    return np.array([
        [v[0], v[5] / s, v[4] / s],
        [v[5] / s, v[1], v[3] / s],
        [v[4] / s, v[3] / s, v[2]],
    ])


def _euclid_cylinder(m, sigma_y):
    """Frobenius projection of a 3x3 symmetric matrix onto ``{|dev m| <= sigma_y}``."""
    tr = np.trace(m) / 3.0
    dev = m - tr * np.eye(3)
    n = np.sqrt(np.sum(dev * dev))
    if n <= sigma_y:
        return m
    return tr * np.eye(3) + dev * (sigma_y / n)


def metric_projection_pg(tau, sigma_y, lam, mu, tol=1e-14, max_iter=100_000):
    """Minimise ``<tau - y, tau - y>`` with ``<x, y> = A^{-1}x : y`` over the yield set.

    ``A x = 2 mu x + lam tr(x) I``.  Accelerated projected gradient in
    matrix form with step ``1 / L``, ``L`` the largest eigenvalue of
    ``A^{-1}``.  Input and output are Mandel vectors.
    """
    T = _mandel_to_sym(np.asarray(tau, dtype=float))
    k = 3.0 * lam + 2.0 * mu

    def a_inv(x):
        return x / (2.0 * mu) - lam / (2.0 * mu * k) * np.trace(x) * np.eye(3)

    L = max(1.0 / (2.0 * mu), 1.0 / k)
    m = min(1.0 / (2.0 * mu), 1.0 / k)
    q = m / L
    beta = (1.0 - np.sqrt(q)) / (1.0 + np.sqrt(q))
    y = _euclid_cylinder(T, sigma_y)
    z = y.copy()
    for _ in range(max_iter):
        grad = -a_inv(T - z)
        y_new = _euclid_cylinder(z - grad / L, sigma_y)
        z = y_new + beta * (y_new - y)
        if np.max(np.abs(y_new - y)) <= tol * max(1.0, np.max(np.abs(y_new))):
            y = y_new
            break
        y = y_new
    return _sym_to_mandel(y)


def scalar_stop_reference(sig0, strains, a_p, sigma_y):
    """Scalar stop by explicit projection of each trial value; returns the stress history."""
    out = [sig0]
    s = sig0
    for k in range(1, len(strains)):
        trial = s + a_p * (strains[k] - strains[k - 1])
        s = sigma_y if trial > sigma_y else (-sigma_y if trial < -sigma_y else trial)
        out.append(s)
    return np.array(out)
