"""Per-point hysteresis kernels.

Three kernels dominate the runtime of a simulation: the play update of a
Preisach memory bank, and the stop (radial return) update for the scalar and
the tensorial plastic stress.  Each exists as a numba loop (``*_jit``) and as
a vectorised numpy function (``*_numpy``); the public name is bound to one of
them according to :mod:`porohyst._backend`.

Arrays follow the layout ``(n_points, ...)``.  Symmetric tensors are stored
in Mandel form ``[xx, yy, zz, sqrt2*yz, sqrt2*xz, sqrt2*xy]`` so the
Frobenius product is the plain dot product.
"""

import numpy as np

from ._backend import USE_NUMBA, njit, prange

# --------------------------------------------------------------------------
# play family
# --------------------------------------------------------------------------


def play_batch_numpy(xi, p, r):
    """Catch-up update ``min(p + r, max(p - r, xi))`` for every point and node."""
    p = np.asarray(p, dtype=float)[:, None]
    return np.minimum(p + r, np.maximum(p - r, xi))


@njit(cache=True, parallel=True)
def play_batch_jit(xi, p, r):
    npts, nr = xi.shape
    out = np.empty_like(xi)
    for i in prange(npts):
        pi = p[i]
        for m in range(nr):
            x = xi[i, m]
            lo = pi - r[m]
            if x < lo:
                x = lo
            hi = pi + r[m]
            if x > hi:
                x = hi
            out[i, m] = x
    return out


def box_preisach_numpy(xi_old, p, r, wr, v_hat):
    """Preisach update for densities ``rho(r, v) = a(r) * 1[|v| <= v_hat]``.

    ``wr`` holds the quadrature weight times ``a(r_m)`` for every r-node.
    Returns ``(xi_new, G0, V0, dq, dGdp)`` where ``dq`` is the per-point
    dissipated energy of the step and ``dGdp`` the slope of the new output
    with respect to the new input (one-sided, for Newton iterations).
    """
    p = np.asarray(p, dtype=float)
    pc = p[:, None]
    lo = pc - r
    hi = pc + r
    xi_new = np.minimum(hi, np.maximum(lo, xi_old))
    active = (xi_old < lo) | (xi_old > hi)
    c = np.clip(xi_new, -v_hat, v_hat)
    co = np.clip(xi_old, -v_hat, v_hat)
    G0 = c @ wr
    V0 = (0.5 * c * c) @ wr
    dq = ((c - co) * (pc - 0.5 * (c + co))) @ wr
    dGdp = (active & (np.abs(xi_new) < v_hat)).astype(float) @ wr
    return xi_new, G0, V0, dq, dGdp


@njit(cache=True, parallel=True)
def box_preisach_jit(xi_old, p, r, wr, v_hat):
    npts, nr = xi_old.shape
    xi_new = np.empty_like(xi_old)
    G0 = np.zeros(npts)
    V0 = np.zeros(npts)
    dq = np.zeros(npts)
    dGdp = np.zeros(npts)
    for i in prange(npts):
        pi = p[i]
        g = 0.0
        v = 0.0
        q = 0.0
        d = 0.0
        for m in range(nr):
            xo = xi_old[i, m]
            lo = pi - r[m]
            hi = pi + r[m]
            xn = xo
            active = False
            if xo < lo:
                xn = lo
                active = True
            if xn > hi:
                xn = hi
                active = True
            xi_new[i, m] = xn
            w = wr[m]
            if w == 0.0:
                continue
            c = min(max(xn, -v_hat), v_hat)
            co = min(max(xo, -v_hat), v_hat)
            g += w * c
            v += w * 0.5 * c * c
            q += w * ((c - co) * (pi - 0.5 * (c + co)))
            if active and abs(xn) < v_hat:
                d += w
        G0[i] = g
        V0[i] = v
        dq[i] = q
        dGdp[i] = d
    return xi_new, G0, V0, dq, dGdp


# --------------------------------------------------------------------------
# stop operators
# --------------------------------------------------------------------------


def scalar_stop_numpy(sig_old, deps, a_p, sigma_y):
    """Scalar stop on the interval ``[-sigma_y, sigma_y]`` with modulus ``a_p``.

    Returns ``(sig_new, deps_p, dq)``.  ``dq`` is assembled from two
    nonnegative pieces, ``sigma_y*|deps_p| + (dsig)^2 / (2 a_p)``, which equals
    ``sig_new*deps - (sig_new^2 - sig_old^2) / (2 a_p)`` in exact arithmetic.
    """
    trial = sig_old + a_p * deps
    sig_new = np.clip(trial, -sigma_y, sigma_y)
    deps_p = (trial - sig_new) / a_p
    dsig = sig_new - sig_old
    dq = sigma_y * np.abs(deps_p) + 0.5 * dsig * dsig / a_p
    return sig_new, deps_p, dq


@njit(cache=True, parallel=True)
def scalar_stop_jit(sig_old, deps, a_p, sigma_y):
    n = sig_old.shape[0]
    sig_new = np.empty(n)
    deps_p = np.empty(n)
    dq = np.empty(n)
    for i in prange(n):
        trial = sig_old[i] + a_p * deps[i]
        s = min(max(trial, -sigma_y), sigma_y)
        ep = (trial - s) / a_p
        ds = s - sig_old[i]
        sig_new[i] = s
        deps_p[i] = ep
        dq[i] = sigma_y * abs(ep) + 0.5 * ds * ds / a_p
    return sig_new, deps_p, dq


def radial_return_numpy(sig_old, deps, mu_p, lam_p, sigma_y):
    """Von Mises stop in Mandel storage with isotropic ``A^p = (lam_p, mu_p)``.

    Returns ``(sig_new, deps_p, dq)``.  The plastic increment is built from the
    deviatoric return vector so it is exactly zero on elastic steps.
    """
    tr_e = deps[:, 0] + deps[:, 1] + deps[:, 2]
    trial = sig_old + 2.0 * mu_p * deps
    trial[:, :3] += (lam_p * tr_e)[:, None]
    tr = trial[:, 0] + trial[:, 1] + trial[:, 2]
    s = trial.copy()
    s[:, :3] -= (tr / 3.0)[:, None]
    ns = np.sqrt(np.einsum("ij,ij->i", s, s))
    plastic = ns > sigma_y
    factor = np.where(plastic, sigma_y / np.where(plastic, ns, 1.0), 1.0)
    sig_new = s * factor[:, None]
    sig_new[:, :3] += (tr / 3.0)[:, None]
    deps_p = s * ((1.0 - factor) / (2.0 * mu_p))[:, None]
    dsig = sig_new - sig_old
    tr_d = dsig[:, 0] + dsig[:, 1] + dsig[:, 2]
    dev_d = dsig.copy()
    dev_d[:, :3] -= (tr_d / 3.0)[:, None]
    half_metric = 0.5 * (
        np.einsum("ij,ij->i", dev_d, dev_d) / (2.0 * mu_p)
        + tr_d * tr_d / (3.0 * (2.0 * mu_p + 3.0 * lam_p))
    )
    dq = sigma_y * np.sqrt(np.einsum("ij,ij->i", deps_p, deps_p)) + half_metric
    return sig_new, deps_p, dq


@njit(cache=True, parallel=True)
def radial_return_jit(sig_old, deps, mu_p, lam_p, sigma_y):
    n = sig_old.shape[0]
    sig_new = np.empty((n, 6))
    deps_p = np.zeros((n, 6))
    dq = np.empty(n)
    k3 = 3.0 * (2.0 * mu_p + 3.0 * lam_p)
    for i in prange(n):
        tr_e = deps[i, 0] + deps[i, 1] + deps[i, 2]
        t = np.empty(6)
        for c in range(6):
            t[c] = sig_old[i, c] + 2.0 * mu_p * deps[i, c]
        for c in range(3):
            t[c] += lam_p * tr_e
        tr = t[0] + t[1] + t[2]
        for c in range(3):
            t[c] -= tr / 3.0
        ns = 0.0
        for c in range(6):
            ns += t[c] * t[c]
        ns = np.sqrt(ns)
        factor = 1.0
        if ns > sigma_y:
            factor = sigma_y / ns
        nep = 0.0
        for c in range(6):
            sig_new[i, c] = t[c] * factor
            ep = t[c] * ((1.0 - factor) / (2.0 * mu_p))
            deps_p[i, c] = ep
            nep += ep * ep
        for c in range(3):
            sig_new[i, c] += tr / 3.0
        d = np.empty(6)
        for c in range(6):
            d[c] = sig_new[i, c] - sig_old[i, c]
        tr_d = d[0] + d[1] + d[2]
        for c in range(3):
            d[c] -= tr_d / 3.0
        dd = 0.0
        for c in range(6):
            dd += d[c] * d[c]
        dq[i] = sigma_y * np.sqrt(nep) + 0.5 * (dd / (2.0 * mu_p) + tr_d * tr_d / k3)
    return sig_new, deps_p, dq


if USE_NUMBA:
    play_batch = play_batch_jit
    box_preisach = box_preisach_jit
    scalar_stop = scalar_stop_jit
    radial_return = radial_return_jit
else:
    play_batch = play_batch_numpy
    box_preisach = box_preisach_numpy
    scalar_stop = scalar_stop_numpy
    radial_return = radial_return_numpy
