"""Operator-level property checks behind ``porohyst selftest``.

Operators are looked up through their modules at call time (``hy.play_step``
rather than an imported name) so that a patched operator is what gets tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constitutive as cst
from . import hysteresis as hy
from . import oracles
from . import plasticity as pl


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _dyadic(rng, size, lo, hi, bits=24):
    """Random values on a 2^-bits lattice, so sums and differences are exact."""
    scale = 2.0 ** bits
    return np.round(rng.uniform(lo, hi, size) * scale) / scale


def check_play_identities(rng, n_seq=2000, length=100):
    """Energy identity and monotonicity of the catch-up play on every step."""
    p = _dyadic(rng, (n_seq, length), -5.0, 5.0)
    r = _dyadic(rng, n_seq, 0.0, 3.0)
    r = np.where(r == 0.0, 2.0 ** -24, r)
    xi = np.clip(np.zeros(n_seq), p[:, 0] - r, p[:, 0] + r)
    bad_e = bad_m = 0
    for k in range(1, length):
        xi_new = hy.play_step(xi, p[:, k], r)
        dxi = xi_new - xi
        dp = p[:, k] - p[:, k - 1]
        bad_e += int(np.count_nonzero(dxi * (p[:, k] - xi_new) != r * np.abs(dxi)))
        bad_m += int(np.count_nonzero(dxi * dp < dxi * dxi))
        xi = xi_new
    ok = bad_e == 0 and bad_m == 0
    return CheckResult("play energy identity and monotonicity", ok,
                       f"{bad_e} identity and {bad_m} monotonicity failures over {n_seq * (length - 1)} steps")


def check_play_lipschitz(rng, n_pairs=500, length=50):
    worst = 0.0
    for _ in range(n_pairs):
        r = rng.uniform(0.01, 3.0)
        p1 = rng.uniform(-5, 5, length)
        p2 = p1 + rng.uniform(-0.5, 0.5, length)
        x1 = hy.play_init(hy.InitialMemoryCurve.zero(5.0), p1[0], r)
        x2 = hy.play_init(hy.InitialMemoryCurve.zero(5.0), p2[0], r)
        gap = 0.0
        for k in range(1, length):
            x1 = hy.play_step(x1, p1[k], r)
            x2 = hy.play_step(x2, p2[k], r)
            gap = max(gap, abs(x1 - x2))
        worst = max(worst, gap - float(np.max(np.abs(p1 - p2))))
    return CheckResult("play Lipschitz bound", worst <= 1e-12, f"max excess {worst:.3e}")


def check_preisach_oracle():
    dens = hy.BoxDensity(1.0, 1.0, 1.0)
    grid = hy.RGrid.uniform(1.0, 256)
    s = hy.preisach_init(hy.InitialMemoryCurve.zero(1.0), 0.0, grid, dens)
    a, _, _, _ = hy.preisach_step(s, 0.6, dens)
    b1, _, _, _ = hy.preisach_step(s, 1.0, dens)
    b2, _, _, _ = hy.preisach_step(b1, 0.5, dens)
    err = max(abs(a.G0 - 0.18), abs(b2.G0 - 0.4375))
    return CheckResult("Preisach output against closed form", err <= 1e-3, f"max error {err:.3e}")


def check_preisach_heat(rng, n_paths=200, length=40):
    dens = hy.BoxDensity(0.5, 1.0, 1.0)
    grid = hy.RGrid.uniform(2.0, 64)
    worst = math.inf
    for _ in range(n_paths):
        s = hy.preisach_init(hy.InitialMemoryCurve.zero(1.0), 0.0, grid, dens)
        for p in rng.uniform(-1.5, 1.5, length):
            s, _, _, dq = hy.preisach_step(s, p, dens)
            worst = min(worst, dq)
    return CheckResult("Preisach heat nonnegative", worst >= 0.0, f"min step heat {worst:.3e}")


def check_rate_independence(rng):
    dens = hy.BoxDensity(1.0, 1.0, 1.0)
    grid = hy.RGrid.uniform(1.0, 128)
    turns = rng.uniform(-1, 1, 8)
    coarse = np.concatenate([[0.0], turns])
    fine = [0.0]
    for a, b in zip(coarse[:-1], coarse[1:]):
        fine.extend(list(a + (b - a) * np.sort(rng.uniform(0, 1, rng.integers(1, 6))))[:-1] + [b])
    outs = []
    for path in (coarse, np.array(fine)):
        s = hy.preisach_init(hy.InitialMemoryCurve.zero(1.0), 0.0, grid, dens)
        for p in path[1:]:
            s, _, _, _ = hy.preisach_step(s, p, dens)
        outs.append(s.xi)
    same = bool(np.array_equal(outs[0], outs[1]))
    return CheckResult("Preisach rate independence", same, "memory curves identical" if same else "memory differs")


def check_projection_oracle(rng, n=100):
    worst = 0.0
    for _ in range(n):
        mu = rng.uniform(0.2, 2.0)
        lam = rng.uniform(-0.6 * mu, 2.0)
        Ap = pl.IsotropicTensor4(lam, mu)
        Z = pl.YieldSet(rng.uniform(0.1, 2.0))
        tau = rng.normal(size=6) * 3.0
        ref = oracles.metric_projection_pg(tau, Z.sigma_y, lam, mu)
        worst = max(worst, float(np.max(np.abs(pl.project_Z(tau, Z, Ap) - ref))))
    return CheckResult("yield-set projection against projected gradient", worst <= 1e-8, f"max error {worst:.3e}")


def check_plastic_flow(rng, n_paths=100, length=30):
    Ap = pl.IsotropicTensor4(1.0, 1.0)
    Z = pl.YieldSet(0.5)
    worst_tr = 0.0
    min_dq = math.inf
    outside = 0
    for _ in range(n_paths):
        st = pl.stop_init(np.zeros(6), Ap, Z)
        for de in rng.normal(size=(length, 6)) * 0.3:
            st, dq, dep = pl.stop_step(st, de, Ap, Z)
            nrm = float(pl.norm(dep))
            if nrm > 0:
                worst_tr = max(worst_tr, abs(float(pl.trace(dep))) / nrm)
            min_dq = min(min_dq, dq)
            outside += int(not Z.contains(st.sigma))
    ok = worst_tr <= 1e-12 and min_dq >= 0.0 and outside == 0
    return CheckResult("plastic flow deviatoric, heat nonnegative, stress admissible", ok,
                       f"max |tr|/|.| {worst_tr:.3e}, min heat {min_dq:.3e}, {outside} inadmissible")


def check_constitutive():
    prm = cst.MaterialParams()
    msgs = []
    try:
        cst.validate(prm)
    except cst.HypothesisViolation as exc:
        msgs.append(f"defaults rejected: {exc}")
    try:
        cst.validate(cst.MaterialParams(growth_a=1.0, growth_b=1.0))
        msgs.append("a = b accepted")
    except cst.HypothesisViolation:
        pass
    q, k, kh = cst.cutoffs(7.0, 5.0)
    if (q, k, kh) != (5.0, 2.0, 12.0):
        msgs.append(f"cutoffs(7, 5) = {(q, k, kh)}")
    mob = cst.mobility(prm)
    ps = np.linspace(-50, 50, 10001)
    m = mob(ps)
    if np.any(m < prm.mu0) or np.any(m > prm.mu1):
        msgs.append("mobility outside its bounds")
    back = np.array([mob.inverse_primitive(float(mob.primitive(x))) for x in np.linspace(-5, 5, 41)])
    if np.max(np.abs(back - np.linspace(-5, 5, 41))) > 1e-10:
        msgs.append("mobility primitive inverse inaccurate")
    f = cst.saturation_f(prm)
    fv = f(ps)
    if np.any(fv <= 0) or np.any(fv >= prm.f1):
        msgs.append("saturation outside (0, f1)")
    return CheckResult("constitutive laws and validator", not msgs, "; ".join(msgs) or "ok")


def run(seed=0, out=print):
    """Run every check; print one line each; return True when all pass."""
    rng = np.random.default_rng(seed)
    checks = [
        ("play", lambda: check_play_identities(rng)),
        ("play Lipschitz", lambda: check_play_lipschitz(rng)),
        ("Preisach oracle", check_preisach_oracle),
        ("Preisach heat", lambda: check_preisach_heat(rng)),
        ("rate independence", lambda: check_rate_independence(rng)),
        ("projection oracle", lambda: check_projection_oracle(rng)),
        ("plastic flow", lambda: check_plastic_flow(rng)),
        ("constitutive", check_constitutive),
    ]
    all_ok = True
    for name, c in checks:
        try:
            res = c()
        except Exception as exc:  # a crashing property is a failing property
            res = CheckResult(name, False, f"raised {exc!r}")
        all_ok &= res.ok
        out(f"{'PASS' if res.ok else 'FAIL'}  {res.name}: {res.detail}")
    return all_ok
