"""Per-step energy ledger, temperature floor and trajectory comparisons."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import constitutive as cst

CSV_VERSION = "# porohyst diagnostics v1"
STUDY_VERSION = "# porohyst study v1"


@dataclass
class DiagnosticsRow:
    step: int
    t: float
    e_thermal: float
    e_kinetic: float
    e_delta: float
    e_vp: float
    e_vg: float
    e_khat: float
    e_total: float
    work: float
    flux_p: float
    flux_theta: float
    truncation: float
    splitting: float
    residual: float
    flagged: int
    theta_min: float
    floor: float
    floor_violated: int
    sup_p: float
    kr_max: float
    dq_plastic: float
    dq_preisach: float
    dq_plastic_cum: float
    dq_preisach_cum: float
    dq_min: float
    outer_passes: int
    momentum_iters: int
    newton_iters: int
    momentum_residual: float
    pressure_residual: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


def energy_components(sim, state):
    """Stored energy of a committed state, split into the ledger's components."""
    f, prm, cfg = sim.forms, sim.params, sim.config
    eps = f.strain(state.u)
    if f.ncomp == 1:
        elastic = 0.5 * prm.Ae.uniaxial * eps[:, 0] ** 2
    else:
        elastic = 0.5 * np.sum(prm.Ae.apply(eps) * eps, axis=1)
    pq = state.preisach.p_prev
    _, _, Kh = cst.cutoffs(pq, cfg.R)
    out = {
        "e_thermal": prm.c0 * float(f.ones @ (f.M_t @ state.theta)),
        "e_kinetic": 0.5 * prm.rho_s * float(state.w @ (f.M_u @ state.w)),
        "e_delta": 0.5 * cfg.delta * float(state.w @ (f.D @ state.w)),
        "e_vp": f.integrate(elastic + state.plastic.stored()),
        "e_vg": f.integrate(sim.sat.potential(pq) + state.preisach.V0),
        "e_khat": f.integrate(Kh),
    }
    out["e_total"] = sum(out.values())
    return out


def energy_audit(e_before, e_after, fluxes):
    """Relative defect of the discrete energy balance over one step.

    ``fluxes`` carries the step integrals ``work``, ``flux_p``, ``flux_theta``
    and the nonnegative gradient ``truncation`` defect.
    """
    d = e_after - e_before
    supplied = fluxes["work"] + fluxes["flux_p"] + fluxes["flux_theta"]
    return abs(d - supplied + fluxes["truncation"]) / max(1.0, abs(e_after))


def floor_value(t, C, c0, theta_bar):
    return 1.0 / (C * t / c0 + 1.0 / theta_bar)


def temperature_floor(sim, state, rtol=1e-12):
    """``(min theta over quadrature points, v(t), violated)``.

    ``rtol`` absorbs interpolation roundoff when ``theta`` sits exactly on the
    floor, as it does at ``t = 0`` for ``theta0 = theta_bar``.
    """
    prm = sim.params
    th_min = float(np.min(sim.forms.scalar(state.theta)))
    v = floor_value(state.t, sim.floor_constant, prm.c0, prm.theta_bar)
    return th_min, v, bool(th_min <= 0.0 or th_min < v * (1.0 - rtol))


def q_star_bound(a, b):
    """Lower bound for the dual integrability exponent of the temperature rate.

    Any ``eta`` in ``(0, eta_sup)`` with ``eta_sup = min(1, eta_max)`` is
    admissible, and ``q* = 2(1 + eta)/eta``; the returned value is the
    infimum ``2(1 + eta_sup)/eta_sup``.
    """
    r_max = 16.0 / 5.0 + 6.0 * a / 5.0
    if 2.0 + b - r_max <= 0:
        eta_sup = 1.0
    else:
        eta_sup = min(1.0, (2.0 * r_max - 1.0 - b) / (2.0 + b - r_max))
    if eta_sup <= 0:
        return math.inf
    return 2.0 * (1.0 + eta_sup) / eta_sup


class DiagnosticsLog:
    """Append-only ledger of a run."""

    def __init__(self, sim):
        self.sim = sim
        self.rows: list[DiagnosticsRow] = []
        self._energy = None
        self._cum = [0.0, 0.0]
        self.sup_p_running = 0.0
        self.theta_min_running = math.inf

    def _common(self, state):
        th_min, v, viol = temperature_floor(self.sim, state)
        sup_p = float(np.max(np.abs(state.preisach.p_prev), initial=0.0))
        self.sup_p_running = max(self.sup_p_running, sup_p)
        self.theta_min_running = min(self.theta_min_running, th_min)
        return th_min, v, viol, sup_p

    def start(self, state):
        self._energy = energy_components(self.sim, state)
        self.initial_energy = dict(self._energy)
        th_min, v, viol, sup_p = self._common(state)
        e = self._energy
        self.rows.append(DiagnosticsRow(
            state.step, state.t, e["e_thermal"], e["e_kinetic"], e["e_delta"], e["e_vp"], e["e_vg"],
            e["e_khat"], e["e_total"], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, th_min, v, int(viol), sup_p,
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0.0, 0.0,
        ))

    def append(self, before, after, report):
        e_before = self._energy["e_total"]
        e = energy_components(self.sim, after)
        fluxes = {
            "work": report.work, "flux_p": report.flux_p,
            "flux_theta": report.flux_theta, "truncation": report.truncation,
        }
        res = energy_audit(e_before, e["e_total"], fluxes)
        self._energy = e
        self._cum[0] += report.dq_plastic
        self._cum[1] += report.dq_preisach
        th_min, v, viol, sup_p = self._common(after)
        self.rows.append(DiagnosticsRow(
            after.step, after.t, e["e_thermal"], e["e_kinetic"], e["e_delta"], e["e_vp"], e["e_vg"],
            e["e_khat"], e["e_total"], report.work, report.flux_p, report.flux_theta, report.truncation,
            report.splitting, res, int(res > self.sim.config.audit_tol), th_min, v, int(viol), sup_p,
            report.kr_max, report.dq_plastic, report.dq_preisach, self._cum[0], self._cum[1],
            min(report.dq_plastic_min, report.dq_preisach_min),
            report.outer_passes, report.momentum_iters, report.newton_iters,
            report.momentum_residual, report.pressure_residual,
        ))

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path_or_buffer):
        write_csv(path_or_buffer, CSV_VERSION, DiagnosticsRow.columns(), [asdict(r) for r in self.rows])


@dataclass
class RunResult:
    state: object
    log: DiagnosticsLog
    trajectory: object

    @property
    def rows(self):
        return self.log.rows

    @property
    def delta(self):
        return self.log.sim.config.delta

    @property
    def R(self):
        return self.log.sim.config.R

    def summary(self):
        sim, log = self.log.sim, self.log
        steps = log.rows[1:]
        prm = sim.params
        final = {k: getattr(log.rows[-1], k) for k in
                 ("e_thermal", "e_kinetic", "e_delta", "e_vp", "e_vg", "e_khat", "e_total")}
        return {
            "format": "porohyst summary v1",
            "mode": sim.config.mode,
            "steps": len(steps),
            "t_final": log.rows[-1].t,
            "energy_initial": log.initial_energy["e_total"],
            "energy_final": final,
            "sup_p": log.sup_p_running,
            "theta_min": log.theta_min_running,
            "floor_constant": sim.floor_constant,
            "floor_violations": int(sum(r.floor_violated for r in log.rows)),
            "residual_max": max((r.residual for r in steps), default=0.0),
            "flagged_steps": int(sum(r.flagged for r in steps)),
            "dq_plastic_total": log._cum[0],
            "dq_preisach_total": log._cum[1],
            "dq_min": min((r.dq_min for r in steps), default=0.0),
            "kr_max": max((r.kr_max for r in steps), default=0.0),
            "q_star_bound": q_star_bound(prm.growth_a, prm.growth_b),
        }


# --------------------------------------------------------------------------
# trajectory comparisons
# --------------------------------------------------------------------------


def _align(ta, tb, tol=1e-9):
    """Indices of the coarser time grid inside the finer one."""
    ta, tb = np.asarray(ta), np.asarray(tb)
    coarse_first = ta.size <= tb.size
    tc, tf = (ta, tb) if coarse_first else (tb, ta)
    idx = np.searchsorted(tf, tc - tol)
    if np.any(idx >= tf.size) or np.any(np.abs(tf[np.minimum(idx, tf.size - 1)] - tc) > tol):
        raise ValueError("mismatched output grids: coarse times are not a subset of fine times")
    ia = np.arange(tc.size) if coarse_first else idx
    ib = idx if coarse_first else np.arange(tc.size)
    return tc, ia, ib


def trajectory_distances(a, b):
    """Distances between two trajectories sampled on the same probe grid.

    ``*_supL2`` is the sup over common times of the spatial L2 distance,
    ``*_L2L2`` the space-time L2 distance (rectangle rule on the coarser grid).
    """
    A, B = a.arrays(), b.arrays()
    if A["p"].shape[1:] != B["p"].shape[1:]:
        raise ValueError("mismatched output grids: probe sets differ")
    tc, ia, ib = _align(A["times"], B["times"])
    dts = np.diff(tc)

    def spatial(name):
        d = A[name][ia] - B[name][ib]
        d = d.reshape(d.shape[0], d.shape[1], -1)
        return np.sqrt(np.mean(np.sum(d * d, axis=2), axis=1))

    def space_time(name):
        s = spatial(name)[1:]
        return float(np.sqrt(np.sum(dts * s * s)))

    return {
        "p_supL2": float(np.max(spatial("p"))),
        "theta_supL2": float(np.max(spatial("theta"))),
        "w_supL2": float(np.max(spatial("w"))),
        "grad_theta_L2L2": space_time("grad_theta"),
        "w_t_L2L2": space_time("w_t"),
    }


DISTANCE_KEYS = ("p_supL2", "theta_supL2", "w_supL2", "grad_theta_L2L2", "w_t_L2L2")


def convergence_study(results, labels, vary):
    """Successive distances of a run family and the observed orders.

    ``results`` are ordered from coarse to fine (or along a regularisation
    sequence); ``order_*`` is ``log2(d_{i-1} / d_i)``, meaningful when the
    varied parameter is halved between runs.
    """
    if len(results) != len(labels):
        raise ValueError("one label per run required")
    rows = []
    for i in range(len(results) - 1):
        d = trajectory_distances(results[i].trajectory, results[i + 1].trajectory)
        row = {"vary": vary, "i": i, "from": labels[i], "to": labels[i + 1]}
        row.update(d)
        if rows:
            for k in DISTANCE_KEYS:
                prev, cur = rows[-1][k], d[k]
                row["order_" + k] = math.log2(prev / cur) if prev > 0 and cur > 0 else float("nan")
        else:
            for k in DISTANCE_KEYS:
                row["order_" + k] = float("nan")
        rows.append(row)
    return rows


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path_or_buffer, version, columns, rows):
    own = isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__")
    fh = open(path_or_buffer, "w", newline="") if own else path_or_buffer
    try:
        fh.write(version + "\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([_fmt(r.get(c, "")) for c in columns])
    finally:
        if own:
            fh.close()


def read_csv(path):
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        rows = list(csv.DictReader(fh))
    return header, rows


def study_to_csv(path_or_buffer, rows):
    cols = list(rows[0].keys()) if rows else ["vary", "i", "from", "to"]
    write_csv(path_or_buffer, STUDY_VERSION, cols, rows)


def csv_text(rows, columns, version):
    buf = io.StringIO()
    write_csv(buf, version, columns, rows)
    return buf.getvalue()
