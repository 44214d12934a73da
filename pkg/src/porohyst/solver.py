"""Staggered implicit time stepping of the regularised poro-thermo-mechanical system.

One step ``t_n -> t_{n+1}`` runs

1. momentum: implicit Euler in the velocity ``w``; the elastic and
   plastic predictors sit in a matrix that is factorised once, the plastic
   return enters as a fixed-point correction;
2. pressure: semismooth Newton on the hysteretic mass balance;
3. temperature: linear solve with conductivity and mobility lagged at
   ``t_n``.

The three solves may be repeated inside an outer loop
(``SolverConfig.outer_max``) until the pressure and temperature iterates
stop moving.  Every dissipation produced by the discrete scheme, including
the numerical dissipation of implicit Euler, is fed into the heat equation,
which is what lets the per-step energy audit close at roundoff level once
the outer loop has converged.

The reference-temperature offset ``beta * theta_c`` is a constant prestress.
Its virtual work vanishes for displacements with zero boundary values, so
it drops out of the discrete system exactly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from . import constitutive as cst
from .discretization import Forms, assemble, quad_states
from .hysteresis import InitialMemoryCurve, PreisachBank, RGrid
from .plasticity import PlasticBank


class SolverError(RuntimeError):
    """A sub-solve failed; ``step`` is the index of the step being computed."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass
class SolverConfig:
    mode: str = "spectral"
    n: int = 8
    nq: int = 0
    nx: int = 8
    ny: int = 8
    dt: float = 1e-3
    t_end: float = 1.0
    delta: float = 0.0
    R: float = 10.0
    delta_seq: tuple = ()
    R_seq: tuple = ()
    outer_max: int = 1
    outer_tol: float = 1e-10
    fp_tol: float = 1e-10
    fp_max: int = 100
    newton_tol: float = 1e-10
    newton_max: int = 100
    r_grid: int = 256
    input_bound: float = 0.0
    audit_tol: float = 1e-8
    snapshot_every: int = 0

    @property
    def sizes(self):
        if self.mode == "spectral":
            return {"n": self.n, "nq": self.nq or None}
        return {"nx": self.nx, "ny": self.ny}

    @property
    def n_steps(self):
        n = int(round(self.t_end / self.dt))
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(f"t_end={self.t_end} is not a whole number of steps dt={self.dt}")
        return n

    def validate(self, params):
        if self.mode not in ("spectral", "fem"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if not self.R > params.K:
            raise cst.HypothesisViolation("cutoff-level", f"need R > K, got R={self.R}, K={params.K}")
        for d in self.delta_seq:
            if d < 0:
                raise ValueError("delta sequence entries must be nonnegative")
        for r in self.R_seq:
            if not r > params.K:
                raise cst.HypothesisViolation("cutoff-level", f"need R_i > K, got {r}")
        if self.R_seq and list(self.R_seq) != sorted(self.R_seq):
            raise ValueError("R sequence must be nondecreasing")
        if self.delta_seq and list(self.delta_seq) != sorted(self.delta_seq, reverse=True):
            raise ValueError("delta sequence must be nonincreasing")
        if self.outer_max < 1 or self.fp_max < 1 or self.newton_max < 1:
            raise ValueError("iteration limits must be at least 1")
        _ = self.n_steps
        return True


def _zero(x):
    return np.zeros(x.shape[0])


@dataclass
class InitialData:
    """Initial fields as callables of the point array ``x`` of shape ``(npts, dim)``.

    ``theta0=None`` means the constant floor temperature.
    """

    u0: Callable | None = None
    u1: Callable | None = None
    p0: Callable | None = None
    theta0: Callable | None = None
    memory: InitialMemoryCurve | None = None


@dataclass
class FieldState:
    u: np.ndarray
    w: np.ndarray
    p: np.ndarray
    theta: np.ndarray
    t: float
    step: int
    preisach: PreisachBank
    plastic: PlasticBank

    def copy(self):
        return FieldState(
            self.u.copy(), self.w.copy(), self.p.copy(), self.theta.copy(),
            self.t, self.step, self.preisach.copy(), self.plastic.copy(),
        )


@dataclass
class StepReport:
    """What ``advance`` learned about a step besides the new state."""

    work: float
    flux_p: float
    flux_theta: float
    truncation: float
    splitting: float
    dq_plastic: float
    dq_preisach: float
    heat_total: float
    outer_passes: int
    momentum_iters: int
    newton_iters: int
    momentum_residual: float
    pressure_residual: float
    kr_max: float
    dq_plastic_min: float = 0.0
    dq_preisach_min: float = 0.0


@dataclass
class Trajectory:
    """Probe-point samples of a run, one row per recorded time."""

    times: list = field(default_factory=list)
    p: list = field(default_factory=list)
    theta: list = field(default_factory=list)
    grad_theta: list = field(default_factory=list)
    w: list = field(default_factory=list)
    w_t: list = field(default_factory=list)

    def arrays(self):
        return {k: np.asarray(getattr(self, k)) for k in ("times", "p", "theta", "grad_theta", "w", "w_t")}


class Simulation:
    """A discretised problem: forms, laws, hysteresis banks and the stepping scheme."""

    def __init__(self, params: cst.MaterialParams, config: SolverConfig, density=None):
        cst.validate(params)
        config.validate(params)
        self.params = params
        self.config = config
        self.forms: Forms = assemble(config.mode, config.sizes, params)
        self.density = density if density is not None else cst.default_density(params)
        self.mob = cst.mobility(params)
        self.cond = cst.conductivity(params)
        self.sat = cst.saturation_f(params)
        f = self.forms
        self.F_g = f.g_load(params.g)
        self.R_B = f.SB.T @ (f.WB[:, None] * _as_dense(f.SB))
        self.R_B = np.asarray(self.R_B)
        self.b_B = f.boundary_load(np.ones(f.WB.size))
        self.C_T = np.ascontiguousarray(f.C.T)
        self._factor = None
        self._floor_C = None

    # ------------------------------------------------------------------ setup

    def r_grid(self, p0_q):
        cfg, prm = self.config, self.params
        bound = cfg.input_bound if cfg.input_bound > 0 else getattr(self.density, "r_hat", prm.K)
        cap = max(prm.K, float(np.max(np.abs(p0_q), initial=0.0)), bound)
        return RGrid.uniform(cap, cfg.r_grid)

    def init_state(self, data: InitialData | None = None) -> FieldState:
        data = data or InitialData()
        f, prm = self.forms, self.params
        x = f.xq
        p0_vals = np.asarray((data.p0 or _zero)(x), dtype=float).reshape(f.nq)
        if np.any(np.abs(p0_vals) > prm.K):
            raise cst.HypothesisViolation("initial-pressure", f"|p0| exceeds K={prm.K}")
        if data.theta0 is None:
            th_vals = np.full(f.nq, prm.theta_bar)
        else:
            th_vals = np.asarray(data.theta0(x), dtype=float).reshape(f.nq)
        if np.any(th_vals < prm.theta_bar * (1.0 - 1e-12)):
            raise cst.HypothesisViolation("initial-temperature", f"theta0 below theta_bar={prm.theta_bar}")
        u = _project_vector(f, data.u0)
        w = _project_vector(f, data.u1)
        p = _project_scalar(f, p0_vals)
        theta = _project_scalar(f, th_vals)
        lam = data.memory or InitialMemoryCurve.zero(prm.K)
        p_q = f.scalar(p)
        grid = self.r_grid(p_q)
        bank_g, bank_p = quad_states(f, prm, lam, p_q, f.strain(u), grid, self.density)
        return FieldState(u, w, p, theta, 0.0, 0, bank_g, bank_p)

    @property
    def floor_constant(self):
        """``beta^2 R^2 |Omega| / (4 lambda_min)`` with ``lambda_min`` of the viscous form."""
        if self._floor_C is None:
            lam_min = self.forms.viscous_min_eigenvalue()
            self._floor_C = self.params.beta ** 2 * self.config.R ** 2 * self.forms.volume / (4.0 * lam_min)
        return self._floor_C

    def _momentum_factor(self):
        cfg, prm, f = self.config, self.params, self.forms
        key = (cfg.dt, cfg.delta)
        if self._factor is None or self._factor[0] != key:
            dt = cfg.dt
            A = prm.rho_s * f.M_u + cfg.delta * f.D + dt * f.K_B + dt * dt * (f.K_e + f.K_p)
            self._factor = (key, linalg.cho_factor(A), A)
        return self._factor[1], self._factor[2]

    def _apply_Ap(self, deps):
        if self.forms.ncomp == 1:
            return self.params.Ap.uniaxial * deps
        return self.params.Ap.apply(deps)

    def _apply_B(self, eps):
        if self.forms.ncomp == 1:
            return self.params.B.uniaxial * eps
        return self.params.B.apply(eps)

    def _apply_Ae(self, eps):
        if self.forms.ncomp == 1:
            return self.params.Ae.uniaxial * eps
        return self.params.Ae.apply(eps)

    # ------------------------------------------------------------------ sub-steps

    def step_momentum(self, state: FieldState, p_it, theta_it):
        """Solve for ``w_{n+1}``; returns ``(w, plastic_trial, iterations, residual)``."""
        cfg, prm, f = self.config, self.params, self.forms
        dt = cfg.dt
        fac, A = self._momentum_factor()
        Q_th = cst.cutoffs(f.scalar(theta_it), cfg.R)[0]
        sig_n = state.plastic.sigma
        rhs0 = (
            prm.rho_s * (f.M_u @ state.w)
            + cfg.delta * (f.D @ state.w)
            - dt * (f.K_e @ state.u)
            - dt * f.strain_load(sig_n)
            - dt * (self.C_T @ p_it)
            + dt * prm.beta * f.div_load(Q_th)
            + dt * self.F_g
        )
        corr = np.zeros_like(sig_n)
        w = linalg.cho_solve(fac, rhs0)
        for it in range(1, cfg.fp_max + 1):
            deps = dt * f.strain(w)
            trial = state.plastic.trial(deps)
            corr_new = sig_n + self._apply_Ap(deps) - trial[0]
            if not np.any(corr_new) and not np.any(corr):
                return w, trial, it, 0.0
            corr = corr_new
            w_new = linalg.cho_solve(fac, rhs0 + dt * f.strain_load(corr))
            diff = float(np.max(np.abs(w_new - w)))
            w = w_new
            if diff <= cfg.fp_tol * max(1.0, float(np.max(np.abs(w)))):
                deps = dt * f.strain(w)
                trial = state.plastic.trial(deps)
                corr = sig_n + self._apply_Ap(deps) - trial[0]
                res = A @ w - rhs0 - dt * f.strain_load(corr)
                return w, trial, it, float(np.max(np.abs(res)))
        raise SolverError(state.step + 1, f"plastic correction did not converge in {cfg.fp_max} iterations")

    def _pressure_residual(self, state, p, H_n, A, b):
        f, cfg = self.forms, self.config
        pq = f.scalar(p)
        trial = state.preisach.trial(pq)
        _, Kr, _ = cst.cutoffs(pq, cfg.R)
        H = Kr + self.sat(pq) + trial[1]
        F = f.scalar_load(H - H_n) + A @ p - b
        return F, trial, pq

    def step_pressure(self, state: FieldState, w, guess=None):
        """Solve for ``p_{n+1}``; returns ``(p, preisach_trial, iterations, residual)``.

        ``guess`` seeds the Newton iteration (default: ``p_n``).
        """
        cfg, prm, f = self.config, self.params, self.forms
        dt = cfg.dt
        pq_n = state.preisach.p_prev
        _, Kr_n, _ = cst.cutoffs(pq_n, cfg.R)
        H_n = Kr_n + self.sat(pq_n) + state.preisach.G0
        L = f.weighted_grad_form(self.mob(pq_n))
        A = dt * (L / prm.rho_l + prm.gamma_p * self.R_B)
        b = dt * (prm.gamma_p * prm.p_star(state.t + dt) * self.b_B + f.C @ w)
        p = (state.p if guess is None else guess).copy()
        F, trial, pq = self._pressure_residual(state, p, H_n, A, b)
        normF = float(np.linalg.norm(F))
        for it in range(1, cfg.newton_max + 1):
            slope = cst.cutoff_K_slope(pq, cfg.R) + self.sat.derivative(pq) + trial[4]
            J = f.weighted_mass(slope) + A
            dp = np.linalg.solve(J, -F)
            step = 1.0
            while True:
                p_try = p + step * dp
                F_try, trial_try, pq_try = self._pressure_residual(state, p_try, H_n, A, b)
                n_try = float(np.linalg.norm(F_try))
                if n_try <= (1.0 - 1e-4 * step) * normF or n_try == 0.0 or step < 1e-8:
                    break
                step *= 0.5
            if step < 1e-8:
                # no descent along the Newton direction (kink): fall back to a damped step
                p_try = p + 0.5 * dp
                F_try, trial_try, pq_try = self._pressure_residual(state, p_try, H_n, A, b)
                n_try = float(np.linalg.norm(F_try))
            moved = float(np.max(np.abs(p_try - p)))
            p, F, trial, pq, normF = p_try, F_try, trial_try, pq_try, n_try
            if moved <= cfg.newton_tol * max(1.0, float(np.max(np.abs(p)))):
                return p, trial, it, float(np.max(np.abs(F)))
        raise SolverError(
            state.step + 1,
            f"pressure iteration did not converge in {cfg.newton_max} iterations, residual {normF:.3e}",
        )

    def heat_sources(self, state, w, p_new, theta_it, plastic_trial, preisach_trial):
        """Pointwise heat densities of the step and the nodal delta-term load.

        Returns ``(pointwise, nodal_load, nodal_total, parts)``.
        """
        cfg, prm, f = self.config, self.params, self.forms
        dt = cfg.dt
        dw = w - state.w
        eps_w = f.strain(w)
        deps = dt * eps_w
        vel = f.velocity(dw)
        pq_n = state.preisach.p_prev
        pq = f.scalar(p_new)
        kin = 0.5 * prm.rho_s * np.sum(vel * vel, axis=1)
        visc = dt * np.sum(self._apply_B(eps_w) * eps_w, axis=1)
        elastic = 0.5 * np.sum(self._apply_Ae(deps) * deps, axis=1)
        dq_p = plastic_trial[2]
        dq_g = preisach_trial[3]
        dq_f = self.sat.primitive(pq) - self.sat.primitive(pq_n) - self.sat(pq_n) * (pq - pq_n)
        _, Kr_n, Kh_n = cst.cutoffs(pq_n, cfg.R)
        _, Kr, Kh = cst.cutoffs(pq, cfg.R)
        dq_k = (Kr - Kr_n) * pq - (Kh - Kh_n)
        g = f.grad(p_new)
        g2 = np.sum(g * g, axis=1)
        Qg = cst.cutoffs(g2, cfg.R)[0]
        mu_n = self.mob(pq_n)
        darcy = dt / prm.rho_l * mu_n * Qg
        expansion = -dt * prm.beta * cst.cutoffs(f.scalar(theta_it), cfg.R)[0] * f.div(w)
        pointwise = kin + visc + elastic + dq_p + dq_g + dq_f + dq_k + darcy + expansion
        nodal, nodal_total = f.delta_heat(dw, cfg.delta)
        trunc = dt / prm.rho_l * f.integrate(mu_n * (g2 - Qg))
        parts = {
            "dq_plastic": f.integrate(dq_p),
            "dq_preisach": f.integrate(dq_g),
            "dq_plastic_min": float(np.min(dq_p)),
            "dq_preisach_min": float(np.min(dq_g)),
            "truncation": trunc,
            "kr_max": float(np.max(np.abs(Kr))),
        }
        return pointwise, nodal, nodal_total, parts

    def step_temperature(self, state: FieldState, pointwise, nodal):
        """Solve for ``theta_{n+1}`` given the step's heat densities."""
        cfg, prm, f = self.config, self.params, self.forms
        dt = cfg.dt
        th_q = f.scalar(state.theta)
        Kk = f.weighted_grad_form(self.cond(th_q))
        M = prm.c0 * f.M_t + dt * Kk + dt * prm.gamma_theta * self.R_B
        theta_b = f.boundary(state.theta)
        rhs = (
            f.scalar_load(pointwise)
            + nodal
            + dt * prm.gamma_theta * f.boundary_load(prm.theta_star - theta_b)
            - dt * (Kk @ state.theta)
        )
        dtheta = np.linalg.solve(M, rhs)
        return state.theta + dtheta

    # ------------------------------------------------------------------ stepping

    def advance(self, state: FieldState):
        """One time step; returns ``(new_state, StepReport)``."""
        cfg, prm, f = self.config, self.params, self.forms
        dt = cfg.dt
        p_it, theta_it = state.p, state.theta
        m_iters = n_iters = 0
        for outer in range(1, cfg.outer_max + 1):
            try:
                w, ptrial, mi, mres = self.step_momentum(state, p_it, theta_it)
                p_new, gtrial, ni, pres = self.step_pressure(state, w, None if outer == 1 else p_new)
                pointwise, nodal, nodal_total, parts = self.heat_sources(state, w, p_new, theta_it, ptrial, gtrial)
                theta_new = self.step_temperature(state, pointwise, nodal)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                raise SolverError(state.step + 1, f"sub-solve failed in outer pass {outer}: {exc}") from exc
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p_new)) and np.all(np.isfinite(theta_new))):
                raise SolverError(state.step + 1, f"non-finite field values in outer pass {outer}")
            m_iters += mi
            n_iters += ni
            if outer == cfg.outer_max:
                break
            scale = max(1.0, float(np.max(np.abs(p_new))), float(np.max(np.abs(theta_new))))
            change = max(float(np.max(np.abs(p_new - p_it))), float(np.max(np.abs(theta_new - theta_it))))
            if change <= cfg.outer_tol * scale:
                break
            p_it, theta_it = p_new, theta_new

        new = state.copy()
        new.u = state.u + dt * w
        new.w = w
        new.p = p_new
        new.theta = theta_new
        new.step = state.step + 1
        new.t = new.step * dt
        new.preisach.commit(f.scalar(p_new), gtrial)
        new.plastic.commit(ptrial)

        p_b = f.boundary(p_new)
        th_b = f.boundary(theta_new)
        report = StepReport(
            work=dt * float(self.F_g @ w),
            flux_p=dt * prm.gamma_p * float(np.sum(f.WB * (prm.p_star(new.t) - p_b) * p_b)),
            flux_theta=dt * prm.gamma_theta * float(np.sum(f.WB * (prm.theta_star - th_b))),
            truncation=parts["truncation"],
            splitting=dt * float((p_it - p_new) @ (f.C @ w)),
            dq_plastic=parts["dq_plastic"],
            dq_preisach=parts["dq_preisach"],
            heat_total=f.integrate(pointwise) + nodal_total,
            outer_passes=outer,
            momentum_iters=m_iters,
            newton_iters=n_iters,
            momentum_residual=mres,
            pressure_residual=pres,
            kr_max=parts["kr_max"],
            dq_plastic_min=parts["dq_plastic_min"],
            dq_preisach_min=parts["dq_preisach_min"],
        )
        return new, report

    def record(self, traj: Trajectory, state: FieldState, w_prev=None):
        f = self.forms
        traj.times.append(state.t)
        traj.p.append(f.probe_scalar(state.p))
        traj.theta.append(f.probe_scalar(state.theta))
        traj.grad_theta.append(f.probe_scalar_grad(state.theta))
        traj.w.append(f.probe_vector(state.w))
        if w_prev is None:
            traj.w_t.append(np.zeros_like(traj.w[-1]))
        else:
            traj.w_t.append(f.probe_vector((state.w - w_prev) / self.config.dt))

    def run(self, state: FieldState | None = None, data: InitialData | None = None,
            on_step=None, on_snapshot=None):
        """Run to ``t_end``; returns a :class:`~porohyst.diagnostics.RunResult`."""
        from . import diagnostics as dg

        cfg = self.config
        if state is None:
            state = self.init_state(data)
        traj = Trajectory()
        self.record(traj, state)
        log = dg.DiagnosticsLog(self)
        log.start(state)
        n_total = cfg.n_steps
        while state.step < n_total:
            w_prev = state.w
            new, report = self.advance(state)
            log.append(state, new, report)
            self.record(traj, new, w_prev)
            state = new
            if on_step is not None:
                on_step(state, log.rows[-1])
            if on_snapshot is not None and cfg.snapshot_every and state.step % cfg.snapshot_every == 0:
                on_snapshot(state)
        return dg.RunResult(state, log, traj)


# --------------------------------------------------------------------------
# continuation
# --------------------------------------------------------------------------


def continuation_sequences(config: SolverConfig):
    """Pair up the delta and R sequences; a missing or length-one sequence is broadcast."""
    ds = list(config.delta_seq) or [config.delta]
    rs = list(config.R_seq) or [config.R]
    n = max(len(ds), len(rs))
    if len(ds) == 1:
        ds = ds * n
    if len(rs) == 1:
        rs = rs * n
    if len(ds) != n or len(rs) != n:
        raise ValueError("delta and R sequences must have equal length or length one")
    return list(zip(ds, rs))


def continuation_run(params, config: SolverConfig, data: InitialData | None = None, density=None):
    """One run per ``(delta_i, R_i)`` on a fixed discretisation.

    Returns ``(results, table)``: the run results and the successive-distance rows.
    """
    from . import diagnostics as dg

    results = []
    for delta, R in continuation_sequences(config):
        cfg = dataclasses.replace(config, delta=delta, R=R, delta_seq=(), R_seq=())
        sim = Simulation(params, cfg, density)
        results.append(sim.run(data=data))
    table = []
    for i in range(len(results) - 1):
        d = dg.trajectory_distances(results[i].trajectory, results[i + 1].trajectory)
        row = {"i": i, "delta_i": results[i].delta, "delta_next": results[i + 1].delta,
               "R_i": results[i].R, "R_next": results[i + 1].R}
        row.update(d)
        table.append(row)
    return results, table


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _as_dense(a):
    return a.toarray() if hasattr(a, "toarray") else np.asarray(a)


def _project_scalar(f, vals):
    if np.all(vals == vals[0]):
        return vals[0] * f.ones
    return np.linalg.solve(f.M_s, f.scalar_load(vals))


def _project_vector(f, func):
    if func is None:
        return np.zeros(f.nu)
    vals = np.asarray(func(f.xq), dtype=float).reshape(f.nq, f.dim)
    if not np.any(vals):
        return np.zeros(f.nu)
    rhs = f.U.T @ (np.repeat(f.W, f.dim) * vals.ravel())
    return np.linalg.solve(f.M_u, rhs)


def floor_curve(t, C, c0, theta_bar):
    """Closed-form comparison temperature ``(C t / c0 + 1/theta_bar)^-1``."""
    return 1.0 / (C * np.asarray(t, dtype=float) / c0 + 1.0 / theta_bar)


__all__ = [
    "SolverConfig", "InitialData", "FieldState", "StepReport", "Trajectory", "Simulation",
    "SolverError", "continuation_run", "continuation_sequences", "floor_curve",
]
