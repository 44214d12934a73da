"""Scalar play operators and the Preisach operator built on them.

The Preisach output of a memory state is

    G0 = sum_m dr_m * int_0^{xi_m} rho(r_m, v) dv

where ``xi_m`` is the value of the play with threshold ``r_m``.  The memory
bank used by the solver (:class:`PreisachBank`) holds one row of play values
per quadrature point; :class:`MemoryState` is the single-point view.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from . import kernels

LIPSCHITZ_TOL = 1e-12


# --------------------------------------------------------------------------
# grids and initial memory
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RGrid:
    """Midpoint discretisation of the threshold axis ``(0, cap]``."""

    nodes: np.ndarray
    weights: np.ndarray
    cap: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("r-grid nodes and weights must be matching 1D arrays")
        if np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
            raise ValueError("r-grid nodes must be positive and strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("r-grid weights must be positive")
        if not math.isclose(weights.sum(), self.cap, rel_tol=1e-12):
            raise ValueError("r-grid cells must cover (0, cap]")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, cap: float, size: int = 256) -> "RGrid":
        if cap <= 0:
            raise ValueError("r-grid cap must be positive")
        if size < 1:
            raise ValueError("r-grid needs at least one node")
        dr = cap / size
        nodes = (np.arange(size) + 0.5) * dr
        return cls(nodes, np.full(size, dr), float(cap))

    def __len__(self):
        return self.nodes.size


@dataclass(frozen=True)
class InitialMemoryCurve:
    """Initial memory ``lambda_{-1}``: 1-Lipschitz and zero beyond ``K``."""

    func: Callable[[np.ndarray], np.ndarray]
    K: float

    def __call__(self, r):
        return np.asarray(self.func(np.asarray(r, dtype=float)), dtype=float)

    @classmethod
    def zero(cls, K: float) -> "InitialMemoryCurve":
        return cls(lambda r: np.zeros_like(r), K)

    @classmethod
    def ramp(cls, amplitude: float, K: float) -> "InitialMemoryCurve":
        """``sign(A) * max(0, |A| - r)``, a memory left by a single excursion to A."""
        a = float(amplitude)
        return cls(lambda r: math.copysign(1.0, a) * np.maximum(0.0, abs(a) - r), K)

    def validate(self, samples: int = 4097):
        """Raise ``ValueError`` unless the curve lies in the memory space for ``K``."""
        if self.K <= 0:
            raise ValueError("memory cutoff K must be positive")
        r = np.linspace(0.0, 2.0 * self.K, samples)
        lam = self(r)
        slopes = np.abs(np.diff(lam)) / np.diff(r)
        if np.any(slopes > 1.0 + 1e-9):
            raise ValueError("initial memory curve is not 1-Lipschitz")
        if np.any(lam[r >= self.K] != 0.0):
            raise ValueError("initial memory curve must vanish for r >= K")


def play_init(lam: InitialMemoryCurve, p0: float, r: float) -> float:
    """Initial play value ``max(p0 - r, min(lam(r), p0 + r))``."""
    if not r > 0:
        raise ValueError(f"play threshold must be positive, got {r}")
    return max(p0 - r, min(float(lam(r)), p0 + r))


def play_step(xi_prev, p_new, r):
    """One catch-up step of the play; works elementwise on arrays."""
    return np.minimum(p_new + r, np.maximum(p_new - r, xi_prev))


# --------------------------------------------------------------------------
# densities
# --------------------------------------------------------------------------


class PreisachDensity:
    """Interface of a Preisach density.

    Subclasses provide the density, its envelope ``rho*`` and the primitives
    ``P(r, v) = int_0^v rho dv'`` and ``PV(r, v) = int_0^v v' rho dv'``.
    """

    v_breaks: tuple = ()

    def rho(self, r, v):
        raise NotImplementedError

    def envelope(self, r):
        raise NotImplementedError

    def primitive(self, r, v):
        raise NotImplementedError

    def first_moment(self, r, v):
        raise NotImplementedError

    def r_moment(self, r, v):
        """``int_0^v r * rho(r, v') dv'``, the integrand of the dissipation D0."""
        return np.asarray(r) * self.primitive(r, v)

    def slice_work(self, r, a, b, p):
        """``int_a^b rho(r, v) (p - v) dv``: heat released when a play moves a -> b."""
        return p * (self.primitive(r, b) - self.primitive(r, a)) - (
            self.first_moment(r, b) - self.first_moment(r, a)
        )

    @property
    def c_rho(self) -> float:
        raise NotImplementedError

    @property
    def c_rho_star(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class BoxDensity(PreisachDensity):
    """``rho_hat`` on ``[0, r_hat] x [-v_hat, v_hat]``, zero elsewhere."""

    rho_hat: float = 1.0
    r_hat: float = 1.0
    v_hat: float = 1.0

    def __post_init__(self):
        if not (self.rho_hat > 0 and self.r_hat > 0 and self.v_hat > 0):
            raise ValueError("box density parameters must be positive")

    @property
    def v_breaks(self):
        return (-self.v_hat, self.v_hat)

    def envelope(self, r):
        return np.where(np.asarray(r) <= self.r_hat, self.rho_hat, 0.0)

    def rho(self, r, v):
        return self.envelope(r) * (np.abs(np.asarray(v)) <= self.v_hat)

    def primitive(self, r, v):
        return self.envelope(r) * np.clip(v, -self.v_hat, self.v_hat)

    def first_moment(self, r, v):
        c = np.clip(v, -self.v_hat, self.v_hat)
        return self.envelope(r) * 0.5 * c * c

    def slice_work(self, r, a, b, p):
        ca = np.clip(a, -self.v_hat, self.v_hat)
        cb = np.clip(b, -self.v_hat, self.v_hat)
        return self.envelope(r) * (cb - ca) * (p - 0.5 * (ca + cb))

    @property
    def c_rho(self):
        return 2.0 * self.rho_hat * self.r_hat * self.v_hat

    @property
    def c_rho_star(self):
        return self.rho_hat * self.r_hat

    def r_weights(self, grid: RGrid) -> np.ndarray:
        return grid.weights * self.envelope(grid.nodes)


class FunctionDensity(PreisachDensity):
    """Density given by callables; primitives by adaptive quadrature.

    ``rho(r, v)`` and ``envelope(r)`` must be vectorised.  ``r_max`` and
    ``v_max`` bound the support and are used for the constants ``C_rho`` and
    ``C_rho*``.
    """

    def __init__(self, rho, envelope, r_max, v_max, v_breaks=(), tol=1e-12):
        self._rho = rho
        self._envelope = envelope
        self.r_max = float(r_max)
        self.v_max = float(v_max)
        self.v_breaks = tuple(v_breaks)
        self.tol = tol

    def rho(self, r, v):
        return self._rho(r, v)

    def envelope(self, r):
        return self._envelope(r)

    def _integral(self, r, v, weight):
        def one(ri, vi):
            if vi == 0.0:
                return 0.0
            lo, hi = (0.0, vi) if vi > 0 else (vi, 0.0)
            pts = [b for b in self.v_breaks if lo < b < hi]
            val, _ = integrate.quad(
                lambda s: weight(s) * float(self._rho(ri, s)),
                lo,
                hi,
                points=pts or None,
                epsabs=self.tol,
                epsrel=0.0,
                limit=200,
            )
            return val if vi > 0 else -val

        r_b, v_b = np.broadcast_arrays(np.asarray(r, float), np.asarray(v, float))
        out = np.array([one(ri, vi) for ri, vi in zip(r_b.ravel(), v_b.ravel())])
        return out.reshape(r_b.shape)

    def primitive(self, r, v):
        return self._integral(r, v, lambda s: 1.0)

    def first_moment(self, r, v):
        return self._integral(r, v, lambda s: s)

    @property
    def c_rho(self):
        val, _ = integrate.dblquad(
            lambda v, r: float(self._rho(r, v)), 0.0, self.r_max, -self.v_max, self.v_max
        )
        return val

    @property
    def c_rho_star(self):
        val, _ = integrate.quad(lambda r: float(self._envelope(r)), 0.0, self.r_max)
        return val


# --------------------------------------------------------------------------
# single-point memory state
# --------------------------------------------------------------------------


@dataclass
class MemoryState:
    """Memory of one material point: play values over the r-grid plus a ledger."""

    grid: RGrid
    xi: np.ndarray
    p_prev: float
    G0: float = 0.0
    V0: float = 0.0
    D0: float = 0.0
    heat: float = 0.0

    def running_bound(self) -> float:
        return float(np.max(np.abs(self.xi), initial=0.0))

    def check(self, K_star: float | None = None, tol: float = LIPSCHITZ_TOL):
        """Assert the structural invariants of a reachable memory state."""
        r = self.grid.nodes
        scale = tol * max(1.0, abs(self.p_prev))
        if np.any(np.abs(self.p_prev - self.xi) > r + scale):
            raise AssertionError("play value outside the dead band")
        if self.xi.size > 1:
            gaps = np.abs(np.diff(self.xi)) - np.diff(r)
            if np.any(gaps > scale):
                raise AssertionError("memory curve is not 1-Lipschitz on the grid")
        if K_star is not None and np.any(self.xi[r >= K_star] != 0.0):
            raise AssertionError("memory curve nonzero beyond the running bound")


def _state_integrals(grid, xi, density):
    w = grid.weights
    r = grid.nodes
    return (
        float(np.sum(w * density.primitive(r, xi))),
        float(np.sum(w * density.first_moment(r, xi))),
        float(np.sum(w * density.r_moment(r, xi))),
    )


def preisach_init(
    lam: InitialMemoryCurve, p0: float, grid: RGrid, density: PreisachDensity
) -> MemoryState:
    """Initial memory for input value ``p0`` and initial curve ``lam``."""
    if not math.isfinite(p0):
        raise ValueError("initial input must be finite")
    lam.validate()
    r = grid.nodes
    xi = np.maximum(p0 - r, np.minimum(lam(r), p0 + r))
    G0, V0, D0 = _state_integrals(grid, xi, density)
    return MemoryState(grid, xi, float(p0), G0, V0, D0, 0.0)


def preisach_step(state: MemoryState, p_new: float, density: PreisachDensity):
    """Advance the memory to input ``p_new``.

    Returns ``(new_state, dG0, dV0, dq)``.  The heat ``dq`` equals
    ``dG0 * p_new - dV0`` and is summed slice by slice in a form that is
    nonnegative term by term.
    """
    grid = state.grid
    r = grid.nodes
    if isinstance(density, BoxDensity):
        xi_new, G0, V0, dq, _ = kernels.box_preisach(
            state.xi[None, :],
            np.array([float(p_new)]),
            r,
            density.r_weights(grid),
            density.v_hat,
        )
        xi_new = xi_new[0]
        G0, V0, dq = float(G0[0]), float(V0[0]), float(dq[0])
        D0 = float(np.sum(grid.weights * density.r_moment(r, xi_new)))
    else:
        xi_new = play_step(state.xi, p_new, r)
        moved = xi_new != state.xi
        G0, V0, D0 = _state_integrals(grid, xi_new, density)
        work = np.zeros_like(xi_new)
        if np.any(moved):
            work[moved] = density.slice_work(r[moved], state.xi[moved], xi_new[moved], p_new)
        dq = float(np.sum(grid.weights * work))
    dG0 = G0 - state.G0
    dV0 = V0 - state.V0
    new = MemoryState(grid, xi_new, float(p_new), G0, V0, D0, state.heat + dq)
    return new, dG0, dV0, dq


def potential_h(
    state: MemoryState,
    density: PreisachDensity,
    h: Callable[[np.ndarray], np.ndarray],
    n_quad: int = 32,
) -> float:
    """Modified potential ``sum_m dr_m int_0^{xi_m} h(v) rho(r_m, v) dv``.

    The inner integral uses Gauss-Legendre with ``n_quad`` nodes on every
    piece between the density's breakpoints in ``v``.
    """
    xi = state.xi
    lo, hi = min(0.0, xi.min(), state.p_prev), max(0.0, xi.max(), state.p_prev)
    if hi > lo:
        vs = np.linspace(lo, hi, 513)
        hv = np.asarray(h(vs), dtype=float)
        if np.any(np.diff(hv) < -1e-12 * max(1.0, np.abs(hv).max())):
            raise ValueError("h must be nondecreasing on the range of play values")
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    r = state.grid.nodes
    total = 0.0
    for m in np.nonzero(xi)[0]:
        a, b = (0.0, xi[m]) if xi[m] > 0 else (xi[m], 0.0)
        cuts = [a] + [c for c in density.v_breaks if a < c < b] + [b]
        val = 0.0
        for lo_, hi_ in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (hi_ - lo_)
            v = lo_ + half * (gx + 1.0)
            val += half * np.sum(gw * np.asarray(h(v), float) * density.rho(r[m], v))
        total += state.grid.weights[m] * (val if xi[m] > 0 else -val)
    return float(total)


def g_total(p: float, state: MemoryState, f: Callable[[float], float]) -> float:
    """Full capillary response ``f(p) + G0``."""
    return float(f(p)) + state.G0


# --------------------------------------------------------------------------
# batched memory for quadrature points
# --------------------------------------------------------------------------


@dataclass
class PreisachBank:
    """Memory states of all pressure quadrature points, stored row-wise."""

    grid: RGrid
    density: PreisachDensity
    xi: np.ndarray
    p_prev: np.ndarray
    G0: np.ndarray
    V0: np.ndarray
    heat: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.heat is None:
            self.heat = np.zeros(self.xi.shape[0])

    @classmethod
    def create(cls, lam, p0, grid, density):
        p0 = np.asarray(p0, dtype=float)
        lam.validate()
        r = grid.nodes
        xi = np.maximum(p0[:, None] - r, np.minimum(lam(r)[None, :], p0[:, None] + r))
        bank = cls(grid, density, xi, p0.copy(), np.zeros(p0.size), np.zeros(p0.size))
        bank.G0, bank.V0 = bank._integrals(xi)
        return bank

    def __len__(self):
        return self.xi.shape[0]

    def __getitem__(self, i) -> MemoryState:
        D0 = float(np.sum(self.grid.weights * self.density.r_moment(self.grid.nodes, self.xi[i])))
        return MemoryState(
            self.grid, self.xi[i].copy(), float(self.p_prev[i]),
            float(self.G0[i]), float(self.V0[i]), D0, float(self.heat[i]),
        )

    def _integrals(self, xi):
        w, r = self.grid.weights, self.grid.nodes
        return (
            (self.density.primitive(r, xi) * w).sum(axis=1),
            (self.density.first_moment(r, xi) * w).sum(axis=1),
        )

    def trial(self, p):
        """Evaluate a step to inputs ``p`` without committing it.

        Returns ``(xi_new, G0, V0, dq, dGdp)``.
        """
        p = np.ascontiguousarray(p, dtype=float)
        r = self.grid.nodes
        if isinstance(self.density, BoxDensity):
            return kernels.box_preisach(
                self.xi, p, r, self.density.r_weights(self.grid), self.density.v_hat
            )
        xi_new = kernels.play_batch(self.xi, p, r)
        G0, V0 = self._integrals(xi_new)
        dq = (self.density.slice_work(r, self.xi, xi_new, p[:, None]) * self.grid.weights).sum(axis=1)
        h = 1e-7
        G_h, _ = self._integrals(kernels.play_batch(self.xi, p + h, r))
        return xi_new, G0, V0, dq, (G_h - G0) / h

    def commit(self, p, trial):
        xi_new, G0, V0, dq, _ = trial
        self.xi = xi_new
        self.p_prev = np.array(p, dtype=float)
        self.G0 = np.asarray(G0, dtype=float)
        self.V0 = np.asarray(V0, dtype=float)
        self.heat = self.heat + dq

    def D0(self):
        w, r = self.grid.weights, self.grid.nodes
        return (self.density.r_moment(r, self.xi) * w).sum(axis=1)

    def copy(self):
        return dataclasses.replace(
            self, xi=self.xi.copy(), p_prev=self.p_prev.copy(),
            G0=self.G0.copy(), V0=self.V0.copy(), heat=self.heat.copy(),
        )
