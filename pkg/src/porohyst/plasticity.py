"""Symmetric tensors, the von Mises yield set and the elastoplastic stop.

Tensors are numpy arrays whose last axis holds the six Mandel components
``[xx, yy, zz, sqrt2*yz, sqrt2*xz, sqrt2*xy]``; with this scaling the
Frobenius product of two tensors is the dot product of their vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

SQRT2 = math.sqrt(2.0)
IDENTITY = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


# --------------------------------------------------------------------------
# tensor algebra
# --------------------------------------------------------------------------


def from_matrix(m):
    """Mandel vector(s) of symmetric 3x3 matrices ``m[..., 3, 3]``."""
    m = np.asarray(m, dtype=float)
    return np.stack(
        [m[..., 0, 0], m[..., 1, 1], m[..., 2, 2],
         SQRT2 * m[..., 1, 2], SQRT2 * m[..., 0, 2], SQRT2 * m[..., 0, 1]],
        axis=-1,
    )


def to_matrix(v):
    v = np.asarray(v, dtype=float)
    m = np.empty(v.shape[:-1] + (3, 3))
    for c, (i, j) in enumerate(_PAIRS):
        val = v[..., c] if c < 3 else v[..., c] / SQRT2
        m[..., i, j] = val
        m[..., j, i] = val
    return m


def trace(v):
    v = np.asarray(v)
    return v[..., 0] + v[..., 1] + v[..., 2]


def deviator(v):
    v = np.array(v, dtype=float)
    v[..., :3] -= (trace(v) / 3.0)[..., None]
    return v


def inner(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def norm(v):
    return np.sqrt(inner(v, v))


@dataclass(frozen=True)
class YieldSet:
    """``Z = {tau : |dev tau| <= sigma_y}``, a von Mises cylinder."""

    sigma_y: float

    def __post_init__(self):
        if not self.sigma_y > 0:
            raise ValueError("yield radius must be positive")

    def contains(self, tau, rtol=1e-12):
        return norm(deviator(tau)) <= self.sigma_y * (1.0 + rtol)

    @property
    def diameter(self):
        return 2.0 * self.sigma_y


@dataclass(frozen=True)
class IsotropicTensor4:
    """``A x = 2 mu x + lam tr(x) I``."""

    lam: float
    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and 3.0 * self.lam + 2.0 * self.mu > 0):
            raise ValueError(
                f"isotropic tensor not positive definite (lam={self.lam}, mu={self.mu})"
            )

    @classmethod
    def viscosity(cls, eta, omega):
        """The viscosity tensor ``B_ijkl = 2 eta d_ik d_jl + omega d_kl d_ij``."""
        return cls(lam=omega, mu=eta)

    @property
    def bulk3(self):
        """Eigenvalue on the volumetric direction, ``3 lam + 2 mu``."""
        return 3.0 * self.lam + 2.0 * self.mu

    @property
    def uniaxial(self):
        """Modulus of a uniaxial strain state, ``lam + 2 mu``."""
        return self.lam + 2.0 * self.mu

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.mu * x + self.lam * trace(x)[..., None] * IDENTITY

    def solve(self, y):
        y = np.asarray(y, dtype=float)
        return y / (2.0 * self.mu) - (
            self.lam / (2.0 * self.mu * self.bulk3)
        ) * trace(y)[..., None] * IDENTITY

    def metric(self, x, y):
        """``<x, y> = (A^{-1} x) : y``."""
        return inner(self.solve(x), y)


@dataclass
class PlasticPointState:
    """Plastic stress at one point plus its dissipation ledger."""

    sigma: np.ndarray = field(default_factory=lambda: np.zeros(6))
    dissipation: float = 0.0
    plastic_length: float = 0.0


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------


def project_Z(tau, Z: YieldSet, Ap: IsotropicTensor4):
    """Projection onto ``Z`` in the metric ``<x, y> = (A^p)^{-1} x : y``.

    For isotropic ``A^p`` the metric splits into deviatoric and volumetric
    parts, so the projection keeps the trace and shrinks the deviator onto
    the ball of radius ``sigma_y`` (radial return).
    """
    tau = np.asarray(tau, dtype=float)
    s = deviator(tau)
    ns = norm(s)
    factor = np.where(ns > Z.sigma_y, Z.sigma_y / np.where(ns > 0, ns, 1.0), 1.0)
    return tau - s + s * np.asarray(factor)[..., None]


def stop_init(eps0, Ap: IsotropicTensor4, Z: YieldSet) -> PlasticPointState:
    return PlasticPointState(project_Z(Ap.apply(eps0), Z, Ap))


def stop_step(state: PlasticPointState, deps, Ap: IsotropicTensor4, Z: YieldSet):
    """Catch-up step for a strain increment ``deps``.

    Returns ``(new_state, dq, deps_p)`` where ``dq`` is the heat released,
    ``sigma_new : deps - (<sigma_new, sigma_new> - <sigma_old, sigma_old>)/2``.
    """
    sig, deps_p, dq = kernels.radial_return(
        np.asarray(state.sigma, float)[None, :],
        np.asarray(deps, float)[None, :],
        Ap.mu,
        Ap.lam,
        Z.sigma_y,
    )
    dq = float(dq[0])
    new = PlasticPointState(
        sig[0], state.dissipation + dq, state.plastic_length + float(norm(deps_p[0]))
    )
    return new, dq, deps_p[0]


def p_operator(eps, state: PlasticPointState, Ae: IsotropicTensor4):
    """Elastoplastic stress ``A^e eps + sigma^p``."""
    return Ae.apply(eps) + state.sigma


def vp_energy(eps, state: PlasticPointState, Ae: IsotropicTensor4, Ap: IsotropicTensor4):
    """Stored energy ``A^e eps : eps / 2 + <sigma^p, sigma^p> / 2``."""
    return float(0.5 * inner(Ae.apply(eps), eps) + 0.5 * Ap.metric(state.sigma, state.sigma))


def minkowski_polar(e, Z: YieldSet) -> float:
    """Gauge of the polar set of ``Z``: ``sigma_y |e|`` on deviators, else infinite."""
    e = np.asarray(e, dtype=float)
    n = float(norm(e))
    if abs(float(trace(e))) > 1e-10 * n:
        return math.inf
    return Z.sigma_y * n


# --------------------------------------------------------------------------
# scalar variant used by the 1D column mode
# --------------------------------------------------------------------------


def scalar_stop_step(sigma_old, deps, a_p, sigma_y):
    """Stop on ``[-sigma_y, sigma_y]``; uniaxial stand-in for the tensor stop."""
    sig, ep, dq = kernels.scalar_stop(
        np.atleast_1d(np.asarray(sigma_old, float)),
        np.atleast_1d(np.asarray(deps, float)),
        float(a_p),
        float(sigma_y),
    )
    return sig, ep, dq


@dataclass
class PlasticBank:
    """Plastic stresses of all strain quadrature points.

    ``ncomp`` is 6 for the tensor model and 1 for the scalar column variant.
    """

    sigma: np.ndarray
    Ap: IsotropicTensor4
    Z: YieldSet
    dissipation: np.ndarray = None
    plastic_length: np.ndarray = None

    def __post_init__(self):
        n = self.sigma.shape[0]
        if self.dissipation is None:
            self.dissipation = np.zeros(n)
        if self.plastic_length is None:
            self.plastic_length = np.zeros(n)

    @property
    def scalar(self):
        return self.sigma.shape[1] == 1

    @classmethod
    def create(cls, eps0, Ap, Z):
        eps0 = np.asarray(eps0, dtype=float)
        if eps0.shape[1] == 1:
            sig = np.clip(Ap.uniaxial * eps0, -Z.sigma_y, Z.sigma_y)
        else:
            sig = project_Z(Ap.apply(eps0), Z, Ap)
        return cls(sig, Ap, Z)

    def __len__(self):
        return self.sigma.shape[0]

    def __getitem__(self, i) -> PlasticPointState:
        return PlasticPointState(
            self.sigma[i].copy(), float(self.dissipation[i]), float(self.plastic_length[i])
        )

    def trial(self, deps):
        """``(sigma_new, deps_p, dq)`` for strain increments ``deps``."""
        deps = np.ascontiguousarray(deps, dtype=float)
        if self.scalar:
            s, ep, dq = kernels.scalar_stop(
                np.ascontiguousarray(self.sigma[:, 0]), deps[:, 0], self.Ap.uniaxial, self.Z.sigma_y
            )
            return s[:, None], ep[:, None], dq
        return kernels.radial_return(
            np.ascontiguousarray(self.sigma), deps, self.Ap.mu, self.Ap.lam, self.Z.sigma_y
        )

    def commit(self, trial):
        sig, ep, dq = trial
        self.sigma = sig
        self.dissipation = self.dissipation + dq
        self.plastic_length = self.plastic_length + np.sqrt(np.sum(ep * ep, axis=1))

    def stored(self):
        """Per-point ``<sigma, sigma> / 2``."""
        if self.scalar:
            return 0.5 * self.sigma[:, 0] ** 2 / self.Ap.uniaxial
        return 0.5 * self.Ap.metric(self.sigma, self.sigma)

    def copy(self):
        return PlasticBank(
            self.sigma.copy(), self.Ap, self.Z, self.dissipation.copy(), self.plastic_length.copy()
        )
