"""Material laws and the checks that keep them inside the admissible class."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import optimize

from .hysteresis import BoxDensity
from .plasticity import IsotropicTensor4, YieldSet


class HypothesisViolation(ValueError):
    """A material or data parameter breaks an admissibility condition.

    ``clause`` is a short stable identifier of the violated condition.
    """

    def __init__(self, clause, message):
        super().__init__(f"[{clause}] {message}")
        self.clause = clause


@dataclass(frozen=True)
class MaterialParams:
    rho_s: float = 1.0
    rho_l: float = 1.0
    c0: float = 1.0
    beta: float = 0.5
    theta_c: float = 0.0
    eta: float = 0.5
    omega: float = 0.5
    mu0: float = 0.5
    mu1: float = 1.0
    kappa0: float = 1.0
    kappa1: float = 0.1
    a_kappa: float = 0.5
    growth_a: float = 0.25
    growth_b: float = 1.0
    f1: float = 1.0
    sigma_y: float = 0.05
    lame_e_lambda: float = 1.0
    lame_e_mu: float = 1.0
    lame_p_lambda: float = 1.0
    lame_p_mu: float = 1.0
    preisach_rho: float = 0.5
    preisach_r: float = 1.0
    preisach_v: float = 1.0
    K: float = 1.0
    theta_bar: float = 1.0
    theta_star: float = 1.0
    gamma_p: float = 1.0
    gamma_theta: float = 1.0
    p_star_mean: float = 0.0
    p_star_amp: float = 0.5
    p_star_period: float = 1.0
    g: tuple = (0.0, 0.0)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @property
    def Ae(self):
        return IsotropicTensor4(self.lame_e_lambda, self.lame_e_mu)

    @property
    def Ap(self):
        return IsotropicTensor4(self.lame_p_lambda, self.lame_p_mu)

    @property
    def B(self):
        return IsotropicTensor4.viscosity(self.eta, self.omega)

    @property
    def Z(self):
        return YieldSet(self.sigma_y)

    def p_star(self, t):
        return self.p_star_mean + self.p_star_amp * math.sin(2.0 * math.pi * t / self.p_star_period)

    @property
    def p_star_bound(self):
        return abs(self.p_star_mean) + abs(self.p_star_amp)


# --------------------------------------------------------------------------
# cut-offs
# --------------------------------------------------------------------------


def cutoffs(z, R):
    """``(Q_R(z), K_R(z), Khat_R(z))``.

    ``Q_R`` clamps to ``[0, R]``, ``K_R`` is the dead-zone map that vanishes
    on ``[-R, R]`` and ``Khat_R(z) = int_0^z K_R'(s) s ds = (z^2 - R^2)_+ / 2``.
    """
    if not R > 0:
        raise ValueError("cut-off level must be positive")
    z = np.asarray(z, dtype=float)
    Q = np.maximum(0.0, np.minimum(z, R))
    Kr = np.maximum(z - R, np.minimum(0.0, z + R))
    Kh = np.where(np.abs(z) > R, 0.5 * (z * z - R * R), 0.0)
    if Q.ndim == 0:
        return float(Q), float(Kr), float(Kh)
    return Q, Kr, Kh


def cutoff_K_slope(z, R):
    return (np.abs(np.asarray(z, dtype=float)) > R).astype(float)


# --------------------------------------------------------------------------
# laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Mobility:
    """``mu(p) = mu0 + (mu1 - mu0) / (1 + p^2)`` and its primitive ``M``."""

    mu0: float
    mu1: float

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return self.mu0 + (self.mu1 - self.mu0) / (1.0 + p * p)

    def primitive(self, p):
        p = np.asarray(p, dtype=float)
        return self.mu0 * p + (self.mu1 - self.mu0) * np.arctan(p)

    def inverse_primitive(self, m, tol=1e-12):
        """Solve ``M(p) = m``; ``M`` is strictly increasing with slope in [mu0, mu1]."""
        m = float(m)
        lo, hi = m / self.mu1 - 2.0, m / self.mu0 + 2.0
        lo = min(lo, m / self.mu0 - 2.0)
        hi = max(hi, m / self.mu1 + 2.0)
        return optimize.brentq(lambda p: float(self.primitive(p)) - m, lo, hi, xtol=tol, rtol=1e-15)


@dataclass(frozen=True)
class Conductivity:
    """``kappa(theta) = kappa0 + kappa1 (1 + theta^2)^((1 + a_kappa)/2)``."""

    kappa0: float
    kappa1: float
    a_kappa: float

    def __call__(self, theta):
        t = np.asarray(theta, dtype=float)
        return self.kappa0 + self.kappa1 * (1.0 + t * t) ** (0.5 * (1.0 + self.a_kappa))


@dataclass(frozen=True)
class Saturation:
    """``f(p) = (f1/pi)(arctan p + pi/2)``, so that ``f'(p)(1+p^2) = f1/pi``."""

    f1: float

    def __call__(self, p):
        return (self.f1 / math.pi) * (np.arctan(np.asarray(p, dtype=float)) + 0.5 * math.pi)

    def derivative(self, p):
        p = np.asarray(p, dtype=float)
        return (self.f1 / math.pi) / (1.0 + p * p)

    def primitive(self, p):
        """``int_0^p f``."""
        p = np.asarray(p, dtype=float)
        return (self.f1 / math.pi) * (p * np.arctan(p) - 0.5 * np.log1p(p * p) + 0.5 * math.pi * p)

    def potential(self, p):
        """``p f(p) - int_0^p f``, the part of the capillary potential carried by ``f``."""
        p = np.asarray(p, dtype=float)
        return p * self(p) - self.primitive(p)

    @property
    def bounds(self):
        """``(f2, f3)`` of the two-sided slope condition."""
        c = self.f1 / math.pi
        return c, c


def mobility(params: MaterialParams) -> Mobility:
    return Mobility(params.mu0, params.mu1)


def conductivity(params: MaterialParams) -> Conductivity:
    return Conductivity(params.kappa0, params.kappa1, params.a_kappa)


def saturation_f(params: MaterialParams) -> Saturation:
    return Saturation(params.f1)


def default_density(params: MaterialParams) -> BoxDensity:
    return BoxDensity(params.preisach_rho, params.preisach_r, params.preisach_v)


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def _require(cond, clause, message):
    if not cond:
        raise HypothesisViolation(clause, message)


def validate(params: MaterialParams):
    """Check every admissibility condition; raise on the first failure."""
    p = params
    for name in ("rho_s", "rho_l", "c0", "theta_bar"):
        _require(getattr(p, name) > 0, "positivity", f"{name} must be positive, got {getattr(p, name)}")
    _require(p.eta > 0 and p.omega > 0, "viscosity",
             f"viscosity moduli eta, omega must be positive, got eta={p.eta}, omega={p.omega}")
    _require(0 < p.mu0 < p.mu1, "mobility-bounds",
             f"need 0 < mu0 < mu1, got mu0={p.mu0}, mu1={p.mu1}")
    _require(p.kappa1 >= 0 and p.kappa0 + p.kappa1 > 0, "conductivity-positive",
             f"need kappa1 >= 0 and kappa(0) = kappa0 + kappa1 > 0, got {p.kappa0}, {p.kappa1}")
    a, b = p.growth_a, p.growth_b
    _require(0 < a < b < 27.0 / 5.0 + 12.0 * a / 5.0, "conductivity-growth",
             f"need 0 < a < b < 27/5 + 12a/5, got a={a}, b={b}")
    if p.kappa1 > 0:
        _require(a <= p.a_kappa <= b, "conductivity-growth",
                 f"conductivity exponent a_kappa={p.a_kappa} outside the declared bracket [{a}, {b}]")
    else:
        _require(False, "conductivity-growth",
                 "kappa1 = 0 gives bounded conductivity, which has no superlinear growth")
    _require(p.f1 > 0, "saturation", f"f1 must be positive, got {p.f1}")
    _require(p.sigma_y > 0, "yield-set", f"yield radius must be positive, got {p.sigma_y}")
    for label, lam, mu in (("elastic", p.lame_e_lambda, p.lame_e_mu),
                           ("plastic", p.lame_p_lambda, p.lame_p_mu)):
        _require(mu > 0 and 3 * lam + 2 * mu > 0, "elasticity-tensor",
                 f"{label} tensor not positive definite (lambda={lam}, mu={mu})")
    _require(p.preisach_rho > 0 and p.preisach_r > 0 and p.preisach_v > 0, "preisach-density",
             "Preisach density parameters must be positive")
    _require(p.K > 0, "memory-cutoff", f"K must be positive, got {p.K}")
    _require(p.K >= p.p_star_bound, "memory-cutoff",
             f"K={p.K} must dominate sup|p*|={p.p_star_bound}")
    _require(p.theta_star >= p.theta_bar, "boundary-temperature",
             f"theta*={p.theta_star} below the floor theta_bar={p.theta_bar}")
    _require(p.gamma_p > 0, "boundary-permeability",
             f"gamma_p must be nonnegative and not identically zero, got {p.gamma_p}")
    _require(p.gamma_theta >= 0, "boundary-conductance",
             f"gamma_theta must be nonnegative, got {p.gamma_theta}")
    _require(p.p_star_period > 0, "boundary-pressure", "p* period must be positive")
    return True
