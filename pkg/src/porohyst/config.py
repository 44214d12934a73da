"""Flat ``section.key = value`` run configuration.

Sections
--------
``run``       ``preset`` (applied first, later lines override), ``resume``, ``out``
``material``  any :class:`~porohyst.constitutive.MaterialParams` field
``solver``    any :class:`~porohyst.solver.SolverConfig` field
``initial``   ``u0``, ``u1``, ``p0``, ``theta0``, ``memory`` selectors
``study``     ``vary`` and ``values`` for the refinement study

Initial-data selectors: ``zero``, ``const:V``, ``sine:A`` (``A prod sin(pi x_d)``;
vector fields get it in the first component), ``cosine:A`` and
``table:FILE`` (CSV with a header; coordinates first, then values).
Memory selectors: ``zero`` and ``ramp:A``.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import constitutive as cst
from .hysteresis import InitialMemoryCurve
from .solver import InitialData, SolverConfig


class ConfigError(ValueError):
    pass


PRESETS = {
    "smooth_1d": {
        "material.eta": "0.1",
        "material.omega": "0.1",
        "material.g": "0.1, 0.0",
        "solver.mode": "spectral",
        "solver.n": "8",
        "solver.dt": "1e-3",
        "solver.t_end": "1.0",
        "solver.R": "10",
        "solver.outer_max": "50",
        "solver.outer_tol": "1e-12",
        "solver.fp_tol": "1e-13",
        "solver.newton_tol": "1e-13",
        "initial.u1": "sine:0.5",
    },
    "smooth_2d": {
        "material.eta": "0.1",
        "material.omega": "0.1",
        "material.g": "0.0, -0.1",
        "solver.mode": "fem",
        "solver.nx": "8",
        "solver.ny": "8",
        "solver.dt": "1e-3",
        "solver.t_end": "0.5",
        "solver.R": "10",
        "solver.outer_max": "50",
        "solver.outer_tol": "1e-12",
        "solver.fp_tol": "1e-13",
        "solver.newton_tol": "1e-13",
        "initial.u1": "sine:0.5",
    },
    "zero": {
        "material.beta": "0",
        "material.p_star_amp": "0",
        "material.p_star_mean": "0",
        "material.g": "0, 0",
        "solver.mode": "spectral",
        "solver.n": "8",
        "solver.dt": "1e-3",
        "solver.t_end": "0.1",
    },
}
PRESETS["delta_sweep"] = dict(PRESETS["smooth_1d"])
PRESETS["delta_sweep"]["solver.delta_seq"] = ", ".join(repr(2.0 ** -i) for i in range(7))
PRESETS["dt_study"] = dict(PRESETS["smooth_1d"])
PRESETS["dt_study"].update({"study.vary": "dt", "study.values": "2e-3, 1e-3, 5e-4"})

INITIAL_KEYS = ("u0", "u1", "p0", "theta0", "memory")
STUDY_VARY = ("dt", "n", "nx", "delta", "R")


@dataclass
class RunConfig:
    params: cst.MaterialParams
    solver: SolverConfig
    initial: dict = field(default_factory=dict)
    preset: str | None = None
    resume: str | None = None
    study_vary: str | None = None
    study_values: tuple = ()
    base_dir: str = "."
    out: str | None = None

    def initial_data(self) -> InitialData:
        dim = 1 if self.solver.mode == "spectral" else 2
        sel = self.initial
        return InitialData(
            u0=field_selector(sel.get("u0", "zero"), dim, True, self.base_dir),
            u1=field_selector(sel.get("u1", "zero"), dim, True, self.base_dir),
            p0=field_selector(sel.get("p0", "zero"), dim, False, self.base_dir),
            theta0=None if "theta0" not in sel else field_selector(sel["theta0"], dim, False, self.base_dir),
            memory=memory_selector(sel.get("memory", "zero"), self.params.K),
        )


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def parse_lines(text):
    """``[(lineno, 'section.key', 'value')]``; raises on malformed lines."""
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.count(".") != 1 or not all(key.split(".")):
            raise ConfigError(f"line {no}: key {key!r} is not of the form section.key")
        out.append((no, key, value))
    return out


def _convert(value, default, key):
    try:
        if isinstance(default, bool):
            return value.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value.split(",") if v.strip())
        return value
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} ({exc})") from None


def build(assignments, base_dir=".") -> RunConfig:
    """Turn ``(lineno, key, value)`` assignments into a validated :class:`RunConfig`."""
    preset = None
    for no, key, value in assignments:
        if key == "run.preset":
            if value not in PRESETS:
                raise ConfigError(f"line {no}: unknown preset {value!r}; known: {sorted(PRESETS)}")
            preset = value
    merged = {}
    if preset:
        merged.update({k: (0, v) for k, v in PRESETS[preset].items()})
    for no, key, value in assignments:
        merged[key] = (no, value)

    mat_defaults = {f.name: f.default for f in dataclasses.fields(cst.MaterialParams)}
    sol_defaults = {f.name: f.default for f in dataclasses.fields(SolverConfig)}
    mat, sol, init = {}, {}, {}
    resume = out = None
    vary, values = None, ()
    for key, (no, value) in merged.items():
        section, name = key.split(".")
        where = f"line {no}: " if no else f"preset {preset}: "
        if section == "material":
            if name not in mat_defaults:
                raise ConfigError(f"{where}unknown key {key!r}")
            mat[name] = _convert(value, mat_defaults[name], key)
        elif section == "solver":
            if name not in sol_defaults:
                raise ConfigError(f"{where}unknown key {key!r}")
            sol[name] = _convert(value, sol_defaults[name], key)
        elif section == "initial":
            if name not in INITIAL_KEYS:
                raise ConfigError(f"{where}unknown key {key!r}")
            init[name] = value
        elif section == "run":
            if name == "preset":
                continue
            if name == "resume":
                resume = value if os.path.isabs(value) else os.path.join(base_dir, value)
            elif name == "out":
                out = value if os.path.isabs(value) else os.path.join(base_dir, value)
            else:
                raise ConfigError(f"{where}unknown key {key!r}")
        elif section == "study":
            if name == "vary":
                if value not in STUDY_VARY:
                    raise ConfigError(f"{where}study.vary must be one of {STUDY_VARY}")
                vary = value
            elif name == "values":
                values = _convert(value, (), key)
            else:
                raise ConfigError(f"{where}unknown key {key!r}")
        else:
            raise ConfigError(f"{where}unknown section {section!r}")

    params = cst.MaterialParams(**mat)
    solver = SolverConfig(**sol)
    cst.validate(params)
    try:
        solver.validate(params)
    except cst.HypothesisViolation:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(params, solver, init, preset, resume, vary, values, base_dir, out)
    for k, v in init.items():
        if k == "memory":
            memory_selector(v, params.K)
        else:
            _check_selector(v)
    return cfg


def load(path) -> RunConfig:
    with open(path) as fh:
        text = fh.read()
    return build(parse_lines(text), os.path.dirname(os.path.abspath(path)))


def loads(text, base_dir=".") -> RunConfig:
    return build(parse_lines(text), base_dir)


def from_preset(name, **overrides) -> RunConfig:
    """Preset plus ``section__key=value`` keyword overrides (handy in tests)."""
    lines = [(0, "run.preset", name)]
    for k, v in overrides.items():
        lines.append((0, k.replace("__", "."), str(v)))
    return build(lines)


# --------------------------------------------------------------------------
# selectors
# --------------------------------------------------------------------------


def _check_selector(sel):
    kind = sel.split(":", 1)[0]
    if kind not in ("zero", "const", "sine", "cosine", "table"):
        raise ConfigError(f"unknown initial-data selector {sel!r}")
    if kind in ("const", "sine", "cosine"):
        try:
            [float(v) for v in sel.split(":", 1)[1].split(",")]
        except (IndexError, ValueError):
            raise ConfigError(f"selector {sel!r} needs a numeric argument") from None


def field_selector(sel, dim, vector, base_dir="."):
    """Callable ``x -> values`` for an initial-data selector."""
    _check_selector(sel)
    kind, _, arg = sel.partition(":")
    ncomp = dim if vector else 1

    def shape(vals):
        vals = np.asarray(vals, dtype=float)
        if vector:
            return vals.reshape(-1, ncomp)
        return vals.reshape(-1)

    if kind == "zero":
        return lambda x: shape(np.zeros((x.shape[0], ncomp)))
    if kind == "const":
        c = [float(v) for v in arg.split(",")]
        if len(c) not in (1, ncomp):
            raise ConfigError(f"selector {sel!r}: expected 1 or {ncomp} values")
        c = np.broadcast_to(np.array(c), (ncomp,))
        return lambda x: shape(np.tile(c, (x.shape[0], 1)))
    if kind in ("sine", "cosine"):
        amp = float(arg.split(",")[0])
        fn = np.sin if kind == "sine" else np.cos

        def f(x):
            base = amp * np.prod(fn(math.pi * x), axis=1)
            out = np.zeros((x.shape[0], ncomp))
            out[:, 0] = base
            return shape(out)

        return f
    path = arg if os.path.isabs(arg) else os.path.join(base_dir, arg)
    return _table(path, dim, ncomp, shape)


def _table(path, dim, ncomp, shape):
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from None
    if data.shape[1] != dim + ncomp:
        raise ConfigError(f"table {path}: expected {dim + ncomp} columns, got {data.shape[1]}")
    pts, vals = data[:, :dim], data[:, dim:]
    if dim == 1:
        order = np.argsort(pts[:, 0])

        def f(x):
            return shape(np.column_stack([np.interp(x[:, 0], pts[order, 0], vals[order, c]) for c in range(ncomp)]))

        return f
    from scipy.interpolate import griddata

    def f(x):
        lin = griddata(pts, vals, x, method="linear")
        near = griddata(pts, vals, x, method="nearest")
        lin = np.where(np.isnan(lin), near, lin)
        return shape(lin)

    return f


def memory_selector(sel, K):
    kind, _, arg = sel.partition(":")
    if kind == "zero":
        return InitialMemoryCurve.zero(K)
    if kind == "ramp":
        try:
            amp = float(arg)
        except ValueError:
            raise ConfigError(f"memory selector {sel!r} needs a numeric amplitude") from None
        if abs(amp) > K:
            raise cst.HypothesisViolation("memory-cutoff", f"ramp amplitude {amp} exceeds K={K}")
        return InitialMemoryCurve.ramp(amp, K)
    raise ConfigError(f"unknown memory selector {sel!r}")


def dump(cfg: RunConfig) -> str:
    """Config text that rebuilds ``cfg`` (every field written explicitly)."""
    lines = []
    for f in dataclasses.fields(cst.MaterialParams):
        v = getattr(cfg.params, f.name)
        lines.append(f"material.{f.name} = {_show(v)}")
    for f in dataclasses.fields(SolverConfig):
        v = getattr(cfg.solver, f.name)
        if isinstance(v, tuple) and not v:
            continue
        lines.append(f"solver.{f.name} = {_show(v)}")
    for k, v in cfg.initial.items():
        lines.append(f"initial.{k} = {v}")
    if cfg.study_vary:
        lines.append(f"study.vary = {cfg.study_vary}")
        lines.append(f"study.values = {_show(cfg.study_values)}")
    return "\n".join(lines) + "\n"


def _show(v):
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)
