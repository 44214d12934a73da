"""Checkpoint files.

Layout: a version line, then blocks ``## name rows cols`` each followed by
``rows`` CSV lines.  Floats are written with ``repr`` so a load returns the
exact bits that were saved.
"""

from __future__ import annotations

import numpy as np

from .hysteresis import MemoryState, RGrid
from .plasticity import PlasticPointState

VERSION = "# porohyst snapshot v1"


def _write_block(fh, name, arr):
    a = np.asarray(arr, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    fh.write(f"## {name} {a.shape[0]} {a.shape[1]}\n")
    for row in a:
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_blocks(lines, version=VERSION):
    if not lines or lines[0].rstrip("\n") != version:
        raise ValueError(f"not a snapshot file (expected header {version!r})")
    blocks = {}
    i = 1
    while i < len(lines):
        head = lines[i].split()
        if len(head) != 4 or head[0] != "##":
            raise ValueError(f"malformed snapshot block header at line {i + 1}: {lines[i]!r}")
        name, rows, cols = head[1], int(head[2]), int(head[3])
        body = lines[i + 1 : i + 1 + rows]
        if len(body) != rows:
            raise ValueError(f"snapshot block {name} truncated")
        arr = np.array([[float(v) for v in ln.split(",")] for ln in body]).reshape(rows, cols)
        blocks[name] = arr
        i += 1 + rows
    return blocks


# --------------------------------------------------------------------------
# full simulation state
# --------------------------------------------------------------------------


def save(path, state):
    with open(path, "w") as fh:
        fh.write(VERSION + "\n")
        _write_block(fh, "time", [[state.t, state.step]])
        _write_block(fh, "u", state.u)
        _write_block(fh, "w", state.w)
        _write_block(fh, "p", state.p)
        _write_block(fh, "theta", state.theta)
        g = state.preisach
        _write_block(fh, "rgrid.nodes", g.grid.nodes)
        _write_block(fh, "rgrid.weights", g.grid.weights)
        _write_block(fh, "rgrid.cap", [g.grid.cap])
        _write_block(fh, "preisach.xi", g.xi)
        _write_block(fh, "preisach.p_prev", g.p_prev)
        _write_block(fh, "preisach.G0", g.G0)
        _write_block(fh, "preisach.V0", g.V0)
        _write_block(fh, "preisach.heat", g.heat)
        pl = state.plastic
        _write_block(fh, "plastic.sigma", pl.sigma)
        _write_block(fh, "plastic.dissipation", pl.dissipation)
        _write_block(fh, "plastic.plastic_length", pl.plastic_length)


def load(path, sim):
    """Rebuild a :class:`~porohyst.solver.FieldState` for ``sim`` from ``path``."""
    from .hysteresis import PreisachBank
    from .plasticity import PlasticBank
    from .solver import FieldState

    with open(path) as fh:
        b = _read_blocks(fh.readlines())
    f = sim.forms
    for name, n in (("u", f.nu), ("w", f.nu), ("p", f.ns), ("theta", f.ns)):
        if b[name].shape[0] != n:
            raise ValueError(f"snapshot field {name} has {b[name].shape[0]} entries, discretisation needs {n}")
    if b["preisach.xi"].shape[0] != f.nq or b["plastic.sigma"].shape != (f.nq, f.ncomp):
        raise ValueError("snapshot hysteresis arrays do not match the quadrature")
    grid = RGrid(b["rgrid.nodes"][:, 0], b["rgrid.weights"][:, 0], float(b["rgrid.cap"][0, 0]))
    bank_g = PreisachBank(
        grid, sim.density, np.ascontiguousarray(b["preisach.xi"]), b["preisach.p_prev"][:, 0].copy(),
        b["preisach.G0"][:, 0].copy(), b["preisach.V0"][:, 0].copy(), b["preisach.heat"][:, 0].copy(),
    )
    bank_p = PlasticBank(
        np.ascontiguousarray(b["plastic.sigma"]), sim.params.Ap, sim.params.Z,
        b["plastic.dissipation"][:, 0].copy(), b["plastic.plastic_length"][:, 0].copy(),
    )
    t, step = b["time"][0]
    return FieldState(
        b["u"][:, 0].copy(), b["w"][:, 0].copy(), b["p"][:, 0].copy(), b["theta"][:, 0].copy(),
        float(t), int(step), bank_g, bank_p,
    )


# --------------------------------------------------------------------------
# single-point records
# --------------------------------------------------------------------------


def memory_record(state: MemoryState) -> str:
    """Flat text record of one Preisach memory state."""
    import io

    buf = io.StringIO()
    buf.write(VERSION + "\n")
    _write_block(buf, "rgrid.nodes", state.grid.nodes)
    _write_block(buf, "rgrid.weights", state.grid.weights)
    _write_block(buf, "rgrid.cap", [state.grid.cap])
    _write_block(buf, "xi", state.xi)
    _write_block(buf, "ledger", [[state.p_prev, state.G0, state.V0, state.D0, state.heat]])
    return buf.getvalue()


def memory_from_record(text: str) -> MemoryState:
    b = _read_blocks(text.splitlines(True))
    grid = RGrid(b["rgrid.nodes"][:, 0], b["rgrid.weights"][:, 0], float(b["rgrid.cap"][0, 0]))
    p_prev, G0, V0, D0, heat = b["ledger"][0]
    return MemoryState(grid, b["xi"][:, 0].copy(), float(p_prev), float(G0), float(V0), float(D0), float(heat))


def plastic_record(state: PlasticPointState) -> str:
    import io

    buf = io.StringIO()
    buf.write(VERSION + "\n")
    _write_block(buf, "sigma", np.atleast_1d(state.sigma))
    _write_block(buf, "ledger", [[state.dissipation, state.plastic_length]])
    return buf.getvalue()


def plastic_from_record(text: str) -> PlasticPointState:
    b = _read_blocks(text.splitlines(True))
    d, ell = b["ledger"][0]
    return PlasticPointState(b["sigma"][:, 0].copy(), float(d), float(ell))
