"""Spatial discretisations and their assembled forms.

Two modes share one interface (:class:`Forms`):

``spectral``
    1D column on ``(0, 1)``.  Displacement in the Dirichlet eigenbasis
    ``sqrt2 sin(k pi x)``, pressure and temperature in the Neumann eigenbasis
    ``{1, sqrt2 cos(j pi x)}``.  Quadrature is the midpoint rule, which is
    exactly orthogonal for these bases, so every assembled matrix is the
    diagonal one up to roundoff while staying algebraically consistent with
    pointwise evaluations.  Plasticity is the scalar stop (uniaxial strain
    leaves no room for volume-preserving tensor flow).

``fem``
    Plane strain on the unit square with bilinear quadrilaterals, 2x2 Gauss
    quadrature, zero displacement on the whole boundary.  Tensor plasticity
    in Mandel storage.

Pointwise quantities live at the quadrature points; operators map
coefficient vectors to stacked point values, e.g. ``eps = (EPS @ u)``
reshaped to ``(nq, ncomp)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .hysteresis import PreisachBank
from .plasticity import SQRT2, PlasticBank

PROBES_1D = 64
PROBES_2D = 16


def _dense(a):
    return a.toarray() if sparse.issparse(a) else np.asarray(a)


class Forms:
    """Common interface; see the module docstring."""

    mode: str
    dim: int
    ncomp: int
    nq: int
    nu: int
    ns: int
    volume = 1.0

    def strain(self, u):
        return (self.EPS @ u).reshape(self.nq, self.ncomp)

    def velocity(self, w):
        return (self.U @ w).reshape(self.nq, self.dim)

    def div(self, w):
        return self.DIV @ w

    def scalar(self, c):
        return self.S @ c

    def grad(self, c):
        return (self.GS @ c).reshape(self.nq, self.dim)

    def boundary(self, c):
        return self.SB @ c

    def _t(self, name):
        """Cached transpose of an operator (a view for dense arrays)."""
        cache = self.__dict__.setdefault("_transposes", {})
        if name not in cache:
            op = getattr(self, name)
            cache[name] = op.T.tocsr() if sparse.issparse(op) else op.T
        return cache[name]

    def strain_load(self, stress):
        """``sum_q W_q stress_q : eps(phi)`` for every displacement test function."""
        return self._t("EPS") @ (self.W[:, None] * stress).ravel()

    def div_load(self, values):
        return self._t("DIV") @ (self.W * values)

    def scalar_load(self, values):
        return self._t("S") @ (self.W * values)

    def boundary_load(self, values):
        """``sum_b WB_b values_b psi(x_b)``."""
        return self._t("SB") @ (self.WB * values)

    def weighted_mass(self, coef):
        """``sum_q W_q coef_q psi_i psi_j`` as a dense matrix."""
        return self.S.T @ ((self.W * coef)[:, None] * self.S)

    def integrate(self, values):
        return float(np.sum(self.W * values))

    def weighted_grad_form(self, coef):
        """``sum_q W_q coef_q grad(psi_i) . grad(psi_j)`` as a dense matrix."""
        wq = np.repeat(self.W * coef, self.dim)
        return self.GS.T @ (wq[:, None] * self.GS)

    def probe_points(self):
        raise NotImplementedError

    def probe_scalar(self, c):
        return self.P_s @ c

    def probe_scalar_grad(self, c):
        return (self.P_g @ c).reshape(-1, self.dim)

    def probe_vector(self, u):
        return (self.P_v @ u).reshape(-1, self.dim)


# --------------------------------------------------------------------------
# spectral column
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralBasis1D:
    n: int
    viscous_modulus: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("spectral basis needs at least one mode")

    @property
    def k(self):
        return np.arange(1, self.n + 1)

    @property
    def j(self):
        return np.arange(0, self.n + 1)

    @property
    def lambdas(self):
        """Eigenvalues of ``-b d^2/dx^2`` with zero Dirichlet data, ``b (k pi)^2``."""
        return self.viscous_modulus * (self.k * math.pi) ** 2

    @property
    def mus(self):
        return (self.j * math.pi) ** 2

    def e(self, x):
        return SQRT2 * np.sin(np.outer(np.atleast_1d(x), self.k) * math.pi)

    def de(self, x):
        return SQRT2 * math.pi * self.k * np.cos(np.outer(np.atleast_1d(x), self.k) * math.pi)

    def w(self, x):
        out = SQRT2 * np.cos(np.outer(np.atleast_1d(x), self.j) * math.pi)
        out[:, 0] = 1.0
        return out

    def dw(self, x):
        out = -SQRT2 * math.pi * self.j * np.sin(np.outer(np.atleast_1d(x), self.j) * math.pi)
        out[:, 0] = 0.0
        return out


class SpectralForms(Forms):
    mode = "spectral"
    dim = 1
    ncomp = 1

    def __init__(self, n, params, nq=None):
        self.n = int(n)
        self.nq = int(nq) if nq else 4 * self.n
        if self.nq <= self.n:
            raise ValueError("spectral quadrature needs more nodes than modes")
        b = params.B.uniaxial
        self.basis = SpectralBasis1D(self.n, b)
        self.nu = self.n
        self.ns = self.n + 1
        x = (np.arange(self.nq) + 0.5) / self.nq
        self.xq = x[:, None]
        self.W = np.full(self.nq, 1.0 / self.nq)
        E, dE = self.basis.e(x), self.basis.de(x)
        self.U = E
        self.EPS = dE
        self.DIV = dE
        self.S = self.basis.w(x)
        self.GS = self.basis.dw(x)
        self.SB = self.basis.w(np.array([0.0, 1.0]))
        self.WB = np.array([1.0, 1.0])
        W = self.W[:, None]
        self.M_u = E.T @ (W * E)
        self.K_B = b * dE.T @ (W * dE)
        self.K_e = params.Ae.uniaxial * dE.T @ (W * dE)
        self.K_p = params.Ap.uniaxial * dE.T @ (W * dE)
        self._Bop = E * self.basis.lambdas
        self.D = self._Bop.T @ (W * self._Bop)
        self.M_t = self.S.T @ (W * self.S)
        self.M_s = self.M_t
        self.C = self.S.T @ (W * self.DIV)
        self.ones = np.zeros(self.ns)
        self.ones[0] = 1.0
        self.lumped_u = np.diag(self.M_u).copy()
        self._build_probes()

    def g_load(self, g):
        g = np.atleast_1d(np.asarray(g, dtype=float))
        return self.U.T @ (self.W * g[0])

    def delta_heat(self, dw, delta):
        z = self._Bop @ dw
        dens = 0.5 * delta * z * z
        return self.scalar_load(dens), self.integrate(dens)

    def project_scalar(self, func):
        vals = np.asarray(func(self.xq), dtype=float).reshape(self.nq)
        return np.linalg.solve(self.M_s, self.scalar_load(vals))

    def project_vector(self, func):
        vals = np.asarray(func(self.xq), dtype=float).reshape(self.nq, 1)
        return np.linalg.solve(self.M_u, self.U.T @ (self.W * vals[:, 0]))

    def probe_points(self):
        return ((np.arange(PROBES_1D) + 0.5) / PROBES_1D)[:, None]

    def _build_probes(self):
        x = self.probe_points()[:, 0]
        self.P_s = self.basis.w(x)
        self.P_g = self.basis.dw(x)
        self.P_v = self.basis.e(x)

    def viscous_min_eigenvalue(self):
        return float(self.basis.lambdas[0])


# --------------------------------------------------------------------------
# plane-strain finite elements
# --------------------------------------------------------------------------

_GP = 1.0 / math.sqrt(3.0)
_LOCAL = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def _q1(xi, eta):
    """Bilinear shape functions and their reference derivatives at one point."""
    N = 0.25 * (1 + _LOCAL[:, 0] * xi) * (1 + _LOCAL[:, 1] * eta)
    dN = np.stack(
        [0.25 * _LOCAL[:, 0] * (1 + _LOCAL[:, 1] * eta),
         0.25 * _LOCAL[:, 1] * (1 + _LOCAL[:, 0] * xi)],
        axis=1,
    )
    return N, dN


@dataclass(frozen=True)
class Mesh2D:
    """Structured quadrilateral mesh of ``[0, Lx] x [0, Ly]``."""

    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or not (self.Lx > 0 and self.Ly > 0):
            raise ValueError(f"degenerate mesh: nx={self.nx}, ny={self.ny}, L=({self.Lx}, {self.Ly})")

    @property
    def nodes(self):
        x = np.linspace(0.0, self.Lx, self.nx + 1)
        y = np.linspace(0.0, self.Ly, self.ny + 1)
        X, Y = np.meshgrid(x, y)
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def elements(self):
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        i, j = i.ravel(), j.ravel()
        n0 = i + (self.nx + 1) * j
        return np.column_stack([n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1])

    @property
    def boundary_nodes(self):
        xy = self.nodes
        tol = 1e-12
        return np.nonzero(
            (xy[:, 0] < tol) | (xy[:, 0] > self.Lx - tol) | (xy[:, 1] < tol) | (xy[:, 1] > self.Ly - tol)
        )[0]

    @property
    def boundary_edges(self):
        """``(node_a, node_b, outward_normal)`` for every boundary edge."""
        nx, ny = self.nx, self.ny
        edges = []
        for i in range(nx):
            edges.append((i, i + 1, (0.0, -1.0)))
            top = i + (nx + 1) * ny
            edges.append((top + 1, top, (0.0, 1.0)))
        for j in range(ny):
            left = (nx + 1) * j
            edges.append((left + nx, left + nx + nx + 1, (1.0, 0.0)))
            edges.append((left + nx + 1, left, (-1.0, 0.0)))
        return edges

    def gauss(self):
        """Gauss points: coordinates, weights, shape values and physical gradients."""
        xy = self.nodes
        elems = self.elements
        pts, wts, Ns, dNs, conn = [], [], [], [], []
        for e in elems:
            X = xy[e]
            for gy in (-_GP, _GP):
                for gx in (-_GP, _GP):
                    N, dN = _q1(gx, gy)
                    J = dN.T @ X
                    detJ = np.linalg.det(J)
                    if detJ <= 0:
                        raise ValueError("mesh element with nonpositive Jacobian")
                    pts.append(N @ X)
                    wts.append(detJ)
                    Ns.append(N)
                    dNs.append(dN @ np.linalg.inv(J).T)
                    conn.append(e)
        return np.array(pts), np.array(wts), np.array(Ns), np.array(dNs), np.array(conn)


class FemForms(Forms):
    mode = "fem"
    dim = 2
    ncomp = 6

    def __init__(self, nx, ny, params):
        self.mesh = Mesh2D(int(nx), int(ny))
        mesh = self.mesh
        xq, W, N, dN, conn = mesh.gauss()
        self.xq, self.W = xq, W
        self.nq = W.size
        nn = mesh.n_nodes
        self.ns = nn
        interior = np.setdiff1d(np.arange(nn), mesh.boundary_nodes)
        self.interior = interior
        node_dof = -np.ones(nn, dtype=int)
        node_dof[interior] = np.arange(interior.size)
        self.node_dof = node_dof
        self.nu = 2 * interior.size

        rows, cols, vals = [], [], []
        S_r, S_c, S_v = [], [], []
        G_r, G_c, G_v = [], [], []
        U_r, U_c, U_v = [], [], []
        D_r, D_c, D_v = [], [], []
        h = SQRT2 * 0.5
        for q in range(self.nq):
            for a in range(4):
                node = conn[q, a]
                S_r.append(q); S_c.append(node); S_v.append(N[q, a])
                for d in range(2):
                    G_r.append(2 * q + d); G_c.append(node); G_v.append(dN[q, a, d])
                k = node_dof[node]
                if k < 0:
                    continue
                dx, dy = 2 * k, 2 * k + 1
                gx, gy = dN[q, a]
                U_r += [2 * q, 2 * q + 1]; U_c += [dx, dy]; U_v += [N[q, a], N[q, a]]
                D_r += [q, q]; D_c += [dx, dy]; D_v += [gx, gy]
                base = 6 * q
                rows += [base + 0, base + 1, base + 5, base + 5]
                cols += [dx, dy, dx, dy]
                vals += [gx, gy, h * gy, h * gx]
        nq = self.nq
        self.EPS = sparse.csr_matrix((vals, (rows, cols)), shape=(6 * nq, self.nu))
        self.U = sparse.csr_matrix((U_v, (U_r, U_c)), shape=(2 * nq, self.nu))
        self.DIV = sparse.csr_matrix((D_v, (D_r, D_c)), shape=(nq, self.nu))
        self.S = sparse.csr_matrix((S_v, (S_r, S_c)), shape=(nq, nn))
        self.GS = sparse.csr_matrix((G_v, (G_r, G_c)), shape=(2 * nq, nn))

        # boundary quadrature, two Gauss points per edge
        xy = mesh.nodes
        B_r, B_c, B_v, WB, xb = [], [], [], [], []
        for a, b, _n in mesh.boundary_edges:
            L = float(np.linalg.norm(xy[b] - xy[a]))
            for s in (-_GP, _GP):
                t = 0.5 * (1 + s)
                row = len(WB)
                B_r += [row, row]; B_c += [a, b]; B_v += [1 - t, t]
                WB.append(0.5 * L)
                xb.append((1 - t) * xy[a] + t * xy[b])
        self.SB = sparse.csr_matrix((B_v, (B_r, B_c)), shape=(len(WB), nn))
        self.WB = np.array(WB)
        self.xb = np.array(xb)

        self.M_u = self._mass_u()
        self.K_B = self._stiffness(params.B)
        self.K_e = self._stiffness(params.Ae)
        self.K_p = self._stiffness(params.Ap)
        self.lumped_u = self.M_u.sum(axis=1)
        self.D = self.K_B @ (self.K_B / self.lumped_u[:, None])
        self.M_s = _dense(self.S.T @ sparse.diags(W) @ self.S)
        self.lumped_s = self.M_s.sum(axis=1)
        self.M_t = np.diag(self.lumped_s)
        self.C = _dense(self.S.T @ sparse.diags(W) @ self.DIV)
        self.ones = np.ones(nn)
        self._build_probes()
        # node pairs of each quadrature point for fast weighted Gram matrices
        a_idx = np.repeat(conn, 4, axis=1)
        b_idx = np.tile(conn, (1, 4))
        self._pair_index = (a_idx * nn + b_idx).ravel()
        self._pair_NN = (np.repeat(N, 4, axis=1) * np.tile(N, (1, 4)))
        self._pair_GG = np.einsum("qad,qbd->qab", dN, dN).reshape(self.nq, 16)

    def _pair_sum(self, vals):
        out = np.bincount(self._pair_index, weights=vals.ravel(), minlength=self.ns * self.ns)
        return out.reshape(self.ns, self.ns)

    def weighted_mass(self, coef):
        return self._pair_sum((self.W * coef)[:, None] * self._pair_NN)

    def weighted_grad_form(self, coef):
        return self._pair_sum((self.W * coef)[:, None] * self._pair_GG)

    def _mass_u(self):
        wq = np.repeat(self.W, 2)
        return _dense(self.U.T @ sparse.diags(wq) @ self.U)

    def _stiffness(self, A):
        """``sum_q W_q A eps(phi_i) : eps(phi_j)`` for isotropic ``A``."""
        nq = self.nq
        E = self.EPS
        tr_rows = sparse.kron(sparse.identity(nq), sparse.csr_matrix(np.array([[1.0, 1.0, 1.0, 0, 0, 0]])))
        TR = tr_rows @ E
        wq6 = np.repeat(self.W, 6)
        dev = 2.0 * A.mu * (E.T @ sparse.diags(wq6) @ E)
        vol = A.lam * (TR.T @ sparse.diags(self.W) @ TR)
        return _dense(dev + vol)

    def g_load(self, g):
        g = np.asarray(g, dtype=float).reshape(-1)
        if g.size == 1:
            g = np.array([0.0, g[0]])
        vals = np.tile(g, self.nq) * np.repeat(self.W, 2)
        return self.U.T @ vals

    def delta_heat(self, dw, delta):
        z = (self.K_B @ dw) / self.lumped_u
        dof_energy = 0.5 * delta * self.lumped_u * z * z
        load = np.zeros(self.ns)
        np.add.at(load, self.interior, dof_energy[0::2] + dof_energy[1::2])
        return load, float(dof_energy.sum())

    def project_scalar(self, func):
        vals = np.asarray(func(self.xq), dtype=float).reshape(self.nq)
        return np.linalg.solve(self.M_s, self.scalar_load(vals))

    def project_vector(self, func):
        vals = np.asarray(func(self.xq), dtype=float).reshape(self.nq, 2)
        rhs = self.U.T @ (np.repeat(self.W, 2) * vals.ravel())
        return np.linalg.solve(self.M_u, rhs)

    # ---- probes ------------------------------------------------------------

    def probe_points(self):
        c = (np.arange(PROBES_2D) + 0.5) / PROBES_2D
        X, Y = np.meshgrid(c, c)
        return np.column_stack([X.ravel(), Y.ravel()])

    def _build_probes(self):
        m = self.mesh
        pts = self.probe_points()
        hx, hy = m.Lx / m.nx, m.Ly / m.ny
        i = np.clip((pts[:, 0] // hx).astype(int), 0, m.nx - 1)
        j = np.clip((pts[:, 1] // hy).astype(int), 0, m.ny - 1)
        xi = 2.0 * (pts[:, 0] - i * hx) / hx - 1.0
        eta = 2.0 * (pts[:, 1] - j * hy) / hy - 1.0
        elems = m.elements[i + m.nx * j]
        npts = pts.shape[0]
        rs, cs, vs, gr, gc, gv, vr, vc, vv = [], [], [], [], [], [], [], [], []
        for k in range(npts):
            N, dN = _q1(xi[k], eta[k])
            dN = dN * np.array([2.0 / hx, 2.0 / hy])
            for a, node in enumerate(elems[k]):
                rs.append(k); cs.append(node); vs.append(N[a])
                gr += [2 * k, 2 * k + 1]; gc += [node, node]; gv += [dN[a, 0], dN[a, 1]]
                dof = self.node_dof[node]
                if dof >= 0:
                    vr += [2 * k, 2 * k + 1]; vc += [2 * dof, 2 * dof + 1]; vv += [N[a], N[a]]
        self.P_s = sparse.csr_matrix((vs, (rs, cs)), shape=(npts, self.ns))
        self.P_g = sparse.csr_matrix((gv, (gr, gc)), shape=(2 * npts, self.ns))
        self.P_v = sparse.csr_matrix((vv, (vr, vc)), shape=(2 * npts, self.nu))

    def viscous_min_eigenvalue(self):
        from scipy.linalg import eigh

        return float(eigh(self.K_B, self.M_u, eigvals_only=True, subset_by_index=[0, 0])[0])


# --------------------------------------------------------------------------


def assemble(mode, sizes, params) -> Forms:
    """Build the forms for ``mode`` ('spectral' or 'fem').

    ``sizes`` is a mapping: ``n`` (and optional ``nq``) for the spectral
    column, ``nx`` and ``ny`` for the mesh.
    """
    if mode == "spectral":
        return SpectralForms(sizes["n"], params, sizes.get("nq"))
    if mode == "fem":
        return FemForms(sizes["nx"], sizes.get("ny", sizes["nx"]), params)
    raise ValueError(f"unknown discretisation mode {mode!r}")


def quad_states(forms: Forms, params, lam, p0_q, eps0_q, grid, density):
    """One Preisach memory and one plastic state per quadrature point."""
    bank_g = PreisachBank.create(lam, p0_q, grid, density)
    eps0 = np.asarray(eps0_q, dtype=float).reshape(forms.nq, forms.ncomp)
    bank_p = PlasticBank.create(eps0, params.Ap, params.Z)
    return bank_g, bank_p
