"""Discrete p-Dirichlet energies and the linear algebra behind them.

Cartesian grids are split into Kuhn simplices: every cube is cut into n!
simplices, one per ordering of the axes, and a P1 function on a simplex has
gradient components equal to the forward differences along the path that
walks the cube's edges in that order.  Hence

    |Dφ|^2 on a simplex = Σ_k (φ(v_k) - φ(v_{k-1}))^2 / h^2

and every weighted quadratic form built from the simplices is an edge
Laplacian on the grid's axis edges.  For p = 2 it reduces to the familiar
(2n + 1)-point stencil with edge weight h^(n-2).

Sphere meshes use the same idea with the path simplices listed in
:class:`~wienerdecay.geometry.SphereMesh`.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError

DIRECT_LIMIT = {2: 1_500_000, 3: 60_000}


def solve_spd(A, b, ndim=2, tol=1e-11, x0=None):
    """Solve a sparse SPD system: sparse LU when small, Jacobi-CG otherwise."""
    A = sp.csr_matrix(A)
    if A.shape[0] == 0:
        return np.zeros(0)
    if A.shape[0] <= DIRECT_LIMIT.get(ndim, 60_000):
        return spla.spsolve(A.tocsc(), b)
    d = A.diagonal()
    M = sp.diags(1.0 / d)
    x, info = spla.cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=20 * A.shape[0], M=M)
    if info != 0:
        r = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300)
        raise ConvergenceError(f"conjugate gradients stopped (info={info})", residual=r)
    return x


# ---------------------------------------------------------------------------
# Cartesian grids


def _sl(offset, shape):
    """Slice selecting cells (length m-1 per axis) shifted by ``offset``."""
    out = []
    for o, m in zip(offset, shape):
        out.append(slice(o, o + m - 1))
    return tuple(out)


class CartesianEnergy:
    """Kuhn-simplex p-energy  E(φ) = Σ_T |T| |Dφ_T|^p  on a full grid array."""

    def __init__(self, shape, h, p, reg2=0.0):
        self.shape = tuple(shape)
        self.n = len(self.shape)
        self.h = float(h)
        self.p = float(p)
        self.reg2 = float(reg2)
        self.perms = list(itertools.permutations(range(self.n)))
        self.vol = self.h**self.n / math.factorial(self.n)

    def _paths(self):
        """Yield (perm, [(axis, start_offset, end_offset) per path step])."""
        for perm in self.perms:
            off = [0] * self.n
            steps = []
            for a in perm:
                start = tuple(off)
                off[a] += 1
                steps.append((a, start, tuple(off)))
            yield perm, steps

    def simplex_g2(self, phi):
        """List (one array per axis ordering) of squared gradients per cell."""
        out = []
        h2 = self.h * self.h
        for _, steps in self._paths():
            g2 = 0.0
            for _, s0, s1 in steps:
                d = phi[_sl(s1, self.shape)] - phi[_sl(s0, self.shape)]
                g2 = g2 + d * d
            out.append(g2 / h2)
        return out

    def energy(self, phi) -> float:
        half_p = self.p / 2.0
        total = 0.0
        for g2 in self.simplex_g2(phi):
            total += float(np.sum(g2**half_p))
        return self.vol * total

    def edge_weights(self, phi=None):
        """Per-axis edge weight arrays of the quadratic form Σ_T |T| w_T |Dφ_T|^2.

        ``w_T = (|Dφ_T|^2 + reg2)^((p-2)/2)`` (lagged diffusivity); for p = 2 or
        ``phi is None`` w_T = 1, which gives h^(n-2) on interior edges and a
        fraction of it on edges lying in the grid's outer faces.
        """
        n, shape = self.n, self.shape
        W = []
        for a in range(n):
            s = list(shape)
            s[a] -= 1
            W.append(np.zeros(s))
        scale = self.vol / self.h**2
        linear = self.p == 2.0 or phi is None
        g2s = [None] * len(self.perms) if linear else self.simplex_g2(phi)
        for g2, (_, steps) in zip(g2s, self._paths()):
            w = scale if linear else scale * (g2 + self.reg2) ** ((self.p - 2.0) / 2.0)
            for a, s0, _ in steps:
                idx = []
                for b in range(n):
                    if b == a:
                        idx.append(slice(0, shape[b] - 1))
                    else:
                        idx.append(slice(s0[b], s0[b] + shape[b] - 1))
                W[a][tuple(idx)] += w
        return W


def edge_system(W, free, values):
    """Assemble  A u_free = rhs  for the edge Laplacian with weights ``W``.

    ``free`` marks unknown nodes, ``values`` supplies the data on fixed nodes.
    Returns (A, rhs, index) where ``index`` maps grid nodes to unknowns (-1 if
    fixed).
    """
    shape = free.shape
    nfree = int(free.sum())
    index = np.full(shape, -1, dtype=np.int64)
    index[free] = np.arange(nfree)
    diag = np.zeros(nfree)
    rhs = np.zeros(nfree)
    rows, cols, vals = [], [], []
    n = len(shape)
    for a in range(n):
        lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(n))
        hi = tuple(slice(1, None) if b == a else slice(None) for b in range(n))
        i0, i1 = index[lo].ravel(), index[hi].ravel()
        w = np.broadcast_to(W[a], index[lo].shape).ravel()
        v0, v1 = values[lo].ravel(), values[hi].ravel()
        keep = ((i0 >= 0) | (i1 >= 0)) & (w != 0)
        i0, i1, w, v0, v1 = i0[keep], i1[keep], w[keep], v0[keep], v1[keep]
        f0, f1 = i0 >= 0, i1 >= 0
        diag += np.bincount(i0[f0], weights=w[f0], minlength=nfree)
        diag += np.bincount(i1[f1], weights=w[f1], minlength=nfree)
        both = f0 & f1
        rows += [i0[both], i1[both]]
        cols += [i1[both], i0[both]]
        vals += [-w[both], -w[both]]
        m0 = f0 & ~f1
        rhs += np.bincount(i0[m0], weights=w[m0] * v1[m0], minlength=nfree)
        m1 = f1 & ~f0
        rhs += np.bincount(i1[m1], weights=w[m1] * v0[m1], minlength=nfree)
    rows.append(np.arange(nfree))
    cols.append(np.arange(nfree))
    vals.append(diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nfree, nfree))
    return A, rhs, index


def edge_apply(W, u):
    """Apply the (unrestricted) edge Laplacian with weights ``W`` to a grid array."""
    out = np.zeros_like(u)
    n = u.ndim
    for a in range(n):
        lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(n))
        hi = tuple(slice(1, None) if b == a else slice(None) for b in range(n))
        flux = W[a] * (u[lo] - u[hi])
        out[lo] += flux
        out[hi] -= flux
    return out


def minimize_dirichlet(energy: CartesianEnergy, free, values, *, tol=1e-8, max_iter=10_000,
                       phi0=None):
    """Minimise the p-energy over grid functions equal to ``values`` off ``free``.

    p = 2 is a single linear solve.  Otherwise lagged-diffusivity (Kačanov)
    steps are damped by backtracking on the true energy, so the energy history
    is non-increasing.  Stops when the relative energy decrease drops below
    ``tol``.

    Returns (phi, energy_history, iterations, residual).
    """
    n = energy.n
    phi = np.array(values, dtype=float)
    lin = CartesianEnergy(energy.shape, energy.h, 2.0)
    A, rhs, index = edge_system(lin.edge_weights(), free, phi)
    if A.shape[0]:
        phi[free] = solve_spd(A, rhs, ndim=n)
    if energy.p == 2.0:
        e = energy.energy(phi)
        res = 0.0
        if A.shape[0]:
            res = float(np.linalg.norm(A @ phi[free] - rhs) / max(np.linalg.norm(rhs), 1e-300))
        return phi, [e], 1, res
    if phi0 is not None:
        phi = np.where(free, phi0, phi)
    e = energy.energy(phi)
    history = [e]
    rel = np.inf
    for it in range(1, max_iter + 1):
        g2max = max(float(g.max()) for g in energy.simplex_g2(phi)) if phi.size else 0.0
        energy.reg2 = max(1e-14 * g2max, 1e-300)
        A, rhs, _ = edge_system(energy.edge_weights(phi), free, phi)
        if A.shape[0] == 0:
            return phi, history, it, 0.0
        target = phi.copy()
        target[free] = solve_spd(A, rhs, ndim=n, x0=phi[free])
        direction = target - phi
        step = 1.0
        accepted = False
        while step >= 1.0 / 1024:
            trial = phi + step * direction
            et = energy.energy(trial)
            if et <= e:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no descent available along the Kačanov direction: stationary
            return phi, history, it, 0.0
        rel = (e - et) / max(abs(e), 1e-300)
        phi, e = trial, et
        history.append(e)
        if rel < tol:
            return phi, history, it, rel
    raise ConvergenceError(f"p-energy minimisation did not converge in {max_iter} iterations",
                           residual=rel, history=history)


# ---------------------------------------------------------------------------
# sphere meshes


class MeshEnergy:
    """p-energy and L_p mass on the inside nodes of a SphereMesh.

    Works in the reduced space of inside nodes; values on outside nodes are
    zero.  An edge with one outside endpoint contributes the ghost difference
    -ψ_in / τ, placing the zero exactly at the crossing point; simplices that
    own such edges have their area scaled by the smallest τ.
    """

    def __init__(self, mesh, p):
        self.mesh = mesh
        self.p = float(p)
        inside = mesh.inside
        self.free = np.flatnonzero(inside)
        nfree = len(self.free)
        index = np.full(len(inside), -1, dtype=np.int64)
        index[self.free] = np.arange(nfree)
        a, b = mesh.edges.T
        ia, ib = index[a], index[b]
        tau = mesh.edge_tau
        rows, cols, vals = [], [], []
        both = (ia >= 0) & (ib >= 0)
        e_both = np.flatnonzero(both)
        rows += [e_both, e_both]
        cols += [ib[both], ia[both]]
        vals += [np.ones(len(e_both)), -np.ones(len(e_both))]
        only_a = (ia >= 0) & (ib < 0)
        only_b = (ib >= 0) & (ia < 0)
        for m, ii in ((only_a, ia), (only_b, ib)):
            e = np.flatnonzero(m)
            rows.append(e)
            cols.append(ii[m])
            vals.append(-1.0 / tau[m])
        self.D = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(len(a), nfree))
        cut_tau = np.where(only_a | only_b, tau, 1.0)
        se = mesh.simplex_edges
        self.area = mesh.simplex_area * cut_tau[se].min(axis=1)
        ns, k = se.shape
        self.S = sp.csr_matrix((mesh.edge_coef[se].ravel(), (np.repeat(np.arange(ns), k), se.ravel())),
                               shape=(ns, len(a)))
        self.mass = mesh.weights[self.free]

    @property
    def size(self) -> int:
        return len(self.free)

    def g2(self, psi):
        d = self.D @ psi
        return self.S @ (d * d), d

    def energy(self, psi) -> float:
        g2, _ = self.g2(psi)
        return float(self.area @ g2 ** (self.p / 2))

    def energy_grad(self, psi):
        g2, d = self.g2(psi)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(g2 > 0, g2 ** ((self.p - 2) / 2), 0.0)
        edge_w = self.S.T @ (self.area * w)
        return float(self.area @ g2 ** (self.p / 2)), self.p * (self.D.T @ (edge_w * d))

    def stiffness(self):
        """Quadratic form of the p = 2 energy."""
        edge_w = self.S.T @ self.area
        return (self.D.T @ sp.diags(edge_w) @ self.D).tocsr()

    def full(self, psi):
        out = np.zeros(len(self.mesh.inside))
        out[self.free] = psi
        return out
