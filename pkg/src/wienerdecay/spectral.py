"""First Dirichlet eigenvalue of the spherical p-Laplacian on sections S_r ∩ Ω.

λ_min(E) is the minimum of the discrete Rayleigh quotient

    ∫_E |∇ψ|^p dS_r / ∫_E |ψ|^p dS_r

over mesh functions vanishing outside E.  For p = 2 it is the smallest
eigenvalue of a symmetric pencil (shift-invert Lanczos); for p != 2 the
quotient is minimised by L-BFGS started from the p = 2 eigenfunction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.optimize as opt
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discrete import MeshEnergy
from .errors import ConvergenceError, PreconditionError, StandingAssumptionError
from .geometry import DomainSpec, SphereMesh, sphere_section_mesh
from .profiles import Profile

DENSE_LIMIT = 400


@dataclass
class EigenResult:
    lambda_min: float
    eigenfunction: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    no_dirichlet_boundary: bool = False
    quotient_history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"lambda_min": self.lambda_min, "iterations": self.iterations, "residual": self.residual,
                "no_dirichlet_boundary": self.no_dirichlet_boundary}

    def csv_rows(self, mesh: SphereMesh):
        """(angles..., ψ) rows for every mesh node."""
        return np.column_stack([mesh.angles, self.eigenfunction])


def _lp_normalize(psi, mass, p):
    psi = np.abs(psi)
    norm = float(mass @ psi**p) ** (1.0 / p)
    return psi / norm if norm > 0 else psi


def _quadratic_eigen(energy: MeshEnergy):
    """Smallest eigenpair of K v = λ M v with diagonal M."""
    K = energy.stiffness()
    s = 1.0 / np.sqrt(energy.mass)
    Ks = sp.diags(s) @ K @ sp.diags(s)
    nfree = energy.size
    if nfree <= DENSE_LIMIT:
        w, V = sla.eigh(Ks.toarray(), subset_by_index=[0, 0])
        lam, v = float(w[0]), V[:, 0]
        iters = 1
    else:
        w, V = spla.eigsh(Ks.tocsc(), k=1, sigma=0.0, which="LM", tol=1e-12, v0=np.sqrt(energy.mass))
        lam, v = float(w[0]), V[:, 0]
        iters = 1
    psi = s * v
    r = Ks @ v - lam * v
    return lam, psi, iters, float(np.linalg.norm(r) / max(abs(lam), 1e-300))


def lambda_min(mesh: SphereMesh, p: float, *, tol: float = 1e-10, max_iter: int = 5000) -> EigenResult:
    """First Dirichlet eigenvalue of the p-Laplace–Beltrami operator on the mesh's E.

    A mesh covering the whole sphere has no Dirichlet boundary; the infimum
    is then 0 (constants) and is returned with ``no_dirichlet_boundary`` set.
    The eigenfunction is returned on all mesh nodes, non-negative, zero
    outside E and of unit discrete L_p norm.
    """
    if not p > 1:
        raise PreconditionError("p must exceed 1")
    nodes = len(mesh.inside)
    if not mesh.inside.any():
        raise PreconditionError("mesh has no inside nodes")
    if not mesh.has_dirichlet_boundary:
        psi = np.ones(nodes)
        psi = _lp_normalize(psi, mesh.weights, p)
        return EigenResult(0.0, psi, 0, 0.0, True, [0.0])
    energy = MeshEnergy(mesh, p)
    lam2, psi, iters, res = _quadratic_eigen(MeshEnergy(mesh, 2.0) if p != 2 else energy)
    psi = _lp_normalize(psi, energy.mass, 2.0)
    if p == 2.0:
        full = energy.full(_lp_normalize(psi, energy.mass, p))
        return EigenResult(lam2, full, iters, res, False, [lam2])

    mass = energy.mass

    def quotient(x):
        e, ge = energy.energy_grad(x)
        ax = np.abs(x)
        m = float(mass @ ax**p)
        gm = p * mass * ax ** (p - 1) * np.sign(x)
        return e / m, (ge * m - e * gm) / (m * m)

    x0 = _lp_normalize(psi, mass, p)
    history = [quotient(x0)[0]]

    def record(xk):
        history.append(quotient(xk)[0])

    sol = opt.minimize(quotient, x0, jac=True, method="L-BFGS-B", callback=record,
                       options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-9 * max(history[0], 1.0),
                                "maxcor": 20})
    val, grad = quotient(sol.x)
    res = float(np.linalg.norm(grad) / max(val, 1e-300))
    if not sol.success and sol.nit >= max_iter:
        raise ConvergenceError(f"Rayleigh quotient minimisation stopped: {sol.message}", residual=res,
                               history=history)
    # L-BFGS may stop on a line-search failure at machine precision; keep the
    # smaller of the final and the best recorded quotient
    best = min(history + [val])
    full = energy.full(_lp_normalize(sol.x, mass, p))
    return EigenResult(float(best), full, int(sol.nit), res, False, history)


# ---------------------------------------------------------------------------
# radial profile of eigenvalues


def t_lattice(R: float, per_octave: int = 8):
    """Generator of the shared sampling radii R * 2^(-k/per_octave), k >= 1."""
    k = 1
    while True:
        yield R * 2.0 ** (-k / per_octave)
        k += 1


def section_samples(r: float, theta: float, R: float, per_octave: int = 8) -> list:
    """Radii sampled from (r/θ, rθ) ∩ (0, R): the shared lattice points plus r itself (r < R).

    Because the lattice does not depend on θ, enlarging θ only adds samples.
    Comparisons carry a relative slack of 1e-9 so that radii differing from
    a lattice point by rounding are treated as that point.
    """
    slack = 1e-9
    lo, hi = r / theta * (1 + slack), min(r * theta, R) * (1 - slack)
    out = []
    for t in t_lattice(R, per_octave):
        if t <= lo:
            break
        if t < hi:
            out.append(float(t))
    if r < R * (1 - slack) and not any(abs(t - r) <= slack * r for t in out):
        out.append(float(r))
    return sorted(out)


@dataclass
class SectionSolver:
    """Cached λ_min(S_t ∩ Ω) with automatic angular refinement.

    The angular spacing starts at ``h_ang`` and is halved until the section
    holds at least ``min_nodes`` inside nodes across its narrowest direction
    (estimated as inside count for n = 2, its square root for n = 3), or
    the mesh would exceed ``max_nodes``.
    """

    domain: DomainSpec
    p: float
    h_ang: float = 0.05
    min_nodes: int = 24
    max_nodes: int = 400_000
    cache: dict = field(default_factory=dict, repr=False)
    log: list = field(default_factory=list, repr=False)

    def mesh(self, t: float) -> SphereMesh:
        h = self.h_ang
        n = self.domain.n
        while True:
            mesh = sphere_section_mesh(self.domain, t, h, check=False)
            count = int(mesh.inside.sum())
            across = count if n == 2 else math.sqrt(count)
            if n == 3:
                # a thin band has few nodes across even when the count is large
                across = min(across, _min_band_width(mesh))
            if count and (across >= self.min_nodes or not mesh.has_dirichlet_boundary):
                return mesh
            h2 = h / 2
            size = 2 * math.pi / h2 if n == 2 else 2 * (math.pi / h2) ** 2
            if size > self.max_nodes:
                if count == 0:
                    raise StandingAssumptionError(f"S_t ∩ Ω unresolved at t={t:g}")
                return mesh
            h = h2

    def __call__(self, t: float) -> EigenResult:
        t = float(t)
        if t not in self.cache:
            mesh = self.mesh(t)
            res = lambda_min(mesh, self.p)
            self.cache[t] = res
            self.log.append({"t": t, "lambda_min": res.lambda_min, "nodes": int(mesh.inside.sum()),
                             "iterations": res.iterations, "residual": res.residual})
        return self.cache[t]


def _min_band_width(mesh: SphereMesh) -> float:
    """Smallest number of consecutive inside nodes along any latitude row or meridian."""
    nlat, nlon = mesh.grid_shape
    ins = mesh.inside.reshape(nlat, nlon)
    best = math.inf
    for arr in (ins, ins.T):
        for row in arr:
            if not row.any() or row.all():
                continue
            d = np.diff(np.concatenate([[0], row.astype(int), [0]]))
            runs = np.flatnonzero(d == -1) - np.flatnonzero(d == 1)
            best = min(best, runs.max())
    return best


def lambda_profile(domain: DomainSpec, p: float, theta: float, r_ladder: Sequence[float], *,
                   h_ang: float = 0.05, per_octave: int = 8, solver: SectionSolver | None = None) -> Profile:
    """Λ(r) = min of λ_min(S_t ∩ Ω) over the sampled t ∈ (r/θ, rθ) ∩ (0, R).

    A rung whose eigensolves fail is marked missing.
    """
    if not theta > 1:
        raise PreconditionError("θ must exceed 1")
    r_ladder = np.asarray(r_ladder, float)
    if np.any(r_ladder <= 0) or np.any(r_ladder > domain.R):
        raise PreconditionError("ladder must lie in (0, R]")
    solver = solver or SectionSolver(domain, p, h_ang)
    vals, miss = [], []
    for r in r_ladder:
        try:
            vals.append(min(solver(t).lambda_min for t in section_samples(r, theta, domain.R, per_octave)))
            miss.append(False)
        except (ConvergenceError, StandingAssumptionError, np.linalg.LinAlgError, RuntimeError):
            vals.append(np.nan)
            miss.append(True)
    return Profile(r_ladder, np.array(vals), np.array(miss), "Lambda",
                   {"theta": theta, "p": p, "samples_per_octave": per_octave})
