"""Model solves of div(|Du|^(p-2) Du) + b |Du|^α = ρ in B_R ∩ Ω (n = 2).

Solutions with ρ >= 0 are non-negative solutions of the inequality studied
by the estimates module; ρ = 0 gives the equation itself.  The discrete
operator is the Kuhn-simplex p-Laplacian of :mod:`wienerdecay.discrete`; the
nonlinearity is handled by lagged diffusivity with relaxation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .discrete import CartesianEnergy, edge_apply, edge_system, solve_spd
from .errors import ConvergenceError, DataError, PreconditionError, RefusedError
from .geometry import DomainSpec, Grid, lattice_grid
from .profiles import Coefficient, Profile

REGULARISATION = 1e-8


@dataclass(frozen=True)
class ProblemInstance:
    """Boundary-value problem on B_R ∩ Ω with u = g on S_R ∩ Ω and u = 0 on ∂Ω.

    The operator is the p-Laplacian A(ξ) = |ξ|^(p-2) ξ (C1 = C2 = 1).  ``g``
    maps points to non-negative values; ``None`` selects the first angular
    mode of the section (see :func:`default_boundary_data`).
    """

    domain: DomainSpec
    p: float = 2.0
    alpha: float = 1.0
    b: Coefficient = Coefficient()
    g: Callable | None = field(default=None, compare=False)
    rho: float = 0.0

    def __post_init__(self):
        if self.domain.n != 2:
            raise PreconditionError("the PDE harness solves planar problems only (n = 2)")
        if not self.p > 1:
            raise PreconditionError("p must exceed 1")
        if not (self.p - 1 <= self.alpha <= self.p):
            raise PreconditionError("α must lie in [p-1, p]")
        if self.rho < 0:
            raise PreconditionError("forcing ρ must be non-negative")

    def boundary_data(self) -> Callable:
        return self.g if self.g is not None else default_boundary_data(self.domain)


def default_boundary_data(domain: DomainSpec) -> Callable:
    """First angular mode of S_R ∩ Ω, extended radially.

    For a sector of opening ω this is sin(πφ/ω); otherwise the first
    Dirichlet eigenfunction of each arc of S_R ∩ Ω, i.e. sin(π s / L) in the
    arc-length parameter s of an arc of length L.
    """
    if domain.kind == "sector":
        om = domain.params["omega"]

        def g(x):
            ang = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * math.pi)
            return np.where((ang > 0) & (ang < om), np.sin(math.pi * np.clip(ang, 0, om) / om), 0.0)

        return g
    N = 1 << 14
    ang = np.arange(N) * (2 * math.pi / N)
    ins = domain.indicator(domain.R * np.stack([np.cos(ang), np.sin(ang)], axis=-1))
    vals = np.zeros(N)
    if ins.all():
        vals[:] = 1.0
    elif ins.any():
        start = int(np.flatnonzero(~ins)[0])
        order = np.roll(np.arange(N), -start)
        run = []
        for i in list(order) + [order[0]]:
            if ins[i]:
                run.append(i)
            elif run:
                L = len(run) + 1
                vals[run] = np.sin(math.pi * np.arange(1, len(run) + 1) / L)
                run = []

    def g(x):
        a = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * math.pi)
        return vals[np.round(a / (2 * math.pi / N)).astype(int) % N]

    return g


@dataclass
class SolutionField:
    grid: Grid = field(repr=False)
    u: np.ndarray = field(repr=False)
    free: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    residual_history: list = field(default_factory=list, repr=False)

    @property
    def h(self) -> float:
        return self.grid.h

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "u"])
        X = self.grid.coords().reshape(-1, 2)
        for (x, y), v in zip(X, self.u.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
        return buf.getvalue()


def node_gradient_norm(u: np.ndarray, h: float) -> np.ndarray:
    """|Du| at nodes from central differences (one-sided on the array edge)."""
    gx, gy = np.gradient(u, h)
    return np.sqrt(gx * gx + gy * gy)


def solve(instance: ProblemInstance, h: float, *, tol: float = 1e-8, max_iter: int = 500,
          relaxation: float = 0.7) -> SolutionField:
    """Solve the model problem on the lattice grid of spacing h.

    The grid is the part of [-R, R]^2 around Ω ∩ B_R plus a two-node margin.
    Unknowns are the nodes of Ω with |x| < R.  Nodes outside Ω hold 0, nodes
    of Ω with |x| >= R hold g.  For p = 2, b = 0, ρ = 0 this is one linear
    solve; otherwise each step freezes the diffusivity (|Du|^2 + ϵ^2)^((p-2)/2)
    and the right-hand side h^2 (b|Du|^α - ρ) at the current iterate, solves
    the linear problem and relaxes.  Stops when the relative update falls below
    ``tol``; :class:`ConvergenceError` carries the residual history otherwise.
    """
    dom = instance.domain
    R = dom.R
    grid = lattice_grid([-R, -R], [R, R], h, dom.indicator)
    X = grid.coords()
    rr = np.einsum("...i,...i->...", X, X)
    core = grid.inside & (rr < R * R)
    if not core.any():
        raise PreconditionError("no grid node of Ω lies in B_R; refine h")
    crop = []
    for ax in range(2):
        idx = np.flatnonzero(core.any(axis=1 - ax))
        crop.append(slice(max(idx[0] - 2, 0), min(idx[-1] + 3, grid.shape[ax])))
    crop = tuple(crop)
    kmin = tuple(k + c.start for k, c in zip(grid.kmin, crop))
    grid = Grid(grid.base, grid.h, kmin, grid.inside[crop].shape, grid.inside[crop], dom.indicator)
    X, rr = X[crop], rr[crop]
    inside = grid.inside
    free = inside & (rr < R * R)
    face = np.zeros(grid.shape, bool)
    face[0, :] = face[-1, :] = face[:, 0] = face[:, -1] = True
    free &= ~face
    g = instance.boundary_data()
    values = np.where(inside & ~free, np.asarray(g(X), float), 0.0)
    if np.any(values < 0):
        raise DataError("boundary data must be non-negative")
    u = values.copy()
    p, alpha, b, rho = instance.p, instance.alpha, instance.b, instance.rho
    energy = CartesianEnergy(grid.shape, h, p, reg2=REGULARISATION**2)
    bvals = np.where(free, b(np.where(free[..., None], X, 1.0)), 0.0) if not b.is_zero else None
    linear = p == 2.0 and bvals is None and rho == 0.0

    def rhs_field(v):
        f = np.zeros(grid.shape)
        if bvals is not None:
            f += bvals * node_gradient_norm(v, h) ** alpha
        f -= rho
        return h * h * f

    W = energy.edge_weights(None if p == 2.0 else u)
    A, rhs, _ = edge_system(W, free, u)
    u[free] = solve_spd(A, rhs, ndim=2)
    if linear:
        res = float(np.linalg.norm(A @ u[free] - rhs) / max(np.linalg.norm(rhs), 1e-300))
        return SolutionField(grid, u, free, res, 1, [res])
    history = []
    for it in range(1, max_iter + 1):
        W = energy.edge_weights(None if p == 2.0 else u)
        A, rhs, _ = edge_system(W, free, u)
        rhs = rhs + rhs_field(u)[free]
        target = solve_spd(A, rhs, ndim=2, x0=u[free])
        change = target - u[free]
        scale = max(float(np.abs(u[free]).max()), 1e-300)
        u[free] += relaxation * change
        # residual of the discrete equation at the new iterate
        Wn = energy.edge_weights(None if p == 2.0 else u)
        res_vec = (edge_apply(Wn, u) - rhs_field(u))[free]
        ref = max(float(np.abs(edge_apply(Wn, u))[free].max()), 1e-300)
        res = float(np.abs(res_vec).max() / ref)
        history.append(res)
        if float(np.abs(change).max()) / scale < tol:
            return SolutionField(grid, u, free, res, it, history)
    raise ConvergenceError(f"lagged-diffusivity iteration did not converge in {max_iter} steps",
                           residual=history[-1], history=history)


# ---------------------------------------------------------------------------
# M(r; u)


@dataclass
class DecayMeasurement:
    profile: Profile
    turning_radius: float | None
    shape: str
    fitted_exponent: float | None = None

    def to_dict(self) -> dict:
        return {"M": self.profile.to_dict(), "turning_radius": self.turning_radius, "shape": self.shape,
                "fitted_exponent": self.fitted_exponent}


def _monotone_shape(r, M, noise):
    """Classify M along r: 'constant', 'increasing', 'decreasing' or 'valley'.

    Returns (shape, turning radius or None).  Slopes within ``noise`` (relative)
    count as flat.
    """
    d = np.diff(M)
    scale = np.maximum(np.abs(M[1:]), np.abs(M[:-1]))
    sign = np.where(np.abs(d) <= noise * np.maximum(scale, 1e-300), 0, np.sign(d))
    if not sign.any():
        return "constant", None
    if np.all(sign >= 0):
        return "increasing", None
    if np.all(sign <= 0):
        return "decreasing", None
    k = int(np.argmin(M))
    if np.all(sign[:k] <= 0) and np.all(sign[k:] >= 0):
        return "valley", float(r[k])
    return "irregular", float(r[k])


def _band_max(solution, dist, r):
    band = solution.grid.inside & (np.abs(dist - r) <= solution.h / 2 + 1e-12 * solution.h)
    return float(solution.u[band].max()) if band.any() else math.nan


def _trace_max(solution, interp, r, samples):
    g = solution.grid
    a = (np.arange(samples) + 0.5) * (2 * math.pi / samples)
    pts = r * np.stack([np.cos(a), np.sin(a)], axis=-1)
    ins = g.indicator(pts)
    return float(interp(pts[ins]).max()) if ins.any() else math.nan


def measure_M(solution: SolutionField, r_ladder: Sequence[float], *, method: str = "trace",
              noise: float = 1e-6, fit_range: tuple | None = None, samples: int = 8192) -> DecayMeasurement:
    """M(r; u) on each rung.

    ``method="trace"`` (default) takes the largest value on S_r ∩ Ω of the
    bilinear interpolant of the node values, i.e. of the discrete trace;
    only nodes of the band of cells crossed by S_r contribute.
    ``method="band"`` takes the largest node value among Ω-nodes with
    |‖x‖ - r| <= h/2; it overestimates by a relative O(h/r), which grows
    toward the origin.  Empty sections are missing samples.  The shape of the profile (monotone or
    valley) gives the empirical turning radius; ``fit_range`` selects the
    rungs for the fitted log-log decay exponent.
    """
    grid = solution.grid
    r_ladder = np.asarray(r_ladder, float)
    if method == "band":
        X = grid.coords()
        dist = np.sqrt(np.einsum("...i,...i->...", X, X))
        vals = [_band_max(solution, dist, r) for r in r_ladder]
    elif method == "trace":
        interp = RegularGridInterpolator(grid.axes(), solution.u, bounds_error=False, fill_value=0.0)
        vals = [_trace_max(solution, interp, r, samples) for r in r_ladder]
    else:
        raise PreconditionError(f"unknown M estimator {method!r}")
    vals = np.array(vals)
    prof = Profile(r_ladder, vals, ~np.isfinite(vals), "M", {"method": method, "h": grid.h})
    ok = prof.valid
    shape, turning = _monotone_shape(prof.r[ok], prof.values[ok], noise) if ok.sum() >= 2 else ("undefined", None)
    fitted = None
    try:
        lo, hi = fit_range if fit_range else (None, None)
        fitted = prof.slope(lo, hi)
    except DataError:
        pass
    return DecayMeasurement(prof, turning if shape in ("valley", "irregular") else None, shape, fitted)


# ---------------------------------------------------------------------------
# verification against a bound curve


@dataclass
class Verdict:
    passed: bool
    first_violation: float | None
    margins: list
    measured_slope: float | None
    bound_slope: float | None
    slope_agreement: float | None
    reason: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "first_violation": self.first_violation, "margins": self.margins,
                "measured_slope": self.measured_slope, "bound_slope": self.bound_slope,
                "slope_agreement": self.slope_agreement, "reason": self.reason}


def verify_bound(measurement: DecayMeasurement, report) -> Verdict:
    """Check M_measured(r) <= M_bound(r) at every common rung below the calibration radius.

    ``report`` is an :class:`~wienerdecay.estimates.EstimateReport` calibrated
    at ``report.r_cal``.  Margins are M_bound / M_measured.  Refuses when the
    report itself is a refusal (no theorem applies).
    """
    if report.refused:
        raise RefusedError(f"no bound to verify: {report.reason}")
    if report.r_cal is None:
        raise RefusedError("bound curve is not calibrated")
    M = measurement.profile
    rows, first = [], None
    bound = dict(zip(np.round(report.r, 14), report.bound))
    for r, m, miss in zip(M.r, M.values, M.missing):
        key = round(float(r), 14)
        if miss or key not in bound or r >= report.r_cal:
            continue
        mb = bound[key]
        ok = m <= mb
        rows.append({"r": float(r), "measured": float(m), "bound": float(mb),
                     "margin": float(mb / m) if m > 0 else math.inf, "ok": bool(ok)})
        if not ok and first is None:
            first = float(r)
    sel = (M.r <= report.r_cal * (1 + 1e-12)) & M.valid
    ms = bs = agree = None
    if sel.sum() >= 2 and np.all(M.values[sel] > 0):
        ms = float(np.polyfit(np.log(M.r[sel]), np.log(M.values[sel]), 1)[0])
        bmask = np.isin(np.round(report.r, 14), np.round(M.r[sel], 14))
        bvals = np.asarray(report.bound)[bmask]
        if len(bvals) >= 2 and np.all(bvals > 0):
            bs = float(np.polyfit(np.log(np.asarray(report.r)[bmask]), np.log(bvals), 1)[0])
            agree = abs(ms - bs) / abs(bs) if bs else None
    if not rows:
        return Verdict(False, None, [], ms, bs, agree, "no rungs below the calibration radius")
    return Verdict(first is None, first, rows, ms, bs, agree)
