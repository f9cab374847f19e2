"""Variational p-capacity on Cartesian grids and the quantities built from it.

cap(K, ω) is the minimum of the discrete p-energy over grid functions equal to
1 on the nodes of K and 0 on nodes outside ω.  Everything else here (the
ε-essential inner diameter, μ_δ, the shell-capacity cone condition) is a
capacity evaluated on a grid scaled to the ball or shell in question: the
grid spacing is always a fixed fraction of the radius, so the relative
resolution does not depend on scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .discrete import CartesianEnergy, minimize_dirichlet
from .errors import ConvergenceError, LawViolation, PreconditionError
from .geometry import DomainSpec, Grid, centered_grid

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


@dataclass
class CapacityResult:
    value: float
    minimizer: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    energy_history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"value": self.value, "iterations": self.iterations, "residual": self.residual}

    def csv_rows(self, grid: Grid):
        """(x_1, ..., x_n, φ) rows for every grid node."""
        xyz = grid.coords().reshape(-1, grid.ndim)
        return np.column_stack([xyz, self.minimizer.ravel()])


def capacity(K, omega, p: float, grid: Grid, *, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> CapacityResult:
    """Discrete p-capacity of the node set ``K`` relative to the node set ``omega``.

    Nodes on the outer faces of ``grid`` are always held at zero, so ω must
    be contained in the grid's box.  Raises :class:`PreconditionError` if K is
    not contained in ω and :class:`ConvergenceError` if the energy iteration
    does not settle within ``max_iter`` steps.
    """
    if p <= 1:
        raise PreconditionError(f"capacity needs p > 1, got p={p}")
    K = np.asarray(K, bool)
    omega = np.asarray(omega, bool)
    if K.shape != grid.shape or omega.shape != grid.shape:
        raise PreconditionError("masks must have the grid's shape")
    if (K & ~omega).any():
        raise PreconditionError("K is not contained in ω")
    if not K.any():
        return CapacityResult(0.0, np.zeros(grid.shape), 0, 0.0, [0.0])
    face = np.zeros(grid.shape, bool)
    for ax in range(grid.ndim):
        sl = [slice(None)] * grid.ndim
        sl[ax] = 0
        face[tuple(sl)] = True
        sl[ax] = -1
        face[tuple(sl)] = True
    values = np.where(K, 1.0, 0.0)
    free = omega & ~K & ~face
    energy = CartesianEnergy(grid.shape, grid.h, p)
    phi, history, iters, res = minimize_dirichlet(energy, free, values, tol=tol, max_iter=max_iter)
    np.clip(phi, 0.0, 1.0, out=phi)
    value = energy.energy(phi)
    return CapacityResult(float(value), phi, iters, float(res), history)


# ---------------------------------------------------------------------------
# scaled local problems


def _ball_masks(grid: Grid, m: int):
    """(closed B_ρ, open B_2ρ) about the grid centre, with ρ = m h."""
    k2 = grid.offset_norm2()
    return k2 <= m * m, k2 < 4 * m * m


@lru_cache(maxsize=None)
def reference_ball_capacity(n: int, p: float, m: int) -> float:
    """Discrete cap(closure(B_1), B_2) at resolution h = 1/m.

    Dividing by this value makes capacity ratios exactly 1 for a ball that
    misses ω entirely, independently of discretisation bias.
    """
    grid = centered_grid(np.zeros(n), 2 * m + 1, 1.0 / m)
    K, om = _ball_masks(grid, m)
    return capacity(K, om, p, grid).value


def relative_complement_capacity(region: Callable, x, rho: float, p: float, m: int = 10) -> float:
    """cap(closure(B_ρ^x) \\ ω, B_2ρ^x) / cap(closure(B_ρ), B_2ρ) on a grid of spacing ρ/m."""
    x = np.asarray(x, float)
    n = x.size
    grid = centered_grid(x, 2 * m + 1, rho / m)
    ball, big = _ball_masks(grid, m)
    K = ball & ~grid.classify(region)
    if not K.any():
        return 0.0
    cap = capacity(K, big, p, grid).value
    return cap / (reference_ball_capacity(n, float(p), m) * rho ** (n - p))


# ---------------------------------------------------------------------------
# ε-essential inner diameter


@dataclass
class DiamResult:
    """``value`` is a witnessed lower estimate; ``status`` is one of
    ``ok``, ``empty``, ``unresolved``, ``unbounded``."""

    value: float
    status: str
    witness: tuple | None = None
    evaluations: int = 0

    @property
    def resolved(self) -> bool:
        return self.status in ("ok", "empty")


def candidate_points(grid: Grid, max_candidates: int) -> np.ndarray:
    """Inside nodes ordered by decreasing distance to the outside (ties by index)."""
    inside = grid.inside
    pad = np.pad(inside, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(pad)[tuple(slice(1, -1) for _ in range(grid.ndim))]
    flat = np.flatnonzero(inside.ravel())
    d = dist.ravel()[flat]
    order = np.lexsort((flat, -d))[:max_candidates]
    coords = grid.coords().reshape(-1, grid.ndim)
    return coords[flat[order]]


def diam_eps(region: Callable, eps: float, grid: Grid, *, p: float = 2.0, m: int = 10,
             max_candidates: int = 24, rel_width: float = 1e-2, rho_min: float | None = None) -> DiamResult:
    """ε-essential inner diameter of the open set ``region`` (a predicate).

    Candidate centres are the inside nodes of ``grid`` (the deepest
    ``max_candidates`` of them); the radius is located by bisection in log ρ
    to relative width ``rel_width``.  The returned value is the largest radius
    for which some candidate was verified to have capacity ratio below ε, so
    it is a lower estimate of the supremum.
    """
    if not 0 < eps < 1:
        raise PreconditionError("ε must lie in (0, 1)")
    if grid.empty:
        return DiamResult(0.0, "empty")
    cands = candidate_points(grid, max_candidates)
    cache: dict = {}
    count = [0]

    def ratio(i, rho):
        key = (i, rho)
        if key not in cache:
            cache[key] = relative_complement_capacity(region, cands[i], rho, p, m)
            count[0] += 1
        return cache[key]

    last = [0]

    def holds(rho):
        order = [last[0]] + [i for i in range(len(cands)) if i != last[0]]
        for i in order:
            if ratio(i, rho) < eps:
                last[0] = i
                return True
        return False

    lo = rho_min if rho_min is not None else grid.h / 4
    if not holds(lo):
        return DiamResult(0.0, "unresolved", None, count[0])
    extent = grid.h * (max(grid.shape) - 1)
    hi = 2 * extent
    doublings = 0
    while holds(hi):
        lo = hi
        hi *= 2
        doublings += 1
        if doublings > 4:
            return DiamResult(lo, "unbounded", tuple(cands[last[0]]), count[0])
    witness = last[0]
    while hi / lo > 1 + rel_width:
        mid = math.sqrt(lo * hi)
        if holds(mid):
            lo, witness = mid, last[0]
        else:
            hi = mid
    return DiamResult(lo, "ok", tuple(cands[witness]), count[0])


# ---------------------------------------------------------------------------
# μ_δ and the shell-capacity quantities


def default_grid_factory(m: int = 10):
    def factory(center, rho):
        return centered_grid(center, 2 * m + 1, rho / m)
    return factory


def mu_ladder(x_norm: float, delta: float, step: float = 2 ** -0.25, floor: float = 2 ** -7):
    """Radii x_norm * step^k lying in [floor * x_norm, δ x_norm).

    The ladder is fixed by |x| alone, so the ladder for a smaller δ is a
    subset of the ladder for a larger one.
    """
    out = []
    rho = x_norm * step
    while rho >= floor * x_norm:
        if rho < delta * x_norm:
            out.append(rho)
        rho *= step
    return out


def mu_delta(domain: DomainSpec, x, delta: float, p: float, grid_factory=None, *, ladder=None) -> float:
    """sup over the ladder of (ρ^(1-n) cap(closure(B_ρ^x) \\ Ω, B_2ρ^x))^(1/(p-1))."""
    x = np.asarray(x, float)
    r = float(np.linalg.norm(x))
    if r == 0:
        raise PreconditionError("μ_δ is undefined at the origin")
    if not 0 < delta < 1:
        raise PreconditionError("δ must lie in (0, 1)")
    if not domain.indicator(x[None])[0]:
        raise PreconditionError("μ_δ needs x ∈ Ω")
    factory = grid_factory or default_grid_factory()
    n = domain.n
    best = 0.0
    for rho in (ladder if ladder is not None else mu_ladder(r, delta)):
        grid = factory(x, rho)
        k2h2 = grid.offset_norm2() * grid.h**2
        K = (k2h2 <= rho * rho * (1 + 1e-12)) & ~grid.classify(domain.indicator)
        if not K.any():
            continue
        big = k2h2 < 4 * rho * rho * (1 - 1e-12)
        cap = capacity(K, big, p, grid).value
        best = max(best, (rho ** (1 - n) * cap) ** (1.0 / (p - 1)))
    return best


def shell_complement_capacity(domain: DomainSpec, r: float, theta: float, p: float, m: int = 24) -> float:
    """cap(closure(B_{rθ^-2/3, rθ^-1/3}) \\ Ω, B_{r/θ, r}) on a grid of spacing r/m."""
    if theta <= 1:
        raise PreconditionError("θ must exceed 1")
    grid = centered_grid(np.zeros(domain.n), m + 1, r / m)
    k2 = grid.offset_norm2().astype(float)
    a, b = m * theta ** (-2 / 3), m * theta ** (-1 / 3)
    K = (k2 >= a * a) & (k2 <= b * b) & ~grid.classify(domain.indicator)
    om = (k2 > (m / theta) ** 2) & (k2 < m * m)
    return capacity(K, om, p, grid).value


@dataclass
class ConeConditionResult:
    radii: list
    scaled: list
    liminf_estimate: float
    reference: float
    threshold: float
    verdict: str

    @property
    def positive(self) -> bool:
        return self.verdict == "positive"

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "scaled_capacity": list(self.scaled),
                "liminf_estimate": self.liminf_estimate, "reference": self.reference,
                "threshold": self.threshold, "verdict": self.verdict}


def cone_condition(domain: DomainSpec, theta: float, p: float, r_ladder: Sequence[float], *,
                   m: int = 24, threshold: float = 1e-3, capacities: dict | None = None) -> ConeConditionResult:
    """Ladder estimate of liminf r^(p-n) cap(shell complement) and its verdict.

    The verdict is ``positive`` when the smallest scaled capacity exceeds
    ``threshold`` times the discrete cap(closure(B_1), B_2), else
    ``degenerate``.  ``capacities`` may supply precomputed shell capacities
    keyed by r.
    """
    n = domain.n
    scaled = []
    radii = sorted(float(r) for r in r_ladder)
    for r in radii:
        try:
            cap = capacities[r] if capacities and r in capacities else shell_complement_capacity(domain, r, theta, p, m)
        except ConvergenceError as exc:
            raise ConvergenceError(f"shell capacity failed at r={r:g}: {exc}", exc.residual, exc.history) from exc
        scaled.append(r ** (p - n) * cap)
    ref = reference_ball_capacity(n, float(p), max(4, m // 2))
    est = min(scaled) if scaled else 0.0
    verdict = "positive" if est >= threshold * ref else "degenerate"
    return ConeConditionResult(radii, scaled, est, ref, threshold, verdict)


# ---------------------------------------------------------------------------
# law checks


@dataclass
class LawInstance:
    """Boxes (lo, hi) on the lattice hZ^n.  K boxes are closed, ω boxes open."""

    p: float
    h: float
    K1: list
    K2: list
    omega1: tuple
    omega2: tuple


@dataclass
class LawReport:
    monotonicity: list = field(default_factory=list)
    similarity: list = field(default_factory=list)
    semiadditivity: list = field(default_factory=list)
    similarity_tol: float = 0.02
    semiadd_tol: float = 1e-3

    @property
    def failures(self) -> list:
        out = [("monotonicity", row) for row in self.monotonicity if not row["ok"]]
        out += [("similarity", row) for row in self.similarity if not row["ok"]]
        out += [("semiadditivity", row) for row in self.semiadditivity if not row["ok"]]
        return out

    @property
    def passed(self) -> bool:
        return not self.failures


def _box_mask(grid: Grid, boxes, closed: bool, scale=1.0):
    X = grid.coords()
    out = np.zeros(grid.shape, bool)
    for lo, hi in boxes:
        lo = np.asarray(lo) * scale
        hi = np.asarray(hi) * scale
        tol = 1e-9 * grid.h
        if closed:
            m = np.all((X >= lo - tol) & (X <= hi + tol), axis=-1)
        else:
            m = np.all((X > lo + tol) & (X < hi - tol), axis=-1)
        out |= m
    return out


def random_law_instances(count: int = 50, seed: int = 0, n: int = 2, h: float = 1 / 192,
                         ps: Sequence[float] = (1.5, 2.0, 3.0), quantum: float = 1 / 32) -> list:
    """Random nested box configurations with corners on multiples of ``quantum``.

    ``quantum / 2`` must be a multiple of the lattice spacing h, so corners
    stay on the lattice after scaling by 1/2.  ω1 ⊃ ω2 ⊃ K2 = two disjoint
    boxes, and K1 ⊂ K2 is the first box, sometimes shrunk.  Every box width
    and every gap is at least two quanta; the default h = quantum/6 puts six
    nodes across the thinnest feature of the half-scaled configuration.
    """
    q = float(quantum)
    ratio = q / (2 * h)
    if not h > 0 or ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
        raise PreconditionError("quantum / 2 must be a positive multiple of h")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        o1_lo = rng.integers(-12, -9, size=n)
        o1_hi = rng.integers(10, 13, size=n)
        o2_lo = o1_lo + rng.integers(1, 3, size=n)
        o2_hi = o1_hi - rng.integers(1, 3, size=n)
        in_lo = o2_lo + rng.integers(2, 4, size=n)
        in_hi = o2_hi - rng.integers(2, 4, size=n)
        mid = (in_lo[0] + in_hi[0]) // 2
        left_lo, left_hi = in_lo.copy(), in_hi.copy()
        left_hi[0] = mid - 1
        right_lo, right_hi = in_lo.copy(), in_hi.copy()
        right_lo[0] = mid + 1
        for lo, hi in ((left_lo, left_hi), (right_lo, right_hi)):
            for a in range(n):
                # random sub-interval at least two quanta wide
                a0 = rng.integers(lo[a], hi[a] - 1)
                a1 = rng.integers(a0 + 2, hi[a] + 1)
                lo[a], hi[a] = a0, a1
        k1_lo, k1_hi = left_lo.copy(), left_hi.copy()
        if rng.random() < 0.5:
            a = rng.integers(n)
            if k1_hi[a] - k1_lo[a] >= 3:
                k1_hi[a] -= 1
        left = (left_lo * q, left_hi * q)
        right = (right_lo * q, right_hi * q)
        out.append(LawInstance(float(rng.choice(ps)), h, [(k1_lo * q, k1_hi * q)], [left, right],
                               (o1_lo * q, o1_hi * q), (o2_lo * q, o2_hi * q)))
    return out


def check_capacity_laws(instances: Sequence[LawInstance], *, lambdas=(0.5, 2.0), similarity_tol=0.02,
                        semiadd_tol=1e-3, mono_rtol=1e-9, strict: bool = False) -> LawReport:
    """Evaluate monotonicity, similarity and semiadditivity on each instance."""
    report = LawReport(similarity_tol=similarity_tol, semiadd_tol=semiadd_tol)
    for idx, inst in enumerate(instances):
        n = len(inst.omega1[0])
        p = inst.p

        def cap(Kb, ob, scale=1.0):
            # smallest lattice box around ω; its outer faces lie outside ω
            ext = scale * max(np.abs(ob[0]).max(), np.abs(ob[1]).max())
            grid = centered_grid(np.zeros(n), int(math.ceil(ext / inst.h - 1e-9)) + 1, inst.h)
            K = _box_mask(grid, Kb, True, scale)
            om = _box_mask(grid, [ob], False, scale)
            return capacity(K, om, p, grid).value

        c1 = cap(inst.K1, inst.omega1)
        c2 = cap(inst.K2, inst.omega2)
        report.monotonicity.append({"instance": idx, "p": p, "small": c1, "large": c2,
                                    "ok": c1 <= c2 * (1 + mono_rtol)})
        for lam in lambdas:
            cl = cap(inst.K2, inst.omega2, lam)
            expected = lam ** (n - p) * c2
            err = abs(cl - expected) / expected
            report.similarity.append({"instance": idx, "p": p, "lambda": lam, "scaled": cl,
                                      "expected": expected, "rel_error": err, "ok": err <= similarity_tol})
        ca = cap(inst.K2[:1], inst.omega1)
        cb = cap(inst.K2[1:], inst.omega1)
        cu = cap(inst.K2, inst.omega1)
        report.semiadditivity.append({"instance": idx, "p": p, "union": cu, "sum": ca + cb,
                                      "ok": cu <= (ca + cb) * (1 + semiadd_tol)})
    if strict and report.failures:
        law, row = report.failures[0]
        raise LawViolation(law, row)
    return report
