"""Domains, shells and the two discretisations used throughout the package.

A domain Ω is represented by an exact indicator predicate.  Nothing is ever
approximated by polygons: every discretisation classifies its nodes by calling
the predicate, so all geometric error comes from the mesh width.

Two mesh families exist:

* :class:`Grid` -- a uniform Cartesian lattice in R^n (n = 2, 3) whose nodes are
  classified inside/outside.  Nodes are ``base + h * k`` for integer offset
  vectors ``k``; balls centred at ``base`` are classified with integer
  arithmetic, which makes rescaled grids classify identically.
* :class:`SphereMesh` -- an arc (n = 2) or a latitude-longitude mesh (n = 3) of
  the sphere S_r, restricted to S_r ∩ Ω.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import PreconditionError, StandingAssumptionError

Indicator = Callable[[np.ndarray], np.ndarray]

KINDS = ("cone_complement", "power_cusp", "sector", "annulus", "custom")

# midpoint latitude rule: relative error of the total area is about h_ang**2 / 24
SPHERE_QUADRATURE_MAX_H = 0.15


def sphere_area(n: int) -> float:
    """(n-1)-dimensional volume |S_1| of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    return sphere_area(n) / n


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class DomainSpec:
    """Description of an open set Ω ⊂ R^n together with the outer radius R.

    Built-in kinds (``params`` in parentheses):

    ``cone_complement`` (k1)
        R^n minus the closed cone {|x'| <= k1 x_n}.
    ``power_cusp`` (k1, s)
        {|x_n| < k1 |x'|^s}, s > 1.
    ``sector`` (omega)
        planar sector {0 < arg x < omega}; n = 2 only.
    ``annulus`` ()
        R^n minus the origin, so that every S_r is fully contained.
    ``custom``
        an arbitrary predicate passed as ``oracle``; not serialisable.

    The indicator is not cut off at |x| = R; callers restrict to B_R themselves.
    """

    kind: str
    params: Mapping[str, float]
    R: float
    n: int
    oracle: Indicator | None = field(default=None, compare=False, repr=False)

    def indicator(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != self.n:
            raise PreconditionError(f"points have dimension {x.shape[-1]}, domain has n={self.n}")
        kind = self.kind
        if kind == "cone_complement":
            k1 = self.params["k1"]
            xp = np.linalg.norm(x[..., :-1], axis=-1)
            return ~(xp <= k1 * x[..., -1])
        if kind == "power_cusp":
            k1, s = self.params["k1"], self.params["s"]
            xp = np.linalg.norm(x[..., :-1], axis=-1)
            return np.abs(x[..., -1]) < k1 * xp**s
        if kind == "sector":
            ang = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * math.pi)
            return (ang > 0.0) & (ang < self.params["omega"])
        if kind == "annulus":
            return np.any(x != 0.0, axis=-1)
        return np.asarray(self.oracle(x), dtype=bool)

    __call__ = indicator

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise PreconditionError("custom domains carry a Python callable and cannot be serialised")
        return {"kind": self.kind, "params": dict(self.params), "R": self.R, "n": self.n}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DomainSpec":
        return make_domain(doc["kind"], doc.get("params", {}), doc["R"], doc["n"])

    @classmethod
    def from_json(cls, text: str) -> "DomainSpec":
        return cls.from_dict(json.loads(text))


def make_domain(kind: str, params: Mapping | None, R: float, n: int,
                oracle: Indicator | None = None, check: bool = True) -> DomainSpec:
    """Validate parameters and build a :class:`DomainSpec`.

    With ``check`` set, the standing assumption S_r ∩ Ω ≠ ∅ is verified by
    sampling a handful of radii in (0, R).
    """
    params = dict(params or {})
    if kind not in KINDS:
        raise PreconditionError(f"unknown domain kind {kind!r}; expected one of {KINDS}")
    if not R > 0:
        raise PreconditionError(f"outer radius must be positive, got R={R}")
    if int(n) != n or n < 2:
        raise PreconditionError(f"dimension must be an integer >= 2, got n={n}")
    n = int(n)
    if kind in ("cone_complement", "power_cusp"):
        if not params.get("k1", 0) > 0:
            raise PreconditionError(f"{kind} requires k1 > 0")
    if kind == "power_cusp" and not params.get("s", 0) > 1:
        raise PreconditionError("power_cusp requires s > 1")
    if kind == "sector":
        if n != 2:
            raise PreconditionError("sector domains are planar (n = 2)")
        omega = params.get("omega", 0)
        if not 0 < omega < 2 * math.pi:
            raise PreconditionError("sector requires 0 < omega < 2*pi")
    if kind == "custom" and oracle is None:
        raise PreconditionError("custom domains need an oracle predicate")
    params = {k: float(v) for k, v in params.items()}
    dom = DomainSpec(kind, MappingProxyType(params), float(R), n, oracle)
    if check:
        check_standing_assumption(dom)
    return dom


def _sphere_directions(n: int, resolution: int = 64) -> np.ndarray:
    if n == 2:
        ang = np.arange(64 * resolution) * (2 * math.pi / (64 * resolution))
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if n == 3:
        # latitudes include both poles and the equator exactly
        th = np.linspace(0.0, math.pi, 2 * resolution + 1)
        ph = np.arange(4 * resolution) * (2 * math.pi / (4 * resolution))
        T, P = np.meshgrid(th, ph, indexing="ij")
        return np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    raise PreconditionError("sampling directions are only provided for n = 2, 3")


def check_standing_assumption(domain: DomainSpec, radii=None) -> None:
    """Raise :class:`StandingAssumptionError` if some sampled S_r ∩ Ω is empty."""
    if domain.n > 3:
        return
    if radii is None:
        radii = domain.R * np.array([0.999, 0.5, 0.1, 1e-2, 1e-3])
    dirs = _sphere_directions(domain.n)
    for r in radii:
        if not np.any(domain.indicator(r * dirs)):
            raise StandingAssumptionError(f"S_r ∩ Ω is empty at sampled radius r={r:g}")


def shell_indicator(domain: DomainSpec, r1: float, r2: float) -> Indicator:
    """Indicator of Ω_{r1,r2} = {r1 < |x| < r2} ∩ Ω."""

    def inside(points):
        x = np.asarray(points, dtype=float)
        rr = np.einsum("...i,...i->...", x, x)
        return (rr > r1 * r1) & (rr < r2 * r2) & domain.indicator(x)

    return inside


@dataclass(frozen=True)
class Shell:
    """Spherical shell B_{r1,r2} = {r1 < |x| < r2}."""

    r1: float
    r2: float

    def __post_init__(self):
        if not (0 < self.r1 < self.r2):
            raise PreconditionError(f"shell needs 0 < r1 < r2, got ({self.r1}, {self.r2})")

    def section(self, domain: DomainSpec) -> Indicator:
        return shell_indicator(domain, self.r1, self.r2)

    def is_empty(self, domain: DomainSpec, samples: int = 16) -> bool:
        """Sample a few spheres inside the shell; True if no point lies in Ω."""
        dirs = _sphere_directions(domain.n, 32)
        for r in np.geomspace(self.r1, self.r2, samples + 2)[1:-1]:
            if np.any(domain.indicator(r * dirs)):
                return False
        return True


# ---------------------------------------------------------------------------
# Cartesian grids


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid; node i sits at ``base + h * (kmin + i)``.

    ``inside`` is the node classification against whatever set built the grid
    (a node is inside iff the indicator holds at the node itself).
    """

    base: tuple
    h: float
    kmin: tuple
    shape: tuple
    inside: np.ndarray = field(repr=False)
    indicator: Indicator | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.h > 0:
            raise PreconditionError("grid spacing must be positive")
        if self.inside.shape != tuple(self.shape):
            raise PreconditionError("classification mask does not match grid shape")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def empty(self) -> bool:
        return not bool(self.inside.any())

    @property
    def cell_volume(self) -> float:
        return self.h**self.ndim

    def offsets(self) -> list[np.ndarray]:
        """Integer offsets k along each axis (broadcastable, ``sparse`` layout)."""
        axes = [np.arange(k0, k0 + m) for k0, m in zip(self.kmin, self.shape)]
        return np.meshgrid(*axes, indexing="ij", sparse=True)

    def axes(self) -> list[np.ndarray]:
        return [b + self.h * np.arange(k0, k0 + m) for b, k0, m in zip(self.base, self.kmin, self.shape)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(*shape, n)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def points(self, mask: np.ndarray | None = None) -> np.ndarray:
        mask = self.inside if mask is None else mask
        return self.coords()[mask]

    def offset_norm2(self) -> np.ndarray:
        """Σ k_i^2 for every node: squared distance to ``base`` in units of h."""
        ks = self.offsets()
        out = np.zeros(self.shape, dtype=np.int64)
        for k in ks:
            out = out + k.astype(np.int64) ** 2
        return out

    def classify(self, predicate: Indicator) -> np.ndarray:
        return np.asarray(predicate(self.coords()), dtype=bool)

    def boundary(self) -> np.ndarray:
        """Inside nodes having at least one axis neighbour outside (or off-grid)."""
        ins = self.inside
        pad = np.pad(ins, 1, constant_values=False)
        out = np.zeros_like(ins)
        for ax in range(self.ndim):
            for shift in (-1, 1):
                nb = np.roll(pad, shift, axis=ax)[tuple(slice(1, -1) for _ in range(self.ndim))]
                out |= ~nb
        return ins & out

    def with_inside(self, mask: np.ndarray, indicator: Indicator | None = None) -> "Grid":
        return Grid(self.base, self.h, self.kmin, self.shape, np.asarray(mask, bool), indicator)


def lattice_grid(lo, hi, h: float, indicator: Indicator | None = None) -> Grid:
    """Grid of the lattice hZ^n covering the box [lo, hi].

    Nodes lie on multiples of h, so two lattice grids share every common node
    and classify it identically.
    """
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    kmin = tuple(int(v) for v in np.floor(lo / h + 1e-9))
    kmax = tuple(int(v) for v in np.ceil(hi / h - 1e-9))
    shape = tuple(b - a + 1 for a, b in zip(kmin, kmax))
    base = tuple(0.0 for _ in shape)
    g = Grid(base, float(h), kmin, shape, np.zeros(shape, bool))
    if indicator is not None:
        g = g.with_inside(g.classify(indicator), indicator)
    return g


def centered_grid(center, half_nodes: int, h: float, indicator: Indicator | None = None) -> Grid:
    """Grid with ``2*half_nodes + 1`` nodes per axis centred exactly at ``center``."""
    center = tuple(float(c) for c in np.atleast_1d(center))
    K = int(half_nodes)
    shape = tuple(2 * K + 1 for _ in center)
    g = Grid(center, float(h), tuple(-K for _ in center), shape, np.zeros(shape, bool))
    if indicator is not None:
        g = g.with_inside(g.classify(indicator), indicator)
    return g


def shell_mesh(domain: DomainSpec, r1: float, r2: float, h: float) -> Grid:
    """Lattice grid of the box [-r2, r2]^n classified against Ω_{r1,r2}.

    An empty intersection gives a grid with ``empty == True`` rather than an
    error; ε-diameters of the empty set are legitimately zero.
    """
    if not (0 < r1 < r2):
        raise PreconditionError(f"shell needs 0 < r1 < r2, got ({r1}, {r2})")
    if not h > 0:
        raise PreconditionError("mesh width must be positive")
    pred = shell_indicator(domain, r1, r2)
    return lattice_grid([-r2] * domain.n, [r2] * domain.n, h, pred)


# ---------------------------------------------------------------------------
# sphere meshes


@dataclass(frozen=True)
class SphereMesh:
    """Discretisation of S_r restricted to E = S_r ∩ Ω.

    Nodes carry area weights for dS_r.  The Dirichlet gradient structure is a
    list of path simplices: each simplex owns one (n = 2) or two (n = 3)
    edges, and its squared metric gradient is Σ coef * (edge difference)^2.
    Edges crossing ∂E carry ``tau``: the fraction of the edge, measured from
    its inside endpoint, at which the indicator changes.
    """

    r: float
    n: int
    coords: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    inside: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    edge_coef: np.ndarray = field(repr=False)
    edge_tau: np.ndarray = field(repr=False)
    simplex_edges: np.ndarray = field(repr=False)
    simplex_area: np.ndarray = field(repr=False)
    grid_shape: tuple = ()

    @property
    def boundary(self) -> np.ndarray:
        """Inside nodes adjacent to an outside node."""
        a, b = self.edges.T
        cut = self.inside[a] != self.inside[b]
        mask = np.zeros(len(self.inside), bool)
        mask[a[cut & self.inside[a]]] = True
        mask[b[cut & self.inside[b]]] = True
        return mask

    @property
    def has_dirichlet_boundary(self) -> bool:
        return not bool(self.inside.all())

    def measure(self) -> float:
        """Area (length for n = 2) of E from the node weights of inside nodes."""
        return float(self.weights[self.inside].sum())

    def total_measure(self) -> float:
        return float(self.weights.sum())


def _crossing_fraction(domain, segment, count, iters=40):
    """Vectorised bisection for the parameter s in [0, 1] where the indicator flips.

    ``segment(s)`` maps parameters to points; s = 0 is inside, s = 1 outside.
    """
    lo = np.zeros(count)
    hi = np.ones(count)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ins = domain.indicator(segment(mid))
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    return 0.5 * (lo + hi)


TAU_MIN = 1e-3


def sphere_section_mesh(domain: DomainSpec, r: float, h_ang: float, check: bool = True) -> SphereMesh:
    """Mesh of S_r ∩ Ω with angular spacing at most ``h_ang``.

    n = 2 uses N nodes at angles 2πj/N (N a multiple of 4); n = 3 uses the
    staggered latitudes θ_i = (i + 1/2)π/N_lat, so no node sits on a pole.
    """
    if not 0 < r:
        raise PreconditionError("sphere radius must be positive")
    if not 0 < h_ang < 1:
        raise PreconditionError("angular spacing must lie in (0, 1)")
    n = domain.n
    if n == 2:
        N = 4 * int(math.ceil(2 * math.pi / h_ang / 4))
        d = 2 * math.pi / N
        ang = np.arange(N) * d
        unit = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        coords = r * unit
        weights = np.full(N, r * d)
        edges = np.stack([np.arange(N), (np.arange(N) + 1) % N], axis=-1)
        edge_coef = np.full(N, 1.0 / (r * d) ** 2)
        param = ang[:, None]
        simplex_edges = np.arange(N)[:, None]
        simplex_area = np.full(N, r * d)
        grid_shape = (N,)

        def to_point(a):
            return r * np.stack([np.cos(a[..., 0]), np.sin(a[..., 0])], axis=-1)

    elif n == 3:
        nlat = int(math.ceil(math.pi / h_ang))
        nlon = 2 * nlat
        dth, dph = math.pi / nlat, 2 * math.pi / nlon
        th = (np.arange(nlat) + 0.5) * dth
        ph = np.arange(nlon) * dph
        T, P = np.meshgrid(th, ph, indexing="ij")
        param = np.stack([T.ravel(), P.ravel()], axis=-1)
        coords = r * np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
        weights = (r * r * np.sin(T) * dth * dph).ravel()
        idx = np.arange(nlat * nlon).reshape(nlat, nlon)
        # φ-edges on every latitude row, θ-edges between consecutive rows
        e_phi = np.stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()], axis=-1)
        c_phi = np.repeat(1.0 / (r * np.sin(th) * dph) ** 2, nlon)
        e_th = np.stack([idx[:-1].ravel(), idx[1:].ravel()], axis=-1)
        c_th = np.full(len(e_th), 1.0 / (r * dth) ** 2)
        edges = np.concatenate([e_phi, e_th])
        edge_coef = np.concatenate([c_phi, c_th])
        nphi = len(e_phi)
        # cell (i, j): triangle A uses φ-edge of row i and θ-edge of column j+1,
        # triangle B uses θ-edge of column j and φ-edge of row i+1
        ii, jj = np.meshgrid(np.arange(nlat - 1), np.arange(nlon), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        phi_e = lambda i, j: i * nlon + j
        th_e = lambda i, j: nphi + i * nlon + (j % nlon)
        tri_a = np.stack([phi_e(ii, jj), th_e(ii, jj + 1)], axis=-1)
        tri_b = np.stack([th_e(ii, jj), phi_e(ii + 1, jj)], axis=-1)
        simplex_edges = np.concatenate([tri_a, tri_b])
        area = r * r * np.sin((ii + 1.0) * dth) * dth * dph / 2
        simplex_area = np.concatenate([area, area])
        grid_shape = (nlat, nlon)

        def to_point(a):
            t, p = a[..., 0], a[..., 1]
            return r * np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)

    else:
        raise PreconditionError("sphere meshes exist for n = 2 and n = 3 only")

    inside = domain.indicator(coords)
    if check and not inside.any():
        raise StandingAssumptionError(f"S_r ∩ Ω has no mesh nodes at r={r:g} (h_ang={h_ang:g})")

    a, b = edges.T
    tau = np.ones(len(edges))
    cut = inside[a] != inside[b]
    if cut.any():
        ia = np.where(inside[a[cut]], a[cut], b[cut])
        ob = np.where(inside[a[cut]], b[cut], a[cut])
        p0 = param[ia].astype(float)
        dp = param[ob] - p0
        if n == 3:
            dp[:, 1] = (dp[:, 1] + math.pi) % (2 * math.pi) - math.pi
        else:
            dp[:, 0] = (dp[:, 0] + math.pi) % (2 * math.pi) - math.pi

        def seg(s):
            return to_point(p0 + s[:, None] * dp)

        tau[cut] = np.maximum(_crossing_fraction(domain, seg, len(p0)), TAU_MIN)

    return SphereMesh(float(r), n, coords, param, weights, inside, edges, edge_coef, tau,
                      simplex_edges, simplex_area, grid_shape)


def _section_bbox(domain: DomainSpec, r1: float, r2: float, radii: int = 24):
    """Bounding box of Ω_{r1,r2} estimated from dense samples of a few spheres."""
    n = domain.n
    if n == 2:
        ang = np.arange(1 << 16) * (2 * math.pi / (1 << 16))
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        dirs = _sphere_directions(n, 192)
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for t in np.geomspace(r1, r2, radii + 2)[1:-1]:
        pts = t * dirs
        ins = domain.indicator(pts)
        if ins.any():
            lo = np.minimum(lo, pts[ins].min(axis=0))
            hi = np.maximum(hi, pts[ins].max(axis=0))
    if not np.all(np.isfinite(lo)):
        return None
    return lo, hi


def fitted_shell_mesh(domain: DomainSpec, r1: float, r2: float, *, min_depth: float = 4.0,
                      max_nodes: int = 2_000_000) -> Grid:
    """Lattice grid over the bounding box of Ω_{r1,r2}, fine enough to resolve it.

    The spacing starts at (r2 - r1)/8 and is halved until the deepest inside
    node lies at least ``min_depth`` spacings from the nearest outside node,
    or the grid would exceed ``max_nodes``.  Spacings are powers of two
    times r2, so meshes of different shells of a self-similar domain are
    similar.  Returns a flagged-empty grid if no sample meets Ω.
    """
    from scipy import ndimage

    if not (0 < r1 < r2):
        raise PreconditionError(f"shell needs 0 < r1 < r2, got ({r1}, {r2})")
    pred = shell_indicator(domain, r1, r2)
    box = _section_bbox(domain, r1, r2)
    h = r2 * 2.0 ** math.floor(math.log2((r2 - r1) / 8 / r2))
    if box is None:
        return lattice_grid([-r2] * domain.n, [r2] * domain.n, h, pred)
    lo, hi = box
    while True:
        g = lattice_grid(lo - 2 * h, hi + 2 * h, h, pred)
        depth = 0.0
        if g.inside.any():
            pad = np.pad(g.inside, 1, constant_values=False)
            depth = float(ndimage.distance_transform_edt(pad).max())
        finer = np.prod([math.ceil((b - a) / h * 2) + 5 for a, b in zip(lo, hi)])
        if depth >= min_depth or finer > max_nodes:
            return g
        h /= 2
