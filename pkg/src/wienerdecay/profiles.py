"""Radial profiles: the carrier type, the coefficient b and the profiles q, 𝒟.

A :class:`Profile` is a non-negative function of r sampled on a strictly
increasing ladder, interpolated piecewise linearly in log-log coordinates.
Rungs whose computation failed are kept in the ladder with a ``missing``
flag and skipped by interpolation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .capacity import DiamResult, diam_eps
from .errors import DataError, PreconditionError
from .geometry import DomainSpec, ball_volume, lattice_grid, shell_indicator, sphere_area


# ---------------------------------------------------------------------------
# Profile


def log_ladder(r_min: float, r_max: float, rungs: int) -> np.ndarray:
    """``rungs`` log-spaced radii from r_min to r_max inclusive."""
    if not 0 < r_min < r_max:
        raise PreconditionError(f"ladder needs 0 < r_min < r_max, got ({r_min}, {r_max})")
    if rungs < 2:
        raise PreconditionError("a ladder needs at least two rungs")
    return np.geomspace(r_min, r_max, int(rungs))


@dataclass(frozen=True)
class Profile:
    r: np.ndarray
    values: np.ndarray
    missing: np.ndarray = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, float)
        v = np.asarray(self.values, float)
        miss = np.zeros(r.shape, bool) if self.missing is None else np.asarray(self.missing, bool)
        if r.ndim != 1 or v.shape != r.shape or miss.shape != r.shape:
            raise DataError("profile arrays must be one-dimensional and of equal length")
        if np.any(np.diff(r) <= 0) or np.any(r <= 0):
            raise DataError("profile ladder must be positive and strictly increasing")
        v = np.where(miss, np.nan, v)
        miss = miss | ~np.isfinite(v)
        if np.any(v[~miss] < 0):
            raise DataError(f"profile {self.name!r} has negative values")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "missing", miss)

    @classmethod
    def from_function(cls, fn: Callable[[float], float], r_ladder, name="") -> "Profile":
        r = np.asarray(r_ladder, float)
        return cls(r, np.array([fn(t) for t in r], float), None, name)

    @property
    def valid(self) -> np.ndarray:
        return ~self.missing

    @property
    def complete(self) -> bool:
        return not self.missing.any()

    def _nodes(self):
        ok = self.valid
        return self.r[ok], self.values[ok]

    def __call__(self, t, extrapolate: bool = False):
        """Interpolated value(s) at t.

        Between rungs: linear in (log r, log value), or linear in (log r,
        value) on segments touching a zero.  Outside the valid range the end
        segment's power law is continued if ``extrapolate``, else NaN.
        """
        rr, vv = self._nodes()
        t = np.asarray(t, float)
        out = np.full(t.shape, np.nan)
        if len(rr) == 0:
            return out if out.ndim else float(out)
        if len(rr) == 1:
            out[np.isclose(t, rr[0], rtol=1e-12, atol=0)] = vv[0]
            if extrapolate:
                out[:] = vv[0]
            return out if out.ndim else float(out)
        lt = np.log(np.clip(t, 1e-300, None))
        lr = np.log(rr)
        j = np.clip(np.searchsorted(lr, lt) - 1, 0, len(rr) - 2)
        r0, r1 = lr[j], lr[j + 1]
        v0, v1 = vv[j], vv[j + 1]
        w = (lt - r0) / (r1 - r0)
        pos = (v0 > 0) & (v1 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logv = np.exp(np.log(np.where(pos, v0, 1)) * (1 - w) + np.log(np.where(pos, v1, 1)) * w)
        lin = v0 * (1 - w) + v1 * w
        val = np.where(pos, logv, np.maximum(lin, 0.0))
        inside = (t >= rr[0] * (1 - 1e-12)) & (t <= rr[-1] * (1 + 1e-12))
        out = np.where(inside | extrapolate, val, np.nan)
        return out if out.ndim else float(out)

    def slope(self, r_lo: float | None = None, r_hi: float | None = None) -> float:
        """Least-squares log-log slope over valid positive samples in [r_lo, r_hi]."""
        rr, vv = self._nodes()
        sel = vv > 0
        if r_lo is not None:
            sel &= rr >= r_lo * (1 - 1e-12)
        if r_hi is not None:
            sel &= rr <= r_hi * (1 + 1e-12)
        if sel.sum() < 2:
            raise DataError(f"profile {self.name!r}: fewer than two positive samples for a slope fit")
        return float(np.polyfit(np.log(rr[sel]), np.log(vv[sel]), 1)[0])

    def scaled(self, power: float, name: str | None = None) -> "Profile":
        """The profile multiplied by r**power."""
        return Profile(self.r, self.values * self.r**power, self.missing, name or self.name, dict(self.meta))

    def to_dict(self) -> dict:
        return {"name": self.name, "r": [float(x) for x in self.r],
                "value": [None if m else float(v) for v, m in zip(self.values, self.missing)],
                "missing": [bool(m) for m in self.missing]}

    @classmethod
    def from_dict(cls, doc) -> "Profile":
        vals = [np.nan if v is None else v for v in doc["value"]]
        return cls(np.array(doc["r"], float), np.array(vals, float), np.array(doc["missing"], bool),
                   doc.get("name", ""))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "value", "missing"])
        for r, v, m in zip(self.r, self.values, self.missing):
            w.writerow([repr(float(r)), "" if m else repr(float(v)), int(m)])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# exponents


def select_nu(p: float, alpha: float, n: int, margin: float = 1.0) -> float:
    """Integrability exponent ν of the coefficient b for given (p, α, n).

    Where only a strict lower bound is prescribed (n = p), the bound plus
    ``margin`` is returned.
    """
    if not p > 1:
        raise PreconditionError("p must exceed 1")
    if not (p - 1 <= alpha <= p):
        raise PreconditionError(f"α must lie in [p-1, p], got α={alpha} for p={p}")
    if margin <= 0:
        raise PreconditionError("ν margin must be positive")
    if alpha == p:
        return math.inf
    if alpha == p - 1:
        return float(max(n, p)) if n != p else p + margin
    if n != p:
        return max(n, p) / (p - alpha)
    return p / (p - alpha) + margin


@dataclass(frozen=True)
class ExponentConfig:
    p: float
    alpha: float
    n: int
    theta: float = 2.0
    eps: float = 0.5
    delta: float | None = None
    nu_margin: float = 1.0
    nu: float | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise PreconditionError("p must exceed 1")
        if not (self.p - 1 <= self.alpha <= self.p):
            raise PreconditionError("α must lie in [p-1, p]")
        if not self.theta > 1:
            raise PreconditionError("θ must exceed 1")
        if not 0 < self.eps < 1:
            raise PreconditionError("ε must lie in (0, 1)")
        dmax = 1 - self.theta ** (-1 / 3)
        delta = self.delta if self.delta is not None else dmax / 2
        if not 0 < delta < dmax:
            raise PreconditionError(f"δ must lie in (0, {dmax:.4g}) for θ={self.theta}")
        object.__setattr__(self, "delta", float(delta))
        expected = select_nu(self.p, self.alpha, self.n, self.nu_margin)
        if self.nu is None:
            object.__setattr__(self, "nu", expected)

    @property
    def gradient_regime(self) -> str:
        """``"superlinear"`` for p-1 < α <= p, ``"critical"`` for α = p-1."""
        return "critical" if self.alpha == self.p - 1 else "superlinear"

    def to_dict(self) -> dict:
        return {"p": self.p, "alpha": self.alpha, "n": self.n, "theta": self.theta, "eps": self.eps,
                "delta": self.delta, "nu_margin": self.nu_margin,
                "nu": None if math.isinf(self.nu) else self.nu}


# ---------------------------------------------------------------------------
# coefficient b


COEFFICIENT_KINDS = ("zero", "power_law", "power_log", "custom")


@dataclass(frozen=True)
class Coefficient:
    """Non-negative coefficient b(x) of the gradient term.

    ``zero``: b ≡ 0.  ``power_law`` (k2, l): k2 |x|^l.  ``power_log``
    (k2, l, sigma): k2 |x|^l log(1/|x|)^σ, defined for 0 < |x| < 1.
    ``custom``: an arbitrary vectorised oracle.
    """

    kind: str = "zero"
    k2: float = 0.0
    l: float = 0.0
    sigma: float = 0.0
    oracle: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise PreconditionError(f"unknown coefficient kind {self.kind!r}")
        if self.kind != "custom" and self.k2 < 0:
            raise PreconditionError("k2 must be non-negative")
        if self.kind == "custom" and self.oracle is None:
            raise PreconditionError("custom coefficient needs an oracle")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind != "custom" and self.k2 == 0)

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, float)
        rho = np.linalg.norm(x, axis=-1)
        if self.is_zero:
            return np.zeros(rho.shape)
        if self.kind == "custom":
            out = np.asarray(self.oracle(x), float)
        else:
            with np.errstate(divide="ignore"):
                out = self.k2 * rho**self.l
            if self.kind == "power_log":
                if np.any(rho >= 1):
                    raise DataError("power_log coefficient is only defined for |x| < 1")
                out = out * np.log(1.0 / rho) ** self.sigma
        if np.any(out < 0):
            raise DataError("coefficient b takes negative values")
        return out

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise PreconditionError("custom coefficients cannot be serialised")
        return {"kind": self.kind, "k2": self.k2, "l": self.l, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, doc) -> "Coefficient":
        return cls(doc.get("kind", "zero"), float(doc.get("k2", 0.0)), float(doc.get("l", 0.0)),
                   float(doc.get("sigma", 0.0)))


# ---------------------------------------------------------------------------
# 𝓛_{ν,ε} norm


@dataclass
class NormResult:
    value: float
    status: str
    diam: float
    witness: tuple | None = None

    @property
    def resolved(self) -> bool:
        return self.status in ("ok", "empty")


def _centres(grid, max_points: int) -> np.ndarray:
    pts = grid.points()
    if len(pts) > max_points:
        idx = np.linspace(0, len(pts) - 1, max_points).round().astype(int)
        pts = pts[np.unique(idx)]
    return pts


def lnu_eps_norm(b: Coefficient, region: Callable, nu: float, grid, diam: DiamResult | float, *,
                 m: int = 16, max_points: int = 400) -> NormResult:
    """|S_1|^(-1/ν) sup_x ‖b‖_{L_ν(ω ∩ B_d^x)} with d = diam_ε ω.

    x runs over (a deterministic subsample of) the inside nodes of ``grid``,
    so the supremum is estimated from below.  The integral over ω ∩ B_d^x
    is midpoint quadrature on a local grid of spacing d/m.  For ν = ∞ the
    value is the largest sampled b over the same sets.
    """
    if isinstance(diam, DiamResult):
        if not diam.resolved:
            return NormResult(math.nan, "unresolved", diam.value)
        d = diam.value
    else:
        d = float(diam)
    if not nu > 0:
        raise PreconditionError("ν must be positive")
    if grid.empty or d == 0:
        return NormResult(0.0, "empty", d)
    if b.is_zero:
        return NormResult(0.0, "ok", d)
    n = grid.ndim
    k = np.arange(-m, m) + 0.5
    cells = np.stack(np.meshgrid(*([k] * n), indexing="ij"), axis=-1).reshape(-1, n)
    cells = cells[np.einsum("ij,ij->i", cells, cells) < m * m] * (d / m)
    vol = (d / m) ** n
    best, witness = 0.0, None
    for x in _centres(grid, max_points):
        pts = x + cells
        ins = np.asarray(region(pts), bool)
        if not ins.any():
            continue
        vals = b(pts[ins])
        if math.isinf(nu):
            v = float(vals.max())
        else:
            v = float(np.sum(vals**nu) * vol) ** (1.0 / nu)
        if v > best:
            best, witness = v, tuple(x)
    if not math.isinf(nu):
        best *= sphere_area(n) ** (-1.0 / nu)
    return NormResult(best, "ok", d, witness)


# ---------------------------------------------------------------------------
# shell profiles q and 𝒟


@dataclass
class ShellCache:
    """ε-diameters and grids of the sections Ω_{r/θ, rθ}, computed once per rung."""

    domain: DomainSpec
    theta: float
    eps: float
    p: float = 2.0
    m: int = 10
    min_depth: float = 4.0
    grids: dict = field(default_factory=dict, repr=False)
    diams: dict = field(default_factory=dict, repr=False)

    def region(self, r: float):
        return shell_indicator(self.domain, r / self.theta, r * self.theta)

    def grid(self, r: float):
        from .geometry import fitted_shell_mesh

        r = float(r)
        if r not in self.grids:
            self.grids[r] = fitted_shell_mesh(self.domain, r / self.theta, r * self.theta,
                                              min_depth=self.min_depth)
        return self.grids[r]

    def diam(self, r: float) -> DiamResult:
        r = float(r)
        if r not in self.diams:
            self.diams[r] = diam_eps(self.region(r), self.eps, self.grid(r), p=self.p, m=self.m)
        return self.diams[r]

    def log_rows(self) -> list:
        return [{"r": r, "diam_eps": d.value, "status": d.status, "evaluations": d.evaluations,
                 "grid_h": self.grids[r].h} for r, d in sorted(self.diams.items())]


def _check_ladder(domain, r_ladder):
    r = np.asarray(r_ladder, float)
    if np.any(r <= 0) or np.any(r >= domain.R):
        raise PreconditionError("ladder must lie in (0, R)")
    return r


def d_profile(domain: DomainSpec, config: ExponentConfig, r_ladder, *, cache: ShellCache | None = None) -> Profile:
    """𝒟(r) = 1 / diam_ε Ω_{r/θ, rθ}; unresolved diameters are missing rungs."""
    r_ladder = _check_ladder(domain, r_ladder)
    cache = cache or ShellCache(domain, config.theta, config.eps, config.p)
    vals, miss = [], []
    for r in r_ladder:
        d = cache.diam(r)
        ok = d.status == "ok" and d.value > 0
        vals.append(1.0 / d.value if ok else np.nan)
        miss.append(not ok)
    return Profile(r_ladder, np.array(vals), np.array(miss), "D", {"theta": config.theta, "eps": config.eps})


def q_profile(domain: DomainSpec, b: Coefficient, config: ExponentConfig, r_ladder, *,
              cache: ShellCache | None = None, shortcut: bool = False) -> Profile:
    """q(r) = (diam_ε Ω_{r/θ,rθ})^(p-α-n/ν) ‖b‖_{𝓛_{ν,ε}(Ω_{r/θ,rθ})}.

    With ``shortcut`` the bounded-coefficient form (diam_ε)^(p-α) sup b is
    used instead, sup b being taken over the inside nodes of the section grid.
    """
    r_ladder = _check_ladder(domain, r_ladder)
    cache = cache or ShellCache(domain, config.theta, config.eps, config.p)
    n, p, a, nu = domain.n, config.p, config.alpha, config.nu
    vals, miss = [], []
    for r in r_ladder:
        if b.is_zero:
            vals.append(0.0)
            miss.append(False)
            continue
        d = cache.diam(r)
        if d.status != "ok" or d.value <= 0:
            vals.append(np.nan)
            miss.append(True)
            continue
        grid = cache.grid(r)
        if shortcut:
            vals.append(d.value ** (p - a) * float(b(grid.points()).max()))
        else:
            norm = lnu_eps_norm(b, cache.region(r), nu, grid, d)
            expo = p - a - (0.0 if math.isinf(nu) else n / nu)
            vals.append(d.value**expo * norm.value)
        miss.append(False)
    return Profile(r_ladder, np.array(vals), np.array(miss), "q",
                   {"theta": config.theta, "eps": config.eps, "nu": None if math.isinf(nu) else nu,
                    "shortcut": shortcut})
