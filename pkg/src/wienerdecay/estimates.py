"""Decay integrals, bound curves and the closed-form catalog of model cases.

Every estimate has the shape

    M(r; u) <= M(R; u) exp(-C ∫_r^R f(t) dt)

with an integrand f assembled from the profiles Λ, q and 𝒟.  Estimates
exist in two families: the superlinear family (p - 1 < α <= p), where q
enters through 1 / (1 + q^(1/(α-p+1))), and the critical family (α = p - 1),
where it enters through e^(-k q).  Each family comes with three choices of
eigenvalue minorant (spectral, the μ_δ-capacity variant, capacity only) and
with the inner-diameter form using 𝒟.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .capacity import ConeConditionResult, mu_delta, shell_complement_capacity
from .errors import (ConvergenceError, DataError, LawViolation, PreconditionError, RefusedError,
                     RegimeError, StandingAssumptionError)
from .geometry import DomainSpec, sphere_section_mesh
from .profiles import ExponentConfig, Profile

# ---------------------------------------------------------------------------
# theorem table

FORMULAS = ("min", "root", "diam", "linear")


@dataclass(frozen=True)
class TheoremSpec:
    """Which integrand, eigenvalue minorant and side conditions an estimate uses.

    ``formula``: ``min`` = min{(tΛ)^(1/(p-1)), Λ^(1/p)}, ``root`` = Λ^(1/p),
    ``diam`` = 𝒟, ``linear`` = (tΛ)^(1/(p-1)).  ``lambda_kind``: ``spectral``
    (sphere eigenvalues), ``variant`` (inf μ_δ^p + shell capacity),
    ``capacity`` (shell capacity only) or ``None`` when Λ is not used.
    """

    id: str
    family: str
    formula: str
    lambda_kind: str | None
    needs_cone: bool

    @property
    def uses(self) -> tuple:
        out = ["q"]
        out.append("D" if self.formula == "diam" else "Lambda")
        return tuple(out)


THEOREMS: dict = {t.id: t for t in (
    TheoremSpec("T2.1", "superlinear", "min", "spectral", False),
    TheoremSpec("T2.2", "superlinear", "root", "spectral", True),
    TheoremSpec("T2.3", "superlinear", "diam", None, True),
    TheoremSpec("T2.4", "superlinear", "min", "variant", False),
    TheoremSpec("T2.5", "superlinear", "root", "variant", True),
    TheoremSpec("C2.1", "superlinear", "linear", "capacity", False),
    TheoremSpec("T2.6", "critical", "min", "spectral", False),
    TheoremSpec("T2.7", "critical", "root", "spectral", True),
    TheoremSpec("T2.8", "critical", "diam", None, True),
    TheoremSpec("T2.9", "critical", "min", "variant", False),
    TheoremSpec("T2.10", "critical", "root", "variant", True),
    TheoremSpec("C2.2", "critical", "linear", "capacity", False),
)}

# the eight distinct integrand formulas; the remaining ids reuse them
INTEGRAND_IDS = ("T2.1", "T2.2", "T2.3", "C2.1", "T2.6", "T2.7", "T2.8", "C2.2")


def theorem(id: str) -> TheoremSpec:
    try:
        return THEOREMS[id]
    except KeyError:
        raise PreconditionError(f"unknown estimate id {id!r}; known: {sorted(THEOREMS)}") from None


def check_regime(spec: TheoremSpec, p: float, alpha: float, atol: float = 1e-12) -> None:
    """Raise :class:`RegimeError` unless α lies in the family's range."""
    critical = abs(alpha - (p - 1)) <= atol
    if spec.family == "critical" and not critical:
        raise RegimeError(f"{spec.id} needs α = p - 1, got α={alpha}, p={p}")
    if spec.family == "superlinear" and (critical or not (p - 1 < alpha <= p + atol)):
        raise RegimeError(f"{spec.id} needs p - 1 < α <= p, got α={alpha}, p={p}")


# ---------------------------------------------------------------------------
# integrand


def _at(profile, t):
    if profile is None:
        return None
    if isinstance(profile, Profile):
        return np.asarray(profile(t), float)
    if callable(profile):
        return np.asarray(profile(t), float)
    return np.broadcast_to(np.asarray(profile, float), np.shape(t)).astype(float)


def integrand(id: str, Lam, q, D, t, *, p: float, alpha: float, k: float | None = None):
    """Integrand of estimate ``id`` at t.

    ``Lam``, ``q``, ``D`` may be profiles, callables of t or constants; only
    those the estimate uses are needed.  Raises :class:`RegimeError` when α
    does not match the estimate's family and :class:`DataError` for negative
    or missing profile values.
    """
    spec = theorem(id)
    check_regime(spec, p, alpha)
    t = np.asarray(t, float)
    qv = _at(q, t)
    if qv is None:
        raise DataError(f"{id} needs the profile q")
    if spec.formula == "diam":
        main_in = _at(D, t)
        if main_in is None:
            raise DataError(f"{id} needs the profile D")
    else:
        main_in = _at(Lam, t)
        if main_in is None:
            raise DataError(f"{id} needs the profile Lambda")
    for name, v in (("q", qv), ("Lambda" if spec.formula != "diam" else "D", main_in)):
        if np.any(np.isnan(v)):
            raise DataError(f"profile {name} is undefined at some requested t")
        if np.any(v < 0):
            raise DataError(f"profile {name} has negative values")
    if spec.formula == "diam":
        main = main_in
    elif spec.formula == "root":
        main = main_in ** (1.0 / p)
    elif spec.formula == "linear":
        main = (t * main_in) ** (1.0 / (p - 1))
    else:
        main = np.minimum((t * main_in) ** (1.0 / (p - 1)), main_in ** (1.0 / p))
    if spec.family == "superlinear":
        out = main / (1.0 + qv ** (1.0 / (alpha - p + 1)))
    else:
        if k is None or not k > 0:
            raise PreconditionError(f"{id} needs a decay constant k > 0")
        out = np.exp(-k * qv) * main
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# divergence of ∫_0


@dataclass
class DivergenceResult:
    """Classification of ∫_0^R f(t) dt from the ladder's tail.

    ``status`` is ``divergent``, ``convergent``, ``indeterminate`` or
    ``unresolved``; ``level`` is 0 (power scale), 1 (log scale) or 2
    (log-log scale), the scale at which the slope left the critical band;
    ``slope`` is the tail slope fitted on that scale; ``tail`` names the
    tail type.
    """

    status: str
    level: int | None
    slope: float | None
    tail: str
    integral: float
    slopes: list = field(default_factory=list)

    @property
    def diverges(self) -> bool | None:
        return {"divergent": True, "convergent": False}.get(self.status)

    def to_dict(self) -> dict:
        return {"status": self.status, "diverges": self.diverges, "level": self.level, "slope": self.slope,
                "tail": self.tail, "integral_over_ladder": self.integral, "slopes": self.slopes}


def ladder_integral(t, f) -> np.ndarray:
    """I_j = ∫_{t_j}^{t_max} f dt by the trapezoidal rule in log t (t ascending)."""
    t = np.asarray(t, float)
    g = t * np.asarray(f, float)
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(np.log(t))
    return np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])


def classify_tail(t, f, R: float, *, band: float = 0.05, tail_fraction: float = 1 / 3,
                  min_points: int = 4) -> DivergenceResult:
    """Iterated-logarithm classification of ∫_0 f from samples on a ladder.

    Scale 0 fits f ~ t^a; ∫_0 diverges iff a <= -1.  Scale 1 writes
    ∫ f dt = ∫ (t f) dL with L = log(eR/t) and fits t f ~ L^s; scale 2
    writes it as ∫ (t L f) dL2 with L2 = log(eL) and fits t L f ~ L2^s.  On
    scales 1 and 2 a slope >= -1 means divergence.  A slope within ``band``
    of the critical value -1 passes to the next scale; still critical on
    scale 2 means indeterminate.
    """
    t = np.asarray(t, float)
    f = np.asarray(f, float)
    order = np.argsort(t)
    t, f = t[order], f[order]
    ok = np.isfinite(f)
    t, f = t[ok], f[ok]
    if len(t) < min_points:
        return DivergenceResult("unresolved", None, None, "too few rungs", math.nan)
    integral = float(ladder_integral(t, f)[0])
    ntail = max(min_points, int(math.ceil(tail_fraction * len(t))))
    tt, ft = t[:ntail], f[:ntail]
    if np.all(ft == 0):
        return DivergenceResult("convergent", 0, None, "zero", integral)
    if np.any(ft <= 0):
        return DivergenceResult("unresolved", None, None, "tail changes sign or vanishes", integral)
    L1 = np.log(math.e * R / tt)
    L2 = np.log(math.e * L1)
    slopes = []
    a = float(np.polyfit(np.log(tt), np.log(ft), 1)[0])
    slopes.append(a)
    if a < -1 - band:
        return DivergenceResult("divergent", 0, a, "power", integral, slopes)
    if a > -1 + band:
        return DivergenceResult("convergent", 0, a, "power", integral, slopes)
    s1 = float(np.polyfit(np.log(L1), np.log(tt * ft), 1)[0])
    slopes.append(s1)
    if s1 > -1 + band:
        return DivergenceResult("divergent", 1, s1, "log" if abs(s1) <= band else "log-power", integral, slopes)
    if s1 < -1 - band:
        return DivergenceResult("convergent", 1, s1, "log-power", integral, slopes)
    s2 = float(np.polyfit(np.log(L2), np.log(tt * L1 * ft), 1)[0])
    slopes.append(s2)
    if s2 > -1 + band:
        return DivergenceResult("divergent", 2, s2, "log-log", integral, slopes)
    if s2 < -1 - band:
        return DivergenceResult("convergent", 2, s2, "log-log-power", integral, slopes)
    return DivergenceResult("indeterminate", 2, s2, "critical", integral, slopes)


def divergence_test(id: str, profiles: Mapping, R: float, *, p: float, alpha: float, k: float | None = None,
                    band: float = 0.05) -> DivergenceResult:
    """Classify divergence of ∫_0^R integrand(id) dt from profiles on a shared ladder.

    ``profiles`` maps ``Lambda``/``q``/``D`` to :class:`Profile` objects; the
    ladder is the set of rungs valid in every profile the estimate uses.
    """
    spec = theorem(id)
    check_regime(spec, p, alpha)
    used = [profiles.get(name) for name in spec.uses]
    if any(u is None for u in used):
        raise DataError(f"{id} needs profiles {spec.uses}")
    r, valid = _common_ladder(used)
    if valid.sum() < 4:
        return DivergenceResult("unresolved", None, None, "too few rungs", math.nan)
    t = r[valid]
    f = integrand(id, profiles.get("Lambda"), profiles["q"], profiles.get("D"), t, p=p, alpha=alpha, k=k)
    return classify_tail(t, f, R, band=band)


def _common_ladder(profiles):
    r = profiles[0].r
    valid = np.ones(len(r), bool)
    for pr in profiles:
        if pr.r.shape != r.shape or not np.allclose(pr.r, r, rtol=1e-12, atol=0):
            raise DataError("profiles must share one ladder")
        valid &= pr.valid
    return r, valid


# ---------------------------------------------------------------------------
# capacity-based eigenvalue minorants


def capacity_lambda(domain: DomainSpec, config: ExponentConfig, r_ladder, *, m: int = 24,
                    shell_caps: dict | None = None) -> Profile:
    """Λ(r) = r^(-n) cap(closure(B_{rθ^-2/3, rθ^-1/3}) \\ Ω, B_{r/θ, r}) per rung."""
    r_ladder = np.asarray(r_ladder, float)
    vals, miss = [], []
    caps = shell_caps if shell_caps is not None else {}
    for r in r_ladder:
        try:
            if float(r) not in caps:
                caps[float(r)] = shell_complement_capacity(domain, r, config.theta, config.p, m)
            vals.append(r ** (-domain.n) * caps[float(r)])
            miss.append(False)
        except ConvergenceError:
            vals.append(np.nan)
            miss.append(True)
    return Profile(r_ladder, np.array(vals), np.array(miss), "Lambda_capacity", {"theta": config.theta})


def mu_sample_points(domain: DomainSpec, r: float, theta: float, per_sphere: int = 6,
                     h_ang: float = 0.1) -> np.ndarray:
    """Points of Ω_{rθ^-1/3, rθ^1/3} far from ∂Ω: the deepest nodes of three sphere sections."""
    out = []
    for t in (r * theta ** (-1 / 6), r, r * theta ** (1 / 6)):
        h = h_ang
        mesh = None
        for _ in range(8):
            mesh = sphere_section_mesh(domain, t, h, check=False)
            if mesh.inside.sum() >= 4 * per_sphere:
                break
            h /= 2
        ins = mesh.coords[mesh.inside]
        if len(ins) == 0:
            continue
        outs = mesh.coords[~mesh.inside]
        if len(outs) == 0:
            depth = np.zeros(len(ins))
        else:
            depth = cKDTree(outs).query(ins)[0]
        order = np.lexsort((np.arange(len(ins)), -depth))[:per_sphere]
        out.append(ins[order])
    if not out:
        raise StandingAssumptionError(f"no sample points of Ω near |x| = {r:g}")
    return np.concatenate(out)


def lambda_capacity_variant(domain: DomainSpec, config: ExponentConfig, r_ladder, *, m: int = 24,
                            per_sphere: int = 6, shell_caps: dict | None = None,
                            log: list | None = None) -> Profile:
    """Λ(r) = inf_{Ω_{rθ^-1/3, rθ^1/3}} μ_δ^p + r^(-n) cap(shell complement) per rung.

    The infimum runs over the deepest sampled points of the section, so it
    is estimated from above.  Failed capacity solves make the rung missing.
    """
    cap_profile = capacity_lambda(domain, config, r_ladder, m=m, shell_caps=shell_caps)
    vals, miss = [], []
    for r, c, cm in zip(cap_profile.r, cap_profile.values, cap_profile.missing):
        if cm:
            vals.append(np.nan)
            miss.append(True)
            continue
        try:
            best = math.inf
            for x in mu_sample_points(domain, r, config.theta, per_sphere):
                best = min(best, mu_delta(domain, x, config.delta, config.p) ** config.p)
                if best == 0.0:
                    break
            vals.append(best + c)
            miss.append(False)
            if log is not None:
                log.append({"r": float(r), "inf_mu_p": best, "capacity_term": float(c)})
        except (ConvergenceError, StandingAssumptionError):
            vals.append(np.nan)
            miss.append(True)
    return Profile(cap_profile.r, np.array(vals), np.array(miss), "Lambda_variant",
                   {"theta": config.theta, "delta": config.delta})


# ---------------------------------------------------------------------------
# bound curves


@dataclass
class EstimateReport:
    id: str
    r: np.ndarray = field(repr=False)
    integrand: np.ndarray = field(repr=False)
    integral: np.ndarray = field(repr=False)
    bound: np.ndarray = field(repr=False)
    M_R: float
    C: float | None
    k: float | None
    R: float
    r_cal: float | None = None
    divergence: DivergenceResult | None = None
    cone_verdict: str | None = None
    refused: bool = False
    reason: str = ""
    constants: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.refused:
            return "refused"
        return "calibrated" if self.r_cal is not None else "bound"

    def to_dict(self) -> dict:
        nan = lambda v: None if v is None or not np.isfinite(v) else float(v)
        return {"id": self.id, "verdict": self.verdict, "refused": self.refused, "reason": self.reason,
                "M_R": self.M_R, "C": self.C, "k": self.k, "R": self.R, "r_cal": self.r_cal,
                "cone_verdict": self.cone_verdict,
                "divergence": self.divergence.to_dict() if self.divergence else None,
                "constants": dict(self.constants),
                "r": [float(x) for x in self.r], "integrand": [nan(x) for x in self.integrand],
                "integral": [nan(x) for x in self.integral], "bound": [nan(x) for x in self.bound]}

    def to_csv(self, measured: Profile | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "integrand", "integral", "M_bound", "M_measured"])
        meas = {}
        if measured is not None:
            meas = {round(float(r), 14): v for r, v, m in zip(measured.r, measured.values, measured.missing)
                    if not m}
        for r, f, i, b in zip(self.r, self.integrand, self.integral, self.bound):
            mv = meas.get(round(float(r), 14))
            w.writerow([repr(float(r)), repr(float(f)), repr(float(i)), repr(float(b)),
                        "" if mv is None else repr(float(mv))])
        return buf.getvalue()


def _refusal(id, r, M_R, C, k, R, reason, divergence=None, cone=None) -> EstimateReport:
    nan = np.full(len(r), np.nan)
    return EstimateReport(id, np.asarray(r, float), nan, nan, nan, M_R, C, k, R, None, divergence, cone,
                          True, reason)


def bound_curve(id: str, profiles: Mapping, M_R: float, C: float | None, k: float | None,
                r_ladder, *, R: float, p: float, alpha: float, cone: ConeConditionResult | None = None,
                divergence: DivergenceResult | None = None, override: bool = False,
                calibration: tuple | None = None) -> EstimateReport:
    """M_bound(r) = M_R exp(-C ∫_r^R f) on each rung of ``r_ladder``.

    The integral is the trapezoidal rule in log t over the ladder; if R lies
    above the top rung, the profiles are continued as power laws from their
    top segments.  The estimate is refused when it needs the cone condition
    and ``cone`` is missing or not positive, or when ``divergence`` does not
    report a divergent integral (unless ``override``).  ``calibration`` =
    (r_cal, M_cal) replaces ``C`` by the value making the bound pass through
    M_cal at r_cal.
    """
    spec = theorem(id)
    check_regime(spec, p, alpha)
    r = np.asarray(r_ladder, float)
    cone_v = cone.verdict if cone is not None else None
    if spec.needs_cone and (cone is None or not cone.positive):
        return _refusal(id, r, M_R, C, k, R, f"{id} needs a positive cone condition (got {cone_v})",
                        divergence, cone_v)
    if not override:
        if divergence is None:
            return _refusal(id, r, M_R, C, k, R, "divergence of the integral was not tested", None, cone_v)
        if divergence.status != "divergent":
            return _refusal(id, r, M_R, C, k, R,
                            f"integral hypothesis fails: ∫_0 is {divergence.status}", divergence, cone_v)
    if np.any(r <= 0) or np.any(np.diff(r) <= 0) or r[-1] > R * (1 + 1e-12):
        raise PreconditionError("ladder must be increasing inside (0, R]")
    t = r if r[-1] >= R * (1 - 1e-12) else np.concatenate([r, np.geomspace(r[-1], R, 9)[1:]])
    vals = {}
    for name in spec.uses:
        pr = profiles.get(name)
        if pr is None:
            raise DataError(f"{id} needs profile {name}")
        vals[name] = (lambda pr: (lambda s: pr(s, extrapolate=True)))(pr)
    f = integrand(id, vals.get("Lambda"), vals["q"], vals.get("D"), t, p=p, alpha=alpha, k=k)
    I_all = ladder_integral(t, f)
    I = I_all[: len(r)]
    f = np.asarray(f)[: len(r)]
    r_cal = None
    if calibration is not None:
        r_cal, M_cal = calibration
        j = int(np.argmin(np.abs(r - r_cal)))
        if not math.isclose(r[j], r_cal, rel_tol=1e-12):
            raise PreconditionError("calibration radius must be a ladder rung")
        if not (M_cal > 0 and I[j] > 0):
            return _refusal(id, r, M_R, C, k, R, "calibration needs M(r_cal) > 0 and a positive integral",
                            divergence, cone_v)
        C = math.log(M_R / M_cal) / I[j]
        if not C > 0:
            return _refusal(id, r, M_R, C, k, R, f"calibrated constant C={C:.4g} is not positive",
                            divergence, cone_v)
        r_cal = float(r[j])
    if C is None or not C > 0:
        raise PreconditionError("bound curve needs a constant C > 0 or a calibration point")
    bound = M_R * np.exp(-C * I)
    return EstimateReport(id, r, f, I, bound, float(M_R), float(C), k, float(R), r_cal, divergence, cone_v,
                          False, "", {"p": p, "alpha": alpha})


def calibration_radius(r_ladder, R: float) -> float:
    """Largest ladder rung strictly below R/2."""
    r = np.asarray(r_ladder, float)
    below = r[r < R / 2]
    if len(below) == 0:
        raise PreconditionError("no ladder rung below R/2 to calibrate at")
    return float(below.max())


# ---------------------------------------------------------------------------
# closed-form catalog


@dataclass(frozen=True)
class CatalogEntry:
    example: str
    branch: str
    guarantee: bool
    f: Callable | None = field(default=None, compare=False, repr=False)
    theorem: str | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {"example": self.example, "branch": self.branch, "guarantee": self.guarantee,
                "theorem": self.theorem, "note": self.note}


def _log_inv(r):
    return np.log(1.0 / np.asarray(r, float))


def _eq(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _no_guarantee(example, why):
    return CatalogEntry(example, "no guarantee", False, None, None, why)


def f_catalog(example_id: str, params: Mapping) -> CatalogEntry:
    """Closed-form decay function f(r) of a model case, M(r) <= M(R) e^(-C f(r)).

    ``example_id``: ``"2.1"`` (exterior cone, b <= k2 |x|^l, or the
    logarithmic form with ``sigma``), ``"2.2"`` (power cusp, same two forms),
    ``"2.3"`` (power cusp, α = p - 1).  ``params`` holds p, alpha, and l or
    sigma, plus s for the cusps.  Out-of-regime parameters yield an entry
    with ``guarantee=False``.
    """
    ex = str(example_id)
    p, a = float(params["p"]), float(params["alpha"])
    d = a - p + 1  # α - p + 1
    if ex == "2.1":
        if not (p - 1 < a <= p):
            return _no_guarantee(ex, "requires p - 1 < α <= p")
        if "sigma" in params:
            sg = float(params["sigma"])
            if sg <= 0:
                return CatalogEntry(ex, "log: σ <= 0", True, lambda r: _log_inv(r), "T2.1")
            if sg < d and not _eq(sg, d):
                e = (d - sg) / d
                return CatalogEntry(ex, "log: 0 < σ < α-p+1", True, lambda r: _log_inv(r) ** e, "T2.1")
            if _eq(sg, d):
                return CatalogEntry(ex, "log: σ = α-p+1", True, lambda r: np.log(_log_inv(r)), "T2.1")
            return _no_guarantee(ex, "σ > α-p+1: the integral converges")
        l = float(params["l"])
        if l >= a - p or _eq(l, a - p):
            return CatalogEntry(ex, "power: l >= α-p", True, lambda r: _log_inv(r), "T2.1",
                                "algebraic decay M(r) <= M(R) r^k")
        return _no_guarantee(ex, "l < α-p")
    if ex == "2.2":
        s = float(params["s"])
        if not s > 1:
            raise PreconditionError("the cusp exponent s must exceed 1")
        if not (p - 1 < a <= p):
            return _no_guarantee(ex, "requires p - 1 < α <= p")
        if "sigma" in params:
            sg = float(params["sigma"])
            if sg < d and not _eq(sg, d):
                e = (d - sg) / d
                return CatalogEntry(ex, "log: σ < α-p+1", True, lambda r: _log_inv(r) ** e, "T2.3")
            if _eq(sg, d):
                return CatalogEntry(ex, "log: σ = α-p+1", True, lambda r: np.log(_log_inv(r)), "T2.3")
            return _no_guarantee(ex, "σ > α-p+1: the integral converges")
        l = float(params["l"])
        lo = a - p + 1 - s
        if l >= s * (a - p) or _eq(l, s * (a - p)):
            return CatalogEntry(ex, "s(α-p) <= l", True, lambda r: np.asarray(r, float) ** (1 - s), "T2.3")
        if _eq(l, lo):
            return CatalogEntry(ex, "l = α-p+1-s", True, lambda r: _log_inv(r), "T2.3")
        if lo < l:
            e = (lo - l) / d
            return CatalogEntry(ex, "α-p+1-s < l < s(α-p)", True, lambda r: np.asarray(r, float) ** e, "T2.3")
        return _no_guarantee(ex, "l < α-p+1-s")
    if ex == "2.3":
        s = float(params["s"])
        if not s > 1:
            raise PreconditionError("the cusp exponent s must exceed 1")
        if not _eq(a, p - 1):
            return _no_guarantee(ex, "requires α = p - 1")
        l = float(params["l"])
        if l >= -s or _eq(l, -s):
            return CatalogEntry(ex, "l >= -s", True, lambda r: np.asarray(r, float) ** (1 - s), "T2.8")
        return _no_guarantee(ex, "l < -s")
    raise PreconditionError(f"unknown example {example_id!r}; expected 2.1, 2.2 or 2.3")


def literature_threshold(example_id: str, params: Mapping) -> dict:
    """Threshold on l above which the earlier capacity-density criterion applies.

    For "2.1" it is α - p (strict), whereas the estimates here also cover
    l = α - p.  For "2.2" it is (α-p)(n+s-1)/n, asserted to exceed the
    present threshold α-p+1-s.  For "2.3" it is -(n+s-1)/n, asserted to
    exceed the present threshold -s.  A failed assertion raises
    :class:`LawViolation`.
    """
    ex = str(example_id)
    if ex == "2.1":
        p, a = float(params["p"]), float(params["alpha"])
        thr = a - p
        return {"example": ex, "literature_threshold": thr, "literature_strict": True,
                "present_threshold": thr, "present_strict": False, "gain": "covers l = α-p"}
    n = int(params["n"])
    s = float(params["s"])
    if n < 2 or not s > 1:
        raise PreconditionError("needs n >= 2 and s > 1")
    if ex == "2.2":
        p, a = float(params["p"]), float(params["alpha"])
        thr = (a - p) * (n + s - 1) / n
        present = a - p + 1 - s
    elif ex == "2.3":
        thr = -(n + s - 1) / n
        present = -s
    else:
        raise PreconditionError(f"unknown example {example_id!r}")
    if not thr > present:
        raise LawViolation("literature comparison", {"example": ex, "n": n, "s": s, "literature": thr,
                                                     "present": present})
    return {"example": ex, "literature_threshold": thr, "literature_strict": True,
            "present_threshold": present, "present_strict": False, "gain": thr - present}
