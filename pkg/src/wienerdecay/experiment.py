"""Config-driven experiment runner: profiles, estimates and PDE checks in one bundle.

A run is a strict pipeline of stages

    geometry -> profiles -> cone -> estimates -> pde -> verify

each of which writes its own files.  A failing stage is recorded in the
manifest together with every stage that depends on it; the other files are
still written.  All outputs are deterministic functions of the config: JSON
is written with sorted keys, floats as ``repr``, and nothing carries a
timestamp.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import traceback
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__
from .capacity import check_capacity_laws, cone_condition, random_law_instances
from .errors import PreconditionError, RefusedError
from .estimates import (THEOREMS, calibration_radius, bound_curve, capacity_lambda, check_regime,
                        divergence_test, f_catalog, lambda_capacity_variant, literature_threshold)
from .geometry import DomainSpec, check_standing_assumption
from .pde import ProblemInstance, measure_M, solve, verify_bound
from .profiles import Coefficient, ExponentConfig, Profile, ShellCache, d_profile, log_ladder, q_profile
from .spectral import SectionSolver, lambda_profile

SCHEMA_VERSION = 1
STAGES = ("geometry", "capacity_laws", "profiles", "cone", "estimates", "pde", "verify")
DEPENDS = {"geometry": (), "capacity_laws": (), "profiles": ("geometry",), "cone": ("geometry",),
           "estimates": ("profiles", "cone"), "pde": ("geometry",), "verify": ("estimates", "pde")}
PROFILE_NAMES = ("Lambda", "Lambda_variant", "Lambda_capacity", "D", "q")


class ConfigError(PreconditionError):
    """The experiment config is malformed or inconsistent."""


# ---------------------------------------------------------------------------
# config


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    domain: DomainSpec
    coefficient: Coefficient
    exponents: ExponentConfig
    ladder: np.ndarray = field(repr=False)
    theorems: tuple = ()
    k: tuple = (1.0,)
    C: float = 1.0
    profiles: tuple = ()
    h_ang: float = 0.05
    samples_per_octave: int = 8
    shell_m: int = 24
    q_shortcut: bool = False
    pde: dict | None = None
    catalog: dict | None = None
    capacity_laws: dict | None = None
    output: str | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def needed_profiles(self) -> tuple:
        need = set(self.profiles)
        for tid in self.theorems:
            spec = THEOREMS[tid]
            need.add("q")
            if spec.formula == "diam":
                need.add("D")
            else:
                need.add({"spectral": "Lambda", "variant": "Lambda_variant",
                          "capacity": "Lambda_capacity"}[spec.lambda_kind])
        if not self.theorems and not self.profiles:
            need |= {"Lambda", "D", "q"}
        return tuple(n for n in PROFILE_NAMES if n in need)

    @property
    def needs_cone(self) -> bool:
        return any(THEOREMS[t].needs_cone for t in self.theorems)

    def normalized(self) -> dict:
        doc = json.loads(json.dumps(self.raw))
        doc["ladder"]["rungs"] = int(len(self.ladder))
        return doc


def _get(doc, key, default=None, kind=None):
    v = doc.get(key, default)
    if kind is not None and v is not None:
        try:
            v = kind(v)
        except (TypeError, ValueError):
            raise ConfigError(f"field {key!r} must be {kind.__name__}, got {doc.get(key)!r}") from None
    return v


def parse_config(doc: Mapping, *, rungs: int | None = None) -> ExperimentConfig:
    """Validate a config document; raises :class:`ConfigError` with the offending field."""
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a JSON object")
    doc = json.loads(json.dumps(doc))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    for key in ("domain", "exponents", "ladder"):
        if key not in doc:
            raise ConfigError(f"missing section {key!r}")
    try:
        dd = doc["domain"]
        if dd.get("kind") == "custom":
            raise ConfigError("custom domains cannot be described in a config file")
        domain = DomainSpec.from_dict(dd)
        coeff = Coefficient.from_dict(doc.get("coefficient", {"kind": "zero"}))
        ex = doc["exponents"]
        method = doc.get("method", {})
        expo = ExponentConfig(_get(ex, "p", kind=float), _get(ex, "alpha", kind=float), domain.n,
                              theta=_get(method, "theta", 2.0, float), eps=_get(method, "eps", 0.5, float),
                              delta=_get(method, "delta", None, float),
                              nu_margin=_get(method, "nu_margin", 1.0, float))
    except ConfigError:
        raise
    except (PreconditionError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid domain/coefficient/exponents: {exc}") from exc
    lad = doc["ladder"]
    if rungs is not None:
        lad["rungs"] = int(rungs)
    r_min, r_max = _get(lad, "r_min", kind=float), _get(lad, "r_max", kind=float)
    n_rungs = _get(lad, "rungs", kind=int)
    if None in (r_min, r_max, n_rungs):
        raise ConfigError("ladder needs r_min, r_max and rungs")
    if not (0 < r_min < r_max < domain.R):
        raise ConfigError(f"ladder must lie inside (0, R) with R={domain.R}")
    if n_rungs < 2:
        raise ConfigError("ladder needs at least two rungs")
    ladder = log_ladder(r_min, r_max, n_rungs)
    theorems = tuple(doc.get("theorems", []))
    for tid in theorems:
        if tid not in THEOREMS:
            raise ConfigError(f"unknown theorem id {tid!r}")
        try:
            check_regime(THEOREMS[tid], expo.p, expo.alpha)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from None
    if len(set(theorems)) != len(theorems):
        raise ConfigError("theorem ids must be distinct")
    method = doc.get("method", {})
    k = tuple(float(x) for x in method.get("k", [1.0]))
    if any(THEOREMS[t].family == "critical" for t in theorems) and (not k or min(k) <= 0):
        raise ConfigError("critical-family estimates need a non-empty grid of k > 0")
    C = float(method.get("C", 1.0))
    if not C > 0:
        raise ConfigError("C must be positive")
    extra = tuple(doc.get("profiles", []))
    for name in extra:
        if name not in PROFILE_NAMES:
            raise ConfigError(f"unknown profile {name!r}; known: {PROFILE_NAMES}")
    pde = doc.get("pde")
    if pde is not None:
        if domain.n != 2:
            raise ConfigError("PDE solves need a planar domain (n = 2)")
        if not _get(pde, "h", 0.0, float) > 0:
            raise ConfigError("pde.h must be positive")
        if pde.get("estimator", "trace") not in ("trace", "band"):
            raise ConfigError("pde.estimator must be 'trace' or 'band'")
    catalog = doc.get("catalog")
    if catalog is not None:
        try:
            f_catalog(catalog["example"], catalog.get("params", {}))
        except (KeyError, PreconditionError) as exc:
            raise ConfigError(f"invalid catalog section: {exc}") from None
    laws = doc.get("capacity_laws")
    if laws is not None and not int(laws.get("count", 0)) > 0:
        raise ConfigError("capacity_laws.count must be positive")
    return ExperimentConfig(
        name=str(doc.get("name", "experiment")), domain=domain, coefficient=coeff, exponents=expo,
        ladder=ladder, theorems=theorems, k=k, C=C, profiles=extra,
        h_ang=float(method.get("h_ang", 0.05)), samples_per_octave=int(method.get("samples_per_octave", 8)),
        shell_m=int(method.get("shell_m", 24)), q_shortcut=bool(method.get("q_shortcut", False)),
        pde=pde, catalog=catalog, capacity_laws=laws, output=doc.get("output"), raw=doc)


def bundled_examples() -> list:
    """Names of the configs shipped with the package."""
    root = resources.files("wienerdecay") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(source: str, *, rungs: int | None = None) -> ExperimentConfig:
    """Parse a config from a file path or a bundled example name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif source in bundled_examples():
        text = (resources.files("wienerdecay") / "configs" / f"{source}.json").read_text()
    else:
        raise ConfigError(f"no config file or bundled example named {source!r}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(doc, rungs=rungs)


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    """JSON-safe copy: NaN/inf become None, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None or (isinstance(v, float) and not math.isfinite(v)) else
                    (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in row])
    return buf.getvalue()


def profiles_csv(profiles: Mapping) -> str:
    names = [n for n in PROFILE_NAMES if n in profiles]
    if not names:
        return "r\n"
    r = profiles[names[0]].r
    rows = []
    for j, rv in enumerate(r):
        rows.append([float(rv)] + [None if profiles[n].missing[j] else float(profiles[n].values[j])
                                   for n in names])
    return _csv(["r"] + names, rows)


def read_profiles_csv(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    r = np.array([float(x[0]) for x in body])
    out = {}
    for j, name in enumerate(header[1:], start=1):
        vals = np.array([float(x[j]) if x[j] else np.nan for x in body])
        out[name] = Profile(r, vals, np.isnan(vals), name)
    return out


def _report_key(tid, k):
    return tid if k is None else f"{tid}@k={k:g}"


# ---------------------------------------------------------------------------
# run


@dataclass
class RunResult:
    out: Path
    stages: dict
    summary: list

    @property
    def ok(self) -> bool:
        return all(s["status"] in ("ok", "skipped") for s in self.stages.values()) and not self.failed

    @property
    def failed(self) -> list:
        return [k for k, s in self.stages.items() if s["status"] == "failed"]


def run(config: ExperimentConfig, out: str | Path, *, seed: int = 0) -> RunResult:
    """Run every stage of ``config`` and write the bundle into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files: dict = {}
    stages: dict = {}
    state: dict = {}

    def write(name, text):
        (out / name).write_text(text)
        files[name] = hashlib.sha256(text.encode()).hexdigest()

    def stage(name, fn, wanted=True):
        if not wanted:
            stages[name] = {"status": "skipped", "reason": "not requested"}
            return
        bad = [d for d in DEPENDS[name] if stages.get(d, {}).get("status") == "failed"]
        if bad:
            stages[name] = {"status": "failed", "error": f"depends on failed stage(s) {bad}"}
            return
        try:
            fn()
            stages[name] = {"status": "ok"}
        except Exception as exc:  # captured per stage by design
            tb = traceback.extract_tb(exc.__traceback__)[-1]
            stages[name] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}",
                            "where": f"{Path(tb.filename).name}:{tb.name}"}

    cfg = config
    dom, ex, lad = cfg.domain, cfg.exponents, cfg.ladder

    def geometry():
        check_standing_assumption(dom, list(lad))
        write("domain.json", dump_json(dom.to_dict()))

    def laws():
        inst = random_law_instances(int(cfg.capacity_laws["count"]), seed=seed, n=dom.n)
        rep = check_capacity_laws(inst)
        write("capacity_laws.json", dump_json({"seed": seed, "passed": rep.passed, "failures": rep.failures}))
        if not rep.passed:
            raise RefusedError(f"{len(rep.failures)} capacity-law checks failed")

    state["shell_caps"] = {}

    def profiles():
        prof = {}
        need = cfg.needed_profiles
        caps = state["shell_caps"]
        if "Lambda" in need:
            solver = SectionSolver(dom, ex.p, cfg.h_ang)
            prof["Lambda"] = lambda_profile(dom, ex.p, ex.theta, lad, h_ang=cfg.h_ang,
                                            per_octave=cfg.samples_per_octave, solver=solver)
            rows = [[row["t"], row["lambda_min"], row["nodes"], row["iterations"], row["residual"]]
                    for row in sorted(solver.log, key=lambda d: d["t"])]
            write("eigen_log.csv", _csv(["t", "lambda_min", "nodes", "iterations", "residual"], rows))
        if "Lambda_capacity" in need or "Lambda_variant" in need:
            prof["Lambda_capacity"] = capacity_lambda(dom, ex, lad, m=cfg.shell_m, shell_caps=caps)
        if "Lambda_variant" in need:
            log = []
            prof["Lambda_variant"] = lambda_capacity_variant(dom, ex, lad, m=cfg.shell_m, shell_caps=caps, log=log)
            write("mu_log.csv", _csv(["r", "inf_mu_p", "capacity_term"],
                                     [[d["r"], d["inf_mu_p"], d["capacity_term"]] for d in log]))
        if caps:
            write("capacity_log.csv", _csv(["r", "shell_complement_capacity"],
                                           [[r, c] for r, c in sorted(caps.items())]))
        if "D" in need or "q" in need:
            cache = ShellCache(dom, ex.theta, ex.eps, ex.p)
            if "D" in need:
                prof["D"] = d_profile(dom, ex, lad, cache=cache)
            if "q" in need:
                prof["q"] = q_profile(dom, cfg.coefficient, ex, lad, cache=cache, shortcut=cfg.q_shortcut)
            rows = [[d["r"], d["diam_eps"], d["status"], d["evaluations"], d["grid_h"]] for d in cache.log_rows()]
            if rows:
                write("diam_log.csv", _csv(["r", "diam_eps", "status", "evaluations", "grid_h"], rows))
        state["profiles"] = prof
        write("profiles.csv", profiles_csv(prof))

    def cone():
        res = cone_condition(dom, ex.theta, ex.p, lad, m=cfg.shell_m, capacities=state["shell_caps"])
        state["cone"] = res
        write("cone.json", dump_json(res.to_dict()))

    def estimates():
        prof = state["profiles"]
        reports, divs = {}, {}
        for tid in cfg.theorems:
            spec = THEOREMS[tid]
            for k in (cfg.k if spec.family == "critical" else (None,)):
                key = _report_key(tid, k)
                profs = {"q": prof["q"]}
                if spec.formula == "diam":
                    profs["D"] = prof["D"]
                else:
                    profs["Lambda"] = prof[{"spectral": "Lambda", "variant": "Lambda_variant",
                                            "capacity": "Lambda_capacity"}[spec.lambda_kind]]
                div = divergence_test(tid, profs, dom.R, p=ex.p, alpha=ex.alpha, k=k)
                divs[key] = div
                reports[key] = (tid, k, profs, bound_curve(tid, profs, 1.0, cfg.C, k, lad, R=dom.R, p=ex.p,
                                                            alpha=ex.alpha, cone=state.get("cone"),
                                                            divergence=div))
        state["reports"] = reports
        _write_reports(reports)

    def _write_reports(reports):
        write("estimates.json", dump_json({key: rep.to_dict() for key, (_, _, _, rep) in sorted(reports.items())}))
        for key, (_, _, _, rep) in sorted(reports.items()):
            if not rep.refused:
                write(f"bound_{key.replace('@k=', '_k')}.csv", rep.to_csv(state.get("M")))

    def pde():
        p = cfg.pde
        inst = ProblemInstance(dom, ex.p, ex.alpha, cfg.coefficient, rho=float(p.get("rho", 0.0)))
        sol = solve(inst, float(p["h"]), tol=float(p.get("tol", 1e-8)), max_iter=int(p.get("max_iter", 500)))
        rr = np.concatenate([lad, [dom.R]])
        meas = measure_M(sol, rr, method=p.get("estimator", "trace"))
        state["M"] = meas.profile
        state["measurement"] = meas
        write("measurement.csv", meas.profile.to_csv())
        write("solve.json", dump_json({"h": sol.h, "residual": sol.residual, "iterations": sol.iterations,
                                       "residual_history": sol.residual_history, **meas.to_dict()}))
        if p.get("dump_solution"):
            write("solution.csv", sol.to_csv())

    def verify():
        meas = state["measurement"]
        M = meas.profile
        M_R = float(M.values[-1])
        r_cal = calibration_radius(lad, dom.R)
        j = int(np.flatnonzero(np.isclose(M.r, r_cal, rtol=1e-12))[0])
        verdicts = {}
        for key, (tid, k, profs, rep) in sorted(state["reports"].items()):
            if rep.refused:
                verdicts[key] = {"passed": None, "reason": rep.reason}
                continue
            cal = bound_curve(tid, profs, M_R, None, k, lad, R=dom.R, p=ex.p, alpha=ex.alpha,
                              cone=state.get("cone"), divergence=rep.divergence,
                              calibration=(r_cal, float(M.values[j])))
            state["reports"][key] = (tid, k, profs, cal)
            if cal.refused:
                verdicts[key] = {"passed": None, "reason": cal.reason}
                continue
            verdicts[key] = verify_bound(meas, cal).to_dict()
        state["verdicts"] = verdicts
        _write_reports(state["reports"])
        write("verification.json", dump_json(verdicts))

    stage("geometry", geometry)
    stage("capacity_laws", laws, cfg.capacity_laws is not None)
    stage("profiles", profiles)
    stage("cone", cone, cfg.needs_cone)
    stage("estimates", estimates, bool(cfg.theorems))
    stage("pde", pde, cfg.pde is not None)
    stage("verify", verify, cfg.pde is not None and bool(cfg.theorems)
          and stages["pde"]["status"] != "skipped")

    summary = _summary(cfg, state, stages)
    write("summary.json", dump_json(summary))
    write("summary.csv", _csv(list(SUMMARY_COLUMNS), [[row.get(c) for c in SUMMARY_COLUMNS] for row in summary]))
    missing = [k for k, s in stages.items() if s["status"] == "failed"]
    manifest = {"schema_version": SCHEMA_VERSION, "package_version": __version__, "name": cfg.name,
                "seed": seed, "config": cfg.normalized(), "stages": stages, "missing_stages": missing,
                "files": dict(sorted(files.items()))}
    (out / "manifest.json").write_text(dump_json(manifest))
    return RunResult(out, stages, summary)


SUMMARY_COLUMNS = ("estimate", "theorem", "k", "regime", "divergence", "tail", "tail_slope", "verdict",
                   "dominance", "first_violation", "C", "measured_slope", "bound_slope", "catalog_branch",
                   "catalog_slope", "reason")


def catalog_slope(report, f) -> float | None:
    """Log-log slope of the bound exponent ∫_r^R integrand against the catalog f(r).

    1 means the integral scales like the closed form; only rungs in the lower
    half of the ladder with f > 0 and a positive integral contribute.
    """
    r = np.asarray(report.r)
    I = np.asarray(report.integral)
    fv = np.asarray(f(r), float)
    sel = (r <= np.sqrt(r[0] * r[-1])) & np.isfinite(fv) & (fv > 0) & np.isfinite(I) & (I > 0)
    if sel.sum() < 3:
        return None
    return float(np.polyfit(np.log(fv[sel]), np.log(I[sel]), 1)[0])


def _summary(cfg, state, stages) -> list:
    entry = None
    if cfg.catalog is not None:
        entry = f_catalog(cfg.catalog["example"], cfg.catalog.get("params", {}))
    rows = []
    reports = state.get("reports", {})
    verdicts = state.get("verdicts", {})
    for tid in cfg.theorems:
        spec = THEOREMS[tid]
        for k in (cfg.k if spec.family == "critical" else (None,)):
            key = _report_key(tid, k)
            row = {"estimate": key, "theorem": tid, "k": k, "regime": spec.family}
            if key not in reports:
                row.update(verdict="missing", reason=f"stage failed: {stages.get('estimates', {}).get('error', '')}")
                rows.append(row)
                continue
            rep = reports[key][3]
            div = rep.divergence
            row.update(divergence=div.status if div else None, tail=div.tail if div else None,
                       tail_slope=div.slope if div else None, verdict=rep.verdict, C=rep.C, reason=rep.reason)
            v = verdicts.get(key)
            if v is None:
                row["dominance"] = "not measured"
            elif v.get("passed") is None:
                row["dominance"] = "refused"
            else:
                row.update(dominance="passed" if v["passed"] else "failed", first_violation=v["first_violation"],
                           measured_slope=v["measured_slope"], bound_slope=v["bound_slope"])
            if entry is not None:
                row["catalog_branch"] = entry.branch
                if entry.guarantee and not rep.refused:
                    row["catalog_slope"] = catalog_slope(rep, entry.f)
            rows.append(row)
    if entry is not None:
        cat = {"estimate": "catalog", "verdict": "guarantee" if entry.guarantee else "no guarantee",
               "catalog_branch": entry.branch, "reason": entry.note}
        params = dict(cfg.catalog.get("params", {}))
        params.setdefault("n", cfg.domain.n)
        try:
            lit = literature_threshold(cfg.catalog["example"], params)
            cat["reason"] = (f"literature threshold {lit['literature_threshold']:.6g} (strict) vs "
                             f"present {lit['present_threshold']:.6g}")
        except Exception as exc:  # reported, never fatal
            cat["reason"] = f"literature comparison unavailable: {exc}"
        rows.append(cat)
    return rows


# ---------------------------------------------------------------------------
# compare


def _load_bundle(path: Path) -> dict:
    path = Path(path)
    if not (path / "manifest.json").is_file():
        raise PreconditionError(f"{path} is not a bundle (no manifest.json)")
    b = {"manifest": json.loads((path / "manifest.json").read_text())}
    if (path / "profiles.csv").is_file():
        b["profiles"] = read_profiles_csv((path / "profiles.csv").read_text())
    if (path / "estimates.json").is_file():
        b["estimates"] = json.loads((path / "estimates.json").read_text())
    if (path / "measurement.csv").is_file():
        rows = list(csv.DictReader(io.StringIO((path / "measurement.csv").read_text())))
        b["M"] = {round(float(row["r"]), 14): float(row["value"]) for row in rows if row["value"]}
    return b


def _ratio(a, b):
    if a is None or b is None or not (math.isfinite(a) and math.isfinite(b)):
        return None
    if a == 0:
        return 1.0 if b == 0 else None
    return b / a


def compare(bundle_a: str | Path, bundle_b: str | Path) -> tuple[list, list]:
    """Rung-wise ratios B/A of profiles, bound curves and measurements.

    Returns (header, rows).  Bundles must share their ladder; otherwise
    :class:`RefusedError`.
    """
    A, B = _load_bundle(bundle_a), _load_bundle(bundle_b)
    ra = A["manifest"]["config"]["ladder"]
    rb = B["manifest"]["config"]["ladder"]
    la = log_ladder(ra["r_min"], ra["r_max"], ra["rungs"])
    lb = log_ladder(rb["r_min"], rb["r_max"], rb["rungs"])
    if la.shape != lb.shape or not np.allclose(la, lb, rtol=1e-12, atol=0):
        raise RefusedError("bundles do not share a ladder")
    cols, series = [], []
    for name in PROFILE_NAMES:
        pa, pb = A.get("profiles", {}).get(name), B.get("profiles", {}).get(name)
        if pa is not None and pb is not None:
            cols.append(name)
            series.append([_ratio(None if ma else float(va), None if mb else float(vb))
                           for va, ma, vb, mb in zip(pa.values, pa.missing, pb.values, pb.missing)])
    for key in sorted(set(A.get("estimates", {})) & set(B.get("estimates", {}))):
        ea, eb = A["estimates"][key], B["estimates"][key]
        if ea["refused"] or eb["refused"]:
            continue
        cols.append(f"bound:{key}")
        series.append([_ratio(x, y) for x, y in zip(ea["bound"], eb["bound"])])
    if "M" in A and "M" in B:
        cols.append("M")
        series.append([_ratio(A["M"].get(round(float(r), 14)), B["M"].get(round(float(r), 14))) for r in la])
    rows = [[float(r)] + [s[j] for s in series] for j, r in enumerate(la)]
    return ["r"] + cols, rows


def write_compare(header, rows) -> str:
    return _csv(header, rows)
