import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wienerdecay.capacity import ConeConditionResult
from wienerdecay.errors import DataError, LawViolation, PreconditionError, RegimeError
from wienerdecay.estimates import (INTEGRAND_IDS, THEOREMS, bound_curve, calibration_radius, capacity_lambda,
                                   classify_tail, divergence_test, f_catalog, integrand, ladder_integral,
                                   lambda_capacity_variant, literature_threshold)
from wienerdecay.experiment import catalog_slope
from wienerdecay.profiles import ExponentConfig, Profile, log_ladder

POS = ConeConditionResult([0.1], [1.0], 1.0, 1.0, 1e-3, "positive")
DEG = ConeConditionResult([0.1], [0.0], 0.0, 1.0, 1e-3, "degenerate")


def _alpha(tid, p=2.0):
    return 1.5 if THEOREMS[tid].family == "superlinear" else p - 1


def test_integrand_formulas():
    t, L, q, D, p = 0.5, 3.0, 0.25, 7.0, 2.0
    a = 1.5
    div = 1 + q ** (1 / (a - p + 1))
    m = min(t * L, L ** 0.5)
    assert integrand("T2.1", L, q, D, t, p=p, alpha=a) == pytest.approx(m / div)
    assert integrand("T2.2", L, q, D, t, p=p, alpha=a) == pytest.approx(L ** 0.5 / div)
    assert integrand("T2.3", L, q, D, t, p=p, alpha=a) == pytest.approx(D / div)
    assert integrand("C2.1", L, q, D, t, p=p, alpha=a) == pytest.approx(t * L / div)
    k = 2.0
    e = math.exp(-k * q)
    assert integrand("T2.6", L, q, D, t, p=p, alpha=1.0, k=k) == pytest.approx(e * m)
    assert integrand("T2.7", L, q, D, t, p=p, alpha=1.0, k=k) == pytest.approx(e * L ** 0.5)
    assert integrand("T2.8", L, q, D, t, p=p, alpha=1.0, k=k) == pytest.approx(e * D)
    assert integrand("C2.2", L, q, D, t, p=p, alpha=1.0, k=k) == pytest.approx(e * t * L)
    # the Λ-variant estimates share the formulas
    assert integrand("T2.4", L, q, D, t, p=p, alpha=a) == integrand("T2.1", L, q, D, t, p=p, alpha=a)
    assert integrand("T2.10", L, q, D, t, p=p, alpha=1.0, k=k) == integrand("T2.7", L, q, D, t, p=p, alpha=1.0, k=k)


def test_integrand_with_zero_q_is_the_minimum():
    t = np.geomspace(0.01, 1, 5)
    lam = lambda s: s**-3.0
    f = integrand("T2.1", lam, 0.0, None, t, p=3.0, alpha=2.5)
    assert np.allclose(f, np.minimum((t * t**-3.0) ** 0.5, t**-1.0))


def test_regime_gating_and_data_errors():
    with pytest.raises(RegimeError):
        integrand("T2.1", 1.0, 0.0, None, 0.5, p=2.0, alpha=1.0)
    with pytest.raises(RegimeError):
        integrand("T2.6", 1.0, 0.0, None, 0.5, p=2.0, alpha=1.5, k=1.0)
    with pytest.raises(DataError):
        integrand("T2.2", -1.0, 0.0, None, 0.5, p=2.0, alpha=1.5)
    with pytest.raises(DataError):
        integrand("T2.3", None, 0.0, None, 0.5, p=2.0, alpha=1.5)
    with pytest.raises(PreconditionError):
        integrand("T2.8", None, 0.0, 1.0, 0.5, p=2.0, alpha=1.0)
    with pytest.raises(PreconditionError):
        integrand("T9.9", 1.0, 0.0, None, 0.5, p=2.0, alpha=1.5)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0.0, 1e4), st.floats(0.0, 1e3), st.floats(1.2, 4.0), st.floats(0.01, 0.99))
def test_integrand_dominance(t, lam, q, p, frac):
    a = p - 1 + frac
    f1 = integrand("T2.1", lam, q, None, t, p=p, alpha=a)
    assert f1 <= integrand("C2.1", lam, q, None, t, p=p, alpha=a) * (1 + 1e-12)
    assert f1 <= integrand("T2.2", lam, q, None, t, p=p, alpha=a) * (1 + 1e-12)


def test_power_lambda_gives_logarithmic_integral():
    r = log_ladder(1e-6, 1.0, 61)
    lam = Profile(r, r**-2.0)
    q = Profile(r, 0.5 + 0.0 * r)
    rep = bound_curve("T2.1", {"Lambda": lam, "q": q}, 1.0, 1.0, None, r, R=1.0, p=2.0, alpha=1.5, override=True)
    slope = np.polyfit(np.log(np.log(1 / r[:-10])), np.log(rep.integral[:-10]), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.01)


def test_diameter_profile_gives_power_integral():
    r = log_ladder(1e-4, 1.0, 41)
    D = Profile(r, r**-2.0)
    q = Profile(r, 0.3 + 0.0 * r)
    rep = bound_curve("T2.8", {"D": D, "q": q}, 1.0, 1.0, 1.0, r, R=1.0, p=2.0, alpha=1.0, cone=POS,
                      override=True)
    slope = np.polyfit(np.log(r[:20]), np.log(rep.integral[:20]), 1)[0]
    assert slope == pytest.approx(1 - 2.0, rel=0.02)


def _log_case(sigma, p=2.0, alpha=1.5, r_min=1e-40):
    """Logarithmic model profiles: Λ = t^(-p), q = log(1/t)^σ."""
    r = log_ladder(r_min, 0.5, 121)
    return {"Lambda": Profile(r, r**-p), "q": Profile(r, np.log(1 / r) ** sigma)}


def test_divergence_power_tail():
    res = divergence_test("T2.1", _log_case(0.0), 1.0, p=2.0, alpha=1.5)
    assert res.diverges and res.level == 1


def test_divergence_sigma_branches():
    d = 0.5  # α - p + 1
    assert divergence_test("T2.1", _log_case(-0.5), 1.0, p=2.0, alpha=1.5).status == "divergent"
    crit = divergence_test("T2.1", _log_case(d), 1.0, p=2.0, alpha=1.5)
    assert crit.status == "divergent" and crit.tail == "log-log"
    assert divergence_test("T2.1", _log_case(2 * d), 1.0, p=2.0, alpha=1.5).status == "convergent"


def test_divergence_trivial_and_unresolved():
    r = log_ladder(1e-3, 0.5, 10)
    zero = {"Lambda": Profile(r, 0 * r), "q": Profile(r, 0 * r)}
    assert divergence_test("T2.1", zero, 1.0, p=2.0, alpha=1.5).status == "convergent"
    few = {"Lambda": Profile(r[:3], r[:3] ** -2), "q": Profile(r[:3], 0 * r[:3])}
    assert divergence_test("T2.1", few, 1.0, p=2.0, alpha=1.5).status == "unresolved"
    assert classify_tail(r, r**-0.5, 1.0).status == "convergent"


def test_bound_curve_refusals_and_override():
    r = log_ladder(1e-3, 0.5, 10)
    prof = {"Lambda": Profile(r, r**-2.0), "q": Profile(r, 0 * r)}
    rep = bound_curve("T2.2", prof, 1.0, 1.0, None, r, R=1.0, p=2.0, alpha=1.5, override=True)
    assert rep.refused and "cone" in rep.reason
    rep = bound_curve("T2.2", prof, 1.0, 1.0, None, r, R=1.0, p=2.0, alpha=1.5, cone=DEG, override=True)
    assert rep.refused
    conv = divergence_test("T2.1", _log_case(1.0), 1.0, p=2.0, alpha=1.5)
    rep = bound_curve("T2.1", prof, 1.0, 1.0, None, r, R=1.0, p=2.0, alpha=1.5, divergence=conv)
    assert rep.refused and "convergent" in rep.reason
    rep = bound_curve("T2.1", prof, 1.0, 1.0, None, r, R=1.0, p=2.0, alpha=1.5)
    assert rep.refused and "not tested" in rep.reason
    ok = bound_curve("T2.2", prof, 1.0, 1.0, None, r, R=1.0, p=2.0, alpha=1.5, cone=POS, override=True)
    assert not ok.refused and ok.verdict == "bound"


def test_bound_curve_top_rung_and_calibration():
    r = np.geomspace(1 / 64, 1.0, 25)
    prof = {"Lambda": Profile(r, r**-2.0), "q": Profile(r, 0 * r)}
    rep = bound_curve("C2.1", prof, 0.7, 2.0, None, r, R=1.0, p=2.0, alpha=2.0, override=True)
    assert rep.bound[-1] == pytest.approx(0.7, rel=1e-15)
    rc = calibration_radius(r, 1.0)
    assert rc < 0.5 and rc == r[r < 0.5].max()
    cal = bound_curve("C2.1", prof, 0.7, None, None, r, R=1.0, p=2.0, alpha=2.0, override=True,
                      calibration=(rc, 0.7 * rc**2))
    assert cal.r_cal == rc and cal.C == pytest.approx(2.0)
    assert np.allclose(cal.bound, 0.7 * r**2, rtol=1e-12)
    assert set(cal.to_dict()) >= {"bound", "integral", "C", "verdict"}
    assert cal.to_csv().splitlines()[0] == "r,integrand,integral,M_bound,M_measured"


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.0, 1e3), min_size=8, max_size=8), st.lists(st.floats(0.0, 10.0), min_size=8, max_size=8),
       st.sampled_from(["T2.1", "T2.2", "C2.1", "T2.6", "T2.7", "C2.2"]), st.floats(0.1, 5.0))
def test_bound_curve_monotone(lam, q, tid, C):
    r = log_ladder(1e-3, 0.9, 8)
    alpha = _alpha(tid)
    prof = {"Lambda": Profile(r, np.array(lam)), "q": Profile(r, np.array(q))}
    rep = bound_curve(tid, prof, 1.0, C, 1.0, r, R=1.0, p=2.0, alpha=alpha, cone=POS, override=True)
    assert np.all(np.diff(rep.bound) >= -1e-15)
    assert np.all(rep.bound <= 1.0)


def test_ladder_integral_exact_for_reciprocal():
    t = np.geomspace(1e-3, 1.0, 7)
    assert np.allclose(ladder_integral(t, 1 / t), np.log(1 / t))


@pytest.mark.parametrize("params,branch", [
    ({"p": 2, "alpha": 1.5, "sigma": 0.0}, "log: σ <= 0"),
    ({"p": 2, "alpha": 1.5, "sigma": 0.25}, "log: 0 < σ < α-p+1"),
    ({"p": 2, "alpha": 1.5, "sigma": 0.5}, "log: σ = α-p+1"),
    ({"p": 2, "alpha": 1.5, "sigma": 0.6}, "no guarantee"),
    ({"p": 2, "alpha": 1.5, "l": -0.5}, "power: l >= α-p"),
    ({"p": 2, "alpha": 1.5, "l": -0.6}, "no guarantee"),
])
def test_catalog_example_21(params, branch):
    assert f_catalog("2.1", params).branch == branch


def test_catalog_values():
    r = 0.01
    assert f_catalog("2.1", {"p": 2, "alpha": 1.5, "sigma": 0.0}).f(r) == pytest.approx(math.log(100))
    assert f_catalog("2.1", {"p": 2, "alpha": 1.5, "sigma": 0.5}).f(r) == pytest.approx(math.log(math.log(100)))
    e = f_catalog("2.2", {"p": 2, "alpha": 1.5, "s": 2, "l": -1.0})
    assert e.branch == "s(α-p) <= l" and e.f(r) == pytest.approx(100.0)
    assert f_catalog("2.2", {"p": 2, "alpha": 1.5, "s": 2, "l": -1.5}).branch == "l = α-p+1-s"
    mid = f_catalog("2.2", {"p": 2, "alpha": 1.5, "s": 2, "l": -1.25})
    assert mid.branch == "α-p+1-s < l < s(α-p)" and mid.f(r) == pytest.approx(r ** (-0.25 / 0.5))
    assert not f_catalog("2.2", {"p": 2, "alpha": 1.5, "s": 2, "l": -2.0}).guarantee
    assert f_catalog("2.3", {"p": 2, "alpha": 1.0, "s": 3, "l": -3}).f(r) == pytest.approx(r**-2)
    assert not f_catalog("2.3", {"p": 2, "alpha": 1.5, "s": 3, "l": 0}).guarantee
    with pytest.raises(PreconditionError):
        f_catalog("2.4", {"p": 2, "alpha": 1.5})


def _model(example, params, r):
    """Model profiles of the closed-form examples on a ladder."""
    p, a = params["p"], params["alpha"]
    k2 = params.get("k2", 1.0)
    L = np.log(1 / r)
    if example == "2.1":
        sigma = params.get("sigma", 0.0)
        l = params.get("l", a - p)
        q = k2 * r ** (p - a + l) * L**sigma
        return "T2.1", {"Lambda": Profile(r, r**-p), "q": Profile(r, q)}
    s = params["s"]
    l = params.get("l", a - p + 1 - s)
    q = k2 * r ** (s * (p - a) + l) * L ** params.get("sigma", 0.0)
    return ("T2.3" if example == "2.2" else "T2.8"), {"D": Profile(r, r**-s), "q": Profile(r, q)}


CATALOG_GRID = [
    ("2.1", {"p": 2.0, "alpha": 1.5, "l": -0.5}),
    ("2.1", {"p": 2.0, "alpha": 1.5, "l": 0.3}),
    ("2.1", {"p": 3.0, "alpha": 2.5, "sigma": -1.0}),
    ("2.1", {"p": 2.0, "alpha": 1.5, "sigma": 0.25, "k2": 1e4}),
    ("2.1", {"p": 2.0, "alpha": 1.5, "sigma": 0.5}),
    ("2.2", {"p": 2.0, "alpha": 1.5, "s": 2.0, "l": 0.5}),
    ("2.2", {"p": 2.0, "alpha": 1.5, "s": 2.0, "l": -1.25, "k2": 1e4}),
    ("2.2", {"p": 2.0, "alpha": 1.5, "s": 3.0, "l": -2.5}),
    ("2.2", {"p": 2.0, "alpha": 1.5, "s": 2.0, "sigma": 0.2, "k2": 1e4}),
    ("2.3", {"p": 2.0, "alpha": 1.0, "s": 2.0, "l": 0.0}),
    ("2.3", {"p": 3.0, "alpha": 2.0, "s": 1.5, "l": -1.5}),
]


@pytest.mark.parametrize("example,params", CATALOG_GRID)
def test_catalog_consistency(example, params):
    entry = f_catalog(example, params)
    assert entry.guarantee
    log_branch = "σ" in entry.branch or entry.branch == "l = α-p+1-s" or example == "2.1"
    r = log_ladder(1e-60 if log_branch else 1e-4, 0.5, 241)
    tid, prof = _model(example, params, r)
    rep = bound_curve(tid, prof, 1.0, 1.0, 1.0, r, R=1.0, p=params["p"], alpha=params["alpha"], cone=POS,
                      override=True)
    assert catalog_slope(rep, entry.f) == pytest.approx(1.0, abs=0.1)


def test_literature_thresholds():
    lit = literature_threshold("2.3", {"n": 2, "s": 2})
    assert lit["literature_threshold"] == pytest.approx(-1.5) and lit["present_threshold"] == -2
    lit = literature_threshold("2.2", {"n": 3, "s": 2, "p": 2.0, "alpha": 1.5})
    assert lit["literature_threshold"] == pytest.approx(-2 / 3) and lit["present_threshold"] == pytest.approx(-1.5)
    lit = literature_threshold("2.1", {"p": 2.0, "alpha": 1.5})
    assert lit["literature_strict"] and not lit["present_strict"]
    with pytest.raises(LawViolation):
        # α - p = -n pushes the comparison to equality: the claimed gap closes
        literature_threshold("2.2", {"n": 2, "s": 2, "p": 3.0, "alpha": 1.0})


def test_capacity_lambda_profiles(cone2, annulus2):
    cfg = ExponentConfig(2.0, 1.5, 2)
    lad = log_ladder(0.01, 0.3, 3)
    assert np.all(capacity_lambda(annulus2, cfg, lad).values == 0)
    assert np.all(lambda_capacity_variant(annulus2, cfg, lad).values == 0)
    cap = capacity_lambda(cone2, cfg, lad)
    var = lambda_capacity_variant(cone2, cfg, lad)
    assert np.all(var.values >= cap.values)
    scaled = var.values * lad**2
    assert scaled.max() / scaled.min() < 1.5
