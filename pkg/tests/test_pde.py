import math

import numpy as np
import pytest

from wienerdecay.errors import ConvergenceError, PreconditionError, RefusedError
from wienerdecay.estimates import EstimateReport, bound_curve
from wienerdecay.geometry import lattice_grid, make_domain
from wienerdecay.pde import (ProblemInstance, SolutionField, measure_M, solve, verify_bound)
from wienerdecay.profiles import Coefficient, Profile


def _exact(sol):
    X = sol.grid.coords()
    r = np.hypot(X[..., 0], X[..., 1])
    ang = np.mod(np.arctan2(X[..., 1], X[..., 0]), 2 * math.pi)
    return np.where(sol.grid.inside, r**2 * np.sin(2 * np.clip(ang, 0, math.pi / 2)), 0.0)


def test_sector_matches_harmonic_solution_and_converges(sector):
    errs = []
    for N in (32, 64, 128):
        sol = solve(ProblemInstance(sector), 1.0 / N)
        errs.append(np.abs(sol.u - _exact(sol))[sol.free].max())
    assert errs[-1] < 0.02
    # at least first order under halving h
    assert errs[1] < 0.75 * errs[0] and errs[2] < 0.75 * errs[1]


def test_zero_data_gives_zero_solution(sector):
    sol = solve(ProblemInstance(sector, g=lambda x: np.zeros(x.shape[:-1])), 1 / 32)
    assert np.all(sol.u == 0)


def test_maximum_principle_and_boundary_values(cone2):
    sol = solve(ProblemInstance(cone2), 1 / 48)
    g_max = 1.0
    assert sol.u[sol.free].min() >= -1e-12 and sol.u[sol.free].max() <= g_max + 1e-12
    assert np.all(sol.u[~sol.grid.inside] == 0)


def test_gradient_term_raises_solution_and_stays_bounded(sector):
    base = solve(ProblemInstance(sector, p=2.0, alpha=1.5), 1 / 48)
    pert = solve(ProblemInstance(sector, p=2.0, alpha=1.5, b=Coefficient("power_law", 0.5, 0.0)), 1 / 48)
    assert np.all(pert.u >= base.u - 1e-9)
    assert pert.u.max() <= 1.0 + 1e-9
    assert pert.iterations > 1 and pert.residual < 1e-6


def test_nonlinear_p_and_subsolution_mode(sector):
    sol = solve(ProblemInstance(sector, p=3.0, alpha=2.5), 1 / 32)
    assert sol.u[sol.free].min() >= -1e-12 and sol.u.max() <= 1 + 1e-9
    forced = solve(ProblemInstance(sector, p=2.0, alpha=1.5, rho=1.0), 1 / 32)
    lin = solve(ProblemInstance(sector), 1 / 32)
    # div Du = ρ > 0 makes u a subsolution: below the harmonic solution
    assert np.all(forced.u <= lin.u + 1e-9)
    with pytest.raises(ConvergenceError) as err:
        solve(ProblemInstance(sector, p=3.0, alpha=2.5), 1 / 32, max_iter=2)
    assert len(err.value.history) == 2


def test_planar_only():
    with pytest.raises(PreconditionError):
        ProblemInstance(make_domain("cone_complement", {"k1": 1.0}, 1.0, 3))


def test_measured_sector_profile(sector):
    sol = solve(ProblemInstance(sector), 1 / 128)
    lad = np.geomspace(0.05, 1.0, 9)
    meas = measure_M(sol, lad)
    assert np.allclose(meas.profile.values, lad**2, rtol=0.02)
    assert meas.shape == "increasing" and meas.turning_radius is None
    assert meas.fitted_exponent == pytest.approx(2.0, rel=0.05)
    band = measure_M(sol, lad, method="band")
    # the band estimator carries an O(h/r) bias; the trace estimator does not
    assert np.allclose(band.profile.values, lad**2, rtol=0.05)
    assert np.abs(meas.profile.values / lad**2 - 1).max() < np.abs(band.profile.values / lad**2 - 1).max()
    assert sol.to_csv().splitlines()[0] == "x,y,u"


def test_constant_field_has_no_turning_radius(annulus2):
    grid = lattice_grid([-4, -4], [4, 4], 0.125, annulus2.indicator)
    field = SolutionField(grid, np.ones(grid.shape), grid.inside.copy(), 0.0, 0)
    meas = measure_M(field, np.geomspace(0.5, 3.0, 6))
    assert meas.shape == "constant" and meas.turning_radius is None


def test_cusp_profile_decreases_toward_vertex(cusp):
    sol = solve(ProblemInstance(cusp), 1 / 256)
    lad = np.geomspace(0.25, 0.9, 6)
    M = measure_M(sol, lad).profile
    assert M.complete and np.all(np.diff(M.values) > 0)


def _sector_report(r, M_R, r_cal, M_cal, refused=False):
    prof = {"Lambda": Profile(r, r**-2.0), "q": Profile(r, 0 * r)}
    if refused:
        return bound_curve("T2.2", prof, M_R, 1.0, None, r, R=1.0, p=2.0, alpha=2.0, override=True)
    return bound_curve("C2.1", prof, M_R, None, None, r, R=1.0, p=2.0, alpha=2.0, override=True,
                       calibration=(r_cal, M_cal))


def test_verify_bound_paths(sector):
    r = 2.0 ** (-np.arange(24, -1, -1) / 4)
    zero = SolutionField(lattice_grid([-1, -1], [1, 1], 1 / 32, sector.indicator), np.zeros((65, 65)),
                         np.zeros((65, 65), bool), 0.0, 0)
    meas = measure_M(zero, r)
    rep = _sector_report(r, 1.0, r[r < 0.5].max(), 0.1)
    assert verify_bound(meas, rep).passed
    with pytest.raises(RefusedError):
        verify_bound(meas, _sector_report(r, 1.0, None, None, refused=True))
    # a measurement above the bound fails at its first violating rung
    bad = Profile(r, np.ones_like(r))
    from wienerdecay.pde import DecayMeasurement
    v = verify_bound(DecayMeasurement(bad, None, "constant"), rep)
    assert not v.passed and v.first_violation == pytest.approx(r[0])
