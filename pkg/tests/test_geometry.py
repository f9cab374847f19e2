import math

import numpy as np
import pytest
from scipy import ndimage

from wienerdecay.errors import PreconditionError, StandingAssumptionError
from wienerdecay.geometry import (DomainSpec, Shell, fitted_shell_mesh, lattice_grid, make_domain, shell_indicator,
                                  shell_mesh, sphere_area, sphere_section_mesh)


def test_indicator_spot_values(sector, cusp, cone2, cone3):
    assert sector.indicator(np.array([[1.0, 0.5]]))[0]
    assert not sector.indicator(np.array([[-1.0, 0.5]]))[0]
    assert not cusp.indicator(np.array([[0.5, 0.3]]))[0]  # 0.3 > 0.5**2
    assert cusp.indicator(np.array([[0.5, 0.2]]))[0]
    axis = np.linspace(0.01, 1, 7)
    assert not cone2.indicator(np.stack([0 * axis, axis], -1)).any()
    assert not cone3.indicator(np.stack([0 * axis, 0 * axis, axis], -1)).any()
    assert cone3.indicator(np.stack([0 * axis, 0 * axis, -axis], -1)).all()


@pytest.mark.parametrize("kind,params,R,n", [
    ("power_cusp", {"k1": 1.0, "s": 1.0}, 1.0, 2),
    ("power_cusp", {"k1": 0.0, "s": 2.0}, 1.0, 2),
    ("cone_complement", {"k1": -1.0}, 1.0, 3),
    ("cone_complement", {"k1": 1.0}, 0.0, 3),
    ("sector", {"omega": 7.0}, 1.0, 2),
    ("sector", {"omega": 1.0}, 1.0, 3),
    ("annulus", {}, 1.0, 1),
    ("nonsense", {}, 1.0, 2),
])
def test_make_domain_rejects(kind, params, R, n):
    with pytest.raises(PreconditionError):
        make_domain(kind, params, R, n)


def test_domain_json_roundtrip(cusp):
    again = DomainSpec.from_json(cusp.to_json())
    assert again.to_dict() == cusp.to_dict()
    pts = np.random.default_rng(1).uniform(-1, 1, (200, 2))
    assert np.array_equal(again.indicator(pts), cusp.indicator(pts))


def test_custom_domain_not_serialisable():
    dom = make_domain("custom", {}, 1.0, 2, oracle=lambda x: x[..., 0] > 0)
    with pytest.raises(PreconditionError):
        dom.to_dict()


def test_empty_section_is_hard_error():
    dom = make_domain("custom", {}, 1.0, 2, oracle=lambda x: np.zeros(x.shape[:-1], bool), check=False)
    with pytest.raises(StandingAssumptionError):
        sphere_section_mesh(dom, 0.5, 0.1)


def test_annulus_shell_node_count(annulus2):
    g = shell_mesh(annulus2, 1.0, 2.0, 0.1)
    area = g.inside.sum() * g.cell_volume
    assert area == pytest.approx(math.pi * (4 - 1), rel=0.01)


def test_shell_rejects_degenerate():
    with pytest.raises(PreconditionError):
        Shell(1.0, 1.0)
    with pytest.raises(PreconditionError):
        shell_mesh(make_domain("annulus", {}, 2.0, 2), 1.0, 1.0, 0.1)


def test_cusp_shell_near_origin_nonempty(cusp):
    assert not Shell(1e-3, 2e-3).is_empty(cusp)


def test_empty_shell_gives_flagged_grid(sector):
    dom = make_domain("custom", {}, 1.0, 2, oracle=lambda x: np.linalg.norm(x, axis=-1) > 5, check=False)
    assert shell_mesh(dom, 0.5, 1.0, 0.1).empty


def test_lattice_classification_is_refinement_stable(cusp):
    pred = shell_indicator(cusp, 0.2, 0.8)
    coarse = lattice_grid([-1, -1], [1, 1], 1 / 16, pred)
    fine = lattice_grid([-1, -1], [1, 1], 1 / 32, pred)
    assert np.array_equal(coarse.inside, fine.inside[::2, ::2])


def test_fitted_shell_mesh_resolves_thin_sections(cusp):
    g = fitted_shell_mesh(cusp, 0.01, 0.04)
    assert not g.empty
    depth = ndimage.distance_transform_edt(np.pad(g.inside, 1))
    assert depth.max() >= 4


@pytest.mark.parametrize("n", [2, 3])
def test_full_sphere_quadrature(n, annulus2, annulus3):
    dom = annulus2 if n == 2 else annulus3
    for r in (0.5, 1.0, 2.0):
        mesh = sphere_section_mesh(dom, r, 0.05)
        assert mesh.total_measure() == pytest.approx(sphere_area(n) * r ** (n - 1), rel=1e-3)
        assert not mesh.has_dirichlet_boundary
        assert not mesh.boundary.any()


def test_sector_arc_length(sector):
    errs = []
    for h in (0.1, 0.05, 0.025, 0.0125):
        mesh = sphere_section_mesh(sector, 1.0, h)
        err = abs(mesh.measure() - math.pi / 2)
        assert err <= h
        errs.append(err)
    # first-order convergence: the error bound shrinks with h
    assert errs[-1] < errs[0]


def test_cone_complement_section_area(cone3):
    mesh = sphere_section_mesh(cone3, 1.0, 0.02)
    exact = 4 * math.pi - 2 * math.pi * (1 - math.cos(math.pi / 4))
    assert mesh.measure() < 4 * math.pi
    assert mesh.measure() == pytest.approx(exact, rel=0.02)
    assert mesh.boundary.any()
