import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasicrack.cases import mode3_datum, slit_disk_crack, slit_disk_domain
from quasicrack.domain import DomainSpec
from quasicrack.geometry import CrackSet, Polyline
from quasicrack.mesh import triangulate
from quasicrack.solver import (
    BoundaryDatum,
    MeshMismatch,
    RegionNotSimplyConnected,
    ScalarField,
    bulk_energy,
    combine_datums,
    gradient,
    harmonic_conjugate,
    inner_product,
    residual_norm,
    scale_datum,
    solve,
    tangential_jump_max,
)


@pytest.fixture(scope="module")
def square_mesh():
    dom = DomainSpec.all_dirichlet(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))
    return dom, triangulate(dom, CrackSet((), 1), 0.2, 0.2)


def test_linear_reproduction(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: x, tag="x"))
    assert np.max(np.abs(u.nodal_values - mesh.nodes[:, 0])) <= 1e-9
    assert bulk_energy(u) == pytest.approx(1.0, abs=1e-9)


def test_constant_reproduction(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: 2.5, tag="c"))
    assert np.max(np.abs(u.nodal_values - 2.5)) <= 1e-9
    assert bulk_energy(u) <= 1e-18


def test_galerkin_residual(square_mesh):
    _, mesh = square_mesh
    g = BoundaryDatum(lambda x, y: x * x - y * y + 0.3 * x * y, tag="q")
    u = solve(mesh, g)
    assert residual_norm(u, g) <= 1e-9


def test_inner_product_cases(square_mesh):
    _, mesh = square_mesh
    ux = solve(mesh, BoundaryDatum(lambda x, y: x, tag="x"))
    uy = solve(mesh, BoundaryDatum(lambda x, y: y, tag="y"))
    gx, gy = gradient(ux), gradient(uy)
    assert inner_product(gx, gx) == pytest.approx(bulk_energy(ux), abs=1e-12)
    assert inner_product(gx, gy) == pytest.approx(0.0, abs=1e-12)
    zero = ScalarField(mesh, np.zeros(mesh.n_nodes))
    assert inner_product(gx, gradient(zero)) == 0.0


def test_mesh_mismatch_raises(square_mesh):
    dom, mesh = square_mesh
    other = triangulate(dom, CrackSet((), 1), 0.25, 0.25)
    u = solve(mesh, BoundaryDatum(lambda x, y: x, tag="x"))
    v = solve(other, BoundaryDatum(lambda x, y: x, tag="x"))
    with pytest.raises(MeshMismatch):
        inner_product(gradient(u), gradient(v))


@given(
    st.floats(-1.0, 1.0),
    st.floats(-1.0, 1.0),
    st.floats(-1.0, 1.0),
)
@settings(max_examples=15)
def test_energy_comparison_vs_interpolant(square_mesh, a, b, c):
    # the discrete minimizer never beats the interpolated datum's energy
    _, mesh = square_mesh
    g = BoundaryDatum(lambda x, y: a * x * x + b * y + c * x * y, tag="")
    u = solve(mesh, g)
    interp = ScalarField(mesh, g.sample(mesh))
    assert bulk_energy(u) <= bulk_energy(interp) + 1e-12


def test_linearity_nodewise(square_mesh):
    _, mesh = square_mesh
    g1 = BoundaryDatum(lambda x, y: x * x - y, tag="g1")
    g2 = BoundaryDatum(lambda x, y: math.sin(x) + y * y, tag="g2")
    alpha, beta = 1.7, -0.6
    combo = combine_datums(g1, g2, alpha, beta, tag="combo")
    u = solve(mesh, combo)
    u12 = alpha * solve(mesh, g1).nodal_values + beta * solve(mesh, g2).nodal_values
    assert np.max(np.abs(u.nodal_values - u12)) <= 1e-9


def test_scale_datum(square_mesh):
    _, mesh = square_mesh
    g = BoundaryDatum(lambda x, y: x + 2 * y, tag="lin")
    sg = scale_datum(g, -2.0)
    assert sg.tag != g.tag
    assert np.allclose(sg.sample(mesh), -2.0 * g.sample(mesh))


def test_mode3_convergence():
    domain = slit_disk_domain()
    crack = slit_disk_crack()
    g = mode3_datum(1.0)
    errs = []
    for h_max, h_tip in [(1 / 8, 1 / 32), (1 / 16, 1 / 64), (1 / 32, 1 / 128)]:
        mesh = triangulate(domain, crack, h_max, h_tip)
        u = solve(mesh, g)
        exact = g.sample(mesh)
        # nodal L2 error, area-lumped
        lump = np.zeros(mesh.n_nodes)
        for i in range(3):
            np.add.at(lump, mesh.triangles[:, i], mesh.areas / 3.0)
        errs.append(math.sqrt(float(lump @ (u.nodal_values - exact) ** 2)))
    assert errs[1] < errs[0] * 0.9
    assert errs[2] < errs[1] * 0.9


def test_floating_component_pinned():
    # crack separating the square: the upper half sees no Dirichlet data
    dom = DomainSpec.unit_square(dirichlet_arcs=((0, 1),))  # bottom only
    crack = CrackSet((Polyline(((0.0, 0.5), (1.0, 0.5))),), 1)
    mesh = triangulate(dom, crack, 0.1, 0.02)
    u = solve(mesh, BoundaryDatum(lambda x, y: 1.0 + x, tag="lift"))
    upper = mesh.nodes[:, 1] > 0.5 + 1e-9
    # floating upper block: constant (pinned to zero), zero gradient
    assert np.max(np.abs(u.nodal_values[upper])) <= 1e-9
    lower_boundary = [
        i for i in mesh.dirichlet_nodes if mesh.nodes[i][1] < 1e-12
    ]
    vals = u.nodal_values[lower_boundary]
    expect = 1.0 + mesh.nodes[lower_boundary, 0]
    assert np.max(np.abs(vals - expect)) <= 1e-9


def test_harmonic_conjugate_of_linear(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: x, tag="x"))
    v = harmonic_conjugate(u, (0.0, 1.0, 0.0, 1.0))
    w = v.nodal_values - (mesh.nodes[:, 1] - np.nanmean(mesh.nodes[:, 1]))
    assert np.nanmax(np.abs(w - np.nanmean(w))) <= 1e-9


def test_harmonic_conjugate_constant(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: 4.0, tag="c4"))
    v = harmonic_conjugate(u, (0.0, 1.0, 0.0, 1.0))
    assert np.nanmax(np.abs(v.nodal_values)) <= 1e-9


def test_harmonic_conjugate_face_constancy_decays():
    domain = slit_disk_domain()
    crack = slit_disk_crack()
    g = mode3_datum(1.0)
    osc = []
    for h_max, h_tip in [(1 / 8, 1 / 32), (1 / 16, 1 / 128)]:
        mesh = triangulate(domain, crack, h_max, h_tip)
        u = solve(mesh, g)
        v = harmonic_conjugate(u, (-0.9, 0.6, -0.6, 0.6))
        vals = [
            v.nodal_values[fp.plus_node]
            for fp in mesh.crack_face_pairs
            if -0.85 <= fp.position[0] <= 0.0
            and not np.isnan(v.nodal_values[fp.plus_node])
        ]
        osc.append(max(vals) - min(vals))
    assert osc[1] < osc[0] * 0.75


def test_harmonic_conjugate_region_errors(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: x, tag="x"))
    with pytest.raises(RegionNotSimplyConnected):
        harmonic_conjugate(u, (2.0, 3.0, 2.0, 3.0))  # empty region


def test_harmonic_conjugate_disconnected_region():
    # U-shaped domain; a rectangle catching both prongs but not the base
    dom = DomainSpec.all_dirichlet(
        (
            (0.0, 0.0),
            (3.0, 0.0),
            (3.0, 3.0),
            (2.0, 3.0),
            (2.0, 1.0),
            (1.0, 1.0),
            (1.0, 3.0),
            (0.0, 3.0),
        )
    )
    mesh = triangulate(dom, CrackSet((), 1), 0.3, 0.3)
    u = solve(mesh, BoundaryDatum(lambda x, y: x + y, tag="xy"))
    with pytest.raises(RegionNotSimplyConnected):
        harmonic_conjugate(u, (0.0, 3.0, 1.5, 3.0))


def test_tangential_jump_linear_exact(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: 2.0 * x - 3.0 * y, tag="l"))
    assert tangential_jump_max(u) <= 1e-8


def test_tangential_jump_decreases_under_refinement():
    # away from the crack the flux jump of the smooth part shrinks with h
    domain = slit_disk_domain()
    crack = slit_disk_crack()
    g = mode3_datum(1.0)
    jumps = []
    for h_max, h_tip in [(1 / 8, 1 / 32), (1 / 16, 1 / 64)]:
        mesh = triangulate(domain, crack, h_max, h_tip)
        jumps.append(
            tangential_jump_max(solve(mesh, g), away_from=crack, clearance=0.4)
        )
    assert jumps[1] < jumps[0]


def test_field_exports(square_mesh):
    _, mesh = square_mesh
    u = solve(mesh, BoundaryDatum(lambda x, y: x, tag="x"))
    csv = u.to_csv()
    assert csv.splitlines()[0] == "node_id,x,y,value"
    assert len(csv.splitlines()) == mesh.n_nodes + 1
    vtk = u.to_vtk("disp")
    assert "SCALARS disp double 1" in vtk
