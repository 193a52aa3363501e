import numpy as np
import pytest

from wmlab.density import DensityField
from wmlab.errors import (
    DegenerateCell,
    DegenerateInput,
    DomainError,
    InvalidTopology,
    ParseError,
)
from wmlab.generators import (
    build_wedge,
    gen_annulus,
    gen_circle,
    gen_disk,
    gen_icosphere,
    gen_wedge,
    scaled_sphere_with_analytic_fields,
)
from wmlab.mesh import (
    QUALITY_FLOOR,
    SimplicialMesh,
    linear_transform,
    radial_perturbation,
    translate,
    weighted_measure,
)
from wmlab.meshfiles import load_mesh, save_mesh
from wmlab.spaceform import AmbientSpace


def fit_order(hs, errs):
    hs, errs = np.asarray(hs), np.asarray(errs)
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


class TestGenerators:
    def test_circle_inscribed_perimeter(self):
        mesh = gen_circle(1.0, 8)
        assert len(mesh.vertices) == 8
        total = mesh.cell_measures().sum()
        assert total == pytest.approx(8 * 2 * np.sin(np.pi / 8), abs=1e-12)
        assert mesh.is_closed

    def test_circle_minimum_size(self):
        with pytest.raises(DegenerateInput):
            gen_circle(1.0, 7)

    def test_icosphere_counts(self):
        for s in range(3):
            mesh = gen_icosphere(1.0, s)
            assert len(mesh.vertices) == 10 * 4**s + 2
            assert len(mesh.cells) == 20 * 4**s
            assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-14)
            assert mesh.is_closed
            assert mesh.euler_characteristic() == 2

    def test_icosphere_oriented_outward(self):
        mesh = gen_icosphere(2.0, 2)
        p = [mesh.vertices[mesh.cells[:, i]] for i in range(3)]
        vol = np.einsum("ij,ij->", p[0], np.cross(p[1], p[2])) / 6.0
        assert vol > 0
        # enclosed volume approaches (4/3) pi R^3 from inside
        assert vol == pytest.approx(4 / 3 * np.pi * 8, rel=0.05)
        assert vol < 4 / 3 * np.pi * 8

    def test_disk_boundary_and_area(self):
        mesh = gen_disk(1.0, 4)
        assert not mesh.is_closed
        assert set(mesh.boundary_labels) == {"M"}
        assert mesh.euler_characteristic() == 1
        # boundary is the outer ring: a regular 24-gon
        loops = mesh.boundary_loops()
        assert len(loops) == 1 and len(loops[0]) == 24
        area = mesh.cell_measures().sum()
        assert area == pytest.approx(0.5 * 24 * np.sin(2 * np.pi / 24), abs=1e-12)

    def test_wedge_labels_partition(self):
        mesh = gen_wedge(1.0, np.pi / 2, 4)
        labels = set(mesh.boundary_labels)
        assert labels == {"M", "cone-face", "cutoff"}
        assert mesh.metadata["eps_vertex"] == pytest.approx(1e-3)
        # arc edges trace the unit circle
        for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
            if lab == "M":
                assert np.linalg.norm(mesh.vertices[i]) == pytest.approx(1.0, abs=1e-12)

    def test_wedge_quality_survives_small_cutoff(self):
        mesh = gen_wedge(1.0, np.pi / 2, 8, eps_vertex=1e-4)
        assert mesh.cell_quality().min() > QUALITY_FLOOR

    def test_wedge_convexity_cap(self):
        with pytest.raises(DegenerateInput):
            gen_wedge(1.0, 1.5 * np.pi, 4)
        # the raw builder accepts reflex angles for negative controls
        mesh = build_wedge(1.0, 1.5 * np.pi, 4)
        assert mesh.metadata["opening_angle"] == pytest.approx(1.5 * np.pi)

    def test_offcenter_wedge_arc(self):
        mesh = gen_wedge(1.0, np.pi / 2, 4, arc_center_offset=0.2)
        for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
            if lab == "M":
                assert np.linalg.norm(mesh.vertices[i] - [0.2, 0.0]) == pytest.approx(1.0, abs=1e-12)

    def test_annulus_two_loops(self):
        mesh = gen_annulus(0.5, 1.0, 3)
        assert len(mesh.boundary_loops()) == 2
        assert mesh.euler_characteristic() == 0

    def test_refinement_preserves_topology(self):
        for kind, euler in [("disk", 1), ("icosphere", 2)]:
            for level in range(3):
                mesh = gen_disk(1.0, 2 * 2**level) if kind == "disk" else gen_icosphere(1.0, level)
                assert mesh.euler_characteristic() == euler


class TestWeightedMeasure:
    def test_circle_length(self):
        mesh = gen_circle(1.0, 4096)
        f0 = DensityField.constant(0.0)
        assert weighted_measure(mesh, f0) == pytest.approx(2 * np.pi, rel=1e-6)

    def test_disk_area_second_order(self):
        f0 = DensityField.constant(0.0)
        hs, errs = [], []
        for n in [4, 8, 16]:
            mesh = gen_disk(1.0, n)
            hs.append(mesh.mesh_size())
            errs.append(abs(weighted_measure(mesh, f0) - np.pi))
        order = fit_order(hs, errs)
        assert 1.8 <= order <= 2.2

    def test_sphere_area_second_order(self):
        f0 = DensityField.constant(0.0)
        hs, errs = [], []
        for s in [1, 2, 3]:
            mesh = gen_icosphere(1.0, s)
            hs.append(mesh.mesh_size())
            errs.append(abs(weighted_measure(mesh, f0) - 4 * np.pi))
        assert 1.8 <= fit_order(hs, errs) <= 2.2

    def test_constant_weight_factorizes_exactly(self):
        mesh = gen_disk(1.0, 4)
        base = weighted_measure(mesh, DensityField.constant(0.0))
        shifted = weighted_measure(mesh, DensityField.constant(0.7))
        assert shifted == pytest.approx(np.exp(-0.7) * base, rel=1e-14)

    def test_radial_weight_constant_on_circle(self):
        # f = r^2/4 is exactly 1 on the circle of radius 2, so with
        # vertex-sampled density the factor e^(-1) comes out exactly
        mesh = gen_circle(2.0, 256)
        f = DensityField.gaussian(0.25)
        perimeter = mesh.cell_measures().sum()
        per_vertex = weighted_measure(mesh, f.value(mesh.vertices))
        assert per_vertex == pytest.approx(np.exp(-1.0) * perimeter, rel=1e-14)
        # chord quadrature points sit slightly inside the circle: O(h^2) off
        ambient = weighted_measure(mesh, f)
        assert ambient == pytest.approx(np.exp(-1.0) * perimeter, rel=2e-4)

    def test_quadrature_order_upgrade(self):
        # one triangle, sharply varying weight: higher order wins
        from wmlab.mesh import SimplicialMesh

        tri = SimplicialMesh(np.array([[0.0, 0.0], [1.3, 0.1], [0.2, 1.1]]),
                             np.array([[0, 1, 2]]), "planar-domain")
        field = DensityField.gaussian(2.0)
        a, b, c = tri.vertices
        area = tri.cell_measures()[0]
        # dense midpoint-grid reference over the barycentric unit triangle
        n = 600
        u = (np.arange(n) + 0.5) / n
        uu, vv = np.meshgrid(u, u)
        keep = uu + vv < 1.0
        pts = a + np.outer(uu[keep], b - a) + np.outer(vv[keep], c - a)
        exact = float(np.exp(-field.value(pts)).sum() / n**2 * 2 * area)

        errs = {k: abs(weighted_measure(tri, field, npoints=k) - exact) for k in (1, 3, 7)}
        assert errs[7] < errs[3] < errs[1]


class TestGeodesicSphere:
    def test_euclidean_unit_sphere_fields(self):
        sp = AmbientSpace(0.0, 3)
        mesh, fields = scaled_sphere_with_analytic_fields(sp, 1.0, 2, DensityField.constant(0.0))
        assert np.allclose(fields.r, 1.0)
        assert np.allclose(-(fields.hvec * fields.unit_normals).sum(1), 2.0, atol=1e-12)
        assert np.allclose(fields.hf_minus_gradf_sq, 4.0, atol=1e-12)
        assert fields.source == "analytic"

    def test_hyperbolic_sphere(self):
        rho = np.arcsinh(1.0)
        sp = AmbientSpace(-1.0, 3)
        mesh, fields = scaled_sphere_with_analytic_fields(sp, rho, 1, DensityField.constant(0.0))
        # intrinsic radius sinh(rho) = 1; |H| = 2 cosh/sinh = 2 sqrt(2)
        assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-12)
        assert np.allclose(np.sqrt(fields.hf_minus_gradf_sq), 2 * np.sqrt(2), atol=1e-12)

    def test_spherical_circle(self):
        sp = AmbientSpace(1.0, 2)
        mesh, fields = scaled_sphere_with_analytic_fields(sp, np.pi / 4, 64,
                                                          DensityField.constant(0.0))
        assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), np.sqrt(2) / 2, atol=1e-12)
        assert np.allclose(fields.hf_scalar, 1.0, atol=1e-12)  # cot(pi/4)

    def test_injectivity_guard(self):
        sp = AmbientSpace(1.0, 3)
        with pytest.raises(DomainError):
            scaled_sphere_with_analytic_fields(sp, np.pi / 2, 1, DensityField.constant(0.0))

    def test_ambient_points_on_model(self):
        sp = AmbientSpace(-1.0, 3)
        mesh, fields = scaled_sphere_with_analytic_fields(sp, 0.8, 1, DensityField.gaussian(0.25))
        assert sp.on_manifold(fields.ambient_points)
        d = sp.distance(sp.basepoint(), fields.ambient_points)
        assert np.allclose(d, 0.8, atol=1e-12)

    def test_offcenter_density_has_tangential_gradient(self):
        sp = AmbientSpace(-1.0, 3)
        _, fields = scaled_sphere_with_analytic_fields(
            sp, 0.8, 1, DensityField.gaussian(0.25), density_offset=0.3)
        tan = np.sqrt((fields.grad_f_tangential * fields.grad_f_tangential).sum(1).max())
        assert tan > 1e-3


class TestValidation:
    def test_nonmanifold_edge_rejected(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1.0]])
        cells = np.array([[0, 1, 2], [0, 1, 3], [1, 0, 4]])
        with pytest.raises(InvalidTopology):
            SimplicialMesh(verts, cells, "surface")

    def test_inconsistent_orientation_rejected(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.2]])
        cells = np.array([[0, 1, 2], [1, 2, 3]])  # shared edge traversed twice same way
        with pytest.raises(InvalidTopology):
            SimplicialMesh(verts, cells, "surface")

    def test_quality_floor(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1e-5], [0.5, -1.0]])
        cells = np.array([[0, 1, 2], [0, 2, 1]])  # degenerate sliver, closed pair
        with pytest.raises((DegenerateCell, InvalidTopology)):
            SimplicialMesh(verts, cells, "planar-domain")

    def test_open_curve_rejected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(InvalidTopology):
            SimplicialMesh(verts, np.array([[0, 1], [1, 2]]), "curve")


class TestTransforms:
    def test_translate(self):
        mesh = gen_circle(1.0, 16)
        moved = translate(mesh, [2.0, -1.0])
        assert np.allclose(moved.vertices, mesh.vertices + [2.0, -1.0])
        assert moved.cell_measures().sum() == pytest.approx(mesh.cell_measures().sum())

    def test_ellipse_from_disk(self):
        mesh = linear_transform(gen_disk(1.0, 6), [1.5, 1.0])
        assert mesh.cell_measures().sum() == pytest.approx(
            1.5 * gen_disk(1.0, 6).cell_measures().sum(), rel=1e-12)

    def test_radial_perturbation_deterministic(self):
        mesh = gen_icosphere(1.0, 1)
        a = radial_perturbation(mesh, 0.02, seed=7)
        b = radial_perturbation(mesh, 0.02, seed=7)
        assert np.array_equal(a.vertices, b.vertices)
        r = np.linalg.norm(a.vertices, axis=1)
        assert 0.97 < r.min() and r.max() < 1.03 and r.std() > 1e-3


class TestMeshFiles:
    def test_off_round_trip_icosphere(self, tmp_path):
        mesh = gen_icosphere(1.0, 2)
        path = tmp_path / "ico.off"
        save_mesh(mesh, path)
        back = load_mesh(path)
        assert np.array_equal(back.cells, mesh.cells)
        assert np.abs(back.vertices - mesh.vertices).max() < 1e-12
        assert back.cell_kind == "surface"

    def test_obj_round_trip_wedge_with_labels(self, tmp_path):
        mesh = gen_wedge(1.0, np.pi / 2, 4)
        path = tmp_path / "wedge.obj"
        save_mesh(mesh, path)
        back = load_mesh(path)
        assert back.cell_kind == "planar-domain"
        assert np.array_equal(back.cells, mesh.cells)
        # labels survive through the vertex-label sidecar
        orig = sorted(zip(map(tuple, mesh.boundary_edges), mesh.boundary_labels))
        got = sorted(zip(map(tuple, back.boundary_edges), back.boundary_labels))
        assert orig == got

    def test_off_round_trip_curve(self, tmp_path):
        mesh = gen_circle(2.0, 32)
        path = tmp_path / "circle.off"
        save_mesh(mesh, path)
        back = load_mesh(path)
        assert back.cell_kind == "curve"
        assert np.array_equal(back.cells, mesh.cells)

    def test_dangling_edge_is_invalid_topology(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("OFF\n4 3 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 2 3\n2 1 3\n")
        with pytest.raises(InvalidTopology):
            load_mesh(path)

    def test_obj_quads_rejected(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ParseError) as err:
            load_mesh(path)
        assert err.value.line == 5

    def test_off_bad_header(self, tmp_path):
        path = tmp_path / "bad2.off"
        path.write_text("FOO\n1 0 0\n0 0 0\n")
        with pytest.raises(ParseError):
            load_mesh(path)
