import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from wmlab.density import BakryEmeryParams, DensityField
from wmlab.errors import (
    HypothesisFailed,
    MissingLabels,
    NonConvexCone,
    NotCMC,
)
from wmlab.generators import build_wedge, gen_annulus, gen_disk, gen_wedge
from wmlab.mesh import linear_transform
from wmlab.reilly_ros import (
    ball_linear_isoperimetric,
    check_cone,
    check_linear_isoperimetric,
    check_ros,
    disk_torsion,
    cauchy_schwarz_gap,
    quadratic,
    reilly_residual,
    solve_dirichlet,
    solve_mixed,
)

F0 = DensityField.constant(0.0)
M2 = BakryEmeryParams(2, 2)


def fit_order(hs, errs):
    return np.polyfit(np.log(np.asarray(hs)), np.log(np.asarray(errs)), 1)[0]


class TestPoisson:
    def test_disk_torsion_solution(self):
        mesh = gen_disk(1.0, 12)
        sol = solve_dirichlet(mesh, F0)
        assert sol.residual < 1e-10
        center = int(np.argmin(np.linalg.norm(mesh.vertices, axis=1)))
        assert abs(sol.u[center] - (-0.25)) < 2e-3
        # clamped rows are exactly zero
        assert np.abs(sol.u[sol.boundary_vertices]).max() == 0.0

    def test_disk_normal_derivative(self):
        mesh = gen_disk(1.0, 16)
        sol = solve_dirichlet(mesh, F0)
        assert np.abs(sol.u_nu - 0.5).max() < 0.5 * 0.05

    def test_energy_identity(self):
        mesh = gen_disk(1.0, 8)
        field = DensityField.linear([0.3, -0.1])
        sol = solve_dirichlet(mesh, field)
        from wmlab.ops import assemble

        pack = assemble(mesh, field)
        lhs = sol.u @ (pack.stiffness @ sol.u)
        rhs = -sol.u @ pack.lumped_mass
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_constant_weight_matches_unweighted(self):
        mesh = gen_disk(1.0, 8)
        a = solve_dirichlet(mesh, F0)
        b = solve_dirichlet(mesh, DensityField.constant(2.0))
        assert np.abs(a.u - b.u).max() < 1e-11

    def test_mixed_quarter_wedge(self):
        mesh = gen_wedge(1.0, np.pi / 2, 16, eps_vertex=1e-3)
        sol = solve_mixed(mesh, F0)
        # exact radial solution u = (r^2-1)/4 + O(eps^2 log eps)
        r = np.linalg.norm(mesh.vertices, axis=1)
        exact = (r**2 - 1.0) / 4.0
        assert np.abs(sol.u - exact).max() < 3e-3
        inner = r < 2e-3
        assert np.abs(sol.u[inner] + 0.25).max() < 1e-3

    def test_mixed_half_wedge(self):
        mesh = gen_wedge(1.0, np.pi, 12, eps_vertex=1e-3)
        sol = solve_mixed(mesh, F0)
        r = np.linalg.norm(mesh.vertices, axis=1)
        assert np.abs(sol.u - (r**2 - 1.0) / 4.0).max() < 5e-3

    def test_missing_labels(self):
        mesh = gen_disk(1.0, 4)  # all-"M" boundary, no cone faces
        with pytest.raises(MissingLabels):
            solve_mixed(mesh, F0)


class TestReillyIdentity:
    def test_disk_f0_closed_form(self):
        # LHS = RHS = pi/2 for the torsion function on the unit disk
        mesh = gen_disk(1.0, 16)
        rep = reilly_residual(mesh, F0, disk_torsion())
        assert rep.lhs == pytest.approx(np.pi / 2, rel=2e-3)
        assert rep.rhs == pytest.approx(np.pi / 2, rel=2e-3)
        assert rep.passed

    def test_disk_f0_convergence_order(self):
        hs, gaps = [], []
        for n in [4, 8, 16]:
            mesh = gen_disk(1.0, n)
            rep = reilly_residual(mesh, F0, disk_torsion())
            hs.append(mesh.mesh_size())
            gaps.append(abs(rep.gap))
        assert 1.6 <= fit_order(hs, gaps) <= 2.4

    def test_harmonic_zero_boundary_gives_zero(self):
        mesh = gen_disk(1.0, 8)
        zero = quadratic(np.zeros((2, 2)))
        rep = reilly_residual(mesh, F0, zero)
        assert abs(rep.lhs) < 1e-14 and abs(rep.rhs) < 1e-14

    def test_smooth_identity_oracle_f_linear(self):
        # independent high-order quadrature of both sides on the smooth disk,
        # fully generic u: pins every sign in the boundary integrand
        alpha, beta = 0.4, 0.3
        A = np.array([[1.1, 0.35], [0.35, 0.6]])
        bvec = np.array([0.2, -0.5])
        u = quadratic(A, bvec, 0.1)
        field = DensityField.gaussian(beta, center=[0.15, -0.1])

        def lhs_integrand(r, th):
            x = np.array([r * np.cos(th), r * np.sin(th)])
            gu = u.gradient(x)
            gf = field.gradient(x)
            hf = field.hessian(x)
            lap_f = np.trace(A) - gf @ gu
            val = lap_f**2 - np.einsum("ij,ij->", A, A) - gu @ hf @ gu
            return val * np.exp(-field.value(x)) * r

        lhs, err1 = dblquad(lhs_integrand, 0, 2 * np.pi, 0, 1, epsabs=1e-11)

        def rhs_integrand(th):
            x = np.array([np.cos(th), np.sin(th)])
            xp = np.array([-np.sin(th), np.cos(th)])   # d/d(arclength), R = 1
            nu = x
            gu = u.gradient(x)
            gf = field.gradient(x)
            u_nu = gu @ nu
            du = gu @ xp
            d2u = xp @ A @ xp - gu @ x                 # chain rule, x'' = -x
            df = gf @ xp
            lap_b = d2u - df * du                      # boundary drift Laplacian
            h_f = 1.0 - gf @ nu
            return (2 * u_nu * lap_b + h_f * u_nu**2 + 1.0 * du**2) * np.exp(-field.value(x))

        rhs, err2 = quad(rhs_integrand, 0, 2 * np.pi, epsabs=1e-10, limit=200)
        # the smooth identity itself
        assert lhs == pytest.approx(rhs, abs=1e-8)
        # and the mesh evaluation converges to the same numbers at O(h^2)
        errs = []
        for n in [16, 32]:
            rep = reilly_residual(gen_disk(1.0, n), field, u)
            errs.append(abs(rep.lhs - lhs))
            assert rep.rhs == pytest.approx(rhs, rel=4.0 * errs[-1] / abs(lhs) + 1e-9)
        assert rep.lhs == pytest.approx(lhs, rel=5e-3)
        assert errs[1] < 0.35 * errs[0]

    def test_f_x1_sign_calibration(self):
        # for u = (r^2-1)/4 and f = x1 the boundary term is
        # (1/4) int (1 - cos t) e^(-cos t) dt; the wrong H_f sign is far off
        mesh = gen_disk(1.0, 16)
        field = DensityField.linear([1.0, 0.0])
        rep = reilly_residual(mesh, field, disk_torsion())
        rhs_exact = quad(lambda t: 0.25 * (1 - np.cos(t)) * np.exp(-np.cos(t)),
                         0, 2 * np.pi)[0]
        wrong_sign = quad(lambda t: 0.25 * (1 + np.cos(t)) * np.exp(-np.cos(t)),
                          0, 2 * np.pi)[0]
        assert rep.rhs == pytest.approx(rhs_exact, rel=1e-3)
        assert abs(rep.rhs - wrong_sign) > 1.0
        assert rep.lhs == pytest.approx(rhs_exact, rel=2e-3)

    def test_mesh_function_mode_low_order(self):
        mesh = gen_disk(1.0, 16)
        u = disk_torsion()
        rep = reilly_residual(mesh, F0, np.asarray(u.value(mesh.vertices)))
        assert "low-order" in rep.details["mode"]
        assert rep.lhs == pytest.approx(np.pi / 2, rel=0.2)


class TestProp22:
    def test_pure_trace_equality(self):
        gap = cauchy_schwarz_gap(F0, M2, np.zeros(2), quadratic(np.eye(2)))
        assert abs(gap) < 1e-14

    def test_anisotropic_defect(self):
        # u = x1^2: |Hess|^2 = 4, (Lap u)^2 / 2 = 2
        u = quadratic(np.diag([2.0, 0.0]))
        gap = cauchy_schwarz_gap(F0, M2, np.array([0.3, 0.4]), u)
        assert gap == pytest.approx(2.0, abs=1e-13)

    def test_sampled_nonnegativity(self):
        rng = np.random.default_rng(12)
        fields = [F0, DensityField.gaussian(0.3), DensityField.linear([0.5, -0.2]),
                  DensityField.polynomial([0.0, 0.2, 0.05])]
        for _ in range(1000):
            A = rng.normal(size=(2, 2))
            u = quadratic(A + A.T, rng.normal(size=2))
            field = fields[rng.integers(0, len(fields))]
            m = rng.choice([2.5, 3.0, 5.0, np.inf])
            params = BakryEmeryParams(m, 2)
            x = rng.uniform(-2, 2, size=2)
            assert cauchy_schwarz_gap(field, params, x, u) >= -1e-12

    def test_constructed_equality_case(self):
        # Hess u = I and <grad f, x-ish> tuned so the cross condition holds:
        # grad u = x, f linear v: <v, grad u> = -(m-d) at the right x
        m, d = 5.0, 2
        v = np.array([1.0, 0.0])
        field = DensityField.linear(v)
        params = BakryEmeryParams(m, d)
        x = np.array([-(m - d), 0.7])  # <v, x> = -(m-d)
        gap = cauchy_schwarz_gap(field, params, x, quadratic(np.eye(2)))
        assert abs(gap) < 1e-10


class TestRos:
    def test_disk_equality(self):
        rep = check_ros(gen_disk(1.0, 16), F0, M2)
        assert rep.passed
        assert rep.relative_gap < 1e-3
        assert rep.equality

    def test_disk_ladder_order(self):
        hs, gaps = [], []
        for n in [4, 8, 16]:
            mesh = gen_disk(1.0, n)
            rep = check_ros(mesh, F0, M2)
            hs.append(mesh.mesh_size())
            gaps.append(rep.relative_gap)
        assert 1.6 <= fit_order(hs, gaps) <= 2.4

    def test_gaussian_m_inf_strict(self):
        # radius < sqrt(2) keeps H_f = 1/R - R/2 positive on the boundary
        rep = check_ros(gen_disk(1.0, 12), DensityField.gaussian(0.25),
                        BakryEmeryParams("inf", 2))
        assert rep.passed and not rep.equality
        assert rep.details["limit_case"] is True
        assert rep.gap < 0  # strictly below the bound
        # 1D radial oracle for both sides
        lhs_exact = 4 * np.pi * (1 - np.exp(-0.25))
        rhs_exact = 2 * np.pi * np.exp(-0.25) / 0.5
        assert rep.lhs == pytest.approx(lhs_exact, rel=5e-3)
        assert rep.rhs == pytest.approx(rhs_exact, rel=5e-3)

    def test_ellipse_strict(self):
        mesh = linear_transform(gen_disk(1.0, 12), [1.5, 1.0])
        rep = check_ros(mesh, F0, M2)
        assert rep.passed and not rep.equality
        assert rep.relative_gap > 0.05

    def test_concave_weight_flags_hypothesis(self):
        rep = check_ros(gen_disk(1.0, 8), DensityField.gaussian(-0.25),
                        BakryEmeryParams("inf", 2))
        assert rep.hypothesis_flags["bakry_emery_nonneg"] is False
        assert rep.passed is None
        assert rep.status == "hypothesis-failed"

    def test_annulus_negative_control(self):
        with pytest.raises(HypothesisFailed) as err:
            check_ros(gen_annulus(0.5, 1.0, 4), F0, M2)
        assert err.value.vertex is not None


class TestCone:
    def test_quarter_wedge_equality(self):
        rep = check_cone(gen_wedge(1.0, np.pi / 2, 24, eps_vertex=1e-4), F0, M2)
        assert rep.passed
        assert rep.relative_gap < 1e-3
        assert rep.lhs == pytest.approx(np.pi / 4, rel=1e-2)

    def test_eps_ladder(self):
        gaps = []
        for n, eps in [(6, 1e-2), (12, 1e-3), (24, 1e-4)]:
            rep = check_cone(gen_wedge(1.0, np.pi / 2, n, eps_vertex=eps), F0, M2)
            gaps.append(rep.relative_gap)
        assert gaps[-1] < 1e-3
        assert gaps[0] > gaps[-1]

    def test_off_center_arc_strict(self):
        # center pulled toward the apex: acute contact, strict inequality
        rep = check_cone(gen_wedge(1.0, np.pi / 2, 16, arc_center_offset=-0.25), F0, M2)
        assert rep.passed and not rep.equality
        assert rep.relative_gap > 5e-2
        assert rep.hypothesis_flags["contact_angle_ok"] is True
        # closed-form oracle: arc angle phi from the apex-at-origin geometry
        phi = np.arctan2(0.57097, 0.82097)
        rhs_exact = 0.5 * 2 * phi
        lhs_exact = phi - 0.25 * np.sin(phi)
        assert rep.rhs == pytest.approx(rhs_exact, rel=1e-3)
        assert rep.lhs == pytest.approx(lhs_exact, rel=1e-3)

    def test_obtuse_contact_is_hypothesis_failure(self):
        # center pushed toward the arc: the mixed problem loses H^2
        # regularity at the obtuse junctions and the bound genuinely fails;
        # the check must report a hypothesis failure, not a pass/fail
        rep = check_cone(gen_wedge(1.0, np.pi / 2, 16, arc_center_offset=0.25), F0, M2)
        assert rep.hypothesis_flags["contact_angle_ok"] is False
        assert rep.passed is None
        assert rep.status == "hypothesis-failed"
        assert rep.gap > 0  # the raw numbers do violate the bound here

    def test_centered_contact_is_orthogonal(self):
        rep = check_cone(gen_wedge(1.0, np.pi / 2, 12), F0, M2)
        assert rep.hypothesis_flags["contact_angle_ok"] is True
        for a in rep.details["contact_angles"]:
            assert a == pytest.approx(np.pi / 2, abs=0.05)

    def test_nonconvex_rejected(self):
        mesh = build_wedge(1.0, 1.5 * np.pi, 8)
        with pytest.raises(NonConvexCone):
            check_cone(mesh, F0, M2)


class TestLinearIsoperimetric:
    def test_disk_equality(self):
        rep = check_linear_isoperimetric(gen_disk(1.0, 16), F0, M2)
        assert rep.passed
        assert rep.relative_gap < 1e-3
        assert rep.details["H_f"] == pytest.approx(1.0, abs=1e-12)

    def test_ellipse_not_cmc(self):
        mesh = linear_transform(gen_disk(1.0, 8), [1.5, 1.0])
        with pytest.raises(NotCMC):
            check_linear_isoperimetric(mesh, F0, M2)

    def test_ball_analytic_exact(self):
        rep = ball_linear_isoperimetric(1.0, 2, F0, BakryEmeryParams(3, 3))
        # (2)(4 pi / 3) vs (2/3)(4 pi): exact equality
        assert rep.lhs == pytest.approx(2 * 4 * np.pi / 3, rel=1e-13)
        assert abs(rep.gap) < 1e-10
        assert rep.equality

    def test_ball_analytic_gaussian_strict(self):
        rep = ball_linear_isoperimetric(1.0, 2, DensityField.gaussian(0.25),
                                        BakryEmeryParams("inf", 3))
        assert rep.passed
        assert rep.gap < 0

    def test_ball_hf_positive_guard(self):
        with pytest.raises(HypothesisFailed):
            ball_linear_isoperimetric(3.0, 2, DensityField.gaussian(0.25),
                                      BakryEmeryParams("inf", 3))
