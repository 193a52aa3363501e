"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line; run with ``pytest tests/test_acceptance.py -v -s``.
"""

import json
from contextlib import contextmanager

import numpy as np
import pytest

from wmlab.cli import main as lab_main
from wmlab.density import BakryEmeryParams, DensityField
from wmlab.fields import computed_immersion_fields
from wmlab.generators import (
    gen_circle,
    gen_disk,
    gen_icosphere,
    gen_wedge,
    scaled_sphere_with_analytic_fields,
)
from wmlab.heintze import shrinker_radius, eigenvalue_bound_max, eigenvalue_bound_mean
from wmlab.reilly_ros import (
    ball_linear_isoperimetric,
    check_cone,
    check_linear_isoperimetric,
    check_ros,
    disk_torsion,
    cauchy_schwarz_gap,
    quadratic,
)
from wmlab.reilly_ros import reilly_residual
from wmlab.scenarios import fitted_order, parse_config, run_scenario
from wmlab.spaceform import AmbientSpace

F0 = DensityField.constant(0.0)
M2 = BakryEmeryParams(2, 2)


@contextmanager
def criterion(num, text):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num:>2}: FAIL - {text}")
        raise
    print(f"ACCEPTANCE {num:>2}: PASS - {text}")


def ladder_order(hs, gaps):
    return float(np.polyfit(np.log(hs), np.log(gaps), 1)[0])


@pytest.fixture(scope="module")
def suite_reports(tmp_path_factory):
    """One run of each bundled suite, shared across criteria."""
    out = {}
    for name in ("equality-cases.json", "controls.json"):
        out_dir = tmp_path_factory.mktemp(name.split(".")[0])
        assert lab_main(["run", name, "--out", str(out_dir)]) == 0
        reports = {}
        for path in out_dir.glob("*.json"):
            reports[path.stem] = json.loads(path.read_text())["data"]
        out[name] = reports
    return out


def test_criterion_01_ros_equality_ladder():
    with criterion(1, "Ros volume bound: disk equality < 1e-3, order in [1.6, 2.4]"):
        hs, gaps = [], []
        for n in (4, 8, 16):
            mesh = gen_disk(1.0, n)
            rep = check_ros(mesh, F0, M2)
            assert rep.passed
            hs.append(mesh.mesh_size())
            gaps.append(rep.relative_gap)
        assert gaps[-1] < 1e-3
        assert 1.6 <= ladder_order(hs, gaps) <= 2.4


def test_criterion_02_cone_equality_vertex_cutoff():
    with criterion(2, "cone bound: quarter wedge equality < 1e-3 as cutoff -> 1e-4 R"):
        gaps = []
        for n, eps in ((6, 1e-2), (12, 1e-3), (24, 1e-4)):
            rep = check_cone(gen_wedge(1.0, np.pi / 2, n, eps_vertex=eps), F0, M2)
            assert rep.passed
            gaps.append(rep.relative_gap)
        assert gaps[-1] < 1e-3
        assert gaps[-1] < gaps[0]


def test_criterion_03_linear_isoperimetric_both_paths():
    with criterion(3, "linear isoperimetric: disk mesh equality; R^3 ball exact to 1e-10"):
        rep = check_linear_isoperimetric(gen_disk(1.0, 16), F0, M2)
        assert rep.passed and rep.relative_gap < 1e-3
        ball = ball_linear_isoperimetric(1.0, 2, F0, BakryEmeryParams(3, 3))
        assert ball.passed
        assert abs(ball.gap) < 1e-10
        assert ball.equality


def test_criterion_04_weighted_reilly_identity():
    with criterion(4, "weighted Reilly identity on the disk for f = 0 and f = x1"):
        u = disk_torsion()
        for field in (F0, DensityField.linear([1.0, 0.0])):
            hs, gaps = [], []
            for n in (8, 16, 32):
                mesh = gen_disk(1.0, n)
                rep = reilly_residual(mesh, field, u)
                hs.append(mesh.mesh_size())
                gaps.append(rep.relative_gap)
            assert gaps[-1] < 1e-3
            assert 1.6 <= ladder_order(hs, gaps) <= 2.4


def test_criterion_05_cauchy_schwarz_refinement():
    with criterion(5, "refinement gap >= -1e-12 on 10^4 samples, < 1e-10 at equality"):
        rng = np.random.default_rng(0x5EED)
        fields = [F0, DensityField.gaussian(0.3), DensityField.gaussian(-0.2),
                  DensityField.linear([0.5, -0.2]), DensityField.polynomial([0.1, 0.2, 0.05])]
        ms = [2.5, 3.0, 4.0, 10.0, np.inf]
        for _ in range(10_000):
            A = rng.normal(size=(2, 2))
            u = quadratic(A + A.T, rng.normal(size=2))
            field = fields[rng.integers(len(fields))]
            params = BakryEmeryParams(ms[rng.integers(len(ms))], 2)
            gap = cauchy_schwarz_gap(field, params, rng.uniform(-2, 2, 2), u)
            assert gap >= -1e-12
        # constructed equality: Hess u = I and <grad f, grad u> = -(m-d)
        for m in (3.0, 5.0, 12.0):
            field = DensityField.linear([1.0, 0.0])
            x = np.array([-(m - 2.0), rng.uniform(-1, 1)])
            gap = cauchy_schwarz_gap(field, BakryEmeryParams(m, 2), x, quadratic(np.eye(2)))
            assert abs(gap) < 1e-10


def test_criterion_06_flat_eigenvalue_equalities():
    with criterion(6, "flat averaged bound: circle within 0.5%, icosphere(1,4) within 2%"):
        sp2, sp3 = AmbientSpace(0.0, 2), AmbientSpace(0.0, 3)
        mesh = gen_circle(1.0, 512)
        rep = eigenvalue_bound_mean(mesh, computed_immersion_fields(mesh, sp2, F0), sp2)
        assert abs(rep.lhs - 1.0) < 0.005 and abs(rep.rhs - 1.0) < 0.005
        assert rep.passed
        mesh = gen_icosphere(1.0, 4)
        rep = eigenvalue_bound_mean(mesh, computed_immersion_fields(mesh, sp3, F0), sp3)
        assert abs(rep.lhs - 2.0) < 0.02 * 2 and abs(rep.rhs - 2.0) < 0.02 * 2
        assert rep.passed


def test_criterion_07_hyperbolic_eigenvalue_equalities():
    with criterion(7, "hyperbolic max bound: geodesic spheres sinh(rho)=1, n in {1,2}"):
        rho = np.arcsinh(1.0)
        for n, resolution in ((1, 512), (2, 4)):
            sp = AmbientSpace(-1.0, n + 1)
            mesh, fields = scaled_sphere_with_analytic_fields(sp, rho, resolution, F0)
            rep = eigenvalue_bound_max(mesh, fields, sp)
            assert rep.rhs == pytest.approx(float(n), abs=1e-12)
            assert abs(rep.lhs - n) < 0.02 * n
            assert rep.passed


def test_criterion_08_spherical_eigenvalue_equalities():
    with criterion(8, "spherical averaged bound: rho = pi/6 within 2% of n/s^2"):
        for n, resolution in ((1, 512), (2, 4)):
            sp = AmbientSpace(1.0, n + 1)
            mesh, fields = scaled_sphere_with_analytic_fields(sp, np.pi / 6, resolution, F0)
            rep = eigenvalue_bound_mean(mesh, fields, sp)
            bound = n / np.sin(np.pi / 6) ** 2
            assert rep.rhs == pytest.approx(bound, abs=1e-10)
            assert abs(rep.lhs - bound) < 0.02 * bound
            assert rep.passed


def test_criterion_09_shrinker_radius_and_fminimality():
    with criterion(9, "shrinker radius sqrt(2n) to 1e-12; H_f = 0 but |H_f - grad f|^2 > 0"):
        for n in (1, 2, 3, 5):
            assert abs(shrinker_radius(0.0, n) - np.sqrt(2.0 * n)) < 1e-12
        sp = AmbientSpace(0.0, 3)
        r0 = shrinker_radius(0.0, 2)
        mesh, fields = scaled_sphere_with_analytic_fields(
            sp, r0, 3, DensityField.gaussian(0.25))
        assert np.abs(fields.hf_scalar).max() < 1e-8
        # the bound quantity equals |H|^2 = (n/r0)^2 = 1, strictly positive
        assert fields.hf_minus_gradf_sq.min() == pytest.approx(1.0, abs=1e-12)


def test_criterion_10_lemma_suite(suite_reports):
    with criterion(10, "divergence chain and gradient bound pass on every bundled scenario"):
        seen = 0
        for reports in suite_reports.values():
            for name, data in reports.items():
                for cid in ("divergence_chain", "gradient_bound"):
                    if cid in data["checks"]:
                        rep = data["checks"][cid]
                        assert rep["status"] == "pass", (name, cid)
                        seen += 1
                        if cid == "gradient_bound":
                            n_plus_eps = rep["rhs"]
                            assert rep["lhs"] <= n_plus_eps + 1e-8
        assert seen >= 12


def test_criterion_11_strictness_and_hypothesis_controls(suite_reports):
    with criterion(11, "strictness controls strict; concave weight is hypothesis-only"):
        reports = suite_reports["controls.json"]
        for name, cid in (("ros-ellipse-strict", "ros"),
                          ("cone-offcenter-arc-strict", "cone"),
                          ("eigenbound-perturbed-icosphere-strict", "eigenbound_mean")):
            rep = reports[name]["checks"][cid]
            assert rep["status"] == "pass", name
            assert rep["equality_flag"] is False
            assert rep["gap"] < 0 and rep["relative_gap"] > 1e-2
        concave = reports["ros-concave-weight-control"]["checks"]["ros"]
        assert concave["status"] == "hypothesis-failed"
        assert concave["hypothesis_flags"]["bakry_emery_nonneg"] is False
        # never reported as an inequality violation
        for reports in suite_reports.values():
            for data in reports.values():
                for rep in data["checks"].values():
                    assert rep["status"] != "fail"


def test_bundled_equality_suite_shape(suite_reports):
    # eight scenarios, every check passing with its equality flag set
    reports = suite_reports["equality-cases.json"]
    assert len(reports) == 8
    for name, data in reports.items():
        for cid, rep in data["checks"].items():
            assert rep["status"] == "pass", (name, cid)
            assert rep["equality_flag"] is True, (name, cid)


def test_criterion_12_determinism(tmp_path):
    with criterion(12, "two consecutive runs produce byte-identical data sections"):
        outs = []
        for tag in ("one", "two"):
            out_dir = tmp_path / tag
            assert lab_main(["run", "equality-cases.json", "--out", str(out_dir)]) == 0
            outs.append(out_dir)
        for path in sorted(outs[0].glob("*.json")):
            a = json.loads(path.read_text())["data"]
            b = json.loads((outs[1] / path.name).read_text())["data"]
            assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True), path.name
        assert (outs[0] / "summary.csv").read_bytes() == (outs[1] / "summary.csv").read_bytes()
