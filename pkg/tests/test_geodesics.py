import math

import numpy as np
import pytest

from dualgeo.connections import levi_civita
from dualgeo.geodesics import (
    Trajectory, curves_coincide, integrate_dual_geodesic, read_csv,
    reparametrization_check,
)
from dualgeo.geometry import Metric


def test_straight_line_euclidean(euclid2):
    conn = levi_civita(euclid2)
    traj = integrate_dual_geodesic(conn, euclid2, [0.0, 0.0], [1.0, 0.5], 100, 0.01)
    assert traj.exit_reason == "completed"
    expected = np.outer(traj.tau, [1.0, 0.5])
    assert np.max(np.abs(traj.x - expected)) < 1e-12
    assert np.max(np.abs(traj.p - [1.0, 0.5])) < 1e-12


def test_zero_velocity_rejected(euclid2):
    with pytest.raises(ValueError, match="nonzero"):
        integrate_dual_geodesic(levi_civita(euclid2), euclid2, [0.0, 0.0],
                                [0.0, 0.0], 10, 0.01)


def test_velocity_rescaling_same_point_set(sw2):
    conn = sw2.connection("+T")
    kw = dict(box=sw2.box, singular_loci=sw2.singular_loci)
    a = integrate_dual_geodesic(conn, sw2.metric, [1.0, 2.0], [0.3, 0.2], 1000, 1e-3, **kw)
    b = integrate_dual_geodesic(conn, sw2.metric, [1.0, 2.0], [0.6, 0.4], 500, 1e-3, **kw)
    cmp = curves_coincide(a, b, 1e-7)
    assert cmp.coincide, (cmp.dist_a_to_b, cmp.dist_b_to_a)


def test_sw_t_and_b_trajectories_coincide(sw2):
    kw = dict(box=sw2.box, singular_loci=sw2.singular_loci)
    a = integrate_dual_geodesic(sw2.connection("+T"), sw2.metric, [1.0, 2.0],
                                [0.35, 0.35], 2000, 1e-3, **kw)
    b = integrate_dual_geodesic(sw2.connection("+B"), sw2.metric, [1.0, 2.0],
                                [0.35, 0.35], 2000, 1e-3, **kw)
    cmp = curves_coincide(a, b, 1e-6)
    assert cmp.coincide, (cmp.dist_a_to_b, cmp.dist_b_to_a)
    # half-step cross-validation of the same curve; the floor is the
    # piecewise-linear interpolation error of the coarser polyline (~ds^2)
    a_half = integrate_dual_geodesic(sw2.connection("+T"), sw2.metric, [1.0, 2.0],
                                     [0.35, 0.35], 4000, 5e-4, **kw)
    assert curves_coincide(a, a_half, 1e-7).coincide


def test_sw_unit_speed_pair(sw2):
    # the same comparison at unit-scale initial velocity: the symmetrized
    # companion accelerates ~20x across the box, so the piecewise-linear
    # measurement floor rises to ~1e-5; the curves still coincide there
    kw = dict(box=sw2.box, singular_loci=sw2.singular_loci)
    a = integrate_dual_geodesic(sw2.connection("+T"), sw2.metric, [1.0, 2.0],
                                [1.0, 1.0], 2000, 1e-3, **kw)
    b = integrate_dual_geodesic(sw2.connection("+B"), sw2.metric, [1.0, 2.0],
                                [1.0, 1.0], 2000, 1e-3, **kw)
    cmp = curves_coincide(a, b, 1e-5)
    assert cmp.coincide, (cmp.dist_a_to_b, cmp.dist_b_to_a)


def test_lc_not_in_the_class(sw2):
    kw = dict(box=sw2.box, singular_loci=sw2.singular_loci)
    a = integrate_dual_geodesic(sw2.connection("+T"), sw2.metric, [1.0, 2.0],
                                [0.35, 0.35], 2000, 1e-3, **kw)
    c = integrate_dual_geodesic(sw2.connection("LC"), sw2.metric, [1.0, 2.0],
                                [0.35, 0.35], 2000, 1e-3, **kw)
    assert not curves_coincide(a, c, 1e-6).coincide


def test_trajectory_vs_itself(euclid2):
    traj = integrate_dual_geodesic(levi_civita(euclid2), euclid2, [0.0, 0.0],
                                   [1.0, 0.0], 50, 0.01)
    cmp = curves_coincide(traj, traj, 1e-12)
    assert cmp.coincide and cmp.dist_a_to_b == 0.0 and cmp.dist_b_to_a == 0.0


def test_line_at_double_speed_coincides(euclid2):
    conn = levi_civita(euclid2)
    a = integrate_dual_geodesic(conn, euclid2, [0.0, 0.0], [1.0, 1.0], 100, 0.01)
    b = integrate_dual_geodesic(conn, euclid2, [0.0, 0.0], [2.0, 2.0], 100, 0.01)
    assert curves_coincide(a, b, 1e-10).coincide


def test_diverging_lines_fail(euclid2):
    conn = levi_civita(euclid2)
    a = integrate_dual_geodesic(conn, euclid2, [0.0, 0.0], [1.0, 0.0], 100, 0.01)
    b = integrate_dual_geodesic(conn, euclid2, [0.0, 0.0], [1.0, 0.3], 100, 0.01)
    cmp = curves_coincide(a, b, 1e-6)
    assert not cmp.coincide


def test_reparametrization_trivial_and_exponential(euclid2, sw2):
    conn = levi_civita(euclid2)
    assert reparametrization_check(conn, euclid2, [0.0, 0.0], [1.0, 0.2],
                                   q=lambda t: 0.0, steps=100, h=0.01).coincide
    # q = 1: same straight line traversed at exponential speed
    assert reparametrization_check(conn, euclid2, [0.0, 0.0], [1.0, 0.2],
                                   q=lambda t: 1.0, steps=100, h=0.01).coincide
    cmp = reparametrization_check(sw2.connection("+T"), sw2.metric, [1.0, 2.0],
                                  [0.3, 0.3], q=lambda t: math.sin(t),
                                  steps=1500, h=1e-3, tol=1e-6,
                                  box=sw2.box, singular_loci=sw2.singular_loci)
    assert cmp.coincide, (cmp.dist_a_to_b, cmp.dist_b_to_a)


def test_convergence_order(sw2):
    """halving h cuts the endpoint error by ~2^4 against an h/16 reference."""
    conn = sw2.connection("+T")
    kw = dict(box=sw2.box, singular_loci=sw2.singular_loci)
    h = 0.05
    tau_end = 1.0

    def endpoint(step):
        traj = integrate_dual_geodesic(conn, sw2.metric, [1.0, 2.0], [0.4, 0.3],
                                       int(round(tau_end / step)), step, **kw)
        assert traj.exit_reason == "completed"
        return traj.x[-1]

    ref = endpoint(h / 16)
    err_h = np.linalg.norm(endpoint(h) - ref)
    err_h2 = np.linalg.norm(endpoint(h / 2) - ref)
    ratio = err_h / err_h2
    assert 12.0 < ratio < 20.0, (err_h, err_h2, ratio)


def test_domain_exit_flag(sw2):
    traj = integrate_dual_geodesic(sw2.connection("LC"), sw2.metric, [2.5, 2.5],
                                   [1.0, 0.0], 2000, 1e-2,
                                   box=sw2.box, singular_loci=sw2.singular_loci)
    assert traj.exit_reason == "domain_exit"
    assert traj.x[-1][0] <= 3.0


def test_singular_margin_halt():
    g = Metric.from_sources([["1", "0"], ["0", "1"]])
    traj = integrate_dual_geodesic(levi_civita(g), g, [0.05, 0.5], [-1.0, 0.0],
                                   1000, 1e-3, singular_loci=[(0, 0.0)])
    assert traj.exit_reason == "singular_margin"


def test_lc_dual_geodesics_are_great_circles(sphere3, rng):
    """On the round sphere the Levi-Civita dual-geodesics are the geodesics:
    embedded ambient samples stay on a plane through the origin."""
    conn = sphere3.connection("LC")

    def embed(points):
        r2 = np.sum(points**2, axis=1)
        denom = 1.0 + r2
        ambient = np.empty((len(points), 4))
        ambient[:, :3] = 2.0 * points / denom[:, None]
        ambient[:, 3] = (1.0 - r2) / denom
        return ambient

    for _ in range(3):
        x0 = -0.2 + 0.4 * rng.random(3)
        w0 = rng.normal(size=3)
        w0 *= 0.4 / np.linalg.norm(w0)
        traj = integrate_dual_geodesic(conn, sphere3.metric, x0, w0, 1500, 1e-3,
                                       box=sphere3.box)
        amb = embed(traj.x)
        # unit norm preserved and rank-2 ambient span (plane through origin)
        assert np.max(np.abs(np.linalg.norm(amb, axis=1) - 1.0)) < 1e-9
        sv = np.linalg.svd(amb, compute_uv=False)
        assert sv[2] / sv[0] < 1e-8
        # constant metric speed along the curve
        speeds = [np.sqrt(traj.p[i] @ sphere3.metric.inverse(traj.x[i]) @ traj.p[i])
                  for i in range(0, len(traj.x), 300)]
        assert np.max(np.abs(np.diff(speeds))) < 1e-9


def test_trajectory_monotone_parameter_guard():
    with pytest.raises(ValueError, match="strictly increasing"):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 2)), np.zeros((2, 2)), "LC", 0.1)


def test_csv_round_trip_bit_exact(tmp_path, sw2):
    traj = integrate_dual_geodesic(sw2.connection("+T"), sw2.metric, [1.0, 2.0],
                                   [0.3, 0.1], 50, 1e-3,
                                   box=sw2.box, singular_loci=sw2.singular_loci)
    path = tmp_path / "traj.csv"
    traj.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "tau,x1,x2,p1,p2"
    tau, x, p = read_csv(path)
    assert np.array_equal(tau, traj.tau)
    assert np.array_equal(x, traj.x)
    assert np.array_equal(p, traj.p)


def test_json_export(tmp_path, euclid2):
    import json
    traj = integrate_dual_geodesic(levi_civita(euclid2), euclid2, [0.0, 0.0],
                                   [1.0, 0.0], 5, 0.1)
    path = tmp_path / "traj.json"
    traj.write_json(path)
    data = json.loads(path.read_text())
    assert data["metadata"]["method"] == "rk4"
    assert data["metadata"]["samples"] == 6
    assert float(data["x"][-1][0]) == traj.x[-1][0]
