#!/usr/bin/env python3
"""
Tests for interpolation reports, the sup over the net and the arc-class diagnostics
"""

import math

import numpy as np
import pytest

from core.blaschke import BlaschkeProduct
from core.contour import Contour, ContourParams, component_from_tiles
from core.discretize import DiscretizationResult, discretize_component
from core.geometry import build_net
from core.harmonic_measure import BoundaryMeasure, bin_edges_for, disk_poisson_measure
from core.verify import (
    DiagnosticsError,
    admissible_points,
    arc_class_diagnostics,
    audit_contour,
    delta_floor_check,
    far_field_report,
    interpolation_report,
    separation,
    sup_modulus_diff,
    telescoping_check,
)

DISK_TILES = [(0, 0), (1, 0), (1, 1)] + [(2, j) for j in range(4)]
RADIUS = 0.875


def disk_run(source: complex, N: int = 1):
    """One unit arc around the circle of radius 7/8 carrying the exact harmonic measure"""
    disk = component_from_tiles(DISK_TILES)
    contour = Contour([disk], ContourParams(epsilon=0.5, N=N))
    measure = disk_poisson_measure(RADIUS, source, bin_edges_for(disk.arclength))
    result = DiscretizationResult(discretize_component(disk, measure), contour.delta, N)
    return contour, {0: measure}, result, BlaschkeProduct.from_zeros([source])


# ---------------------------------------------------------------------------
# Interpolation

def test_separation_of_symmetric_pair():
    assert separation(np.array([0.5, -0.5])) == pytest.approx(0.8)
    assert separation(np.array([0.3j])) == 1.0
    assert separation(np.array([0.2, 0.2])) == 0.0


def test_radial_sequence_report():
    k = np.arange(1, 11)
    zeros = 1.0 - 2.0 ** (-k)
    report = interpolation_report(zeros)
    assert report.zero_count == 10 and report.pair_count == 45
    assert report.separation == pytest.approx(1.0 / (3.0 - 2.0 ** -9))

    # dyadic sup by brute force over every square that can hold a point
    best = 0.0
    for n in range(1, 12):
        side = 2.0 ** -n
        for j in range(1 << n):
            lo, hi = 2 * math.pi * j * side, 2 * math.pi * (j + 1) * side
            mass = sum(1 - r for r in zeros if 1 - r <= side and lo <= 0.0 < hi)
            best = max(best, mass / side)
    assert report.dyadic_sup == pytest.approx(best)
    assert report.dyadic_sup == pytest.approx(2.0 - 2.0 ** -9)
    assert report.carleson_norm == pytest.approx(4 * report.dyadic_sup)


def test_report_thresholds():
    report = interpolation_report([0.5, -0.5])
    assert report.passes()
    assert not report.passes(min_separation=0.9)
    assert not report.passes(max_carleson=0.1)
    assert interpolation_report([]).separation == 1.0


# ---------------------------------------------------------------------------
# sup | |B| - |I| |

def test_sup_of_identical_products_is_zero():
    B = BlaschkeProduct.from_zeros([0.5, 0.3j, -0.9])
    report = sup_modulus_diff(B, B, build_net(0.2, 5))
    assert report.sup_diff == 0.0
    assert report.slack == pytest.approx(2 * math.tanh(0.2))
    assert report.tail_depth == 7


def test_sup_is_small_for_nearby_zero_and_symmetric():
    B = BlaschkeProduct.from_zeros([0.5])
    I = BlaschkeProduct.from_zeros([0.5 + 1e-6])
    net = build_net(0.2, 5)
    forward = sup_modulus_diff(B, I, net)
    assert forward.sup_diff < 1e-5
    assert sup_modulus_diff(I, B, net).sup_diff == forward.sup_diff


def test_sup_sees_a_missing_zero():
    B = BlaschkeProduct.from_zeros([0.5])
    report = sup_modulus_diff(B, BlaschkeProduct(), build_net(0.1, 4))
    assert report.sup_diff == pytest.approx(1.0, abs=0.1)
    assert abs(report.argmax - 0.5) < 0.1


# ---------------------------------------------------------------------------
# Arc classes

def test_telescoping_identity_for_exact_measure():
    contour, measures, result, b1 = disk_run(0.3 + 0j)
    assert len(result.arcs) == 1
    z = 0.999 * np.exp(2j)
    diag = arc_class_diagnostics(z, result, measures, contour, b1, 1)
    assert [c.label for c in diag.classes] == ["L"]
    assert diag.identity_residual < 1e-3
    assert diag.e_l == pytest.approx(abs(diag.total))
    assert diag.e_b == 0.0 and diag.e_s == 0.0


def test_points_near_the_region_are_refused():
    contour, measures, result, b1 = disk_run(0.3 + 0j)
    with pytest.raises(DiagnosticsError):
        arc_class_diagnostics(0.9, result, measures, contour, b1, 1)


def test_boundary_class_inside_dilated_square():
    tile = component_from_tiles([(3, 0)])
    edges = bin_edges_for(tile.arclength)
    n = edges.size - 1
    measure = BoundaryMeasure(0, edges, np.full(n, 1.0 / n), {"name": "uniform"})
    contour = Contour([tile], ContourParams(epsilon=0.5, N=0, K=1.0))
    result = DiscretizationResult(discretize_component(tile, measure), contour.delta, 0)
    b1 = BlaschkeProduct.from_zeros([0.9 * np.exp(1j * math.pi / 8)])
    z = 0.5 * np.exp(1j * math.pi / 8)
    diag = arc_class_diagnostics(z, result, {0: measure}, contour, b1, 0)
    assert [c.label for c in diag.classes] == ["B"]
    assert diag.e_b == pytest.approx(abs(diag.total))
    assert diag.e_b <= diag.e_b1 + diag.e_b2 + 1e-12


def test_telescoping_check_over_admissible_points():
    contour, measures, result, b1 = disk_run(-0.2 + 0.1j)
    rng = np.random.default_rng(4)
    points = admissible_points(contour, 1, 10, rng, depth_limit=14)
    assert points.size == 10
    report = telescoping_check(points, result, measures, contour, b1, 1)
    assert report.points == 10
    assert report.holds
    assert report.to_dict()["worst"] is not None


def test_admissible_points_without_contour():
    empty = Contour([], ContourParams(epsilon=0.5, N=2))
    points = admissible_points(empty, 2, 7, np.random.default_rng(0))
    assert points.size == 7


# ---------------------------------------------------------------------------
# Floors, far field and contour audits

def test_delta_floor():
    contour, _, _, b1 = disk_run(0.3 + 0j)
    report = delta_floor_check(b1, contour)
    assert report.samples == 8 * 5
    assert report.holds
    empty = delta_floor_check(BlaschkeProduct(), Contour([], ContourParams(epsilon=0.5, N=1)))
    assert empty.min_b1 == 1.0 and empty.holds


def test_far_field_split():
    contour, _, result, b1 = disk_run(0.3 + 0j)
    points = np.array([0.0, 0.5j, 0.95, 0.9999 * np.exp(1j)])
    report = far_field_report(points, result.i1, b1, result.i1, contour, 1, 0.5)
    assert report.far_points == 1 and report.near_points == 3


def test_far_field_leaves_gap_when_k_is_small():
    """With K = 0.5 < 2N, points between the two radii are judged by neither test"""
    disk = component_from_tiles(DISK_TILES)
    contour = Contour([disk], ContourParams(epsilon=0.5, N=1, K=0.5))
    b1 = BlaschkeProduct.from_zeros([0.3])
    points = np.array([0.0, 0.97, 0.9999 * np.exp(1j)])
    report = far_field_report(points, b1, b1, b1, contour, 1, 0.5)
    assert (report.near_points, report.gap_points, report.far_points) == (1, 1, 1)
    assert report.to_dict()["gap_points"] == 1


def test_audit_of_empty_contour():
    B = BlaschkeProduct()
    audit = audit_contour(B, Contour([], ContourParams(epsilon=0.5, N=1, d_max=6)), 50, np.random.default_rng(2))
    assert audit.passed
    assert audit.interior_samples == 0
    assert audit.exterior_misses == 0


def test_audit_of_power_contour():
    """z^300 with N = 1: the circle of radius 7/8 meets every promise"""
    B = BlaschkeProduct(origin_multiplicity=300)
    disk = component_from_tiles(DISK_TILES)
    contour = Contour([disk], ContourParams(epsilon=0.5, N=1, d_max=8))
    audit = audit_contour(B, contour, 200, np.random.default_rng(9))
    assert audit.interior_violations == 0
    assert audit.interior_max <= 0.5
    assert audit.exterior_misses == 0
    assert audit.arclength_norm["within_bound"]


def test_audit_moves_interior_samples_by_k():
    """A small K only promises small |B| close to the interior"""
    B = BlaschkeProduct(origin_multiplicity=300)
    disk = component_from_tiles(DISK_TILES)
    contour = Contour([disk], ContourParams(epsilon=0.2, N=1, K=0.5, d_max=8))
    audit = audit_contour(B, contour, 200, np.random.default_rng(9))
    # |z| <= tanh(artanh(7/8) + 1/2) < 0.953 on the sampled set
    assert audit.interior_violations == 0
    assert audit.interior_max < 0.953 ** 300 + 1e-12


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
