#!/usr/bin/env python3
"""
Tests for disk geometry: metrics, automorphisms, exact edge distances and nets
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.geometry import (
    DiskPointError,
    build_net,
    circle_count,
    dist_to_circle_arc,
    dist_to_radial,
    hyp_dist,
    mobius_to_origin,
    move_from,
    net_radii,
    pseudo_dist,
    radius_at_depth,
    to_disk_point,
)

disk_points = st.builds(
    lambda r, t: r * complex(math.cos(t), math.sin(t)),
    st.floats(0.0, 0.95),
    st.floats(0.0, 2 * math.pi),
)


def test_pseudo_dist_symmetric_pair():
    """rho(1/2, -1/2) = 1 / (1 + 1/4)"""
    assert pseudo_dist(0.5, -0.5) == pytest.approx(0.8, abs=1e-15)
    assert pseudo_dist(0.3 + 0.1j, 0.3 + 0.1j) == 0.0


@given(disk_points, disk_points)
@settings(max_examples=200)
def test_hyp_dist_is_artanh_of_rho(z, w):
    assert hyp_dist(z, w) == pytest.approx(math.atanh(pseudo_dist(z, w)), abs=1e-12)


@given(disk_points, disk_points, disk_points)
@settings(max_examples=200)
def test_rho_is_mobius_invariant(a, z, w):
    phi = mobius_to_origin(a)
    assert pseudo_dist(phi(z), phi(w)) == pytest.approx(pseudo_dist(z, w), abs=1e-9)


def test_mobius_sends_point_to_origin():
    phi = mobius_to_origin(0.4 - 0.2j)
    assert abs(phi(0.4 - 0.2j)) < 1e-15


def test_move_from_has_requested_distance():
    center = 0.3 + 0.2j
    for t in (0.1, 1.5, 4.0):
        w = move_from(center, math.tanh(t) * np.exp(0.7j))
        assert hyp_dist(center, w) == pytest.approx(t, abs=1e-8)


def test_to_disk_point_validation():
    assert to_disk_point((0.1, 0.2)) == 0.1 + 0.2j
    with pytest.raises(DiskPointError):
        to_disk_point(1.0)
    with pytest.raises(DiskPointError):
        to_disk_point((0.5, float("nan")))
    with pytest.raises(DiskPointError):
        to_disk_point((0.1, 0.2, 0.3))


def test_dist_to_radial_on_and_off_segment():
    assert float(dist_to_radial(0.5, 0.0, 0.2, 0.8)) == pytest.approx(0.0, abs=1e-12)
    # perpendicular foot at the origin
    assert float(dist_to_radial(0.5j, 0.0, 0.0, 0.9)) == pytest.approx(math.atanh(0.5), abs=1e-12)


def test_dist_to_radial_matches_brute_force():
    z = 0.3 + 0.4j
    samples = np.linspace(0.1, 0.8, 20001)
    brute = float(np.min(hyp_dist(z, samples)))
    exact = float(dist_to_radial(z, 0.0, 0.1, 0.8))
    assert exact <= brute + 1e-12
    assert brute - exact < 1e-6


def test_dist_to_circle_arc_matches_brute_force():
    z = 0.2 + 0.1j
    t = np.linspace(1.0, 3.0, 20001)
    brute = float(np.min(hyp_dist(z, 0.7 * np.exp(1j * t))))
    exact = float(dist_to_circle_arc(z, 0.7, 1.0, 2.0))
    assert exact <= brute + 1e-12
    assert brute - exact < 1e-6


def test_circle_count_is_power_of_two():
    assert circle_count(0.0, 0.1) == 1
    for r in (0.3, 0.9, 0.999):
        n = circle_count(r, 0.1)
        assert n & (n - 1) == 0
        assert 2 * math.pi * r / (n * (1 - r * r)) <= 0.1 + 1e-12


def test_build_net_covers_to_depth():
    net = build_net(0.2, 5)
    radii = net_radii(0.2, 5)
    assert radii[-1] == pytest.approx(radius_at_depth(5))
    assert np.all(np.diff(np.arctanh(radii)) <= 0.2 + 1e-12)
    assert net.count == net.points.size
    assert np.max(np.abs(net.points)) == pytest.approx(radius_at_depth(5))


def test_build_net_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_net(0.0, 4)
    with pytest.raises(ValueError):
        build_net(0.1, 0)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"  ✓ {name}")
