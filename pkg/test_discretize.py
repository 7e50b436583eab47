#!/usr/bin/env python3
"""
Tests for cutting boundary measures into unit arcs and placing one zero per arc
"""

import math

import numpy as np
import pytest

from core.contour import Contour, ContourParams, component_from_tiles
from core.discretize import (
    ArcSegment,
    DiscretizationResult,
    discretize,
    discretize_component,
    length_floor,
    length_floor_log,
    odd_even_factor,
    place_zero,
    split_component,
    sub_edges,
    weight_primitive,
)
from core.blaschke import eval_modulus
from core.harmonic_measure import BoundaryMeasure, bin_edges_for, disk_poisson_measure

DISK_TILES = [(0, 0), (1, 0), (1, 1)] + [(2, j) for j in range(4)]
RADIUS = 0.875


def uniform_disk_measure(total: float):
    disk = component_from_tiles(DISK_TILES)
    exact = disk_poisson_measure(RADIUS, 0j, bin_edges_for(disk.arclength))
    return disk, BoundaryMeasure(0, exact.bin_edges, total * exact.bin_masses, {"name": "Poisson"})


def test_cuts_split_mass_evenly():
    disk, measure = uniform_disk_measure(4.0)
    cuts = split_component(disk, measure)
    L = disk.arclength
    assert np.allclose(cuts, [L / 4, L / 2, 3 * L / 4], atol=1e-9)


def test_cuts_require_integer_total():
    disk, measure = uniform_disk_measure(2.5)
    with pytest.raises(ValueError):
        split_component(disk, measure)
    disk, empty = uniform_disk_measure(0.0)
    assert split_component(disk, empty) == []
    assert discretize_component(disk, empty) == []


def test_arcs_on_a_circle():
    disk, measure = uniform_disk_measure(4.0)
    arcs = discretize_component(disk, measure)
    assert [a.index for a in arcs] == [1, 2, 3, 4]
    for a in arcs:
        assert abs(a.mass - 1.0) < 1e-9
        assert a.moment_residual < 1e-6
        # every point of the arc has the target radius; the first one is used
        assert abs(a.placed_zero) == pytest.approx(RADIUS)
        assert abs(a.placed_zero - disk.point_at(a.s_lo)) < 1e-9
        assert a.hyp_length == pytest.approx((disk.arclength / 4) / (1 - RADIUS ** 2))
    assert arcs[0].placed_zero == pytest.approx(RADIUS)


def test_zero_on_a_ray_in_closed_form():
    """All mass on the ray from 1/2 to 3/4: 1 - r^2 = 1 - (r1^2 + r1 r2 + r2^2) / 3"""
    tile = component_from_tiles([(1, 0)])
    measure = BoundaryMeasure(0, [0.0, 0.25, tile.arclength], [1.0, 0.0], {"name": "test"})
    xi, s, target, residual = place_zero(tile, measure, 0.0, tile.arclength)
    expected_radius = math.sqrt((0.25 + 0.375 + 0.5625) / 3)
    assert target == pytest.approx(1 - (0.25 + 0.375 + 0.5625) / 3)
    assert xi == pytest.approx(expected_radius)
    assert s == pytest.approx(expected_radius - 0.5)
    assert residual < 1e-12


def test_weight_primitive_on_a_ray():
    tile = component_from_tiles([(1, 0)])
    g = weight_primitive(tile, [0.0, 0.25])
    expected = (0.75 - 0.75 ** 3 / 3) - (0.5 - 0.5 ** 3 / 3)
    assert g[0] == 0.0
    assert g[1] == pytest.approx(expected)


def test_sub_edges_cover_interval():
    disk = component_from_tiles(DISK_TILES)
    L = disk.arclength
    pieces = sub_edges(disk, 0.1 * L, 0.6 * L)
    assert sum(e.length for e in pieces) == pytest.approx(0.5 * L)
    assert pieces[0].start == pytest.approx(disk.point_at(0.1 * L))


def test_odd_even_split():
    disk, measure = uniform_disk_measure(4.0)
    arcs = discretize_component(disk, measure)
    odd, even = odd_even_factor(arcs)
    assert odd.degree == 2 and even.degree == 2
    result = DiscretizationResult(arcs, 0.125, 1)
    z = np.array([0.1, 0.95j, -0.5 + 0.3j])
    assert np.allclose(eval_modulus(result.i1, z), eval_modulus(odd, z) * eval_modulus(even, z))
    single = odd_even_factor(arcs[:1])
    assert single[0].degree == 1 and single[1].degree == 0


def test_length_floor():
    assert length_floor_log(0.5, 0) == pytest.approx(2 * math.exp(28) * math.log(0.5))
    assert length_floor_log(0.6, 0) > length_floor_log(0.5, 0)
    assert length_floor_log(0.5, 1) < length_floor_log(0.5, 0)
    assert length_floor(0.5, 0) == 0.0


def test_result_summary_and_roundtrip():
    disk, measure = uniform_disk_measure(4.0)
    contour = Contour([disk], ContourParams(epsilon=0.5, N=1))
    result = discretize(contour, {0: measure})
    summary = result.summary()
    assert summary["arc_count"] == 4
    assert summary["floor_holds"]
    assert summary["i1_odd_zeros"] == 2
    again = DiscretizationResult.from_dict(result.to_dict())
    assert np.allclose(again.i1.all_zeros(), result.i1.all_zeros())
    assert again.N == 1 and again.delta == result.delta


def test_zero_length_arc_misses_floor():
    disk, measure = uniform_disk_measure(4.0)
    arcs = discretize_component(disk, measure)
    flat = ArcSegment(0, len(arcs), 1.0, 1.0, 1.0, 0.0, 0.5 + 0j, 1.0, 0.0, 0.0)
    summary = DiscretizationResult(arcs + [flat], 0.125, 1).summary()
    assert summary["min_hyp_length"] == 0.0
    assert not summary["floor_holds"]


def test_components_without_measure_are_skipped():
    disk = component_from_tiles(DISK_TILES)
    contour = Contour([disk], ContourParams(epsilon=0.5, N=1))
    result = discretize(contour, {})
    assert result.arcs == []
    assert result.i1.degree == 0
    assert result.summary()["floor_holds"]


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
