#!/usr/bin/env python3
"""
Tests for dyadic squares, Carleson squares and the sup bracket over Omega_K(E)
"""

import math

import numpy as np
import pytest

from core.blaschke import BlaschkeProduct
from core.dyadic import (
    CarlesonSquare,
    DyadicSquare,
    PolarRect,
    bracket_sup,
    children,
    omega_K_bracket,
    omega_K_sup,
    square_box_distance,
    tile_of,
    top_half,
)
from core.geometry import hyp_dist


def test_square_hierarchy():
    Q = DyadicSquare(3, 5)
    assert Q.side == 0.125
    assert Q.parent() == DyadicSquare(2, 2)
    a, b = children(Q)
    assert (a.key, b.key) == ((4, 10), (4, 11))
    assert Q.contains_square(a) and not a.contains_square(Q)
    assert DyadicSquare(0, 0).parent() is None
    with pytest.raises(ValueError):
        DyadicSquare(2, 4)


def test_top_halves():
    root = top_half(DyadicSquare(0, 0))
    assert root.is_disk and root.r_hi == 0.5
    T = top_half(DyadicSquare(2, 1))
    assert (T.r_lo, T.r_hi) == (0.75, 0.875)
    assert T.theta_lo == pytest.approx(math.pi / 2)
    assert T.span == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("z, tile", [
    (0.3, (0, 0)),
    (0.6, (1, 0)),
    (-0.6, (1, 1)),
    (0.8, (2, 0)),
    (0.5, (1, 0)),
    (0.75, (2, 0)),
    (0.9 * np.exp(1j * 3 * math.pi / 2 + 1e-9j), (3, 6)),
])
def test_tile_of(z, tile):
    assert tile_of(complex(z)) == tile


def test_polar_rect_distance():
    disk = PolarRect(0.0, 0.5, 0.0, 2 * math.pi)
    assert float(disk.dist(0.2)) == 0.0
    assert float(disk.dist(0.8)) == pytest.approx(math.atanh(0.8) - math.atanh(0.5))
    rect = top_half(DyadicSquare(2, 0))
    assert float(rect.dist(0.95)) == pytest.approx(math.atanh(0.95) - math.atanh(0.875))
    # brute force against a dense sample of the rectangle
    z = 0.9 * np.exp(2.5j)
    r = np.linspace(rect.r_lo, rect.r_hi, 300)
    t = np.linspace(rect.theta_lo, rect.theta_lo + rect.span, 300)
    grid = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    brute = float(np.min(hyp_dist(z, grid)))
    assert float(rect.dist(z)) <= brute + 1e-12
    assert brute - float(rect.dist(z)) < 1e-3


def test_carleson_square_membership():
    q = CarlesonSquare(0.0, 0.25)
    assert bool(q.contains(0.9))
    assert not bool(q.contains(0.7))
    assert bool(q.contains(0.75, closed=True))
    assert not bool(q.contains(0.75))
    assert q.dilate(8.0).side == 1.0
    assert q.contains_extent(0.8, 0.5)
    assert not q.contains_extent(0.7, 0.5)
    assert not q.contains_extent(0.8, math.pi / 2)
    assert CarlesonSquare(1.0, 1.0).contains_extent(0.0, math.pi)


def test_box_distance():
    Q = DyadicSquare(2, 0)
    d = square_box_distance(Q, np.array([0.9, 0.5, -0.9]))
    assert d[0] == 0.0
    assert d[1] == pytest.approx(math.atanh(0.75) - math.atanh(0.5))
    assert d[2] > 1.0
    assert np.all(square_box_distance(DyadicSquare(0, 0), np.array([0.1, 0.99])) == 0.0)


def test_sup_of_constant_product():
    B = BlaschkeProduct()
    bracket = omega_K_bracket(B, top_half(DyadicSquare(1, 0)), 1.0, 0.1)
    assert bracket.lower == 1.0 and bracket.upper == 1.0


def test_sup_bracket_single_zero():
    """A zero at the center of E: points at distance K from it lie in Omega_K(E)"""
    E = top_half(DyadicSquare(2, 0))
    B = BlaschkeProduct.from_zeros([E.center()])
    K, mesh = 1.0, 0.1
    bracket = omega_K_bracket(B, E, K, mesh)
    assert not bracket.exhausted
    assert bracket.upper >= math.tanh(K) - 1e-12
    assert bracket.lower >= math.tanh(K) - math.tanh(mesh)
    assert bracket.lower <= bracket.upper
    assert bracket.upper - bracket.lower <= math.tanh(mesh) + 1e-12
    assert omega_K_sup(B, E, K, mesh) == bracket.lower


def test_sup_rejects_negative_radius():
    with pytest.raises(ValueError):
        omega_K_sup(BlaschkeProduct(), top_half(DyadicSquare(1, 0)), -1.0, 0.1)


def test_bracket_decides_targets():
    """z^50 over Omega_1 of the level-3 top halves peaks near 0.646"""
    B = BlaschkeProduct(origin_multiplicity=50)
    good = bracket_sup(B, top_half(DyadicSquare(3, 0)), 1.0, 0.1, good_above=0.5)
    assert good.lower > 0.5
    bad = bracket_sup(B, top_half(DyadicSquare(0, 0)), 1.0, 0.1, bad_below=0.125)
    assert bad.upper < 0.125


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
