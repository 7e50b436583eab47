#!/usr/bin/env python3
"""
Tests for finite Blaschke products: evaluation, zero-set files and witnesses
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.blaschke import (
    BlaschkeProduct,
    ZeroHitError,
    ZeroSetFormatError,
    eval_modulus,
    find_witness,
    log_modulus,
    modulus_upper_bound,
)
from core.geometry import move_from


def random_product(seed: int, count: int, max_radius: float = 0.9) -> BlaschkeProduct:
    rng = np.random.default_rng(seed)
    r = max_radius * np.sqrt(rng.random(count))
    return BlaschkeProduct.from_zeros(r * np.exp(2j * np.pi * rng.random(count)))


@given(st.integers(0, 10_000), st.integers(1, 60))
@settings(max_examples=50, deadline=None)
def test_modulus_at_origin_is_product_of_moduli(seed, count):
    B = random_product(seed, count)
    expected = float(np.prod(np.abs(B.all_zeros())))
    assert eval_modulus(B, 0.0) == pytest.approx(expected, rel=1e-10, abs=1e-300)


def test_log_space_and_direct_products_agree():
    """Degree above the log-space threshold uses sums of logs"""
    B = random_product(1, 80)
    z = np.array([0.1 + 0.2j, -0.5j, 0.93])
    direct = np.ones(z.shape)
    for a in B.all_zeros():
        direct *= np.abs((a - z) / (1 - np.conj(a) * z))
    assert np.allclose(eval_modulus(B, z), direct, rtol=1e-10, atol=0.0)
    assert np.allclose(log_modulus(B, z), np.log(direct), rtol=1e-10)


def test_modulus_is_one_without_zeros():
    B = BlaschkeProduct()
    assert B.degree == 0
    assert eval_modulus(B, 0.7j) == 1.0
    assert log_modulus(B, 0.7j) == 0.0


def test_log_modulus_raises_at_a_zero():
    B = BlaschkeProduct.from_zeros([0.5, 0.0])
    with pytest.raises(ZeroHitError):
        log_modulus(B, 0.5)
    assert eval_modulus(B, 0.5) == 0.0


def test_from_zeros_moves_origin_into_power():
    B = BlaschkeProduct.from_zeros([0.0, 0.3, 0.0])
    assert B.origin_multiplicity == 2
    assert B.zeros.tolist() == [0.3 + 0j]
    values, counts = B.grouped_zeros()
    assert values.tolist() == [0j, 0.3 + 0j]
    assert counts.tolist() == [2, 1]


def test_invalid_zeros_rejected():
    with pytest.raises(ValueError):
        BlaschkeProduct(zeros=np.array([1.0 + 0j]))
    with pytest.raises(ValueError):
        BlaschkeProduct(zeros=np.array([0j]))


def test_zero_set_file_roundtrip(tmp_path):
    B = BlaschkeProduct(origin_multiplicity=3, zeros=np.array([0.5, 0.5, -0.25j]), unimodular_constant=1.0)
    path = B.save(tmp_path / "zeros.json")
    data = json.loads(path.read_text())
    assert data["schema_version"] == 1
    assert {"re": 0.5, "im": 0.0, "multiplicity": 2} in data["zeros"]
    loaded = BlaschkeProduct.load(path)
    assert loaded.degree == 6
    assert loaded.origin_multiplicity == 3
    assert sorted(loaded.zeros.tolist(), key=lambda z: (z.real, z.imag)) == [-0.25j, 0.5 + 0j, 0.5 + 0j]
    assert loaded.unimodular_constant == pytest.approx(1.0)


@pytest.mark.parametrize("payload", [
    "not json",
    json.dumps({"zeros": [{"re": 1.2, "im": 0.0}]}),
    json.dumps({"zeros": [{"re": 0.1}]}),
    json.dumps({"zeros": [{"re": 0.1, "im": 0.0, "multiplicity": 0}]}),
    json.dumps({"schema_version": 2, "zeros": []}),
    json.dumps([0.1, 0.2]),
])
def test_malformed_zero_files(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    with pytest.raises(ZeroSetFormatError):
        BlaschkeProduct.load(path)


def test_upper_bound_dominates_on_balls():
    B = random_product(7, 20)
    values, counts = B.grouped_zeros()
    rng = np.random.default_rng(3)
    centers = 0.8 * np.sqrt(rng.random(30)) * np.exp(2j * np.pi * rng.random(30))
    tau = 0.3
    bound = modulus_upper_bound(values, counts, centers, np.full(centers.shape, tau))
    for c, u in zip(centers, bound):
        ball = move_from(c, tau * np.sqrt(rng.random(200)) * np.exp(2j * np.pi * rng.random(200)))
        assert np.max(eval_modulus(B, ball)) <= u + 1e-12


def test_witness_on_first_qualifying_ring():
    B = BlaschkeProduct(origin_multiplicity=1)
    point, distance, value = find_witness(B, 0j, 0.5, 1.0, 0.1)
    # first ring with tanh(t) > 1/2
    assert distance == pytest.approx(0.6)
    assert value == pytest.approx(math.tanh(0.6))
    assert abs(point) == pytest.approx(math.tanh(0.6))


def test_witness_missing_within_radius():
    B = BlaschkeProduct(origin_multiplicity=1)
    point, distance, value = find_witness(B, 0j, 0.99, 1.0, 0.1)
    assert point is None and distance is None
    assert value == pytest.approx(math.tanh(1.0))


def test_witness_between_sixteen_directions():
    """|B| stays below the threshold along the 16 directions of the zeros and rises between them

    With zeros a w^k, w = exp(2 pi i / 16), |B(z)| = |z^16 - a^16| / |1 - a^16 z^16|.
    """
    a = 0.3 ** (1 / 16)
    B = BlaschkeProduct.from_zeros(a * np.exp(2j * np.pi * np.arange(16) / 16))
    radius = math.atanh(a)
    for t in np.arange(0.1, radius, 0.1):
        on_ray = eval_modulus(B, math.tanh(t) * np.exp(2j * np.pi * np.arange(16) / 16))
        assert np.all(on_ray <= 0.3 + 1e-12)
    point, distance, value = find_witness(B, 0j, 0.4, radius, 0.1)
    assert point is not None
    assert distance == pytest.approx(1.4)
    assert value > 0.4
    slot = (np.angle(point) % (2 * math.pi)) / (2 * math.pi / 16)
    assert abs(slot - round(slot)) > 0.1


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
