#!/usr/bin/env python3
"""
Quick test that the modulus approximation modules import and agree on a tiny case
"""

import importlib

import numpy as np

MODULES = [
    "core.geometry",
    "core.blaschke",
    "core.dyadic",
    "core.contour",
    "core.harmonic_measure",
    "core.discretize",
    "core.verify",
    "core.config_manager",
    "core.generator",
    "core.pipeline",
    "core.render",
    "modulus_approx",
]


def test_modules_import():
    for name in MODULES:
        assert importlib.import_module(name) is not None, name


def test_tiny_product():
    from core.blaschke import BlaschkeProduct, eval_modulus

    B = BlaschkeProduct.from_zeros([0.5, -0.5])
    assert B.degree == 2
    assert abs(eval_modulus(B, np.array([0.0]))[0] - 0.25) < 1e-12


def test_cli_parser_knows_subcommands():
    import modulus_approx

    assert set(modulus_approx.COMMANDS) == {"generate", "contour", "discretize", "verify", "run", "render"}


if __name__ == "__main__":
    print("🧪 Quick checks")
    print("=" * 40)
    success = True
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"✅ {name}")
            except Exception as e:
                print(f"❌ {name}: {e}")
                success = False
    print("\n🎉 All quick checks passed!" if success else "\n❌ Some checks failed. See above.")
