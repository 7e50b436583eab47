"""
Zero-set generators for experiment corpora
Spec strings look like "cluster:200,0.9,0.5" or "radial:10,0.5"
"""

import logging
import math
from typing import Callable, Dict, List

import numpy as np

from .blaschke import BlaschkeProduct
from .geometry import move_from, to_disk_point

logger = logging.getLogger(__name__)


def cluster(rng: np.random.Generator, count: int, center: complex = 0.9, radius: float = 0.5) -> np.ndarray:
    """Points within hyperbolic distance `radius` of `center`"""
    center = to_disk_point(center)
    if radius <= 0:
        raise ValueError(f"cluster radius must be positive, got {radius}")
    t = radius * np.sqrt(rng.random(count))
    zeta = np.tanh(t) * np.exp(2j * np.pi * rng.random(count))
    return np.asarray(move_from(center, zeta), dtype=complex)


def radial(rng: np.random.Generator, count: int, ratio: float = 0.5) -> np.ndarray:
    """r_k = 1 - ratio^k on the positive axis, k = 1..count"""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    k = np.arange(1, count + 1)
    return (1.0 - ratio ** k).astype(complex)


def uniform(rng: np.random.Generator, count: int, max_depth: float = 8.0) -> np.ndarray:
    """Depth 1 - |z| = 2^-d with d uniform in [0, max_depth], angle uniform"""
    if max_depth <= 0:
        raise ValueError(f"max_depth must be positive, got {max_depth}")
    r = 1.0 - 2.0 ** (-rng.uniform(0.0, max_depth, count))
    return r * np.exp(2j * np.pi * rng.random(count))


def curve(rng: np.random.Generator, count: int, radius: float = 0.9, span: float = math.pi) -> np.ndarray:
    """One point per equal slot of the arc {radius e^{it}: 0 <= t < span}, jittered within its slot"""
    if not 0.0 < radius < 1.0:
        raise ValueError(f"radius must lie in (0, 1), got {radius}")
    slot = span / count
    theta = slot * (np.arange(count) + rng.random(count))
    return radius * np.exp(1j * theta)


GENERATORS: Dict[str, Callable] = {
    "cluster": cluster,
    "radial": radial,
    "uniform": uniform,
    "curve": curve,
}


def parse_spec(spec: str):
    """"name:count,arg,..." -> (name, count, [args])"""
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    parts = [p.strip() for p in rest.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"generator {name!r} needs a count")
    count = int(parts[0])
    args: List = []
    for p in parts[1:]:
        value = complex(p.replace("i", "j"))
        args.append(value.real if value.imag == 0 else value)
    return name, count, args


def generate(spec: str, seed: int = 0) -> BlaschkeProduct:
    """Deterministic zero set for a generator spec"""
    name, count, args = parse_spec(spec)
    if count <= 0:
        raise ValueError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    zeros = GENERATORS[name](rng, count, *args)
    logger.info("generated %d zeros with %s (seed %d)", count, spec, seed)
    return BlaschkeProduct.from_zeros(zeros)
