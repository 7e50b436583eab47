"""
Hyperbolic geometry of the unit disk
Pseudohyperbolic and hyperbolic distances, disk automorphisms, hyperbolic nets
and exact distances from points to the polar pieces contours are made of
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

logger = logging.getLogger(__name__)

# Largest modulus a computed disk point may take before it is pulled back inside.
EDGE_OF_DISK = 1.0 - 1e-15

ArrayLike = Union[complex, float, np.ndarray]


class DiskPointError(ValueError):
    """Raised when a point is not strictly inside the unit disk"""


def to_disk_point(z) -> complex:
    """Validate and convert a number (or (re, im) pair) to a disk point"""
    if isinstance(z, (tuple, list)):
        if len(z) != 2:
            raise DiskPointError(f"expected (re, im), got {z!r}")
        z = complex(float(z[0]), float(z[1]))
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DiskPointError(f"non-finite point {z!r}")
    if abs(z) >= 1.0:
        raise DiskPointError(f"point {z!r} is not inside the unit disk")
    return z


def pseudo_dist(z: ArrayLike, w: ArrayLike) -> ArrayLike:
    """|(z - w) / (1 - conj(w) z)|, broadcasting over arrays"""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    rho = np.abs(z - w) / np.abs(1.0 - np.conj(w) * z)
    rho = np.minimum(rho, EDGE_OF_DISK)
    return rho if rho.ndim else float(rho)


def hyp_dist(z: ArrayLike, w: ArrayLike) -> ArrayLike:
    """Hyperbolic distance artanh(rho(z, w))"""
    return np.arctanh(pseudo_dist(z, w))


def mobius_to_origin(a: complex) -> Callable[[ArrayLike], ArrayLike]:
    """The automorphism z -> (a - z) / (1 - conj(a) z), sending a to 0"""
    a = to_disk_point(a)
    ac = a.conjugate()

    def phi(z):
        z = np.asarray(z, dtype=complex)
        out = (a - z) / (1.0 - ac * z)
        return out if out.ndim else complex(out)

    return phi


def move_from(center: complex, zeta: ArrayLike) -> ArrayLike:
    """Image of zeta under the automorphism taking 0 to center

    beta(center, move_from(center, zeta)) == artanh|zeta|, so a point at
    hyperbolic distance t from center in direction phi is
    move_from(center, tanh(t) * exp(1j * phi)).
    """
    zeta = np.asarray(zeta, dtype=complex)
    w = (center + zeta) / (1.0 + np.conj(center) * zeta)
    return clip_to_disk(w)


def clip_to_disk(w: ArrayLike) -> ArrayLike:
    w = np.asarray(w, dtype=complex)
    mod = np.abs(w)
    scale = np.where(mod > EDGE_OF_DISK, EDGE_OF_DISK / np.maximum(mod, EDGE_OF_DISK), 1.0)
    out = w * scale
    return out if out.ndim else complex(out)


def add_distance(rho: ArrayLike, t: float) -> ArrayLike:
    """Upper bound for rho(z, w) when rho(c, w) = rho and rho(z, c) <= t

    Strong triangle inequality of the pseudohyperbolic metric.
    """
    rho = np.asarray(rho, dtype=float)
    return (rho + t) / (1.0 + rho * t)


def radius_at_depth(depth: float) -> float:
    """Radius of the circle with 1 - r = 2^-depth"""
    return 1.0 - 2.0 ** (-depth)


# ---------------------------------------------------------------------------
# Exact distances to polar pieces

def dist_to_radial(z: ArrayLike, angle: ArrayLike, r_lo: ArrayLike, r_hi: ArrayLike) -> np.ndarray:
    """Hyperbolic distance from z to the radial segment {r e^{i angle}: r_lo <= r <= r_hi}

    The segment lies on a diameter, which is a geodesic, so the closest point
    is the foot of the perpendicular geodesic clamped to the segment.
    """
    z = np.asarray(z, dtype=complex)
    angle = np.asarray(angle, dtype=float)
    w = z * np.exp(-1j * angle)
    x = w.real
    norm2 = np.abs(w) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (norm2 + 1.0) / (2.0 * x)
        foot = a - np.sign(a) * np.sqrt(np.maximum(a * a - 1.0, 0.0))
    foot = np.where(np.abs(x) < 1e-300, 0.0, foot)
    foot = np.clip(foot, r_lo, r_hi)
    return np.arctanh(np.minimum(pseudo_dist_array(w, foot), EDGE_OF_DISK))


def dist_to_circle_arc(z: ArrayLike, radius: ArrayLike, start: ArrayLike, span: ArrayLike) -> np.ndarray:
    """Hyperbolic distance from z to the arc {radius e^{i t}: start <= t <= start + span}

    For a fixed radius rho(z, r e^{it}) grows with the angular gap, so the
    closest point is at z's own angle when it falls inside the span and
    otherwise at the nearer endpoint.
    """
    z = np.asarray(z, dtype=complex)
    radius = np.asarray(radius, dtype=float)
    start = np.asarray(start, dtype=float)
    span = np.asarray(span, dtype=float)
    rel = np.mod(np.angle(z) - start, 2 * np.pi)
    past_end = rel - span
    before_start = 2 * np.pi - rel
    target = np.where(
        rel <= span,
        np.angle(z),
        np.where(past_end < before_start, start + span, start),
    )
    nearest = radius * np.exp(1j * target)
    return np.arctanh(np.minimum(pseudo_dist_array(z, nearest), EDGE_OF_DISK))


def pseudo_dist_array(z: ArrayLike, w: ArrayLike) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.abs(z - w) / np.abs(1.0 - np.conj(w) * z)


# ---------------------------------------------------------------------------
# Nets

@dataclass(frozen=True)
class HyperbolicNet:
    """Finite point set covering {1 - |z| >= 2^-depth_limit} at hyperbolic mesh"""
    mesh: float
    points: np.ndarray
    depth_limit: int

    @property
    def count(self) -> int:
        return int(self.points.size)


def circle_count(radius: float, mesh: float) -> int:
    """Points on a circle so that neighbours are at most `mesh` apart

    The hyperbolic arc length between neighbours, 2 pi r / (n (1 - r^2)),
    bounds their distance. The count is rounded up to a power of two so that
    halving the mesh exactly doubles it.
    """
    if radius <= 0.0:
        return 1
    needed = 2 * math.pi * radius / (mesh * (1.0 - radius * radius))
    return 1 << max(0, math.ceil(math.log2(max(needed, 1.0))))


def net_radii(mesh: float, depth_limit: int) -> np.ndarray:
    """Circle radii with hyperbolic spacing `mesh`, ending at 1 - 2^-depth_limit"""
    outer = radius_at_depth(depth_limit)
    t_outer = math.atanh(outer)
    steps = np.arange(0.0, t_outer, mesh)
    radii = np.tanh(steps)
    if radii.size == 0 or radii[-1] < outer:
        radii = np.append(radii, outer)
    return radii


def build_net(mesh: float, depth_limit: int) -> HyperbolicNet:
    """Concentric-circle net of the disk truncated at depth `depth_limit`

    Every point within the truncation is at most mesh/2 from a circle
    radially and at most mesh/2 from a net point along that circle.
    """
    if not mesh > 0:
        raise ValueError(f"mesh must be positive, got {mesh}")
    if depth_limit < 1:
        raise ValueError(f"depth_limit must be at least 1, got {depth_limit}")

    chunks = []
    for r in net_radii(mesh, depth_limit):
        n = circle_count(float(r), mesh)
        if n == 1:
            chunks.append(np.array([complex(r, 0.0)]))
        else:
            theta = 2 * np.pi * np.arange(n) / n
            chunks.append(r * np.exp(1j * theta))
    points = np.concatenate(chunks)
    logger.debug("net mesh=%s depth=%s has %d points", mesh, depth_limit, points.size)
    return HyperbolicNet(mesh=float(mesh), points=points, depth_limit=int(depth_limit))


def random_disk_points(rng: np.random.Generator, count: int, depth_limit: int) -> np.ndarray:
    """Random points with depth 1 - |z| >= 2^-depth_limit, spread over scales"""
    depth = rng.uniform(0.0, depth_limit, count)
    radius = np.where(rng.random(count) < 0.1, rng.uniform(0.0, 0.5, count), 1.0 - 2.0 ** (-depth))
    theta = rng.uniform(0.0, 2 * np.pi, count)
    return radius * np.exp(1j * theta)
