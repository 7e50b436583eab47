"""
Dyadic Carleson squares
Squares Q_{n,j}, their top halves, polar regions and the sup of |B| over
hyperbolic neighbourhoods of a region
"""

import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .blaschke import BlaschkeProduct, eval_modulus, modulus_upper_bound
from .geometry import add_distance, dist_to_radial, move_from

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi

DEFAULT_BUDGET = 20000


@dataclass(frozen=True)
class PolarRect:
    """Closed polar region {r_lo <= r <= r_hi, theta_lo <= theta <= theta_lo + span}

    r_lo == 0 with a full span is the disk of radius r_hi; r_lo == r_hi with
    zero span is a single point.
    """
    r_lo: float
    r_hi: float
    theta_lo: float
    span: float

    @classmethod
    def point(cls, z: complex) -> "PolarRect":
        r = abs(z)
        return cls(r, r, math.atan2(z.imag, z.real) % TWO_PI, 0.0)

    @property
    def is_disk(self) -> bool:
        return self.r_lo == 0.0 and self.span >= TWO_PI

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        if self.is_disk:
            return r <= self.r_hi
        rel = np.mod(np.angle(z) - self.theta_lo, TWO_PI)
        return (r >= self.r_lo) & (r <= self.r_hi) & (rel <= self.span)

    def dist(self, z) -> np.ndarray:
        """Exact hyperbolic distance from z to the region"""
        z = np.asarray(z, dtype=complex)
        r = np.minimum(np.abs(z), 1.0 - 1e-16)
        t = np.arctanh(r)
        if self.is_disk:
            return np.maximum(0.0, t - math.atanh(min(self.r_hi, 1.0 - 1e-16)))
        rel = np.mod(np.angle(z) - self.theta_lo, TWO_PI)
        inside_span = rel <= self.span
        # same ray: distance along the diameter to the clamped radius
        clamped = np.clip(r, self.r_lo, min(self.r_hi, 1.0 - 1e-16))
        along_ray = np.abs(t - np.arctanh(clamped))
        # otherwise the radial side nearest in angle
        side = np.where(rel - self.span < TWO_PI - rel, self.theta_lo + self.span, self.theta_lo)
        to_side = dist_to_radial(z, side, self.r_lo, min(self.r_hi, 1.0 - 1e-16))
        return np.where(inside_span, along_ray, to_side)

    def center(self) -> complex:
        if self.is_disk:
            return 0j
        t = 0.5 * (math.atanh(self.r_lo) + math.atanh(self.r_hi))
        angle = self.theta_lo + 0.5 * self.span
        return complex(math.tanh(t) * math.cos(angle), math.tanh(t) * math.sin(angle))

    def hyp_radius(self) -> float:
        """Upper bound for the hyperbolic distance from center() to any point

        Path: along the circle through the center to the target angle, then
        along the ray.
        """
        if self.is_disk:
            return math.atanh(self.r_hi)
        radial = 0.5 * (math.atanh(self.r_hi) - math.atanh(self.r_lo))
        rc = abs(self.center())
        return radial + rc / (1.0 - rc * rc) * 0.5 * self.span

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.is_disk:
            r = self.r_hi * np.sqrt(rng.random(count))
            return r * np.exp(1j * rng.uniform(0.0, TWO_PI, count))
        r = rng.uniform(self.r_lo, self.r_hi, count)
        theta = self.theta_lo + rng.uniform(0.0, self.span, count)
        return r * np.exp(1j * theta)


@dataclass(frozen=True, order=True)
class DyadicSquare:
    """Q_{n,j} = {1 - 2^-n < r < 1, 2 pi j 2^-n < theta < 2 pi (j+1) 2^-n}

    Level 0 is the punctured disk, whose top half is {r < 1/2}.
    """
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"level must be non-negative, got {self.level}")
        if not 0 <= self.index < (1 << self.level):
            raise ValueError(f"index {self.index} out of range for level {self.level}")

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def key(self) -> Tuple[int, int]:
        return (self.level, self.index)

    @property
    def theta_lo(self) -> float:
        return TWO_PI * self.index * self.side

    @property
    def span(self) -> float:
        return TWO_PI * self.side

    def region(self) -> PolarRect:
        """Closure of the whole square (the Carleson box)"""
        return PolarRect(1.0 - self.side, 1.0, self.theta_lo, self.span)

    def parent(self) -> Optional["DyadicSquare"]:
        if self.level == 0:
            return None
        return DyadicSquare(self.level - 1, self.index >> 1)

    def contains_square(self, other: "DyadicSquare") -> bool:
        if other.level < self.level:
            return False
        return other.index >> (other.level - self.level) == self.index

    def to_dict(self) -> Dict:
        return {"n": self.level, "j": self.index}


def top_half(Q: DyadicSquare) -> PolarRect:
    """T(Q) = {z in Q : r < 1 - 2^-(n+1)} (closed)"""
    if Q.level == 0:
        return PolarRect(0.0, 0.5, 0.0, TWO_PI)
    return PolarRect(1.0 - Q.side, 1.0 - 0.5 * Q.side, Q.theta_lo, Q.span)


def children(Q: DyadicSquare) -> Tuple[DyadicSquare, DyadicSquare]:
    n = Q.level + 1
    return DyadicSquare(n, 2 * Q.index), DyadicSquare(n, 2 * Q.index + 1)


def tile_of(z: complex) -> Tuple[int, int]:
    """(n, j) of the top half containing z (half-open in depth and angle)"""
    r = abs(z)
    if r < 0.5:
        return (0, 0)
    n = int(math.floor(-math.log2(1.0 - r)))
    n = max(n, 1)
    # guard the floor against rounding at the circles 1 - 2^-n
    while n > 1 and r < 1.0 - 2.0 ** (-n):
        n -= 1
    while r >= 1.0 - 2.0 ** (-(n + 1)):
        n += 1
    theta = math.atan2(z.imag, z.real) % TWO_PI
    j = int(theta / TWO_PI * (1 << n)) % (1 << n)
    return (n, j)


@dataclass(frozen=True)
class CarlesonSquare:
    """{0 < 1 - r < side, |theta - center_angle| < pi side}"""
    center_angle: float
    side: float

    def dilate(self, factor: float) -> "CarlesonSquare":
        """Same center angle, side multiplied by factor and capped at 1"""
        return CarlesonSquare(self.center_angle, min(self.side * factor, 1.0))

    def angular_deviation(self, theta) -> np.ndarray:
        d = np.mod(np.asarray(theta, dtype=float) - self.center_angle + math.pi, TWO_PI) - math.pi
        return np.abs(d)

    def contains(self, z, closed: bool = False) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        depth = 1.0 - np.abs(z)
        dev = self.angular_deviation(np.angle(z))
        if closed or self.side >= 1.0:
            return (depth <= self.side) & (dev <= math.pi * self.side)
        return (depth > 0) & (depth < self.side) & (dev < math.pi * self.side)

    def contains_extent(self, min_radius: float, max_deviation: float) -> bool:
        """Whether a set with the given innermost radius and angular spread lies inside

        Inequalities are closed; at side 1 the square is the whole disk.
        """
        if self.side >= 1.0:
            return True
        return 1.0 - min_radius <= self.side and max_deviation <= math.pi * self.side


# ---------------------------------------------------------------------------
# sup |B| over Omega_K(E)

@dataclass
class SupBracket:
    """Certified lower value (attained) and upper bound for sup |B| over Omega_K(E)"""
    lower: float
    upper: float
    argmax: complex
    evaluated: int
    exhausted: bool


def _cell_geometry(center: complex, t0, t1, a0, a1):
    tm = 0.5 * (t0 + t1)
    am = 0.5 * (a0 + a1)
    points = move_from(center, np.tanh(tm) * np.exp(1j * am))
    radius = 0.5 * (t1 - t0) + 0.5 * np.sinh(2.0 * t1) * 0.5 * (a1 - a0)
    return np.atleast_1d(points), np.atleast_1d(radius)


def bracket_sup(B: BlaschkeProduct, E: PolarRect, K: float, mesh: float,
                good_above: Optional[float] = None, bad_below: Optional[float] = None,
                inclusion_slack: float = 0.0, budget: int = DEFAULT_BUDGET) -> SupBracket:
    """Branch and bound for sup{|B(z)| : beta(z, E) <= K}

    Cells are hyperbolic-polar boxes around the center of E, covering the
    ball of radius K + radius(E). A cell's bound is the smaller of the
    Schwarz-Pick bound at its center and the product of per-zero triangle
    bounds. Only centers within K + inclusion_slack of E count towards the
    lower value.

    With good_above/bad_below set, the search stops as soon as the bracket
    decides "> good_above" or "< bad_below" (or neither can hold). Without
    them it refines until upper - lower <= tanh(mesh).
    """
    values, counts = B.grouped_zeros()
    tol = math.tanh(mesh)
    full = good_above is None and bad_below is None
    c = E.center()
    R = K + E.hyp_radius()

    lower = float(eval_modulus(B, c))
    argmax = complex(c)
    leaf_upper = 0.0
    discarded_upper = 0.0
    evaluated = 1

    def relevant(U: float) -> bool:
        if full:
            return U > lower + tol
        if good_above is not None and U > good_above:
            return True
        return bad_below is not None and lower < bad_below and U >= bad_below

    def decided(upper: float) -> bool:
        if full:
            return upper <= lower + tol
        if good_above is not None and lower > good_above:
            return True
        if bad_below is not None and upper < bad_below:
            return True
        not_good = good_above is None or upper <= good_above
        not_bad = bad_below is None or lower >= bad_below
        return not_good and not_bad

    heap = []
    counter = itertools.count()

    def evaluate(cells):
        nonlocal lower, argmax, leaf_upper, discarded_upper, evaluated
        t0 = np.array([cell[0] for cell in cells])
        t1 = np.array([cell[1] for cell in cells])
        a0 = np.array([cell[2] for cell in cells])
        a1 = np.array([cell[3] for cell in cells])
        points, radii = _cell_geometry(c, t0, t1, a0, a1)
        evaluated += len(cells)
        dist = np.atleast_1d(E.dist(points))
        moduli = np.atleast_1d(eval_modulus(B, points))
        tau = np.tanh(radii)
        upper = np.minimum(
            modulus_upper_bound(values, counts, points, tau),
            np.minimum(add_distance(moduli, tau), 1.0),
        )
        for i, cell in enumerate(cells):
            if dist[i] - radii[i] > K:
                continue
            if dist[i] <= K + inclusion_slack and moduli[i] > lower:
                lower = float(moduli[i])
                argmax = complex(points[i])
            if radii[i] <= mesh:
                leaf_upper = max(leaf_upper, float(upper[i]))
            else:
                heapq.heappush(heap, (-float(upper[i]), next(counter), cell))

    if R > 0:
        evaluate([(0.0, R, 0.0, TWO_PI)])

    exhausted = False
    while True:
        top = -heap[0][0] if heap else 0.0
        upper = max(top, leaf_upper, discarded_upper, lower)
        if not heap or decided(upper):
            break
        if evaluated >= budget:
            exhausted = True
            break
        neg_u, _, cell = heapq.heappop(heap)
        if not relevant(-neg_u):
            discarded_upper = max(discarded_upper, -neg_u)
            continue
        t0, t1, a0, a1 = cell
        radial_part = 0.5 * (t1 - t0)
        angular_part = 0.5 * math.sinh(2.0 * t1) * 0.5 * (a1 - a0)
        if radial_part >= angular_part:
            tm = 0.5 * (t0 + t1)
            evaluate([(t0, tm, a0, a1), (tm, t1, a0, a1)])
        else:
            am = 0.5 * (a0 + a1)
            evaluate([(t0, t1, a0, am), (t0, t1, am, a1)])

    top = -heap[0][0] if heap else 0.0
    upper = max(top, leaf_upper, discarded_upper, lower)
    if exhausted:
        logger.debug("sup bracket budget exhausted at %d cells: [%g, %g]", evaluated, lower, upper)
    return SupBracket(lower=lower, upper=min(upper, 1.0), argmax=argmax, evaluated=evaluated, exhausted=exhausted)


def omega_K_sup(B: BlaschkeProduct, E: PolarRect, K: float, mesh: float,
                budget: int = DEFAULT_BUDGET) -> float:
    """Net estimate of sup{|B(z)| : beta(z, E) <= K}

    The value is attained at a point within K + mesh of E and is at least the
    true sup minus tanh(mesh) unless the cell budget runs out.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    return omega_K_bracket(B, E, K, mesh, budget).lower


def omega_K_bracket(B: BlaschkeProduct, E: PolarRect, K: float, mesh: float,
                    budget: int = DEFAULT_BUDGET) -> SupBracket:
    return bracket_sup(B, E, K, mesh, inclusion_slack=mesh, budget=budget)


def square_box_distance(Q: DyadicSquare, points: np.ndarray) -> np.ndarray:
    """Hyperbolic distance from points to the closed Carleson box of Q"""
    if Q.level == 0:
        return np.zeros(np.asarray(points).shape)
    return Q.region().dist(points)

