"""
Discretization of boundary measures
Cuts each component into arcs of unit measure, places one zero per arc by
1 - |xi|^2 = integral of (1 - |.|^2) dmu over the arc, and splits the result
into odd and even products
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .blaschke import BlaschkeProduct
from .contour import Component, Contour, Edge
from .harmonic_measure import BoundaryMeasure

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# |(1 - |xi|^2) - target| at or below this (relative) counts as a root on an arc edge
ROOT_TOLERANCE = 1e-12


@dataclass
class ArcSegment:
    component_id: int
    index: int
    s_lo: float
    s_hi: float
    mass: float
    hyp_length: float
    placed_zero: complex
    placed_at: float
    moment_target: float
    moment_residual: float

    @property
    def odd(self) -> bool:
        return self.index % 2 == 1

    def to_dict(self) -> Dict:
        return {
            "component_id": self.component_id,
            "k": self.index,
            "s_lo": self.s_lo,
            "s_hi": self.s_hi,
            "mass": self.mass,
            "hyp_length": self.hyp_length,
            "placed_zero": [self.placed_zero.real, self.placed_zero.imag],
            "placed_at": self.placed_at,
            "moment_target": self.moment_target,
            "moment_residual": self.moment_residual,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ArcSegment":
        return cls(
            component_id=data["component_id"],
            index=data["k"],
            s_lo=data["s_lo"],
            s_hi=data["s_hi"],
            mass=data["mass"],
            hyp_length=data["hyp_length"],
            placed_zero=complex(*data["placed_zero"]),
            placed_at=data["placed_at"],
            moment_target=data["moment_target"],
            moment_residual=data["moment_residual"],
        )


@dataclass
class DiscretizationResult:
    arcs: List[ArcSegment]
    delta: float
    N: int
    i1: BlaschkeProduct = field(init=False)
    i1_odd: BlaschkeProduct = field(init=False)
    i1_even: BlaschkeProduct = field(init=False)

    def __post_init__(self):
        self.i1 = BlaschkeProduct.from_zeros([a.placed_zero for a in self.arcs])
        self.i1_odd, self.i1_even = odd_even_factor(self.arcs)

    @property
    def length_floor(self) -> float:
        return length_floor(self.delta, self.N)

    @property
    def length_floor_log(self) -> float:
        return length_floor_log(self.delta, self.N)

    @property
    def min_hyp_length(self) -> float:
        return min((a.hyp_length for a in self.arcs), default=math.inf)

    @property
    def max_moment_residual(self) -> float:
        return max((a.moment_residual for a in self.arcs), default=0.0)

    @property
    def max_mass_error(self) -> float:
        return max((abs(a.mass - 1.0) for a in self.arcs), default=0.0)

    def arcs_of(self, component_id: int) -> List[ArcSegment]:
        return [a for a in self.arcs if a.component_id == component_id]

    def summary(self) -> Dict:
        min_len = self.min_hyp_length
        floor_log = self.length_floor_log
        return {
            "arc_count": len(self.arcs),
            "max_moment_residual": self.max_moment_residual,
            "max_mass_error": self.max_mass_error,
            "min_hyp_length": None if math.isinf(min_len) else min_len,
            "length_floor": self.length_floor,
            "length_floor_log": floor_log,
            "floor_holds": not self.arcs or (min_len > 0.0 and math.log(min_len) >= floor_log),
            "i1_odd_zeros": self.i1_odd.degree,
            "i1_even_zeros": self.i1_even.degree,
        }

    def to_dict(self) -> Dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "delta": self.delta,
            "N": self.N,
            "arcs": [a.to_dict() for a in self.arcs],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "DiscretizationResult":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported discretization schema_version {data.get('schema_version')}")
        return cls([ArcSegment.from_dict(a) for a in data["arcs"]], data["delta"], data["N"])


# ---------------------------------------------------------------------------
# Arclength geometry of a component

def _weight_cumulative(component: Component) -> np.ndarray:
    """G at edge starts, G(s) = integral_0^s (1 - |xi|^2) ds"""
    parts = [e.weight_integral(0.0, e.length) for e in component.edges]
    return np.concatenate([[0.0], np.cumsum(parts)])


def weight_primitive(component: Component, s, cumulative: Optional[np.ndarray] = None) -> np.ndarray:
    cumulative = _weight_cumulative(component) if cumulative is None else cumulative
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.shape)
    for n, value in enumerate(s):
        i, local = component.edge_at(value)
        out[n] = cumulative[i] + float(component.edges[i].weight_integral(0.0, local))
    return out


def sub_edges(component: Component, s_lo: float, s_hi: float) -> List[Edge]:
    """The pieces of the outer boundary between arclength s_lo and s_hi"""
    out = []
    cum = component.cumulative
    for i, e in enumerate(component.edges):
        a = max(s_lo, cum[i]) - cum[i]
        b = min(s_hi, cum[i + 1]) - cum[i]
        if b <= a:
            continue
        out.append(Edge(e.kind, float(e.radius_at(a)), float(e.radius_at(b)),
                        float(e.angle_at(a)), float(e.angle_at(b))))
    return out


def arc_quadrature(measure: BoundaryMeasure, component: Component, s_lo: float,
                   s_hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and masses of the measure restricted to [s_lo, s_hi)

    Bins cut by the interval end points are split, so nodes sit at the
    midpoints of the overlaps and carry the overlapping share of the mass.
    """
    edges = measure.bin_edges
    width = np.diff(edges)
    lo = np.maximum(edges[:-1], s_lo)
    hi = np.minimum(edges[1:], s_hi)
    keep = (hi > lo) & (measure.bin_masses > 0)
    masses = measure.bin_masses[keep] * (hi[keep] - lo[keep]) / width[keep]
    mids = 0.5 * (lo[keep] + hi[keep])
    points = np.array([component.point_at(s) for s in mids], dtype=complex)
    return points, masses


# ---------------------------------------------------------------------------
# Operations

def split_component(component: Component, measure: BoundaryMeasure) -> List[float]:
    """Cut positions where the cumulative measure crosses 1, 2, ..., M - 1"""
    M = int(round(measure.total))
    if M <= 0:
        return []
    if abs(measure.total - M) > 1e-6 * max(M, 1):
        raise ValueError(f"measure total {measure.total} is not an integer")
    cumulative = measure.cumulative() * (M / measure.total)
    targets = np.arange(1, M, dtype=float)
    upper = np.searchsorted(cumulative, targets, side="left")
    bin_index = upper - 1
    masses = cumulative[upper] - cumulative[bin_index]
    fraction = (targets - cumulative[bin_index]) / masses
    edges = measure.bin_edges
    cuts = edges[bin_index] + fraction * (edges[upper] - edges[bin_index])
    return cuts.tolist()


def moment_target(measure: BoundaryMeasure, component: Component, s_lo: float, s_hi: float,
                  cumulative: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """(integral of (1 - |xi|^2) dmu, mu) over [s_lo, s_hi), with density constant per bin"""
    cumulative = _weight_cumulative(component) if cumulative is None else cumulative
    edges = measure.bin_edges
    first = max(int(np.searchsorted(edges, s_lo, side="right")) - 1, 0)
    last = min(int(np.searchsorted(edges, s_hi, side="left")), edges.size - 1)
    target, mass = 0.0, 0.0
    for b in range(first, last):
        lo, hi = max(edges[b], s_lo), min(edges[b + 1], s_hi)
        if hi <= lo or measure.bin_masses[b] == 0:
            continue
        density = measure.bin_masses[b] / (edges[b + 1] - edges[b])
        g = weight_primitive(component, [lo, hi], cumulative)
        target += density * (g[1] - g[0])
        mass += density * (hi - lo)
    return target, mass


def place_zero(component: Component, measure: BoundaryMeasure, s_lo: float, s_hi: float,
               cumulative: Optional[np.ndarray] = None) -> Tuple[complex, float, float, float]:
    """The first point of the arc with 1 - |xi|^2 equal to the averaged target

    Returns (xi, its arclength position, target, relative residual). Rays are
    solved in closed form; an arc edge qualifies at its start when its radius
    already matches.
    """
    target, mass = moment_target(measure, component, s_lo, s_hi, cumulative)
    if mass > 0:
        target /= mass
    radius = math.sqrt(max(1.0 - target, 0.0))
    cum = component.cumulative
    best = None
    for i, e in enumerate(component.edges):
        a = max(s_lo, cum[i]) - cum[i]
        b = min(s_hi, cum[i + 1]) - cum[i]
        if b <= a:
            continue
        r_a, r_b = float(e.radius_at(a)), float(e.radius_at(b))
        if e.kind == "arc":
            if abs((1.0 - r_a * r_a) - target) <= ROOT_TOLERANCE * max(target, 1e-300):
                s = cum[i] + a
                break
        elif min(r_a, r_b) <= radius <= max(r_a, r_b):
            s = cum[i] + a + abs(radius - r_a)
            s = min(s, cum[i] + b)
            break
        for local, r in ((a, r_a), (b, r_b)):
            miss = abs((1.0 - r * r) - target)
            if best is None or miss < best[0]:
                best = (miss, cum[i] + local)
    else:
        s = best[1] if best is not None else s_lo
        logger.debug("no exact moment root on [%g, %g]; using closest point", s_lo, s_hi)
    xi = component.point_at(s)
    residual = abs((1.0 - abs(xi) ** 2) - target) / max(target, 1e-300)
    return xi, float(s), float(target), float(residual)


def odd_even_factor(arcs: List[ArcSegment]) -> Tuple[BlaschkeProduct, BlaschkeProduct]:
    odd = [a.placed_zero for a in arcs if a.index % 2 == 1]
    even = [a.placed_zero for a in arcs if a.index % 2 == 0]
    return BlaschkeProduct.from_zeros(odd), BlaschkeProduct.from_zeros(even)


def length_floor_log(delta: float, N: int) -> float:
    """log of delta^(2 e^(2(2N + 14)))"""
    try:
        exponent = 2.0 * math.exp(2.0 * (2 * N + 14))
    except OverflowError:
        return -math.inf
    return exponent * math.log(delta)


def length_floor(delta: float, N: int) -> float:
    """delta^(2 e^(2(2N + 14))); underflows to 0.0 for every practical delta"""
    log_floor = length_floor_log(delta, N)
    return math.exp(log_floor) if log_floor > -745.0 else 0.0


def discretize_component(component: Component, measure: BoundaryMeasure) -> List[ArcSegment]:
    cuts = split_component(component, measure)
    if measure.total <= 0:
        return []
    bounds = [0.0] + cuts + [component.arclength]
    cumulative = _weight_cumulative(component)
    arcs = []
    for k, (s_lo, s_hi) in enumerate(zip(bounds[:-1], bounds[1:]), start=1):
        xi, s_star, target, residual = place_zero(component, measure, s_lo, s_hi, cumulative)
        _, mass = moment_target(measure, component, s_lo, s_hi, cumulative)
        hyp = sum(e.hyp_length for e in sub_edges(component, s_lo, s_hi))
        arcs.append(ArcSegment(
            component_id=component.component_id,
            index=k,
            s_lo=float(s_lo),
            s_hi=float(s_hi),
            mass=float(mass),
            hyp_length=float(hyp),
            placed_zero=complex(xi),
            placed_at=s_star,
            moment_target=target,
            moment_residual=residual,
        ))
    return arcs


def discretize(contour: Contour, measures: Dict[int, BoundaryMeasure]) -> DiscretizationResult:
    """Arcs and placed zeros for every component carrying B1 zeros"""
    arcs: List[ArcSegment] = []
    for component in contour.components:
        measure = measures.get(component.component_id)
        if measure is None:
            continue
        arcs.extend(discretize_component(component, measure))
    result = DiscretizationResult(arcs, contour.delta, contour.params.N)
    if arcs:
        logger.info("discretized into %d arcs; max moment residual %.3g, min hyperbolic length %.4g",
                    len(arcs), result.max_moment_residual, result.min_hyp_length)
    return result
