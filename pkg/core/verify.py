"""
Verification of a run
Interpolation conditions, the sup of | |B| - |I| | over a hyperbolic net,
arc-class diagnostics of log|B1| - log|I1| and audits of the contour
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .blaschke import BlaschkeProduct, eval_modulus, find_witness, log_modulus
from .contour import (
    Contour,
    arclength_atoms,
    carleson_norm,
    dist_to_interior,
)
from .discretize import DiscretizationResult, arc_quadrature, length_floor, length_floor_log, sub_edges
from .dyadic import TWO_PI, CarlesonSquare, PolarRect
from .geometry import HyperbolicNet, circle_count, move_from, pseudo_dist_array, radius_at_depth
from .harmonic_measure import BoundaryMeasure

logger = logging.getLogger(__name__)

MAX_TAIL_SAMPLES = 1 << 18

PAIR_BLOCK = 2048


class DiagnosticsError(RuntimeError):
    """A diagnostic cannot be evaluated at the requested point"""


# ---------------------------------------------------------------------------
# Interpolation conditions

@dataclass
class InterpolationReport:
    separation: float
    carleson_norm: float
    dyadic_sup: float
    pair_count: int
    zero_count: int

    def passes(self, min_separation: float = 0.0, max_carleson: float = math.inf) -> bool:
        return self.separation > min_separation and self.carleson_norm < max_carleson

    def to_dict(self) -> Dict:
        return {
            "separation": self.separation,
            "carleson_norm": self.carleson_norm,
            "dyadic_sup": self.dyadic_sup,
            "pair_count": self.pair_count,
            "zero_count": self.zero_count,
        }


def separation(zeros: np.ndarray) -> float:
    """Exact min of rho over distinct index pairs; 1 when there are fewer than two"""
    zeros = np.asarray(zeros, dtype=complex).reshape(-1)
    if zeros.size < 2:
        return 1.0
    best = 1.0
    for start in range(0, zeros.size, PAIR_BLOCK):
        block = zeros[start:start + PAIR_BLOCK]
        rho = pseudo_dist_array(block[:, None], zeros[None, :])
        rows = np.arange(block.size)
        rho[rows, start + rows] = np.inf
        best = min(best, float(rho.min()))
    return best


def interpolation_report(zeros: Sequence[complex]) -> InterpolationReport:
    zeros = np.asarray(zeros, dtype=complex).reshape(-1)
    n = zeros.size
    if n:
        deepest = int(math.ceil(-math.log2(max(1.0 - float(np.abs(zeros).max()), 1e-300))))
        levels = max(1, deepest + 1)
    else:
        levels = 1
    norm = carleson_norm([(z, 1.0 - abs(z)) for z in zeros], levels)
    return InterpolationReport(
        separation=separation(zeros),
        carleson_norm=norm.norm,
        dyadic_sup=norm.dyadic_sup,
        pair_count=n * (n - 1) // 2,
        zero_count=n,
    )


def product_zeros(B: BlaschkeProduct) -> np.ndarray:
    return np.asarray(B.all_zeros(), dtype=complex)


# ---------------------------------------------------------------------------
# sup | |B| - |I| |

@dataclass
class SupDiffReport:
    sup_diff: float
    mesh: float
    slack: float
    argmax: complex
    tail_floor: float
    tail_depth: int
    net_points: int

    @property
    def bound(self) -> float:
        return self.sup_diff + self.slack

    @property
    def tail_certified(self) -> bool:
        return self.tail_floor >= 1.0 - self.sup_diff

    def to_dict(self) -> Dict:
        return {
            "sup_diff": self.sup_diff,
            "mesh": self.mesh,
            "slack": self.slack,
            "bound": self.bound,
            "argmax": [self.argmax.real, self.argmax.imag],
            "tail_floor": self.tail_floor,
            "tail_depth": self.tail_depth,
            "tail_certified": self.tail_certified,
            "net_points": self.net_points,
        }


def sup_modulus_diff(B: BlaschkeProduct, I: BlaschkeProduct, net: HyperbolicNet) -> SupDiffReport:
    """max over the net of | |B| - |I| |; off the net it can be larger by at most 2 tanh(mesh)"""
    diff = np.abs(np.asarray(eval_modulus(B, net.points)) - np.asarray(eval_modulus(I, net.points)))
    i = int(np.argmax(diff))
    tail_depth = net.depth_limit + 2
    r = radius_at_depth(tail_depth)
    count = min(circle_count(r, net.mesh), MAX_TAIL_SAMPLES)
    circle = r * np.exp(1j * TWO_PI * np.arange(count) / count)
    tail_floor = float(min(np.min(eval_modulus(B, circle)), np.min(eval_modulus(I, circle))))
    report = SupDiffReport(
        sup_diff=float(diff[i]),
        mesh=net.mesh,
        slack=2.0 * math.tanh(net.mesh),
        argmax=complex(net.points[i]),
        tail_floor=tail_floor,
        tail_depth=tail_depth,
        net_points=net.count,
    )
    logger.info("sup | |B| - |I| | = %.4g over %d points (+ slack %.4g)", report.sup_diff, net.count, report.slack)
    return report


# ---------------------------------------------------------------------------
# Arc classes around a base point

@dataclass
class ArcClass:
    component_id: int
    k: int
    label: str
    n: int
    h_value: float

    def to_dict(self) -> Dict:
        return {"component_id": self.component_id, "k": self.k, "class": self.label, "n": self.n, "H": self.h_value}


@dataclass
class ArcClassDiagnostics:
    z: complex
    q_z: CarlesonSquare
    classes: List[ArcClass]
    e_b: float
    e_b1: float
    e_b2: float
    e_s: float
    e_l: float
    total: float
    direct: float
    majorant_b1: Optional[float] = None

    @property
    def identity_residual(self) -> float:
        return abs(self.total - self.direct)

    def to_dict(self) -> Dict:
        return {
            "z": [self.z.real, self.z.imag],
            "q_z": {"center_angle": self.q_z.center_angle, "side": self.q_z.side},
            "classes": [c.to_dict() for c in self.classes],
            "E_B": self.e_b,
            "E_B1": self.e_b1,
            "E_B2": self.e_b2,
            "E_S": self.e_s,
            "E_L": self.e_l,
            "total": self.total,
            "direct": self.direct,
            "identity_residual": self.identity_residual,
            "majorant_B1": self.majorant_b1,
        }


def _arc_extent(pieces, center_angle: float):
    """(innermost radius, largest angular deviation from center_angle) of polar pieces"""
    min_radius = min(min(e.r0, e.r1) for e in pieces)
    q = CarlesonSquare(center_angle, 1.0)
    deviation = 0.0
    for e in pieces:
        deviation = max(deviation, float(q.angular_deviation(e.theta0)), float(q.angular_deviation(e.theta1)))
        if e.kind == "arc":
            lo = min(e.theta0, e.theta1)
            opposite = np.mod(center_angle + math.pi - lo, TWO_PI)
            if opposite <= abs(e.theta1 - e.theta0):
                deviation = math.pi
    return min_radius, deviation


def arc_class_diagnostics(z: complex, result: DiscretizationResult, measures: Dict[int, BoundaryMeasure],
                          contour: Contour, b1: BlaschkeProduct, N: int,
                          arclength_norm: Optional[float] = None) -> ArcClassDiagnostics:
    """Sort the arcs around z into boundary, short and long classes and sum their contributions

    An arc is in the boundary class when it lies in 2^N Q_z. Otherwise its
    class index is the first n > N with the arc inside 2^n Q_z, and it is
    short when its hyperbolic length is below 1.
    """
    z = complex(z)
    if N > 0 and float(dist_to_interior(z, contour)) < 2 * N:
        raise DiagnosticsError(f"{z} is within hyperbolic distance {2 * N} of the contour interior")
    q_z = CarlesonSquare(math.atan2(z.imag, z.real) % TWO_PI, 1.0 - abs(z))
    by_id = {c.component_id: c for c in contour.components}

    classes: List[ArcClass] = []
    t_sum = 0.0
    rest_sum = 0.0
    sums = {"B": 0.0, "S": 0.0, "L": 0.0}
    for arc in result.arcs:
        component = by_id[arc.component_id]
        pieces = sub_edges(component, arc.s_lo, arc.s_hi)
        min_radius, deviation = _arc_extent(pieces, q_z.center_angle)
        if q_z.dilate(2.0 ** N).contains_extent(min_radius, deviation):
            label, n = "B", N
        else:
            n = N + 1
            while not q_z.dilate(2.0 ** n).contains_extent(min_radius, deviation):
                n += 1
                if q_z.side * 2.0 ** n > 2.0:
                    raise DiagnosticsError(f"arc {arc.component_id}:{arc.index} has no class")
            label = "S" if arc.hyp_length < 1.0 else "L"

        points, masses = arc_quadrature(measures[arc.component_id], component, arc.s_lo, arc.s_hi)
        rho = pseudo_dist_array(z, points)
        rho_k = float(pseudo_dist_array(z, arc.placed_zero))
        ratio = (rho / rho_k) ** 2
        h = 0.5 * float(np.log(ratio) @ masses)
        if label == "B":
            t = 1.0 - ratio
            t_sum += float(t @ masses)
            rest_sum += float((np.log(ratio) + t) @ masses)
        sums[label] += h
        classes.append(ArcClass(arc.component_id, arc.index, label, n, h))

    total = sum(c.h_value for c in classes)
    direct = float(log_modulus(b1, z)) - float(log_modulus(result.i1, z))
    return ArcClassDiagnostics(
        z=z,
        q_z=q_z,
        classes=classes,
        e_b=abs(sums["B"]),
        e_b1=0.5 * abs(t_sum),
        e_b2=0.5 * abs(rest_sum),
        e_s=abs(sums["S"]),
        e_l=abs(sums["L"]),
        total=total,
        direct=direct,
        majorant_b1=None if arclength_norm is None else 8.0 * arclength_norm * 2.0 ** (-N),
    )


def admissible_points(contour: Contour, N: int, count: int, rng: np.random.Generator,
                      depth_limit: int = 16, attempts: int = 50) -> np.ndarray:
    """Random points at hyperbolic distance >= 2N from every component interior"""
    found = []
    for _ in range(attempts):
        r = 1.0 - 2.0 ** (-rng.uniform(0.0, depth_limit, 4 * count))
        candidates = r * np.exp(1j * rng.uniform(0.0, TWO_PI, r.size))
        d = np.asarray(dist_to_interior(candidates, contour), dtype=float)
        found.extend(candidates[d >= 2 * N].tolist())
        if len(found) >= count:
            break
    return np.array(found[:count], dtype=complex)


@dataclass
class TelescopingReport:
    points: int
    max_residual: float
    gate: float
    diagnostics: List[ArcClassDiagnostics] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.max_residual <= self.gate

    def to_dict(self) -> Dict:
        worst = max(self.diagnostics, key=lambda d: d.identity_residual, default=None)
        return {
            "points": self.points,
            "max_residual": self.max_residual,
            "gate": self.gate,
            "holds": self.holds,
            "max_E_B": max((d.e_b for d in self.diagnostics), default=0.0),
            "max_E_S": max((d.e_s for d in self.diagnostics), default=0.0),
            "max_E_L": max((d.e_l for d in self.diagnostics), default=0.0),
            "worst": None if worst is None else worst.to_dict(),
        }


def telescoping_check(points: np.ndarray, result: DiscretizationResult, measures: Dict[int, BoundaryMeasure],
                      contour: Contour, b1: BlaschkeProduct, N: int, gate: float = 0.02,
                      arclength_norm: Optional[float] = None) -> TelescopingReport:
    diagnostics = [arc_class_diagnostics(z, result, measures, contour, b1, N, arclength_norm) for z in points]
    worst = max((d.identity_residual for d in diagnostics), default=0.0)
    report = TelescopingReport(len(diagnostics), worst, gate, diagnostics)
    if not report.holds:
        logger.warning("telescoping identity off by %.4g (gate %.4g)", worst, gate)
    return report


# ---------------------------------------------------------------------------
# |B1| on the contour and the far-field reduction

@dataclass
class DeltaFloorReport:
    min_b1: float
    floor: float
    floor_log: float
    samples: int

    @property
    def holds(self) -> bool:
        if self.min_b1 <= 0.0:
            return self.floor_log == -math.inf
        return math.log(self.min_b1) >= self.floor_log

    def to_dict(self) -> Dict:
        return {
            "min_b1": self.min_b1,
            "floor": self.floor,
            "floor_log": self.floor_log,
            "samples": self.samples,
            "holds": self.holds,
        }


def delta_floor_check(b1: BlaschkeProduct, contour: Contour, per_edge: int = 4) -> DeltaFloorReport:
    """Sampled min of |B1| on the contour against delta^(2 e^(2(2N + 14)))"""
    edges = contour.all_edges()
    if edges:
        s = np.linspace(0.0, 1.0, per_edge + 1)
        points = np.concatenate([np.atleast_1d(e.point_at(s * e.length)) for e in edges])
        min_b1 = float(np.min(eval_modulus(b1, points)))
    else:
        points, min_b1 = np.zeros(0), 1.0
    N = contour.params.N
    return DeltaFloorReport(
        min_b1=min_b1,
        floor=length_floor(contour.delta, N),
        floor_log=length_floor_log(contour.delta, N),
        samples=int(points.size),
    )


@dataclass
class FarFieldReport:
    far_points: int
    near_points: int
    far_sup: float
    near_sup_i: float
    epsilon: float
    gap_points: int = 0

    @property
    def far_holds(self) -> bool:
        return self.far_sup <= 0.5 * self.epsilon

    @property
    def near_holds(self) -> bool:
        return self.near_sup_i <= self.epsilon

    def to_dict(self) -> Dict:
        return {
            "far_points": self.far_points,
            "near_points": self.near_points,
            "gap_points": self.gap_points,
            "far_sup_b1_i1": self.far_sup,
            "near_sup_i": self.near_sup_i,
            "epsilon": self.epsilon,
            "far_holds": self.far_holds,
            "near_holds": self.near_holds,
        }


def far_field_report(points: np.ndarray, I: BlaschkeProduct, b1: BlaschkeProduct, i1: BlaschkeProduct,
                     contour: Contour, N: int, epsilon: float) -> FarFieldReport:
    """Split points by hyperbolic distance to the contour interior

    Points within K (where the contour keeps |B| below epsilon / 2) only need
    |I| <= epsilon. Points at distance >= 2N compare |B1| with |I1| against
    epsilon / 2. When K < 2N the points in between are counted as gap points
    and judged by neither test.
    """
    points = np.asarray(points, dtype=complex)
    d = np.asarray(dist_to_interior(points, contour), dtype=float).reshape(-1)
    far = points[d >= 2 * N]
    near = points[d < min(contour.params.K, 2 * N)]
    gap = points.size - far.size - near.size
    far_sup = float(np.max(np.abs(np.asarray(eval_modulus(b1, far)) - np.asarray(eval_modulus(i1, far))))) if far.size else 0.0
    near_sup = float(np.max(eval_modulus(I, near))) if near.size else 0.0
    return FarFieldReport(int(far.size), int(near.size), far_sup, near_sup, epsilon, int(gap))


# ---------------------------------------------------------------------------
# Contour audits

@dataclass
class ContourAudit:
    interior_samples: int
    interior_violations: int
    interior_max: float
    exterior_samples: int
    exterior_misses: int
    arclength_norm: Dict
    scaling_holds: bool
    region_bound_holds: bool
    summed_bound_holds: bool
    worst_region_ratio: float
    worst_summed_ratio: float

    @property
    def passed(self) -> bool:
        return (self.interior_violations == 0 and self.exterior_misses == 0
                and self.arclength_norm["within_bound"] and self.scaling_holds)

    def to_dict(self) -> Dict:
        return {
            "interior": {"samples": self.interior_samples, "violations": self.interior_violations,
                           "max_modulus": self.interior_max},
            "exterior": {"samples": self.exterior_samples, "misses": self.exterior_misses},
            "arclength_norm": self.arclength_norm,
            "scaling": self.scaling_holds,
            "boundary_length": {"per_region": self.region_bound_holds, "summed": self.summed_bound_holds,
                            "worst_region_ratio": self.worst_region_ratio,
                            "worst_summed_ratio": self.worst_summed_ratio},
            "passed": self.passed,
        }


def _interior_samples(contour: Contour, count: int, rng: np.random.Generator) -> np.ndarray:
    tiles = sorted({t for c in contour.components for t in c.tiles})
    if not tiles or count <= 0:
        return np.zeros(0, dtype=complex)
    picks = rng.integers(0, len(tiles), count)
    out = np.empty(count, dtype=complex)
    for i, p in enumerate(picks):
        n, j = tiles[p]
        if n == 0:
            rect = PolarRect(0.0, 0.5, 0.0, TWO_PI)
        else:
            side = 2.0 ** (-n)
            rect = PolarRect(1.0 - side, 1.0 - 0.5 * side, TWO_PI * j * side, TWO_PI * side)
        out[i] = rect.sample(rng, 1)[0]
    return out


def audit_contour(B: BlaschkeProduct, contour: Contour, samples: int, rng: np.random.Generator) -> ContourAudit:
    """Sampled checks of what the construction promises

    (a) |B| <= epsilon + tanh(mesh) on Omega_K(int Gamma); (b) outside
    every component a point with |B| > delta within K + 14; (c) arclength of
    Gamma is a Carleson measure with norm <= 68; (d) the scaling condition.
    """
    p = contour.params
    tol = math.tanh(p.mesh)

    base = _interior_samples(contour, samples, rng)
    if base.size:
        t = rng.uniform(0.0, p.K, base.size)
        phase = np.exp(1j * rng.uniform(0.0, TWO_PI, base.size))
        moved = move_from(base, np.tanh(t) * phase)
        values = np.asarray(eval_modulus(B, moved))
        interior_violations = int(np.sum(values > p.epsilon + tol))
        interior_max = float(values.max())
    else:
        interior_violations, interior_max = 0, 0.0

    r = 1.0 - 2.0 ** (-rng.uniform(0.0, p.d_max, 4 * samples))
    candidates = r * np.exp(1j * rng.uniform(0.0, TWO_PI, r.size))
    exterior = [z for z in candidates if all(c.locate(z) == "exterior" for c in contour.components)][:samples]
    misses = 0
    for z in exterior:
        point, _, _ = find_witness(B, complex(z), contour.delta, p.K + 14, p.mesh)
        if point is None:
            misses += 1

    norm = carleson_norm(arclength_atoms(contour), p.d_max + 1)
    region_ratios = [r.boundary_length / r.square.side for r in contour.bad_regions]
    summed_ratios = [s.boundary_sum / s.parent.side for s in contour.scaling]
    audit = ContourAudit(
        interior_samples=int(base.size),
        interior_violations=interior_violations,
        interior_max=interior_max,
        exterior_samples=len(exterior),
        exterior_misses=misses,
        arclength_norm=norm.to_dict(),
        scaling_holds=all(s.holds for s in contour.scaling),
        region_bound_holds=all(x <= 17.0 for x in region_ratios),
        summed_bound_holds=all(x <= 17.0 for x in summed_ratios),
        worst_region_ratio=max(region_ratios, default=0.0),
        worst_summed_ratio=max(summed_ratios, default=0.0),
    )
    if not audit.passed:
        logger.warning("contour audit failed: %s", audit.to_dict())
    return audit
