"""
Harmonic measure of contour components
Walk-on-spheres estimate of the boundary measure sum_n omega(z_n, . ; int Gamma_i),
binned along the component's arclength from its start anchor
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .blaschke import BlaschkeProduct, log_modulus
from .contour import Component, Edge
from .geometry import pseudo_dist_array

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

MAX_BIN_WIDTH = 0.01
MIN_BINS = 1024

RENORMALIZATION_WARNING = 0.02

NEIGHBOURS = 16


class HarmonicMeasureError(RuntimeError):
    """The harmonic measure cannot be computed for this domain"""


@dataclass
class HarmonicConfig:
    walks: int = 100_000
    seed: int = 0
    tol_rel: float = 1e-6
    max_steps: int = 20_000
    chunk_walks: int = 25_000
    workers: int = 1

    def __post_init__(self):
        if self.walks <= 0 or self.chunk_walks <= 0 or self.max_steps <= 0:
            raise ValueError("walks, chunk_walks and max_steps must be positive")
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")


@dataclass
class HarmonicDomain:
    """Interior of one component with the B1 zeros it holds"""
    boundary: Component
    sources: np.ndarray
    multiplicities: np.ndarray = None

    def __post_init__(self):
        self.sources = np.asarray(self.sources, dtype=complex).reshape(-1)
        if self.multiplicities is None:
            self.multiplicities = np.ones(self.sources.shape, dtype=np.int64)
        self.multiplicities = np.asarray(self.multiplicities, dtype=np.int64).reshape(-1)
        if self.multiplicities.shape != self.sources.shape:
            raise ValueError("sources and multiplicities differ in length")

    @property
    def count(self) -> int:
        return int(self.multiplicities.sum())

    @classmethod
    def from_product(cls, component: Component, b1_component: BlaschkeProduct) -> "HarmonicDomain":
        values, counts = b1_component.grouped_zeros()
        return cls(component, values, counts)


@dataclass
class BoundaryMeasure:
    component_id: int
    bin_edges: np.ndarray
    bin_masses: np.ndarray
    method: Dict
    stat_error: float = 0.0
    bin_errors: Optional[np.ndarray] = None
    renormalization_factor: float = 1.0
    raw_total: Optional[float] = None
    seed: Optional[int] = None
    total: float = field(init=False)

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.bin_masses = np.asarray(self.bin_masses, dtype=float)
        if self.bin_edges.size != self.bin_masses.size + 1:
            raise ValueError("bin_edges must have one more entry than bin_masses")
        if np.any(self.bin_masses < 0):
            raise ValueError("bin masses must be non-negative")
        if self.bin_errors is None:
            self.bin_errors = np.zeros(self.bin_masses.shape)
        self.bin_errors = np.asarray(self.bin_errors, dtype=float)
        self.total = float(self.bin_masses.sum())
        if self.raw_total is None:
            self.raw_total = self.total

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0]) if self.bin_masses.size else 0.0

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def cumulative(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.bin_masses)])

    def to_dict(self) -> Dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "component_id": self.component_id,
            "bin_edges": self.bin_edges.tolist(),
            "bin_masses": self.bin_masses.tolist(),
            "bin_errors": self.bin_errors.tolist(),
            "total": self.total,
            "raw_total": self.raw_total,
            "method": self.method,
            "stat_error": self.stat_error,
            "renormalization_factor": self.renormalization_factor,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BoundaryMeasure":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported measure schema_version {data.get('schema_version')}")
        return cls(
            component_id=data["component_id"],
            bin_edges=np.array(data["bin_edges"]),
            bin_masses=np.array(data["bin_masses"]),
            method=data["method"],
            stat_error=data.get("stat_error", 0.0),
            bin_errors=np.array(data["bin_errors"]) if data.get("bin_errors") is not None else None,
            renormalization_factor=data.get("renormalization_factor", 1.0),
            raw_total=data.get("raw_total"),
            seed=data.get("seed"),
        )


def bin_edges_for(arclength: float) -> np.ndarray:
    # margin keeps linspace widths at or below MAX_BIN_WIDTH after rounding
    count = max(MIN_BINS, math.ceil(arclength / MAX_BIN_WIDTH * (1 + 1e-12)))
    return np.linspace(0.0, arclength, count + 1)


# ---------------------------------------------------------------------------
# Euclidean proximity to the outer boundary

class _BoundaryIndex:
    """Exact Euclidean distances to the outer loop, with a KD-tree of samples to pick candidate edges"""

    def __init__(self, component: Component, spacing: float):
        edges = component.edges
        self.is_arc = np.array([e.kind == "arc" for e in edges])
        self.r0 = np.array([e.r0 for e in edges])
        self.r1 = np.array([e.r1 for e in edges])
        self.t0 = np.array([e.theta0 for e in edges])
        self.t1 = np.array([e.theta1 for e in edges])
        self.lo = np.minimum(self.t0, self.t1)
        self.span = np.abs(self.t1 - self.t0)
        self.offset = component.cumulative[:-1]
        self.arclength = component.arclength

        points, owners = [], []
        for i, e in enumerate(edges):
            count = max(2, math.ceil(e.length / spacing) + 1)
            s = np.linspace(0.0, e.length, count)
            points.append(np.asarray(e.point_at(s)))
            owners.append(np.full(count, i))
        samples = np.concatenate(points)
        self.owner = np.concatenate(owners)
        self.spacing = spacing
        self.tree = cKDTree(np.column_stack([samples.real, samples.imag]))
        self.k = min(NEIGHBOURS, samples.size)

    def lower_bound(self, z: np.ndarray) -> np.ndarray:
        d, _ = self.tree.query(np.column_stack([z.real, z.imag]))
        return np.maximum(d - 0.5 * self.spacing, 0.0)

    def nearest(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(distance, arclength position) of the nearest boundary point"""
        _, idx = self.tree.query(np.column_stack([z.real, z.imag]), k=self.k)
        idx = np.asarray(idx).reshape(z.size, -1)
        cand = np.sort(self.owner[idx], axis=1)
        dist, local = self._edge_distance(z[:, None], cand)
        best = np.argmin(dist, axis=1)
        rows = np.arange(z.size)
        edge = cand[rows, best]
        position = self.offset[edge] + local[rows, best]
        return dist[rows, best], np.clip(position, 0.0, np.nextafter(self.arclength, 0.0))

    def _edge_distance(self, z: np.ndarray, e: np.ndarray):
        is_arc = self.is_arc[e]
        r0, r1, t0 = self.r0[e], self.r1[e], self.t0[e]

        # radial: clamp the projection onto the ray
        w = z * np.exp(-1j * t0)
        r_lo, r_hi = np.minimum(r0, r1), np.maximum(r0, r1)
        foot = np.clip(w.real, r_lo, r_hi)
        d_radial = np.abs(w - foot)
        s_radial = np.abs(foot - r0)

        # arc: same angle if inside the span, else the nearer endpoint
        lo, span = self.lo[e], self.span[e]
        rel = np.mod(np.angle(z) - lo, 2 * np.pi)
        start_pt = r0 * np.exp(1j * lo)
        end_pt = r0 * np.exp(1j * (lo + span))
        d_start = np.abs(z - start_pt)
        d_end = np.abs(z - end_pt)
        inside = rel <= span
        angle = np.where(inside, rel, np.where(d_end < d_start, span, 0.0))
        d_arc = np.where(inside, np.abs(np.abs(z) - r0), np.minimum(d_start, d_end))
        forward = self.t1[e] >= self.t0[e]
        s_arc = np.where(forward, angle, span - angle) * r0

        return np.where(is_arc, d_arc, d_radial), np.where(is_arc, s_arc, s_radial)


# ---------------------------------------------------------------------------
# Walk on spheres

def _walk_chunk(index: _BoundaryIndex, start: complex, walks: int, tol: float, max_steps: int,
                seed_seq: np.random.SeedSequence) -> np.ndarray:
    """Arclength exit positions of `walks` walkers; walkers hitting max_steps are dropped"""
    rng = np.random.default_rng(seed_seq)
    pos = np.full(walks, start, dtype=complex)
    active = np.ones(walks, dtype=bool)
    exits = np.full(walks, np.nan)
    near = 3.0 * index.spacing
    for _ in range(max_steps):
        live = np.flatnonzero(active)
        if live.size == 0:
            break
        z = pos[live]
        radius = index.lower_bound(z)
        close = radius <= near
        if np.any(close):
            d, s = index.nearest(z[close])
            radius[close] = d
            done = d <= tol
            if np.any(done):
                hit = live[close][done]
                exits[hit] = s[done]
                active[hit] = False
                radius[np.flatnonzero(close)[done]] = 0.0
        step = np.exp(2j * np.pi * rng.random(live.size))
        pos[live] = z + radius * step
    dropped = int(active.sum())
    if dropped:
        logger.debug("%d of %d walkers dropped after %d steps", dropped, walks, max_steps)
    return exits[~np.isnan(exits)]


def harmonic_measure(dom: HarmonicDomain, cfg: HarmonicConfig = None) -> BoundaryMeasure:
    """Binned harmonic measure of the component interior from its sources

    Each source runs cfg.walks walkers in fixed chunks; chunk seeds come from
    (seed, component id, source, chunk) so the result does not depend on the
    worker count. The total is renormalized to the integer source count.
    """
    cfg = cfg or HarmonicConfig()
    component = dom.boundary
    if component.has_holes:
        raise HarmonicMeasureError(f"component {component.component_id} is not simply connected")
    for z in dom.sources:
        if component.locate(z) != "interior":
            raise HarmonicMeasureError(f"source {z} is not interior to component {component.component_id}")

    edges = bin_edges_for(component.arclength)
    n_bins = edges.size - 1
    method = {"name": "MonteCarlo", "walks": cfg.walks, "tol_rel": cfg.tol_rel}
    if dom.count == 0:
        return BoundaryMeasure(component.component_id, edges, np.zeros(n_bins), method, seed=cfg.seed)

    diameter = component.diameter()
    tol = cfg.tol_rel * diameter
    spacing = min(MAX_BIN_WIDTH, component.arclength / MIN_BINS)
    index = _BoundaryIndex(component, spacing)

    tasks = []
    for i in range(dom.sources.size):
        for c, start in enumerate(range(0, cfg.walks, cfg.chunk_walks)):
            size = min(cfg.chunk_walks, cfg.walks - start)
            seq = np.random.SeedSequence(cfg.seed, spawn_key=(component.component_id, i, c))
            tasks.append((i, size, seq))

    def run(task):
        i, size, seq = task
        return _walk_chunk(index, complex(dom.sources[i]), size, tol, cfg.max_steps, seq)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    counts = np.zeros((dom.sources.size, n_bins))
    for (i, _, _), exits in zip(tasks, results):
        counts[i] += np.histogram(exits, bins=edges)[0]

    weight = dom.multiplicities[:, None] / cfg.walks
    raw = (counts * weight).sum(axis=0)
    raw_total = float(raw.sum())
    p = counts / cfg.walks
    bin_errors = np.sqrt(((dom.multiplicities[:, None] ** 2) * p * (1 - p) / cfg.walks).sum(axis=0))
    completed = np.clip(p.sum(axis=1), 0.0, 1.0)
    stat_error = float(np.sqrt(((dom.multiplicities ** 2) * completed * (1 - completed) / cfg.walks).sum()))

    if raw_total <= 0:
        raise HarmonicMeasureError(f"no walker reached the boundary of component {component.component_id}")
    factor = dom.count / raw_total
    if abs(1.0 - raw_total / dom.count) > RENORMALIZATION_WARNING:
        logger.warning("component %d: raw harmonic measure total %.4f vs %d zeros (factor %.4f)",
                       component.component_id, raw_total, dom.count, factor)
    masses = raw * factor
    logger.info("harmonic measure for component %d: %d sources, %d bins, factor %.5f",
                component.component_id, dom.sources.size, n_bins, factor)
    return BoundaryMeasure(
        component_id=component.component_id,
        bin_edges=edges,
        bin_masses=masses,
        method=method,
        stat_error=stat_error,
        bin_errors=bin_errors * factor,
        renormalization_factor=factor,
        raw_total=raw_total,
        seed=cfg.seed,
    )


def disk_poisson_measure(radius: float, source: complex, edges: np.ndarray, component_id: int = 0) -> BoundaryMeasure:
    """Exact harmonic measure of {|z| < radius} from `source`, binned by arclength from angle 0"""
    a = abs(source)
    alpha = math.atan2(source.imag, source.real)
    phi = np.asarray(edges, dtype=float) / radius
    half = (phi - alpha) / 2.0
    primitive = np.arctan2((radius + a) * np.sin(half), (radius - a) * np.cos(half)) / np.pi
    primitive = np.unwrap(primitive, period=2.0)
    masses = np.maximum(np.diff(primitive), 0.0)
    return BoundaryMeasure(component_id, edges, masses, {"name": "Poisson", "radius": radius})


# ---------------------------------------------------------------------------
# Mean-value identity

def measure_points(measure: BoundaryMeasure, component: Component) -> np.ndarray:
    return np.array([component.point_at(s) for s in measure.midpoints], dtype=complex)


def mean_value_check(b1_component: BlaschkeProduct, measure: BoundaryMeasure, z: complex,
                     component: Component) -> float:
    """|log|B1(z)| - sum_bins log rho(z, xi_bin) mass| for z outside the component"""
    points = measure_points(measure, component) if measure.bin_masses.size else np.zeros(0, dtype=complex)
    lhs = float(log_modulus(b1_component, z))
    if points.size == 0:
        return abs(lhs)
    rhs = float(np.log(pseudo_dist_array(z, points)) @ measure.bin_masses)
    return abs(lhs - rhs)


def mean_value_error(measure: BoundaryMeasure, z: complex, component: Component) -> float:
    """Monte-Carlo standard error propagated into the quadrature side of the identity"""
    if not measure.bin_masses.size:
        return 0.0
    f = np.log(pseudo_dist_array(z, measure_points(measure, component)))
    return float(np.sqrt(np.sum((f * measure.bin_errors) ** 2)))


def total_variation(first: BoundaryMeasure, second: BoundaryMeasure, groups: Optional[int] = None) -> float:
    """Half the L1 distance between normalized bin masses, optionally on coarsened bins"""
    a = first.bin_masses / max(first.total, 1e-300)
    b = second.bin_masses / max(second.total, 1e-300)
    if a.shape != b.shape:
        raise ValueError("measures use different bins")
    if groups:
        a = np.array([chunk.sum() for chunk in np.array_split(a, groups)])
        b = np.array([chunk.sum() for chunk in np.array_split(b, groups)])
    return 0.5 * float(np.abs(a - b).sum())


def measures_for(components: List[Component], b1_by_component: Dict[int, BlaschkeProduct],
                 cfg: HarmonicConfig) -> Dict[int, BoundaryMeasure]:
    """One measure per component that holds B1 zeros"""
    out = {}
    for component in components:
        b1 = b1_by_component.get(component.component_id)
        if b1 is None or b1.degree == 0:
            continue
        out[component.component_id] = harmonic_measure(HarmonicDomain.from_product(component, b1), cfg)
    return out
