"""
Carleson contour construction
Good/bad classification of dyadic squares, the alternating selection of
maximal bad and good squares, extraction of the region R and its boundary
components, distances to the contour and dyadic Carleson norms
"""

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .blaschke import BlaschkeProduct
from .dyadic import (
    DEFAULT_BUDGET,
    TWO_PI,
    DyadicSquare,
    bracket_sup,
    children,
    square_box_distance,
    tile_of,
    top_half,
)
from .geometry import dist_to_circle_arc, dist_to_radial, hyp_dist

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DELTA_FLOOR = 1e-12

BOUNDARY_TOLERANCE = 1e-12

Tile = Tuple[int, int]
Piece = Tuple[str, int, int]
DirectedPiece = Tuple[Piece, bool]
Vertex = Tuple[int, Fraction]


class ContourError(RuntimeError):
    """The construction cannot produce a valid contour"""


class SquareKind(Enum):
    GOOD = "good"
    BAD = "bad"
    NEUTRAL = "neutral"


@dataclass
class ContourParams:
    epsilon: float
    N: int
    K: Optional[float] = None
    delta: Optional[float] = None
    mesh: float = 0.1
    d_max: int = 16
    budget: int = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        if self.K is None:
            self.K = 2.0 * self.N
        if self.delta is None:
            self.delta = self.epsilon / 4.0
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < self.epsilon:
            raise ValueError(f"delta must lie in (0, epsilon), got {self.delta}")
        if self.N < 0 or self.K < 0:
            raise ValueError("N and K must be non-negative")
        if self.mesh <= 0:
            raise ValueError("mesh must be positive")
        if self.d_max < 1:
            raise ValueError("d_max must be at least 1")

    def with_delta(self, delta: float) -> "ContourParams":
        return ContourParams(self.epsilon, self.N, self.K, delta, self.mesh, self.d_max, self.budget, self.workers)

    def to_dict(self) -> Dict:
        return {
            "epsilon": self.epsilon, "N": self.N, "K": self.K, "delta": self.delta,
            "mesh": self.mesh, "d_max": self.d_max, "budget": self.budget,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ContourParams":
        return cls(
            epsilon=data["epsilon"], N=data["N"], K=data["K"], delta=data["delta"],
            mesh=data["mesh"], d_max=data["d_max"], budget=data.get("budget", DEFAULT_BUDGET),
        )


@dataclass
class ClassifiedSquare:
    square: DyadicSquare
    kind: SquareKind
    sup_estimate: float
    lower: float
    upper: float
    certified: bool

    def to_dict(self) -> Dict:
        return {
            **self.square.to_dict(),
            "kind": self.kind.value,
            "sup_estimate": self.sup_estimate,
            "lower": self.lower,
            "upper": self.upper,
            "certified": self.certified,
        }


def classify(B: BlaschkeProduct, Q: DyadicSquare, params: ContourParams, mode: str = "full") -> ClassifiedSquare:
    """Good if sup |B| over Omega_K(T(Q)) > epsilon, bad if < delta

    Good needs an attained value above epsilon and bad needs a certified
    upper bound below delta, so the mesh slack only ever widens the neutral
    band. mode "good" / "bad" stops once that single question is settled.
    """
    if mode not in ("full", "good", "bad"):
        raise ValueError(f"unknown classification mode {mode!r}")
    if Q.level > params.d_max:
        raise ValueError(f"square level {Q.level} exceeds d_max {params.d_max}")
    bracket = bracket_sup(
        B, top_half(Q), params.K, params.mesh,
        good_above=params.epsilon if mode in ("full", "good") else None,
        bad_below=params.delta if mode in ("full", "bad") else None,
        budget=params.budget,
    )
    lower, upper = bracket.lower, bracket.upper
    if lower > params.epsilon:
        return ClassifiedSquare(Q, SquareKind.GOOD, lower, lower, upper, True)
    if upper < params.delta:
        return ClassifiedSquare(Q, SquareKind.BAD, upper, lower, upper, True)
    not_good = upper <= params.epsilon
    not_bad = lower >= params.delta
    certified = {"full": not_good and not_bad, "good": not_good, "bad": not_bad}[mode]
    if bracket.exhausted or not certified:
        logger.debug("square %s neutral without certificate [%g, %g]", Q.key, lower, upper)
    estimate = min(max(lower, params.delta), params.epsilon)
    return ClassifiedSquare(Q, SquareKind.NEUTRAL, estimate, lower, upper, certified and not bracket.exhausted)


# ---------------------------------------------------------------------------
# Edges

@dataclass(frozen=True)
class Edge:
    """Oriented radial segment or circular arc, in polar coordinates"""
    kind: str
    r0: float
    r1: float
    theta0: float
    theta1: float

    @property
    def length(self) -> float:
        if self.kind == "radial":
            return abs(self.r1 - self.r0)
        return self.r0 * abs(self.theta1 - self.theta0)

    @property
    def hyp_length(self) -> float:
        if self.kind == "radial":
            return abs(math.atanh(self.r1) - math.atanh(self.r0))
        return self.r0 * abs(self.theta1 - self.theta0) / (1.0 - self.r0 * self.r0)

    @property
    def start(self) -> complex:
        return self.r0 * complex(math.cos(self.theta0), math.sin(self.theta0))

    @property
    def end(self) -> complex:
        return self.r1 * complex(math.cos(self.theta1), math.sin(self.theta1))

    def radius_at(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "radial":
            return self.r0 + math.copysign(1.0, self.r1 - self.r0) * s
        return np.full(s.shape, self.r0) if s.ndim else self.r0

    def angle_at(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "radial":
            return np.full(s.shape, self.theta0) if s.ndim else self.theta0
        return self.theta0 + math.copysign(1.0, self.theta1 - self.theta0) * s / self.r0

    def point_at(self, s):
        """Point at Euclidean arclength s from the start"""
        out = self.radius_at(s) * np.exp(1j * np.asarray(self.angle_at(s)))
        return out if np.ndim(out) else complex(out)

    def weight_integral(self, s_a, s_b):
        """Integral of 1 - |xi(s)|^2 over s_a <= s <= s_b"""
        if self.kind == "arc":
            return (1.0 - self.r0 * self.r0) * (np.asarray(s_b) - np.asarray(s_a))
        sign = math.copysign(1.0, self.r1 - self.r0)
        ra = self.radius_at(s_a)
        rb = self.radius_at(s_b)
        return sign * ((rb - rb ** 3 / 3.0) - (ra - ra ** 3 / 3.0))

    def hyp_length_between(self, s_a: float, s_b: float) -> float:
        if self.kind == "radial":
            return abs(math.atanh(float(self.radius_at(s_b))) - math.atanh(float(self.radius_at(s_a))))
        return abs(s_b - s_a) / (1.0 - self.r0 * self.r0)

    def dist(self, z):
        """Hyperbolic distance from z to the edge"""
        if self.kind == "radial":
            return dist_to_radial(z, self.theta0, min(self.r0, self.r1), max(self.r0, self.r1))
        return dist_to_circle_arc(z, self.r0, min(self.theta0, self.theta1), abs(self.theta1 - self.theta0))

    def to_dict(self) -> Dict:
        return {"kind": self.kind, "r0": self.r0, "r1": self.r1, "theta0": self.theta0, "theta1": self.theta1}

    @classmethod
    def from_dict(cls, data: Dict) -> "Edge":
        return cls(data["kind"], data["r0"], data["r1"], data["theta0"], data["theta1"])


# ---------------------------------------------------------------------------
# Tiles and their boundary pieces
#
# ('R', n, j): ray at angle j / 2^n turns, from radius 1 - 2^-n to 1 - 2^-(n+1)
# ('A', m, k): circle 1 - 2^-m, angles k / 2^m to (k+1) / 2^m turns
# A piece's forward direction is outward (rays) or counter-clockwise (arcs).

def tile_pieces(tile: Tile) -> List[DirectedPiece]:
    """Boundary of a top half, counter-clockwise"""
    n, j = tile
    if n == 0:
        return [(("A", 1, 0), True), (("A", 1, 1), True)]
    size = 1 << n
    return [
        (("R", n, j), True),
        (("A", n + 1, 2 * j), True),
        (("A", n + 1, 2 * j + 1), True),
        (("R", n, (j + 1) % size), False),
        (("A", n, j), False),
    ]


def _piece_vertices(piece: Piece) -> Tuple[Vertex, Vertex]:
    kind, a, b = piece
    if kind == "R":
        turn = Fraction(b, 1 << a)
        return (a, turn), (a + 1, turn)
    return (a, Fraction(b, 1 << a)), (a, Fraction(b + 1, 1 << a) % 1)


def _tail(dp: DirectedPiece) -> Vertex:
    start, end = _piece_vertices(dp[0])
    return start if dp[1] else end


def _head(dp: DirectedPiece) -> Vertex:
    start, end = _piece_vertices(dp[0])
    return end if dp[1] else start


def _direction(dp: DirectedPiece) -> int:
    """Quarter turns in the local (radial, angular) frame: +r 0, +theta 1, -r 2, -theta 3"""
    if dp[0][0] == "R":
        return 0 if dp[1] else 2
    return 1 if dp[1] else 3


# left turn first, then straight, then right
_TURN_PRIORITY = {1: 0, 0: 1, 3: 2, 2: 3}


def piece_edge(dp: DirectedPiece) -> Edge:
    (kind, a, b), forward = dp
    if kind == "R":
        theta = TWO_PI * b / (1 << a)
        r_in, r_out = 1.0 - 2.0 ** (-a), 1.0 - 2.0 ** (-(a + 1))
        return Edge("radial", r_in, r_out, theta, theta) if forward else Edge("radial", r_out, r_in, theta, theta)
    r = 1.0 - 2.0 ** (-a)
    t0, t1 = TWO_PI * b / (1 << a), TWO_PI * (b + 1) / (1 << a)
    return Edge("arc", r, r, t0, t1) if forward else Edge("arc", r, r, t1, t0)


def boundary_pieces(tiles: Iterable[Tile]) -> Dict[Piece, bool]:
    """Pieces used by exactly one tile of the set, with that tile's direction"""
    used: Dict[Piece, bool] = {}
    for tile in tiles:
        for piece, forward in tile_pieces(tile):
            if piece in used:
                del used[piece]
            else:
                used[piece] = forward
    return used


def boundary_length(tiles: Iterable[Tile]) -> float:
    return sum(piece_edge(dp).length for dp in boundary_pieces(tiles).items())


def _signed_area(loop: Sequence[DirectedPiece]) -> float:
    area = 0.0
    for dp in loop:
        if dp[0][0] == "A":
            edge = piece_edge(dp)
            area += 0.5 * edge.r0 ** 2 * (edge.theta1 - edge.theta0)
    return area


def _trace_loops(pieces: Dict[Piece, bool]) -> List[List[DirectedPiece]]:
    outgoing: Dict[Vertex, List[DirectedPiece]] = {}
    for dp in pieces.items():
        outgoing.setdefault(_tail(dp), []).append(dp)
    unused = set(pieces.items())
    loops = []
    while unused:
        first = min(unused)
        unused.remove(first)
        loop = [first]
        current = first
        while True:
            vertex = _head(current)
            options = [dp for dp in outgoing.get(vertex, []) if dp in unused]
            if vertex == _tail(first):
                options.append(first)
            if not options:
                raise ContourError(f"boundary is open at vertex {vertex}")
            d_in = _direction(current)
            choice = min(options, key=lambda dp: (_TURN_PRIORITY[(_direction(dp) - d_in) % 4], dp))
            if choice == first:
                break
            unused.remove(choice)
            loop.append(choice)
            current = choice
        loops.append(loop)
    return loops


def _vertex_point(vertex: Vertex) -> complex:
    m, turn = vertex
    r = 1.0 - 2.0 ** (-m)
    angle = TWO_PI * float(turn)
    return complex(r * math.cos(angle), r * math.sin(angle))


# ---------------------------------------------------------------------------
# Components

@dataclass
class Component:
    """A connected component R_i of the region and its boundary Gamma_i

    `edges` is the outer boundary, positively oriented and starting at the
    anchor (least angle, then least radius). `holes` are inner boundaries.
    """
    component_id: int
    tiles: FrozenSet[Tile]
    edges: List[Edge]
    holes: List[List[Edge]]
    start_anchor: complex
    _cumulative: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        lengths = np.array([e.length for e in self.edges], dtype=float)
        self._cumulative = np.concatenate([[0.0], np.cumsum(lengths)])

    @property
    def has_holes(self) -> bool:
        return bool(self.holes)

    @property
    def arclength(self) -> float:
        return float(self._cumulative[-1])

    @property
    def cumulative(self) -> np.ndarray:
        return self._cumulative

    def all_edges(self) -> List[Edge]:
        return self.edges + [e for hole in self.holes for e in hole]

    def edge_at(self, s: float) -> Tuple[int, float]:
        """(edge index, local arclength) of the outer-boundary position s"""
        s = min(max(float(s), 0.0), self.arclength)
        i = int(np.searchsorted(self._cumulative, s, side="right")) - 1
        i = min(max(i, 0), len(self.edges) - 1)
        return i, s - float(self._cumulative[i])

    def point_at(self, s: float) -> complex:
        i, local = self.edge_at(s)
        return complex(self.edges[i].point_at(local))

    def locate(self, z: complex) -> str:
        """'interior', 'boundary' or 'exterior'"""
        z = complex(z)
        r = abs(z)
        if r == 0.0:
            nearby = [z]
        else:
            radial = z / r
            angular = 1j * radial
            step = BOUNDARY_TOLERANCE
            nearby = [z + step * (a * radial + b * angular) for a in (-1, 0, 1) for b in (-1, 0, 1)]
        inside = [tile_of(p) in self.tiles for p in nearby if abs(p) < 1.0]
        if inside and all(inside):
            return "interior"
        if any(inside):
            return "boundary"
        return "exterior"

    def contains(self, z: complex) -> bool:
        return self.locate(z) == "interior"

    def diameter(self) -> float:
        """Euclidean diameter of the outer boundary, up to the bounding-box diagonal"""
        points = np.array([e.start for e in self.edges] + [e.point_at(0.5 * e.length) for e in self.edges])
        span_re = points.real.max() - points.real.min()
        span_im = points.imag.max() - points.imag.min()
        return float(math.hypot(span_re, span_im))

    def to_dict(self) -> Dict:
        return {
            "id": self.component_id,
            "tiles": sorted([list(t) for t in self.tiles]),
            "edges": [e.to_dict() for e in self.edges],
            "holes": [[e.to_dict() for e in hole] for hole in self.holes],
            "arclength": self.arclength,
            "start_anchor": [self.start_anchor.real, self.start_anchor.imag],
            "has_holes": self.has_holes,
        }


def component_from_tiles(tiles: Iterable[Tile], component_id: int = 0) -> Component:
    """Component with the given (edge-connected) tiles"""
    tiles = frozenset((int(n), int(j)) for n, j in tiles)
    if not tiles:
        raise ContourError("a component needs at least one tile")
    loops = _trace_loops(boundary_pieces(tiles))
    areas = [_signed_area(loop) for loop in loops]
    outer = [i for i, a in enumerate(areas) if a > 0]
    if len(outer) != 1:
        raise ContourError(f"component {component_id} has {len(outer)} outer boundaries")
    outer_loop = loops[outer[0]]
    anchor_index = min(range(len(outer_loop)), key=lambda i: (_tail(outer_loop[i])[1], _tail(outer_loop[i])[0], i))
    outer_loop = outer_loop[anchor_index:] + outer_loop[:anchor_index]
    holes = [[piece_edge(dp) for dp in loop] for i, loop in enumerate(loops) if i != outer[0]]
    return Component(
        component_id=component_id,
        tiles=tiles,
        edges=[piece_edge(dp) for dp in outer_loop],
        holes=holes,
        start_anchor=_vertex_point(_tail(outer_loop[0])),
    )


def extract_components(tiles: Iterable[Tile]) -> List[Component]:
    """Split a tile set into edge-connected components, ordered by anchor"""
    tiles = sorted(set(tiles))
    parent = {t: t for t in tiles}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    owner: Dict[Piece, Tile] = {}
    for tile in tiles:
        for piece, _ in tile_pieces(tile):
            if piece in owner:
                a, b = find(owner[piece]), find(tile)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner[piece] = tile
    groups: Dict[Tile, List[Tile]] = {}
    for tile in tiles:
        groups.setdefault(find(tile), []).append(tile)
    components = [component_from_tiles(group) for group in groups.values()]
    components.sort(key=lambda c: (math.atan2(c.start_anchor.imag, c.start_anchor.real) % TWO_PI, abs(c.start_anchor)))
    for i, c in enumerate(components):
        c.component_id = i
    return components


# ---------------------------------------------------------------------------
# Contour

@dataclass
class BadRegion:
    """R(Q) for a maximal bad square: its own top half and every non-good one below it"""
    square: DyadicSquare
    tiles: FrozenSet[Tile]
    boundary_length: float

    def to_dict(self) -> Dict:
        return {
            **self.square.to_dict(),
            "tiles": sorted([list(t) for t in self.tiles]),
            "boundary_length": self.boundary_length,
        }


@dataclass
class ScalingRecord:
    """Maximal bad squares selected under one good square"""
    parent: DyadicSquare
    bad_squares: List[DyadicSquare]
    bad_side_sum: float
    boundary_sum: float = 0.0

    @property
    def holds(self) -> bool:
        return self.bad_side_sum <= 0.5 * self.parent.side

    def to_dict(self) -> Dict:
        return {
            **self.parent.to_dict(),
            "bad": [q.to_dict() for q in self.bad_squares],
            "bad_side_sum": self.bad_side_sum,
            "boundary_sum": self.boundary_sum,
            "holds": self.holds,
        }


@dataclass
class Contour:
    components: List[Component]
    params: ContourParams
    bad_regions: List[BadRegion] = field(default_factory=list)
    good_squares: List[DyadicSquare] = field(default_factory=list)
    scaling: List[ScalingRecord] = field(default_factory=list)
    unresolved: List[DyadicSquare] = field(default_factory=list)

    @property
    def delta(self) -> float:
        return self.params.delta

    def locate(self, z: complex) -> Optional[int]:
        """Id of the component whose interior contains z, if any"""
        for c in self.components:
            if c.contains(z):
                return c.component_id
        return None

    def all_edges(self) -> List[Edge]:
        return [e for c in self.components for e in c.all_edges()]

    def to_dict(self) -> Dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": self.params.to_dict(),
            "delta": self.delta,
            "components": [c.to_dict() for c in self.components],
            "bad_regions": [r.to_dict() for r in self.bad_regions],
            "good_squares": [q.to_dict() for q in self.good_squares],
            "scaling": [s.to_dict() for s in self.scaling],
            "unresolved": [q.to_dict() for q in self.unresolved],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Contour":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported contour schema_version {data.get('schema_version')}")
        components = []
        for entry in data["components"]:
            c = component_from_tiles([tuple(t) for t in entry["tiles"]], entry["id"])
            components.append(c)
        regions = [
            BadRegion(DyadicSquare(r["n"], r["j"]), frozenset(tuple(t) for t in r["tiles"]), r["boundary_length"])
            for r in data.get("bad_regions", [])
        ]
        scaling = [
            ScalingRecord(
                DyadicSquare(s["n"], s["j"]),
                [DyadicSquare(q["n"], q["j"]) for q in s["bad"]],
                s["bad_side_sum"],
                s.get("boundary_sum", 0.0),
            )
            for s in data.get("scaling", [])
        ]
        return cls(
            components=components,
            params=ContourParams.from_dict(data["params"]),
            bad_regions=regions,
            good_squares=[DyadicSquare(q["n"], q["j"]) for q in data.get("good_squares", [])],
            scaling=scaling,
            unresolved=[DyadicSquare(q["n"], q["j"]) for q in data.get("unresolved", [])],
        )


# ---------------------------------------------------------------------------
# The alternating construction

class _Classifier:
    """Classification with caching, level-parallel when workers > 1"""

    def __init__(self, B: BlaschkeProduct, params: ContourParams, executor: Optional[ThreadPoolExecutor]):
        self.B = B
        self.params = params
        self.executor = executor
        self.cache: Dict[Tuple[int, int, str], ClassifiedSquare] = {}
        self.values, self.counts = B.grouped_zeros()
        degree = B.degree
        if degree:
            self.reach = math.atanh(min(params.delta ** (1.0 / degree), 1.0 - 1e-16))
        else:
            self.reach = -math.inf

    def box_may_hold_bad(self, Q: DyadicSquare) -> bool:
        """A bad square below Q needs a zero within `reach` of the closed box of Q"""
        if not self.values.size:
            return False
        return bool(np.min(square_box_distance(Q, self.values)) < self.reach)

    def center_may_be_bad(self, Q: DyadicSquare) -> bool:
        if not self.values.size:
            return False
        return bool(np.min(hyp_dist(top_half(Q).center(), self.values)) < self.reach)

    def many(self, squares: List[DyadicSquare], mode: str) -> List[ClassifiedSquare]:
        todo = [Q for Q in squares if (Q.level, Q.index, mode) not in self.cache]
        if self.executor is not None and len(todo) > 1:
            results = list(self.executor.map(lambda Q: classify(self.B, Q, self.params, mode), todo))
        else:
            results = [classify(self.B, Q, self.params, mode) for Q in todo]
        for Q, res in zip(todo, results):
            self.cache[(Q.level, Q.index, mode)] = res
        return [self.cache[(Q.level, Q.index, mode)] for Q in squares]


def _maximal_bad_under(clf: _Classifier, root: DyadicSquare, include_root: bool) -> List[DyadicSquare]:
    d_max = clf.params.d_max
    frontier = [root] if include_root else list(children(root)) if root.level < d_max else []
    found: List[DyadicSquare] = []
    while frontier:
        frontier = [Q for Q in frontier if clf.box_may_hold_bad(Q)]
        to_classify = [Q for Q in frontier if clf.center_may_be_bad(Q)]
        kinds = {res.square: res.kind for res in clf.many(to_classify, "bad")}
        next_frontier = []
        for Q in frontier:
            if kinds.get(Q) is SquareKind.BAD:
                if Q.level >= d_max:
                    raise ContourError(f"bad square {Q.key} reaches d_max = {d_max}")
                found.append(Q)
            elif Q.level < d_max:
                next_frontier.extend(children(Q))
        frontier = next_frontier
    return found


def _maximal_good_under(clf: _Classifier, bad: DyadicSquare,
                        unresolved: List[DyadicSquare]) -> Tuple[List[DyadicSquare], List[DyadicSquare]]:
    """Maximal good squares below `bad` and the tiles between them

    A square still not good at d_max stays a tile and is appended to `unresolved`.
    """
    d_max = clf.params.d_max
    frontier = list(children(bad))
    good: List[DyadicSquare] = []
    rest: List[DyadicSquare] = []
    while frontier:
        results = clf.many(frontier, "good")
        next_frontier = []
        for res in results:
            Q = res.square
            if res.kind is SquareKind.GOOD:
                good.append(Q)
                continue
            rest.append(Q)
            if Q.level >= d_max:
                logger.warning("square %s below bad square %s is not good at d_max = %d", Q.key, bad.key, d_max)
                unresolved.append(Q)
                continue
            next_frontier.extend(children(Q))
        frontier = next_frontier
    return good, rest


def _alternate(B: BlaschkeProduct, params: ContourParams, executor) -> Tuple[Optional[Contour], List[ScalingRecord]]:
    clf = _Classifier(B, params, executor)
    root = DyadicSquare(0, 0)
    queue = deque([None])
    selected = set()
    regions: List[BadRegion] = []
    good_selected: List[DyadicSquare] = []
    scaling: List[ScalingRecord] = []
    unresolved: List[DyadicSquare] = []

    while queue:
        parent = queue.popleft()
        if parent is None:
            bads = _maximal_bad_under(clf, root, include_root=True)
        else:
            bads = _maximal_bad_under(clf, parent, include_root=False)
            record = ScalingRecord(parent, bads, sum(q.side for q in bads))
            scaling.append(record)
            if not record.holds:
                logger.info("scaling fails under %s (%.4g > %.4g) at delta=%.3g",
                            parent.key, record.bad_side_sum, 0.5 * parent.side, params.delta)
                return None, scaling
        for bad in bads:
            if bad.key in selected:
                raise ContourError(f"square {bad.key} selected twice")
            selected.add(bad.key)
            goods, rest = _maximal_good_under(clf, bad, unresolved)
            tiles = frozenset([bad.key] + [q.key for q in rest])
            regions.append(BadRegion(bad, tiles, boundary_length(tiles)))
            for q in goods:
                if q.key in selected:
                    raise ContourError(f"square {q.key} selected twice")
                selected.add(q.key)
            good_selected.extend(goods)
            queue.extend(goods)
        if parent is not None:
            region_length = {r.square: r.boundary_length for r in regions}
            scaling[-1].boundary_sum = sum(region_length[q] for q in bads)

    all_tiles = set()
    for region in regions:
        all_tiles |= region.tiles
    components = extract_components(all_tiles)
    logger.info("contour: %d bad squares, %d good squares, %d components",
                len(regions), len(good_selected), len(components))
    return Contour(components, params, regions, good_selected, scaling, unresolved), scaling


def build_contour(B: BlaschkeProduct, epsilon: float, N: int, mesh: float = 0.1, d_max: int = 16,
                  K: Optional[float] = None, budget: int = DEFAULT_BUDGET,
                  workers: int = 1) -> Tuple[Contour, float]:
    """Alternate maximal bad / maximal good squares into the contour Gamma

    delta starts at epsilon / 4 and is halved until every good square
    satisfies sum l(maximal bad below) <= l(Q) / 2.
    """
    params = ContourParams(epsilon=epsilon, N=N, K=K, mesh=mesh, d_max=d_max, budget=budget, workers=workers)
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            contour, _ = _alternate(B, params, executor)
            if contour is not None:
                return contour, params.delta
            delta = params.delta / 2.0
            if delta < DELTA_FLOOR:
                raise ContourError(f"delta adaptation exhausted below {DELTA_FLOOR}")
            params = params.with_delta(delta)
    finally:
        if executor is not None:
            executor.shutdown()


# ---------------------------------------------------------------------------
# Distances and membership

def _edge_distances(z: np.ndarray, edges: Sequence[Edge]) -> np.ndarray:
    """Matrix of hyperbolic distances, points x edges"""
    radial = [e for e in edges if e.kind == "radial"]
    arcs = [e for e in edges if e.kind == "arc"]
    parts = []
    zc = z[:, None]
    if radial:
        theta = np.array([e.theta0 for e in radial])
        lo = np.array([min(e.r0, e.r1) for e in radial])
        hi = np.array([max(e.r0, e.r1) for e in radial])
        parts.append(dist_to_radial(zc, theta[None, :], lo[None, :], hi[None, :]))
    if arcs:
        radius = np.array([e.r0 for e in arcs])
        start = np.array([min(e.theta0, e.theta1) for e in arcs])
        span = np.array([abs(e.theta1 - e.theta0) for e in arcs])
        parts.append(dist_to_circle_arc(zc, radius[None, :], start[None, :], span[None, :]))
    return np.concatenate(parts, axis=1)


def dist_to_edges(z, edges: Sequence[Edge]):
    z_arr = np.asarray(z, dtype=complex)
    flat = z_arr.reshape(-1)
    if not edges:
        out = np.full(flat.shape, math.inf)
    else:
        out = np.empty(flat.shape)
        rows = max(1, 500_000 // len(edges))
        for start in range(0, flat.size, rows):
            out[start:start + rows] = _edge_distances(flat[start:start + rows], edges).min(axis=1)
    out = out.reshape(z_arr.shape)
    return out if out.ndim else float(out)


def dist_to_contour(z, contour: Contour):
    """Hyperbolic distance to the nearest contour edge; +inf for an empty contour"""
    return dist_to_edges(z, contour.all_edges())


def point_in_interior(z: complex, component: Component) -> bool:
    """True strictly inside; points on the boundary are not interior"""
    return component.locate(z) == "interior"


def dist_to_interior(z, contour: Contour):
    """Hyperbolic distance to the union of the interiors (0 inside)"""
    z_arr = np.asarray(z, dtype=complex)
    flat = z_arr.reshape(-1)
    dist = np.asarray(dist_to_contour(flat, contour), dtype=float).reshape(-1)
    inside = np.array([contour.locate(p) is not None for p in flat], dtype=bool)
    dist = np.where(inside, 0.0, dist)
    dist = dist.reshape(z_arr.shape)
    return dist if dist.ndim else float(dist)


# ---------------------------------------------------------------------------
# Carleson norms

@dataclass
class CarlesonNorm:
    """4 x max over dyadic squares of mu(Q) / l(Q)"""
    norm: float
    dyadic_sup: float
    square: Optional[Tuple[int, int]]

    @property
    def strong_form_holds(self) -> bool:
        return self.dyadic_sup <= 17.0

    @property
    def bound_holds(self) -> bool:
        return self.norm <= 68.0

    def to_dict(self) -> Dict:
        return {
            "norm": self.norm,
            "dyadic_sup": self.dyadic_sup,
            "square": None if self.square is None else {"n": self.square[0], "j": self.square[1]},
            "within_bound": self.bound_holds,
            "dyadic_within_bound": self.strong_form_holds,
        }


def _spread_arc(acc: np.ndarray, lo: float, hi: float, mass: float) -> None:
    size = acc.size
    width = TWO_PI / size
    if hi <= lo:
        acc[int(lo // width) % size] += mass
        return
    density = mass / (hi - lo)
    first = int(math.floor(lo / width))
    last = int(math.ceil(hi / width))
    bins = np.arange(first, max(last, first + 1))
    overlap = np.minimum(hi, (bins + 1) * width) - np.maximum(lo, bins * width)
    overlap = np.maximum(overlap, 0.0)
    np.add.at(acc, bins % size, density * overlap)


def carleson_norm(atoms: Sequence[Tuple[object, float]], d_max: int) -> CarlesonNorm:
    """Dyadic Carleson norm of point masses and edge masses

    An atom is (point, mass) or (Edge, mass); edge mass is spread uniformly in
    angle along arcs and in radius along rays. Membership in Q_{n,j} is
    closed in depth (1 - r <= 2^-n) and rays on a dyadic angle count for both
    neighbours.
    """
    points = np.array([complex(a) for a, _ in atoms if not isinstance(a, Edge)], dtype=complex)
    point_mass = np.array([m for a, m in atoms if not isinstance(a, Edge)], dtype=float)
    edges = [(a, float(m)) for a, m in atoms if isinstance(a, Edge)]
    point_depth = 1.0 - np.abs(points)
    point_angle = np.mod(np.angle(points), TWO_PI)

    best, best_square = 0.0, None
    for n in range(1, d_max + 1):
        size = 1 << n
        side = 2.0 ** (-n)
        width = TWO_PI / size
        acc = np.zeros(size)
        if points.size:
            member = point_depth <= side * (1 + 1e-12)
            j = np.floor(point_angle[member] / width).astype(np.int64) % size
            acc += np.bincount(j, weights=point_mass[member], minlength=size)
        for edge, mass in edges:
            if edge.kind == "arc":
                if 1.0 - edge.r0 > side * (1 + 1e-12):
                    continue
                lo, hi = min(edge.theta0, edge.theta1), max(edge.theta0, edge.theta1)
                _spread_arc(acc, lo, hi, mass)
            else:
                r_lo, r_hi = min(edge.r0, edge.r1), max(edge.r0, edge.r1)
                cut = max(r_lo, 1.0 - side)
                if r_hi <= cut or r_hi == r_lo:
                    continue
                portion = mass * (r_hi - cut) / (r_hi - r_lo)
                position = edge.theta0 / width
                nearest = round(position)
                if abs(position - nearest) < 1e-9:
                    acc[nearest % size] += portion
                    acc[(nearest - 1) % size] += portion
                else:
                    acc[int(math.floor(position)) % size] += portion
        ratio = acc / side
        j_best = int(np.argmax(ratio))
        if ratio[j_best] > best:
            best, best_square = float(ratio[j_best]), (n, j_best)
    return CarlesonNorm(norm=4.0 * best, dyadic_sup=best, square=best_square)


def arclength_atoms(contour: Contour) -> List[Tuple[Edge, float]]:
    return [(e, e.length) for e in contour.all_edges()]
