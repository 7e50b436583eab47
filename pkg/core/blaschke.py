"""
Finite Blaschke products
Representation, stable modulus evaluation, zero-set files and the split of a
product against a contour
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .geometry import add_distance, circle_count, move_from, pseudo_dist_array, to_disk_point

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

# Above this many zeros the modulus is accumulated as a sum of logs.
LOG_SPACE_THRESHOLD = 32

# Rows x zeros evaluated per block.
BLOCK_ENTRIES = 2_000_000

WITNESS_RING_CAP = 4096


class ZeroHitError(ValueError):
    """log|B| requested at a zero of B"""


class ZeroSetFormatError(ValueError):
    """A zero-set file that does not follow the documented schema"""


@dataclass(frozen=True)
class BlaschkeProduct:
    """e^{i c} z^m prod (|z_n| / z_n) (z_n - z) / (1 - conj(z_n) z)

    Zeros are stored with repetition; the origin factor is kept apart.
    """
    origin_multiplicity: int = 0
    zeros: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    unimodular_constant: float = 0.0

    def __post_init__(self):
        zeros = np.asarray(self.zeros, dtype=complex).reshape(-1)
        if self.origin_multiplicity < 0:
            raise ValueError("origin multiplicity must be non-negative")
        if zeros.size:
            if not np.all(np.isfinite(zeros)):
                raise ValueError("zeros must be finite")
            if np.any(np.abs(zeros) >= 1.0):
                raise ValueError("zeros must lie strictly inside the unit disk")
            if np.any(zeros == 0):
                raise ValueError("zeros at the origin belong in origin_multiplicity")
        zeros = zeros.copy()
        zeros.setflags(write=False)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "origin_multiplicity", int(self.origin_multiplicity))
        object.__setattr__(self, "unimodular_constant", float(self.unimodular_constant) % (2 * math.pi))

    @property
    def degree(self) -> int:
        return self.origin_multiplicity + int(self.zeros.size)

    def all_zeros(self) -> np.ndarray:
        """Zeros including the origin repeated by its multiplicity"""
        return np.concatenate([np.zeros(self.origin_multiplicity, dtype=complex), self.zeros])

    def grouped_zeros(self):
        """Distinct zeros (origin included) with their multiplicities"""
        values, counts = np.unique(self.zeros, return_counts=True)
        if self.origin_multiplicity:
            values = np.concatenate([[0j], values])
            counts = np.concatenate([[self.origin_multiplicity], counts])
        return values.astype(complex), counts.astype(int)

    def multiply(self, other: "BlaschkeProduct") -> "BlaschkeProduct":
        return BlaschkeProduct(
            origin_multiplicity=self.origin_multiplicity + other.origin_multiplicity,
            zeros=np.concatenate([self.zeros, other.zeros]),
            unimodular_constant=self.unimodular_constant + other.unimodular_constant,
        )

    @classmethod
    def from_zeros(cls, zeros, unimodular_constant: float = 0.0) -> "BlaschkeProduct":
        """Build from a flat zero list, moving exact origin zeros into the z^m factor"""
        zeros = np.asarray(zeros, dtype=complex).reshape(-1)
        at_origin = zeros == 0
        return cls(
            origin_multiplicity=int(np.count_nonzero(at_origin)),
            zeros=zeros[~at_origin],
            unimodular_constant=unimodular_constant,
        )

    def to_dict(self) -> Dict:
        values, counts = np.unique(self.zeros, return_counts=True)
        return {
            "schema_version": SCHEMA_VERSION,
            "origin_multiplicity": self.origin_multiplicity,
            "unimodular_constant": self.unimodular_constant,
            "zeros": [
                {"re": float(v.real), "im": float(v.imag), "multiplicity": int(c)}
                for v, c in zip(values, counts)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "BlaschkeProduct":
        if not isinstance(data, dict) or "zeros" not in data:
            raise ZeroSetFormatError("zero set must be an object with a 'zeros' list")
        if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ZeroSetFormatError(f"unsupported schema_version {data.get('schema_version')}")
        zeros: List[complex] = []
        origin = int(data.get("origin_multiplicity", 0))
        try:
            for entry in data["zeros"]:
                z = to_disk_point((entry["re"], entry["im"]))
                multiplicity = int(entry.get("multiplicity", 1))
                if multiplicity < 1:
                    raise ZeroSetFormatError(f"multiplicity must be positive: {entry}")
                if z == 0:
                    origin += multiplicity
                else:
                    zeros.extend([z] * multiplicity)
        except (KeyError, TypeError) as e:
            raise ZeroSetFormatError(f"malformed zero entry: {e}") from e
        except ValueError as e:
            raise ZeroSetFormatError(str(e)) from e
        return cls(
            origin_multiplicity=origin,
            zeros=np.array(zeros, dtype=complex),
            unimodular_constant=float(data.get("unimodular_constant", 0.0)),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        return path

    @classmethod
    def load(cls, path) -> "BlaschkeProduct":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ZeroSetFormatError(f"{path}: not valid JSON ({e})") from e
        return cls.from_dict(data)


def _log_factors(B: BlaschkeProduct, z: np.ndarray) -> np.ndarray:
    """sum_n log rho(z, z_n) + m log|z| for a flat array z"""
    values, counts = B.grouped_zeros()
    out = np.zeros(z.shape, dtype=float)
    if values.size == 0:
        return out
    rows = max(1, BLOCK_ENTRIES // values.size)
    with np.errstate(divide="ignore"):
        for start in range(0, z.size, rows):
            block = z[start:start + rows, None]
            rho = pseudo_dist_array(block, values[None, :])
            out[start:start + rows] = np.log(rho) @ counts
    return out


def eval_modulus(B: BlaschkeProduct, z):
    """|B(z)| for a point or an array of points"""
    z_arr = np.asarray(z, dtype=complex)
    flat = z_arr.reshape(-1)
    if B.degree > LOG_SPACE_THRESHOLD:
        result = np.exp(_log_factors(B, flat))
    else:
        result = np.ones(flat.shape, dtype=float)
        values, counts = B.grouped_zeros()
        for v, c in zip(values, counts):
            result *= pseudo_dist_array(flat, v) ** int(c)
    result = result.reshape(z_arr.shape)
    return result if result.ndim else float(result)


def log_modulus(B: BlaschkeProduct, z):
    """log|B(z)|; raises ZeroHitError at a zero of B"""
    z_arr = np.asarray(z, dtype=complex)
    flat = z_arr.reshape(-1)
    result = _log_factors(B, flat)
    if np.any(np.isneginf(result)):
        raise ZeroHitError("log|B| is -inf at a zero of B")
    result = result.reshape(z_arr.shape)
    return result if result.ndim else float(result)


def modulus_upper_bound(values: np.ndarray, counts: np.ndarray, center: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Upper bound for |B| on pseudohyperbolic balls rho(w, center) <= tau

    Each factor rho(w, z_n) is at most (rho(c, z_n) + tau) / (1 + rho(c, z_n) tau).
    """
    center = np.asarray(center, dtype=complex).reshape(-1)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), center.shape)
    if values.size == 0:
        return np.ones(center.shape)
    rho = pseudo_dist_array(center[:, None], values[None, :])
    bound = np.minimum(add_distance(rho, tau[:, None]), 1.0)
    with np.errstate(divide="ignore"):
        return np.exp(np.log(bound) @ counts)


# ---------------------------------------------------------------------------
# Witnesses and the split against a contour

@dataclass
class Witness:
    zero: complex
    multiplicity: int
    point: Optional[complex]
    distance: Optional[float]
    value: float
    within_k14: bool
    within_2n15: bool

    def to_dict(self) -> Dict:
        return {
            "zero": [self.zero.real, self.zero.imag],
            "multiplicity": self.multiplicity,
            "point": None if self.point is None else [self.point.real, self.point.imag],
            "distance": self.distance,
            "value": self.value,
            "within_k14": self.within_k14,
            "within_2n15": self.within_2n15,
        }


def find_witness(B: BlaschkeProduct, center: complex, threshold: float, radius: float, mesh: float):
    """First point w (by hyperbolic distance) with |B(w)| > threshold

    Walks rings around `center` at hyperbolic radii mesh, 2 mesh, ... up to
    `radius`. Each ring gets enough points for neighbours to be within
    `mesh`, capped at WITNESS_RING_CAP. Returns (point, distance, value) or
    (None, None, best value).
    """
    best = float(eval_modulus(B, center))
    if best > threshold:
        return complex(center), 0.0, best
    for t in np.arange(mesh, radius + 0.5 * mesh, mesh):
        r = math.tanh(t)
        n = min(circle_count(r, mesh), WITNESS_RING_CAP)
        points = move_from(center, r * np.exp(2j * np.pi * np.arange(n) / n))
        values = eval_modulus(B, points)
        hit = int(np.argmax(values > threshold))
        if values[hit] > threshold:
            return complex(points[hit]), float(t), float(values[hit])
        best = max(best, float(values.max()))
    return None, None, best


@dataclass
class SplitResult:
    b1: BlaschkeProduct
    b2: BlaschkeProduct
    b1_by_component: Dict[int, BlaschkeProduct]
    witnesses: List[Witness]

    @property
    def witness_coverage(self) -> float:
        """Fraction of B2 zeros (with multiplicity) that have a witness"""
        total = sum(w.multiplicity for w in self.witnesses)
        if total == 0:
            return 1.0
        return sum(w.multiplicity for w in self.witnesses if w.point is not None) / total

    def summary(self) -> Dict:
        return {
            "b1_zeros": self.b1.degree,
            "b2_zeros": self.b2.degree,
            "b1_by_component": {str(k): v.degree for k, v in sorted(self.b1_by_component.items())},
            "witness_coverage": self.witness_coverage,
            "witness_shortfalls": [w.to_dict() for w in self.witnesses if w.point is None],
        }


def split_by_contour(B: BlaschkeProduct, contour, delta: float, N: int, mesh: float = 0.1,
                     K: Optional[float] = None) -> SplitResult:
    """B = B1 * B2 with B1 holding the zeros deep inside the contour

    A zero goes to B1 when it is interior to some component and at hyperbolic
    distance more than 1 from that component's boundary. Every B2 zero gets a
    witness search for |B2(w)| > delta within radius 2N + 15.
    """
    from .contour import dist_to_contour

    K = 2 * N if K is None else K
    values, counts = B.grouped_zeros()
    inside: Dict[int, List[int]] = {}
    rest: List[int] = []
    for idx, z in enumerate(values):
        component = contour.locate(z) if contour.components else None
        if component is not None and dist_to_contour(z, contour) > 1.0:
            inside.setdefault(component, []).append(idx)
        else:
            rest.append(idx)

    def product_of(indices: List[int]) -> BlaschkeProduct:
        origin = 0
        zeros: List[complex] = []
        for i in indices:
            if values[i] == 0:
                origin += int(counts[i])
            else:
                zeros.extend([values[i]] * int(counts[i]))
        return BlaschkeProduct(origin_multiplicity=origin, zeros=np.array(zeros, dtype=complex))

    b1_by_component = {cid: product_of(idx) for cid, idx in sorted(inside.items())}
    b1 = product_of([i for idx in inside.values() for i in idx])
    b2 = product_of(rest)
    b2 = BlaschkeProduct(b2.origin_multiplicity, b2.zeros, B.unimodular_constant)

    witnesses: List[Witness] = []
    radius = 2 * N + 15
    for i in rest:
        point, distance, value = find_witness(b2, complex(values[i]), delta, radius, mesh)
        witnesses.append(Witness(
            zero=complex(values[i]),
            multiplicity=int(counts[i]),
            point=point,
            distance=distance,
            value=value,
            within_k14=distance is not None and distance <= K + 14,
            within_2n15=distance is not None,
        ))
    shortfalls = [w for w in witnesses if w.point is None]
    if shortfalls:
        logger.warning("%d B2 zeros have no witness above delta within %s", len(shortfalls), radius)
    logger.info("split: %d zeros in B1, %d in B2", b1.degree, b2.degree)
    return SplitResult(b1=b1, b2=b2, b1_by_component=b1_by_component, witnesses=witnesses)
