"""
End-to-end run of the approximation
contour -> split -> harmonic measures -> discretization -> verification,
with one JSON record per run, a CSV summary and optional figures
"""

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .blaschke import (
    BlaschkeProduct,
    SplitResult,
    ZeroHitError,
    ZeroSetFormatError,
    log_modulus,
    split_by_contour,
)
from .config_manager import ConfigError, RunConfig
from .contour import Contour, ContourError, build_contour
from .discretize import DiscretizationResult, discretize
from .generator import generate
from .geometry import DiskPointError, build_net, random_disk_points
from .harmonic_measure import (
    BoundaryMeasure,
    HarmonicConfig,
    HarmonicMeasureError,
    mean_value_check,
    mean_value_error,
    measures_for,
)
from .verify import (
    DiagnosticsError,
    admissible_points,
    audit_contour,
    delta_floor_check,
    far_field_report,
    interpolation_report,
    product_zeros,
    sup_modulus_diff,
    telescoping_check,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

STAGES = ("input", "contour", "split", "measure", "discretize", "verify")

# Errors a stage may raise on bad input or a failed construction
STAGE_ERRORS = (
    DiskPointError,
    ZeroHitError,
    ZeroSetFormatError,
    ConfigError,
    ContourError,
    HarmonicMeasureError,
    DiagnosticsError,
)

FAR_FIELD_POINTS = 20_000

TELESCOPING_GATE = 0.02


@dataclass
class PipelineRecord:
    config: Dict
    stages: Dict[str, Dict] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(s.get("status") == "failed" for s in self.stages.values())

    @property
    def degraded(self) -> List[str]:
        return sorted({d for s in self.stages.values() for d in s.get("degraded", [])})

    def hashed_portion(self) -> Dict:
        return {"schema_version": SCHEMA_VERSION, "config": self.config, "stages": self.stages}

    def digest(self) -> str:
        payload = json.dumps(self.hashed_portion(), sort_keys=True, default=_json_default)
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_dict(self) -> Dict:
        return {**self.hashed_portion(), "degraded": self.degraded, "timings": self.timings, "digest": self.digest()}


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(path: Path, data: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
    return path


def read_json(path: Path) -> Dict:
    with open(path, "r") as f:
        return json.load(f)


def save_measures(path: Path, measures: Dict[int, BoundaryMeasure]) -> Path:
    return write_json(path, {
        "schema_version": SCHEMA_VERSION,
        "measures": [m.to_dict() for _, m in sorted(measures.items())],
    })


def load_measures(path: Path) -> Dict[int, BoundaryMeasure]:
    data = read_json(path)
    measures = [BoundaryMeasure.from_dict(m) for m in data["measures"]]
    return {m.component_id: m for m in measures}


def load_product(config: RunConfig) -> BlaschkeProduct:
    if config.input:
        try:
            return BlaschkeProduct.load(config.input)
        except OSError as e:
            raise ZeroSetFormatError(f"cannot read {config.input}: {e}") from e
    if config.generator:
        try:
            return generate(config.generator, config.seed)
        except ValueError as e:
            raise ConfigError(str(e)) from e
    raise ConfigError("no input zero set or generator given")


# ---------------------------------------------------------------------------
# Stages

def compute_contour(B: BlaschkeProduct, config: RunConfig) -> Contour:
    """Contour for accuracy epsilon / 2, so |B| < epsilon / 2 near the interior"""
    contour, delta = build_contour(
        B, config.contour_epsilon, config.bign, mesh=config.mesh, d_max=config.dmax,
        K=config.K, budget=config.square_budget, workers=config.workers,
    )
    logger.info("contour built with delta = %.4g", delta)
    return contour


def contour_summary(contour: Contour, audit) -> Dict:
    degraded = []
    if not audit.passed:
        degraded.append("contour_conclusions")
    if not (audit.region_bound_holds and audit.summed_bound_holds):
        degraded.append("boundary_length")
    if contour.unresolved:
        degraded.append("neutral_at_dmax")
    return {
        "status": "ok",
        "components": len(contour.components),
        "epsilon": contour.params.epsilon,
        "delta": contour.delta,
        "K": contour.params.K,
        "bad_squares": len(contour.bad_regions),
        "good_squares": len(contour.good_squares),
        "has_holes": any(c.has_holes for c in contour.components),
        "unresolved_squares": [q.key for q in contour.unresolved],
        "arclength": sum(c.arclength for c in contour.components),
        "carleson_norm": audit.arclength_norm["norm"],
        "audit": audit.to_dict(),
        "degraded": degraded,
    }


def compute_split(B: BlaschkeProduct, contour: Contour, config: RunConfig) -> SplitResult:
    return split_by_contour(B, contour, contour.delta, config.bign, mesh=config.mesh, K=config.K)


def split_summary(split: SplitResult) -> Dict:
    summary = split.summary()
    summary["status"] = "ok"
    summary["degraded"] = ["witness_coverage"] if split.witness_coverage < 0.99 else []
    return summary


def harmonic_config(config: RunConfig) -> HarmonicConfig:
    return HarmonicConfig(walks=config.walks, seed=config.seed, chunk_walks=config.chunk_walks,
                          workers=config.workers)


def compute_measures(contour: Contour, split: SplitResult, config: RunConfig) -> Dict[int, BoundaryMeasure]:
    return measures_for(contour.components, split.b1_by_component, harmonic_config(config))


def measure_summary(contour: Contour, split: SplitResult, measures: Dict[int, BoundaryMeasure],
                    config: RunConfig, rng: np.random.Generator) -> Dict:
    """Totals per component and the mean-value identity on exterior points"""
    per_component = {}
    degraded = []
    by_id = {c.component_id: c for c in contour.components}
    for cid, measure in sorted(measures.items()):
        component = by_id[cid]
        b1 = split.b1_by_component[cid]
        candidates = random_disk_points(rng, 8 * config.exterior_points, config.dmax)
        outside = [z for z in candidates if component.locate(z) == "exterior"][:config.exterior_points]
        violations, worst = 0, 0.0
        for z in outside:
            lhs = abs(float(log_modulus(b1, z)))
            residual = mean_value_check(b1, measure, z, component)
            allowed = 0.01 * lhs + 3.0 * mean_value_error(measure, z, component)
            worst = max(worst, residual / allowed if allowed > 0 else 0.0)
            if residual > allowed:
                violations += 1
        per_component[str(cid)] = {
            "total": measure.total,
            "raw_total": measure.raw_total,
            "renormalization_factor": measure.renormalization_factor,
            "stat_error": measure.stat_error,
            "bins": int(measure.bin_masses.size),
            "mean_value_points": len(outside),
            "mean_value_violations": violations,
            "mean_value_worst_ratio": worst,
        }
        if abs(1.0 - measure.raw_total / max(measure.total, 1e-300)) > 0.02:
            degraded.append("renormalization")
        if violations:
            degraded.append("mean_value_identity")
    return {"status": "ok", "components": per_component, "degraded": sorted(set(degraded))}


def discretization_summary(result: DiscretizationResult) -> Dict:
    summary = result.summary()
    degraded = []
    if result.max_mass_error > 1e-9:
        degraded.append("arc_mass")
    if result.max_moment_residual > 1e-6:
        degraded.append("moment_residual")
    if not summary["floor_holds"]:
        degraded.append("length_floor")
    summary.update({"status": "ok", "degraded": degraded})
    return summary


def compute_verification(B: BlaschkeProduct, contour: Contour, split: SplitResult,
                         measures: Dict[int, BoundaryMeasure], result: DiscretizationResult,
                         config: RunConfig, rng: np.random.Generator,
                         arclength_norm: Optional[float] = None) -> Dict:
    I = split.b2.multiply(result.i1)
    net = build_net(config.mesh, config.net_depth)
    sup = sup_modulus_diff(B, I, net)

    reports = {
        "i1_odd": interpolation_report(product_zeros(result.i1_odd)),
        "i1_even": interpolation_report(product_zeros(result.i1_even)),
        "b2": interpolation_report(product_zeros(split.b2)),
    }
    floor = delta_floor_check(split.b1, contour)
    picks = net.points if net.count <= FAR_FIELD_POINTS else rng.choice(net.points, FAR_FIELD_POINTS, replace=False)
    far = far_field_report(picks, I, split.b1, result.i1, contour, config.bign, config.epsilon)
    points = admissible_points(contour, config.bign, config.admissible_points, rng, depth_limit=config.dmax)
    telescoping = telescoping_check(points, result, measures, contour, split.b1, config.bign,
                                    TELESCOPING_GATE, arclength_norm)

    degraded = []
    theorem = sup.bound <= config.epsilon
    if not theorem:
        degraded.append("sup_diff")
    if not sup.tail_certified:
        degraded.append("tail")
    for name in ("i1_odd", "i1_even"):
        report = reports[name]
        threshold = (config.min_separation, config.max_carleson) if config.strict_interpolation else (0.0, math.inf)
        if report.zero_count >= 2 and not report.passes(*threshold):
            degraded.append(f"interpolation_{name}")
    if not floor.holds:
        degraded.append("delta_floor")
    if not telescoping.holds:
        degraded.append("telescoping")
    if not (far.far_holds and far.near_holds):
        degraded.append("far_field")

    return {
        "status": "ok",
        "theorem_holds": theorem,
        "sup": sup.to_dict(),
        "interpolation": {k: v.to_dict() for k, v in reports.items()},
        "witness_coverage": split.witness_coverage,
        "delta_floor": floor.to_dict(),
        "far_field": far.to_dict(),
        "telescoping": telescoping.to_dict(),
        "i_zeros": I.degree,
        "degraded": degraded,
    }


# ---------------------------------------------------------------------------
# The driver

@dataclass
class RunArtifacts:
    B: Optional[BlaschkeProduct] = None
    contour: Optional[Contour] = None
    split: Optional[SplitResult] = None
    measures: Optional[Dict[int, BoundaryMeasure]] = None
    result: Optional[DiscretizationResult] = None


class Pipeline:
    def __init__(self, config: RunConfig):
        self.config = config.validate()
        self.out_dir = Path(config.out)
        self.artifacts = RunArtifacts()

    def run(self) -> PipelineRecord:
        """Run every stage; a failing stage is recorded and the rest are skipped"""
        config = self.config
        record = PipelineRecord(config=config.to_dict())
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(1,)))
        art = self.artifacts
        norm_holder = {}

        def input_stage():
            art.B = load_product(config)
            art.B.save(self.out_dir / "zeros.json")
            return {"status": "ok", "zeros": art.B.degree, "degraded": []}

        def contour_stage():
            art.contour = compute_contour(art.B, config)
            write_json(self.out_dir / "contour.json", art.contour.to_dict())
            audit = audit_contour(art.B, art.contour, config.conclusion_samples, rng)
            norm_holder["norm"] = audit.arclength_norm["norm"]
            return contour_summary(art.contour, audit)

        def split_stage():
            art.split = compute_split(art.B, art.contour, config)
            return split_summary(art.split)

        def measure_stage():
            art.measures = compute_measures(art.contour, art.split, config)
            save_measures(self.out_dir / "measures.json", art.measures)
            return measure_summary(art.contour, art.split, art.measures, config, rng)

        def discretize_stage():
            art.result = discretize(art.contour, art.measures)
            write_json(self.out_dir / "discretization.json", art.result.to_dict())
            art.result.i1.save(self.out_dir / "i1.json")
            return discretization_summary(art.result)

        def verify_stage():
            return compute_verification(art.B, art.contour, art.split, art.measures, art.result,
                                        config, rng, norm_holder.get("norm"))

        stages = dict(zip(STAGES, (input_stage, contour_stage, split_stage, measure_stage,
                                   discretize_stage, verify_stage)))
        failed = False
        for name, stage in stages.items():
            if failed:
                record.stages[name] = {"status": "skipped"}
                continue
            start = time.perf_counter()
            try:
                record.stages[name] = stage()
            except STAGE_ERRORS as e:
                logger.error("stage %s failed: %s", name, e)
                record.stages[name] = {"status": "failed", "error": f"{type(e).__name__}: {e}"}
                failed = True
            record.timings[name] = round(time.perf_counter() - start, 3)

        self.write(record)
        if config.render and art.B is not None:
            from .render import render
            render(self.out_dir / "figure.svg", art.B, art.contour, art.result)
        return record

    def write(self, record: PipelineRecord) -> Tuple[Path, Path]:
        record_path = write_json(self.out_dir / "record.json", record.to_dict())
        summary_path = write_summary(self.out_dir / "summary.csv", record)
        return record_path, summary_path


def _summary_rows(record: PipelineRecord) -> List[Tuple[str, object]]:
    rows: List[Tuple[str, object]] = [("digest", record.digest())]
    for name in STAGES:
        stage = record.stages.get(name, {"status": "skipped"})
        rows.append((f"{name}.status", stage.get("status")))
        if name in record.timings:
            rows.append((f"{name}.seconds", record.timings[name]))
    stages = record.stages
    picks = [
        ("contour", "components"), ("contour", "delta"), ("contour", "carleson_norm"),
        ("split", "b1_zeros"), ("split", "b2_zeros"), ("split", "witness_coverage"),
        ("discretize", "arc_count"), ("discretize", "max_moment_residual"), ("discretize", "min_hyp_length"),
        ("verify", "theorem_holds"),
    ]
    for stage, key in picks:
        if key in stages.get(stage, {}):
            rows.append((f"{stage}.{key}", stages[stage][key]))
    sup = stages.get("verify", {}).get("sup")
    if sup:
        rows.extend([("verify.sup_diff", sup["sup_diff"]), ("verify.slack", sup["slack"]),
                     ("verify.tail_floor", sup["tail_floor"])])
    rows.append(("degraded", ";".join(record.degraded)))
    return rows


def write_summary(path: Path, record: PipelineRecord) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "value"])
        writer.writerows(_summary_rows(record))
    return path
