#!/usr/bin/env python3
"""
Modulus Approximation
Approximates |B| for a finite Blaschke product by a product of interpolating
Blaschke products and checks every step of the construction
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from core.blaschke import BlaschkeProduct
from core.config_manager import ConfigManager, RunConfig
from core.contour import Contour
from core.discretize import DiscretizationResult, discretize
from core.generator import generate
from core.pipeline import (
    STAGE_ERRORS,
    Pipeline,
    compute_contour,
    compute_measures,
    compute_split,
    compute_verification,
    load_measures,
    load_product,
    read_json,
    save_measures,
    write_json,
)
from core.render import render
from core.verify import audit_contour

# Command-line flag -> RunConfig field
FLAG_FIELDS = {
    "input": "input",
    "generator": "generator",
    "epsilon": "epsilon",
    "bign": "bign",
    "k": "k_override",
    "mesh": "mesh",
    "dmax": "dmax",
    "walks": "walks",
    "seed": "seed",
    "out": "out",
    "render": "render",
    "workers": "workers",
}


def add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="Run file with `key = value` lines")
    parser.add_argument("--input", help="Zero-set JSON file")
    parser.add_argument("--generator", help="Generator spec, e.g. cluster:200,0.9,0.5")
    parser.add_argument("--epsilon", type=float, help="Target accuracy (default 0.25)")
    parser.add_argument("--bign", type=int, help="N; K = 2N unless --k is given (default 4)")
    parser.add_argument("--k", type=float, help="Override the neighbourhood radius K")
    parser.add_argument("--mesh", type=float, help="Hyperbolic mesh (default 0.1)")
    parser.add_argument("--dmax", type=int, help="Deepest dyadic level (default 16)")
    parser.add_argument("--walks", type=int, help="Walks per source (default 100000)")
    parser.add_argument("--seed", type=int, help="Run seed (default 0)")
    parser.add_argument("--out", help="Output directory (default output)")
    parser.add_argument("--render", action="store_true", default=None, help="Also write figure.svg")
    parser.add_argument("--workers", type=int, help="Worker threads (default 1)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")


def build_config(args) -> RunConfig:
    overrides = {field: getattr(args, flag) for flag, field in FLAG_FIELDS.items()}
    return ConfigManager(args.config).build(overrides)


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _contour_path(args, config: RunConfig) -> Path:
    return Path(args.contour) if getattr(args, "contour", None) else Path(config.out) / "contour.json"


def cmd_generate(args, config: RunConfig) -> int:
    if not config.generator:
        print("❌ generate needs --generator")
        return 1
    B = generate(config.generator, config.seed)
    path = B.save(Path(config.out) / "zeros.json")
    print(f"✅ {B.degree} zeros written to {path}")
    return 0


def cmd_contour(args, config: RunConfig) -> int:
    B = load_product(config)
    print(f"✓ Loaded {B.degree} zeros")
    contour = compute_contour(B, config)
    path = write_json(Path(config.out) / "contour.json", contour.to_dict())
    rng = np.random.default_rng(config.seed)
    audit = audit_contour(B, contour, config.conclusion_samples, rng)
    write_json(Path(config.out) / "contour_audit.json", audit.to_dict())
    print(f"✅ {len(contour.components)} components, delta = {contour.delta:.4g} -> {path}")
    if not audit.passed:
        print("⚠ Contour audit reported failures (see contour_audit.json)")
    return 0


def cmd_discretize(args, config: RunConfig) -> int:
    B = load_product(config)
    contour = Contour.from_dict(read_json(_contour_path(args, config)))
    split = compute_split(B, contour, config)
    print(f"✓ Split: {split.b1.degree} zeros in B1, {split.b2.degree} in B2")
    measures = compute_measures(contour, split, config)
    save_measures(Path(config.out) / "measures.json", measures)
    result = discretize(contour, measures)
    write_json(Path(config.out) / "discretization.json", result.to_dict())
    result.i1.save(Path(config.out) / "i1.json")
    print(f"✅ {len(result.arcs)} arcs, max moment residual {result.max_moment_residual:.3g}")
    return 0


def cmd_verify(args, config: RunConfig) -> int:
    out = Path(config.out)
    B = load_product(config)
    contour = Contour.from_dict(read_json(_contour_path(args, config)))
    split = compute_split(B, contour, config)
    measures = load_measures(out / "measures.json")
    result = DiscretizationResult.from_dict(read_json(out / "discretization.json"))
    rng = np.random.default_rng(config.seed)
    report = compute_verification(B, contour, split, measures, result, config, rng)
    write_json(out / "verification.json", report)
    sup = report["sup"]
    print(f"✓ sup | |B| - |I| | = {sup['sup_diff']:.4g} (+ {sup['slack']:.4g} slack)")
    if report["degraded"]:
        print(f"⚠ Degraded: {', '.join(report['degraded'])}")
    print("✅ Verified" if report["theorem_holds"] else "❌ Accuracy target missed")
    return 0 if report["theorem_holds"] else 1


def cmd_run(args, config: RunConfig) -> int:
    record = Pipeline(config).run()
    for name, stage in record.stages.items():
        status = stage.get("status")
        mark = {"ok": "✓", "failed": "❌", "skipped": "-"}.get(status, "?")
        line = f"{mark} {name}: {status}"
        if status == "failed":
            line += f" ({stage['error']})"
        print(line)
    if record.degraded:
        print(f"⚠ Degraded: {', '.join(record.degraded)}")
    print(f"\nRecord: {Path(config.out) / 'record.json'}  digest {record.digest()[:12]}")
    if record.failed:
        return 1
    print("✅ Done")
    return 0


def cmd_render(args, config: RunConfig) -> int:
    out = Path(config.out)
    B = BlaschkeProduct.load(config.input) if config.input else BlaschkeProduct.load(out / "zeros.json")
    contour_file = _contour_path(args, config)
    contour = Contour.from_dict(read_json(contour_file)) if contour_file.exists() else None
    disc_file = out / "discretization.json"
    result = DiscretizationResult.from_dict(read_json(disc_file)) if disc_file.exists() else None
    path = render(out / "figure.svg", B, contour, result)
    print(f"✅ Figure written to {path}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "contour": cmd_contour,
    "discretize": cmd_discretize,
    "verify": cmd_verify,
    "run": cmd_run,
    "render": cmd_render,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Approximate |B| by interpolating Blaschke products")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "Write a generated zero set",
        "contour": "Build the contour for a zero set",
        "discretize": "Harmonic measures, arcs and placed zeros for a built contour",
        "verify": "Verification reports for a discretized run",
        "run": "Full pipeline with record and summary",
        "render": "SVG figure (and PNG preview) of run artifacts",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        add_common_arguments(p)
        if name in ("discretize", "verify", "render"):
            p.add_argument("--contour", help="Contour JSON (default <out>/contour.json)")

    args = parser.parse_args(argv)
    configure_logging(args)

    print("📐 Modulus Approximation")
    print("=" * 40)

    try:
        config = build_config(args)
    except ValueError as e:
        print(f"❌ {e}")
        return 1

    try:
        return COMMANDS[args.command](args, config)
    except STAGE_ERRORS as e:
        print(f"❌ {type(e).__name__}: {e}")
        return 1
    except FileNotFoundError as e:
        print(f"❌ File not found: {e.filename}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
