"""
Rendering of run artifacts
SVG figure of the disk, selected squares, contour, zeros and placed zeros,
plus a small PNG preview
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from PIL import Image, ImageDraw

from .blaschke import BlaschkeProduct
from .contour import Contour, Edge
from .discretize import DiscretizationResult
from .dyadic import DyadicSquare

logger = logging.getLogger(__name__)

THUMBNAIL_SIZE = 400


def _edge_path(edges: Iterable[Edge], per_arc: int = 16) -> np.ndarray:
    points: List[complex] = []
    for e in edges:
        count = per_arc if e.kind == "arc" else 2
        s = np.linspace(0.0, e.length, count)
        points.extend(np.atleast_1d(e.point_at(s)).tolist())
    return np.array(points, dtype=complex)


def _square_outline(Q: DyadicSquare, per_arc: int = 24) -> np.ndarray:
    if Q.level == 0:
        t = np.linspace(0.0, 2 * np.pi, 4 * per_arc)
        return 0.5 * np.exp(1j * t)
    t = np.linspace(Q.theta_lo, Q.theta_lo + Q.span, per_arc)
    inner = (1.0 - Q.side) * np.exp(1j * t)
    outer = np.exp(1j * t[::-1])
    return np.concatenate([inner, outer, inner[:1]])


def _outer_paths(contour: Optional[Contour]) -> List[np.ndarray]:
    if contour is None:
        return []
    return [_edge_path(c.edges) for c in contour.components]


def _hole_paths(contour: Optional[Contour]) -> List[np.ndarray]:
    if contour is None:
        return []
    return [_edge_path(hole) for c in contour.components for hole in c.holes]


def cut_points(contour: Contour, result: DiscretizationResult) -> np.ndarray:
    """Start point of every arc; the first arc of a component starts at its anchor"""
    by_id = {c.component_id: c for c in contour.components}
    return np.array([by_id[a.component_id].point_at(a.s_lo) for a in result.arcs], dtype=complex)


def render(svg_path, zeros: BlaschkeProduct, contour: Optional[Contour] = None,
           result: Optional[DiscretizationResult] = None, thumbnail: bool = True) -> Path:
    """Write the SVG figure (and a PNG preview next to it)"""
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    matplotlib.rcParams["svg.hashsalt"] = "modulus-approx"

    fig = Figure(figsize=(7, 7))
    ax = fig.subplots()
    t = np.linspace(0.0, 2 * np.pi, 512)
    ax.plot(np.cos(t), np.sin(t), color="k", linewidth=1.0, label="unit circle")

    if contour is not None:
        for i, Q in enumerate(contour.good_squares):
            path = _square_outline(Q)
            ax.plot(path.real, path.imag, color="tab:green", linewidth=0.5,
                    label="good squares" if i == 0 else None)
        for i, region in enumerate(contour.bad_regions):
            path = _square_outline(region.square)
            ax.plot(path.real, path.imag, color="tab:red", linewidth=0.5,
                    label="bad squares" if i == 0 else None)
        for i, path in enumerate(_outer_paths(contour)):
            ax.plot(path.real, path.imag, color="tab:blue", linewidth=1.2,
                    label="contour" if i == 0 else None)
        for path in _hole_paths(contour):
            ax.plot(path.real, path.imag, color="tab:blue", linewidth=1.0, linestyle="--")

    z = zeros.all_zeros()
    if z.size:
        ax.scatter(z.real, z.imag, s=4, color="k", label="zeros of B", zorder=3)

    if contour is not None and result is not None and result.arcs:
        cuts = cut_points(contour, result)
        ax.scatter(cuts.real, cuts.imag, s=18, marker="|", color="tab:purple", label="arc cuts", zorder=4)
        xi = np.array([a.placed_zero for a in result.arcs])
        ax.scatter(xi.real, xi.imag, s=14, marker="x", color="tab:orange", label="placed zeros", zorder=4)

    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.legend(loc="upper right", fontsize=7, frameon=False)
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    logger.info("figure written to %s", svg_path)

    if thumbnail:
        create_thumbnail(svg_path.with_suffix(".png"), zeros, contour, result)
    return svg_path


def create_thumbnail(output_path, zeros: BlaschkeProduct, contour: Optional[Contour] = None,
                     result: Optional[DiscretizationResult] = None) -> Path:
    """Raster preview of the same scene"""
    size = THUMBNAIL_SIZE
    img = Image.new("RGB", (size, size))
    draw = ImageDraw.Draw(img)

    # Soft vertical gradient background
    top, bottom = (246, 248, 255), (226, 232, 250)
    for y in range(size):
        ratio = y / size
        color = tuple(int(top[i] * (1 - ratio) + bottom[i] * ratio) for i in range(3))
        draw.rectangle([(0, y), (size, y + 1)], fill=color)

    half = size / 2.0
    scale = 0.47 * size

    def pixel(w: complex):
        return (half + scale * w.real, half - scale * w.imag)

    draw.ellipse([pixel(complex(-1, 1)), pixel(complex(1, -1))], outline=(0, 0, 0), width=2)

    for path in _outer_paths(contour) + _hole_paths(contour):
        draw.line([pixel(w) for w in path], fill=(31, 119, 180), width=2)

    for w in zeros.all_zeros():
        x, y = pixel(w)
        draw.ellipse([(x - 1, y - 1), (x + 1, y + 1)], fill=(0, 0, 0))

    if result is not None:
        for a in result.arcs:
            x, y = pixel(a.placed_zero)
            draw.line([(x - 3, y - 3), (x + 3, y + 3)], fill=(255, 127, 14), width=1)
            draw.line([(x - 3, y + 3), (x + 3, y - 3)], fill=(255, 127, 14), width=1)

    output_path = Path(output_path)
    img.save(output_path, "PNG", optimize=True)
    return output_path
