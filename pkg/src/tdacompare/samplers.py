"""Seeded samplers for the circle-family example geometries.

All built-in shapes are 2-D and noise-free: every point lies exactly on its
generating circle, with angles drawn i.i.d. uniform on [0, 2*pi).  Randomness
comes from numpy's PCG64 generator (``np.random.default_rng``), so a
(spec, n, seed) triple always reproduces the same cloud bit for bit.

A point cloud is a plain ``(n, 2)`` float64 array.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

CIRCLE = "circle"
TWO_DISTINCT_CIRCLES = "two_distinct_circles"
TWO_CONCENTRIC_CIRCLES = "two_concentric_circles"

_KINDS = (CIRCLE, TWO_DISTINCT_CIRCLES, TWO_CONCENTRIC_CIRCLES)


@dataclass(frozen=True)
class ShapeSpec:
    """Geometry of one sampled object.

    kind:  one of CIRCLE, TWO_DISTINCT_CIRCLES, TWO_CONCENTRIC_CIRCLES.
    radii: one radius for a plain circle, two for the two-circle objects.
    gap:   minimal distance between the two distinct circles (distinct only).
    split: fraction of points placed on the first circle of a two-circle
           object; the first circle gets floor(split * n) points.
    """

    kind: str
    radii: tuple[float, ...]
    gap: float = 0.0
    split: float = 0.4


def validate_spec(spec: ShapeSpec) -> None:
    """Raise ValueError if the spec describes an invalid geometry."""
    if spec.kind not in _KINDS:
        raise ValueError(f"unknown shape kind {spec.kind!r}")
    radii = tuple(float(r) for r in spec.radii)
    if any(r <= 0.0 for r in radii):
        raise ValueError(f"radii must be positive, got {radii}")
    want = 1 if spec.kind == CIRCLE else 2
    if len(radii) != want:
        raise ValueError(f"{spec.kind} needs {want} radius value(s), got {len(radii)}")
    if spec.kind != CIRCLE and not 0.0 < spec.split < 1.0:
        raise ValueError(f"split must lie in (0, 1), got {spec.split}")
    if spec.kind == TWO_DISTINCT_CIRCLES and spec.gap < 0.0:
        raise ValueError(f"gap must be nonnegative, got {spec.gap}")
    if spec.kind == TWO_CONCENTRIC_CIRCLES and not radii[0] < radii[1]:
        raise ValueError(f"concentric circles need r1 < r2, got {radii}")


def _circle(rng: np.random.Generator, n: int, radius: float, center) -> np.ndarray:
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    pts = np.empty((n, 2))
    pts[:, 0] = center[0] + radius * np.cos(angles)
    pts[:, 1] = center[1] + radius * np.sin(angles)
    return pts


def sample_shape(spec: ShapeSpec, n: int, seed: int) -> np.ndarray:
    """Draw exactly n points from the shape, deterministically in seed.

    For two-circle objects the first floor(split * n) points are on the first
    circle and the rest on the second, in that order.  Distinct circles are
    centered on the x axis with center separation r1 + gap + r2, so the
    closest approach between the circles equals ``gap``.
    """
    validate_spec(spec)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if spec.kind == CIRCLE:
        return _circle(rng, n, spec.radii[0], (0.0, 0.0))
    n1 = int(np.floor(spec.split * n))
    n2 = n - n1
    r1, r2 = spec.radii
    if spec.kind == TWO_DISTINCT_CIRCLES:
        center2 = (r1 + spec.gap + r2, 0.0)
    else:
        center2 = (0.0, 0.0)
    return np.vstack([
        _circle(rng, n1, r1, (0.0, 0.0)),
        _circle(rng, n2, r2, center2),
    ])


def circle(radius: float) -> ShapeSpec:
    return ShapeSpec(CIRCLE, (float(radius),))


def two_distinct_circles(r1: float, r2: float, gap: float, split: float = 0.4) -> ShapeSpec:
    return ShapeSpec(TWO_DISTINCT_CIRCLES, (float(r1), float(r2)), gap=float(gap), split=split)


def two_concentric_circles(r1: float, r2: float, split: float = 0.4) -> ShapeSpec:
    return ShapeSpec(TWO_CONCENTRIC_CIRCLES, (float(r1), float(r2)), split=split)


# The seven benchmark comparisons: (first object, second object).  The first
# three pairs share one law; the rest differ geometrically but not
# topologically.
EXAMPLE_PAIRS: dict[str, tuple[ShapeSpec, ShapeSpec]] = {
    "one_circle": (circle(1.0), circle(1.0)),
    "different_radii": (circle(1.0), circle(3.0)),
    "two_distinct_circles": (
        two_distinct_circles(0.5, 1.2, 1.5),
        two_distinct_circles(0.5, 1.2, 1.5),
    ),
    "different_two_distinct_circles": (
        two_distinct_circles(0.5, 1.2, 1.5),
        two_distinct_circles(1.2, 4.0, 4.5),
    ),
    "two_concentric_circles": (
        two_concentric_circles(1.0, 2.0),
        two_concentric_circles(1.0, 2.0),
    ),
    "different_two_concentric_circles": (
        two_concentric_circles(1.0, 2.0),
        two_concentric_circles(2.0, 4.0),
    ),
    "distinct_vs_concentric": (
        two_distinct_circles(0.5, 1.2, 1.5),
        two_concentric_circles(1.0, 2.0),
    ),
}


def save_cloud(points: np.ndarray, path) -> None:
    """Write a cloud as two-column CSV (x,y), one row per point."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) cloud, got shape {points.shape}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        writer.writerows(points.tolist())


def load_cloud(path) -> np.ndarray:
    """Read a two-column (x,y) CSV; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0:
                    continue  # header
                raise ValueError(f"{path}: cannot parse row {i + 1}: {row!r}")
    return np.array(rows, dtype=float).reshape(-1, 2)
