"""Gaussian kernel density estimation, pointwise and on rectangular grids.

The estimator at a query point p for a cloud z_1..z_n with bandwidth h is

    f(p) = 1 / (n * (sqrt(2*pi) * h)^D) * sum_i exp(-||p - z_i||^2 / (2 h^2))

with a single scalar bandwidth shared across the D axes.  Grid evaluation
exploits the separability of the squared distance so the kernel sums reduce
to one matrix product per grid; values agree with pointwise evaluation to
floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPERLEVEL = "superlevel"
SUBLEVEL = "sublevel"


@dataclass(frozen=True)
class ScalarGrid:
    """A scalar field sampled on a rectangular grid.

    values[i, j] is the field at (origin[0] + i * spacing[0],
    origin[1] + j * spacing[1]).  ``direction`` records which filtration the
    grid is meant for (super-level by default).
    """

    origin: np.ndarray
    spacing: np.ndarray
    values: np.ndarray
    direction: str = SUPERLEVEL

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def node_coordinates(self):
        """Per-axis node coordinate arrays."""
        return tuple(
            self.origin[d] + self.spacing[d] * np.arange(self.values.shape[d])
            for d in range(self.values.ndim)
        )


def _as_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("point cloud must be a nonempty (n, D) array")
    return pts


def kde_eval(points, bandwidth: float, query) -> float:
    """Evaluate the Gaussian KDE of the cloud at one query point."""
    pts = _as_cloud(points)
    if bandwidth <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    q = np.asarray(query, dtype=float)
    if q.shape != (pts.shape[1],):
        raise ValueError(f"query has dimension {q.shape}, cloud has D={pts.shape[1]}")
    sq = np.sum((pts - q) ** 2, axis=1)
    n, dim = pts.shape
    norm = n * (np.sqrt(2.0 * np.pi) * bandwidth) ** dim
    return float(np.sum(np.exp(-sq / (2.0 * bandwidth**2))) / norm)


def kde_values(points, bandwidth: float, queries) -> np.ndarray:
    """Vectorized KDE at many query points (m, D) -> (m,)."""
    pts = _as_cloud(points)
    if bandwidth <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    qs = np.asarray(queries, dtype=float)
    n, dim = pts.shape
    norm = n * (np.sqrt(2.0 * np.pi) * bandwidth) ** dim
    out = np.empty(qs.shape[0])
    # chunked so the (chunk, n) distance block stays small
    step = max(1, int(2_000_000 // max(n, 1)))
    for lo in range(0, qs.shape[0], step):
        block = qs[lo : lo + step]
        sq = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        out[lo : lo + step] = np.exp(-sq / (2.0 * bandwidth**2)).sum(axis=1) / norm
    return out


def default_bounds(points, bandwidth: float, margin_bandwidths: float = 3.0):
    """Bounding box of the cloud expanded by ``margin_bandwidths * bandwidth``."""
    pts = _as_cloud(points)
    pad = margin_bandwidths * bandwidth
    lo = pts.min(axis=0) - pad
    hi = pts.max(axis=0) + pad
    return tuple((float(a), float(b)) for a, b in zip(lo, hi))


def kde_grid(points, bandwidth: float, bounds=None, resolution=(128, 128)) -> ScalarGrid:
    """Evaluate the KDE on a 2-D rectangular grid.

    bounds: ((x_lo, x_hi), (y_lo, y_hi)); defaults to the cloud bounding box
    expanded by 3 bandwidths per side.  resolution: nodes per axis (>= 2).
    """
    pts = _as_cloud(points)
    if pts.shape[1] != 2:
        raise ValueError("kde_grid supports 2-D clouds only")
    if bandwidth <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    if bounds is None:
        bounds = default_bounds(pts, bandwidth)
    res = tuple(int(r) for r in resolution)
    if len(res) != 2 or any(r < 2 for r in res):
        raise ValueError(f"resolution must be two counts >= 2, got {resolution}")
    for (lo, hi) in bounds:
        if not hi > lo:
            raise ValueError(f"degenerate bounds {bounds}")
    xs = np.linspace(bounds[0][0], bounds[0][1], res[0])
    ys = np.linspace(bounds[1][0], bounds[1][1], res[1])
    # separable kernel: exp(-dx^2) (nx, n) @ exp(-dy^2).T (n, ny)
    inv = 1.0 / (2.0 * bandwidth**2)
    ex = np.exp(-((xs[:, None] - pts[None, :, 0]) ** 2) * inv)
    ey = np.exp(-((ys[:, None] - pts[None, :, 1]) ** 2) * inv)
    norm = pts.shape[0] * (2.0 * np.pi * bandwidth**2)
    values = (ex @ ey.T) / norm
    origin = np.array([xs[0], ys[0]])
    spacing = np.array([xs[1] - xs[0], ys[1] - ys[0]])
    return ScalarGrid(origin=origin, spacing=spacing, values=values, direction=SUPERLEVEL)


def save_grid(grid: ScalarGrid, path) -> None:
    """Serialize a grid: header lines (origin, spacing, shape, direction) + values."""
    with open(path, "w") as fh:
        fh.write("origin," + ",".join(repr(float(v)) for v in grid.origin) + "\n")
        fh.write("spacing," + ",".join(repr(float(v)) for v in grid.spacing) + "\n")
        fh.write("shape," + ",".join(str(int(v)) for v in grid.values.shape) + "\n")
        fh.write(f"direction,{grid.direction}\n")
        fh.write("values\n")
        for v in grid.values.ravel():
            fh.write(repr(float(v)) + "\n")


def load_grid(path) -> ScalarGrid:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header = {}
    i = 0
    while lines[i] != "values":
        key, _, rest = lines[i].partition(",")
        header[key] = rest.split(",")
        i += 1
    shape = tuple(int(v) for v in header["shape"])
    values = np.array([float(v) for v in lines[i + 1 :]]).reshape(shape)
    return ScalarGrid(
        origin=np.array([float(v) for v in header["origin"]]),
        spacing=np.array([float(v) for v in header["spacing"]]),
        values=values,
        direction=header["direction"][0],
    )
