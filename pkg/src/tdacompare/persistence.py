"""Persistence diagrams of super-level-set filtrations on 2-D scalar grids.

Filtration convention: thresholds sweep from +inf downward over the grid node
values, so births are larger than deaths.  Nodes carry the filtration (cells
enter once all their nodes have entered, i.e. at the minimum incident node
value), and connectivity is 8-neighbour.  Ties between equal values are broken
by row-major node index: the earlier index enters first and is the elder.

Two backends are provided and must agree:

* ``h0_superlevel`` - union-find sweep with the elder rule (fast path).
* ``boundary_matrix_diagrams`` - textbook column reduction of the boundary
  matrix of the triangulated grid complex, yielding both H0 and H1.  Each
  grid square contributes its two diagonals and the four triangles they cut
  out, which makes the 1-skeleton exactly the 8-neighbour graph.

The one essential component is finite by default (death at the grid minimum);
pass ``ESSENTIAL_DROPPED`` to omit it.  Non-essential zero-persistence pairs
are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import csv

import numpy as np

from .kde import SUPERLEVEL, ScalarGrid, kde_grid

DEATH_AT_GRID_MIN = "death-at-grid-min"
ESSENTIAL_DROPPED = "dropped"


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) pairs for one homology rank.

    ``essential`` flags the points produced by the essential-class policy.
    Points are sorted by (birth desc, death desc).
    """

    births: np.ndarray
    deaths: np.ndarray
    rank: int
    essential: np.ndarray = field(default=None)
    essential_policy: str = DEATH_AT_GRID_MIN
    direction: str = SUPERLEVEL

    def __post_init__(self):
        births = np.asarray(self.births, dtype=float)
        deaths = np.asarray(self.deaths, dtype=float)
        if births.shape != deaths.shape or births.ndim != 1:
            raise ValueError("births and deaths must be equal-length 1-D arrays")
        essential = self.essential
        if essential is None:
            essential = np.zeros(births.size, dtype=bool)
        essential = np.asarray(essential, dtype=bool)
        if essential.shape != births.shape:
            raise ValueError("essential mask must match the point count")
        object.__setattr__(self, "births", births)
        object.__setattr__(self, "deaths", deaths)
        object.__setattr__(self, "essential", essential)

    def __len__(self) -> int:
        return self.births.size

    @property
    def persistence(self) -> np.ndarray:
        if self.direction == SUPERLEVEL:
            return self.births - self.deaths
        return self.deaths - self.births

    def as_array(self) -> np.ndarray:
        """(n, 2) array of (birth, death) rows."""
        return np.column_stack([self.births, self.deaths])

    def without_essential(self) -> "PersistenceDiagram":
        keep = ~self.essential
        return replace(
            self,
            births=self.births[keep],
            deaths=self.deaths[keep],
            essential=self.essential[keep],
        )


def _sorted_diagram(births, deaths, essential, rank, policy) -> PersistenceDiagram:
    births = np.asarray(births, dtype=float)
    deaths = np.asarray(deaths, dtype=float)
    essential = np.asarray(essential, dtype=bool)
    order = np.lexsort((-deaths, -births))
    return PersistenceDiagram(
        births=births[order],
        deaths=deaths[order],
        rank=rank,
        essential=essential[order],
        essential_policy=policy,
    )


def _check_grid(grid: ScalarGrid) -> np.ndarray:
    values = np.asarray(grid.values, dtype=float)
    if values.ndim != 2:
        raise ValueError(f"only 2-D grids are supported, got {values.ndim}-D")
    if grid.direction != SUPERLEVEL:
        raise ValueError(f"expected a super-level grid, got direction {grid.direction!r}")
    return values


@lru_cache(maxsize=8)
def _grid_complex(nx: int, ny: int):
    """Edges and triangles of the 8-connectivity complex on an nx-by-ny grid.

    Node id is row-major (ix * ny + iy).  Edge blocks, in order: horizontal,
    vertical, main diagonal (a-d), anti diagonal (c-b) where a=(i,j),
    b=(i,j+1), c=(i+1,j), d=(i+1,j+1).  Each square yields triangles
    (a,b,d), (a,c,d), (a,b,c), (b,c,d) given by their edge ids.
    """
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    nid = ii * ny + jj

    h_u = nid[:, : ny - 1].ravel()
    h_v = nid[:, 1:].ravel()
    v_u = nid[: nx - 1, :].ravel()
    v_v = nid[1:, :].ravel()
    dm_u = nid[: nx - 1, : ny - 1].ravel()
    dm_v = nid[1:, 1:].ravel()
    da_u = nid[1:, : ny - 1].ravel()
    da_v = nid[: nx - 1, 1:].ravel()
    edges = np.column_stack(
        [
            np.concatenate([h_u, v_u, dm_u, da_u]),
            np.concatenate([h_v, v_v, dm_v, da_v]),
        ]
    ).astype(np.int64)

    n_h = nx * (ny - 1)
    n_v = (nx - 1) * ny
    n_d = (nx - 1) * (ny - 1)

    if n_d == 0:
        tri_edges = np.empty((0, 3), dtype=np.int64)
        tri_verts = np.empty((0, 3), dtype=np.int64)
        return edges, tri_edges, tri_verts

    si, sj = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    si = si.ravel()
    sj = sj.ravel()
    va = si * ny + sj
    vb = va + 1
    vc = va + ny
    vd = vc + 1
    e_h_top = si * (ny - 1) + sj                   # (a,b)
    e_h_bot = (si + 1) * (ny - 1) + sj             # (c,d)
    e_v_left = n_h + si * ny + sj                  # (a,c)
    e_v_right = n_h + si * ny + (sj + 1)           # (b,d)
    e_dm = n_h + n_v + si * (ny - 1) + sj          # (a,d)
    e_da = n_h + n_v + n_d + si * (ny - 1) + sj    # (c,b)

    tri_edges = np.concatenate(
        [
            np.column_stack([e_h_top, e_v_right, e_dm]),   # (a,b,d)
            np.column_stack([e_v_left, e_h_bot, e_dm]),    # (a,c,d)
            np.column_stack([e_h_top, e_v_left, e_da]),    # (a,b,c)
            np.column_stack([e_v_right, e_h_bot, e_da]),   # (b,c,d)
        ]
    ).astype(np.int64)
    tri_verts = np.concatenate(
        [
            np.column_stack([va, vb, vd]),
            np.column_stack([va, vc, vd]),
            np.column_stack([va, vb, vc]),
            np.column_stack([vb, vc, vd]),
        ]
    ).astype(np.int64)
    return edges, tri_edges, tri_verts


def h0_superlevel(grid: ScalarGrid, essential_policy: str = DEATH_AT_GRID_MIN) -> PersistenceDiagram:
    """H0 persistence of the super-level filtration via a union-find sweep.

    Components are born at their maximal node; at a merge the younger
    component (smaller birth, later index on ties) dies at the merge value.
    """
    values = _check_grid(grid)
    nx, ny = values.shape
    vals = values.ravel()
    n_nodes = vals.size
    order = np.lexsort((np.arange(n_nodes), -vals))
    pos = np.empty(n_nodes, dtype=np.int64)
    pos[order] = np.arange(n_nodes)
    posvals = vals[order]

    edges, _, _ = _grid_complex(nx, ny)
    pe = pos[edges]
    lo = pe.min(axis=1)
    hi = pe.max(axis=1)
    eorder = np.argsort(hi, kind="stable")

    elo = lo[eorder].tolist()
    ehi = hi[eorder].tolist()
    pv = posvals.tolist()
    parent = list(range(n_nodes))

    births: list[float] = []
    deaths: list[float] = []
    for a, b in zip(elo, ehi):
        d = b
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if a > b:
            a, b = b, a
        parent[b] = a  # smaller position = elder; younger root b dies
        if pv[b] != pv[d]:
            births.append(pv[b])
            deaths.append(pv[d])

    essential = [False] * len(births)
    if essential_policy == DEATH_AT_GRID_MIN:
        births.append(pv[0])
        deaths.append(pv[-1])
        essential.append(True)
    elif essential_policy != ESSENTIAL_DROPPED:
        raise ValueError(f"unknown essential policy {essential_policy!r}")
    return _sorted_diagram(births, deaths, essential, 0, essential_policy)


def _reduce(columns, faces_per_column, pos_to_face):
    """Z/2 column reduction; returns (face_id, column_index) pivot pairs
    and a boolean mask of columns that reduced to zero."""
    pivot: dict[int, set] = {}
    pairs = []
    zeroed = np.zeros(len(columns), dtype=bool)
    for j, cid in enumerate(columns):
        col = set(faces_per_column[cid])
        while col:
            low = max(col)
            other = pivot.get(low)
            if other is None:
                break
            col ^= other
        if col:
            pivot[low] = col
            pairs.append((pos_to_face[low], cid))
        else:
            zeroed[j] = True
    return pairs, zeroed


def boundary_matrix_diagrams(
    grid: ScalarGrid, essential_policy: str = DEATH_AT_GRID_MIN
) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """H0 and H1 diagrams via boundary-matrix reduction of the grid complex.

    Triangle columns are reduced first; edges they pair with are cleared
    (their own columns are null) before the edge columns are reduced.
    """
    values = _check_grid(grid)
    nx, ny = values.shape
    vals = values.ravel()
    n_nodes = vals.size
    edges, tri_edges, tri_verts = _grid_complex(nx, ny)
    n_edges = edges.shape[0]
    n_tris = tri_edges.shape[0]

    evals = np.minimum(vals[edges[:, 0]], vals[edges[:, 1]])
    if n_tris:
        tvals = vals[tri_verts].min(axis=1)
    else:
        tvals = np.empty(0)

    all_vals = np.concatenate([vals, evals, tvals])
    all_dims = np.concatenate(
        [
            np.zeros(n_nodes, dtype=np.int8),
            np.ones(n_edges, dtype=np.int8),
            np.full(n_tris, 2, dtype=np.int8),
        ]
    )
    all_idx = np.concatenate(
        [np.arange(n_nodes), np.arange(n_edges), np.arange(n_tris)]
    )
    gorder = np.lexsort((all_idx, all_dims, -all_vals))
    gpos = np.empty(all_vals.size, dtype=np.int64)
    gpos[gorder] = np.arange(all_vals.size)
    vpos = gpos[:n_nodes]
    epos = gpos[n_nodes : n_nodes + n_edges]
    tpos = gpos[n_nodes + n_edges :]

    pos_to_eid = np.full(all_vals.size, -1, dtype=np.int64)
    pos_to_eid[epos] = np.arange(n_edges)
    pos_to_vid = np.full(all_vals.size, -1, dtype=np.int64)
    pos_to_vid[vpos] = np.arange(n_nodes)

    # dimension 2: triangle columns kill 1-cycles born at their pivot edge
    torder = np.argsort(tpos, kind="stable")
    tri_faces = epos[tri_edges].tolist()
    t_pairs, _ = _reduce(torder.tolist(), tri_faces, pos_to_eid)
    cleared = np.zeros(n_edges, dtype=bool)
    h1_b, h1_d = [], []
    for eid, tid in t_pairs:
        cleared[eid] = True
        if evals[eid] != tvals[tid]:
            h1_b.append(evals[eid])
            h1_d.append(tvals[tid])
    h1 = _sorted_diagram(h1_b, h1_d, [False] * len(h1_b), 1, essential_policy)

    # dimension 1: remaining edge columns kill components
    eorder = np.argsort(epos, kind="stable")
    eorder = eorder[~cleared[eorder]]
    edge_faces = vpos[edges].tolist()
    e_pairs, _ = _reduce(eorder.tolist(), edge_faces, pos_to_vid)
    paired = np.zeros(n_nodes, dtype=bool)
    h0_b, h0_d, h0_e = [], [], []
    for vid, eid in e_pairs:
        paired[vid] = True
        if vals[vid] != evals[eid]:
            h0_b.append(vals[vid])
            h0_d.append(evals[eid])
            h0_e.append(False)
    if essential_policy == DEATH_AT_GRID_MIN:
        grid_min = vals.min()
        for vid in np.flatnonzero(~paired):
            h0_b.append(vals[vid])
            h0_d.append(grid_min)
            h0_e.append(True)
    elif essential_policy != ESSENTIAL_DROPPED:
        raise ValueError(f"unknown essential policy {essential_policy!r}")
    h0 = _sorted_diagram(h0_b, h0_d, h0_e, 0, essential_policy)
    return h0, h1


def h1_superlevel(grid: ScalarGrid) -> PersistenceDiagram:
    """H1 persistence of the super-level filtration (boundary reduction).

    The full rectangular grid complex is simply connected, so no essential
    H1 class can occur.
    """
    return boundary_matrix_diagrams(grid)[1]


@dataclass(frozen=True)
class DiagramPair:
    """H0 and H1 diagrams of one cloud, with the grid they came from."""

    h0: PersistenceDiagram
    h1: PersistenceDiagram
    grid: ScalarGrid


def diagram_pipeline(
    cloud,
    bandwidth: float,
    resolution=(128, 128),
    bounds=None,
    essential_policy: str = DEATH_AT_GRID_MIN,
) -> DiagramPair:
    """KDE grid of the cloud followed by H0 and H1 super-level persistence."""
    grid = kde_grid(cloud, bandwidth, bounds=bounds, resolution=resolution)
    h0 = h0_superlevel(grid, essential_policy=essential_policy)
    h1 = h1_superlevel(grid)
    return DiagramPair(h0=h0, h1=h1, grid=grid)


def save_diagrams(diagrams, path) -> None:
    """CSV with columns rank,birth,death; any number of ranks per file."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "birth", "death"])
        for dgm in diagrams:
            for b, d in zip(dgm.births, dgm.deaths):
                writer.writerow([dgm.rank, repr(float(b)), repr(float(d))])


def load_diagrams(path) -> dict[int, PersistenceDiagram]:
    """Inverse of save_diagrams; essential flags are not round-tripped."""
    by_rank: dict[int, list[tuple[float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader):
            if not row:
                continue
            try:
                rank = int(row[0])
            except ValueError:
                if i == 0:
                    continue  # header
                raise ValueError(f"{path}: cannot parse row {i + 1}: {row!r}")
            by_rank.setdefault(rank, []).append((float(row[1]), float(row[2])))
    out = {}
    for rank, pts in by_rank.items():
        births = [p[0] for p in pts]
        deaths = [p[1] for p in pts]
        out[rank] = _sorted_diagram(births, deaths, [False] * len(pts), rank, DEATH_AT_GRID_MIN)
    return out


def load_diagram(path, rank: int | None = None) -> PersistenceDiagram:
    """Load one diagram; ``rank`` is required if the file mixes ranks."""
    by_rank = load_diagrams(path)
    if rank is not None:
        if rank not in by_rank:
            raise ValueError(f"{path}: no rank-{rank} points")
        return by_rank[rank]
    if len(by_rank) != 1:
        raise ValueError(f"{path}: contains ranks {sorted(by_rank)}; pass rank=")
    return next(iter(by_rank.values()))
