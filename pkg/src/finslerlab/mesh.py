"""Triangle meshes of 2D domains and their CSV exchange format."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial import Delaunay


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (M, 3), counter-clockwise
    boundary: np.ndarray  # (N,) bool
    h: float = field(default=0.0)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        tri = np.ascontiguousarray(self.triangles, dtype=np.int64)
        p = nodes[tri]
        signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
        flip = signed < 0
        tri[flip] = tri[flip][:, [0, 2, 1]]
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "boundary", np.asarray(self.boundary, dtype=bool))
        if np.any(np.abs(signed) <= 1e-14 * max(1.0, self.h) ** 2):
            raise MeshError("mesh has degenerate triangles")
        if not self.h:
            e = self.edges
            object.__setattr__(self, "h", float(np.max(np.linalg.norm(nodes[e[:, 0]] - nodes[e[:, 1]], axis=1))))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Constant gradients of the three hat functions on each element, (M, 3, 2)."""
        p = self.nodes[self.triangles]
        a2 = 2 * self.areas
        g = np.empty((self.n_elements, 3, 2))
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            g[:, k, 0] = (p[:, i, 1] - p[:, j, 1]) / a2
            g[:, k, 1] = (p[:, j, 0] - p[:, i, 0]) / a2
        return g

    @cached_property
    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        e = self.edges
        n = self.n_nodes
        a = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
        return (a + a.T).tocsr()

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        m = np.zeros(self.n_nodes)
        np.add.at(m, self.triangles.ravel(), np.repeat(self.areas / 3, 3))
        return m

    def differential(self, u: np.ndarray) -> np.ndarray:
        """Per-element differential of the piecewise-linear interpolant, (M, 2)."""
        # differences to the first vertex keep constants exactly in the kernel
        ut = np.asarray(u, float)[self.triangles]
        dv = ut[:, 1:] - ut[:, :1]
        return np.einsum("mk,mkd->md", dv, self.shape_gradients[:, 1:])

    def element_values(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, float)[self.triangles].mean(axis=1)

    def assemble_vector(self, per_element_node: np.ndarray) -> np.ndarray:
        """Scatter an (M, 3) array of element contributions onto nodes."""
        out = np.zeros(self.n_nodes)
        np.add.at(out, self.triangles.ravel(), per_element_node.ravel())
        return out

    def assemble_matrix(self, local: np.ndarray) -> sp.csr_matrix:
        """Assemble (M, 3, 3) element matrices into a sparse (N, N) matrix."""
        t = self.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(self.n_nodes,) * 2).tocsr()

    def mass_matrix(self, weight: np.ndarray | None = None) -> sp.csr_matrix:
        """Consistent P1 mass matrix with a per-element constant weight."""
        w = self.areas if weight is None else self.areas * weight
        local = (np.ones((3, 3)) + np.eye(3)) / 12.0
        return self.assemble_matrix(w[:, None, None] * local)

    def submesh(self, element_mask: np.ndarray) -> tuple["Mesh", np.ndarray]:
        """Mesh made of the selected elements; also returns the kept node indices."""
        tri = self.triangles[element_mask]
        if len(tri) == 0:
            raise MeshError("empty submesh")
        keep = np.unique(tri)
        remap = -np.ones(self.n_nodes, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        new_tri = remap[tri]
        boundary = _boundary_nodes(new_tri, len(keep)) | self.boundary[keep]
        return Mesh(self.nodes[keep], new_tri, boundary, self.h), keep

    # -- CSV exchange ---------------------------------------------------------
    def to_csv(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "nodes.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["id", "x", "y", "boundary"])
            for i, (p, b) in enumerate(zip(self.nodes, self.boundary)):
                w.writerow([i, repr(float(p[0])), repr(float(p[1])), int(b)])
        with open(d / "triangles.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["id", "n0", "n1", "n2"])
            for i, t in enumerate(self.triangles):
                w.writerow([i, *map(int, t)])

    @classmethod
    def from_csv(cls, directory) -> "Mesh":
        d = Path(directory)
        with open(d / "nodes.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        nodes = np.array([[float(r["x"]), float(r["y"])] for r in rows])
        boundary = np.array([bool(int(r["boundary"])) for r in rows])
        with open(d / "triangles.csv", newline="") as f:
            tri = np.array([[int(r["n0"]), int(r["n1"]), int(r["n2"])] for r in csv.DictReader(f)], dtype=np.int64)
        return cls(nodes, tri, boundary)


def _boundary_nodes(tri: np.ndarray, n: int) -> np.ndarray:
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    out = np.zeros(n, dtype=bool)
    out[uniq[counts == 1].ravel()] = True
    return out


def rectangle_mesh(lower, upper, h: float) -> Mesh:
    """Structured right-triangle mesh of an axis-aligned rectangle."""
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    if np.any(upper <= lower) or h <= 0:
        raise MeshError("invalid rectangle or mesh size")
    nx, ny = (int(np.ceil((upper[k] - lower[k]) / h - 1e-9)) for k in range(2))
    xs = np.linspace(lower[0], upper[0], nx + 1)
    ys = np.linspace(lower[1], upper[1], ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    tri = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    boundary = np.zeros(len(nodes), dtype=bool)
    boundary[idx[0, :]] = boundary[idx[-1, :]] = True
    boundary[idx[:, 0]] = boundary[idx[:, -1]] = True
    return Mesh(nodes, tri, boundary, float(max(xs[1] - xs[0], ys[1] - ys[0])))


def square_mesh(h: float, lower=(0.0, 0.0), upper=(1.0, 1.0)) -> Mesh:
    return rectangle_mesh(lower, upper, h)


def disk_mesh(radius: float = 1.0, h: float = 0.1, center=(0.0, 0.0)) -> Mesh:
    """Equilateral lattice clipped to a disk plus a boundary ring, Delaunay-triangulated."""
    if radius <= 0 or h <= 0:
        raise MeshError("invalid disk or mesh size")
    center = np.asarray(center, float)
    nb = max(8, int(np.ceil(2 * np.pi * radius / h)))
    t = 2 * np.pi * np.arange(nb) / nb
    ring = radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    dy = h * np.sqrt(3) / 2
    m = int(np.ceil(radius / dy)) + 1
    pts = []
    for j in range(-m, m + 1):
        off = 0.5 * h if j % 2 else 0.0
        xs = np.arange(-m, m + 1) * h + off
        pts.append(np.stack([xs, np.full_like(xs, j * dy)], axis=1))
    lat = np.concatenate(pts)
    lat = lat[np.linalg.norm(lat, axis=1) < radius - 0.5 * h]
    nodes = np.concatenate([ring, lat])
    tri = Delaunay(nodes).simplices
    boundary = np.zeros(len(nodes), dtype=bool)
    boundary[:nb] = True
    return Mesh(nodes + center, tri, boundary, h)


def write_values_csv(path, mesh: Mesh, columns: dict) -> None:
    """Node value table: id, x, y and one column per named field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "x", "y", *names])
        for i, p in enumerate(mesh.nodes):
            w.writerow([i, repr(float(p[0])), repr(float(p[1])), *(repr(float(columns[k][i])) for k in names)])


def read_values_csv(path) -> dict:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    keys = [k for k in rows[0] if k not in ("id", "x", "y")]
    return {k: np.array([float(r[k]) for r in rows]) for k in keys}
