"""Geodesics, directed distances, forward balls and (weighted) Ricci curvature."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad, solve_ivp
from scipy.optimize import minimize
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from finslerlab.mesh import Mesh
from finslerlab.norms import FinslerStructure, StructureError
from finslerlab.report import InequalityReport


class GeometryError(RuntimeError):
    pass


class _MinusInfinity:
    """Ric_n outside the S-curvature-free case. Never a float: arithmetic fails loudly."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "RIC_MINUS_INFINITY"

    def __reduce__(self):
        return (_MinusInfinity, ())


RIC_MINUS_INFINITY = _MinusInfinity()


# -- geodesics -----------------------------------------------------------------

def geodesic_acceleration(S: FinslerStructure, x, v) -> np.ndarray:
    """Euler-Lagrange acceleration of L = F^2/2: g a = dL/dx - (d^2L/dv dx) v."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if S.is_minkowski:
        return np.zeros(np.broadcast_shapes(x.shape, v.shape))
    d = S.derivatives(x, v, order=2)
    dL, dgrad = S.dx_derivatives(x, v)
    rhs = dL - np.einsum("...ik,...k->...i", dgrad, v)
    return np.linalg.solve(d.hess, rhs[..., None])[..., 0]


@dataclass
class Geodesic:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    speed: np.ndarray
    truncated: bool = False

    @property
    def endpoint(self) -> np.ndarray:
        return self.x[-1]

    @property
    def speed_drift(self) -> float:
        return float(np.max(np.abs(self.speed - self.speed[0])) / self.speed[0])

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["t", "x", "y", "speed"])
            for t, x, s in zip(self.t, self.x, self.speed):
                w.writerow([repr(float(t)), repr(float(x[0])), repr(float(x[1])), repr(float(s))])


def shoot_geodesic(
    S: FinslerStructure,
    p,
    v,
    T: float = 1.0,
    samples: int = 101,
    bounds=None,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> Geodesic:
    """Integrate the geodesic equation from ``p`` with initial velocity ``v`` up to time ``T``.

    ``T`` may be negative. Leaving the box ``bounds`` stops the integration and
    flags the geodesic as truncated.
    """
    p = np.asarray(p, float)
    v = np.asarray(v, float)
    if not np.any(v != 0):
        raise GeometryError("geodesic needs a nonzero initial velocity")
    ts = np.linspace(0.0, T, samples)
    n = S.dim
    if S.is_minkowski:
        x = p + ts[:, None] * v
        vel = np.broadcast_to(v, x.shape).copy()
        truncated = False
        if bounds is not None:
            inside = _inside(x, bounds)
            if not inside.all():
                k = int(np.argmin(inside))
                ts, x, vel, truncated = ts[:k], x[:k], vel[:k], True
        return Geodesic(ts, x, vel, S.norm(x, vel), truncated)

    def rhs(t, y):
        return np.concatenate([y[n:], geodesic_acceleration(S, y[:n], y[n:])])

    events = None
    if bounds is not None:
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])

        def leave(t, y):
            return min(np.min(y[:n] - lo), np.min(hi - y[:n]))

        leave.terminal = True
        events = [leave]
    sol = solve_ivp(rhs, (0.0, T), np.concatenate([p, v]), method="RK45", t_eval=ts,
                    rtol=rtol, atol=atol, events=events)
    if sol.status == -1:
        raise GeometryError(f"geodesic integration failed: {sol.message}")
    x = sol.y[:n].T
    vel = sol.y[n:].T
    return Geodesic(sol.t, x, vel, S.norm(x, vel), sol.status == 1)


def _inside(x, bounds):
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return np.all((x >= lo) & (x <= hi), axis=-1)


def exp_map(S: FinslerStructure, p, v, bounds=None) -> np.ndarray:
    p = np.asarray(p, float)
    if not np.any(np.asarray(v) != 0):
        return p.copy()
    geo = shoot_geodesic(S, p, v, 1.0, samples=2, bounds=bounds)
    if geo.truncated:
        raise GeometryError("exponential map left the chart domain")
    return geo.endpoint


def _rk4_flow(S, x0, v0, times, substeps: int = 64):
    """Fixed-step RK4 for a batch of geodesics; returns positions and velocities at ``times``.

    A fixed step sequence keeps the discrete flow smooth in the initial data,
    which the Jacobi-field differences rely on.
    """
    x, v = np.array(x0, float), np.array(v0, float)
    cx, cv = np.zeros_like(x), np.zeros_like(v)  # Kahan compensation
    out_x, out_v = [], []
    t_prev = 0.0
    for t in times:
        dt = (t - t_prev) / substeps
        for _ in range(substeps):
            k1x, k1v = v, geodesic_acceleration(S, x, v)
            k2x, k2v = v + 0.5 * dt * k1v, geodesic_acceleration(S, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
            k3x, k3v = v + 0.5 * dt * k2v, geodesic_acceleration(S, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
            k4x, k4v = v + dt * k3v, geodesic_acceleration(S, x + dt * k3x, v + dt * k3v)
            dx = dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x) - cx
            dv = dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v) - cv
            xn, vn = x + dx, v + dv
            cx, cv = (xn - x) - dx, (vn - v) - dv
            x, v = xn, vn
        out_x.append(x.copy())
        out_v.append(v.copy())
        t_prev = t
    return np.array(out_x), np.array(out_v)


# -- directed distance on meshes -----------------------------------------------

@dataclass(eq=False)
class MeshGraph:
    """Directed graph on mesh nodes joining every pair within ``ring`` edge hops."""

    mesh: Mesh
    matrix: sp.csr_matrix
    ring: int

    @classmethod
    def build(cls, S: FinslerStructure, mesh: Mesh, ring: int = 3) -> "MeshGraph":
        A = mesh.adjacency
        reach = sp.identity(mesh.n_nodes, format="csr") + A
        R = reach
        for _ in range(ring - 1):
            R = (R @ reach).tocsr()
            R.data[:] = 1.0
        R = R.tocoo()
        keep = R.row != R.col
        i, j = R.row[keep], R.col[keep]
        xi, xj = mesh.nodes[i], mesh.nodes[j]
        w = S.norm(0.5 * (xi + xj), xj - xi)
        return cls(mesh, sp.csr_matrix((w, (i, j)), shape=A.shape), ring)


def _snap(mesh: Mesh, p) -> int:
    return int(cKDTree(mesh.nodes).query(np.asarray(p, float))[1])


def _path(pred, src, dst):
    out = [dst]
    while out[-1] != src:
        k = pred[out[-1]]
        if k < 0:
            raise GeometryError("mesh is disconnected between the requested points")
        out.append(k)
    return out[::-1]


def _resample(points: np.ndarray, k: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(points[:1], k, axis=0)
    q = np.linspace(0, s[-1], k)
    return np.stack([np.interp(q, s, points[:, d]) for d in range(points.shape[1])], axis=1)


def refine_polylines(S: FinslerStructure, paths: np.ndarray, ftol: float = 1e-9, max_iter: int = 500) -> np.ndarray:
    """Minimise the discrete length of a batch of polylines with fixed endpoints.

    ``paths`` has shape (P, K, n). The lengths are independent, so one
    quasi-Newton run on their sum minimises each of them. Returns the lengths.
    """
    paths = np.asarray(paths, float)
    P, K, n = paths.shape
    ends0, ends1 = paths[:, :1], paths[:, -1:]

    def unpack(z):
        return np.concatenate([ends0, z.reshape(P, K - 2, n), ends1], axis=1)

    def lengths_and_grad(X):
        dX = np.diff(X, axis=1)
        mid = 0.5 * (X[:, 1:] + X[:, :-1])
        zero = ~np.any(dX != 0, axis=-1)
        dXs = np.where(zero[..., None], 1.0, dX)
        d = S.derivatives(mid, dXs, order=1)
        F = np.where(zero, 0.0, d.F)
        Fv = np.where(zero[..., None], 0.0, d.grad / np.where(zero, 1.0, d.F)[..., None])
        dLx, _ = S.dx_derivatives(mid, dXs)
        Fx = np.where(zero[..., None], 0.0, dLx / np.where(zero, 1.0, d.F)[..., None])
        G = np.zeros_like(X)
        G[:, :-1] += -Fv + 0.5 * Fx
        G[:, 1:] += Fv + 0.5 * Fx
        return F.sum(axis=1), G

    def fun(z):
        L, G = lengths_and_grad(unpack(z))
        return float(L.sum()), G[:, 1:-1].ravel()

    z0 = paths[:, 1:-1].ravel()
    res = minimize(fun, z0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": ftol, "gtol": 1e-12, "maxcor": 20})
    return lengths_and_grad(unpack(res.x))[0]


def distance(S: FinslerStructure, p, q, mesh: Mesh, graph: MeshGraph | None = None,
             nodes: int = 20, refine: bool = True) -> float:
    """Directed distance d(p, q): graph shortest path, then polyline refinement."""
    graph = graph or MeshGraph.build(S, mesh)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    i, j = _snap(mesh, p), _snap(mesh, q)
    dist, pred = dijkstra(graph.matrix, directed=True, indices=i, return_predecessors=True)
    if not np.isfinite(dist[j]):
        raise GeometryError("mesh is disconnected between the requested points")
    pts = mesh.nodes[_path(pred, i, j)]
    pts = np.concatenate([p[None], pts, q[None]])
    lengths = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 0
    pts = np.concatenate([pts[:1], pts[1:][lengths]]) if len(pts) > 1 else pts
    if len(pts) == 1:
        return 0.0
    dX = np.diff(pts, axis=0)
    d_graph = float(np.sum(S.norm(0.5 * (pts[1:] + pts[:-1]), dX)))
    if not refine:
        return d_graph
    poly = _resample(pts, nodes)
    return float(min(d_graph, refine_polylines(S, poly[None])[0]))


@dataclass
class Ball:
    center: np.ndarray
    radius: float
    distances: np.ndarray  # directed distance from the center to each node
    inside: np.ndarray  # node indicator d < R
    element_fraction: np.ndarray  # covered fraction of each element
    volume: float
    truncated: bool
    direction: str = "forward"

    def element_mask(self, mesh: Mesh) -> np.ndarray:
        """Elements whose centroid lies in the ball."""
        return mesh.element_values(self.distances) < self.radius

    def to_csv(self, path, mesh: Mesh) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["id", "x", "y", "distance", "inside"])
            for i, (p, d, b) in enumerate(zip(mesh.nodes, self.distances, self.inside)):
                w.writerow([i, repr(float(p[0])), repr(float(p[1])), repr(float(d)), int(b)])


def distance_field(S: FinslerStructure, p, mesh: Mesh, graph: MeshGraph | None = None,
                   refine_band: tuple | None = None, nodes: int = 20, reverse: bool = False) -> np.ndarray:
    """One-to-all directed distances d(p, .) (or d(., p) with ``reverse``).

    Nodes whose graph distance falls inside ``refine_band = (lo, hi)`` get
    their shortest path refined as a polyline.
    """
    graph = graph or MeshGraph.build(S, mesh)
    p = np.asarray(p, float)
    i = _snap(mesh, p)
    M = graph.matrix.T.tocsr() if reverse else graph.matrix
    dist, pred = dijkstra(M, directed=True, indices=i, return_predecessors=True)
    offset = np.asarray(mesh.nodes[i] - p)
    if np.any(offset != 0):
        d0 = float(S.norm(p, -offset)) if reverse else float(S.norm(p, offset))
        dist = dist + d0
    if refine_band is not None:
        lo, hi = refine_band
        sel = np.flatnonzero((dist >= lo) & (dist < hi))
        if len(sel):
            polys = []
            for j in sel:
                pts = mesh.nodes[_path(pred, i, j)]
                if reverse:
                    pts = pts[::-1]
                pts = np.concatenate([pts[:-1], p[None]]) if reverse else np.concatenate([p[None], pts[1:]])
                polys.append(_resample(pts, nodes))
            refined = refine_polylines(S, np.array(polys))
            dist[sel] = np.minimum(dist[sel], refined)
    return dist


def _fraction_below(f: np.ndarray) -> np.ndarray:
    """Area fraction of each triangle where the linear interpolant of vertex values f is < 0."""
    neg = f < 0
    k = neg.sum(axis=1)
    out = np.where(k == 3, 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for count, lone_is_neg in ((1, True), (2, False)):
            rows = np.flatnonzero(k == count)
            if not len(rows):
                continue
            ff = f[rows]
            lone = np.argmax(neg[rows] if lone_is_neg else ~neg[rows], axis=1)
            a = ff[np.arange(len(rows)), lone]
            others = np.stack([ff[np.arange(len(rows)), (lone + s) % 3] for s in (1, 2)], axis=1)
            frac = (a / (a - others[:, 0])) * (a / (a - others[:, 1]))
            out[rows] = frac if lone_is_neg else 1.0 - frac
    return out


def forward_ball(S: FinslerStructure, p, R: float, mesh: Mesh, graph: MeshGraph | None = None,
                 refine: bool = True, band: float = 0.05) -> Ball:
    """Forward ball {q : d(p, q) < R} on the mesh with its measure.

    The volume integrates exp(phi) at element centroids over the part of each
    element where the linear interpolant of the distance is below ``R``.
    """
    if not R > 0:
        raise ValueError("ball radius must be positive")
    d = distance_field(S, p, mesh, graph, refine_band=(R, R * (1 + band)) if refine else None)
    frac = _fraction_below(d[mesh.triangles] - R)
    vol = float(np.sum(np.exp(S.phi(mesh.centroids)) * mesh.areas * frac))
    truncated = bool(np.any(d[mesh.boundary] < R))
    return Ball(np.asarray(p, float), float(R), d, d < R, frac, vol, truncated)


# -- curvature -----------------------------------------------------------------

def s_comparison(K: float, N: float, t):
    """Volume-growth comparison function s_{K,N}(t)."""
    if K < 0:
        raise ValueError("K must be >= 0")
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if K == 0:
        return t if t.ndim else float(t)
    if not N > 1:
        raise ValueError("N must exceed 1 when K > 0")
    c = math.sqrt(K / (N - 1))
    out = np.sinh(c * t) / c
    return out if out.ndim else float(out)


@dataclass
class CurvatureReport:
    x: np.ndarray
    V: np.ndarray
    ric: float
    method: str
    flag_curvatures: list = field(default_factory=list)
    ric_n: dict = field(default_factory=dict)  # N -> float | RIC_MINUS_INFINITY
    psi_d1: float | None = None
    psi_d2: float | None = None

    def to_dict(self) -> dict:
        return {
            "x": [float(t) for t in self.x],
            "V": [float(t) for t in self.V],
            "ric": float(self.ric),
            "method": self.method,
            "flag_curvatures": [float(k) for k in self.flag_curvatures],
            "ric_N": {str(k): ("-inf" if v is RIC_MINUS_INFINITY else float(v)) for k, v in self.ric_n.items()},
            "psi_d1": None if self.psi_d1 is None else float(self.psi_d1),
            "psi_d2": None if self.psi_d2 is None else float(self.psi_d2),
        }


def orthonormal_completion(g: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectors e_1..e_{n-1} completing the g-unit vector u to a g-orthonormal basis."""
    n = len(u)
    basis = [u / math.sqrt(u @ g @ u)]
    for k in range(n):
        w = np.eye(n)[k].astype(float)
        for b in basis:
            w = w - (b @ g @ w) * b
        nw = math.sqrt(max(w @ g @ w, 0.0))
        if nw > 1e-8:
            basis.append(w / nw)
        if len(basis) == n:
            break
    return np.array(basis[1:])


def _jacobi_flag_curvatures(S, x, u, frame, stencil, s):
    """Flag curvatures K(u, e) from |J(t)|^2 = t^2 - K t^4 / 3 + ... along geodesic variations."""
    times = np.array([stencil / 4, stencil / 2, stencil])
    v0 = [u]
    for e in frame:
        v0 += [u + s * e, u - s * e]
    v0 = np.array(v0)
    x0 = np.broadcast_to(x, v0.shape)
    X, V = _rk4_flow(S, x0, v0, times)
    if not np.all(np.isfinite(X)):
        raise GeometryError("Jacobi stencil left the domain of the structure")
    out = []
    for k, e in enumerate(frame):
        J = (X[:, 1 + 2 * k] - X[:, 2 + 2 * k]) / (2 * s)
        g = S.g(X[:, 0], V[:, 0])
        h = np.einsum("ti,tij,tj->t", J, g, J)
        r = 3 * (1 - h / times**2) / times**2
        # r(t) = K + a t + b t^2: exact fit through the three levels
        A = np.stack([np.ones(3), times, times**2], axis=1)
        out.append(float(np.linalg.solve(A, r)[0]))
    return out


def ricci(S: FinslerStructure, x, V, method: str = "auto", stencil: float = 0.1, s: float = 1e-4) -> CurvatureReport:
    """Ricci curvature Ric(V) = F(V)^2 * sum_i K^V(V, e_i)."""
    x = np.asarray(x, float)
    V = np.asarray(V, float)
    if not np.any(V != 0):
        raise StructureError("Ricci curvature needs V != 0")
    F = float(S.norm(x, V))
    if method in ("auto", "analytic"):
        val = S.analytic_ricci(x, V)
        if val is not None:
            k = float(val) / F**2 / (S.dim - 1)
            return CurvatureReport(x, V, float(val), "analytic", [k] * (S.dim - 1))
        if method == "analytic":
            raise GeometryError(f"no closed-form curvature stored for this {S.family} structure")
    elif method != "jacobi-fd":
        raise ValueError(f"unknown curvature method {method!r}")
    u = V / F
    g = S.g(x, u)
    frame = orthonormal_completion(g, u)
    ks = _jacobi_flag_curvatures(S, x, u, frame, stencil, s)
    return CurvatureReport(x, V, F**2 * sum(ks), "jacobi-fd", ks)


def _psi_derivatives(psi_at, eps):
    """Richardson-extrapolated 5-point first and second derivatives at 0."""
    def d12(h):
        f = {k: psi_at(k * h) for k in (-2, -1, 0, 1, 2)}
        d1 = (-f[2] + 8 * f[1] - 8 * f[-1] + f[-2]) / (12 * h)
        d2 = (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * h * h)
        return d1, d2

    a1, a2 = d12(eps)
    b1, b2 = d12(eps / 2)
    return (16 * b1 - a1) / 15, (16 * b2 - a2) / 15


def measure_potential(S: FinslerStructure, x, v) -> np.ndarray:
    """Psi with m = exp(-Psi) vol_{g_v}: Psi = log det g_v / 2 - phi."""
    g = S.g(x, v)
    return 0.5 * np.log(np.linalg.det(g)) - S.phi(x)


def _combine_ric_n(S, ric, d1, d2, Ns, sentinel_tol):
    n = S.dim
    out = {}
    for N in Ns:
        N = float(N)
        if N < n:
            raise ValueError(f"N must be >= n = {n}")
        if math.isinf(N):
            out[N] = ric + d2
        elif N == n:
            out[N] = RIC_MINUS_INFINITY if abs(d1) > sentinel_tol else ric + d2
        else:
            out[N] = ric + d2 - d1**2 / (N - n)
    return out


def weighted_ricci(S: FinslerStructure, x, V, Ns=(math.inf,), eps: float = 1e-2, method: str = "auto",
                   sentinel_tol: float = 1e-6) -> CurvatureReport:
    """Ric_N(V) from the measure decomposition along the geodesic with initial velocity V/F(V)."""
    x = np.asarray(x, float)
    V = np.asarray(V, float)
    rep = ricci(S, x, V, method=method)
    F = float(S.norm(x, V))
    u = V / F
    ts = np.array([-2, -1, -0.5, 0, 0.5, 1, 2]) * eps
    if S.is_minkowski:
        X = x + ts[:, None] * u
        Vel = np.broadcast_to(u, X.shape)
    else:
        fw = shoot_geodesic(S, x, u, 2 * eps, samples=5, rtol=1e-12, atol=1e-14)
        bw = shoot_geodesic(S, x, u, -2 * eps, samples=5, rtol=1e-12, atol=1e-14)
        if fw.truncated or bw.truncated:
            raise GeometryError("geodesic truncated inside the Psi stencil")
        # samples at 0, eps/2, eps, 3eps/2, 2eps (and negatives)
        X = np.concatenate([bw.x[[4, 2, 1]], fw.x[[0, 1, 2, 4]]])
        Vel = np.concatenate([bw.v[[4, 2, 1]], fw.v[[0, 1, 2, 4]]])
    psi = measure_potential(S, X, Vel)
    table = dict(zip(np.round(ts / eps * 2).astype(int), psi))
    d1, d2 = _psi_derivatives(lambda t: table[int(round(t / eps * 2))], eps)
    ric_unit = rep.ric / F**2
    unit = _combine_ric_n(S, ric_unit, d1, d2, Ns, sentinel_tol)
    rep.ric_n = {N: (v if v is RIC_MINUS_INFINITY else F**2 * v) for N, v in unit.items()}
    rep.psi_d1, rep.psi_d2 = float(d1), float(d2)
    return rep


def weighted_ricci_field(S: FinslerStructure, xs, Vs, N: float = math.inf, eps: float = 1e-2,
                         sentinel_tol: float = 1e-6):
    """Vectorised Ric_N for many (x, V) pairs; ``None`` entries mark the Ric_n sentinel.

    Constant-coefficient structures use exact straight geodesics in one batch;
    others fall back to :func:`weighted_ricci` point by point.
    """
    xs = np.asarray(xs, float)
    Vs = np.asarray(Vs, float)
    out = np.zeros(len(xs))
    sentinel = np.zeros(len(xs), dtype=bool)
    nz = np.flatnonzero(np.any(Vs != 0, axis=1))
    if not len(nz):
        return out, sentinel
    if not S.is_minkowski:
        for k in nz:
            v = weighted_ricci(S, xs[k], Vs[k], (N,), eps=eps, sentinel_tol=sentinel_tol).ric_n[float(N)]
            if v is RIC_MINUS_INFINITY:
                sentinel[k] = True
            else:
                out[k] = v
        return out, sentinel
    x, V = xs[nz], Vs[nz]
    F = S.norm(x, V)
    u = V / F[:, None]

    def psi_at(t):
        return measure_potential(S, x + t * u, u)

    d1, d2 = _psi_derivatives(psi_at, eps)
    n = S.dim
    if math.isinf(N):
        val = d2
    elif N == n:
        bad = np.abs(d1) > sentinel_tol
        sentinel[nz[bad]] = True
        val = np.where(bad, 0.0, d2)
    else:
        val = d2 - d1**2 / (N - n)
    out[nz] = F**2 * val
    return out, sentinel


def estimate_ricci_lower_bound(S: FinslerStructure, points, N: float = math.inf, directions: int = 16,
                               floor: float = 1e-8) -> float:
    """K_hat = max(0, -min Ric_N(v)) over F-unit directions at the given points.

    Values below ``floor`` are finite-difference noise and are reported as 0.
    """
    points = np.asarray(points, float)
    n = S.dim
    if n == 2:
        t = 2 * np.pi * np.arange(directions) / directions
        dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(directions, n))
    xs = np.repeat(points, len(dirs), axis=0)
    vs = np.tile(dirs, (len(points), 1))
    vs = vs / S.norm(xs, vs)[:, None]
    if S.is_minkowski:
        vals, sentinel = weighted_ricci_field(S, xs, vs, N)
        if np.any(sentinel):
            return math.inf
        k = -float(vals.min())
        return k if k > floor else 0.0
    worst = math.inf
    for x, v in zip(xs, vs):
        r = weighted_ricci(S, x, v, (N,)).ric_n[float(N)]
        if r is RIC_MINUS_INFINITY:
            return math.inf
        worst = min(worst, r)
    return -worst if -worst > floor else 0.0


def bishop_gromov_check(S: FinslerStructure, p, R1: float, R2: float, K: float, N: float, mesh: Mesh,
                        graph: MeshGraph | None = None, tolerance: float = 0.02) -> InequalityReport:
    """m(B_R1)/m(B_R2) against the s_{K,N} integral ratio, for R1 >= R2."""
    if R1 < R2:
        raise ValueError("need R1 >= R2")
    if not math.isfinite(K):
        raise GeometryError(f"no finite lower Ricci bound for N = {N:g}; the measure needs a larger N")
    graph = graph or MeshGraph.build(S, mesh)
    b1 = forward_ball(S, p, R1, mesh, graph)
    b2 = b1 if R1 == R2 else forward_ball(S, p, R2, mesh, graph)
    if b1.truncated:
        raise GeometryError("outer ball exceeds the mesh domain")
    lhs = b1.volume / b2.volume

    def integral(R):
        if K == 0:
            return R**N / N
        return quad(lambda t: s_comparison(K, N, t) ** (N - 1), 0, R, epsabs=0, epsrel=1e-12)[0]

    rhs = integral(R1) / integral(R2)
    coarse = math.exp(2 * math.sqrt(K) * R1) * (R1 / R2) ** N
    return InequalityReport(
        tag="bishop_gromov",
        lhs=lhs,
        rhs=rhs,
        params={"R1": R1, "R2": R2, "K": K, "N": N, "h": mesh.h},
        extras={"coarse_bound": coarse, "volume_R1": b1.volume, "volume_R2": b2.volume},
        tolerance=tolerance * rhs,
    )
