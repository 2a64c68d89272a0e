"""Finsler Dirichlet energy on P1 triangle meshes and its minimisation.

All element integrals use one-point quadrature at the centroid with the
density weight ``exp(phi(x_c)) * area``. The energy of a field ``u`` is
``sum_T F*(x_c, Du_T)**2 * w_T``; its gradient with respect to the nodal
values is ``-2 * laplacian_residual``.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla
from scipy.optimize import minimize

from finslerlab.mesh import Mesh
from finslerlab.norms import FinslerStructure, StructureError
from finslerlab.report import InequalityReport

log = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    max_iter: int = 60
    tol: float = 1e-10
    method: str = "newton"  # "newton" or "lbfgs"
    armijo: float = 1e-4
    backtrack: float = 0.5
    verbose: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("solver tolerance must be > 0")
        if self.method not in ("newton", "lbfgs"):
            raise ValueError(f"unknown solver method {self.method!r}")


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    residual: float
    energy: float
    max_principle_violation: float
    history: list = field(default_factory=list)  # (iteration, energy, residual)

    @property
    def max_principle_ok(self) -> bool:
        return self.max_principle_violation <= 1e-9

    def write_log(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["iteration", "energy", "residual"])
            for it, e, r in self.history:
                w.writerow([it, repr(float(e)), repr(float(r))])


@dataclass
class ScalarField:
    mesh: Mesh
    values: np.ndarray
    info: SolveInfo | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError("field needs one value per mesh node")

    @property
    def du(self) -> np.ndarray:
        return self.mesh.differential(self.values)


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)


def element_weights(S: FinslerStructure, mesh: Mesh) -> np.ndarray:
    """exp(phi) * area per element."""
    return np.exp(S.phi(mesh.centroids)) * mesh.areas


def _grad_and_energy_density(S, mesh, du):
    W = S.legendre_inverse(mesh.centroids, du)
    return W, np.einsum("md,md->m", du, W)


def energy(S: FinslerStructure, mesh: Mesh, u) -> float:
    du = mesh.differential(_values(u))
    _, f2 = _grad_and_energy_density(S, mesh, du)
    return float(np.sum(f2 * element_weights(S, mesh)))


def gradient_field(S: FinslerStructure, mesh: Mesh, u) -> np.ndarray:
    """Per-element Finsler gradient l^{-1}(Du), shape (M, 2)."""
    return S.legendre_inverse(mesh.centroids, mesh.differential(_values(u)))


def _flux_residual(mesh, flux, w):
    """-sum_T w_T D(phi_i)(flux_T) as a nodal vector with boundary rows zeroed."""
    local = np.einsum("mkd,md->mk", mesh.shape_gradients, flux) * w[:, None]
    r = -mesh.assemble_vector(local)
    r[mesh.boundary] = 0.0
    return r


def laplacian_residual(S: FinslerStructure, mesh: Mesh, u) -> np.ndarray:
    """Weak Finsler-Laplacian tested against interior hat functions.

    Entry ``i`` is ``-int D(phi_i)(grad u) dm``; boundary entries are zero.
    """
    return _flux_residual(mesh, gradient_field(S, mesh, u), element_weights(S, mesh))


def weighted_laplacian(S: FinslerStructure, mesh: Mesh, u, V: np.ndarray) -> np.ndarray:
    """Weak weighted Laplacian for the reference field ``V`` (one vector per element)."""
    du = mesh.differential(_values(u))
    V = np.broadcast_to(np.asarray(V, float), du.shape)
    vzero = ~np.any(V != 0, axis=1)
    duzero = ~np.any(du != 0, axis=1)
    if np.any(vzero & ~duzero):
        raise StructureError("reference field vanishes on an element where Du != 0")
    Vs = np.where(vzero[:, None], 1.0, V)
    g = S.g(mesh.centroids, Vs)
    flux = np.linalg.solve(g, du[..., None])[..., 0]
    flux[vzero] = 0.0
    return _flux_residual(mesh, flux, element_weights(S, mesh))


def _hessian(S, mesh, W, w):
    """Energy Hessian 2 * sum_T w_T B^T g^{-1}(W_T) B."""
    Wz = ~np.any(W != 0, axis=1)
    Ws = np.where(Wz[:, None], 1.0, W)
    g = S.g(mesh.centroids, Ws)
    ginv = np.linalg.inv(g)
    if np.any(Wz):
        ginv[Wz] = np.linalg.inv(S.metric_matrix(mesh.centroids[Wz]))
    B = mesh.shape_gradients
    local = 2 * w[:, None, None] * np.einsum("mkd,mde,mle->mkl", B, ginv, B)
    return mesh.assemble_matrix(local)


def _laplace_guess(mesh, u):
    B = mesh.shape_gradients
    K = mesh.assemble_matrix(mesh.areas[:, None, None] * np.einsum("mkd,mld->mkl", B, B))
    I, Bd = mesh.interior, np.flatnonzero(mesh.boundary)
    u = u.copy()
    if len(I):
        u[I] = spla.spsolve(K[I][:, I].tocsc(), -K[I][:, Bd] @ u[Bd], permc_spec="MMD_AT_PLUS_A")
    return u


def solve_dirichlet(S: FinslerStructure, mesh: Mesh, boundary_values, cfg: SolverConfig | None = None) -> ScalarField:
    """Minimise the energy over interior nodal values with the boundary fixed.

    ``boundary_values`` is either a callable on node coordinates or a full
    nodal array (only its boundary entries are used).
    """
    cfg = cfg or SolverConfig()
    if callable(boundary_values):
        g = np.asarray(boundary_values(mesh.nodes), dtype=float)
    else:
        g = np.asarray(boundary_values, dtype=float)
    u = np.zeros(mesh.n_nodes)
    u[mesh.boundary] = g[mesh.boundary]
    if not np.all(np.isfinite(u)):
        raise ValueError("boundary values must be finite")
    u = _laplace_guess(mesh, u)
    I = mesh.interior
    w = element_weights(S, mesh)
    history = []

    def state(u):
        du = mesh.differential(u)
        W, f2 = _grad_and_energy_density(S, mesh, du)
        r = _flux_residual(mesh, W, w)
        return W, float(np.sum(f2 * w)), r

    if cfg.method == "lbfgs":
        base = u.copy()

        def fun(z):
            base[I] = z
            W, E, r = state(base)
            return E, -2 * r[I]

        def cb(z):
            E, gr = fun(z)
            history.append((len(history), E, float(np.max(np.abs(gr), initial=0.0)) / 2))

        res = minimize(fun, u[I], jac=True, method="L-BFGS-B", callback=cb,
                       options={"maxiter": 50 * cfg.max_iter, "gtol": cfg.tol, "ftol": 0.0, "maxcor": 20})
        u[I] = res.x
        W, E, r = state(u)
        it = res.nit
    else:
        W, E, r = state(u)
        it = 0
        for it in range(cfg.max_iter + 1):
            res_norm = float(np.max(np.abs(r[I]), initial=0.0))
            history.append((it, E, res_norm))
            if cfg.verbose:
                log.info("iter %d energy %.12g residual %.3e", it, E, res_norm)
            if res_norm <= cfg.tol or it == cfg.max_iter:
                break
            H = _hessian(S, mesh, W, w)[I][:, I].tocsc()
            grad = -2 * r[I]
            step = -spla.spsolve(H, grad, permc_spec="MMD_AT_PLUS_A")
            slope = float(grad @ step)
            t = 1.0
            while True:
                trial = u.copy()
                trial[I] += t * step
                Wt, Et, rt = state(trial)
                if Et <= E + cfg.armijo * t * slope or t < 1e-10:
                    break
                t *= cfg.backtrack
            if Et >= E:
                # energy decrease is below working precision: fall back to
                # the full step when it still reduces the residual
                trial = u.copy()
                trial[I] += step
                Wt, Et, rt = state(trial)
                if float(np.max(np.abs(rt[I]), initial=0.0)) >= res_norm or Et > E + 1e-12 * max(1.0, abs(E)):
                    break
            u, W, E, r = trial, Wt, Et, rt
    res_norm = float(np.max(np.abs(r[I]), initial=0.0))
    gb = u[mesh.boundary]
    viol = max(0.0, float(u.max() - gb.max()), float(gb.min() - u.min()))
    info = SolveInfo(res_norm <= cfg.tol, it, res_norm, E, viol, history)
    if not info.converged:
        log.warning("solve_dirichlet stopped at residual %.3e after %d iterations", res_norm, it)
    return ScalarField(mesh, u, info)


def log_transform_check(S: FinslerStructure, mesh: Mesh, u, sign: float = -1.0, margin: int = 2) -> InequalityReport:
    """Compare the weak Laplacian of ``v = log u`` with ``sign * F(grad v)**2``.

    Both sides are tested against interior hat functions and divided by the
    lumped weighted mass, giving nodal values. The discrepancy is taken over
    interior nodes at least ``margin`` graph hops away from the boundary.
    """
    vals = _values(u)
    if np.any(vals <= 0):
        raise ValueError("log transform needs a strictly positive field")
    v = np.log(vals)
    w = element_weights(S, mesh)
    du = mesh.differential(v)
    W, f2 = _grad_and_energy_density(S, mesh, du)
    lhs = _flux_residual(mesh, W, w)
    rhs = sign * mesh.assemble_vector(np.repeat((f2 * w / 3)[:, None], 3, axis=1))
    mass = mesh.assemble_vector(np.repeat((w / 3)[:, None], 3, axis=1))
    far = ~mesh.boundary
    A = mesh.adjacency
    near = mesh.boundary.astype(float)
    for _ in range(margin):
        near = near + A @ near
    far &= near == 0
    diff = np.abs(lhs - rhs)[far] / mass[far]
    scale = np.abs(rhs[far] / mass[far])
    disc = float(diff.max()) if diff.size else 0.0
    return InequalityReport(
        tag="log_transform",
        lhs=disc,
        rhs=0.0,
        params={"h": mesh.h, "sign": sign},
        extras={"max_abs_rhs": float(scale.max()) if scale.size else 0.0, "nodes": int(far.sum())},
    )
