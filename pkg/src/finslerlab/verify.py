"""Empirical checks of the gradient estimate and its companion inequalities.

The constants in these inequalities are existential, so every check reports
measured left and right sides plus a normalised statistic; acceptance is
about boundedness and mesh-refinement stability of those statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from finslerlab import geometry as geo
from finslerlab.mesh import Mesh, disk_mesh, rectangle_mesh
from finslerlab.norms import (
    FinslerStructure,
    dual_norm_many,
    estimate_uniform_constants,
    structure_from_dict,
)
from finslerlab.pde import ScalarField, SolverConfig, element_weights, gradient_field, solve_dirichlet
from finslerlab.report import InequalityReport

__all__ = [
    "InequalityReport",
    "ExperimentSuite",
    "norm_identity_reports",
    "BallSamples",
    "positive_boundary_data",
    "covering_mesh",
    "gradient_estimate_report",
    "harnack_report",
    "liouville_trend",
    "bochner_check",
    "bochner_refinement",
    "ball_samples",
    "poincare_constant",
    "sobolev_constant",
    "fit_constant",
    "run_gradient_suite",
]


def norm_identity_reports(S: FinslerStructure, samples: int = 1000, seed: int = 0, domain=None) -> list:
    """Pointwise identities of a Finsler structure over random (x, V) samples.

    Each report has the maximal violation as LHS and its tolerance as RHS.
    """
    n = S.dim
    rng = np.random.default_rng(seed)
    lo, hi = (np.array(b, float) for b in zip(*(domain or ((-1.0, 1.0),) * n)))
    x = lo + (hi - lo) * rng.random((samples, n))
    v = rng.normal(size=(samples, n))
    w = rng.normal(size=(samples, n))
    d = S.derivatives(x, v, order=3)
    F = d.F
    out = {}

    err = 0.0
    for t in (0.5, 2.0, 10.0):
        err = max(err, float(np.max(np.abs(S.norm(x, t * v) - t * F) / (t * F))))
    out["homogeneity"] = (err, 1e-12)
    out["euler"] = (float(np.max(np.abs(np.einsum("mi,mij,mj->m", v, d.hess, v) - F**2) / F**2)), 1e-9)
    err = 0.0
    for t in (0.5, 2.0, 10.0):
        err = max(err, float(np.max(np.abs(S.g(x, t * v) - d.hess))))
    out["g_zero_homogeneity"] = (err, 1e-9)
    C = 0.5 * d.third
    vu = v / np.linalg.norm(v, axis=1)[:, None]
    out["cartan_contraction"] = (float(np.max(np.abs(np.einsum("mi,mijk->mjk", vu, C))) * 1.0), 1e-8)
    xi = S.legendre(x, v)
    back = S.legendre_inverse(x, xi)
    out["legendre_round_trip"] = (float(np.max(np.linalg.norm(back - v, axis=1) / np.linalg.norm(v, axis=1))), 1e-8)
    Fs = dual_norm_many(S, x, xi)
    out["duality"] = (float(np.max(np.abs(Fs - F) / F)), 1e-6)
    # xi-Hessian of F*^2/2 is the Jacobian of the inverse Legendre map
    step = 1e-6 * np.linalg.norm(xi, axis=1)
    jac = np.empty((samples, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        jac[:, :, k] = (S.legendre_inverse(x, xi + step[:, None] * e) - S.legendre_inverse(x, xi - step[:, None] * e)) / (2 * step[:, None])
    ginv = np.linalg.inv(d.hess)
    out["dual_hessian"] = (float(np.max(np.abs(jac - ginv))), 1e-5)
    tri = S.norm(x, v + w) - S.norm(x, v) - S.norm(x, w)
    out["triangle"] = (float(np.max(tri)), 1e-12)
    uc = estimate_uniform_constants(S, domain=tuple(zip(lo, hi)), samples=max(samples, 1000), seed=seed)
    out["reversibility_smooth"] = (uc.rho**2 * uc.lam, 1.0 + 1e-9)
    out["reversibility_convex"] = (uc.rho**2 / uc.Lam, 1.0 + 1e-9)
    reports = []
    for tag, (lhs, tol) in out.items():
        reports.append(InequalityReport(tag=f"norm_{tag}", lhs=lhs, rhs=tol, params={"family": S.family, "samples": samples, "seed": seed}))
    return reports


def positive_boundary_data(seed: int, center=(0.0, 0.0), scale: float = 1.0, modes: int = 3):
    """Smooth random boundary data with values in [0.2, 3.8]."""
    rng = np.random.default_rng(seed)
    amp = rng.uniform(-0.6, 0.6, modes)
    ang = rng.uniform(0, 2 * np.pi, modes)
    freq = np.arange(1, modes + 1) * np.pi
    phase = rng.uniform(0, 2 * np.pi, modes)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    center = np.asarray(center, float)

    def g(x):
        y = (np.asarray(x, float) - center) / scale
        return 2.0 + np.sum(amp * np.cos(freq * (y @ dirs.T) + phase), axis=-1)

    return g


def covering_mesh(S: FinslerStructure, p, radius: float, h: float, margin: float = 0.1) -> Mesh:
    """Rectangle mesh containing the forward ball B+(p, radius), with ``p`` on a node."""
    p = np.asarray(p, float)
    w = 2.0 * radius
    for _ in range(8):
        coarse = rectangle_mesh(p - w, p + w, w / 24)
        d = geo.distance_field(S, p, coarse)
        if not np.any(d[coarse.boundary] < radius * (1 + margin)):
            break
        w *= 2
    else:
        raise geo.GeometryError("forward ball does not fit in any covering square")
    pts = coarse.nodes[d < radius * (1 + margin)]
    pad = 2 * w / 24
    lo = pts.min(axis=0) - pad
    hi = pts.max(axis=0) + pad
    lo = p - h * np.ceil((p - lo) / h)
    hi = p + h * np.ceil((hi - p) / h)
    return rectangle_mesh(lo, hi, h)


def _dual(S, mesh, xi):
    return S.dual_norm_legendre(mesh.centroids, xi)


def gradient_estimate_report(S: FinslerStructure, p, R: float, u: ScalarField, K: float = 0.0,
                             C: float | None = None, ball: geo.Ball | None = None) -> InequalityReport:
    """max over B_R of max{F(grad log u), F(grad(-log u))}, normalised by (1 + sqrt(K) R)/R."""
    mesh = u.mesh
    if np.any(u.values <= 0):
        raise ValueError("gradient estimate needs a positive field")
    ball = ball or geo.forward_ball(S, p, R, mesh, refine=True)
    if ball.truncated:
        raise geo.GeometryError("ball B_R exceeds the mesh")
    elems = ball.element_mask(mesh)
    dv = mesh.differential(np.log(u.values))[elems]
    xc = mesh.centroids[elems]
    plus = S.dual_norm_legendre(xc, dv)
    minus = S.dual_norm_legendre(xc, -dv)
    lhs = float(max(plus.max(initial=0.0), minus.max(initial=0.0)))
    factor = (1 + math.sqrt(K) * R) / R
    sigma = lhs / factor
    rhs = lhs if C is None else C * factor
    return InequalityReport(
        tag="gradient_estimate",
        lhs=lhs,
        rhs=rhs,
        params={"R": R, "K": K, "h": mesh.h, "family": S.family},
        extras={"sigma": sigma, "elements": int(elems.sum()), "constant_supplied": C is not None},
    )


def harnack_report(S: FinslerStructure, p, R: float, u: ScalarField, rho: float,
                   gradient: InequalityReport | None = None, ball: geo.Ball | None = None,
                   tolerance: float = 5e-2) -> InequalityReport:
    """log(sup u / inf u) on B_R against (rho + 1) R max F(grad log u)."""
    mesh = u.mesh
    ball = ball or geo.forward_ball(S, p, R, mesh)
    gradient = gradient or gradient_estimate_report(S, p, R, u, ball=ball)
    vals = u.values[ball.inside]
    lhs = float(np.log(vals.max() / vals.min()))
    rhs = (rho + 1) * R * gradient.lhs
    return InequalityReport(
        tag="harnack",
        lhs=lhs,
        rhs=rhs,
        params={"R": R, "rho": rho, "h": mesh.h, "family": S.family},
        extras={"sup": float(vals.max()), "inf": float(vals.min())},
        tolerance=tolerance,
    )


def _ball_mesh(S, p, R, h):
    if S.family == "euclidean" and S.is_minkowski:
        return disk_mesh(R, h, p)
    big = covering_mesh(S, p, R, h)
    ball = geo.forward_ball(S, p, R, big, refine=False)
    sub, _ = big.submesh(ball.element_mask(big))
    return sub


def liouville_trend(S: FinslerStructure, boundary, radii=(2, 4, 8, 16), h_rel: float = 1 / 32, p=(0.0, 0.0),
                    scaled: bool = True, threshold: float = -0.8, cfg: SolverConfig | None = None) -> InequalityReport:
    """Decay of max_{B_1} F(grad u) for harmonic u on growing balls B_R.

    With ``scaled`` the boundary data is ``boundary((x - p) / R)``: a fixed
    bounded oscillation pattern. The fitted log-log slope is the LHS and the
    threshold the RHS.
    """
    p = np.asarray(p, float)
    trace = []
    bound_ratio = []
    for R in radii:
        mesh = _ball_mesh(S, p, R, h_rel * R)
        g = (lambda x, R=R: boundary((x - p) / R)) if scaled else boundary
        u = solve_dirichlet(S, mesh, g, cfg)
        unit = geo.forward_ball(S, p, 1.0, mesh, refine=False)
        elems = unit.element_mask(mesh)
        W = gradient_field(S, mesh, u)[elems]
        m = float(S.norm(mesh.centroids[elems], W).max(initial=0.0))
        trace.append((float(R), m))
        bound_ratio.append(m * R / (3 * float(np.abs(u.values).max())))
    Rs = np.array([t[0] for t in trace])
    ms = np.array([t[1] for t in trace])
    if np.all(ms <= 1e-12):
        slope = -math.inf
    else:
        slope = float(np.polyfit(np.log(Rs), np.log(np.maximum(ms, 1e-300)), 1)[0])
    return InequalityReport(
        tag="liouville",
        lhs=slope if math.isfinite(slope) else -1e300,
        rhs=threshold,
        params={"h_rel": h_rel, "family": S.family, "scaled": scaled},
        trace=trace,
        extras={"gradient_times_R_over_3max": bound_ratio, "max_gradient": ms.tolist(), "identically_zero": bool(np.all(ms <= 1e-12))},
    )


def _nodal_projection(mesh, values, w):
    num = mesh.assemble_vector(np.repeat((values * w)[:, None], 3, axis=1))
    den = mesh.assemble_vector(np.repeat(w[:, None], 3, axis=1))
    return num / den


def bochner_check(S: FinslerStructure, mesh: Mesh, u, eta: np.ndarray, K: float = 0.0, N: float = math.inf,
                  eps_h: float = 0.0) -> InequalityReport:
    """Integrated Bochner inequality with a nonnegative P1 cut-off ``eta``.

    LHS = -int D eta(grad^{grad u}(F(grad u)^2 / 2)) dm, RHS = int eta Ric_N(grad u) dm
    (the terms carrying the Laplacian of u vanish for harmonic u). ``F^2/2`` is
    recovered as a nodal field by weighted averaging of its element values.
    """
    vals = u.values if isinstance(u, ScalarField) else np.asarray(u, float)
    eta = np.asarray(eta, float)
    if np.any(eta < 0):
        raise ValueError("cut-off must be nonnegative")
    w = element_weights(S, mesh)
    du = mesh.differential(vals)
    W = S.legendre_inverse(mesh.centroids, du)
    f = 0.5 * np.einsum("md,md->m", du, W)
    fn = _nodal_projection(mesh, f, w)
    df = mesh.differential(fn)
    zero = ~np.any(W != 0, axis=1)
    g = S.g(mesh.centroids, np.where(zero[:, None], 1.0, W))
    flux = np.linalg.solve(g, df[..., None])[..., 0]
    flux[zero] = 0.0
    deta = mesh.differential(eta)
    lhs = float(-np.sum(w * np.einsum("md,md->m", deta, flux)))
    events = []
    N_used = float(N)
    ric, sentinel = geo.weighted_ricci_field(S, mesh.centroids, W, N_used)
    if np.any(sentinel):
        events.append(f"Ric_{N_used:g} sentinel on {int(sentinel.sum())} elements; switched to N = {S.dim + 1}")
        N_used = float(S.dim + 1)
        ric, sentinel = geo.weighted_ricci_field(S, mesh.centroids, W, N_used)
    eta_c = mesh.element_values(eta)
    rhs = float(np.sum(w * eta_c * ric))
    return InequalityReport(
        tag="bochner",
        lhs=rhs,
        rhs=lhs,
        params={"h": mesh.h, "N": N_used, "K": K, "family": S.family},
        extras={"bochner_lhs": lhs, "ricci_term": rhs, "int_eta": float(np.sum(w * eta_c)), "events": events},
        tolerance=eps_h,
    )


def bump(center=(0.0, 0.0), radius: float = 0.6):
    center = np.asarray(center, float)

    def eta(x):
        r2 = np.sum((np.asarray(x, float) - center) ** 2, axis=-1) / radius**2
        return np.maximum(0.0, 1.0 - r2) ** 2

    return eta


def bochner_refinement(S: FinslerStructure, boundary, hs=(1 / 32, 1 / 64, 1 / 128), N: float = math.inf,
                       lower=(-1.0, -1.0), upper=(1.0, 1.0), eta=None, cfg: SolverConfig | None = None) -> list:
    """Bochner reports across mesh sizes; eps_h = |slack_h - slack_{h/2}| where available.

    The inequality is read as ``bochner_lhs >= ricci_term``: the report's
    ``slack`` is ``bochner_lhs - ricci_term``.
    """
    eta = eta or bump()
    reports = []
    for h in hs:
        mesh = rectangle_mesh(lower, upper, h)
        u = solve_dirichlet(S, mesh, boundary, cfg)
        reports.append(bochner_check(S, mesh, u, eta(mesh.nodes), N=N))
    for k, r in enumerate(reports):
        if k + 1 < len(reports):
            r.tolerance = abs(r.slack - reports[k + 1].slack)
            r.extras["eps_h"] = r.tolerance
    for r in reports:
        r.trace = [(float(q.params["h"]), float(q.extras["bochner_lhs"])) for q in reports]
    return reports


@dataclass
class BallSamples:
    """Sample fields on a meshed forward ball."""

    mesh: Mesh
    center: np.ndarray
    R: float
    fields: np.ndarray  # (k, n_nodes)

    def transformed(self, scale: float = 1.0, shift: float = 0.0) -> "BallSamples":
        return replace(self, fields=scale * self.fields + shift)


def ball_samples(S: FinslerStructure, p, R: float, n: int = 50, modes: int = 10, h_rel: float = 1 / 16,
                 seed: int = 0) -> BallSamples:
    """Random combinations of the lowest eigenvectors of the mesh-graph Laplacian on B_R."""
    p = np.asarray(p, float)
    mesh = _ball_mesh(S, p, R, h_rel * R)
    A = mesh.adjacency.toarray()
    L = np.diag(A.sum(axis=1)) - A
    _, vecs = sla.eigh(L, subset_by_index=[0, min(modes, mesh.n_nodes) - 1])
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=(n, vecs.shape[1])) / (1.0 + np.arange(vecs.shape[1]))
    return BallSamples(mesh, p, float(R), coef @ vecs.T)


def _energy_density_integral(S, mesh, u, w):
    du = mesh.differential(u)
    W = S.legendre_inverse(mesh.centroids, du)
    return float(np.sum(w * np.einsum("md,md->m", du, W)))


def poincare_constant(S: FinslerStructure, p=(0.0, 0.0), R: float = 1.0, samples: BallSamples | None = None,
                      **kw) -> InequalityReport:
    """c_hat(R) = max over samples of int |u - mean|^2 dm / (R^2 int F(grad u)^2 dm)."""
    samples = samples or ball_samples(S, p, R, **kw)
    mesh, R = samples.mesh, samples.R
    w = element_weights(S, mesh)
    M = mesh.mass_matrix(np.exp(S.phi(mesh.centroids)))
    one = np.ones(mesh.n_nodes)
    total = float(one @ M @ one)
    ratios = []
    for u in samples.fields:
        den = R**2 * _energy_density_integral(S, mesh, u, w)
        if den <= 1e-14 * max(1.0, float(np.abs(u).max())) ** 2 * total:
            continue
        c = u - float(one @ M @ u) / total
        ratios.append(float(c @ M @ c) / den)
    if not ratios:
        raise ValueError("all samples were constant")
    c_hat = max(ratios)
    return InequalityReport(
        tag="poincare",
        lhs=c_hat,
        rhs=c_hat,
        params={"R": R, "h": mesh.h, "family": S.family, "samples": len(ratios)},
        extras={"c_hat": c_hat, "mean_ratio": float(np.mean(ratios)), "volume": total},
    )


def _edge_midpoint_integral(mesh, nodal, w, power):
    t = mesh.triangles
    mids = 0.5 * (nodal[t] + nodal[t[:, [1, 2, 0]]])
    return float(np.sum(w * np.mean(np.abs(mids) ** power, axis=1)))


def sobolev_constant(S: FinslerStructure, p=(0.0, 0.0), R: float = 1.0, samples: BallSamples | None = None,
                     nu: float | None = None, N: float | None = None, **kw) -> InequalityReport:
    """Empirical Sobolev constant on B_R.

    ``C_hat`` uses the mean-centred form (u - mean on the left, F*^2(Du) on the
    right) and is invariant under u -> u + c and u -> c u for c > 0;
    ``C_hat_uncentered`` uses u itself with the extra R^-2 u^2 term.
    """
    samples = samples or ball_samples(S, p, R, **kw)
    mesh, R = samples.mesh, samples.R
    N = float(S.dim if N is None else N)
    nu = 2 * N if nu is None else float(nu)
    if not nu > 2:
        raise ValueError("nu must exceed 2")
    q = 2 * nu / (nu - 2)
    w = element_weights(S, mesh)
    M = mesh.mass_matrix(np.exp(S.phi(mesh.centroids)))
    one = np.ones(mesh.n_nodes)
    vol = float(one @ M @ one)
    pref = R**2 * vol ** (-2 / nu)
    centred, uncentred = [], []
    for u in samples.fields:
        grad2 = _energy_density_integral(S, mesh, u, w)
        if grad2 <= 1e-14 * max(1.0, float(np.abs(u).max())) ** 2 * vol:
            continue
        c = u - float(one @ M @ u) / vol
        lhs_c = _edge_midpoint_integral(mesh, c, w, q) ** (2 / q)
        centred.append(lhs_c / (pref * grad2))
        lhs_u = _edge_midpoint_integral(mesh, u, w, q) ** (2 / q)
        uncentred.append(lhs_u / (pref * (grad2 + float(u @ M @ u) / R**2)))
    if not centred:
        raise ValueError("all samples were constant")
    C_hat = max(centred)
    return InequalityReport(
        tag="sobolev",
        lhs=C_hat,
        rhs=C_hat,
        params={"R": R, "h": mesh.h, "nu": nu, "N": N, "family": S.family, "samples": len(centred)},
        extras={"C_hat": C_hat, "C_hat_uncentered": max(uncentred), "volume": vol},
    )


def fit_constant(reports, key: str = "sigma") -> float:
    """Empirical constant: the largest normalised statistic across a suite."""
    reports = list(reports)
    if not reports:
        raise ValueError("cannot fit a constant to an empty suite")
    return float(max(r.extras[key] for r in reports))


def fit_covariates(reports, key: str = "sigma") -> dict:
    best = max(reports, key=lambda r: r.extras[key])
    return {"value": float(best.extras[key]), **{k: best.params.get(k) for k in ("N", "lambda", "Lambda", "R", "family")}}


# -- suites ----------------------------------------------------------------------

DEFAULT_FAMILIES = (
    {"family": "euclidean"},
    {"family": "randers", "drift": [0.25, 0]},
    {"family": "randers", "drift": [0.5, 0]},
    {"family": "quartic", "eps": 0.1},
)


@dataclass
class ExperimentSuite:
    families: tuple = DEFAULT_FAMILIES
    radii: tuple = (0.5, 1.0)
    hs: tuple = (1 / 32, 1 / 64)
    boundary_seeds: int = 3
    center: tuple = (0.0, 0.0)
    seed: int = 0
    N: float = 2.0


@dataclass
class SuiteMember:
    structure: dict
    R: float
    data_seed: int
    gradient: list = field(default_factory=list)  # one report per h
    harnack: list = field(default_factory=list)

    @property
    def sigmas(self) -> list:
        return [r.extras["sigma"] for r in self.gradient]

    @property
    def relative_change(self) -> float:
        s = self.sigmas
        return abs(s[-1] - s[0]) / s[0] if s[0] > 0 else 0.0


def run_gradient_suite(suite: ExperimentSuite, cfg: SolverConfig | None = None) -> list:
    """Positive harmonic solves on covering meshes of B+(p, 2R), reported at every h."""
    members = []
    p = np.asarray(suite.center, float)
    for fam in suite.families:
        S = structure_from_dict(fam)
        uc = estimate_uniform_constants(S, domain=((-1, 1),) * S.dim, samples=4096)
        K = geo.estimate_ricci_lower_bound(S, np.array([p]), N=max(suite.N, S.dim))
        for R in suite.radii:
            for k in range(suite.boundary_seeds):
                data_seed = suite.seed * 1000 + k
                g = positive_boundary_data(data_seed, p, scale=2 * R)
                m = SuiteMember(dict(fam), float(R), data_seed)
                for h in suite.hs:
                    mesh = covering_mesh(S, p, 2 * R, h)
                    u = solve_dirichlet(S, mesh, g, cfg)
                    ball = geo.forward_ball(S, p, R, mesh)
                    gr = gradient_estimate_report(S, p, R, u, K=K, ball=ball)
                    gr.params.update({"lambda": uc.lam, "Lambda": uc.Lam, "rho": uc.rho, "N": suite.N, "seed": data_seed})
                    gr.extras["solver_converged"] = u.info.converged
                    gr.extras["max_principle_violation"] = u.info.max_principle_violation
                    m.gradient.append(gr)
                    m.harnack.append(harnack_report(S, p, R, u, uc.rho, gradient=gr, ball=ball))
                members.append(m)
    return members
