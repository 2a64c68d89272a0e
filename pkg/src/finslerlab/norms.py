"""Pointwise Finsler norms, their tensors and Legendre duality.

Every structure evaluates on arrays: points ``x`` and vectors ``v`` of shape
``(..., n)`` broadcast against each other. The workhorse is
:meth:`FinslerStructure.derivatives`, which returns ``F`` together with the
first three ``v``-derivatives of ``L = F**2 / 2`` in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from finslerlab.expr import Expr, eval_matrix, eval_vector, parse_matrix

FAMILIES = ("euclidean", "riemannian", "randers", "quartic")


class StructureError(ValueError):
    """Raised for non-admissible structures or undefined tensor evaluations."""


class ConvergenceError(RuntimeError):
    pass


def _sym3(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``h_ij w_k + h_ik w_j + h_jk w_i`` for symmetric ``h``."""
    t = h[..., :, :, None] * w[..., None, None, :]
    return t + np.swapaxes(t, -1, -2) + np.moveaxis(t, -1, -3)


def _outer3(w: np.ndarray) -> np.ndarray:
    return w[..., :, None, None] * w[..., None, :, None] * w[..., None, None, :]


@dataclass(frozen=True)
class Derivatives:
    F: np.ndarray
    grad: np.ndarray  # d/dv of F^2/2, i.e. the Legendre image
    hess: np.ndarray | None = None  # fundamental tensor g_ij
    third: np.ndarray | None = None  # d^3/dv^3 of F^2/2


@dataclass(frozen=True)
class FundamentalTensor:
    x: np.ndarray
    v: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray

    def __call__(self, a, b) -> float:
        return float(np.asarray(a) @ self.g @ np.asarray(b))


@dataclass(frozen=True)
class CartanTensor:
    x: np.ndarray
    v: np.ndarray
    C: np.ndarray


@dataclass(frozen=True)
class UniformConstants:
    lam: float
    Lam: float
    rho: float
    lam_dual: float
    Lam_dual: float
    n_samples: int
    domain: tuple

    @property
    def rho_sq_bound_smooth(self) -> float:
        """Upper bound on rho**2 from uniform convexity (1/lambda)."""
        return 1.0 / self.lam

    @property
    def rho_sq_bound_convex(self) -> float:
        """Upper bound on rho**2 from uniform smoothness (Lambda)."""
        return self.Lam

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "Lambda": self.Lam,
            "rho": self.rho,
            "lambda_dual": self.lam_dual,
            "Lambda_dual": self.Lam_dual,
            "n_samples": self.n_samples,
            "domain": [list(b) for b in self.domain],
        }


@dataclass(frozen=True)
class FinslerStructure:
    """Base class. Subclasses implement :meth:`derivatives` for ``v != 0``."""

    dim: int = 2
    density: Expr | None = None
    family: ClassVar[str] = ""

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise StructureError(f"dimension {self.dim} not supported (n in {{2, 3}})")
        if self.density is None:
            object.__setattr__(self, "density", Expr.parse("0", self.dim))
        elif not isinstance(self.density, Expr):
            object.__setattr__(self, "density", Expr.parse(self.density, self.dim))

    # -- family interface -------------------------------------------------
    def derivatives(self, x, v, order: int = 2) -> Derivatives:
        raise NotImplementedError

    @property
    def coefficient_exprs(self) -> list[Expr]:
        return []

    @property
    def is_minkowski(self) -> bool:
        """True when F does not depend on x (constant coefficients)."""
        return all(e.is_constant for e in self.coefficient_exprs)

    @property
    def is_reversible(self) -> bool:
        return True

    def analytic_ricci(self, x, v):
        """Closed-form Ricci curvature if the family stores one, else None."""
        if self.is_minkowski:
            return np.zeros(np.broadcast_shapes(np.shape(x)[:-1], np.shape(v)[:-1]))
        return None

    def to_dict(self) -> dict:
        return {"family": self.family, "dim": self.dim, "density": self.density.source}

    # -- evaluation ---------------------------------------------------------
    def _check(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape[-1] != self.dim or v.shape[-1] != self.dim:
            raise StructureError(
                f"dimension mismatch: structure is {self.dim}-dimensional, got x{x.shape} v{v.shape}"
            )
        return x, v

    def norm(self, x, v) -> np.ndarray:
        x, v = self._check(x, v)
        zero = ~np.any(v != 0, axis=-1)
        vs = np.where(zero[..., None], 1.0, v)
        with np.errstate(invalid="ignore", divide="ignore"):
            F = self.derivatives(x, vs, order=0).F
        return np.where(zero, 0.0, F)

    def phi(self, x) -> np.ndarray:
        return self.density(np.asarray(x, dtype=float))

    def g(self, x, v) -> np.ndarray:
        """Vectorised fundamental tensor (no zero-vector check)."""
        x, v = self._check(x, v)
        return self.derivatives(x, v, order=2).hess

    def legendre(self, x, v) -> np.ndarray:
        x, v = self._check(x, v)
        zero = ~np.any(v != 0, axis=-1)
        vs = np.where(zero[..., None], 1.0, v)
        with np.errstate(invalid="ignore", divide="ignore"):
            grad = self.derivatives(x, vs, order=1).grad
        return np.where(zero[..., None], 0.0, grad)

    def legendre_inverse(self, x, xi, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
        """Solve ``l(W) = xi`` by damped Newton on ``W -> F(W)^2/2 - xi(W)``."""
        x, xi = self._check(x, xi)
        x, xi = np.broadcast_arrays(x, xi)
        shape = xi.shape
        x = x.reshape(-1, self.dim)
        xi = xi.reshape(-1, self.dim)
        out = np.zeros_like(xi)
        scale = np.linalg.norm(xi, axis=-1)
        active = scale > 0
        if not np.any(active):
            return out.reshape(shape)
        xa, ka, sa = x[active], xi[active], scale[active]
        w = self._legendre_inverse_guess(xa, ka)
        d = self.derivatives(xa, w, order=2)
        obj = 0.5 * d.F**2 - np.einsum("...i,...i", ka, w)
        for _ in range(max_iter):
            r = d.grad - ka
            if np.all(np.linalg.norm(r, axis=-1) <= tol * sa):
                break
            step = np.linalg.solve(d.hess, r[..., None])[..., 0]
            t = np.ones(len(w))
            for _ in range(30):
                w_new = w - t[:, None] * step
                d_new = self.derivatives(xa, w_new, order=2)
                obj_new = 0.5 * d_new.F**2 - np.einsum("...i,...i", ka, w_new)
                bad = ~(obj_new <= obj + 1e-15 * np.abs(obj)) | ~np.isfinite(obj_new)
                if not np.any(bad):
                    break
                t = np.where(bad, 0.5 * t, t)
            w, d, obj = w_new, d_new, obj_new
        else:
            r = np.linalg.norm(d.grad - ka, axis=-1)
            if np.any(r > 1e3 * tol * sa):
                raise ConvergenceError(f"legendre_inverse did not converge (residual {r.max():.3e})")
        out[active] = w
        return out.reshape(shape)

    def _legendre_inverse_guess(self, x, xi):
        a = self.metric_matrix(x)
        w = np.linalg.solve(a, xi[..., None])[..., 0]
        F = self.derivatives(x, w, order=0).F
        t = np.einsum("...i,...i", xi, w) / F**2
        return w * np.abs(t)[..., None]

    def metric_matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim)).copy()

    def dual_norm_legendre(self, x, xi) -> np.ndarray:
        """F*(xi) through the identity F*(l(W)) = F(W)."""
        w = self.legendre_inverse(x, xi)
        return self.norm(np.broadcast_to(np.asarray(x, float), w.shape), w)

    def dx_derivatives(self, x, v, step: float = 1e-5):
        """x-derivatives of L = F^2/2 and of dL/dv by central differences.

        Returns ``(dL/dx_k, d(dL/dv_i)/dx_k)`` with shapes ``(..., n)`` and
        ``(..., n_i, n_k)``.
        """
        x, v = self._check(x, v)
        x, v = np.broadcast_arrays(x, v)
        n = self.dim
        dL = np.zeros(x.shape)
        dgrad = np.zeros(x.shape + (n,))
        if self.is_minkowski:
            return dL, dgrad
        for k in range(n):
            e = np.zeros(n)
            e[k] = step
            dp = self.derivatives(x + e, v, order=1)
            dm = self.derivatives(x - e, v, order=1)
            dL[..., k] = (0.5 * dp.F**2 - 0.5 * dm.F**2) / (2 * step)
            dgrad[..., :, k] = (dp.grad - dm.grad) / (2 * step)
        return dL, dgrad


@dataclass(frozen=True)
class Riemannian(FinslerStructure):
    """F(x, v) = sqrt(a_ij(x) v^i v^j)."""

    metric: tuple = ()
    curvature: Expr | None = None  # constant-curvature closed form (sectional K)
    family: ClassVar[str] = "riemannian"

    def __post_init__(self):
        super().__post_init__()
        if not self.metric:
            object.__setattr__(self, "metric", parse_matrix("1", self.dim))
        elif isinstance(self.metric, (str, int, float)) or not isinstance(self.metric[0][0], Expr):
            object.__setattr__(self, "metric", parse_matrix(self.metric, self.dim))
        if self.curvature is not None and not isinstance(self.curvature, Expr):
            object.__setattr__(self, "curvature", Expr.parse(self.curvature, self.dim))

    @property
    def coefficient_exprs(self):
        return [e for row in self.metric for e in row]

    def metric_matrix(self, x):
        return eval_matrix(self.metric, x)

    def derivatives(self, x, v, order=2):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        a = self.metric_matrix(x)
        av = np.einsum("...ij,...j->...i", a, v)
        F = np.sqrt(np.einsum("...i,...i", v, av))
        if order == 0:
            return Derivatives(F, None)
        hess = third = None
        if order >= 2:
            hess = np.broadcast_to(a, av.shape + (self.dim,)).copy()
        if order >= 3:
            third = np.zeros(av.shape + (self.dim, self.dim))
        return Derivatives(F, av, hess, third)

    def analytic_ricci(self, x, v):
        if self.curvature is not None:
            F = self.norm(x, v)
            return (self.dim - 1) * self.curvature(np.asarray(x, float)) * F**2
        return super().analytic_ricci(x, v)

    def to_dict(self):
        d = super().to_dict()
        d["metric"] = [[e.source for e in row] for row in self.metric]
        if self.curvature is not None:
            d["curvature"] = self.curvature.source
        return d


@dataclass(frozen=True)
class Euclidean(Riemannian):
    family: ClassVar[str] = "euclidean"

    def __post_init__(self):
        object.__setattr__(self, "metric", ())
        object.__setattr__(self, "curvature", None)
        super().__post_init__()
        object.__setattr__(self, "curvature", Expr.parse("0", self.dim))

    def to_dict(self):
        return FinslerStructure.to_dict(self)


@dataclass(frozen=True)
class Randers(FinslerStructure):
    """F(x, v) = sqrt(a_ij v^i v^j) + b_i v^i with a^{ij} b_i b_j < 1."""

    metric: tuple = ()
    drift: tuple = ()
    chart: tuple = ((-10.0, 10.0),) * 2
    family: ClassVar[str] = "randers"

    def __post_init__(self):
        super().__post_init__()
        if not self.metric:
            object.__setattr__(self, "metric", parse_matrix("1", self.dim))
        elif not isinstance(self.metric[0][0], Expr):
            object.__setattr__(self, "metric", parse_matrix(self.metric, self.dim))
        if not self.drift:
            raise StructureError("randers structure needs a drift 1-form b")
        if not isinstance(self.drift[0], Expr):
            if len(self.drift) != self.dim:
                raise StructureError(f"drift must have {self.dim} components")
            object.__setattr__(self, "drift", tuple(Expr.parse(c, self.dim) for c in self.drift))
        if len(self.chart) != self.dim:
            object.__setattr__(self, "chart", tuple(tuple(self.chart[0]) for _ in range(self.dim)))
        bb = self.drift_norm_sq_sup()
        if not bb < 1.0:
            raise StructureError(f"randers drift too large: sup a^ij b_i b_j = {bb:.4g} >= 1")

    def drift_norm_sq_sup(self) -> float:
        if self.is_minkowski:
            pts = np.zeros((1, self.dim))
        else:
            axes = [np.linspace(lo, hi, 21) for lo, hi in self.chart]
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        a = self.metric_matrix(pts)
        b = eval_vector(self.drift, pts)
        if np.any(np.linalg.eigvalsh(a)[..., 0] <= 0):
            raise StructureError("randers metric a_ij is not positive definite")
        return float(np.max(np.einsum("...i,...i", b, np.linalg.solve(a, b[..., None])[..., 0])))

    @property
    def coefficient_exprs(self):
        return [e for row in self.metric for e in row] + list(self.drift)

    @property
    def is_reversible(self):
        return all(e.is_constant and e(np.zeros((1, self.dim)))[0] == 0 for e in self.drift)

    def metric_matrix(self, x):
        return eval_matrix(self.metric, x)

    def drift_vector(self, x):
        return eval_vector(self.drift, x)

    def derivatives(self, x, v, order=2):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        a = self.metric_matrix(x)
        b = self.drift_vector(x)
        av = np.einsum("...ij,...j->...i", a, v)
        alpha = np.sqrt(np.einsum("...i,...i", v, av))
        beta = np.einsum("...i,...i", b, v)
        F = alpha + beta
        if order == 0:
            return Derivatives(F, None)
        ell = av / alpha[..., None]
        y = ell + b
        grad = F[..., None] * y
        hess = third = None
        if order >= 2:
            H = (a - ell[..., :, None] * ell[..., None, :]) / alpha[..., None, None]
            hess = y[..., :, None] * y[..., None, :] + F[..., None, None] * H
        if order >= 3:
            w = b - (beta / alpha)[..., None] * ell
            third = _sym3(H, w)
        return Derivatives(F, grad, hess, third)

    def _legendre_inverse_guess(self, x, xi):
        # closed form through the dual Randers norm
        a = self.metric_matrix(x)
        b = self.drift_vector(x)
        ainv = np.linalg.inv(a)
        bu = np.einsum("...ij,...j->...i", ainv, b)
        b2 = np.einsum("...i,...i", b, bu)
        s = 1.0 - b2
        astar = (s[..., None, None] * ainv + bu[..., :, None] * bu[..., None, :]) / (s**2)[..., None, None]
        bstar = -bu / s[..., None]
        av = np.einsum("...ij,...j->...i", astar, xi)
        al = np.sqrt(np.einsum("...i,...i", xi, av))
        Fs = al + np.einsum("...i,...i", bstar, xi)
        return Fs[..., None] * (av / al[..., None] + bstar)

    def to_dict(self):
        d = super().to_dict()
        d["metric"] = [[e.source for e in row] for row in self.metric]
        d["drift"] = [e.source for e in self.drift]
        return d


@dataclass(frozen=True)
class Quartic(FinslerStructure):
    """F(x, v) = ((a_ij v^i v^j)^2 + eps * sum_i (v^i)^4)^(1/4)."""

    metric: tuple = ()
    eps: float = 0.1
    family: ClassVar[str] = "quartic"

    def __post_init__(self):
        super().__post_init__()
        if not self.metric:
            object.__setattr__(self, "metric", parse_matrix("1", self.dim))
        elif not isinstance(self.metric[0][0], Expr):
            object.__setattr__(self, "metric", parse_matrix(self.metric, self.dim))
        if not self.eps > 0:
            raise StructureError("quartic regularisation eps must be > 0")

    @property
    def coefficient_exprs(self):
        return [e for row in self.metric for e in row]

    def metric_matrix(self, x):
        return eval_matrix(self.metric, x)

    def derivatives(self, x, v, order=2):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        a = self.metric_matrix(x)
        eps = self.eps
        av = np.einsum("...ij,...j->...i", a, v)
        q = np.einsum("...i,...i", v, av)
        P = q**2 + eps * np.sum(v**4, axis=-1)
        F = P**0.25
        if order == 0:
            return Derivatives(F, None)
        rP = np.sqrt(P)
        dP = 4 * q[..., None] * av + 4 * eps * v**3
        grad = 0.25 * dP / rP[..., None]
        hess = third = None
        if order >= 2:
            d2P = 8 * av[..., :, None] * av[..., None, :] + 4 * q[..., None, None] * a
            d2P = d2P + 12 * eps * (v**2)[..., None] * np.eye(self.dim)
            hess = 0.25 * d2P / rP[..., None, None] - 0.125 * dP[..., :, None] * dP[..., None, :] / (P * rP)[..., None, None]
        if order >= 3:
            diag = np.zeros(v.shape + (self.dim, self.dim))
            idx = np.arange(self.dim)
            diag[..., idx, idx, idx] = v
            d3P = 8 * _sym3(np.broadcast_to(a, d2P.shape), av) + 24 * eps * diag
            third = (
                0.25 * d3P / rP[..., None, None, None]
                - 0.125 * _sym3(d2P, dP) / (P * rP)[..., None, None, None]
                + 0.1875 * _outer3(dP) / (P**2 * rP)[..., None, None, None]
            )
        return Derivatives(F, grad, hess, third)

    def to_dict(self):
        d = super().to_dict()
        d["metric"] = [[e.source for e in row] for row in self.metric]
        d["eps"] = float(self.eps)
        return d


# -- construction helpers ----------------------------------------------------

_CLASSES = {"euclidean": Euclidean, "riemannian": Riemannian, "randers": Randers, "quartic": Quartic}
_FIELDS = {
    "euclidean": {"family", "dim", "density"},
    "riemannian": {"family", "dim", "density", "metric", "curvature"},
    "randers": {"family", "dim", "density", "metric", "drift", "chart"},
    "quartic": {"family", "dim", "density", "metric", "eps"},
}


def structure_from_dict(d: dict) -> FinslerStructure:
    d = dict(d)
    family = d.get("family")
    if family not in _CLASSES:
        raise StructureError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    unknown = set(d) - _FIELDS[family]
    if unknown:
        raise StructureError(f"unknown keys for {family} structure: {sorted(unknown)}")
    d.pop("family")
    dim = int(d.pop("dim", 2))
    kwargs = {"dim": dim}
    if "density" in d:
        kwargs["density"] = Expr.parse(d.pop("density"), dim)
    if "metric" in d:
        kwargs["metric"] = parse_matrix(d.pop("metric"), dim)
    if "drift" in d:
        kwargs["drift"] = tuple(Expr.parse(c, dim) for c in d.pop("drift"))
    if "curvature" in d:
        kwargs["curvature"] = Expr.parse(d.pop("curvature"), dim)
    if "chart" in d:
        kwargs["chart"] = tuple(tuple(float(t) for t in b) for b in d.pop("chart"))
    if "eps" in d:
        kwargs["eps"] = float(d.pop("eps"))
    if family == "randers" and "chart" not in kwargs:
        kwargs["chart"] = ((-10.0, 10.0),) * dim
    return _CLASSES[family](**kwargs)


def euclidean(dim: int = 2, density="0") -> Euclidean:
    return Euclidean(dim=dim, density=Expr.parse(density, dim))


def randers(b=(0.5, 0.0), metric="1", density="0") -> Randers:
    dim = len(b)
    return Randers(
        dim=dim,
        density=Expr.parse(density, dim),
        metric=parse_matrix(metric, dim),
        drift=tuple(Expr.parse(c, dim) for c in b),
        chart=((-10.0, 10.0),) * dim,
    )


def quartic(eps: float = 0.1, dim: int = 2, metric="1", density="0") -> Quartic:
    return Quartic(dim=dim, density=Expr.parse(density, dim), metric=parse_matrix(metric, dim), eps=eps)


def riemannian(metric, dim: int = 2, density="0", curvature=None) -> Riemannian:
    return Riemannian(
        dim=dim,
        density=Expr.parse(density, dim),
        metric=parse_matrix(metric, dim),
        curvature=None if curvature is None else Expr.parse(curvature, dim),
    )


def sphere_patch(density="0") -> Riemannian:
    """Unit round sphere in stereographic coordinates (curvature 1)."""
    return riemannian("4 / (1 + x1**2 + x2**2)**2", density=density, curvature="1")


# -- public operations -------------------------------------------------------

def eval_norm(S: FinslerStructure, x, v) -> float:
    return float(S.norm(x, v))


def _nonzero(S, x, v, what):
    x, v = S._check(x, v)
    if not np.any(v != 0):
        raise StructureError(f"{what} is undefined at the zero vector")
    return x, v


def fundamental_tensor(S: FinslerStructure, x, v) -> FundamentalTensor:
    x, v = _nonzero(S, x, v, "fundamental tensor")
    g = S.derivatives(x, v, order=2).hess
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise StructureError(f"fundamental tensor not positive definite at x={x}, v={v}") from None
    return FundamentalTensor(x, v, g, np.linalg.inv(g))


def cartan_tensor(S: FinslerStructure, x, v) -> CartanTensor:
    x, v = _nonzero(S, x, v, "Cartan tensor")
    return CartanTensor(x, v, 0.5 * S.derivatives(x, v, order=3).third)


def legendre(S: FinslerStructure, x, v) -> np.ndarray:
    return S.legendre(x, v)


def legendre_inverse(S: FinslerStructure, x, xi) -> np.ndarray:
    return S.legendre_inverse(x, xi)


def _start_directions(n: int, k: int) -> np.ndarray:
    if n == 2:
        t = 2 * np.pi * np.arange(k) / k
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    # Fibonacci sphere
    i = np.arange(k) + 0.5
    z = 1 - 2 * i / k
    r = np.sqrt(1 - z**2)
    t = np.pi * (1 + 5**0.5) * i
    return np.stack([r * np.cos(t), r * np.sin(t), z], axis=-1)


def dual_norm(S: FinslerStructure, x, xi, starts: int = 8, tol: float = 1e-10, max_iter: int = 5000) -> float:
    """F*(x, xi) = sup over F(x, v) <= 1 of xi(v), by multi-start projected ascent.

    The ascent runs on the Euclidean unit sphere for ``u`` with objective
    ``xi(u) / F(x, u)``, the radial projection onto the indicatrix.
    """
    x, xi = S._check(x, xi)
    return float(dual_norm_many(S, x[None], xi[None], starts, tol, max_iter)[0])


def dual_norm_many(S: FinslerStructure, x, xi, starts: int = 8, tol: float = 1e-10, max_iter: int = 5000) -> np.ndarray:
    """Batched :func:`dual_norm` over rows of ``x`` and ``xi``, shape (m, n)."""
    x, xi = S._check(x, xi)
    x, xi = np.broadcast_arrays(np.atleast_2d(x), np.atleast_2d(xi))
    m, n = xi.shape
    u0 = _start_directions(n, max(starts, 8) if n == 2 else max(starts, 14))
    k = len(u0)
    u = np.tile(u0, (m, 1))
    xs = np.repeat(x, k, axis=0)
    xis = np.repeat(xi, k, axis=0)
    scale = np.linalg.norm(xis, axis=1)
    zero = scale == 0

    def objective(u, idx):
        d = S.derivatives(xs[idx], u, order=1)
        val = np.einsum("ij,ij->i", u, xis[idx]) / d.F
        # dF/du = grad(F^2/2) / F
        grad = xis[idx] / d.F[:, None] - (val / d.F**2)[:, None] * d.grad
        return val, grad

    every = np.arange(len(u))
    val, grad = objective(u, every)
    step = np.full(len(u), 0.5)
    active = ~zero
    for _ in range(max_iter):
        idx = every[active]
        if not len(idx):
            break
        ua, ga = u[idx], grad[idx]
        pg = ga - np.sum(ga * ua, axis=1)[:, None] * ua
        pnorm = np.linalg.norm(pg, axis=1)
        # a start is finished once stationary or once its step has collapsed
        # (the objective no longer resolves further moves)
        done = (pnorm <= tol * scale[idx]) | (step[idx] < 1e-12)
        active[idx[done]] = False
        idx, ua, pg = idx[~done], ua[~done], pg[~done]
        if not len(idx):
            break
        cand = ua + step[idx, None] * pg
        cand /= np.linalg.norm(cand, axis=1)[:, None]
        cval, cgrad = objective(cand, idx)
        ok = cval > val[idx]
        acc = idx[ok]
        u[acc], val[acc], grad[acc] = cand[ok], cval[ok], cgrad[ok]
        step[idx] = np.where(ok, np.minimum(step[idx] * 1.5, 10.0), step[idx] * 0.5)
    out = val.reshape(m, k).max(axis=1)
    out[zero[::k]] = 0.0
    return out


def estimate_uniform_constants(
    S: FinslerStructure, domain=None, samples: int = 4096, seed: int = 0
) -> UniformConstants:
    """Sampled lambda, Lambda, rho and their dual counterparts.

    Directions for V and W come from a uniform angle grid (n = 2) or a
    Fibonacci sphere (n = 3); points are drawn uniformly from ``domain``.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    n = S.dim
    if domain is None:
        domain = ((-1.0, 1.0),) * n
    domain = tuple(tuple(float(t) for t in b) for b in domain)
    rng = np.random.default_rng(seed)
    n_dirs = 64 if n == 2 else 48
    dirs = _start_directions(n, n_dirs)
    n_pts = max(1, int(np.ceil(samples / n_dirs**2)))
    lo = np.array([b[0] for b in domain])
    hi = np.array([b[1] for b in domain])
    pts = lo + (hi - lo) * rng.random((n_pts, n))
    if S.is_minkowski:
        pts = pts[:1]
    W = dirs[None, :, :]
    lam, Lam, rho = np.inf, 0.0, 0.0
    lam_d, Lam_d = np.inf, 0.0
    count = 0
    for p in pts:
        d = S.derivatives(p, dirs, order=2)
        g = d.hess[:, None]  # (nV, 1, n, n)
        gww = np.einsum("...i,...ij,...j", W, g, W)
        Fw = S.norm(p, dirs)[None, :]
        ratio = gww / Fw**2
        lam, Lam = min(lam, ratio.min()), max(Lam, ratio.max())
        rho = max(rho, np.max(S.norm(p, dirs) / S.norm(p, -dirs)))
        ginv = np.linalg.inv(d.hess)[:, None]
        xi = dirs[None, :, :]
        Fs = S.dual_norm_legendre(np.broadcast_to(p, dirs.shape), dirs)[None, :]
        rd = np.einsum("...i,...ij,...j", xi, ginv, xi) / Fs**2
        lam_d, Lam_d = min(lam_d, rd.min()), max(Lam_d, rd.max())
        count += ratio.size
    return UniformConstants(float(lam), float(Lam), float(rho), float(lam_d), float(Lam_d), count, domain)
