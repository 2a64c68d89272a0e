import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finslerlab import norms
from finslerlab.norms import StructureError

from conftest import BUILTINS

coord = st.floats(-1, 1, allow_nan=False)
comp = st.floats(-3, 3, allow_nan=False).filter(lambda t: abs(t) > 1e-3)
vec = st.tuples(comp, comp).map(np.array)
point = st.tuples(coord, coord).map(np.array)
family = st.sampled_from(sorted(BUILTINS))


def quartic_direct(v, eps):
    # independent second evaluation of the closed form
    a, b = v
    return ((a * a + b * b) ** 2 + eps * (a**4 + b**4)) ** 0.25


# -- evaluation ---------------------------------------------------------------

def test_euclidean_norm_value():
    assert norms.eval_norm(norms.euclidean(), (0, 0), (3, 4)) == pytest.approx(5.0, abs=1e-15)


def test_randers_directional_values():
    S = norms.randers((0.5, 0.0))
    assert norms.eval_norm(S, (0, 0), (1, 0)) == pytest.approx(1.5, abs=1e-15)
    assert norms.eval_norm(S, (0, 0), (-1, 0)) == pytest.approx(0.5, abs=1e-15)


def test_quartic_matches_direct_formula():
    S = norms.quartic(0.1)
    for v in [(1, 1), (0.3, -2), (-1, 0)]:
        assert norms.eval_norm(S, (0, 0), v) == pytest.approx(quartic_direct(v, 0.1), rel=1e-14)


def test_zero_vector_has_zero_norm(structure):
    assert norms.eval_norm(structure, (0.2, 0.1), (0, 0)) == 0.0


def test_dimension_mismatch_rejected():
    with pytest.raises(StructureError):
        norms.eval_norm(norms.euclidean(), (0, 0), (1, 2, 3))


def test_randers_drift_bound_rejected():
    with pytest.raises(StructureError):
        norms.randers((1.0, 0.0))
    with pytest.raises(StructureError):
        norms.randers(("0.3*x1", "0"))  # exceeds 1 inside the default chart


def test_unknown_structure_keys_rejected():
    with pytest.raises(StructureError):
        norms.structure_from_dict({"family": "euclidean", "eps": 0.1})
    with pytest.raises(StructureError):
        norms.structure_from_dict({"family": "finsler"})


def test_structure_dict_round_trip(structure):
    again = norms.structure_from_dict(structure.to_dict())
    assert again.to_dict() == structure.to_dict()
    rng = np.random.default_rng(0)
    x, v = rng.uniform(-1, 1, (20, 2)), rng.normal(size=(20, 2))
    np.testing.assert_array_equal(again.norm(x, v), structure.norm(x, v))


def test_three_dimensional_structures():
    S = norms.randers((0.2, 0.1, 0.0), metric="1")
    assert S.dim == 3
    v = np.array([1.0, 2.0, -1.0])
    ft = norms.fundamental_tensor(S, (0, 0, 0), v)
    assert v @ ft.g @ v == pytest.approx(S.norm((0, 0, 0), v) ** 2, rel=1e-12)


# -- fundamental and Cartan tensors --------------------------------------------

def test_euclidean_fundamental_tensor_is_identity():
    ft = norms.fundamental_tensor(norms.euclidean(), (0.3, 0.1), (2.0, -1.0))
    np.testing.assert_allclose(ft.g, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(ft.g_inv, np.eye(2), atol=1e-15)


def test_randers_euler_value():
    ft = norms.fundamental_tensor(norms.randers((0.5, 0)), (0, 0), (1, 0))
    assert ft((1, 0), (1, 0)) == pytest.approx(2.25, abs=1e-14)


def _fd_hessian(S, x, v, h=1e-4):
    L = lambda w: 0.5 * float(S.norm(x, w)) ** 2  # noqa: E731
    n = len(v)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
            H[i, j] = (L(v + ei + ej) - L(v + ei - ej) - L(v - ei + ej) + L(v - ei - ej)) / (4 * h * h)
    return H


def test_quartic_fundamental_tensor_matches_finite_differences():
    S = norms.quartic(0.1)
    v = np.array([1.0, 2.0])
    ft = norms.fundamental_tensor(S, (0, 0), v)
    np.testing.assert_allclose(ft.g, _fd_hessian(S, np.zeros(2), v), atol=1e-6)


def test_fundamental_tensor_undefined_at_zero():
    with pytest.raises(StructureError):
        norms.fundamental_tensor(norms.euclidean(), (0, 0), (0, 0))
    with pytest.raises(StructureError):
        norms.cartan_tensor(norms.euclidean(), (0, 0), (0, 0))


def test_riemannian_cartan_tensor_vanishes():
    C = norms.cartan_tensor(norms.sphere_patch(), (0.2, -0.3), (1.0, 0.5)).C
    assert np.max(np.abs(C)) == 0.0


def test_randers_cartan_matches_third_differences():
    S = norms.randers((0.5, 0))
    v = np.array([1.0, 0.0])
    C = norms.cartan_tensor(S, (0, 0), v).C
    h = 1e-3
    F2 = lambda w: float(S.norm((0, 0), w)) ** 2  # noqa: E731
    fd = np.zeros((2, 2, 2))
    E = np.eye(2) * h
    for i in range(2):
        for j in range(2):
            for k in range(2):
                acc = 0.0
                for si in (1, -1):
                    for sj in (1, -1):
                        for sk in (1, -1):
                            acc += si * sj * sk * F2(v + si * E[i] + sj * E[j] + sk * E[k])
                fd[i, j, k] = acc / (8 * h**3) / 4
    np.testing.assert_allclose(C, fd, atol=1e-5)
    # total symmetry
    np.testing.assert_allclose(C, np.transpose(C, (1, 0, 2)), atol=1e-14)
    np.testing.assert_allclose(C, np.transpose(C, (0, 2, 1)), atol=1e-14)


# -- duality ---------------------------------------------------------------------

def test_euclidean_dual_norm():
    assert norms.dual_norm(norms.euclidean(), (0, 0), (3, 4)) == pytest.approx(5.0, abs=1e-12)


def test_randers_dual_of_legendre_image():
    S = norms.randers((0.5, 0))
    xi = norms.legendre(S, (0, 0), (1, 0))
    assert norms.dual_norm(S, (0, 0), xi) == pytest.approx(1.5, abs=1e-12)
    # closed form dual of a constant Randers norm: F*(1, 0) = 1/(1 + b) for xi along b
    assert norms.dual_norm(S, (0, 0), (1, 0)) == pytest.approx(2 / 3, abs=1e-12)
    assert norms.dual_norm(S, (0, 0), (-1, 0)) == pytest.approx(2.0, abs=1e-12)


def test_quartic_dual_matches_dense_sampling(rng):
    S = norms.quartic(0.1)
    t = 2 * np.pi * np.arange(10_000) / 10_000
    U = np.stack([np.cos(t), np.sin(t)], axis=1)
    U /= S.norm((0, 0), U)[:, None]
    for xi in rng.normal(size=(5, 2)):
        assert norms.dual_norm(S, (0, 0), xi) == pytest.approx(np.max(U @ xi), abs=1e-4)


def test_dual_norm_of_zero_covector():
    assert norms.dual_norm(norms.quartic(0.1), (0, 0), (0, 0)) == 0.0


def test_randers_legendre_round_trip_hundred_vectors(rng):
    S = norms.randers((0.5, 0))
    V = rng.normal(size=(100, 2))
    back = norms.legendre_inverse(S, np.zeros(2), norms.legendre(S, np.zeros(2), V))
    assert np.max(np.linalg.norm(back - V, axis=1) / np.linalg.norm(V, axis=1)) <= 1e-8


def test_legendre_of_zero_is_zero(structure):
    np.testing.assert_array_equal(structure.legendre((0.1, 0.2), (0.0, 0.0)), 0.0)
    np.testing.assert_array_equal(structure.legendre_inverse((0.1, 0.2), (0.0, 0.0)), 0.0)


# -- uniform constants ---------------------------------------------------------------

def test_randers_uniform_constants_closed_form():
    uc = norms.estimate_uniform_constants(norms.randers((0.5, 0)))
    # F(v)/F(-v) is largest along b: (1 + 0.5)/(1 - 0.5)
    assert uc.rho == pytest.approx(3.0, rel=1e-12)
    assert uc.lam == pytest.approx(1 / 9, rel=1e-6)
    assert uc.Lam == pytest.approx(9.0, rel=1e-6)
    assert uc.rho**2 <= uc.rho_sq_bound_smooth * (1 + 1e-9)
    assert uc.rho**2 <= uc.rho_sq_bound_convex * (1 + 1e-9)


@pytest.mark.parametrize("name", ["euclidean", "quartic", "sphere", "gaussian"])
def test_reversible_families_have_unit_rho(name):
    uc = norms.estimate_uniform_constants(BUILTINS[name]())
    assert uc.rho == pytest.approx(1.0, abs=1e-12)
    assert uc.lam <= 1 + 1e-12 <= uc.Lam + 2e-12


def test_uniform_constants_need_enough_samples():
    with pytest.raises(ValueError):
        norms.estimate_uniform_constants(norms.euclidean(), samples=10)


# -- properties ----------------------------------------------------------------------

@given(family, point, vec, st.floats(0.01, 50))
def test_positive_homogeneity(name, x, v, t):
    S = BUILTINS[name]()
    F = float(S.norm(x, v))
    assert F > 0
    assert abs(float(S.norm(x, t * v)) - t * F) <= 1e-12 * t * F


@given(family, point, vec)
def test_euler_identity(name, x, v):
    S = BUILTINS[name]()
    ft = norms.fundamental_tensor(S, x, v)
    F2 = float(S.norm(x, v)) ** 2
    assert abs(v @ ft.g @ v - F2) <= 1e-9 * F2
    np.testing.assert_allclose(ft.g, ft.g.T, atol=1e-14)


@given(family, point, vec, st.floats(0.05, 20))
def test_fundamental_tensor_zero_homogeneous(name, x, v, t):
    S = BUILTINS[name]()
    assert np.max(np.abs(S.g(x, t * v) - S.g(x, v))) <= 1e-9


@given(family, point, vec)
def test_cartan_contraction_vanishes(name, x, v):
    S = BUILTINS[name]()
    C = norms.cartan_tensor(S, x, v).C
    u = v / np.linalg.norm(v)
    assert np.max(np.abs(np.einsum("i,ijk->jk", u, C))) <= 1e-8


@given(family, point, vec)
def test_duality_identity(name, x, v):
    S = BUILTINS[name]()
    F = float(S.norm(x, v))
    xi = S.legendre(x, v)
    assert abs(norms.dual_norm(S, x, xi) - F) <= 1e-6 * F
    assert abs(float(S.dual_norm_legendre(x, xi)) - F) <= 1e-8 * F


@given(family, point, vec)
def test_dual_hessian_inverts_fundamental_tensor(name, x, v):
    S = BUILTINS[name]()
    xi = S.legendre(x, v)
    h = 1e-6 * np.linalg.norm(xi)
    J = np.stack([(S.legendre_inverse(x, xi + h * e) - S.legendre_inverse(x, xi - h * e)) / (2 * h) for e in np.eye(2)], axis=1)
    np.testing.assert_allclose(J, np.linalg.inv(S.g(x, v)), atol=1e-5)


@given(family, point, vec, vec)
def test_triangle_inequality(name, x, v, w):
    S = BUILTINS[name]()
    assert float(S.norm(x, v + w)) <= float(S.norm(x, v)) + float(S.norm(x, w)) + 1e-12


def test_reversibility_bounds_all_families(structure):
    uc = structure_constants = norms.estimate_uniform_constants(structure)
    assert structure_constants is uc
    assert uc.rho**2 <= 1 / uc.lam * (1 + 1e-9)
    assert uc.rho**2 <= uc.Lam * (1 + 1e-9)
    assert 0 < uc.lam <= 1 + 1e-12 and uc.Lam >= 1 - 1e-12
    assert math.isfinite(uc.lam_dual) and math.isfinite(uc.Lam_dual)
