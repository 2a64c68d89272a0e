import math

import numpy as np
import pytest
import scipy.linalg as sla

from finslerlab import geometry as geo
from finslerlab import norms, pde, verify
from finslerlab.mesh import disk_mesh, rectangle_mesh
from finslerlab.report import InequalityReport, reports_to_csv

EUCLID = norms.euclidean()
RANDERS = norms.randers((0.5, 0.0))


@pytest.fixture(scope="module")
def disk2():
    m = disk_mesh(2.0, 1 / 32)
    return m, pde.solve_dirichlet(EUCLID, m, lambda X: 2 + X[:, 0])


# -- reports -------------------------------------------------------------------------

def test_report_slack_and_red_flag():
    r = InequalityReport("x", lhs=1.0, rhs=0.9, tolerance=0.05)
    assert r.slack == pytest.approx(-0.1)
    assert r.red_flag
    r.tolerance = 0.2
    assert not r.red_flag
    assert InequalityReport("nan", math.nan, 1.0).red_flag


def test_report_serialisation():
    r = InequalityReport("t", 0.5, 1.0, params={"R": 1.0, "family": "randers"}, trace=[(0.1, 0.5)],
                         extras={"v": np.float64(2.0), "inf": math.inf})
    d = r.to_dict()
    assert d["slack"] == 0.5 and d["params"]["family"] == "randers"
    assert "Infinity" not in r.to_json()
    csv = reports_to_csv([r, InequalityReport("u", 1, 2)])
    assert csv.splitlines()[0].startswith("tag,lhs,rhs,slack,tolerance,red_flag")
    assert len(csv.splitlines()) == 3


# -- norm identity battery ------------------------------------------------------------

def test_norm_identity_reports_all_pass(structure):
    reps = verify.norm_identity_reports(structure, samples=200)
    assert {r.tag for r in reps} >= {"norm_homogeneity", "norm_euler", "norm_duality", "norm_triangle"}
    assert not [r.tag for r in reps if r.red_flag]


# -- gradient estimate and Harnack ----------------------------------------------------

def test_gradient_estimate_affine_oracle(disk2):
    m, u = disk2
    rep = verify.gradient_estimate_report(EUCLID, (0, 0), 1.0, u)
    # max_{B_1} |grad log(2 + x1)| = 1 at x = (-1, 0); centroids sit slightly inside
    assert rep.lhs == pytest.approx(1.0, abs=0.03)
    assert rep.lhs <= 1.0 + 1e-9
    assert rep.extras["sigma"] == rep.lhs


def test_gradient_estimate_constant_field(disk2):
    m, _ = disk2
    u = pde.ScalarField(m, np.full(m.n_nodes, 3.0))
    rep = verify.gradient_estimate_report(EUCLID, (0, 0), 1.0, u)
    assert rep.lhs == 0 and rep.extras["sigma"] == 0
    assert verify.harnack_report(EUCLID, (0, 0), 1.0, u, rho=1.0).lhs == 0


def test_gradient_and_harnack_scale_invariant(disk2):
    m, u = disk2
    ball = geo.forward_ball(EUCLID, (0, 0), 1.0, m)
    a = verify.gradient_estimate_report(EUCLID, (0, 0), 1.0, u, ball=ball)
    cu = pde.ScalarField(m, 7.5 * u.values)
    b = verify.gradient_estimate_report(EUCLID, (0, 0), 1.0, cu, ball=ball)
    assert b.extras["sigma"] == pytest.approx(a.extras["sigma"], rel=1e-12)
    ha = verify.harnack_report(EUCLID, (0, 0), 1.0, u, 1.0, ball=ball)
    hb = verify.harnack_report(EUCLID, (0, 0), 1.0, cu, 1.0, ball=ball)
    assert hb.lhs == pytest.approx(ha.lhs, rel=1e-12)


def test_harnack_affine_oracle(disk2):
    m, u = disk2
    rep = verify.harnack_report(EUCLID, (0, 0), 1.0, u, rho=1.0)
    assert rep.lhs == pytest.approx(math.log(3), abs=0.05)
    assert rep.rhs == pytest.approx(2.0, abs=0.06)
    assert not rep.red_flag


def test_gradient_estimate_with_supplied_constant(disk2):
    m, u = disk2
    rep = verify.gradient_estimate_report(EUCLID, (0, 0), 1.0, u, K=0.25, C=2.0)
    assert rep.rhs == pytest.approx(2.0 * 1.5)
    assert rep.extras["sigma"] == pytest.approx(rep.lhs / 1.5)


def test_gradient_estimate_errors(disk2):
    m, u = disk2
    with pytest.raises(ValueError):
        verify.gradient_estimate_report(EUCLID, (0, 0), 1.0, pde.ScalarField(m, u.values - 2.5))
    with pytest.raises(geo.GeometryError):
        verify.gradient_estimate_report(EUCLID, (0, 0), 2.5, u)


def test_randers_harnack_dominated():
    S = RANDERS
    mesh = verify.covering_mesh(S, (0, 0), 1.0, 1 / 24)
    u = pde.solve_dirichlet(S, mesh, verify.positive_boundary_data(3))
    uc = norms.estimate_uniform_constants(S)
    rep = verify.harnack_report(S, (0, 0), 0.5, u, uc.rho)
    assert not rep.red_flag
    assert rep.rhs > rep.lhs


def test_positive_boundary_data_range():
    g = verify.positive_boundary_data(11, scale=2.0)
    vals = g(np.random.default_rng(0).uniform(-5, 5, (1000, 2)))
    assert vals.min() >= 0.2 and vals.max() <= 3.8
    np.testing.assert_array_equal(vals, verify.positive_boundary_data(11, scale=2.0)(np.random.default_rng(0).uniform(-5, 5, (1000, 2))))


def test_covering_mesh_contains_forward_ball():
    mesh = verify.covering_mesh(RANDERS, (0.2, 0.1), 1.0, 0.1)
    ball = geo.forward_ball(RANDERS, (0.2, 0.1), 1.0, mesh)
    assert not ball.truncated
    assert np.min(np.linalg.norm(mesh.nodes - (0.2, 0.1), axis=1)) < 1e-12


# -- fitting ---------------------------------------------------------------------------

def _sig(s):
    return InequalityReport("gradient_estimate", s, s, extras={"sigma": s})


def test_fit_constant_examples():
    assert verify.fit_constant([_sig(1.0)]) == 1.0
    suite = [_sig(0.5), _sig(1.2), _sig(0.9)]
    assert verify.fit_constant(suite) == 1.2
    assert verify.fit_constant(suite + suite) == 1.2
    assert verify.fit_constant(suite + [_sig(0.1)]) >= verify.fit_constant(suite)
    with pytest.raises(ValueError):
        verify.fit_constant([])


def test_fit_covariates():
    reps = [InequalityReport("g", 1, 1, params={"R": 0.5, "family": "quartic"}, extras={"sigma": 0.7}), _sig(0.2)]
    cov = verify.fit_covariates(reps)
    assert cov["value"] == 0.7 and cov["R"] == 0.5 and cov["family"] == "quartic"


# -- Liouville --------------------------------------------------------------------------

def test_liouville_constant_boundary():
    rep = verify.liouville_trend(EUCLID, lambda y: np.ones(len(y)), radii=(2, 4), h_rel=1 / 16)
    assert rep.extras["identically_zero"]
    assert not rep.red_flag


def test_liouville_linear_control_does_not_decay():
    rep = verify.liouville_trend(EUCLID, lambda x: x[:, 0], radii=(2, 4, 8), h_rel=1 / 16, scaled=False)
    assert abs(rep.lhs) < 0.05
    assert rep.red_flag


def test_liouville_bounded_data_decays():
    g = verify.positive_boundary_data(0, modes=3)
    rep = verify.liouville_trend(EUCLID, g, radii=(2, 4, 8), h_rel=1 / 16)
    assert rep.lhs <= -0.8
    assert len(rep.trace) == 3


# -- Bochner ----------------------------------------------------------------------------

def test_bochner_affine_both_sides_zero():
    m = rectangle_mesh((-1, -1), (1, 1), 1 / 16)
    u = 1 + m.nodes[:, 0] - 0.5 * m.nodes[:, 1]
    rep = verify.bochner_check(EUCLID, m, u, verify.bump()(m.nodes), N=2)
    assert abs(rep.extras["bochner_lhs"]) < 1e-12 and rep.extras["ricci_term"] == 0


def test_bochner_classical_identity():
    m = rectangle_mesh((-1, -1), (1, 1), 1 / 64)
    u = pde.solve_dirichlet(EUCLID, m, lambda X: X[:, 0] ** 2 - X[:, 1] ** 2)
    rep = verify.bochner_check(EUCLID, m, u, verify.bump()(m.nodes), N=2)
    # |Hess u|^2 = 8 for this harmonic quadratic
    assert rep.extras["bochner_lhs"] == pytest.approx(8 * rep.extras["int_eta"], rel=0.05)


def test_bochner_sentinel_switches_N():
    S = norms.euclidean(density="-(x1**2 + x2**2)/2")
    m = rectangle_mesh((-1, -1), (1, 1), 1 / 16)
    u = pde.solve_dirichlet(S, m, lambda X: 2 + X[:, 0] + X[:, 1] ** 2)
    rep = verify.bochner_check(S, m, u, verify.bump()(m.nodes), N=2)
    assert rep.params["N"] == 3.0 and rep.extras["events"]
    assert math.isfinite(rep.lhs) and math.isfinite(rep.slack)


def test_bochner_rejects_negative_cutoff():
    m = rectangle_mesh((-1, -1), (1, 1), 0.25)
    with pytest.raises(ValueError):
        verify.bochner_check(EUCLID, m, m.nodes[:, 0], -np.ones(m.n_nodes))


def test_bochner_gaussian_refinement():
    S = norms.euclidean(density="-(x1**2 + x2**2)/2")
    reps = verify.bochner_refinement(S, lambda X: X[:, 0] ** 2 - X[:, 1] ** 2 + X[:, 0], hs=(1 / 16, 1 / 32, 1 / 64))
    eps = [r.tolerance for r in reps[:-1]]
    assert eps[1] < eps[0]
    assert all(not r.red_flag for r in reps[:-1])
    # with Ric_inf = F^2 the Ricci term is int eta F^2(grad u) dm
    m = rectangle_mesh((-1, -1), (1, 1), 1 / 64)
    u = pde.solve_dirichlet(S, m, lambda X: X[:, 0] ** 2 - X[:, 1] ** 2 + X[:, 0])
    w = pde.element_weights(S, m)
    direct = np.sum(w * m.element_values(verify.bump()(m.nodes)) * S.norm(m.centroids, pde.gradient_field(S, m, u)) ** 2)
    assert reps[-1].extras["ricci_term"] == pytest.approx(direct, rel=1e-5)


# -- Poincare and Sobolev ----------------------------------------------------------------

@pytest.fixture(scope="module")
def unit_samples():
    return verify.ball_samples(EUCLID, (0, 0), 1.0, n=50, h_rel=1 / 16)


def test_ball_samples_deterministic(unit_samples):
    again = verify.ball_samples(EUCLID, (0, 0), 1.0, n=50, h_rel=1 / 16)
    np.testing.assert_array_equal(again.fields, unit_samples.fields)
    assert unit_samples.fields.shape == (50, unit_samples.mesh.n_nodes)


def test_poincare_eigenvalue_oracle(unit_samples):
    m = unit_samples.mesh
    B = m.shape_gradients
    K = m.assemble_matrix(m.areas[:, None, None] * np.einsum("mkd,mld->mkl", B, B)).toarray()
    M = m.mass_matrix().toarray()
    mu, vecs = sla.eigh(K, M, subset_by_index=[1, 1])
    exact = verify.BallSamples(m, unit_samples.center, 1.0, vecs.T)
    assert verify.poincare_constant(EUCLID, samples=exact).lhs == pytest.approx(1 / mu[0], rel=1e-10)
    # the Rayleigh quotient is maximised by the first nonconstant eigenvector
    assert verify.poincare_constant(EUCLID, samples=unit_samples).lhs <= 1 / mu[0] * (1 + 1e-12)


def test_poincare_invariances(unit_samples):
    base = verify.poincare_constant(EUCLID, samples=unit_samples).lhs
    for scale, shift in [(1, 5.0), (3.0, 0), (0.2, -1.0)]:
        assert verify.poincare_constant(EUCLID, samples=unit_samples.transformed(scale, shift)).lhs == pytest.approx(base, rel=1e-10)


def test_constant_samples_skipped(unit_samples):
    m = unit_samples.mesh
    with pytest.raises(ValueError):
        verify.poincare_constant(EUCLID, samples=verify.BallSamples(m, unit_samples.center, 1.0, np.ones((3, m.n_nodes))))
    mixed = verify.BallSamples(m, unit_samples.center, 1.0, np.vstack([np.ones(m.n_nodes), unit_samples.fields[:2]]))
    assert verify.poincare_constant(EUCLID, samples=mixed).params["samples"] == 2


def test_sobolev_invariances(unit_samples):
    base = verify.sobolev_constant(EUCLID, samples=unit_samples, N=2)
    scaled = verify.sobolev_constant(EUCLID, samples=unit_samples.transformed(2.0), N=2)
    shifted = verify.sobolev_constant(EUCLID, samples=unit_samples.transformed(1.0, 3.0), N=2)
    assert scaled.lhs == pytest.approx(base.lhs, rel=1e-10)
    assert scaled.extras["C_hat_uncentered"] == pytest.approx(base.extras["C_hat_uncentered"], rel=1e-10)
    assert shifted.lhs == pytest.approx(base.lhs, rel=1e-10)
    assert base.params["nu"] == 4.0


def test_sobolev_half_ball_locality(unit_samples):
    m = unit_samples.mesh
    half = verify.BallSamples(m, unit_samples.center, 1.0, unit_samples.fields * np.maximum(m.nodes[:, 0], 0.0))
    full = verify.sobolev_constant(EUCLID, samples=unit_samples, N=2).lhs
    part = verify.sobolev_constant(EUCLID, samples=half, N=2).lhs
    assert 0.2 <= part / full <= 5


def test_sobolev_rejects_small_nu(unit_samples):
    with pytest.raises(ValueError):
        verify.sobolev_constant(EUCLID, samples=unit_samples, nu=2.0)


def test_constants_bounded_across_radii():
    cs = [verify.poincare_constant(RANDERS, (0, 0), R, n=20, h_rel=1 / 12).lhs for R in (0.5, 1.0, 2.0)]
    assert max(cs) / min(cs) <= 2


# -- suite ---------------------------------------------------------------------------------

def test_small_gradient_suite():
    suite = verify.ExperimentSuite(families=({"family": "randers", "drift": [0.5, 0]},), radii=(0.5,), hs=(1 / 16, 1 / 32),
                                   boundary_seeds=1)
    (member,) = verify.run_gradient_suite(suite)
    assert len(member.gradient) == 2 and len(member.harnack) == 2
    assert member.relative_change <= 0.1
    assert all(not h.red_flag for h in member.harnack)
    assert verify.fit_constant(member.gradient) == max(member.sigmas)
