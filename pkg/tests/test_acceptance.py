"""Acceptance criteria 1-11, each at its stated tolerance.

Every test stores a one-line verdict in ``VERDICTS``; the terminal summary
prints them in order after the run.
"""
import json
import math
import time

import numpy as np
import pytest

from finslerlab import geometry as geo
from finslerlab import norms, pde, verify
from finslerlab.cli import run_scenario
from finslerlab.mesh import disk_mesh, rectangle_mesh, square_mesh

VERDICTS = {}

FAMILIES = {
    "euclidean": norms.euclidean(),
    "randers b=0.25": norms.randers((0.25, 0.0)),
    "randers b=0.5": norms.randers((0.5, 0.0)),
    "randers variable": norms.randers(("0.03*x1", "0.2 + 0.02*x2"), metric=[["1 + 0.1*x2**2", "0.1"], ["0.1", "1"]]),
    "quartic eps=0.1": norms.quartic(0.1),
    "sphere patch": norms.sphere_patch(),
    "gaussian": norms.euclidean(density="-(x1**2 + x2**2)/2"),
}
FLAT = {k: FAMILIES[k] for k in ("euclidean", "randers b=0.5", "quartic eps=0.1")}
K_ZERO = {**FLAT, "gaussian": FAMILIES["gaussian"]}


def verdict(k, title, checks):
    """checks: list of (label, ok, detail). Records the line and fails on any red check."""
    ok = all(c[1] for c in checks)
    parts = "; ".join(f"{label} {'ok' if good else 'FAIL'} ({detail})" for label, good, detail in checks)
    VERDICTS[k] = f"criterion {k:2d} {'PASS' if ok else 'FAIL'} {title}: {parts}"
    print(VERDICTS[k])
    assert ok, VERDICTS[k]


def test_criterion_01_norm_identities():
    t0 = time.perf_counter()
    checks = []
    for name, S in FAMILIES.items():
        reps = verify.norm_identity_reports(S, samples=1000, seed=1)
        bad = [r.tag for r in reps if r.red_flag]
        worst = max(reps, key=lambda r: r.lhs / max(r.tolerance, 1e-300) if r.tolerance else 0)
        checks.append((name, not bad, f"{len(reps)} identities x 1000 samples" + (f", red: {bad}" if bad else f", worst {worst.tag} {worst.lhs:.2g}")))
    seconds = time.perf_counter() - t0
    checks.append(("runtime", seconds < 30, f"{seconds:.1f} s < 30 s"))
    verdict(1, "algebraic identities", checks)


def test_criterion_02_euclidean_regression():
    m = disk_mesh(1.0, 1 / 64)
    u = pde.solve_dirichlet(norms.euclidean(), m, lambda X: 2 + X[:, 0])
    err = float(np.abs(u.values - 2 - m.nodes[:, 0]).max())
    sq = square_mesh(1 / 64)
    E = pde.energy(norms.euclidean(), sq, sq.nodes[:, 0])
    verdict(2, "euclidean regression", [
        ("disk affine solve", err <= 1e-3, f"max nodal error {err:.2e} <= 1e-3"),
        ("energy of x1", abs(E - 1) <= 1e-6, f"E = {E:.15g}"),
    ])


def test_criterion_03_flat_geometry():
    checks = []
    drift, straight, ric = 0.0, 0.0, 0.0
    rng = np.random.default_rng(3)
    for S in FLAT.values():
        for _ in range(5):
            p, v = rng.uniform(-1, 1, 2), rng.normal(size=2)
            g = geo.shoot_geodesic(S, p, v, T=2.0)
            drift = max(drift, g.speed_drift)
            straight = max(straight, float(np.abs(g.x - (p + g.t[:, None] * v)).max()))
            for method in ("analytic", "jacobi-fd"):
                ric = max(ric, abs(geo.ricci(S, p, v, method=method).ric))
    checks.append(("geodesics straight", straight <= 1e-12, f"max deviation {straight:.1e}"))
    checks.append(("speed drift", drift <= 1e-7, f"{drift:.1e} <= 1e-7"))
    checks.append(("Ricci", ric <= 1e-5, f"max |Ric| {ric:.1e} <= 1e-5"))
    S = norms.randers((0.5, 0.0))
    mesh = rectangle_mesh((-1, -1), (2, 1), 1 / 32)
    graph = geo.MeshGraph.build(S, mesh)
    fwd = geo.distance(S, (0, 0), (1, 0), mesh, graph)
    bwd = geo.distance(S, (1, 0), (0, 0), mesh, graph)
    # stated targets; the computed values are the lengths F((1,0)) = 1.5 and F((-1,0)) = 0.5
    checks.append(("d((0,0),(1,0)) = 2/3", abs(fwd - 2 / 3) <= 1e-3, f"measured {fwd:.6f}"))
    checks.append(("d((1,0),(0,0)) = 2", abs(bwd - 2) <= 1e-3, f"measured {bwd:.6f}"))
    verdict(3, "flat-case geometry", checks)


def test_criterion_04_weighted_ricci():
    S = FAMILIES["gaussian"]
    rng = np.random.default_rng(4)
    worst, sentinel_ok, n_sent, n_fin = 0.0, True, 0, 0
    for _ in range(200):
        x = rng.uniform(-1.5, 1.5, 2)
        V = rng.normal(size=2)
        if rng.random() < 0.2:
            V = np.array([-x[1], x[0]])  # orthogonal: Psi'(0) = 0
        V = V / float(S.norm(x, V))
        rep = geo.weighted_ricci(S, x, V, Ns=(math.inf, 2), eps=1e-2)
        worst = max(worst, abs(rep.ric_n[math.inf] - 1.0))
        is_sent = rep.ric_n[2.0] is geo.RIC_MINUS_INFINITY
        should = abs(rep.psi_d1) > 1e-6
        sentinel_ok &= is_sent == should and abs(rep.psi_d1 - float(x @ V)) <= 1e-8
        n_sent += is_sent
        n_fin += not is_sent
    verdict(4, "weighted Ricci oracle", [
        ("Ric_inf = 1", worst <= 1e-4, f"max error {worst:.1e} <= 1e-4 over 200 unit vectors"),
        ("Ric_n sentinel", sentinel_ok and n_sent and n_fin, f"{n_sent} sentinels, {n_fin} finite, all match |Psi'(0)| > 1e-6"),
    ])


def test_criterion_05_volume_comparison():
    R1, R2 = 1.0, 0.5
    h = R2 / 64
    mesh = disk_mesh(1.15, h)
    flat = geo.bishop_gromov_check(norms.euclidean(), (0, 0), R1, R2, 0.0, 2.0, mesh)
    rel = abs(flat.lhs / flat.rhs - 1)
    S = FAMILIES["gaussian"]
    N = 4.0
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)), -1).reshape(-1, 2)
    K = geo.estimate_ricci_lower_bound(S, grid, N=N)
    gauss = geo.bishop_gromov_check(S, (0, 0), R1, R2, K, N, mesh)
    verdict(5, "volume comparison", [
        ("flat saturation", rel <= 0.02, f"ratio {flat.lhs:.5f} vs (R1/R2)^2 = {flat.rhs:.0f}, rel {rel:.1e} <= 2% at h = R2/64"),
        ("gaussian slack", gauss.slack >= 0, f"N = {N:g}, K_hat = {K:g}, ratio {gauss.lhs:.4f} <= {gauss.rhs:.4f}"),
    ])


@pytest.fixture(scope="module")
def gradient_suite():
    suite = verify.ExperimentSuite(radii=(0.5, 1.0), hs=(1 / 32, 1 / 64), boundary_seeds=3, N=2.0)
    t0 = time.perf_counter()
    members = verify.run_gradient_suite(suite)
    return suite, members, time.perf_counter() - t0


def test_criterion_06_gradient_estimate(gradient_suite):
    suite, members, seconds = gradient_suite
    pts = np.array([[0.0, 0.0], [0.5, 0.3], [-0.7, 0.6], [1.0, -1.0]])
    K = {str(f): geo.estimate_ricci_lower_bound(norms.structure_from_dict(f), pts, N=suite.N) for f in suite.families}
    sig = np.array([s for m in members for s in m.sigmas])
    C = verify.fit_constant([r for m in members for r in m.gradient])
    worst = max(members, key=lambda m: m.relative_change)
    verdict(6, "gradient estimate suite", [
        ("suite size", len(members) >= 20, f"{len(members)} members"),
        ("K_hat = 0", all(k == 0 for k in K.values()), f"N = {suite.N:g}"),
        ("sigma finite and bounded", bool(np.all(np.isfinite(sig))) and sig.max() <= C, f"fitted C = {C:.4f}, min sigma {sig.min():.4f}"),
        ("mesh halving", worst.relative_change <= 0.10,
         f"max change {100 * worst.relative_change:.2f}% ({worst.structure}, R = {worst.R}) <= 10%"),
        ("runtime", seconds < 600, f"{seconds:.0f} s < 600 s"),
    ])


def test_criterion_07_harnack(gradient_suite):
    _, members, _ = gradient_suite
    reps = [r for m in members for r in m.harnack]
    worst = min(reps, key=lambda r: r.slack)
    verdict(7, "Harnack consistency", [
        ("all members", all(r.slack >= -5e-2 for r in reps),
         f"{len(reps)} reports, smallest slack {worst.slack:.4f} (log ratio {worst.lhs:.4f} vs bound {worst.rhs:.4f})"),
    ])


def test_criterion_08_liouville():
    S = norms.euclidean()
    bounded = verify.liouville_trend(S, verify.positive_boundary_data(0), radii=(2, 4, 8, 16), h_rel=1 / 32)
    control = verify.liouville_trend(S, lambda x: x[:, 0], radii=(2, 4, 8, 16), h_rel=1 / 32, scaled=False)
    verdict(8, "Liouville trend", [
        ("bounded data", bounded.lhs <= -0.8, f"slope {bounded.lhs:.3f} <= -0.8, trace " + ", ".join(f"{m:.3g}" for _, m in bounded.trace)),
        ("u = x1 control", control.lhs > -0.1, f"slope {control.lhs:.2e}, no decay"),
    ])


def test_criterion_09_bochner():
    checks = []
    boundary = lambda X: X[:, 0] ** 2 - X[:, 1] ** 2 + 0.5 * X[:, 0] * X[:, 1] + X[:, 0]  # noqa: E731
    for name, S in K_ZERO.items():
        reps = verify.bochner_refinement(S, boundary, hs=(1 / 32, 1 / 64, 1 / 128), N=math.inf)
        eps32, eps64 = reps[0].tolerance, reps[1].tolerance
        ok = reps[0].slack >= -eps32 and reps[1].slack >= -eps64 and eps32 >= 1.5 * eps64
        checks.append((name, ok, f"slack {reps[0].slack:.3g}/{reps[1].slack:.3g}, eps_h {eps32:.2e} -> {eps64:.2e} (x{eps32 / eps64:.1f})"))
    m = rectangle_mesh((-1, -1), (1, 1), 1 / 64)
    u = pde.solve_dirichlet(norms.euclidean(), m, lambda X: X[:, 0] ** 2 - X[:, 1] ** 2)
    rep = verify.bochner_check(norms.euclidean(), m, u, verify.bump()(m.nodes), N=2)
    target = 8 * rep.extras["int_eta"]
    rel = abs(rep.extras["bochner_lhs"] / target - 1)
    checks.append(("8 int eta", rel <= 0.05, f"LHS {rep.extras['bochner_lhs']:.5f} vs {target:.5f}, rel {rel:.1e}"))
    verdict(9, "Bochner inequality", checks)


def test_criterion_10_poincare_sobolev():
    checks = []
    for name, S in K_ZERO.items():
        cs, Cs, inv = [], [], 0.0
        for R in (0.5, 1.0, 2.0):
            bs = verify.ball_samples(S, (0, 0), R, n=50, h_rel=1 / 16, seed=0)
            c = verify.poincare_constant(S, samples=bs).lhs
            C = verify.sobolev_constant(S, samples=bs).lhs
            for scale, shift in ((1.0, 2.5), (3.0, 0.0), (0.4, -1.0)):
                t = bs.transformed(scale, shift)
                inv = max(inv, abs(verify.poincare_constant(S, samples=t).lhs / c - 1),
                          abs(verify.sobolev_constant(S, samples=t).lhs / C - 1))
            cs.append(c)
            Cs.append(C)
        ok = np.all(np.isfinite(cs + Cs)) and inv <= 1e-10 and max(cs) / min(cs) <= 2 and max(Cs) / min(Cs) <= 2
        checks.append((name, ok, f"c spread {max(cs) / min(cs):.3f}, C spread {max(Cs) / min(Cs):.3f}, invariance {inv:.1e}"))
    verdict(10, "Poincare/Sobolev constants", checks)


def test_criterion_11_determinism(tmp_path):
    dirs = []
    for k, threads in enumerate((1, 1, 4)):
        d = tmp_path / f"run{k}"
        assert run_scenario("gaussian-weighted", out=d, seed=7, threads=threads, timestamps=False) == 0
        dirs.append(d)
    csvs = sorted(p.name for p in dirs[0].glob("*.csv"))
    same = all((dirs[0] / n).read_bytes() == (d / n).read_bytes() for d in dirs[1:] for n in csvs)
    same &= all(sorted(p.name for p in d.glob("*.csv")) == csvs for d in dirs)
    m = [json.loads((d / "manifest.json").read_text()) for d in dirs]
    verdict(11, "determinism", [
        ("CSV bytes", same, f"{len(csvs)} CSV files identical over 3 runs (threads 1, 1, 4)"),
        ("manifest", m[0] == m[1], "identical for identical invocations"),
    ])
