"""Command line entry point: ``finslerlab run | list | validate``.

Exit codes: 0 when every check passed, 2 when an inequality report carries
a red flag (negative slack beyond tolerance), 1 on configuration or
execution errors.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import platform
import sys
import threading
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import click
import numpy as np

from finslerlab import geometry as geo
from finslerlab import verify as V
from finslerlab.config import ScenarioConfig, bundled_scenarios, resolve_config
from finslerlab.expr import Expr
from finslerlab.norms import estimate_uniform_constants
from finslerlab.pde import log_transform_check, solve_dirichlet
from finslerlab.report import InequalityReport, reports_to_csv
from finslerlab.svg import plot

log = logging.getLogger("finslerlab")

EXIT_OK, EXIT_ERROR, EXIT_RED = 0, 1, 2


@dataclass
class ExperimentResult:
    kind: str
    reports: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # file stem -> (header, rows)
    plots: list = field(default_factory=list)  # (file stem, series, plot kwargs)
    info: dict = field(default_factory=dict)
    error: str | None = None
    seconds: float = 0.0

    @property
    def red(self) -> bool:
        return any(r.red_flag for r in self.reports)


def _r(v) -> str:
    return repr(float(v))


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class Context:
    """Shared state for one scenario run; expensive pieces are computed once."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.S = cfg.build_structure()
        self.center = np.array(cfg.domain.center, float)
        self._lock = threading.Lock()
        self._cache = {}
        self._key_locks = {}

    def once(self, key, fn):
        with self._lock:
            lk = self._key_locks.setdefault(key, threading.Lock())
        with lk:
            if key not in self._cache:
                self._cache[key] = fn()
            return self._cache[key]

    @property
    def box(self):
        c, r = self.cfg.domain.center, self.cfg.domain.radius
        return ((c[0] - r, c[0] + r), (c[1] - r, c[1] + r))

    def constants(self):
        return self.once("constants", lambda: estimate_uniform_constants(self.S, domain=self.box, seed=self.cfg.seed))

    def finite_N(self) -> float:
        finite = [n for n in self.cfg.N if math.isfinite(n) and n >= self.S.dim]
        return min(finite) if finite else float(self.S.dim + 2)

    def k_hat(self, N: float) -> float:
        def compute():
            r = self.cfg.domain.radius
            t = np.linspace(-0.5 * r, 0.5 * r, 3)
            pts = self.center + np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
            return geo.estimate_ricci_lower_bound(self.S, pts, N=N, directions=8)

        return self.once(("k_hat", float(N)), compute)


# -- experiments ---------------------------------------------------------------

def exp_solve(ctx: Context, e) -> ExperimentResult:
    S, cfg = ctx.S, ctx.cfg
    mesh = cfg.build_mesh(S)
    g = Expr.parse(e.get("boundary"), S.dim)
    u = solve_dirichlet(S, mesh, g, cfg.solver)
    res = ExperimentResult("solve")
    res.reports.append(InequalityReport("max_principle", u.info.max_principle_violation, 1e-9, {"h": mesh.h}))
    res.reports.append(InequalityReport("solver_residual", u.info.residual, cfg.solver.tol, {"h": mesh.h, "iterations": u.info.iterations}))
    rows = [[i, _r(p[0]), _r(p[1]), _r(v)] for i, (p, v) in enumerate(zip(mesh.nodes, u.values))]
    res.tables["solve"] = (["id", "x", "y", "u"], rows)
    res.tables["solve_log"] = (["iteration", "energy", "residual"], [[it, _r(E), _r(r)] for it, E, r in u.info.history])
    res.tables["solve_triangles"] = (["id", "n0", "n1", "n2"], [[i, *map(int, t)] for i, t in enumerate(mesh.triangles)])
    res.info = {"nodes": mesh.n_nodes, "elements": mesh.n_elements, "energy": u.info.energy, "converged": u.info.converged,
                "iterations": u.info.iterations, "residual": u.info.residual}
    if np.all(u.values > 0):
        lt = log_transform_check(S, mesh, u)
        res.info["log_transform_discrepancy"] = lt.lhs
        res.info["log_transform_scale"] = lt.extras["max_abs_rhs"]
    hist = u.info.history
    res.plots.append(("solve", [{"x": [h[0] for h in hist], "y": [max(h[2], 1e-300) for h in hist], "label": "max residual"}],
                      {"title": "Newton iterations", "xlabel": "iteration", "ylabel": "residual", "logy": True}))
    return res


def exp_norm_check(ctx: Context, e) -> ExperimentResult:
    reps = V.norm_identity_reports(ctx.S, samples=e.get("samples"), seed=ctx.cfg.seed, domain=ctx.box)
    res = ExperimentResult("norm-check", reps)
    res.plots.append(("norm-check", [{"x": list(range(len(reps))), "y": [max(r.lhs / r.rhs, 1e-20) for r in reps],
                                      "label": "violation / tolerance", "style": "scatter"}],
                      {"title": "pointwise identities", "xlabel": "identity", "ylabel": "ratio", "logy": True}))
    return res


def _gradient_suite(ctx: Context, e):
    cfg, S, p = ctx.cfg, ctx.S, ctx.center
    radii = tuple(e.get("radii"))
    data = e.get("data")
    hs = (cfg.h, cfg.h / 2) if e.get("refine") else (cfg.h,)

    def compute():
        uc = ctx.constants()
        K = ctx.k_hat(ctx.finite_N())
        members = []
        for R in radii:
            for k in range(data):
                seed = cfg.seed * 1000 + k
                g = V.positive_boundary_data(seed, p, scale=2 * R)
                grads, harn = [], []
                for h in hs:
                    mesh = V.covering_mesh(S, p, 2 * R, h)
                    u = solve_dirichlet(S, mesh, g, cfg.solver)
                    ball = geo.forward_ball(S, p, R, mesh)
                    gr = V.gradient_estimate_report(S, p, R, u, K=K, ball=ball)
                    gr.params.update({"seed": seed, "lambda": uc.lam, "Lambda": uc.Lam, "rho": uc.rho, "N": ctx.finite_N()})
                    grads.append(gr)
                    harn.append(V.harnack_report(S, p, R, u, uc.rho, gradient=gr, ball=ball))
                members.append((R, seed, grads, harn))
        return members

    return ctx.once(("gradient", radii, data, hs), compute)


def exp_gradient(ctx: Context, e) -> ExperimentResult:
    members = _gradient_suite(ctx, e)
    allg = [g for m in members for g in m[2]]
    C = V.fit_constant(allg)
    res = ExperimentResult("gradient")
    for g in allg:
        K, R = g.params["K"], g.params["R"]
        g.rhs = C * (1 + math.sqrt(K) * R) / R
        g.extras["fitted_constant"] = C
    res.reports.extend(allg)
    if len(members[0][2]) > 1:
        change = max(abs(m[2][-1].extras["sigma"] - m[2][0].extras["sigma"]) / max(m[2][0].extras["sigma"], 1e-300)
                     for m in members)
        res.reports.append(InequalityReport("gradient_refinement", change, 0.1, {"members": len(members)}))
    res.tables["gradient"] = (["R", "seed", "h", "sigma", "lhs", "K"],
                              [[_r(g.params["R"]), g.params["seed"], _r(g.params["h"]), _r(g.extras["sigma"]), _r(g.lhs), _r(g.params["K"])]
                               for g in allg])
    res.info = {"fitted_constant": C, **V.fit_covariates(allg)}
    series = []
    for h in sorted({g.params["h"] for g in allg}, reverse=True):
        sel = [g for g in allg if g.params["h"] == h]
        series.append({"x": [g.params["R"] for g in sel], "y": [g.extras["sigma"] for g in sel], "label": f"h={h:.4g}", "style": "scatter"})
    res.plots.append(("gradient", series, {"title": "normalised gradient statistic", "xlabel": "R", "ylabel": "sigma"}))
    return res


def exp_harnack(ctx: Context, e) -> ExperimentResult:
    members = _gradient_suite(ctx, e)
    reps = [h for m in members for h in m[3]]
    res = ExperimentResult("harnack", reps)
    res.tables["harnack"] = (["R", "seed", "h", "log_ratio", "bound"],
                             [[_r(r.params["R"]), m[1], _r(r.params["h"]), _r(r.lhs), _r(r.rhs)] for m in members for r in m[3]])
    res.plots.append(("harnack", [{"x": [r.rhs for r in reps], "y": [r.lhs for r in reps], "label": "members", "style": "scatter"}],
                      {"title": "Harnack chain", "xlabel": "(rho+1) R max F(grad log u)", "ylabel": "log(sup u / inf u)"}))
    return res


def exp_liouville(ctx: Context, e) -> ExperimentResult:
    S = ctx.S
    g = Expr.parse(e.get("boundary"), S.dim)
    radii = tuple(e.get("radii"))
    rep = V.liouville_trend(S, g, radii=radii, h_rel=e.get("h_rel"), p=ctx.center, scaled=e.get("scaled"),
                            cfg=ctx.cfg.solver)
    res = ExperimentResult("liouville", [rep])
    series = [{"x": [t[0] for t in rep.trace], "y": [t[1] for t in rep.trace], "label": f"bounded data (slope {rep.lhs:.3g})"}]
    rows = [["bounded", _r(R), _r(m)] for R, m in rep.trace]
    if e.get("control"):
        lin = Expr.parse("x1", S.dim)
        ctl = V.liouville_trend(S, lambda x: lin(x - ctx.center), radii=radii, h_rel=e.get("h_rel"), p=ctx.center,
                                scaled=False, cfg=ctx.cfg.solver)
        res.reports.append(InequalityReport("liouville_control", -ctl.lhs, 0.1, {"family": S.family},
                                            trace=ctl.trace, extras={"slope": ctl.lhs}))
        series.append({"x": [t[0] for t in ctl.trace], "y": [t[1] for t in ctl.trace], "label": "u = x1 control"})
        rows += [["control", _r(R), _r(m)] for R, m in ctl.trace]
    res.tables["liouville"] = (["series", "R", "max_grad_B1"], rows)
    res.plots.append(("liouville", series, {"title": "gradient on B_1 vs R", "xlabel": "R", "ylabel": "max F(grad u)",
                                            "logx": True, "logy": True}))
    return res


def exp_bochner(ctx: Context, e) -> ExperimentResult:
    cfg, S = ctx.cfg, ctx.S
    c, r = cfg.domain.center, cfg.domain.radius
    hs = tuple(cfg.h / 2**k for k in range(e.get("levels")))
    g = Expr.parse(e.get("boundary"), S.dim)
    N = cfg.N[0]
    reps = V.bochner_refinement(S, g, hs=hs, N=N, lower=(c[0] - r, c[1] - r), upper=(c[0] + r, c[1] + r),
                                eta=V.bump(c, e.get("eta_radius") * r), cfg=cfg.solver)
    if len(reps) > 1:
        reps[-1].tolerance = reps[-2].tolerance
    res = ExperimentResult("bochner", list(reps))
    eps = [q.extras["eps_h"] for q in reps if "eps_h" in q.extras]
    if len(eps) >= 2:
        res.reports.append(InequalityReport("bochner_eps_decay", eps[-1], eps[-2] / 1.5 + 1e-12, {"levels": len(reps)}))
    res.tables["bochner"] = (["h", "bochner_lhs", "ricci_term", "slack", "eps_h", "N"],
                             [[_r(q.params["h"]), _r(q.extras["bochner_lhs"]), _r(q.extras["ricci_term"]), _r(q.slack),
                               _r(q.extras.get("eps_h", math.nan)), _r(q.params["N"])] for q in reps])
    res.info = {"events": [ev for q in reps for ev in q.extras["events"]]}
    res.plots.append(("bochner", [{"x": [q.params["h"] for q in reps], "y": [q.slack for q in reps], "label": "slack"}],
                      {"title": "Bochner slack under refinement", "xlabel": "h", "ylabel": "slack", "logx": True}))
    return res


def _constant_experiment(ctx: Context, e, kind):
    S = ctx.S
    reps, inv = [], 0.0
    for R in e.get("radii"):
        bs = V.ball_samples(S, ctx.center, R, n=e.get("samples"), h_rel=e.get("h_rel"), seed=ctx.cfg.seed)
        if kind == "poincare":
            fn = lambda b: V.poincare_constant(S, samples=b)  # noqa: E731
        else:
            nu = e.get("nu")
            fn = lambda b: V.sobolev_constant(S, samples=b, nu=nu, N=ctx.finite_N())  # noqa: E731
        rep = fn(bs)
        for scale, shift in ((1.0, 3.0), (2.5, 0.0)):
            inv = max(inv, abs(fn(bs.transformed(scale, shift)).lhs - rep.lhs) / rep.lhs)
        reps.append(rep)
    vals = [q.lhs for q in reps]
    res = ExperimentResult(kind)
    res.reports.append(InequalityReport(f"{kind}_invariance", inv, 1e-10, {"family": S.family}))
    res.reports.append(InequalityReport(f"{kind}_radius_spread", max(vals) / min(vals), 2.0, {"family": S.family},
                                        trace=[(q.params["R"], q.lhs) for q in reps]))
    stat = "c_hat" if kind == "poincare" else "C_hat"
    header = ["R", "h", stat] + (["C_hat_uncentered", "nu"] if kind == "sobolev" else [])
    rows = []
    for q in reps:
        row = [_r(q.params["R"]), _r(q.params["h"]), _r(q.lhs)]
        if kind == "sobolev":
            row += [_r(q.extras["C_hat_uncentered"]), _r(q.params["nu"])]
        rows.append(row)
    res.tables[kind] = (header, rows)
    res.info = {"values": [q.to_dict() for q in reps]}
    res.plots.append((kind, [{"x": [q.params["R"] for q in reps], "y": vals, "label": stat}],
                      {"title": f"empirical {kind} constant", "xlabel": "R", "ylabel": stat, "logx": True}))
    return res


def exp_poincare(ctx, e):
    return _constant_experiment(ctx, e, "poincare")


def exp_sobolev(ctx, e):
    return _constant_experiment(ctx, e, "sobolev")


def exp_volume(ctx: Context, e) -> ExperimentResult:
    cfg, S = ctx.cfg, ctx.S
    R1 = e.get("R1") or cfg.domain.radius
    R2 = e.get("R2") or R1 / 2
    N = ctx.finite_N()
    K = ctx.k_hat(N)
    mesh = V.covering_mesh(S, ctx.center, R1, cfg.h)
    rep = geo.bishop_gromov_check(S, ctx.center, R1, R2, K, N, mesh)
    res = ExperimentResult("volume", [rep])
    res.tables["volume"] = (["R1", "R2", "volume_R1", "volume_R2", "ratio", "comparison", "K", "N"],
                            [[_r(R1), _r(R2), _r(rep.extras["volume_R1"]), _r(rep.extras["volume_R2"]), _r(rep.lhs), _r(rep.rhs), _r(K), _r(N)]])
    res.plots.append(("volume", [{"x": [R2, R1], "y": [rep.extras["volume_R2"], rep.extras["volume_R1"]], "label": "m(B_R)", "style": "scatter"}],
                      {"title": "forward ball volumes", "xlabel": "R", "ylabel": "volume"}))
    return res


def exp_curvature(ctx: Context, e) -> ExperimentResult:
    cfg, S = ctx.cfg, ctx.S
    r = cfg.domain.radius
    t = np.linspace(-0.5 * r, 0.5 * r, e.get("grid")) if e.get("grid") > 1 else np.zeros(1)
    pts = ctx.center + np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
    k = e.get("directions")
    ang = 2 * np.pi * np.arange(k) / k
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    Ns = tuple(cfg.N)
    rows = []
    series = {}
    for x in pts:
        for a, d in zip(ang, dirs):
            rep = geo.weighted_ricci(S, x, d / S.norm(x, d), Ns)
            vals = [("-inf" if rep.ric_n[N] is geo.RIC_MINUS_INFINITY else _r(rep.ric_n[N])) for N in Ns]
            rows.append([_r(x[0]), _r(x[1]), _r(a), _r(rep.ric), rep.method, _r(rep.psi_d1), *vals])
            series.setdefault(tuple(x), []).append((a, rep.ric))
    res = ExperimentResult("curvature")
    res.tables["curvature"] = (["x", "y", "angle", "ric", "method", "psi_d1", *[f"ric_N={N:g}" for N in Ns]], rows)
    res.info = {"K_hat": {f"{N:g}": ctx.k_hat(N) for N in Ns}}
    res.plots.append(("curvature", [{"x": [s[0] for s in v], "y": [s[1] for s in v], "label": f"x=({p[0]:.2g},{p[1]:.2g})"}
                                    for p, v in list(series.items())[:7]],
                      {"title": "Ricci curvature of F-unit directions", "xlabel": "angle", "ylabel": "Ric"}))
    return res


RUNNERS = {
    "solve": exp_solve,
    "norm-check": exp_norm_check,
    "gradient": exp_gradient,
    "harnack": exp_harnack,
    "liouville": exp_liouville,
    "bochner": exp_bochner,
    "poincare": exp_poincare,
    "sobolev": exp_sobolev,
    "volume": exp_volume,
    "curvature": exp_curvature,
}


def _run_one(ctx, e) -> ExperimentResult:
    t0 = time.perf_counter()
    try:
        res = RUNNERS[e.kind](ctx, e)
    except Exception as exc:  # reported per experiment, run exits 1
        res = ExperimentResult(e.kind, error=f"{type(exc).__name__}: {exc}")
        log.debug("%s failed\n%s", e.kind, traceback.format_exc())
    res.seconds = time.perf_counter() - t0
    return res


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("finslerlab", "numpy", "scipy", "pyyaml", "click"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def run_scenario(config_path, out=None, seed=None, threads: int = 1, timestamps: bool = True) -> int:
    """Run every experiment of a scenario and write its artifacts; returns the exit code."""
    path = resolve_config(config_path)
    text = path.read_text()
    cfg = ScenarioConfig.loads(text, str(path))
    if seed is not None:
        cfg.seed = int(seed)
    outdir = Path(out or cfg.output)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    exps = cfg.experiments
    if threads > 1 and len(exps) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda e: _run_one(ctx, e), exps))
    else:
        results = [_run_one(ctx, e) for e in exps]

    # single aggregator: every file is written here, after all jobs finished
    lines = [f"scenario {cfg.name}: {cfg.description}".rstrip(": "), f"structure {json.dumps(ctx.S.to_dict(), sort_keys=True)}", ""]
    for k, res in enumerate(results):
        stem = res.kind if [r.kind for r in results].count(res.kind) == 1 else f"{res.kind}-{k}"
        if res.error:
            lines.append(f"[ERROR] {stem}: {res.error}")
            (outdir / f"{stem}.json").write_text(json.dumps({"kind": res.kind, "error": res.error}, indent=2, sort_keys=True) + "\n")
            continue
        (outdir / f"{stem}.csv").write_text(reports_to_csv(res.reports) if res.reports else "")
        for name, (header, rows) in res.tables.items():
            (outdir / f"{name if name != res.kind else stem + '_data'}.csv").write_text(_table_csv(header, rows))
        payload = {"kind": res.kind, "reports": [r.to_dict() for r in res.reports], "info": _jsonable(res.info)}
        if timestamps:
            payload["seconds"] = round(res.seconds, 3)
        (outdir / f"{stem}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        for name, series, kw in res.plots:
            plot(series, outdir / f"{name}.svg", **kw)
        status = "RED" if res.red else "ok"
        lines.append(f"[{status}] {stem}" + (f" ({res.seconds:.1f} s)" if timestamps else ""))
        for r in res.reports:
            flag = "RED" if r.red_flag else "pass"
            lines.append(f"    {flag:4s} {r.tag:28s} lhs={r.lhs:.6g} rhs={r.rhs:.6g} slack={r.slack:.3g} tol={r.tolerance:.3g}")
        for key, val in sorted(res.info.items()):
            if isinstance(val, (int, float, str, bool)):
                lines.append(f"    info {key} = {val}")
    if any(r.error for r in results):
        code = EXIT_ERROR
    elif any(r.red for r in results):
        code = EXIT_RED
    else:
        code = EXIT_OK
    measured = {}
    try:
        uc = ctx.constants()
        measured = {"lambda": uc.lam, "Lambda": uc.Lam, "rho": uc.rho, "lambda_dual": uc.lam_dual, "Lambda_dual": uc.Lam_dual,
                    "rho_sq_bound_smooth": uc.rho_sq_bound_smooth, "rho_sq_bound_convex": uc.rho_sq_bound_convex,
                    "K_hat": {f"{N:g}": ctx.k_hat(N) for N in sorted(set(cfg.N) | {ctx.finite_N()})}}
    except Exception as exc:
        measured = {"error": str(exc)}
        code = EXIT_ERROR
    manifest = {
        "scenario": cfg.name,
        "config_path": str(path),
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "threads": threads,
        "versions": _versions(),
        "measured": measured,
        "experiments": [{"kind": r.kind, "status": "error" if r.error else ("red" if r.red else "ok")} for r in results],
        "exit_code": code,
    }
    if timestamps:
        manifest["started"] = started
        manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    (outdir / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    lines += ["", f"exit code {code}"]
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
    return code


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return _jsonable(v.item())
    return v


# -- click commands --------------------------------------------------------------

@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log solver progress.")
def main(verbose):
    """Finsler measure-space numerical lab."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("config")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory (overrides config).")
@click.option("--seed", type=int, default=None, help="Random seed (overrides config).")
@click.option("--threads", type=int, default=1, show_default=True, help="Experiments run concurrently.")
@click.option("--no-timestamps", is_flag=True, help="Omit wall-clock fields from JSON and summary.")
def run(config, out, seed, threads, no_timestamps):
    """Run a scenario CONFIG (a YAML path or a bundled scenario name)."""
    try:
        code = run_scenario(config, out=out, seed=seed, threads=max(1, threads), timestamps=not no_timestamps)
    except Exception as exc:  # configuration, structure or I/O failure
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    outdir = out or ScenarioConfig.load(resolve_config(config)).output
    click.echo((Path(outdir) / "summary.txt").read_text(), nl=False)
    sys.exit(code)


@main.command("list")
def list_cmd():
    """List the bundled scenarios."""
    for name, path in bundled_scenarios().items():
        cfg = ScenarioConfig.load(path)
        click.echo(f"{name:20s} {cfg.description}")


@main.command()
@click.argument("config")
def validate(config):
    """Parse CONFIG and build its structure and mesh without solving."""
    try:
        cfg = ScenarioConfig.load(resolve_config(config))
        S = cfg.build_structure()
        mesh = cfg.build_mesh(S)
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(f"{cfg.name}: {S.family} structure, {mesh.n_nodes} nodes, {mesh.n_elements} elements, "
               f"experiments: {', '.join(e.kind for e in cfg.experiments) or 'none'}")


if __name__ == "__main__":
    main()
