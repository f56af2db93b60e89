"""Experiment orchestration: single runs, sweeps, convergence bundles.

Monte-Carlo repetitions and grid points run as independent jobs over a
bounded worker pool (NETLASSO_THREADS); every job derives its randomness
from a spawned sub-seed and results are aggregated in grid order, so
outputs are identical regardless of the pool size.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import datagen, graph, solver, theory
from ..errors import BandNotMetError, ConfigError
from .spec import ExperimentSpec

GAMMA_POINTS_PER_DECADE = 8


def worker_count() -> int:
    env = os.environ.get("NETLASSO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"NETLASSO_THREADS must be an integer, got {env!r}")
    return min(4, os.cpu_count() or 1)


def parallel_map(fn, items):
    """Map over independent jobs; aggregation order follows the item order."""
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, item) for item in items]
        return [f.result() for f in futures]


def sub_seed(seed, *path):
    """Deterministic child seed for a job addressed by integers."""
    return np.random.SeedSequence(seed, spawn_key=tuple(path))


def build_network(spec: ExperimentSpec, m=None):
    m = spec.m if m is None else m
    g_seed = int(sub_seed(spec.seed, 0).generate_state(1)[0])
    g = graph.build_topology(spec.topology, m, p=spec.p, seed=g_seed)
    if spec.weights == "metropolis":
        w = graph.metropolis_weights(g)
    elif spec.weights == "lazy_metropolis":
        w = graph.lazy_metropolis_weights(g)
    else:
        # complete-graph or star-with-relay modeling; not graph-compliant
        # on sparser topologies
        w = graph.uniform_average_matrix(m)
    return g, w


def make_synthetic(spec: ExperimentSpec, seed_seq, N=None, d=None, s=None):
    N = spec.N if N is None else N
    d = spec.d if d is None else d
    s = spec.sparsity if s is None else s
    kids = seed_seq.spawn(3)
    truth = datagen.gen_sparse_truth(d, s, seed=kids[0])
    X = datagen.gen_ar_design(N, d, phi=spec.phi, seed=kids[1])
    ds = datagen.gen_observations(X, truth, sigma=spec.sigma, seed=kids[2])
    return truth, ds


def theory_inputs(spec: ExperimentSpec, shards, w, N=None, d=None, s=None
                  ) -> theory.TheoryInputs:
    d = spec.d if d is None else d
    cov_eigs = np.linalg.eigvalsh(datagen.ar_covariance(d, spec.phi))
    return theory.TheoryInputs(
        rho=w.rho, m=shards.m, n=shards.n, N=shards.N, d=d,
        s=spec.sparsity if s is None else s, sigma=spec.sigma,
        zeta_sigma=1.0 / (1.0 - spec.phi ** 2),
        lambda_min_cov=float(cov_eigs[0]),
        lambda_max_cov=float(cov_eigs[-1]),
        L_max=solver.max_shard_lipschitz(shards),
        lambda_min_W=w.lambda_min, t0=spec.t0,
        constants={"c4": spec.lam_c4})


def default_radius(lam, s, truth, inp: theory.TheoryInputs):
    """Radius rule with ground truth: the l1-interval lower end when the
    curvature regime allows it, else twice the truth's l1 norm."""
    rsc = theory.rsc_from_gaussian(inp)
    if rsc.mu - 32.0 * s * rsc.tau > 0:
        lower = max(56.0 * lam * s / (rsc.mu - 32.0 * s * rsc.tau),
                    2.0 * truth.l1_norm)
        return lower, "rule:radius-interval-lower"
    return 2.0 * truth.l1_norm, "rule:2*l1(truth)"


def warm_radius(shards, w, lam, gamma, beta, iters=2000):
    """Real-data heuristic: largest per-agent l1 norm after a warm run."""
    cfg = solver.SolverConfig(lam=lam, gamma=gamma, beta=beta, radius=1e12,
                              max_iters=iters, rel_tol=1e-9, metric_stride=iters)
    trace = solver.run(shards, w, cfg)
    return float(np.abs(trace.final_state.blocks).sum(axis=1).max())


@dataclass
class ResolvedRun:
    cfg: solver.SolverConfig
    provenance: dict
    inp: theory.TheoryInputs


def resolve_config(spec: ExperimentSpec, shards, w, truth=None,
                   lam=None, gamma=None, N=None, d=None, s=None,
                   iters=None, stride=None) -> ResolvedRun:
    inp = theory_inputs(spec, shards, w, N=N, d=d, s=s)
    prov = {}
    if lam is not None:
        lam_v, prov["lam"] = float(lam), "sweep"
    elif spec.lam is not None:
        lam_v, prov["lam"] = spec.lam, "flag"
    else:
        lam_v, prov["lam"] = theory.choose_lambda(inp), "rule:lambda"
    if gamma is not None:
        gamma_v, prov["gamma"] = float(gamma), "sweep"
    elif spec.gamma is not None:
        gamma_v, prov["gamma"] = spec.gamma, "flag"
    else:
        gamma_v, prov["gamma"] = theory.choose_gamma(inp), "rule:gamma"
    if spec.beta is not None:
        beta_v, prov["beta"] = spec.beta, "flag"
    else:
        beta_v = theory.choose_beta(gamma_v, inp.L_max, inp.lambda_min_W)
        prov["beta"] = "rule:beta"
    if spec.radius is not None:
        radius_v, prov["radius"] = spec.radius, "flag"
    elif truth is not None:
        radius_v, prov["radius"] = default_radius(lam_v, inp.s, truth, inp)
    else:
        radius_v = warm_radius(shards, w, lam_v, gamma_v, beta_v)
        prov["radius"] = "rule:warm-run-l1"
    cfg = solver.SolverConfig(
        lam=lam_v, gamma=gamma_v, beta=beta_v, radius=radius_v,
        max_iters=spec.iters if iters is None else iters,
        rel_tol=spec.rel_tol, seed=spec.seed,
        metric_stride=spec.stride if stride is None else stride,
        record_timing=spec.timing, provenance=prov)
    return ResolvedRun(cfg=cfg, provenance=prov, inp=inp)


def centralized_error(ds, truth, lam, iters, tol=1e-12, radius=None):
    beta_c = ds.N / float(np.linalg.svd(ds.X, compute_uv=False)[0] ** 2)
    theta_c, _ = solver.centralized_ista(ds, lam=lam, beta_c=beta_c,
                                         max_iters=iters, tol=tol,
                                         radius=radius)
    return float(np.sum((theta_c - truth.theta) ** 2)), theta_c


def local_error(shards, truth, spec: ExperimentSpec, inp, iters):
    """Each agent solves its own-shard LASSO with the rule lambda at size n."""
    lam_n = (spec.lam_c4 * spec.sigma
             * math.sqrt(inp.zeta_sigma * spec.t0 * math.log(inp.d) / inp.n))
    errs = []
    for sh in shards.shards:
        ds_i = datagen.Dataset(X=sh.X, y=sh.y, noise_sigma=spec.sigma,
                               provenance="shard")
        err, _ = centralized_error(ds_i, truth, lam_n, iters)
        errs.append(err)
    return float(np.mean(errs)), lam_n


# ---------------------------------------------------------------- sweeps

def gamma_search_grid(spec: ExperimentSpec):
    lo, hi = spec.gamma_grid_lo, spec.gamma_grid_hi
    decades = math.log10(hi / lo)
    n = int(round(decades * GAMMA_POINTS_PER_DECADE)) + 1
    return np.geomspace(hi, lo, n)  # descending


def _final_errors_one_rep(spec, w, rep, lam=None, gamma=None, N=None, d=None,
                          s=None, iters=None, want_trajectory=False):
    """One Monte-Carlo repetition: distributed final error + paired
    centralized error on the same data.

    With spec.warm_start the distributed run starts at the consensual
    centralized solution (the sweep then measures the estimator rather
    than the from-zero path; the fixed point is the same).
    """
    seed_seq = sub_seed(spec.seed, 1, rep)
    truth, ds = make_synthetic(spec, seed_seq, N=N, d=d, s=s)
    shards = datagen.partition(ds, w.m)
    budget = iters if iters is not None else spec.iters
    stride = max(1, budget // 500) if want_trajectory else 10 ** 9
    rr = resolve_config(spec, shards, w, truth=truth, lam=lam, gamma=gamma,
                        N=N, d=d, s=s, iters=iters, stride=stride)
    cent_err, theta_c = centralized_error(ds, truth, rr.cfg.lam,
                                          iters=min(rr.cfg.max_iters, 20000))
    if spec.warm_start:
        rr.cfg.theta0 = np.tile(theta_c, (shards.m, 1))
    trace = solver.run(shards, w, rr.cfg, truth=truth)
    dist_err = trace.metrics[-1].avg_est_err
    traj = ([(row.iter, row.avg_est_err) for row in trace.metrics]
            if want_trajectory else None)
    return dist_err, cent_err, traj


def lambda_sweep(spec: ExperimentSpec):
    """Final distributed error per lambda plus the centralized baseline."""
    _, w = build_network(spec)
    jobs = [(lam, rep) for lam in spec.grid for rep in range(spec.reps)]
    results = parallel_map(
        lambda jl: _final_errors_one_rep(spec, w, jl[1], lam=jl[0]), jobs)
    rows = []
    for i, lam in enumerate(spec.grid):
        chunk = results[i * spec.reps:(i + 1) * spec.reps]
        dist = np.array([c[0] for c in chunk])
        cent = np.array([c[1] for c in chunk])
        rows.append([float(lam), float(dist.mean()), float(dist.std()),
                     float(cent.mean()), float(cent.std()), spec.reps])
    columns = ["lambda", "dist_mean", "dist_std", "cent_mean", "cent_std",
               "reps"]
    return columns, rows, {"rho": w.rho}


def gamma_sweep(spec: ExperimentSpec):
    """Final error per gamma (fixed lambda) plus the centralized baseline."""
    _, w = build_network(spec)
    jobs = [(gam, rep) for gam in spec.grid for rep in range(spec.reps)]
    results = parallel_map(
        lambda jl: _final_errors_one_rep(spec, w, jl[1], gamma=jl[0]), jobs)
    rows = []
    for i, gam in enumerate(spec.grid):
        chunk = results[i * spec.reps:(i + 1) * spec.reps]
        dist = np.array([c[0] for c in chunk])
        cent = np.array([c[1] for c in chunk])
        rows.append([float(gam), float(dist.mean()), float(dist.std()),
                     float(cent.mean()), float(cent.std()), spec.reps])
    columns = ["gamma", "dist_mean", "dist_std", "cent_mean", "cent_std",
               "reps"]
    return columns, rows, {"rho": w.rho}


def _band_met(spec, w, gamma, N=None, d=None, s=None, iters=None,
              want_rounds=False):
    """Mean paired error ratio over reps at one gamma; optionally the mean
    first round entering the centralized band."""
    results = parallel_map(
        lambda rep: _final_errors_one_rep(spec, w, rep, gamma=gamma, N=N,
                                          d=d, s=s, iters=iters,
                                          want_trajectory=want_rounds),
        list(range(spec.reps)))
    ratios = np.array([r[0] / r[1] for r in results])
    met = bool(ratios.mean() <= 1.0 + spec.band)
    rounds = None
    if met and want_rounds:
        crossings = []
        for dist_err, cent_err, traj in results:
            level = (1.0 + spec.band) * cent_err
            hit = next((it for it, err in traj if err is not None
                        and err <= level), None)
            crossings.append(hit if hit is not None else math.nan)
        rounds = float(np.nanmean(crossings))
    return met, float(ratios.mean()), rounds


def critical_gamma(spec: ExperimentSpec, w, N=None, d=None, s=None,
                   iters=None, want_rounds=False):
    """Largest grid gamma whose mean final error is within the band of the
    paired centralized error.  Descends the log grid and stops at the first
    pass (error is monotone decreasing as gamma shrinks)."""
    for gamma in gamma_search_grid(spec):
        met, ratio, rounds = _band_met(spec, w, float(gamma), N=N, d=d, s=s,
                                       iters=iters, want_rounds=want_rounds)
        if met:
            return float(gamma), ratio, rounds
    return None, None, None


def d_scaling_sweep(spec: ExperimentSpec):
    """Per dimension d: critical gamma (and its inverse) with s = ceil(log d)
    and N chosen to hold s*log(d)/N at the requested ratio."""
    _, w = build_network(spec)
    if spec.ratio is not None:
        ratio = spec.ratio
    else:
        ratio = spec.sparsity * math.log(spec.d) / spec.N
    rows = []
    missed = []
    for d in spec.grid:
        d = int(d)
        s = max(1, math.ceil(math.log(d)))
        N_target = s * math.log(d) / ratio
        N = max(spec.m, int(round(N_target / spec.m)) * spec.m)
        gamma_c, came_ratio, _ = critical_gamma(spec, w, N=N, d=d, s=s)
        if gamma_c is None:
            missed.append(d)
            rows.append([d, s, N, None, None, None, spec.reps])
        else:
            rows.append([d, s, N, gamma_c, 1.0 / gamma_c, came_ratio,
                         spec.reps])
    columns = ["d", "s", "N", "gamma_critical", "inv_gamma_critical",
               "err_ratio", "reps"]
    meta = {"rho": w.rho, "ratio": ratio, "band": spec.band,
            "missed": missed}
    return columns, rows, meta


def m_scaling_sweep(spec: ExperimentSpec):
    """Per network size m: least communication rounds (at the largest
    band-passing gamma) to reach the centralized-error band."""
    rows = []
    missed = []
    for m in spec.grid:
        m = int(m)
        if spec.N % m != 0:
            raise ConfigError(f"grid m={m} must divide N={spec.N}")
        _, w = build_network(spec, m=m)
        gamma_c, ratio, rounds = critical_gamma(spec, w, want_rounds=True)
        if gamma_c is None:
            missed.append(m)
            rows.append([m, w.rho, None, None, None, spec.reps])
        else:
            rows.append([m, w.rho, gamma_c, rounds, ratio, spec.reps])
    columns = ["m", "rho", "gamma_critical", "rounds_to_band", "err_ratio",
               "reps"]
    return columns, rows, {"band": spec.band, "missed": missed}


def run_sweep(spec: ExperimentSpec):
    if spec.axis == "lambda":
        return lambda_sweep(spec)
    if spec.axis == "gamma":
        return gamma_sweep(spec)
    if spec.axis == "d":
        return d_scaling_sweep(spec)
    if spec.axis == "m":
        return m_scaling_sweep(spec)
    raise ConfigError("sweep requires an axis")


# ---------------------------------------------------- convergence bundles

def convergence_bundle(spec: ExperimentSpec):
    """Run one fixed instance across a gamma list; returns the traces plus
    centralized- and local-error reference lines."""
    gammas = spec.gammas or spec.grid
    if not gammas:
        raise ConfigError("convergence needs a gamma list")
    _, w = build_network(spec)
    seed_seq = sub_seed(spec.seed, 2)
    truth, ds = make_synthetic(spec, seed_seq)
    shards = datagen.partition(ds, spec.m)
    traces = {}
    resolved = None
    for gam in gammas:
        rr = resolve_config(spec, shards, w, truth=truth, gamma=gam)
        traces[float(gam)] = solver.run(shards, w, rr.cfg, truth=truth)
        resolved = rr
    cent_err, _ = centralized_error(ds, truth, resolved.cfg.lam,
                                    iters=spec.iters)
    loc_err, lam_n = local_error(shards, truth, spec, resolved.inp,
                                 iters=spec.iters)
    refs = {"centralized_err": cent_err, "local_err": loc_err,
            "local_lambda": lam_n, "lambda": resolved.cfg.lam, "rho": w.rho}
    return traces, refs


def convergence_analysis(rows):
    """Plateau level, rounds-to-plateau, and the pre-plateau log-linear fit.

    rows: iterable of (iter, avg_est_err).  The plateau is the mean error
    over the last tenth of the trace; pre-plateau points are those at least
    2x above it.  Returns (plateau, iters_to_plateau, r_squared).
    """
    pts = [(it, err) for it, err in rows if err is not None and err > 0]
    if len(pts) < 5:
        raise ConfigError("trace too short to analyze")
    tail = max(1, len(pts) // 10)
    plateau = float(np.mean([err for _, err in pts[-tail:]]))
    iters_to_plateau = next((it for it, err in pts if err <= 1.05 * plateau),
                            pts[-1][0])
    pre = [(it, err) for it, err in pts if err >= 2.0 * plateau]
    r_sq = None
    if len(pre) >= 8:
        x = np.array([it for it, _ in pre], dtype=float)
        y = np.log10([err for _, err in pre])
        coef = np.polyfit(x, y, 1)
        resid = y - np.polyval(coef, x)
        ss_res = float(np.sum(resid ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r_sq = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return plateau, iters_to_plateau, r_sq


def ensure_band_met(meta):
    missed = meta.get("missed") or []
    if missed:
        raise BandNotMetError(
            f"no gamma on the grid met the accuracy band for: {missed}")
