"""Parameter-selection rules, error bounds, rates, and structural checks.

Everything here evaluates closed-form expressions as numerical diagnostics:
the sparsity-penalty rule lambda ~ sigma sqrt(zeta t0 log d / N), the
consensus-penalty ceiling gamma ~ (1-rho) / (lmax(Sigma)(d + log m) +
lmin(Sigma) d m (log m + 1)), the stepsize beta = gamma/(gamma L_max + 1 -
lambda_min(W)), the l1-radius interval, contraction/tolerance quantities,
and Monte-Carlo falsification checks of the restricted-strong-convexity and
cone-membership conditions.

Logs are natural throughout.  The universal constants in the rules are
existential; they default to 1 and are overridable via the constants map of
TheoryInputs (experiments tune gamma by grid search anyway).  Known lower
bounds for a handful of them are kept in CONSTANT_LOWER_BOUNDS and enforced
when a caller overrides those entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .datagen import AgentShards, GroundTruth
from .errors import ConfigError, RegimeError
from .solver import StackedState

# Lower bounds known for specific universal constants (natural-log scale
# chi-square/subgaussian tail arguments); enforced only when overridden.
CONSTANT_LOWER_BOUNDS = {
    "c5_tilde": 32.0,
    "c8_tilde": math.sqrt(6.0),
    "c10_tilde": 1824.0,
    "c14_tilde": 1152.0,
    "c17_tilde": 9.0,
}


@dataclass
class RscParams:
    """Restricted strong convexity: ||X D||^2/N >= (mu/2)||D||^2 - (tau/2)||D||_1^2."""

    mu: float
    tau: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError("mu must be > 0")
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")


@dataclass
class TheoryInputs:
    rho: float
    m: int
    n: int
    N: int
    d: int
    s: int
    sigma: float
    zeta_sigma: float
    lambda_min_cov: float
    lambda_max_cov: float
    L_max: float
    lambda_min_W: float
    t0: float = 3.0
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ConfigError("rho must be in [0, 1)")
        if self.t0 <= 2:
            raise ConfigError("t0 must be > 2")
        if min(self.m, self.n, self.N, self.d, self.s) < 1:
            raise ConfigError("dimensions must be positive")
        for name, value in self.constants.items():
            lb = CONSTANT_LOWER_BOUNDS.get(name)
            if lb is not None and value < lb:
                raise ConfigError(f"constant {name} must be >= {lb}")

    def const(self, name: str) -> float:
        return float(self.constants.get(name, 1.0))


class RateQuantities(NamedTuple):
    mu_av: float        # mu/8 - 8 s tau
    kappa: float        # 1 - beta * mu_av / 4
    kappa_strict: float # 1 - beta * mu_av (the form the rate proof contracts at)
    eps_stat_sq: float
    h_max: float


class RadiusBounds(NamedTuple):
    lower: float
    upper: float

    @property
    def is_empty(self) -> bool:
        return self.lower > self.upper


class IterationEstimate(NamedTuple):
    iterations: int
    comm_order: float | None


def rsc_from_gaussian(inp: TheoryInputs) -> RscParams:
    """RSC parameters certified by the Gaussian design: mu = lmin(Sigma),
    tau = 2 c1 zeta log(d) / N."""
    tau = 2.0 * inp.const("c1") * inp.zeta_sigma * math.log(inp.d) / inp.N
    return RscParams(mu=inp.lambda_min_cov, tau=tau)


def choose_lambda(inp: TheoryInputs) -> float:
    """c4 * sigma * sqrt(zeta * t0 * log(d) / N)."""
    if inp.d < 2:
        raise ConfigError("need d >= 2")
    return inp.const("c4") * inp.sigma * math.sqrt(
        inp.zeta_sigma * inp.t0 * math.log(inp.d) / inp.N)


def choose_gamma(inp: TheoryInputs) -> float:
    """c5 (1-rho) / (lmax(Sigma)(d + log m) + lmin(Sigma) d m (log m + 1))."""
    denom = (inp.lambda_max_cov * (inp.d + math.log(inp.m))
             + inp.lambda_min_cov * inp.d * inp.m * (math.log(inp.m) + 1.0))
    return inp.const("c5") * (1.0 - inp.rho) / denom


def choose_beta(gamma: float, L_max: float, lambda_min_W: float) -> float:
    """gamma / (gamma L_max + 1 - lambda_min(W))."""
    if gamma <= 0:
        raise ConfigError("gamma must be > 0")
    return gamma / (gamma * L_max + 1.0 - lambda_min_W)


def radius_bounds(lam: float, s: int, rsc: RscParams,
                  l1_truth: float) -> RadiusBounds:
    """max{56 lam s/(mu - 32 s tau), 2||theta*||_1} <= R <= lam/(32 tau)."""
    denom = rsc.mu - 32.0 * s * rsc.tau
    if denom <= 0:
        raise RegimeError("mu - 32 s tau must be > 0")
    lower = max(56.0 * lam * s / denom, 2.0 * l1_truth)
    upper = lam / (32.0 * rsc.tau) if rsc.tau > 0 else math.inf
    return RadiusBounds(lower=lower, upper=upper)


def h_network(gamma: float, orth_norm: float, lam: float, noise_inf: float,
              m: int, n: int, d: int, rho: float) -> float:
    """Network slack of the almost-sparse-direction cone:
    -(1-rho)/(m gamma lam) * t^2 + (2 M/(lam n) + 2) sqrt(d/m) * t."""
    return (-(1.0 - rho) / (m * gamma * lam) * orth_norm ** 2
            + (2.0 * noise_inf / (lam * n) + 2.0)
            * math.sqrt(d / m) * orth_norm)


def rate_quantities(inp: TheoryInputs, rsc: RscParams, beta: float,
                    avg_err_hat: float, lam: float, gamma: float,
                    noise_inf: float = 0.0) -> RateQuantities:
    """Contraction and tolerance quantities of the linear-rate statement.

    eps_stat_sq = 36 * avg_err_hat + lam^2 s / (1976 mu^2) and
    h_max = d gamma / (lam (1-rho)) * (M/n + lam)^2, with M the largest
    noise-design correlation max_i ||w_i^T X_i||_inf.
    """
    mu_av = rsc.mu / 8.0 - 8.0 * inp.s * rsc.tau
    if mu_av <= 0:
        raise RegimeError("mu/8 - 8 s tau must be > 0")
    eps_stat_sq = (36.0 * avg_err_hat
                   + lam ** 2 * inp.s / (1976.0 * rsc.mu ** 2))
    h_max = (inp.d * gamma / (lam * (1.0 - inp.rho))
             * (noise_inf / inp.n + lam) ** 2)
    return RateQuantities(mu_av=mu_av,
                          kappa=1.0 - beta * mu_av / 4.0,
                          kappa_strict=1.0 - beta * mu_av,
                          eps_stat_sq=eps_stat_sq,
                          h_max=h_max)


def iteration_bound(eta0: float, alpha_sq: float, radius: float, lam: float,
                    rate: RateQuantities, gamma: float, L_max: float,
                    rho: float, inp: TheoryInputs | None = None
                    ) -> IterationEstimate:
    """Rounds sufficient to drive the objective gap below alpha^2:

    ceil(log2 log2(R lam / a^2)) (1 + L_max log2/mu_av + (1+rho) log2/(gamma mu_av))
      + (L_max/mu_av + (1+rho)/(gamma mu_av)) log(eta0 / a^2)

    plus, when TheoryInputs is supplied, the network-scaling order estimate
    kappa_Sigma * d m (log m + 1)/(1-rho) * log(1/a^2) for reporting.
    """
    if alpha_sq > min(radius * lam / 4.0, eta0):
        raise RegimeError("alpha^2 must be <= min{R lam / 4, eta0}")
    if alpha_sq <= 0:
        raise ConfigError("alpha^2 must be > 0")
    mu_av = rate.mu_av
    outer = math.ceil(math.log2(max(math.log2(radius * lam / alpha_sq), 1.0)))
    per_restart = (1.0 + L_max * math.log(2.0) / mu_av
                   + (1.0 + rho) * math.log(2.0) / (gamma * mu_av))
    linear = ((L_max / mu_av + (1.0 + rho) / (gamma * mu_av))
              * math.log(eta0 / alpha_sq))
    total = outer * per_restart + linear
    comm = None
    if inp is not None:
        kappa_sigma = inp.lambda_max_cov / inp.lambda_min_cov
        comm = (kappa_sigma * inp.d * inp.m * (math.log(inp.m) + 1.0)
                / (1.0 - rho) * math.log(1.0 / alpha_sq))
    return IterationEstimate(iterations=math.ceil(total), comm_order=comm)


def rsc_check(X: np.ndarray, rsc: RscParams, num_dirs: int,
              seed=None) -> float:
    """Monte-Carlo falsification of the RSC inequality.

    Samples dense Gaussian, sparse, and sign-vector directions and returns
    the minimum of ||X D||^2/N - (mu/2)||D||^2 + (tau/2)||D||_1^2 over the
    samples; a nonnegative value means no falsification was found.
    """
    if num_dirs < 1:
        raise ConfigError("num_dirs must be >= 1")
    N, d = X.shape
    rng = np.random.default_rng(seed)
    worst = math.inf
    for k in range(num_dirs):
        family = k % 3
        if family == 0:
            delta = rng.standard_normal(d)
        elif family == 1:
            delta = np.zeros(d)
            support = rng.choice(d, size=rng.integers(1, max(2, d // 4)),
                                 replace=False)
            delta[support] = rng.standard_normal(len(support))
        else:
            delta = rng.choice([-1.0, 1.0], size=d)
        sq = float(np.sum((X @ delta) ** 2)) / N
        slack = (sq - 0.5 * rsc.mu * float(np.sum(delta ** 2))
                 + 0.5 * rsc.tau * float(np.abs(delta).sum()) ** 2)
        worst = min(worst, slack)
    return worst


def cone_membership(delta: StackedState, truth: GroundTruth, gamma: float,
                    lam: float, shards: AgentShards, rho: float) -> float:
    """Membership residual of the almost-sparse-average-direction cone.

    For the stacked difference Delta (estimate minus the consensual truth),
    returns 3||(D_av)_S||_1 + h(gamma, ||D_perp||) - ||(D_av)_{S^c}||_1;
    nonnegative confirms membership.  Needs the recorded noise on shards.
    """
    noise_inf = shards.max_noise_design_inf()
    d_av = delta.average()
    orth_norm = float(np.linalg.norm(delta.orthogonal()))
    on_support = np.zeros(truth.d, dtype=bool)
    on_support[truth.support] = True
    h = h_network(gamma, orth_norm, lam, noise_inf, shards.m, shards.n,
                  shards.d, rho)
    return (3.0 * float(np.abs(d_av[on_support]).sum()) + h
            - float(np.abs(d_av[~on_support]).sum()))


def error_bound_eval(inp: TheoryInputs, rsc: RscParams, lam: float,
                     gamma: float, noise_inf: float) -> float:
    """Deterministic ceiling on the average estimation error:

    9 lam^2 s/delta^2
      + 2 xi d^2 g^2 (M + lam n)^4 / (delta lam^2 n^4 (1-rho)^2)
      + 4 d g (M + lam n)^2 / (delta n^2 [2(1-rho) - 4 L_max g - delta g])

    with delta = mu/2 - 16 s tau and xi = tau.  The first term matches the
    centralized LASSO error; the rest is the cost of decentralization.
    """
    delta = rsc.mu / 2.0 - 16.0 * inp.s * rsc.tau
    if delta <= 0:
        raise RegimeError("mu/2 - 16 s tau must be > 0")
    if gamma > 2.0 * (1.0 - inp.rho) / (4.0 * inp.L_max + delta):
        raise RegimeError("gamma exceeds 2(1-rho)/(4 L_max + delta)")
    xi = rsc.tau
    M = noise_inf
    n = inp.n
    centralized = 9.0 * lam ** 2 * inp.s / delta ** 2
    quad = (2.0 * xi * inp.d ** 2 * gamma ** 2 * (M + lam * n) ** 4
            / (delta * lam ** 2 * n ** 4 * (1.0 - inp.rho) ** 2))
    lin_denom = 2.0 * (1.0 - inp.rho) - 4.0 * inp.L_max * gamma - delta * gamma
    linear = (4.0 * inp.d * gamma * (M + lam * n) ** 2
              / (delta * n ** 2 * lin_denom))
    return centralized + quad + linear


def diagnostics_report(inp: TheoryInputs, rsc: RscParams | None = None,
                       lam: float | None = None,
                       gamma: float | None = None) -> dict:
    """Flat JSON-ready report keyed by rule name: inputs, output, definition."""
    if rsc is None:
        rsc = rsc_from_gaussian(inp)
    lam_rule = choose_lambda(inp)
    gamma_rule = choose_gamma(inp)
    lam_used = lam if lam is not None else lam_rule
    gamma_used = gamma if gamma is not None else gamma_rule
    beta = choose_beta(gamma_used, inp.L_max, inp.lambda_min_W)
    report = {
        "lambda_rule": {
            "definition": "c4 * sigma * sqrt(zeta * t0 * log(d) / N)",
            "inputs": {"sigma": inp.sigma, "zeta": inp.zeta_sigma,
                       "t0": inp.t0, "d": inp.d, "N": inp.N,
                       "c4": inp.const("c4")},
            "output": lam_rule,
        },
        "gamma_rule": {
            "definition": ("c5 * (1-rho) / (lmax_cov*(d+log m) "
                           "+ lmin_cov*d*m*(log m + 1))"),
            "inputs": {"rho": inp.rho, "d": inp.d, "m": inp.m,
                       "lmax_cov": inp.lambda_max_cov,
                       "lmin_cov": inp.lambda_min_cov,
                       "c5": inp.const("c5")},
            "output": gamma_rule,
        },
        "beta_rule": {
            "definition": "gamma / (gamma * L_max + 1 - lambda_min_W)",
            "inputs": {"gamma": gamma_used, "L_max": inp.L_max,
                       "lambda_min_W": inp.lambda_min_W},
            "output": beta,
        },
        "rsc_gaussian": {
            "definition": "mu = lmin_cov; tau = 2 c1 zeta log(d)/N",
            "inputs": {"lmin_cov": inp.lambda_min_cov,
                       "zeta": inp.zeta_sigma, "d": inp.d, "N": inp.N,
                       "c1": inp.const("c1")},
            "output": {"mu": rsc.mu, "tau": rsc.tau},
        },
    }
    try:
        rb = radius_bounds(lam_used, inp.s, rsc, l1_truth=0.0)
        report["radius_interval"] = {
            "definition": ("max{56 lam s/(mu-32 s tau), 2||theta*||_1} "
                           "<= R <= lam/(32 tau)"),
            "inputs": {"lam": lam_used, "s": inp.s, "mu": rsc.mu,
                       "tau": rsc.tau},
            "output": {"lower": rb.lower,
                       "upper": None if math.isinf(rb.upper) else rb.upper,
                       "empty": rb.is_empty},
        }
    except RegimeError as exc:
        report["radius_interval"] = {"error": str(exc)}
    try:
        rq = rate_quantities(inp, rsc, beta, avg_err_hat=0.0, lam=lam_used,
                             gamma=gamma_used)
        report["rate_quantities"] = {
            "definition": ("mu_av = mu/8 - 8 s tau; kappa = 1 - beta mu_av/4; "
                           "eps_stat^2 = 36 avg_err + lam^2 s/(1976 mu^2); "
                           "h_max = d gamma/(lam (1-rho)) (M/n + lam)^2"),
            "inputs": {"beta": beta, "lam": lam_used, "gamma": gamma_used},
            "output": {"mu_av": rq.mu_av, "kappa": rq.kappa,
                       "kappa_strict": rq.kappa_strict,
                       "eps_stat_sq": rq.eps_stat_sq, "h_max": rq.h_max},
        }
    except RegimeError as exc:
        report["rate_quantities"] = {"error": str(exc)}
    return report
