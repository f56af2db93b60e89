"""Distributed proximal-gradient iteration and the centralized ISTA baseline.

Each of the m agents holds a local least-squares loss
f_i(theta_i) = (1/2n)||y_i - X_i theta_i||^2 (so the average of the f_i is
the centralized loss) plus its share of the quadratic consensus penalty
(1/(2 m gamma)) ||theta||_V^2 with V = (I - W) x I.  One synchronous round
updates every agent via the constrained l1 prox of

    psi_i = theta_i - beta * (grad f_i(theta_i) + (theta_i - sum_j w_ij theta_j) / gamma),

which mixes the neighbors' iterates and steps along the local gradient.
With m = 1 the consensus term vanishes identically and the round reduces to
one ISTA step on the plain LASSO objective.

The monitored objective is G(theta) = L_gamma(theta) + (lambda/m)||theta||_1;
with the stepsize rule beta = gamma / (gamma L_max + 1 - lambda_min(W)) the
surrogate majorizes G, so G never increases along the iterates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .datagen import AgentShards, Dataset, Shard
from .errors import ConfigError, DivergenceError
from .graph import GossipMatrix
from .proxops import constrained_prox, project_l1_ball, soft_threshold

TRACE_COLUMNS = ("iter", "avg_est_err", "consensus_err", "objective_G",
                 "objective_gap", "mse_test", "elapsed_ms")

# iterates beyond this magnitude overflow the squared metrics; treat as divergence
_DIVERGENCE_CAP = 1e150


def _diverged(arr: np.ndarray) -> bool:
    return not np.all(np.isfinite(arr)) or float(np.abs(arr).max()) > _DIVERGENCE_CAP


@dataclass
class StackedState:
    """The m x d stack of agent copies theta_1..theta_m."""

    blocks: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        self.blocks = np.atleast_2d(np.asarray(self.blocks, dtype=float))

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    @property
    def d(self) -> int:
        return self.blocks.shape[1]

    def average(self) -> np.ndarray:
        return self.blocks.mean(axis=0)

    def orthogonal(self) -> np.ndarray:
        """Disagreement component: theta_i - theta_av, summing to zero."""
        return self.blocks - self.average()

    def consensus_error(self) -> float:
        """(1/m) sum_i ||theta_i - theta_av||^2."""
        return float(np.sum(self.orthogonal() ** 2) / self.m)

    @classmethod
    def zeros(cls, m: int, d: int) -> "StackedState":
        return cls(blocks=np.zeros((m, d)), iteration=0)


@dataclass
class SolverConfig:
    lam: float
    gamma: float
    beta: float
    radius: float
    max_iters: int
    rel_tol: float = 0.0          # 0 disables early stopping
    seed: int | None = None
    metric_stride: int = 1
    strict: bool = False          # enforce the stepsize bound before stepping
    record_timing: bool = False   # wall-clock column breaks byte-reproducibility
    theta0: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("lam", "gamma", "beta", "radius"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be >= 0")
        if self.metric_stride < 1:
            raise ConfigError("metric_stride must be >= 1")


@dataclass
class IterationMetrics:
    iter: int
    avg_est_err: float | None = None
    consensus_err: float | None = None
    objective_G: float | None = None
    objective_gap: float | None = None
    mse_test: float | None = None
    elapsed_ms: float | None = None


@dataclass
class RunTrace:
    config: SolverConfig
    metrics: list
    final_state: StackedState

    def column(self, name):
        return [getattr(row, name) for row in self.metrics]


def local_gradient(shard: Shard, theta: np.ndarray) -> np.ndarray:
    """Gradient of (1/2n)||y_i - X_i theta||^2: X_i^T (X_i theta - y_i) / n."""
    if shard.d != theta.shape[0]:
        raise ConfigError("theta dimension does not match shard")
    return shard.X.T @ (shard.X @ theta - shard.y) / shard.n


def _stacked_design(shards: AgentShards) -> np.ndarray:
    return np.stack([sh.X for sh in shards.shards])


def _stacked_obs(shards: AgentShards) -> np.ndarray:
    return np.stack([sh.y for sh in shards.shards])


def _batched_gradients(Xs, ys, blocks):
    resid = np.einsum("mnd,md->mn", Xs, blocks) - ys
    return np.einsum("mnd,mn->md", Xs, resid) / Xs.shape[1]


def _psi(blocks, W, Xs, ys, cfg):
    grads = _batched_gradients(Xs, ys, blocks)
    consensus_pull = (blocks - W @ blocks) / cfg.gamma
    return blocks - cfg.beta * (grads + consensus_pull)


def _prox_rows(psi, shrink, radius):
    out = soft_threshold(psi, shrink)
    over = np.abs(out).sum(axis=1) > radius
    for i in np.flatnonzero(over):
        out[i] = constrained_prox(psi[i], shrink, radius)
    return out


def max_shard_lipschitz(shards: AgentShards) -> float:
    """L_max = max_i lambda_max(X_i^T X_i / n)."""
    return max(
        float(np.linalg.svd(sh.X, compute_uv=False)[0] ** 2) / sh.n
        for sh in shards.shards)


def _check_stepsize(cfg, shards, w):
    bound = cfg.gamma / (cfg.gamma * max_shard_lipschitz(shards)
                         + 1.0 - w.lambda_min)
    if cfg.beta > bound * (1 + 1e-12):
        raise ConfigError(
            f"stepsize beta={cfg.beta:.3e} exceeds the stability bound "
            f"{bound:.3e}")


def dgd_step(state: StackedState, w: GossipMatrix, shards: AgentShards,
             cfg: SolverConfig) -> StackedState:
    """One synchronous round of the distributed proximal-gradient update."""
    if _diverged(state.blocks):
        raise DivergenceError("non-finite state", state.iteration)
    if cfg.strict:
        _check_stepsize(cfg, shards, w)
    psi = _psi(state.blocks, w.W, _stacked_design(shards),
               _stacked_obs(shards), cfg)
    if _diverged(psi):
        raise DivergenceError("iterates diverged", state.iteration + 1)
    blocks = _prox_rows(psi, cfg.beta * cfg.lam, cfg.radius)
    return StackedState(blocks=blocks, iteration=state.iteration + 1)


def evaluate_objective(state: StackedState, shards: AgentShards,
                       w: GossipMatrix, cfg: SolverConfig):
    """(L_gamma, G) of the penalized formulation at the given stack."""
    resid_sq = sum(
        float(np.sum((sh.y - sh.X @ theta) ** 2))
        for sh, theta in zip(shards.shards, state.blocks))
    blocks = state.blocks
    quad_v = float(np.sum(blocks * (blocks - w.W @ blocks)))
    L = resid_sq / (2.0 * shards.N) + quad_v / (2.0 * state.m * cfg.gamma)
    G = L + cfg.lam / state.m * float(np.abs(blocks).sum())
    return L, G


def metrics(state: StackedState, truth=None, test: Dataset | None = None
            ) -> IterationMetrics:
    """Estimation/consensus/test-MSE metrics for one stack."""
    out = IterationMetrics(iter=state.iteration,
                           consensus_err=state.consensus_error())
    if truth is not None:
        diff = state.blocks - truth.theta
        out.avg_est_err = float(np.sum(diff ** 2) / state.m)
    if test is not None:
        pred = state.blocks @ test.X.T  # m x N_test
        out.mse_test = float(np.sum((test.y - pred) ** 2)
                             / (state.m * test.N))
    return out


def run(shards: AgentShards, w: GossipMatrix, cfg: SolverConfig,
        truth=None, test: Dataset | None = None) -> RunTrace:
    """Iterate from theta^0 (zero by default) for max_iters rounds.

    Records IterationMetrics every metric_stride rounds (always including
    the final round); stops early when the relative state change drops
    below rel_tol (if positive).  Raises DivergenceError on non-finite
    iterates, with the offending iteration index.
    """
    if cfg.theta0 is not None:
        state = StackedState(blocks=np.array(cfg.theta0, dtype=float))
        if state.blocks.shape != (shards.m, shards.d):
            raise ConfigError("theta0 shape must be (m, d)")
    else:
        state = StackedState.zeros(shards.m, shards.d)
    if cfg.strict:
        _check_stepsize(cfg, shards, w)

    Xs, ys = _stacked_design(shards), _stacked_obs(shards)
    XsT = np.ascontiguousarray(Xs.transpose(0, 2, 1))
    W = w.W
    m, n, d = Xs.shape
    shrink = cfg.beta * cfg.lam
    # one mixing GEMM per round: psi = M theta - beta grad with
    # M = (1 - beta/gamma) I + (beta/gamma) W; for m = 1 the mixing is the
    # exact identity, so the round reduces to a plain ISTA step
    M = np.eye(1) if m == 1 else (
        (1.0 - cfg.beta / cfg.gamma) * np.eye(m) + (cfg.beta / cfg.gamma) * W)
    t_start = time.perf_counter()

    def snapshot(st):
        row = metrics(st, truth, test)
        _, row.objective_G = evaluate_objective(st, shards, w, cfg)
        if cfg.record_timing:
            row.elapsed_ms = (time.perf_counter() - t_start) * 1e3
        return row

    rows = [snapshot(state)]
    blocks = state.blocks
    psi = np.empty_like(blocks)
    mag = np.empty_like(blocks)
    completed = cfg.max_iters
    for t in range(cfg.max_iters):
        resid = np.matmul(Xs, blocks[:, :, None])[:, :, 0]
        resid -= ys
        grads = np.matmul(XsT, resid[:, :, None])[:, :, 0]
        np.matmul(M, blocks, out=psi)
        grads *= cfg.beta / n
        psi -= grads
        np.abs(psi, out=mag)
        mag -= shrink
        np.maximum(mag, 0.0, out=mag)
        new_blocks = np.sign(psi)
        new_blocks *= mag
        row_l1 = mag.sum(axis=1)
        for i in np.flatnonzero(row_l1 > cfg.radius):
            new_blocks[i] = project_l1_ball(psi[i], cfg.radius)
        delta = float(np.linalg.norm(new_blocks - blocks))
        if not np.isfinite(delta) or _diverged(new_blocks):
            raise DivergenceError("iterates diverged", t + 1)
        scale = float(np.linalg.norm(blocks))
        blocks, psi = new_blocks, blocks
        stopping = cfg.rel_tol > 0 and delta <= cfg.rel_tol * max(scale, 1e-30)
        if (t + 1) % cfg.metric_stride == 0 or t + 1 == cfg.max_iters or stopping:
            rows.append(snapshot(StackedState(blocks=blocks, iteration=t + 1)))
        if stopping:
            completed = t + 1
            break
    state = StackedState(blocks=blocks, iteration=completed)

    best_g = min(row.objective_G for row in rows)
    for row in rows:
        row.objective_gap = row.objective_G - best_g
    return RunTrace(config=cfg, metrics=rows, final_state=state)


@dataclass
class CentralTrace:
    objectives: list
    iterates: list | None = None


def centralized_objective(ds: Dataset, theta: np.ndarray, lam: float) -> float:
    return float(np.sum((ds.y - ds.X @ theta) ** 2) / (2 * ds.N)
                 + lam * np.abs(theta).sum())


def centralized_ista(ds: Dataset, lam: float, beta_c: float, max_iters: int,
                     tol: float = 0.0, radius: float | None = None,
                     strict: bool = False, store_iterates: bool = False):
    """Proximal gradient on (1/2N)||y - X theta||^2 + lam ||theta||_1.

    With a radius, the update uses the same ball-constrained prox as the
    distributed iteration (so an m=1 network reproduces it exactly).
    """
    if lam < 0 or beta_c <= 0:
        raise ConfigError("need lam >= 0 and beta_c > 0")
    if strict:
        smax = float(np.linalg.svd(ds.X, compute_uv=False)[0] ** 2)
        if beta_c > ds.N / smax * (1 + 1e-12):
            raise ConfigError("beta_c exceeds N / lambda_max(X^T X)")
    theta = np.zeros(ds.d)
    objs = [centralized_objective(ds, theta, lam)]
    iterates = [theta.copy()] if store_iterates else None
    for t in range(max_iters):
        grad = ds.X.T @ (ds.X @ theta - ds.y) / ds.N
        z = theta - beta_c * grad
        if radius is None:
            new = soft_threshold(z, beta_c * lam)
        else:
            new = constrained_prox(z, beta_c * lam, radius)
        if _diverged(new):
            raise DivergenceError("ISTA diverged", t + 1)
        delta = float(np.linalg.norm(new - theta))
        scale = float(np.linalg.norm(theta))
        theta = new
        objs.append(centralized_objective(ds, theta, lam))
        if store_iterates:
            iterates.append(theta.copy())
        if tol > 0 and delta <= tol * max(scale, 1e-30):
            break
    return theta, CentralTrace(objectives=objs, iterates=iterates)
