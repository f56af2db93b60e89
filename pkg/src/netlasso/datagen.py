"""Synthetic data generation, agent partitioning, and CSV ingestion.

The synthetic model is y = X theta* + w with an s-sparse ground truth, rows
of X drawn from a stationary AR(1) process (stationary variance
1/(1 - phi^2), correlation phi^|j-k|), and Gaussian noise w ~ N(0, sigma^2 I).
The realized noise vector is kept on the Dataset so diagnostics that need
max_i ||w_i^T X_i||_inf can recompute it after partitioning.

CSV convention: column 0 is y, columns 1..d are the features; an optional
header row is auto-detected by a non-numeric first row.  Floats are written
with 17 significant digits so write -> read round-trips exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataFormatError


@dataclass
class GroundTruth:
    """s-sparse parameter vector with its support."""

    theta: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        nz = np.flatnonzero(self.theta)
        if sorted(nz.tolist()) != sorted(np.asarray(self.support).tolist()):
            raise ConfigError("support does not match nonzero entries")

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    @property
    def s(self) -> int:
        return len(self.support)

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.theta).sum())


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    noise_sigma: float
    provenance: str
    noise: np.ndarray | None = None

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise ConfigError("row count of X must equal length of y")

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass
class Shard:
    """One agent's data portion (and its slice of the noise, if recorded)."""

    X: np.ndarray
    y: np.ndarray
    noise: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass
class AgentShards:
    shards: list

    @property
    def m(self) -> int:
        return len(self.shards)

    @property
    def n(self) -> int:
        return self.shards[0].n

    @property
    def d(self) -> int:
        return self.shards[0].d

    @property
    def N(self) -> int:
        return self.m * self.n

    def reassemble(self):
        X = np.vstack([sh.X for sh in self.shards])
        y = np.concatenate([sh.y for sh in self.shards])
        return X, y

    def max_noise_design_inf(self) -> float:
        """max_i ||X_i^T w_i||_inf over agents; requires recorded noise."""
        if any(sh.noise is None for sh in self.shards):
            raise ConfigError("shards carry no noise record")
        return max(float(np.abs(sh.X.T @ sh.noise).max()) for sh in self.shards)


def default_sparsity(d: int) -> int:
    """ceil(log d), natural log; the default when s is not specified."""
    return max(1, math.ceil(math.log(d)))


def gen_sparse_truth(d: int, s: int, seed=None) -> GroundTruth:
    """Standard Gaussian d-vector with the d-s smallest magnitudes zeroed."""
    if not (1 <= s <= d):
        raise ConfigError(f"need 1 <= s <= d, got s={s}, d={d}")
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(d)
    order = np.argsort(np.abs(theta), kind="stable")
    theta[order[: d - s]] = 0.0
    return GroundTruth(theta=theta, support=np.sort(order[d - s:]))


def gen_ar_design(N: int, d: int, phi: float = 0.25, seed=None) -> np.ndarray:
    """Rows are independent stationary AR(1) paths across the d coordinates.

    x_1 = z_1 / sqrt(1 - phi^2), x_{t+1} = phi x_t + z_{t+1} with i.i.d.
    standard normal innovations, so every column has variance 1/(1 - phi^2)
    and corr(x_j, x_k) = phi^|j-k|.
    """
    if N < 1 or d < 2:
        raise ConfigError("need N >= 1 and d >= 2")
    if not abs(phi) < 1:
        raise ConfigError("need |phi| < 1")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((N, d))
    X = np.empty((N, d))
    X[:, 0] = Z[:, 0] / math.sqrt(1.0 - phi * phi)
    for t in range(1, d):
        X[:, t] = phi * X[:, t - 1] + Z[:, t]
    return X


def ar_covariance(d: int, phi: float = 0.25) -> np.ndarray:
    """Population covariance of the AR(1) design: phi^|j-k| / (1 - phi^2)."""
    idx = np.arange(d)
    return phi ** np.abs(idx[:, None] - idx[None, :]) / (1.0 - phi * phi)


def gen_observations(X: np.ndarray, truth: GroundTruth, sigma: float,
                     seed=None) -> Dataset:
    """y = X theta* + w with w ~ N(0, sigma^2 I)."""
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    if X.shape[1] != truth.d:
        raise ConfigError("design width does not match truth dimension")
    rng = np.random.default_rng(seed)
    w = sigma * rng.standard_normal(X.shape[0]) if sigma > 0 else np.zeros(X.shape[0])
    y = X @ truth.theta + w
    return Dataset(X=X, y=y, noise_sigma=float(sigma),
                   provenance=f"synthetic(seed={seed})", noise=w)


def partition(ds: Dataset, m: int) -> AgentShards:
    """Contiguous row blocks of size n = N/m, matching stacked notation."""
    if m < 1 or ds.N % m != 0:
        raise ConfigError(f"m={m} must divide N={ds.N}")
    n = ds.N // m
    shards = []
    for i in range(m):
        sl = slice(i * n, (i + 1) * n)
        noise_i = ds.noise[sl] if ds.noise is not None else None
        shards.append(Shard(X=ds.X[sl], y=ds.y[sl], noise=noise_i))
    return AgentShards(shards=shards)


def train_test_split(ds: Dataset, n_test: int, seed=None):
    """Split by a seeded permutation into (train, test)."""
    if not (0 < n_test < ds.N):
        raise ConfigError(f"need 0 < n_test < N={ds.N}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.N)
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    mk = lambda idx, tag: Dataset(
        X=ds.X[idx], y=ds.y[idx], noise_sigma=ds.noise_sigma,
        provenance=f"{ds.provenance}|{tag}",
        noise=ds.noise[idx] if ds.noise is not None else None)
    return mk(train_idx, "train"), mk(test_idx, "test")


def _parse_row(row, line_no):
    try:
        return [float(cell) for cell in row]
    except ValueError as exc:
        raise DataFormatError(f"non-numeric cell on line {line_no}: {exc}") from exc


def load_csv(path) -> Dataset:
    """Read a dataset CSV (column 0 = y, columns 1..d = X)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1  # header row
    if start == len(rows):
        raise DataFormatError(f"{path}: no data rows")
    width = len(rows[start])
    if width < 2:
        raise DataFormatError(f"{path}: need at least two columns (y, X)")
    data = []
    for k, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DataFormatError(f"{path}: ragged row on line {k}")
        data.append(_parse_row(row, k))
    arr = np.asarray(data)
    return Dataset(X=arr[:, 1:], y=arr[:, 0], noise_sigma=0.0,
                   provenance=f"csv({path})")


def write_csv(ds: Dataset, path, header: bool = True):
    """Write a dataset CSV with 17 significant digits per value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(["y"] + [f"x{j + 1}" for j in range(ds.d)]) + "\n")
        for i in range(ds.N):
            cells = [f"{ds.y[i]:.17g}"] + [f"{v:.17g}" for v in ds.X[i]]
            fh.write(",".join(cells) + "\n")
