"""Network topologies and consensus-enforcing gossip matrices.

Agents sit on the nodes of an undirected graph and mix their iterates with a
symmetric stochastic matrix W compliant with the graph: w_ii > 0, w_ij > 0
exactly on edges, rows summing to one.  The scalar

    rho = max{|lambda_2(W)|, |lambda_min(W)|}

measures how fast the network mixes information (smaller is faster); it is 0
for uniform averaging and tends to 1 for weakly connected graphs.

Nodes are indexed 0..m-1 internally; text exports use 1-based labels.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DisconnectedGraphError, NumericalError

TOPOLOGY_KINDS = ("complete", "star", "path", "grid2d", "erdos_renyi")

# Cap on re-draws of a disconnected Erdos-Renyi sample before giving up.
_ER_MAX_RESAMPLES = 100


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on m nodes."""

    m: int
    edges: frozenset
    kind: str
    p: float | None = None

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ConfigError(f"self-loop at node {i}")
            if not (0 <= i < j < self.m):
                raise ConfigError(f"edge ({i},{j}) out of range for m={self.m}")

    @property
    def connected(self) -> bool:
        return _bfs_connected(self.m, self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.m, self.m))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a


def _bfs_connected(m: int, edges) -> bool:
    if m <= 1:
        return True
    nbrs: list[list[int]] = [[] for _ in range(m)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == m


@dataclass
class GossipMatrix:
    """Symmetric stochastic mixing matrix with cached spectral quantities."""

    W: np.ndarray
    rho: float
    lambda_min: float = field(default=np.nan)

    @classmethod
    def from_matrix(cls, W: np.ndarray) -> "GossipMatrix":
        """Wrap a raw matrix, validating symmetry/stochasticity."""
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ConfigError("gossip matrix must be square")
        if np.max(np.abs(W - W.T)) > 1e-12:
            raise ConfigError("gossip matrix must be symmetric")
        if np.max(np.abs(W.sum(axis=1) - 1.0)) > 1e-12:
            raise ConfigError("gossip matrix rows must sum to 1")
        eigs = _eigvalsh(W)
        return cls(W=W, rho=_rho_from_eigs(eigs), lambda_min=float(eigs[0]))

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def mixing(self) -> bool:
        """False for non-mixing matrices (rho >= 1, disconnected support)."""
        return self.rho < 1.0

    def validate_against(self, g: Graph, tol: float = 1e-12):
        """Check compliance with the graph: w_ij > 0 iff {i,j} is an edge."""
        W = self.W
        if W.shape != (g.m, g.m):
            raise ConfigError("matrix size does not match graph")
        edge = g.adjacency() > 0
        off = ~np.eye(g.m, dtype=bool)
        if np.any(W[edge] <= 0):
            raise ConfigError("non-positive weight on a graph edge")
        if np.any(np.abs(W[off & ~edge]) > tol):
            raise ConfigError("non-zero weight off the graph edges")
        if np.any(np.diag(W) <= 0):
            raise ConfigError("diagonal weights must be positive")


def _eigvalsh(W: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(W)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - hardware dependent
        raise NumericalError(f"eigensolver failed: {exc}") from exc

def _rho_from_eigs(eigs: np.ndarray) -> float:
    # eigvalsh returns ascending order; drop the single Perron eigenvalue 1.
    if len(eigs) <= 1:
        return 0.0
    return float(max(abs(eigs[-2]), abs(eigs[0])))


def spectral_gap(W: np.ndarray | GossipMatrix) -> float:
    """max{|lambda_2|, |lambda_min|} of a symmetric stochastic matrix.

    Stored back into the GossipMatrix when one is passed.  Equals 1 for the
    mixing matrix of a disconnected graph and 0 for uniform averaging.
    """
    if isinstance(W, GossipMatrix):
        eigs = _eigvalsh(W.W)
        W.rho = _rho_from_eigs(eigs)
        W.lambda_min = float(eigs[0])
        return W.rho
    return _rho_from_eigs(_eigvalsh(np.asarray(W, dtype=float)))


def build_topology(kind: str, m: int, p: float | None = None,
                   seed: int | None = None) -> Graph:
    """Construct a named topology on m nodes.

    Deterministic kinds ignore the seed.  Erdos-Renyi includes each edge
    independently with probability p from the seeded stream and redraws (with
    fresh sub-seeds) until the sample is connected, raising after
    100 attempts.
    """
    if m < 1:
        raise ConfigError("m must be >= 1")
    if kind == "erdos_renyi":
        if p is None or not (0.0 < p <= 1.0):
            raise ConfigError("erdos_renyi requires p in (0, 1]")
        return _erdos_renyi(m, p, seed)
    if p is not None:
        raise ConfigError(f"p is only valid for erdos_renyi, got kind={kind!r}")
    if kind == "complete":
        edges = {(i, j) for i in range(m) for j in range(i + 1, m)}
    elif kind == "star":
        edges = {(0, j) for j in range(1, m)}
    elif kind == "path":
        edges = {(i, i + 1) for i in range(m - 1)}
    elif kind == "grid2d":
        side = math.isqrt(m)
        if side * side != m:
            raise ConfigError(f"grid2d requires a perfect-square m, got {m}")
        edges = set()
        for r in range(side):
            for c in range(side):
                u = r * side + c
                if c + 1 < side:
                    edges.add((u, u + 1))
                if r + 1 < side:
                    edges.add((u, u + side))
    else:
        raise ConfigError(f"unknown topology kind {kind!r}")
    return Graph(m=m, edges=frozenset(edges), kind=kind)


def _erdos_renyi(m: int, p: float, seed: int | None) -> Graph:
    root = np.random.SeedSequence(seed)
    for sub in root.spawn(_ER_MAX_RESAMPLES):
        rng = np.random.default_rng(sub)
        draws = rng.random(m * (m - 1) // 2)
        pairs = ((i, j) for i in range(m) for j in range(i + 1, m))
        edges = frozenset(e for e, u in zip(pairs, draws) if u < p)
        g = Graph(m=m, edges=edges, kind="erdos_renyi", p=p)
        if g.connected:
            return g
    raise ConfigError(
        f"no connected G({m},{p}) sample in {_ER_MAX_RESAMPLES} attempts")


def _weights_from_rule(g: Graph, denom) -> GossipMatrix:
    if not g.connected:
        raise DisconnectedGraphError("weight rules require a connected graph")
    deg = g.degrees()
    W = np.zeros((g.m, g.m))
    for i, j in g.edges:
        W[i, j] = W[j, i] = 1.0 / denom(max(deg[i], deg[j]))
    for i in range(g.m):
        W[i, i] = 1.0 - W[i].sum()
    eigs = _eigvalsh(W)
    return GossipMatrix(W=W, rho=_rho_from_eigs(eigs), lambda_min=float(eigs[0]))


def metropolis_weights(g: Graph) -> GossipMatrix:
    """Metropolis-Hastings rule: w_ij = 1/(1 + max(deg_i, deg_j))."""
    return _weights_from_rule(g, lambda d: 1 + d)


def lazy_metropolis_weights(g: Graph) -> GossipMatrix:
    """Lazy Metropolis rule: w_ij = 1/(2 max(deg_i, deg_j)); lambda_min >= 0."""
    return _weights_from_rule(g, lambda d: 2 * d)


def uniform_average_matrix(m: int) -> GossipMatrix:
    """W = 11^T/m (complete or star-with-relay modeling); rho = 0."""
    if m < 1:
        raise ConfigError("m must be >= 1")
    W = np.full((m, m), 1.0 / m)
    return GossipMatrix(W=W, rho=0.0, lambda_min=1.0 if m == 1 else 0.0)


def consensus_quadratic(blocks: np.ndarray, W: np.ndarray) -> float:
    """theta^T ((I - W) x I) theta for stacked blocks of shape (m, d).

    Zero exactly on consensual stacks; positive otherwise (connected graph).
    """
    return float(np.sum(blocks * (blocks - W @ blocks)))


def export_edge_list(g: Graph, path):
    """Write one '<i> <j>' pair per line, 1-based node labels."""
    lines = [f"{i + 1} {j + 1}" for i, j in sorted(g.edges)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def export_gossip_csv(w: GossipMatrix, path):
    """Dense CSV dump of W for debugging."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in w.W:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
