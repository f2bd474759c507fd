"""Random communication graphs: Laplacian algebra and i.i.d. graph pools.

Graphs are undirected and unweighted.  A network model holds either a fixed
pool that is sampled uniformly at every iteration, or draws a fresh random
graph per iteration.  Connectivity "in expectation" means the second-smallest
eigenvalue of the mean Laplacian is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed to converge within its iteration cap."""


def laplacian(adjacency) -> Array:
    """Graph Laplacian L = D - W of a symmetric 0/1 adjacency matrix."""
    W = np.asarray(adjacency, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.array_equal(W, W.T):
        raise ValueError("adjacency must be symmetric")
    if np.any(np.diag(W) != 0):
        raise ValueError("adjacency must have zero diagonal")
    if not np.all((W == 0) | (W == 1)):
        raise ValueError("adjacency entries must be 0 or 1")
    return np.diag(W.sum(axis=1)) - W


@dataclass(frozen=True)
class GraphSample:
    """One undirected graph with its Laplacian precomputed."""

    adjacency: Array

    def __post_init__(self):
        L = laplacian(self.adjacency)
        W = np.asarray(self.adjacency, dtype=float)
        W.setflags(write=False)
        L.setflags(write=False)
        deg = np.diag(L).copy()
        deg.setflags(write=False)
        object.__setattr__(self, "adjacency", W)
        object.__setattr__(self, "laplacian", L)
        object.__setattr__(self, "degrees", deg)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


def graph_from_edges(n: int, edges) -> GraphSample:
    W = np.zeros((n, n))
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ValueError(f"bad edge ({u}, {v}) for n={n}")
        W[u, v] = W[v, u] = 1.0
    return GraphSample(W)


def path_graph(n: int) -> GraphSample:
    return graph_from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete_graph(n: int) -> GraphSample:
    W = np.ones((n, n)) - np.eye(n)
    return GraphSample(W)


def edgeless_graph(n: int) -> GraphSample:
    return GraphSample(np.zeros((n, n)))


def lambda2(matrix, tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Second-smallest eigenvalue of a Laplacian-like matrix.

    Power iteration on the shifted matrix c*I - M restricted to the
    complement of the all-ones vector: the constant eigenvector (the known
    eigenvector of the smallest eigenvalue) is deflated by re-centering every
    iterate, so the dominant remaining mode is c - lambda2.  Stops when the
    eigenvalue residual guarantees absolute accuracy `tol`; near-degenerate
    lambda2/lambda3 pairs stop once the pair is resolved to within `tol`.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    n = M.shape[0]
    if n < 2:
        raise ValueError("need at least a 2x2 matrix for a second eigenvalue")
    shift = float(np.abs(M).sum(axis=1).max()) + 1.0  # Gershgorin bound + 1
    rng = np.random.default_rng(0x5EED)
    v = rng.standard_normal(n)
    v -= v.mean()
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = shift * v - M @ v
        w -= w.mean()
        theta = float(v @ w)
        if np.linalg.norm(w - theta * v) <= tol:
            return shift - theta
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return shift
        v = w / nw
    raise ConvergenceError(f"lambda2 power iteration did not reach tol={tol} "
                           f"within {max_iter} iterations")


@dataclass(frozen=True)
class NetworkModel:
    """Generator of i.i.d. graph samples.

    mode "fixed-pool" draws uniformly from `pool` at each iteration;
    "complete" and "single-graph" are one-graph pools; "fresh-er" ignores the
    pool and draws a fresh binomial random graph G(n, p) with p uniform over
    `p_range` at every call.
    """

    pool: tuple
    mode: str = "fixed-pool"
    n: int = 0
    p_range: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.mode not in ("fixed-pool", "complete", "single-graph", "fresh-er"):
            raise ValueError(f"unknown network mode {self.mode!r}")
        if self.mode != "fresh-er" and not self.pool:
            raise ValueError("pool must be non-empty")
        n = self.n or (self.pool[0].n if self.pool else 0)
        if any(g.n != n for g in self.pool):
            raise ValueError("all pool graphs must share the same node count")
        object.__setattr__(self, "pool", tuple(self.pool))
        object.__setattr__(self, "n", n)

    def max_degree(self) -> float:
        if self.mode == "fresh-er":
            return float(self.n - 1)
        return float(max(g.degrees.max() for g in self.pool))


def _er_adjacency(n, p, rng) -> Array:
    W = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    W[iu] = rng.random(len(iu[0])) < p
    return W + W.T


def erdos_renyi_pool(n: int, pool_size: int, p_range, seed: int = 0) -> NetworkModel:
    """Pool of independent G(n, p) samples, p drawn uniformly from p_range."""
    lo, hi = float(p_range[0]), float(p_range[1])
    if n < 2 or pool_size < 1:
        raise ValueError("need n >= 2 and pool_size >= 1")
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"invalid p range [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    pool = []
    for _ in range(pool_size):
        p = rng.uniform(lo, hi)
        pool.append(GraphSample(_er_adjacency(n, p, rng)))
    return NetworkModel(pool=tuple(pool), mode="fixed-pool", n=n, p_range=(lo, hi))


def fresh_er_network(n: int, p_range) -> NetworkModel:
    lo, hi = float(p_range[0]), float(p_range[1])
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"invalid p range [{lo}, {hi}]")
    return NetworkModel(pool=(), mode="fresh-er", n=n, p_range=(lo, hi))


def complete_network(n: int) -> NetworkModel:
    return NetworkModel(pool=(complete_graph(n),), mode="complete", n=n)


def single_graph_network(graph: GraphSample) -> NetworkModel:
    return NetworkModel(pool=(graph,), mode="single-graph", n=graph.n)


def sample_graph(model: NetworkModel, rng) -> GraphSample:
    """One i.i.d. draw, independent of all past state."""
    if model.mode == "fresh-er":
        p = rng.uniform(*model.p_range)
        return GraphSample(_er_adjacency(model.n, p, rng))
    if len(model.pool) == 1:
        return model.pool[0]
    return model.pool[int(rng.integers(len(model.pool)))]


def mean_laplacian(model: NetworkModel) -> Array:
    """Expected Laplacian of the model.

    Exact pool average in pool modes; for fresh-er the closed form
    pbar * (n*I - ones) with pbar the midpoint of the p range.
    """
    if model.mode == "fresh-er":
        n = model.n
        pbar = 0.5 * (model.p_range[0] + model.p_range[1])
        return pbar * (n * np.eye(n) - np.ones((n, n)))
    return sum(g.laplacian for g in model.pool) / len(model.pool)


@dataclass(frozen=True)
class ConnectivityCheck:
    lambda2_bar: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.lambda2_bar > self.tol


def check_connected_in_expectation(model: NetworkModel, tol: float = 1e-8) -> ConnectivityCheck:
    """Pass iff lambda2 of the mean Laplacian exceeds tol."""
    lam = lambda2(mean_laplacian(model), tol=min(tol, 1e-10) * 0.1 + 1e-12)
    return ConnectivityCheck(lambda2_bar=lam, tol=tol)


# ---------------------------------------------------------------------------
# Edge-list pool exchange format: one `u v` line per edge, graphs separated
# by `#k` headers (k = 0, 1, ...).
# ---------------------------------------------------------------------------

def save_pool(model_or_pool, path):
    pool = model_or_pool.pool if isinstance(model_or_pool, NetworkModel) else model_or_pool
    with open(path, "w") as fh:
        for k, g in enumerate(pool):
            fh.write(f"#{k}\n")
            iu, iv = np.nonzero(np.triu(g.adjacency))
            for u, v in zip(iu, iv):
                fh.write(f"{u} {v}\n")


def load_pool(path, n: int | None = None) -> tuple:
    """Read a pool back; `n` is required when trailing nodes are isolated."""
    groups = []
    edges = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                edges = []
                groups.append(edges)
            else:
                u, v = line.split()
                if edges is None:
                    raise ValueError("edge line before first '#k' header")
                edges.append((int(u), int(v)))
    if not groups:
        raise ValueError("no graphs in file")
    if n is None:
        n = 1 + max((max(u, v) for g in groups for u, v in g), default=0)
    return tuple(graph_from_edges(n, g) for g in groups)
