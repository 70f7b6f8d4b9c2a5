"""Weighted digraphs, Laplacians, and eigenvector centrality.

The weight convention is "row i lists who influences agent i": ``weights[i, j]``
is the strength of the direct influence of agent j on agent i, and a zero
entry means the edge is absent.  All matrices are dense; the library targets
networks of at most a few hundred nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class NotStronglyConnectedError(ValueError):
    """The operation requires a strongly connected graph."""


class ZeroRowError(ValueError):
    """Row normalization requires every agent to have at least one in-edge."""


def _as_weight_matrix(weights) -> np.ndarray:
    w = np.array(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
        raise ValueError(f"weight matrix must be square and non-empty, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weight matrix entries must be finite")
    if np.any(w < 0):
        raise ValueError("weight matrix entries must be nonnegative")
    return w


@dataclass(frozen=True)
class WeightedDigraph:
    """Finite directed weighted graph on nodes 0..n-1.

    ``weights[i, j] > 0`` exactly when the edge j -> i exists, i.e. when
    agent j influences agent i.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = _as_weight_matrix(self.weights)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class CentralityVector:
    """Positive influence weights summing to one (left Perron vector of the Laplacian)."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size == 0:
            raise ValueError("centrality must be a non-empty vector")
        if np.any(mu <= 0):
            raise ValueError("centrality entries must be strictly positive")
        if abs(mu.sum() - 1.0) > 1e-12:
            raise ValueError(f"centrality must sum to 1, got {mu.sum()!r}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mu, dtype=dtype)

    def __len__(self) -> int:
        return self.mu.size

    def __getitem__(self, idx):
        return self.mu[idx]


def from_edges(
    edges: Iterable[Sequence],
    n: int | None = None,
    undirected: bool = False,
    self_loops: float = 0.0,
) -> WeightedDigraph:
    """Build a graph from 1-indexed ``(from, to[, weight])`` triples.

    Node ids are 1-indexed to match figure and config-file conventions.
    ``undirected=True`` inserts both directions of every edge;
    ``self_loops`` > 0 adds a uniform self-loop of that weight to all nodes.
    """
    edges = [tuple(e) for e in edges]
    if n is None:
        if not edges:
            raise ValueError("cannot infer node count from an empty edge list")
        n = max(max(e[0], e[1]) for e in edges)
    w = np.zeros((n, n))
    for e in edges:
        if len(e) == 2:
            u, v, weight = e[0], e[1], 1.0
        elif len(e) == 3:
            u, v, weight = e
        else:
            raise ValueError(f"edge must be (from, to) or (from, to, weight), got {e}")
        if not (1 <= u <= n and 1 <= v <= n):
            raise ValueError(f"edge {e} references a node outside 1..{n}")
        if weight <= 0:
            raise ValueError(f"edge {e} must have positive weight")
        # (u, v) means u influences v: row v, column u
        w[v - 1, u - 1] = weight
        if undirected:
            w[u - 1, v - 1] = weight
    if self_loops > 0:
        idx = np.arange(n)
        w[idx, idx] = self_loops
    return WeightedDigraph(w)


def _reachable_from(adj: np.ndarray, start: int) -> np.ndarray:
    """Boolean reachability from ``start`` over positive entries of ``adj``.

    ``adj[i, j]`` is read as an edge j -> i, so reachability from a node
    follows columns.
    """
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        j = stack.pop()
        for i in np.nonzero(adj[:, j] > 0)[0]:
            if not seen[i]:
                seen[i] = True
                stack.append(int(i))
    return seen


def is_strongly_connected(g: WeightedDigraph) -> bool:
    """True iff every node reaches every other node along positive-weight edges.

    Uses forward and reverse reachability from node 0, equivalent to an SCC
    decomposition having a single component.
    """
    if g.n == 1:
        return True
    forward = _reachable_from(g.weights, 0)
    backward = _reachable_from(g.weights.T, 0)
    return bool(forward.all() and backward.all())


def has_self_loops(g: WeightedDigraph) -> bool:
    """True iff every node carries a positive self-loop weight."""
    return bool(np.all(np.diag(g.weights) > 0))


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """Weighted Laplacian ``diag(W 1) - W`` with zero row sums.

    Self-loop weights cancel in the Laplacian.  The diagonal is nudged by a
    single one-ulp correction pass so the floating-point row sums vanish
    whenever that is representable; for non-dyadic weights a residual of at
    most one ulp of the row weight mass can remain.
    """
    a = np.array(g.weights)
    np.fill_diagonal(a, 0.0)
    lap = -a
    idx = np.arange(g.n)
    lap[idx, idx] = a.sum(axis=1)
    lap[idx, idx] -= lap.sum(axis=1)
    return lap


def row_normalize(g: WeightedDigraph) -> WeightedDigraph:
    """Divide each row of the weight matrix by its sum (rows then sum to 1)."""
    sums = g.weights.sum(axis=1)
    if np.any(sums <= 0):
        bad = int(np.nonzero(sums <= 0)[0][0])
        raise ZeroRowError(f"agent {bad + 1} has no in-edges; cannot row-normalize")
    return WeightedDigraph(g.weights / sums[:, None])


def centrality(g: WeightedDigraph) -> CentralityVector:
    """Unique positive left null vector of the Laplacian, normalized to sum 1.

    Solves L^T mu = 0 with the constraint 1^T mu = 1 appended as an extra
    least-squares row; for strongly connected graphs the solution is unique,
    strictly positive, and satisfies ``||L^T mu||_inf <= 1e-10``.
    """
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError(
            "centrality is only unique and positive for strongly connected graphs"
        )
    lap = laplacian(g)
    system = np.vstack([lap.T, np.ones(g.n)])
    rhs = np.zeros(g.n + 1)
    rhs[-1] = 1.0
    mu, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    mu = mu / mu.sum()
    residual = np.max(np.abs(lap.T @ mu))
    scale = np.max(np.abs(g.weights)) or 1.0
    if residual > 1e-10 * max(1.0, scale):
        raise ArithmeticError(f"centrality solve left residual {residual:.3e}")
    return CentralityVector(mu)
