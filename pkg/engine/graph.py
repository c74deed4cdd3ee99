"""Delta-neighbourhood and Gaussian-kernel graphs over a dataset."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist, squareform

from models import DeltaNeighborhood, GaussianKernel

logger = logging.getLogger(__name__)

ORDER_COEFFICIENT = 2.0 / 9.0


class GraphError(ValueError):
    """Raised for invalid vertex sets or weight models."""


class NonCliqueError(GraphError):
    """Raised when a vertex set asserted to be a clique is not one."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph on range(n); edges stored once with i < j, weights > 0.

    Kernel graphs additionally keep the dense symmetric weight matrix.
    """
    n: int
    model: object
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray
    dense: np.ndarray = None

    @property
    def edge_count(self):
        return len(self.weights)

    def weight(self, i, j):
        if i == j:
            return 0.0
        if self.dense is not None:
            return float(self.dense[i, j])
        i, j = min(i, j), max(i, j)
        hit = np.flatnonzero((self.heads == i) & (self.tails == j))
        return float(self.weights[hit[0]]) if len(hit) else 0.0

    def total_weight(self):
        return float(self.weights.sum())


def from_edges(n, edges, model=None):
    """Build a graph from explicit (i, j, weight) triples."""
    heads, tails, weights = [], [], []
    for i, j, w in edges:
        if i == j or not 0 <= min(i, j) or max(i, j) >= n:
            raise GraphError(f"Invalid edge ({i}, {j}) for a graph on {n} vertices")
        if not w > 0:
            raise GraphError(f"Edge ({i}, {j}) has non-positive weight {w}")
        heads.append(min(i, j))
        tails.append(max(i, j))
        weights.append(float(w))
    order = np.lexsort((tails, heads))
    return WeightedGraph(n=n, model=model, heads=np.array(heads, dtype=np.intp)[order],
                         tails=np.array(tails, dtype=np.intp)[order],
                         weights=np.array(weights)[order])


def build_graph(dataset, model):
    """G(D, w): delta-model edges iff |x_i - x_j| <= delta, kernel model on all pairs."""
    points = np.ascontiguousarray(dataset.points.T)
    n = len(points)
    if isinstance(model, DeltaNeighborhood):
        candidates = cKDTree(points).query_pairs(r=model.delta * (1 + 1e-9), output_type='ndarray')
        if len(candidates):
            sq = ((points[candidates[:, 0]] - points[candidates[:, 1]]) ** 2).sum(axis=1)
            candidates = candidates[sq <= model.delta ** 2]
        candidates = np.sort(candidates.reshape(-1, 2), axis=1)
        order = np.lexsort((candidates[:, 1], candidates[:, 0]))
        candidates = candidates[order]
        return WeightedGraph(n=n, model=model, heads=candidates[:, 0].astype(np.intp),
                             tails=candidates[:, 1].astype(np.intp),
                             weights=np.ones(len(candidates)))
    if isinstance(model, GaussianKernel):
        condensed = model.weight(pdist(points, 'sqeuclidean')) if n > 1 else np.zeros(0)
        condensed = np.maximum(condensed, np.finfo(float).tiny)
        heads, tails = np.triu_indices(n, k=1)
        return WeightedGraph(n=n, model=model, heads=heads, tails=tails, weights=condensed,
                             dense=squareform(condensed) if n > 1 else np.zeros((n, n)))
    raise GraphError(f"Unknown weight model {model!r}")


def vertices_in(dataset, region):
    """V_A(D): indices of the columns of D lying in the region."""
    return np.flatnonzero(region.mask(dataset.points.T))


def _indicator(G, S):
    mask = np.zeros(G.n, dtype=bool)
    S = np.asarray(S)
    if S.dtype == bool:
        if len(S) != G.n:
            raise GraphError(f"Vertex mask has length {len(S)}, graph has {G.n} vertices")
        return S.copy()
    S = S.astype(np.intp).reshape(-1)
    if len(S) and (S.min() < 0 or S.max() >= G.n):
        raise GraphError(f"Vertex index out of range for a graph on {G.n} vertices")
    mask[S] = True
    return mask


def edge_connectivity(G, S):
    """kappa_G(S): total weight of the edges with exactly one endpoint in S."""
    mask = _indicator(G, S)
    if G.dense is not None:
        return float(G.dense[np.ix_(mask, ~mask)].sum())
    return float(G.weights[mask[G.heads] != mask[G.tails]].sum())


def min_clique_weight(G, W, require_clique=False):
    """w_W: the smallest edge weight inside W, or 1 when W spans no edge."""
    mask = _indicator(G, W)
    size = int(mask.sum())
    if size <= 1:
        return 1.0
    if G.dense is not None:
        inner = G.dense[np.ix_(mask, mask)]
        return float(inner[~np.eye(size, dtype=bool)].min())
    inside = mask[G.heads] & mask[G.tails]
    count = int(inside.sum())
    if require_clique and count != size * (size - 1) // 2:
        raise NonCliqueError(f"Vertex set of size {size} spans {count} edges, not a clique")
    if count == 0:
        return 1.0
    return float(G.weights[inside].min())


@dataclass(frozen=True)
class CliqueTangleTest:
    is_tangle_nonempty: bool
    contains_S: bool
    order: float
    kappa: float


def clique_order(size, w_W):
    return ORDER_COEFFICIENT * size * size * w_W


def clique_tangle_test(G, W, S):
    """Evaluate T_G(W) membership of S: kappa(S) < (2/9)|W|^2 w_W and |S n W| > |W \\ S|."""
    w_mask = _indicator(G, W)
    s_mask = _indicator(G, S)
    w_W = min_clique_weight(G, w_mask, require_clique=True)
    size = int(w_mask.sum())
    order = clique_order(size, w_W)
    kappa = edge_connectivity(G, s_mask)
    inside = int((w_mask & s_mask).sum())
    contains = kappa < order and inside > size - inside
    return CliqueTangleTest(is_tangle_nonempty=size >= 2, contains_S=bool(contains),
                            order=order, kappa=kappa)


def dump_edge_list(G, path):
    """Write 'i j weight' per line (debugging aid)."""
    with open(path, 'w', encoding='utf-8') as f:
        for i, j, w in zip(G.heads, G.tails, G.weights):
            f.write(f"{i} {j} {w:.17g}\n")
    logger.debug("Wrote %d edges to %s", G.edge_count, path)
