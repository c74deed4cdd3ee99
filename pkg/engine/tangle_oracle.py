"""Exhaustive ground truth for tangles on graphs with at most 20 vertices.

Vertex subsets are encoded as integer bitmasks (bit i set means vertex i is
in the set). Enumeration runs over ascending bitmasks, so every reported
witness is the lowest counterexample.
"""

import logging
from dataclasses import dataclass

import numpy as np

import config
from engine.graph import GraphError, clique_order, min_clique_weight
from models import TangleFamily

logger = logging.getLogger(__name__)


class EnumerationCapError(ValueError):
    """Raised when a graph is too large for exhaustive subset enumeration."""


@dataclass(frozen=True)
class AxiomCheck:
    passed: bool
    axiom: str = None
    witness: tuple = ()

    def __bool__(self):
        return self.passed


def _check_cap(n):
    cap = config.current().ORACLE_MAX_VERTICES
    if n > cap:
        raise EnumerationCapError(f"Exhaustive enumeration is capped at {cap} vertices, got {n}")


def mask_of(indices):
    mask = 0
    for i in indices:
        mask |= 1 << int(i)
    return mask


def indices_of(mask, n):
    return tuple(i for i in range(n) if mask >> i & 1)


def _all_masks(n):
    return np.arange(1 << n, dtype=np.int64)


def _popcounts(masks, n):
    counts = np.zeros(len(masks), dtype=np.int64)
    for i in range(n):
        counts += (masks >> i) & 1
    return counts


def kappa_table(G):
    """kappa_G for every subset of the vertex set, indexed by bitmask."""
    _check_cap(G.n)
    masks = _all_masks(G.n)
    kappa = np.zeros(len(masks))
    for i, j, w in zip(G.heads, G.tails, G.weights):
        kappa += w * (((masks >> int(i)) ^ (masks >> int(j))) & 1)
    return kappa


def low_order_separation_masks(G, k):
    kappa = kappa_table(G)
    return np.flatnonzero(kappa < k)


def low_order_separations(G, k):
    """All S with kappa_G(S) < k (both orientations), as index tuples."""
    return [indices_of(int(mask), G.n) for mask in low_order_separation_masks(G, k)]


def materialize_clique_tangle(G, W):
    """T_G(W) as an explicit family of bitmasks."""
    _check_cap(G.n)
    w_mask = mask_of(W)
    size = bin(w_mask).count('1')
    if size < 2:
        raise GraphError("A clique tangle needs |W| >= 2")
    w_W = min_clique_weight(G, list(indices_of(w_mask, G.n)), require_clique=True)
    order = clique_order(size, w_W)
    masks = _all_masks(G.n)
    kappa = kappa_table(G)
    inside = _popcounts(masks & w_mask, G.n)
    members = masks[(kappa < order) & (inside > size - inside)]
    logger.debug("T_G(W) with |W| = %d has order %.6g and %d members", size, order, len(members))
    return TangleFamily(n=G.n, order=order, members=frozenset(int(m) for m in members))


def _subset_zeta(values, n):
    """out[T] = sum of values[S] over S contained in T."""
    out = values.copy()
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return out


def _superset_zeta(values, n, sign=1):
    """out[T] = sum of values[S] over S containing T (sign=-1 inverts it)."""
    out = values.copy()
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 0, :] += sign * view[:, 1, :]
    return out


def _empty_triple(members, n):
    """Lowest (S1, S2, S3) of members with empty common intersection, or None."""
    full = (1 << n) - 1
    indicator = np.zeros(1 << n, dtype=np.int64)
    indicator[list(members)] = 1
    # pairs whose intersection is exactly T: Mobius inversion of squared superset counts
    above = _superset_zeta(indicator, n)
    pairs = _superset_zeta(above * above, n, sign=-1)
    below = _subset_zeta(indicator, n)
    complements = full ^ _all_masks(n)
    bad = np.flatnonzero((pairs > 0) & (below[complements] > 0))
    if not len(bad):
        return None
    target = int(bad[0])
    ordered = sorted(members)
    third = next(s for s in ordered if s & target == 0)
    for first in ordered:
        if first & target != target:
            continue
        for second in ordered:
            if first & second == target:
                return first, second, third
    return None


def verify_tangle_axioms(G, family):
    """Check T.0-T.3 in order and report the first violation with its witness."""
    _check_cap(G.n)
    if family.n != G.n:
        raise GraphError(f"Family universe {family.n} does not match graph size {G.n}")
    n = G.n
    full = (1 << n) - 1
    kappa = kappa_table(G)
    members = sorted(family.members)

    for mask in members:
        if not kappa[mask] < family.order:
            return AxiomCheck(False, 'T.0', (indices_of(mask, n),))

    indicator = np.zeros(1 << n, dtype=bool)
    indicator[members] = True
    masks = _all_masks(n)
    unoriented = (kappa < family.order) & (indicator == indicator[full ^ masks])
    if unoriented.any():
        return AxiomCheck(False, 'T.1', (indices_of(int(np.argmax(unoriented)), n),))

    if members:
        triple = _empty_triple(family.members, n)
        if triple is not None:
            return AxiomCheck(False, 'T.2', tuple(indices_of(m, n) for m in triple))

    for mask in members:
        if bin(mask).count('1') == 1:
            return AxiomCheck(False, 'T.3', (indices_of(mask, n),))

    return AxiomCheck(True)


def incomparable(first, second):
    """(True, S) for the lowest S in ``first`` whose complement is in ``second``."""
    if first.n != second.n:
        raise GraphError("Tangles over different universes cannot be compared")
    full = (1 << first.n) - 1
    for mask in sorted(first.members):
        if (full ^ mask) in second.members:
            return True, indices_of(mask, first.n)
    return False, None

