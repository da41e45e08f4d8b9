"""Interaction matrix: where the model's attention moves next, and how well
that movement follows buggy paths."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BothEmpty, PathTooShort, TooFewLayers
from .metrics import AlignmentRecord, SummaryStats, iou, top_k_incident_tokens
from .tokenalign import TokenAlignment, aggregate_attention

log = logging.getLogger(__name__)


@dataclass
class InteractionMatrix:
    """Row-stochastic transition estimate at AST-terminal granularity."""

    values: np.ndarray            # (m, m), rows sum to 1
    ast_indices: list[int]        # row/column -> AST terminal index

    def __post_init__(self):
        sums = self.values.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError("interaction matrix rows must sum to 1")

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def positions(self, ast_tokens: Iterable[int]) -> list[int]:
        """Matrix positions of the given AST terminals; unmapped ones dropped."""
        lookup = {a: p for p, a in enumerate(self.ast_indices)}
        return [lookup[a] for a in ast_tokens if a in lookup]


def _row_normalize(matrix: np.ndarray) -> np.ndarray:
    out = matrix.astype(float).copy()
    sums = out.sum(axis=1)
    zero = sums <= 1e-12
    if zero.any():
        out[zero] = 1.0 / out.shape[1]
        sums = out.sum(axis=1)
    return out / sums[:, None]


def build_interaction_matrix(attention: np.ndarray,
                             align: TokenAlignment,
                             reduce: str = "mean") -> InteractionMatrix:
    """Estimate transition probabilities from consecutive-layer attention.

    Heads are averaged within each layer; consecutive layer pairs are
    composed (attention out of a position at layer l followed by attention
    onward at layer l+1, i.e. a two-step move through any intermediate
    position) and summed over all pairs.  The result is aggregated to AST
    granularity and row-normalized; zero-mass rows become uniform.  No causal
    mask is applied, so both directions contribute.
    """
    attention = np.asarray(attention, dtype=float)
    if attention.ndim != 4:
        raise ValueError(f"expected (L, H, n, n) tensor, got {attention.shape}")
    n_layers = attention.shape[0]
    if n_layers < 2:
        raise TooFewLayers(f"need at least 2 layers, got {n_layers}")
    row_sums = attention.sum(axis=-1)
    deviation = np.abs(row_sums - 1.0).max()
    if deviation > 1e-3:
        log.warning("attention rows deviate from stochastic by %.3g", deviation)

    per_layer = attention.mean(axis=1)          # (L, n, n)
    n = per_layer.shape[1]
    transition = np.zeros((n, n))
    for layer in range(n_layers - 1):
        transition += per_layer[layer] @ per_layer[layer + 1]

    agg = aggregate_attention(transition, align, reduce=reduce)
    return InteractionMatrix(values=_row_normalize(agg.values), ast_indices=agg.ast_indices)


def alignment_im(im: InteractionMatrix, b: Iterable[int]):
    """IoU of the terminals incident to the top transition cells vs B."""
    b_pos = im.positions(set(b))
    if not b_pos:
        raise BothEmpty("no bug token is covered by the interaction matrix")
    k = len(b_pos)
    m_pos = top_k_incident_tokens(im.values, k)
    return iou(m_pos, b_pos), k


def _path_positions(im: InteractionMatrix, path: Sequence[int]) -> list[int]:
    """Map an AST-token path into matrix positions, collapsing repeats.

    Consecutive duplicates (several path tokens landing in one covered
    terminal) would create self-edges that inflate probabilities, so they are
    collapsed; uncovered path tokens are dropped.
    """
    lookup = {a: p for p, a in enumerate(im.ast_indices)}
    positions = []
    for tok in path:
        pos = lookup.get(tok)
        if pos is None:
            continue
        if positions and positions[-1] == pos:
            continue
        positions.append(pos)
    return positions


def path_joint_probability(im: InteractionMatrix, path: Sequence[int]) -> float:
    """Product of transition probabilities along consecutive path edges."""
    positions = _path_positions(im, path)
    if len(positions) < 2:
        raise PathTooShort(f"path has {len(positions)} usable nodes; need >= 2")
    prob = 1.0
    for a, b in zip(positions, positions[1:]):
        prob *= float(im.values[a, b])
    return prob


def top_t_cells(matrix: np.ndarray, t: int) -> set[tuple[int, int]]:
    """The t highest cells as (row, col) pairs; ties in ascending (row, col)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    m = matrix.shape[0]
    t = min(t, m * m)
    flat = matrix.ravel()
    order = np.argsort(-flat, kind="stable")[:t]
    return {divmod(int(i), m) for i in order}


def longest_chain(im: InteractionMatrix, path: Sequence[int], t: int):
    """Longest run of consecutive path edges among the top-t transitions.

    Returns (chain_length, edge_coverage); coverage counts covered edges
    anywhere along the path, contiguous or not.
    """
    positions = _path_positions(im, path)
    if len(positions) < 2:
        raise PathTooShort(f"path has {len(positions)} usable nodes; need >= 2")
    edges = list(zip(positions, positions[1:]))
    chosen = top_t_cells(im.values, t)
    present = [edge in chosen for edge in edges]
    coverage = sum(present) / len(present)
    best = run = 0
    for hit in present:
        run = run + 1 if hit else 0
        best = max(best, run)
    return best, coverage


def induced_components(im: InteractionMatrix, path: Sequence[int], t: int) -> int:
    """Connected components of the top-t transition graph over the path nodes.

    Edges are taken undirected and restricted to pairs of path nodes; fewer
    components mean the likely transitions tie the path together.
    """
    positions = _path_positions(im, path)
    if len(positions) < 2:
        raise PathTooShort(f"path has {len(positions)} usable nodes; need >= 2")
    nodes = sorted(set(positions))
    node_set = set(nodes)
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for r, c in top_t_cells(im.values, t):
        if r in node_set and c in node_set and r != c:
            ra, rb = find(r), find(c)
            if ra != rb:
                parent[ra] = rb
    return len({find(v) for v in nodes})


def default_top_t(im_size: int, path_len: int) -> int:
    return max(im_size, 2 * path_len)


def bucket_by_path_length(records: Sequence[AlignmentRecord]) -> dict[int, SummaryStats]:
    """Group joint-probability records by path node count (stored in ``k``)."""
    buckets: dict[int, list[float]] = {}
    for rec in records:
        buckets.setdefault(rec.k, []).append(rec.score)
    return {length: SummaryStats.of(scores) for length, scores in sorted(buckets.items())}
