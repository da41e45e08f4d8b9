"""Alignment scores between model-important token sets and bug feature sets."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import BothEmpty, NoHighAttention
from .tokenalign import AstMatrix, TokenAlignment, aggregate_attention, aggregate_attribution

log = logging.getLogger(__name__)

METRIC_KINDS = (
    "interpret", "attention", "interaction", "pair_proportion",
    "joint_prob", "chain", "chain_coverage", "components",
)

ATTRIBUTION_TOOLS = ("Saliency", "InputXGradient", "DeepLift", "SHAP")


@dataclass(frozen=True)
class AlignmentRecord:
    example_id: str
    metric: str
    score: float
    k: int = 0
    tool: Optional[str] = None
    layer: Optional[int] = None
    head: Optional[int] = None
    path_id: Optional[int] = None


def iou(m: Iterable[int], b: Iterable[int]) -> float:
    """Intersection over union of two token-index sets."""
    m = set(m)
    b = set(b)
    union = m | b
    if not union:
        raise BothEmpty("IoU of two empty sets")
    return len(m & b) / len(union)


def top_k_tokens(scores: Sequence[float], k: int) -> set[int]:
    """Indices of the k highest scores; ties broken by ascending index."""
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for {n} scored tokens")
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return set(order[:k])


def top_k_incident_tokens(matrix: np.ndarray, k: int) -> list[int]:
    """Tokens incident to the highest-scoring cells, insertion order.

    Cells are visited by descending score with ties in ascending (row, col);
    each cell contributes its row endpoint then its column endpoint.  When
    the final cell overshoots k, the earliest-inserted k tokens are kept.
    """
    matrix = np.asarray(matrix, dtype=float)
    m = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != m:
        raise ValueError(f"matrix must be square, got {matrix.shape}")
    if k < 1 or k > m:
        raise ValueError(f"k={k} out of range for {m} tokens")
    flat = matrix.ravel()
    order = np.argsort(-flat, kind="stable")   # stable keeps (row, col) ascending on ties
    chosen: list[int] = []
    seen: set[int] = set()
    for cell in order:
        r, c = divmod(int(cell), m)
        for endpoint in (r, c):
            if endpoint not in seen:
                seen.add(endpoint)
                chosen.append(endpoint)
        if len(chosen) >= k:
            break
    return chosen[:k]


def restricted_top_k(scores: np.ndarray, covered: np.ndarray, k: int) -> set[int]:
    """top_k_tokens over the covered terminals only, in original index space."""
    covered_indices = np.flatnonzero(covered)
    ranked = sorted(covered_indices, key=lambda i: (-scores[i], i))
    return set(int(i) for i in ranked[:k])


def effective_bug_set(b: Iterable[int], covered: np.ndarray) -> set[int]:
    """Bug tokens the model actually saw; the rest fell past the context."""
    return {i for i in b if covered[i]}


def alignment_interpret(attributions: Mapping[str, Sequence[float]],
                        align: TokenAlignment,
                        b: Iterable[int],
                        tools: Sequence[str] = ATTRIBUTION_TOOLS,
                        k: Optional[int] = None):
    """Per-tool IoU of top-k attributed terminals vs B, plus the tool mean.

    k defaults to |B| restricted to covered terminals; a fixed k is clipped
    to the covered count.  Returns (per_tool, mean_score, k).  Tools absent
    from the dump are skipped with a warning; raises BothEmpty when no bug
    token was covered.
    """
    per_tool: dict[str, float] = {}
    b = set(b)
    if not b:
        raise BothEmpty("bug feature set is empty")
    used_k = None
    for tool in tools:
        if tool not in attributions:
            log.warning("attribution tool %s missing from dump; skipped", tool)
            continue
        scores, covered = aggregate_attribution(attributions[tool], align)
        b_eff = effective_bug_set(b, covered)
        if not b_eff:
            raise BothEmpty("no bug token is covered by the model input")
        used_k = min(len(b_eff) if k is None else k, int(covered.sum()))
        m = restricted_top_k(scores, covered, used_k)
        per_tool[tool] = iou(m, b_eff)
    if not per_tool:
        raise ValueError("no attribution tool available in the dump")
    mean_score = sum(per_tool.values()) / len(per_tool)
    return per_tool, mean_score, used_k


def alignment_attention(attention: np.ndarray,
                        align: TokenAlignment,
                        b: Iterable[int],
                        reduce: str = "mean",
                        k: Optional[int] = None):
    """IoU of attention-incident terminals vs B for every (layer, head).

    ``attention`` is the full (L, H, n, n) tensor; no minimum-edge threshold
    is applied.  k defaults to |B| restricted to covered terminals.  Yields
    (layer, head, k, score) tuples.
    """
    attention = np.asarray(attention, dtype=float)
    if attention.ndim != 4:
        raise ValueError(f"expected (L, H, n, n) tensor, got {attention.shape}")
    b = set(b)
    if not b:
        raise BothEmpty("bug feature set is empty")
    results = []
    n_layers, n_heads = attention.shape[:2]
    for layer in range(n_layers):
        for head in range(n_heads):
            agg = aggregate_attention(attention[layer, head], align, reduce=reduce)
            b_pos = [p for p, a in enumerate(agg.ast_indices) if a in b]
            if not b_pos:
                raise BothEmpty("no bug token is covered by the model input")
            used_k = min(len(b_pos) if k is None else k, len(agg.ast_indices))
            m_pos = top_k_incident_tokens(agg.values, used_k)
            score = iou(m_pos, b_pos)
            results.append((layer, head, used_k, score))
    return results


def pair_proportion(matrix: AstMatrix | np.ndarray, b: Iterable[int], theta: float) -> float:
    """Share of above-threshold attention cells with both endpoints in B."""
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if isinstance(matrix, AstMatrix):
        values = matrix.values
        b_positions = {p for p, a in enumerate(matrix.ast_indices) if a in set(b)}
    else:
        values = np.asarray(matrix, dtype=float)
        b_positions = set(b)
    high = np.argwhere(values > theta)
    if high.shape[0] == 0:
        raise NoHighAttention(f"no attention cell exceeds theta={theta}")
    hits = sum(1 for r, c in high if r in b_positions and c in b_positions)
    return hits / high.shape[0]


# --- aggregation ---------------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    median: float
    q1: float
    q3: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "SummaryStats":
        # hazen: linear interpolation of plotting positions, matching quartiles
        # computed by hand as medians of the sorted halves
        arr = np.asarray(values, dtype=float)
        return cls(
            n=int(arr.size),
            mean=float(arr.mean()),
            median=float(np.percentile(arr, 50, method="hazen")),
            q1=float(np.percentile(arr, 25, method="hazen")),
            q3=float(np.percentile(arr, 75, method="hazen")),
        )

    def as_dict(self) -> dict:
        return {"n": self.n, "mean": self.mean, "median": self.median,
                "q1": self.q1, "q3": self.q3}


@dataclass
class AggregatedView:
    rows: dict                    # group key -> mean score
    stats: SummaryStats


def aggregate_records(records: Sequence[AlignmentRecord],
                      head_reduce: str = "mean") -> dict[str, AggregatedView]:
    """Summarize records as per-example and per-head views.

    The per-example view reduces all (layer, head, path) records of an
    example with ``head_reduce`` (mean or max); the per-head view averages
    each (layer, head) over all examples.  Box-plot statistics (mean, median,
    quartiles) are computed over each view's values.
    """
    if not records:
        raise ValueError("no records to aggregate")
    if head_reduce not in ("mean", "max"):
        raise ValueError(f"head_reduce must be mean or max, got {head_reduce!r}")

    by_example: dict[str, list[float]] = {}
    by_head: dict[tuple, list[float]] = {}
    for rec in records:
        by_example.setdefault(rec.example_id, []).append(rec.score)
        by_head.setdefault((rec.layer, rec.head), []).append(rec.score)

    reduce_fn = max if head_reduce == "max" else (lambda xs: sum(xs) / len(xs))
    example_rows = {k: reduce_fn(v) for k, v in sorted(by_example.items())}
    head_rows = {k: sum(v) / len(v)
                 for k, v in sorted(by_head.items(), key=lambda kv: (
                     (-1 if kv[0][0] is None else kv[0][0]),
                     (-1 if kv[0][1] is None else kv[0][1])))}

    return {
        "per_example": AggregatedView(example_rows, SummaryStats.of(list(example_rows.values()))),
        "per_head": AggregatedView(head_rows, SummaryStats.of(list(head_rows.values()))),
    }
