"""Map model input (subword) tokens onto AST terminals by character overlap."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .astcore import Ast
from .errors import MisalignedDump


@dataclass(frozen=True)
class InputToken:
    index: int
    text: str
    char_span: Optional[tuple[int, int]] = None   # None for special tokens


@dataclass
class TokenAlignment:
    """ast_index[i] is the AST terminal for input token i, or None."""

    ast_index: list[Optional[int]]
    n_ast: int

    def covered_ast_indices(self) -> list[int]:
        """AST terminals hit by at least one input token, ascending."""
        return sorted({a for a in self.ast_index if a is not None})

    def covered_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_ast, dtype=bool)
        for a in self.ast_index:
            if a is not None:
                mask[a] = True
        return mask

    @classmethod
    def identity(cls, n: int, shift: int = 0, n_ast: Optional[int] = None) -> "TokenAlignment":
        """Input token i+shift maps to AST token i; tokens before shift are special."""
        idx: list[Optional[int]] = [None] * shift + list(range(n))
        return cls(ast_index=idx, n_ast=n_ast if n_ast is not None else n)


def build_alignment(ast: Ast, input_tokens: Sequence[InputToken],
                    misalignment_budget: float = 0.10) -> TokenAlignment:
    """Assign each spanned input token to the AST terminal it overlaps most.

    Ties go to the earlier AST terminal; zero-overlap tokens map to None.
    Raises MisalignedDump when more than ``misalignment_budget`` of the
    spanned tokens have no overlap at all, which indicates the dump was
    produced from different text.
    """
    starts = [t.span[0] for t in ast.terminals]
    mapping: list[Optional[int]] = []
    spanned = 0
    missed = 0
    for tok in input_tokens:
        if tok.char_span is None or tok.char_span[0] >= tok.char_span[1]:
            # no span (or the empty span some tokenizers emit for specials)
            mapping.append(None)
            continue
        spanned += 1
        s, e = tok.char_span
        best = None
        best_overlap = 0
        # first AST terminal that could overlap [s, e)
        j = bisect.bisect_right(starts, s) - 1
        if j < 0:
            j = 0
        while j < len(ast.terminals):
            ts, te = ast.terminals[j].span
            if ts >= e:
                break
            overlap = min(e, te) - max(s, ts)
            if overlap > best_overlap:
                best_overlap = overlap
                best = j
            j += 1
        if best is None:
            missed += 1
        mapping.append(best)
    if spanned and missed / spanned > misalignment_budget:
        raise MisalignedDump(
            f"{missed}/{spanned} spanned input tokens overlap no AST token")
    return TokenAlignment(ast_index=mapping, n_ast=len(ast.terminals))


def aggregate_attribution(attr: Sequence[float], align: TokenAlignment):
    """Average per-input scores into per-AST-terminal scores.

    Returns (scores, covered): terminals with no mapped input token score 0.0
    and are flagged uncovered (happens past the model's context window).
    """
    attr = np.asarray(attr, dtype=float)
    if attr.shape != (len(align.ast_index),):
        raise ValueError(
            f"attribution length {attr.shape} != input token count {len(align.ast_index)}")
    sums = np.zeros(align.n_ast)
    counts = np.zeros(align.n_ast)
    for i, a in enumerate(align.ast_index):
        if a is not None:
            sums[a] += attr[i]
            counts[a] += 1
    covered = counts > 0
    scores = np.zeros(align.n_ast)
    scores[covered] = sums[covered] / counts[covered]
    return scores, covered


@dataclass
class AstMatrix:
    """Square matrix over the covered AST terminals."""

    values: np.ndarray            # (c, c)
    ast_indices: list[int]        # row/column -> AST terminal index

    def position_of(self, ast_index: int) -> Optional[int]:
        try:
            return self.ast_indices.index(ast_index)
        except ValueError:
            return None


def aggregate_attention(att: np.ndarray, align: TokenAlignment,
                        reduce: str = "mean") -> AstMatrix:
    """Aggregate an input-token attention matrix to AST-terminal granularity.

    ``reduce='mean'`` averages each block of cells; ``reduce='mass'`` sums the
    attention mass flowing into each AST terminal (columns summed) and
    averages over the source rows only, which keeps rows comparable when AST
    terminals split into different subword counts.  Rows/columns of unmapped
    input tokens are dropped.
    """
    att = np.asarray(att, dtype=float)
    if att.ndim != 2 or att.shape[0] != att.shape[1]:
        raise ValueError(f"attention matrix must be square, got {att.shape}")
    if att.shape[0] != len(align.ast_index):
        raise ValueError(
            f"attention size {att.shape[0]} != input token count {len(align.ast_index)}")
    covered = align.covered_ast_indices()
    pos = {a: p for p, a in enumerate(covered)}
    groups: list[list[int]] = [[] for _ in covered]
    for i, a in enumerate(align.ast_index):
        if a is not None:
            groups[pos[a]].append(i)
    c = len(covered)
    out = np.zeros((c, c))
    for gi, rows in enumerate(groups):
        block_rows = att[rows]
        for gj, cols in enumerate(groups):
            block = block_rows[:, cols]
            if reduce == "mass":
                out[gi, gj] = block.sum(axis=1).mean()
            else:
                out[gi, gj] = block.mean()
    return AstMatrix(values=out, ast_indices=covered)
