"""Public AST surface: parsing, terminal tokens, whitespace normalization.

Spans of every node and terminal index into the *normalized* code, i.e. the
terminal texts joined by single spaces.  Original line/column positions are
kept on each terminal because analyzer trace lines refer to the original
layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from . import cgrammar
from .cgrammar import Node
from .errors import UnparseableSource


@dataclass(frozen=True)
class SourceFunction:
    """One function-level corpus example."""

    id: str
    code: str
    label: int                                  # 1 = vulnerable, 0 = non-vulnerable
    dataset: str = ""
    bug_line_traces: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if not self.code:
            raise ValueError(f"{self.id}: empty code")
        if self.label not in (0, 1):
            raise ValueError(f"{self.id}: label must be 0 or 1")
        for trace in self.bug_line_traces:
            if not trace:
                raise ValueError(f"{self.id}: empty trace")
            if any(line < 1 for line in trace):
                raise ValueError(f"{self.id}: trace line numbers are 1-based")


@dataclass(frozen=True)
class AstToken:
    index: int
    text: str
    span: tuple[int, int]     # half-open range into the normalized code
    line: int                 # 1-based line in the original source
    column: int               # 1-based column in the original source


@dataclass
class Ast:
    root: Node
    terminals: list[AstToken]
    normalized: str

    def node_span(self, node: Node) -> tuple[int, int]:
        """Normalized-code span covered by ``node``'s terminals."""
        if node.first_token is None or node.last_token is None:
            return (0, 0)
        return (self.terminals[node.first_token].span[0],
                self.terminals[node.last_token].span[1])

    def terminal_indices(self, node: Node) -> list[int]:
        """Indices of all terminals under ``node``, in source order."""
        if node.first_token is None or node.last_token is None:
            return []
        return list(range(node.first_token, node.last_token + 1))


@dataclass(frozen=True)
class NormalizedCode:
    text: str
    token_lines: tuple[int, ...]   # original line per terminal


def parse(code: str) -> Ast:
    """Parse one function into a tolerant syntax tree.

    Raises UnparseableSource when lexing yields no tokens at all (empty or
    comment/whitespace-only input).  Broken constructs stay in the tree as
    ``error`` nodes whose tokens are ordinary terminals.
    """
    lex_tokens, continued = cgrammar.lex_with_continuations(code)
    if not lex_tokens:
        raise UnparseableSource("no terminal tokens produced")
    root = cgrammar.parse_tokens(lex_tokens, continued)

    terminals = []
    offset = 0
    for i, tok in enumerate(lex_tokens):
        terminals.append(AstToken(
            index=i,
            text=tok.text,
            span=(offset, offset + len(tok.text)),
            line=tok.line,
            column=tok.column,
        ))
        offset += len(tok.text) + 1
    normalized = " ".join(tok.text for tok in lex_tokens)
    return Ast(root=root, terminals=terminals, normalized=normalized)


def normalize_whitespace(code: str) -> NormalizedCode:
    """Rewrite code as its terminal tokens joined by single spaces."""
    lex_tokens = cgrammar.lex(code)
    if not lex_tokens:
        raise UnparseableSource("no terminal tokens produced")
    return NormalizedCode(
        text=" ".join(tok.text for tok in lex_tokens),
        token_lines=tuple(tok.line for tok in lex_tokens),
    )


def tokens_on_lines(ast: Ast, lines: Iterable[int]) -> list[int]:
    """Terminal indices whose original line is in ``lines``, source order."""
    wanted = set(lines)
    if not wanted:
        return []
    return [t.index for t in ast.terminals if t.line in wanted]


# statement handling shared with feature extraction ---------------------------

def enclosing_terminated_statement(ast: Ast, node: Node, parents: dict,
                                   cache: dict | None = None) -> Node | None:
    """Nearest ancestor (or self) that is a ';'-terminated statement.

    Ascends from ``node`` until a terminated statement kind is found; gives up
    at any other statement boundary (loop headers, conditions, ...).  Passing
    a ``cache`` dict memoizes the ascent across calls, keeping repeated
    lookups in deep expressions linear overall.
    """
    visited = []
    current = node
    result = None
    while current is not None:
        key = id(current)
        if cache is not None and key in cache:
            result = cache[key]
            break
        visited.append(key)
        if current.kind in cgrammar.TERMINATED_STATEMENT_KINDS:
            result = current
            break
        if current.kind in cgrammar.STATEMENT_KINDS or current.kind == "translation_unit":
            break
        current = parents.get(id(current))
    if cache is not None:
        for key in visited:
            cache[key] = result
    return result


def parent_map(root: Node) -> dict:
    """id(child) -> parent for every node under ``root``."""
    parents: dict = {}
    stack = [root]
    while stack:
        node = stack.pop()
        for child in node.children:
            parents[id(child)] = node
            stack.append(child)
    return parents
