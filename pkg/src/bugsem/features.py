"""Ground-truth bug features: potentially vulnerable statements and buggy paths.

PVS extraction walks the syntax tree for trigger expressions (risky calls,
array/pointer operators, arithmetic operators) and collects either every
terminal under the triggered expression (full mode, versions v1/v2) or only
the characteristic tokens (abstracted mode, v3).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

from . import cgrammar
from .astcore import Ast, SourceFunction, enclosing_terminated_statement, parent_map, parse, tokens_on_lines
from .errors import EmptyLabelClass, UnparseableSource

log = logging.getLogger(__name__)

V1_CALL_NAMES = frozenset({
    "malloc", "calloc", "realloc", "aligned_alloc", "free",
    "gets", "scanf", "strcpy", "strcat",
})

V2_CALL_NAMES = frozenset({
    "malloc", "calloc", "realloc", "aligned_alloc",
    "kalloc", "kcalloc", "krealloc",
    "valloc", "vcalloc", "vrealloc",
    "free", "kfree", "free_sized", "free_aligned_sized",
    "gets", "puts", "scanf", "sprintf",
    "strcpy", "strncpy", "strlen", "strcat", "strncat",
})

V1_OPERATORS = frozenset({"+", "-", "*", "/", "%"})

V2_OPERATORS = frozenset({
    "+", "+=", "++", "-", "-=", "--", "*", "*=", "/", "/=", "%", "%=",
})


@dataclass(frozen=True)
class PvsRuleSet:
    version: str
    call_names: frozenset[str]
    operators: frozenset[str]
    subscript: bool = True
    pointer_deref: bool = True
    field_arrow: bool = True
    abstract: bool = False

    @classmethod
    def v1(cls) -> "PvsRuleSet":
        return cls("v1", V1_CALL_NAMES, V1_OPERATORS)

    @classmethod
    def v2(cls) -> "PvsRuleSet":
        return cls("v2", V2_CALL_NAMES, V2_OPERATORS)

    @classmethod
    def v3(cls) -> "PvsRuleSet":
        return cls("v3", V2_CALL_NAMES, V2_OPERATORS, abstract=True)

    @classmethod
    def named(cls, version: str) -> "PvsRuleSet":
        try:
            return {"v1": cls.v1, "v2": cls.v2, "v3": cls.v3}[version.lower()]()
        except KeyError:
            raise ValueError(f"unknown rule version: {version!r}") from None


def load_rules(path) -> PvsRuleSet:
    """Load a rule set from JSON so the trigger lists can be extended."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    structural = raw.get("structural", {})
    return PvsRuleSet(
        version=raw["version"],
        call_names=frozenset(raw.get("call_names", ())),
        operators=frozenset(raw.get("operators", ())),
        subscript=bool(structural.get("subscript", True)),
        pointer_deref=bool(structural.get("pointer_deref", True)),
        field_arrow=bool(structural.get("field_arrow", True)),
        abstract=bool(raw.get("abstract", False)),
    )


def save_rules(rules: PvsRuleSet, path) -> None:
    payload = {
        "version": rules.version,
        "call_names": sorted(rules.call_names),
        "operators": sorted(rules.operators),
        "structural": {
            "subscript": rules.subscript,
            "pointer_deref": rules.pointer_deref,
            "field_arrow": rules.field_arrow,
        },
        "abstract": rules.abstract,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class BugFeatureSet:
    """Token indices forming one bug feature: a PVS set or one buggy path."""

    kind: str                      # "pvs" | "buggy_path"
    tokens: tuple[int, ...]        # sorted for pvs; source order for paths
    path_id: int | None = None

    def __post_init__(self):
        if self.kind == "pvs" and self.path_id is not None:
            raise ValueError("pvs feature sets carry no path_id")

    @property
    def token_set(self) -> frozenset[int]:
        return frozenset(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


# --- trigger detection --------------------------------------------------------

_OPERATOR_EXPR_KINDS = frozenset({
    "binary_expression", "unary_expression", "update_expression",
    "assignment_expression",
})


def _operator_leaf(node: cgrammar.Node):
    """The operator token leaf that characterizes an expression node."""
    for child in node.children:
        if child.is_leaf and child.kind == "operator":
            return child
    return None


def _call_name_leaf(node: cgrammar.Node):
    """Callee identifier leaf for a plain (non-member) call, else None."""
    if not node.children:
        return None
    callee = node.children[0]
    if callee.is_leaf and callee.kind == "identifier":
        return callee
    return None


def _trigger_tokens(ast: Ast, node: cgrammar.Node, rules: PvsRuleSet):
    """Abstracted token indices when ``node`` triggers under ``rules``, else None."""
    kind = node.kind
    if kind == "call_expression":
        name = _call_name_leaf(node)
        if name is not None and ast.terminals[name.token_index].text in rules.call_names:
            return [name.token_index]
        return None
    if kind == "subscript_expression" and rules.subscript:
        brackets = [c.token_index for c in node.children
                    if c.is_leaf and ast.terminals[c.token_index].text in ("[", "]")]
        return brackets or None
    if kind == "field_expression" and rules.field_arrow:
        op = _operator_leaf(node)
        if op is not None and ast.terminals[op.token_index].text == "->":
            return [op.token_index]
        return None
    if kind == "pointer_expression" and rules.pointer_deref:
        op = _operator_leaf(node)
        return [op.token_index] if op is not None else None
    if kind in _OPERATOR_EXPR_KINDS:
        op = _operator_leaf(node)
        if op is not None and ast.terminals[op.token_index].text in rules.operators:
            return [op.token_index]
        return None
    return None


def abstract_expression(ast: Ast, node: cgrammar.Node) -> set[int]:
    """Characteristic token indices of a triggered expression.

    Calls keep only the callee name, operator expressions only the operator,
    subscripts only the brackets, deref/arrow only the operator.
    """
    rules = PvsRuleSet.v3()
    tokens = _trigger_tokens(ast, node, rules)
    if tokens is None:
        # fall back to the raw operator/name leaf even for non-listed triggers
        if node.kind == "call_expression":
            name = _call_name_leaf(node)
            return {name.token_index} if name is not None else set()
        op = _operator_leaf(node)
        return {op.token_index} if op is not None else set()
    return set(tokens)


def extract_pvs(ast: Ast, rules: PvsRuleSet, include_terminator: bool = True) -> BugFeatureSet:
    """All tokens marked potentially vulnerable under ``rules``.

    Full mode (v1/v2) takes every terminal under each triggered expression
    plus the trailing ';' of its enclosing statement; abstracted mode (v3)
    keeps only the characteristic tokens.  Subtree contributions are handled
    as contiguous token intervals so heavily nested expressions stay linear.
    """
    intervals: list[tuple[int, int]] = []
    parents = parent_map(ast.root)
    ascent_cache: dict = {}
    for node in ast.root.walk():
        if node.is_leaf:
            continue
        abstracted = _trigger_tokens(ast, node, rules)
        if abstracted is None:
            continue
        if rules.abstract:
            intervals.extend((idx, idx) for idx in abstracted)
            continue
        if node.first_token is not None:
            intervals.append((node.first_token, node.last_token))
        if include_terminator:
            stmt = enclosing_terminated_statement(ast, node, parents, ascent_cache)
            if stmt is not None and stmt.last_token is not None \
                    and ast.terminals[stmt.last_token].text == ";":
                intervals.append((stmt.last_token, stmt.last_token))
    return BugFeatureSet(kind="pvs", tokens=_merge_intervals(intervals))


def _merge_intervals(intervals) -> tuple[int, ...]:
    """Sorted, duplicate-free indices covered by the (inclusive) intervals."""
    selected: list[int] = []
    end = -1
    for start, stop in sorted(intervals):
        for idx in range(max(start, end + 1), stop + 1):
            selected.append(idx)
        end = max(end, stop)
    return tuple(selected)


def extract_buggy_paths(ast: Ast, fn: SourceFunction) -> list[BugFeatureSet]:
    """One ordered token sequence per analyzer trace; duplicates kept."""
    paths = []
    for ordinal, trace in enumerate(fn.bug_line_traces):
        indices = tokens_on_lines(ast, set(trace))
        paths.append(BugFeatureSet(kind="buggy_path", tokens=tuple(indices), path_id=ordinal))
    return paths


@dataclass(frozen=True)
class PvsStats:
    mean_vulnerable: float
    mean_non_vulnerable: float
    ratio: float
    n_vulnerable: int
    n_non_vulnerable: int
    n_skipped: int


def pvs_statistics(functions, rules: PvsRuleSet, include_terminator: bool = True) -> PvsStats:
    """Mean token-level PVS count per label and their vul:non-vul ratio."""
    counts = {0: [], 1: []}
    skipped = 0
    for fn in functions:
        try:
            ast = parse(fn.code)
        except UnparseableSource:
            log.warning("skipping unparseable example %s", fn.id)
            skipped += 1
            continue
        counts[fn.label].append(len(extract_pvs(ast, rules, include_terminator)))
    for label in (0, 1):
        if not counts[label]:
            raise EmptyLabelClass(f"no examples with label {label}")
    mean_vul = sum(counts[1]) / len(counts[1])
    mean_nonvul = sum(counts[0]) / len(counts[0])
    ratio = math.inf if mean_nonvul == 0 else mean_vul / mean_nonvul
    return PvsStats(
        mean_vulnerable=mean_vul,
        mean_non_vulnerable=mean_nonvul,
        ratio=ratio,
        n_vulnerable=len(counts[1]),
        n_non_vulnerable=len(counts[0]),
        n_skipped=skipped,
    )
