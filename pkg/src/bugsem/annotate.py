"""Produce PVS-annotated model inputs.

Mark mode wraps every subword token inside the PVS with begin/end marker
sentinels; prepend mode copies the PVS subwords in front of the code behind a
separator.  Both respect the model context limit, truncating from the tail of
the code while keeping trailing special tokens and never leaving an unmatched
marker.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .astcore import parse
from .errors import ModeMismatch, UnparseableSource
from .features import BugFeatureSet, PvsRuleSet, extract_pvs
from .tokenalign import InputToken, TokenAlignment

log = logging.getLogger(__name__)

MODES = ("baseline", "mark", "prepend")

DEFAULT_MARKERS = ("<vul-b>", "<vul-e>")
DEFAULT_SEPARATOR = "[SEP]"
DEFAULT_BOS = "[BOS]"
DEFAULT_EOS = "[EOS]"
CONTEXT_LIMIT = 512
PREPEND_LIMIT = 100


@dataclass
class AnnotatedExample:
    id: str
    mode: str
    tokens: list[str]
    b_extension: tuple[int, ...] = ()
    degenerate: bool = False
    # original input-token index -> position in ``tokens`` (None if dropped)
    orig_to_annotated: tuple[Optional[int], ...] = ()


def _split_specials(input_tokens: Sequence[InputToken]):
    """(leading specials, code region, trailing specials) index ranges."""
    n = len(input_tokens)
    lead = 0
    while lead < n and input_tokens[lead].char_span is None:
        lead += 1
    trail = n
    while trail > lead and input_tokens[trail - 1].char_span is None:
        trail -= 1
    return lead, trail


def _pvs_input_positions(input_tokens: Sequence[InputToken],
                         align: TokenAlignment,
                         pvs: BugFeatureSet) -> set[int]:
    wanted = pvs.token_set
    return {i for i, a in enumerate(align.ast_index) if a is not None and a in wanted}


def mark_annotate(example_id: str,
                  input_tokens: Sequence[InputToken],
                  align: TokenAlignment,
                  pvs: BugFeatureSet,
                  markers: tuple[str, str] = DEFAULT_MARKERS,
                  limit: int = CONTEXT_LIMIT) -> AnnotatedExample:
    """Wrap each PVS subword in begin/end markers and truncate to the limit."""
    begin, end = markers
    marked = _pvs_input_positions(input_tokens, align, pvs)
    lead, trail = _split_specials(input_tokens)

    tokens: list[str] = []
    origin: list[Optional[int]] = []   # original index per output slot, None for markers
    for i, tok in enumerate(input_tokens):
        if i in marked:
            tokens.extend((begin, tok.text, end))
            origin.extend((None, i, None))
        else:
            tokens.append(tok.text)
            origin.append(i)

    n_trailing = len(input_tokens) - trail
    _truncate_tail(tokens, origin, limit, n_trailing, markers)

    orig_to_annotated: list[Optional[int]] = [None] * len(input_tokens)
    for pos, orig in enumerate(origin):
        if orig is not None:
            orig_to_annotated[orig] = pos
    return AnnotatedExample(
        id=example_id,
        mode="mark",
        tokens=tokens,
        orig_to_annotated=tuple(orig_to_annotated),
    )


def _truncate_tail(tokens: list[str], origin: list[Optional[int]], limit: int,
                   n_trailing: int, markers: Optional[tuple[str, str]] = None) -> None:
    """Drop code tokens from the tail, keeping trailing specials and whole
    marker triples."""
    end = markers[1] if markers else None
    while len(tokens) > limit and len(tokens) > n_trailing:
        cut = len(tokens) - n_trailing - 1
        if cut < 0:
            break
        if end is not None and tokens[cut] == end and origin[cut] is None:
            # drop the whole (begin, token, end) triple
            del tokens[cut - 2:cut + 1]
            del origin[cut - 2:cut + 1]
        else:
            del tokens[cut]
            del origin[cut]


def prepend_annotate(example_id: str,
                     input_tokens: Sequence[InputToken],
                     align: TokenAlignment,
                     pvs: BugFeatureSet,
                     separator: str = DEFAULT_SEPARATOR,
                     limit: int = CONTEXT_LIMIT,
                     prepend_limit: int = PREPEND_LIMIT) -> AnnotatedExample:
    """Copy the PVS subwords (first ``prepend_limit``) before the code."""
    marked = _pvs_input_positions(input_tokens, align, pvs)
    lead, trail = _split_specials(input_tokens)
    block = [input_tokens[i].text for i in sorted(marked)][:prepend_limit]

    tokens: list[str] = [input_tokens[i].text for i in range(lead)]
    origin: list[Optional[int]] = list(range(lead))
    b_extension = tuple(range(len(tokens), len(tokens) + len(block)))
    tokens.extend(block)
    origin.extend([None] * len(block))
    tokens.append(separator)
    origin.append(None)
    for i in range(lead, len(input_tokens)):
        tokens.append(input_tokens[i].text)
        origin.append(i)

    n_trailing = len(input_tokens) - trail
    _truncate_tail(tokens, origin, limit, n_trailing)

    orig_to_annotated: list[Optional[int]] = [None] * len(input_tokens)
    for pos, orig in enumerate(origin):
        if orig is not None:
            orig_to_annotated[orig] = pos
    return AnnotatedExample(
        id=example_id,
        mode="prepend",
        tokens=tokens,
        b_extension=b_extension,
        degenerate=not block,
        orig_to_annotated=tuple(orig_to_annotated),
    )


def baseline_annotate(example_id: str,
                      input_tokens: Sequence[InputToken],
                      limit: int = CONTEXT_LIMIT) -> AnnotatedExample:
    """Pass tokens through unchanged, applying only the context limit."""
    lead, trail = _split_specials(input_tokens)
    tokens = [t.text for t in input_tokens]
    origin: list[Optional[int]] = list(range(len(input_tokens)))
    _truncate_tail(tokens, origin, limit, len(input_tokens) - trail)
    orig_to_annotated: list[Optional[int]] = [None] * len(input_tokens)
    for pos, orig in enumerate(origin):
        if orig is not None:
            orig_to_annotated[orig] = pos
    return AnnotatedExample(id=example_id, mode="baseline", tokens=tokens,
                            orig_to_annotated=tuple(orig_to_annotated))


def extend_bug_set_for_prepend(b_input_positions: set[int],
                               annotated: AnnotatedExample) -> set[int]:
    """B in the annotated index space: shifted in-code tokens plus the block."""
    if annotated.mode != "prepend":
        raise ModeMismatch(f"expected prepend-annotated example, got {annotated.mode}")
    extended = set(annotated.b_extension)
    for i in b_input_positions:
        if i < len(annotated.orig_to_annotated):
            pos = annotated.orig_to_annotated[i]
            if pos is not None:
                extended.add(pos)
    return extended


def pretokenized_inputs(ast, bos: str = DEFAULT_BOS, eos: str = DEFAULT_EOS):
    """AST-terminal-granularity input tokens for annotating before any model
    exists; the alignment is the identity shifted past the leading special."""
    tokens = [InputToken(0, bos, None)]
    tokens.extend(InputToken(i + 1, t.text, t.span) for i, t in enumerate(ast.terminals))
    tokens.append(InputToken(len(tokens), eos, None))
    align = TokenAlignment.identity(len(ast.terminals), shift=1)
    align.ast_index.append(None)   # trailing special
    return tokens, align


def annotate_example(example_id: str, input_tokens, align, pvs, mode: str,
                     markers=DEFAULT_MARKERS, separator=DEFAULT_SEPARATOR,
                     limit: int = CONTEXT_LIMIT,
                     prepend_limit: int = PREPEND_LIMIT) -> AnnotatedExample:
    if mode == "baseline":
        return baseline_annotate(example_id, input_tokens, limit)
    if mode == "mark":
        return mark_annotate(example_id, input_tokens, align, pvs, markers, limit)
    if mode == "prepend":
        return prepend_annotate(example_id, input_tokens, align, pvs, separator,
                                limit, prepend_limit)
    raise ValueError(f"unknown annotation mode: {mode!r}")


def emit_training_corpus(functions, mode: str, rules: PvsRuleSet, out_path,
                         include_terminator: bool = True,
                         markers=DEFAULT_MARKERS, separator=DEFAULT_SEPARATOR,
                         bos: str = DEFAULT_BOS, eos: str = DEFAULT_EOS,
                         limit: int = CONTEXT_LIMIT,
                         prepend_limit: int = PREPEND_LIMIT,
                         dumps=None) -> int:
    """Write one annotated record per example as JSON lines.

    ``dumps`` optionally maps example id -> (input_tokens, alignment) from a
    model dump; otherwise annotation runs at AST-terminal granularity.
    Per-example failures are logged and skipped, never fatal.
    """
    if mode not in MODES:
        raise ValueError(f"unknown annotation mode: {mode!r}")
    written = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for fn in functions:
            try:
                ast = parse(fn.code)
            except UnparseableSource as exc:
                log.warning("skipping %s: %s", fn.id, exc)
                continue
            pvs = extract_pvs(ast, rules, include_terminator)
            if dumps is not None and fn.id in dumps:
                input_tokens, align = dumps[fn.id]
            else:
                input_tokens, align = pretokenized_inputs(ast, bos, eos)
            annotated = annotate_example(fn.id, input_tokens, align, pvs, mode,
                                         markers, separator, limit, prepend_limit)
            record = {
                "id": fn.id,
                "label": fn.label,
                "mode": annotated.mode,
                "tokens": annotated.tokens,
                "b_extension": list(annotated.b_extension),
                "pvs_version": rules.version,
            }
            fh.write(json.dumps(record) + "\n")
            written += 1
    return written
