"""Corpus readers: plain normalized corpora and annotated datasets.

Both are JSON-lines files produced by the analysis toolkit.  The adapter only
depends on their documented schemas; code is expected to be whitespace
normalized already (tokens joined by single spaces) so character offsets in
the dumps line up with the toolkit's spans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Example:
    id: str
    text: str
    label: int
    mode: str = "baseline"


def _strip_sentinels(tokens, bos, eos):
    if tokens and tokens[0] == bos:
        tokens = tokens[1:]
    if tokens and tokens[-1] == eos:
        tokens = tokens[:-1]
    return tokens


def load_examples(path, bos="[BOS]", eos="[EOS]") -> list[Example]:
    """Read either corpus records ({id, code, label}) or annotated records
    ({id, tokens, label, mode, ...}); the input sentinels are dropped because
    the tokenizer re-adds its own."""
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            if "code" in raw:
                text = raw["code"]
                mode = "baseline"
            elif "tokens" in raw:
                text = " ".join(_strip_sentinels(list(raw["tokens"]), bos, eos))
                mode = raw.get("mode", "baseline")
            else:
                raise ValueError(f"line {lineno}: neither corpus nor annotated record")
            if raw.get("label") not in (0, 1):
                raise ValueError(f"line {lineno}: label must be 0 or 1")
            examples.append(Example(id=str(raw["id"]), text=text,
                                    label=int(raw["label"]), mode=mode))
    if not examples:
        raise ValueError(f"{path}: empty corpus")
    return examples
