"""Model-dump writer in the analysis toolkit's wire format.

Per example ``X`` the dump directory receives:

* ``X.tokens.json``  -- {"example_id", "tokens": [str], "spans": [[s,e]|null]}
* ``X.attn.bin``     -- header ``ATTN`` + u32 layers/heads/tokens (little
  endian) + float32 little-endian tensor (layers, heads, n, n)
* ``X.attrib.json``  -- {"example_id", "attributions": {tool: [float] * n}}

This module implements the format from its documentation on purpose: the
adapter is a client of the toolkit's interfaces, not of its code.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path

import numpy as np
import torch

from .attribution import compute_attributions
from .tokenization import encode_with_spans

log = logging.getLogger(__name__)

ATTENTION_MAGIC = b"ATTN"
_HEADER = struct.Struct("<4sIII")


def write_attention_file(path, attention: np.ndarray) -> None:
    attention = np.ascontiguousarray(attention, dtype="<f4")
    n_layers, n_heads, n, n2 = attention.shape
    assert n == n2, "attention must be square per head"
    Path(path).write_bytes(
        _HEADER.pack(ATTENTION_MAGIC, n_layers, n_heads, n) + attention.tobytes())


def read_attention_file(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    magic, n_layers, n_heads, n = _HEADER.unpack_from(blob)
    if magic != ATTENTION_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n_layers * n_heads * n * n
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(blob)}")
    return np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(
        n_layers, n_heads, n, n)


def dump_example(model, tokenizer, example, out_dir, tools, max_length=512,
                 device="cpu") -> dict:
    """Run one forward pass plus attributions and write the three dump files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ids, tokens, spans = encode_with_spans(tokenizer, example.text, max_length)
    input_ids = torch.tensor([ids], device=device)

    model.eval()
    with torch.no_grad():
        output = model(input_ids=input_ids, output_attentions=True)
    attention = torch.stack(output.attentions, dim=0)[:, 0].cpu().numpy()

    attributions = compute_attributions(model, input_ids, tools)

    (out_dir / f"{example.id}.tokens.json").write_text(json.dumps({
        "example_id": example.id,
        "tokens": tokens,
        "spans": [list(s) if s is not None else None for s in spans],
    }), encoding="utf-8")
    write_attention_file(out_dir / f"{example.id}.attn.bin", attention)
    (out_dir / f"{example.id}.attrib.json").write_text(json.dumps({
        "example_id": example.id,
        "attributions": {tool: [float(x) for x in arr]
                         for tool, arr in attributions.items()},
    }), encoding="utf-8")
    return {"n_tokens": len(tokens), "n_layers": attention.shape[0],
            "n_heads": attention.shape[1]}


def dump_corpus(model, tokenizer, examples, out_dir, tools, max_length=512,
                device="cpu") -> int:
    written = 0
    for example in examples:
        try:
            info = dump_example(model, tokenizer, example, out_dir, tools,
                                max_length, device)
        except torch.cuda.OutOfMemoryError:
            log.error("out of memory on %s; skipped", example.id)
            continue
        log.info("dumped %s (%d tokens, %d layers, %d heads)", example.id,
                 info["n_tokens"], info["n_layers"], info["n_heads"])
        written += 1
    return written
