#!/usr/bin/env python3
"""Build synthetic model dumps for a corpus.

Stands in for a real instrumented model: tokens come from a crude subword
splitter over the normalized code, attention is random but row-stochastic,
and attribution scores are random.  Useful for exercising the align pipeline
end to end and for generating test fixtures.

    python scripts/make_synthetic_dumps.py --corpus corpus.jsonl --out dumps/ \
        [--layers 4] [--heads 4] [--seed 0] [--bias-pvs]

With --bias-pvs the attention and attributions are tilted toward the v2 PVS
tokens, which makes alignment scores visibly higher than chance.
"""

import argparse
import sys

import numpy as np

from bugsem.astcore import parse
from bugsem.corpusio import ModelDump, load_corpus, write_dump
from bugsem.errors import UnparseableSource
from bugsem.features import PvsRuleSet, extract_pvs
from bugsem.tokenalign import InputToken

TOOLS = ("Saliency", "InputXGradient", "DeepLift", "SHAP")


def subword_split(ast, rng, max_piece=4):
    tokens = [InputToken(0, "[BOS]", None)]
    for term in ast.terminals:
        s, e = term.span
        cuts = [s]
        while e - cuts[-1] > max_piece:
            cuts.append(cuts[-1] + int(rng.integers(2, max_piece + 1)))
        cuts.append(e)
        for left, right in zip(cuts, cuts[1:]):
            tokens.append(InputToken(len(tokens), ast.normalized[left:right], (left, right)))
    tokens.append(InputToken(len(tokens), "[EOS]", None))
    return tokens


def build_dump(fn, rng, n_layers, n_heads, bias_pvs, context_limit=512):
    ast = parse(fn.code)
    tokens = subword_split(ast, rng)[:context_limit]
    n = len(tokens)

    pvs_spans = []
    if bias_pvs:
        pvs = extract_pvs(ast, PvsRuleSet.v2())
        pvs_spans = [ast.terminals[i].span for i in pvs.tokens]

    def in_pvs(tok):
        if tok.char_span is None:
            return False
        s, e = tok.char_span
        return any(max(s, ps) < min(e, pe) for ps, pe in pvs_spans)

    hot = np.array([in_pvs(t) for t in tokens], dtype=float)

    raw = rng.random((n_layers, n_heads, n, n))
    if bias_pvs and hot.any():
        raw = raw + 4.0 * hot[None, None, None, :]   # attend toward PVS columns
    attention = (raw / raw.sum(axis=-1, keepdims=True)).astype(np.float32)

    attributions = {}
    for tool in TOOLS:
        scores = rng.random(n)
        if bias_pvs and hot.any():
            scores = scores + 2.0 * hot
        attributions[tool] = scores
    return ModelDump(example_id=fn.id, tokens=tokens, attention=attention,
                     attributions=attributions)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--layers", type=int, default=4)
    parser.add_argument("--heads", type=int, default=4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bias-pvs", action="store_true")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    functions = load_corpus(args.corpus)
    written = 0
    for fn in functions:
        try:
            dump = build_dump(fn, rng, args.layers, args.heads, args.bias_pvs)
        except UnparseableSource as exc:
            print(f"skipping {fn.id}: {exc}", file=sys.stderr)
            continue
        write_dump(args.out, dump)
        written += 1
    print(f"wrote {written} dumps to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
