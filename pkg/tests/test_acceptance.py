"""Acceptance suite: one test per criterion, printing one PASS/FAIL line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines; criteria needing local datasets are skipped (not failed) when the
corresponding environment variables are unset.
"""

import json
import os
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from bugsem.annotate import DEFAULT_MARKERS, annotate_example, pretokenized_inputs
from bugsem.astcore import parse
from bugsem.cli import main
from bugsem.corpusio import load_corpus
from bugsem.features import PvsRuleSet, extract_pvs, pvs_statistics
from bugsem.interaction import (
    InteractionMatrix,
    alignment_im,
    build_interaction_matrix,
    induced_components,
    longest_chain,
    path_joint_probability,
)
from bugsem.metrics import iou, top_k_incident_tokens, top_k_tokens
from bugsem.tokenalign import InputToken, TokenAlignment, aggregate_attention, aggregate_attribution

import oracles
from conftest import DEMO_SUBWORDS

B_MARK, E_MARK = DEFAULT_MARKERS

MARK_ROW = [
    "[BOS]", "int", "main", "()", "{",
    B_MARK, "mall", E_MARK, B_MARK, "oc", E_MARK, B_MARK, "(", E_MARK,
    B_MARK, "10", E_MARK, B_MARK, ");", E_MARK,
    "}", "[EOS]",
]
PREPEND_ROW = [
    "[BOS]", "mall", "oc", "(", "10", ");", "[SEP]",
    "int", "main", "()", "{", "mall", "oc", "(", "10", ");", "}", "[EOS]",
]


def _report(num, description):
    def decorator(fn):
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except pytest.skip.Exception as exc:
                print(f"[criterion {num}] SKIP: {description} ({exc})")
                raise
            except BaseException:
                print(f"[criterion {num}] FAIL: {description}")
                raise
            print(f"[criterion {num}] PASS: {description}")
        wrapper.__name__ = fn.__name__
        return wrapper
    return decorator


@_report(1, "demo program: mark and prepend rows reproduced token for token, < 1 s")
def test_criterion_1_demo_program_fidelity():
    started = time.monotonic()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        corpus = tmp / "corpus.jsonl"
        corpus.write_text(json.dumps(
            {"id": "demo", "code": "int main ( ) { malloc ( 10 ) ; }", "label": 1}) + "\n")
        dump_dir = tmp / "dumps"
        dump_dir.mkdir()
        (dump_dir / "demo.tokens.json").write_text(json.dumps({
            "example_id": "demo",
            "tokens": [t for t, _ in DEMO_SUBWORDS],
            "spans": [list(s) if s else None for _, s in DEMO_SUBWORDS],
        }))

        features = tmp / "features.jsonl"
        assert main(["extract", "--corpus", str(corpus), "--out", str(features)]) == 0
        (feature_row,) = [json.loads(l) for l in features.read_text().splitlines()]
        assert feature_row["token_texts"] == ["malloc", "(", "10", ")", ";"]

        for mode, expected in (("mark", MARK_ROW), ("prepend", PREPEND_ROW)):
            out = tmp / f"{mode}.jsonl"
            assert main(["annotate", "--corpus", str(corpus), "--mode", mode,
                         "--dump-dir", str(dump_dir), "--out", str(out)]) == 0
            (row,) = [json.loads(l) for l in out.read_text().splitlines()]
            assert row["tokens"] == expected, mode
    elapsed = time.monotonic() - started
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


@_report(2, "abstraction rules: strcpy/operator/subscript examples exact")
def test_criterion_2_abstraction_rules():
    cases = [
        ("strcpy ( a , foo ( b ) ) ;", ["strcpy"]),
        ("( a + b ) - c ;", ["+", "-"]),
        ("arr [ i ++ ] ;", ["[", "++", "]"]),
    ]
    for code, expected in cases:
        ast = parse(code)
        pvs = extract_pvs(ast, PvsRuleSet.v3())
        assert [ast.terminals[i].text for i in pvs.tokens] == expected, code


@_report(3, "metric-oracle equivalence on 1,000 random instances, < 60 s")
def test_criterion_3_oracle_equivalence():
    started = time.monotonic()
    rng = np.random.default_rng(42)
    levels = np.linspace(0.0, 1.0, 5)
    for _ in range(1000):
        m = int(rng.integers(2, 11))

        # set metrics
        universe = range(m)
        m_set = {int(i) for i in universe if rng.random() < 0.5}
        b_set = {int(i) for i in universe if rng.random() < 0.5}
        if m_set or b_set:
            assert abs(iou(m_set, b_set) - oracles.iou_oracle(m_set, b_set)) <= 1e-12

        # ranked selection with deliberate ties
        scores = rng.choice(levels, size=m).tolist()
        k = int(rng.integers(1, m + 1))
        assert top_k_tokens(scores, k) == oracles.top_k_oracle(scores, k)

        matrix = rng.choice(levels, size=(m, m))
        assert top_k_incident_tokens(matrix, k) == \
            oracles.top_k_incident_oracle(matrix.tolist(), k)

        # interaction-matrix selection and path metrics
        values = matrix + 1e-6
        values = values / values.sum(axis=1, keepdims=True)
        im = InteractionMatrix(values=values, ast_indices=list(range(m)))
        if b_set:
            score, kk = alignment_im(im, b_set)
            expected = oracles.iou_oracle(
                oracles.top_k_incident_oracle(values.tolist(), len(b_set)), b_set)
            assert abs(score - expected) <= 1e-12

        path = list(dict.fromkeys(int(x) for x in rng.integers(0, m, size=m)))
        if len(path) >= 2:
            t = int(rng.integers(1, m * m + 1))
            got_len, got_cov = longest_chain(im, path, t)
            exp_len, exp_cov = oracles.longest_chain_oracle(values.tolist(), path, t)
            assert got_len == exp_len
            assert abs(got_cov - exp_cov) <= 1e-12
            assert induced_components(im, path, t) == \
                oracles.components_oracle(values.tolist(), path, t)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"took {elapsed:.2f}s"


@_report(4, "interaction matrix: stochastic rows, uniform closed form, monotone paths")
def test_criterion_4_interaction_properties():
    rng = np.random.default_rng(43)

    # rows sum to 1 +- 1e-9 on random stochastic input
    for _ in range(100):
        n = int(rng.integers(2, 10))
        n_layers = int(rng.integers(2, 5))
        raw = rng.random((n_layers, 2, n, n)) + 1e-9
        att = raw / raw.sum(axis=-1, keepdims=True)
        split = sorted(rng.integers(0, 3, size=n).tolist())
        ast_index = [None if s == 0 else s - 1 for s in split]
        if all(a is None for a in ast_index):
            ast_index[0] = 0
        n_ast = max(a for a in ast_index if a is not None) + 1
        align = TokenAlignment(ast_index=ast_index, n_ast=n_ast)
        im = build_interaction_matrix(att, align)
        assert np.allclose(im.values.sum(axis=1), 1.0, atol=1e-9)

    # uniform attention -> uniform transitions -> closed-form joint probability
    for _ in range(50):
        n = int(rng.integers(3, 10))
        att = np.full((3, 2, n, n), 1.0 / n)
        align = TokenAlignment(ast_index=list(range(n)), n_ast=n)
        im = build_interaction_matrix(att, align)
        n_nodes = int(rng.integers(2, n + 1))
        path = rng.permutation(n)[:n_nodes].tolist()
        prob = path_joint_probability(im, path)
        assert abs(prob - (1.0 / n) ** (n_nodes - 1)) <= 1e-12

    # extending a path never increases its joint probability
    for _ in range(500):
        m = int(rng.integers(2, 9))
        values = rng.random((m, m)) + 1e-9
        values /= values.sum(axis=1, keepdims=True)
        im = InteractionMatrix(values=values, ast_indices=list(range(m)))
        length = int(rng.integers(2, 6))
        path = [int(x) for x in rng.integers(0, m, size=length)]
        path = [p for i, p in enumerate(path) if i == 0 or p != path[i - 1]]
        if len(path) < 2:
            continue
        nxt = int(rng.integers(0, m))
        if nxt == path[-1]:
            nxt = (nxt + 1) % m
        assert path_joint_probability(im, path + [nxt]) <= \
            path_joint_probability(im, path) + 1e-12


@_report(5, "aggregation invariance: constants propagate, rescaling preserves IoU")
def test_criterion_5_aggregation_invariance():
    rng = np.random.default_rng(44)
    for _ in range(500):
        n = int(rng.integers(2, 12))
        n_ast = int(rng.integers(1, n + 1))
        ast_index = [int(rng.integers(0, n_ast)) if rng.random() > 0.2 else None
                     for _ in range(n)]
        if all(a is None for a in ast_index):
            ast_index[0] = 0
        align = TokenAlignment(ast_index=ast_index, n_ast=n_ast)

        constant = float(rng.random())
        scores, covered = aggregate_attribution([constant] * n, align)
        assert np.allclose(scores[covered], constant)
        agg = aggregate_attention(np.full((n, n), constant), align)
        assert np.allclose(agg.values, constant)

        # rescaling attributions never changes the selected top-k, hence no IoU
        raw = rng.random(n)
        factor = float(rng.uniform(0.1, 100.0))
        base_scores, covered = aggregate_attribution(raw, align)
        scaled_scores, _ = aggregate_attribution(raw * factor, align)
        covered_count = int(covered.sum())
        k = int(rng.integers(1, covered_count + 1))
        covered_idx = np.flatnonzero(covered)
        pick = lambda s: {int(i) for i in sorted(covered_idx, key=lambda j: (-s[j], j))[:k]}
        b = {int(i) for i in covered_idx if rng.random() < 0.5} or {int(covered_idx[0])}
        assert iou(pick(base_scores), b) == iou(pick(scaled_scores), b)


def _random_function(rng):
    names = ["a", "b", "c", "p", "q", "buf", "n", "i", "x", "y"]
    calls = ["malloc", "free", "strcpy", "printf", "memset", "strlen"]
    statements = []
    for _ in range(int(rng.integers(1, 8))):
        kind = rng.integers(0, 6)
        v = [str(rng.choice(names)) for _ in range(3)]
        if kind == 0:
            statements.append(f"{v[0]} = {v[1]} + {v[2]};")
        elif kind == 1:
            statements.append(f"{str(rng.choice(calls))}({v[0]}, {v[1]});")
        elif kind == 2:
            statements.append(f"{v[0]}[{v[1]}] = {v[2]};")
        elif kind == 3:
            statements.append(f"{v[0]}->{v[1]} = *{v[2]};")
        elif kind == 4:
            statements.append(f"{v[0]}++;")
        else:
            statements.append(f"if ({v[0]} > {v[1]}) return {v[2]};")
    return "void f() { " + " ".join(statements) + " }"


def _random_subword_inputs(rng, ast):
    """Synthetic BPE-ish split: some terminals become two pieces."""
    tokens = [InputToken(0, "[BOS]", None)]
    for term in ast.terminals:
        s, e = term.span
        if e - s >= 2 and rng.random() < 0.35:
            cut = int(rng.integers(s + 1, e))
            tokens.append(InputToken(len(tokens), ast.normalized[s:cut], (s, cut)))
            tokens.append(InputToken(len(tokens), ast.normalized[cut:e], (cut, e)))
        else:
            tokens.append(InputToken(len(tokens), term.text, (s, e)))
    tokens.append(InputToken(len(tokens), "[EOS]", None))
    return tokens


@_report(6, "annotation invariants on 1,000 random functions")
def test_criterion_6_annotation_invariants():
    from bugsem.tokenalign import build_alignment

    rng = np.random.default_rng(45)
    limit = 96   # tight limit so truncation paths are exercised constantly
    for i in range(1000):
        code = _random_function(rng)
        ast = parse(code)
        rules = PvsRuleSet.named(str(rng.choice(["v1", "v2", "v3"])))
        pvs = extract_pvs(ast, rules)
        if rng.random() < 0.5:
            inputs, align = pretokenized_inputs(ast)
        else:
            inputs = _random_subword_inputs(rng, ast)
            align = build_alignment(ast, inputs)

        marked = annotate_example("t", inputs, align, pvs, "mark", limit=limit)
        assert len(marked.tokens) <= limit
        assert marked.tokens.count(B_MARK) == marked.tokens.count(E_MARK)
        for pos, tok in enumerate(marked.tokens):
            if tok == B_MARK:
                assert marked.tokens[pos + 2] == E_MARK

        stripped = [t for t in marked.tokens if t not in (B_MARK, E_MARK)]
        baseline = [t.text for t in inputs]
        trailing = 1 if stripped and stripped[-1] == "[EOS]" else 0
        body = stripped[:len(stripped) - trailing]
        assert body == baseline[:len(body)]

        prepended = annotate_example("t", inputs, align, pvs, "prepend", limit=limit)
        assert len(prepended.tokens) <= limit
        assert len(prepended.b_extension) <= 100
        sep = prepended.tokens.index("[SEP]")
        assert sep - 1 == len(prepended.b_extension)
        rest = prepended.tokens[sep + 1:]
        trailing = 1 if rest and rest[-1] == "[EOS]" else 0
        body = rest[:len(rest) - trailing]
        assert body == baseline[1:1 + len(body)]


@_report(7, "dataset statistics (skipped unless local corpora are configured)")
def test_criterion_7_dataset_statistics():
    d2a = os.environ.get("BUGSEM_D2A_CORPUS")
    bigvul = os.environ.get("BUGSEM_BIGVUL_CORPUS")
    if not d2a and not bigvul:
        pytest.skip("set BUGSEM_D2A_CORPUS / BUGSEM_BIGVUL_CORPUS to enable")
    if d2a:
        functions = load_corpus(d2a)
        stats = pvs_statistics(functions, PvsRuleSet.v2())
        assert abs(stats.ratio - 1.00) <= 0.05, f"d2a ratio {stats.ratio:.3f}"
        trace_counts = [len(fn.bug_line_traces) for fn in functions if fn.bug_line_traces]
        mean_traces = sum(trace_counts) / len(trace_counts)
        assert abs(mean_traces - 5.29) <= 0.10, f"d2a mean traces {mean_traces:.3f}"
    if bigvul:
        functions = load_corpus(bigvul)
        stats = pvs_statistics(functions, PvsRuleSet.v2())
        assert abs(stats.ratio - 2.90) <= 0.15, f"big-vul ratio {stats.ratio:.3f}"
