import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bugsem.corpusio import load_corpus

DATA_DIR = Path(__file__).parent / "data"

# the example program used throughout: a single risky allocation call
DEMO_CODE = "int main()\n{ malloc(10); }"
DEMO_NORMALIZED = "int main ( ) { malloc ( 10 ) ; }"

# subword split of the normalized demo program, mirroring a BPE tokenizer
# that merges "()" and ");" and splits "malloc" into "mall"+"oc"
DEMO_SUBWORDS = [
    ("[BOS]", None),
    ("int", (0, 3)),
    ("main", (4, 8)),
    ("()", (9, 12)),
    ("{", (13, 14)),
    ("mall", (15, 19)),
    ("oc", (19, 21)),
    ("(", (22, 23)),
    ("10", (24, 26)),
    (");", (27, 30)),
    ("}", (31, 32)),
    ("[EOS]", None),
]


@pytest.fixture(scope="session")
def fixture_corpus_path():
    return DATA_DIR / "fixture_corpus.jsonl"


@pytest.fixture(scope="session")
def fixture_corpus(fixture_corpus_path):
    return load_corpus(fixture_corpus_path)


@pytest.fixture
def demo_inputs():
    from bugsem.tokenalign import InputToken
    return [InputToken(i, text, span) for i, (text, span) in enumerate(DEMO_SUBWORDS)]


def random_stochastic_attention(rng, n_layers, n_heads, n):
    """Random attention tensor with softmax-normalized rows."""
    raw = rng.random((n_layers, n_heads, n, n)) + 1e-6
    return (raw / raw.sum(axis=-1, keepdims=True)).astype(np.float32)
