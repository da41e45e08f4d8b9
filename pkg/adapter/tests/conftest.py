import json

import pytest

# all snippets are already whitespace normalized (tokens joined by single
# spaces) so dump offsets line up with the toolkit's spans
SMOKE_SNIPPETS = [
    ("int f{i} ( int a ) {{ return a + {i} ; }}", 1),
    ("void g{i} ( char * p ) {{ free ( p ) ; }}", 1),
    ("void h{i} ( char * d , char * s ) {{ strcpy ( d , s ) ; }}", 1),
    ("int k{i} ( int * v , int i ) {{ return v [ i ] ; }}", 1),
    ("int m{i} ( int a , int b ) {{ return a > b ? a : b ; }}", 0),
    ("void n{i} ( int x ) {{ if ( x ) x = 0 ; }}", 0),
    ("int p{i} ( int n ) {{ int s = 0 ; s += n ; return s ; }}", 1),
    ("void q{i} ( struct t * o ) {{ o -> f = 1 ; }}", 0),
    ("int r{i} ( int z ) {{ return z * 2 ; }}", 1),
    ("void s{i} ( void ) {{ puts ( \"ok\" ) ; }}", 0),
]


def make_smoke_corpus(path, n_examples=20):
    rows = []
    for i in range(n_examples):
        template, label = SMOKE_SNIPPETS[i % len(SMOKE_SNIPPETS)]
        rows.append({"id": f"smoke{i:03d}",
                     "code": template.format(i=i // len(SMOKE_SNIPPETS)),
                     "label": label})
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


@pytest.fixture(scope="session")
def smoke_corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "smoke.jsonl"
    return make_smoke_corpus(path, 20)
