import numpy as np
import pytest

from bugsem.errors import PathTooShort, TooFewLayers
from bugsem.interaction import (
    InteractionMatrix,
    alignment_im,
    bucket_by_path_length,
    build_interaction_matrix,
    default_top_t,
    induced_components,
    longest_chain,
    path_joint_probability,
    top_t_cells,
)
from bugsem.metrics import AlignmentRecord
from bugsem.tokenalign import TokenAlignment

import oracles
from conftest import random_stochastic_attention


def _identity_align(n):
    return TokenAlignment(ast_index=list(range(n)), n_ast=n)


def _im(values):
    values = np.asarray(values, dtype=float)
    return InteractionMatrix(values=values, ast_indices=list(range(values.shape[0])))


def _uniform_im(m):
    return _im(np.full((m, m), 1.0 / m))


# --- construction -----------------------------------------------------------------

def test_identity_attention_gives_identity_transitions():
    att = np.zeros((3, 2, 4, 4))
    att[..., range(4), range(4)] = 1.0
    im = build_interaction_matrix(att, _identity_align(4))
    assert np.allclose(im.values, np.eye(4))


def test_uniform_attention_gives_uniform_im():
    att = np.full((2, 2, 4, 4), 0.25)
    align = TokenAlignment(ast_index=[0, 0, 1, 2], n_ast=3)
    im = build_interaction_matrix(att, align)
    assert np.allclose(im.values, 1.0 / 3)


def test_two_layer_composition_by_hand():
    # layer 1 = identity, layer 2 = swap: composed transitions are the swap
    att = np.zeros((2, 1, 2, 2))
    att[0, 0] = np.eye(2)
    att[1, 0] = np.array([[0.0, 1.0], [1.0, 0.0]])
    im = build_interaction_matrix(att, _identity_align(2))
    assert np.allclose(im.values, [[0.0, 1.0], [1.0, 0.0]])


def test_rows_sum_to_one_on_random_input():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        att = random_stochastic_attention(rng, 3, 2, n)
        im = build_interaction_matrix(att, _identity_align(n))
        assert np.allclose(im.values.sum(axis=1), 1.0, atol=1e-9)
        assert (im.values >= 0).all()


def test_too_few_layers():
    att = np.full((1, 2, 3, 3), 1 / 3)
    with pytest.raises(TooFewLayers):
        build_interaction_matrix(att, _identity_align(3))


def test_interaction_matrix_validates_rows():
    with pytest.raises(ValueError):
        InteractionMatrix(values=np.array([[0.5, 0.1], [0.5, 0.5]]),
                          ast_indices=[0, 1])


def test_zero_mass_rows_become_uniform():
    # dumps sometimes zero out masked rows entirely; those rows must come
    # back uniform instead of breaking the row-stochastic invariant
    att = np.zeros((2, 1, 3, 3))
    att[:, :, :, 2] = 1.0
    att[:, :, 0, :] = 0.0      # token 0's attention row is masked away
    im = build_interaction_matrix(att, _identity_align(3))
    assert np.allclose(im.values[0], 1.0 / 3)
    assert np.allclose(im.values.sum(axis=1), 1.0, atol=1e-9)


# --- alignment_im -------------------------------------------------------------------

def test_alignment_im_peaked_on_b():
    values = np.full((4, 4), 1e-6)
    values[0, 1] = 0.9
    values[2, 3] = 0.8
    values /= values.sum(axis=1, keepdims=True)
    score, k = alignment_im(_im(values), {0, 1, 2, 3})
    assert k == 4
    assert score == 1.0


def test_alignment_im_uniform_tie_rule():
    score, k = alignment_im(_uniform_im(4), {0, 1})
    # ties pick cells (0,0), (0,1): M = {0, 1} = B
    assert score == 1.0


def test_alignment_im_five_token_enumeration():
    values = np.full((5, 5), 1e-9)
    values[0, 4] = 0.9
    values[1, 3] = 0.8
    values /= values.sum(axis=1, keepdims=True)
    score, k = alignment_im(_im(values), {0, 1, 3, 4})
    assert score == 1.0


# --- joint probability ---------------------------------------------------------------

def test_single_edge_path():
    im = _im([[0.25, 0.75], [0.6, 0.4]])
    assert path_joint_probability(im, [0, 1]) == pytest.approx(0.75)


def test_uniform_im_path_probability():
    m, n_nodes = 5, 4
    im = _uniform_im(m)
    prob = path_joint_probability(im, [0, 1, 2, 3])
    assert prob == pytest.approx((1 / m) ** (n_nodes - 1), abs=1e-12)


def test_zero_edge_absorbs():
    im = _im([[1.0, 0.0], [0.5, 0.5]])
    assert path_joint_probability(im, [0, 1]) == 0.0


def test_path_too_short():
    with pytest.raises(PathTooShort):
        path_joint_probability(_uniform_im(3), [1])


def test_consecutive_duplicates_collapse():
    im = _im([[0.2, 0.8], [0.3, 0.7]])
    assert path_joint_probability(im, [0, 0, 1]) == \
        path_joint_probability(im, [0, 1])


def test_extension_never_increases_probability():
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = int(rng.integers(3, 8))
        values = rng.random((m, m)) + 1e-9
        values /= values.sum(axis=1, keepdims=True)
        im = _im(values)
        path = [int(x) for x in rng.integers(0, m, size=int(rng.integers(2, 6)))]
        path = [p for i, p in enumerate(path) if i == 0 or p != path[i - 1]]
        if len(path) < 2:
            continue
        extended = path + [int((path[-1] + 1) % m)]
        assert path_joint_probability(im, extended) <= \
            path_joint_probability(im, path) + 1e-12


# --- chain / components ----------------------------------------------------------------

def test_chain_with_all_edges():
    im = _uniform_im(4)
    path = [0, 1, 2, 3]
    length, coverage = longest_chain(im, path, t=16)
    assert length == 3
    assert coverage == 1.0


def test_chain_partial_coverage():
    # top-2 cells are exactly (0,1) and (2,3): edges 1 and 3 of the path
    values = np.full((5, 5), 1e-9)
    values[0, 1] = 0.9
    values[2, 3] = 0.8
    values /= values.sum(axis=1, keepdims=True)
    im = _im(values)
    path = [0, 1, 2, 3, 4]   # edges (0,1), (1,2), (2,3), (3,4)
    length, coverage = longest_chain(im, path, t=2)
    assert length == 1
    assert coverage == pytest.approx(0.5)


def test_chain_disjoint():
    values = np.full((5, 5), 1e-9)
    values[4, 4] = 1.0
    values /= values.sum(axis=1, keepdims=True)
    im = _im(values)
    length, coverage = longest_chain(im, [0, 1, 2], t=1)
    assert length == 0
    assert coverage == 0.0


def test_components_fully_connected():
    im = _uniform_im(4)
    assert induced_components(im, [0, 1, 2, 3], t=16) == 1


def test_components_fully_disconnected():
    values = np.full((5, 5), 1e-9)
    values[4, 4] = 1.0
    values /= values.sum(axis=1, keepdims=True)
    im = _im(values)
    assert induced_components(im, [0, 1, 2, 3], t=1) == 4


def test_components_two_linked_pairs():
    # edges (0,1) and (3,4) over nodes {0..4} leave 3 components
    values = np.full((5, 5), 1e-9)
    values[0, 1] = 0.9
    values[3, 4] = 0.8
    values /= values.sum(axis=1, keepdims=True)
    im = _im(values)
    assert induced_components(im, [0, 1, 2, 3, 4], t=2) == 3


def test_components_monotone_in_t():
    rng = np.random.default_rng(13)
    values = rng.random((6, 6))
    values /= values.sum(axis=1, keepdims=True)
    im = _im(values)
    path = [0, 2, 4, 5]
    counts = [induced_components(im, path, t) for t in range(1, 37)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_chain_bounds():
    rng = np.random.default_rng(17)
    for _ in range(50):
        m = int(rng.integers(2, 8))
        values = rng.random((m, m)) + 1e-9
        values /= values.sum(axis=1, keepdims=True)
        im = _im(values)
        path = list(dict.fromkeys(int(x) for x in rng.integers(0, m, size=m)))
        if len(path) < 2:
            continue
        t = int(rng.integers(1, m * m + 1))
        length, coverage = longest_chain(im, path, t)
        n_edges = len(path) - 1
        assert 0 <= length <= n_edges
        assert coverage >= length / n_edges - 1e-12
        comp = induced_components(im, path, t)
        assert 1 <= comp <= len(path)


def test_oracle_equivalence_randomized():
    rng = np.random.default_rng(19)
    for _ in range(200):
        m = int(rng.integers(2, 8))
        values = rng.choice([0.1, 0.2, 0.3, 0.4], size=(m, m))
        values /= values.sum(axis=1, keepdims=True)
        im = _im(values)
        path = list(dict.fromkeys(int(x) for x in rng.integers(0, m, size=m)))
        if len(path) < 2:
            continue
        t = int(rng.integers(1, m * m + 1))
        assert top_t_cells(im.values, t) == oracles.top_t_cells_oracle(im.values.tolist(), t)
        assert longest_chain(im, path, t) == \
            pytest.approx(oracles.longest_chain_oracle(im.values.tolist(), path, t))
        assert induced_components(im, path, t) == \
            oracles.components_oracle(im.values.tolist(), path, t)


# --- bucketing -----------------------------------------------------------------------

def _jp(example, k, score):
    return AlignmentRecord(example, "joint_prob", score, k=k)


def test_bucket_single_length():
    buckets = bucket_by_path_length([_jp("a", 2, 0.5), _jp("b", 2, 0.7)])
    assert list(buckets) == [2]
    assert buckets[2].n == 2


def test_bucket_two_lengths():
    buckets = bucket_by_path_length([_jp("a", 2, 0.5), _jp("b", 2, 0.7), _jp("c", 3, 0.1)])
    assert buckets[2].n == 2
    assert buckets[3].n == 1


def test_bucket_means_by_hand():
    buckets = bucket_by_path_length([_jp("a", 2, 0.2), _jp("b", 2, 0.4), _jp("c", 4, 0.9)])
    assert buckets[2].mean == pytest.approx(0.3)
    assert buckets[4].mean == pytest.approx(0.9)


def test_default_top_t():
    assert default_top_t(10, 3) == 10
    assert default_top_t(4, 5) == 10
