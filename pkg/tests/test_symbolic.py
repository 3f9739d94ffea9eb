import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teichfun.errors import EmptyWord, Inadmissible
from teichfun.symbolic import (
    WordGraph, count_words, cylinder_length, cylinder_lengths, dual_shift, is_admissible,
    pi_point, random_prefixes, random_words, require_admissible, shift, word_arcs,
)


def test_word_counts_match_matrix_powers(std):
    A = std.A.astype(np.int64)
    for n in range(5):
        oracle = int(np.linalg.matrix_power(A, n).sum())
        assert count_words(std.A, n) == oracle
    assert [count_words(std.A, n) for n in range(5)] == [336, 2240, 15568, 108840, 759552]


def test_shifts_and_admissibility(std):
    assert shift((1, 2, 3)) == (2, 3)
    assert dual_shift((1, 2, 3)) == (1, 2)
    for f in (shift, dual_shift):
        with pytest.raises(EmptyWord):
            f((4,))
    with pytest.raises(EmptyWord):
        require_admissible(std.A, ())
    bad = next((0, j) for j in range(std.k) if not std.A[0, j])
    assert not is_admissible(std.A, bad)
    assert not is_admissible(std.A, (0, std.k))
    with pytest.raises(Inadmissible):
        require_admissible(std.A, bad)


def test_word_graph_structure(std):
    g = WordGraph(std.A, 3)
    for n in range(1, 4):
        w = g.words(n).astype(np.int64)
        assert len(w) == count_words(std.A, n)
        assert len({tuple(r) for r in w}) == len(w)
        assert std.A[w[:, :-1], w[:, 1:]].all()
        prev = g.words(n - 1).astype(np.int64)
        assert np.array_equal(prev[g.suffix[n]], w[:, 1:])
        assert np.array_equal(prev[g.parent[n]], w[:, :-1])
    rng = np.random.default_rng(3)
    for row in g.words(3)[rng.integers(0, g.count(3), 50)]:
        assert g.index_of(row) == np.flatnonzero((g.words(3) == row).all(axis=1))[0]


def test_random_words_are_admissible(std):
    rng = np.random.default_rng(0)
    w = random_words(std.A, 200, 12, rng)
    assert std.A[w[:, :-1], w[:, 1:]].all()
    ext = random_prefixes(std.A, w[:, :4], 5, rng)
    assert ext.shape == (200, 9)
    assert np.array_equal(ext[:, 5:], w[:, :4])
    assert std.A[ext[:, :-1], ext[:, 1:]].all()


def test_children_tile_parent(std):
    g = WordGraph(std.A, 3)
    L = cylinder_lengths(std, g)
    for n in range(1, 4):
        sums = np.bincount(g.parent[n], weights=L[n], minlength=g.count(n - 1))
        assert np.allclose(sums, L[n - 1], rtol=1e-11)


def test_batch_lengths_agree_with_word_arcs_and_extended_precision(std):
    g = WordGraph(std.A, 4)
    L = cylinder_lengths(std, g)
    rng = np.random.default_rng(1)
    idx = rng.integers(0, g.count(4), 30)
    words = g.words(4)[idx]
    assert np.allclose(word_arcs(std, words)[2], L[4][idx], rtol=1e-12)
    for w, l in zip(words[:5], L[4][idx[:5]]):
        assert cylinder_length(std, w, precision=200) == pytest.approx(l, rel=1e-11)


def test_cylinders_map_forward_onto_suffix(std):
    # f restricted to I_w is the branch of w[0] and maps it onto I_{w[1:]}
    rng = np.random.default_rng(2)
    for w in random_words(std.A, 20, 5, rng):
        z, dz, _ = word_arcs(std, w[None, :])
        th = float(np.angle(z[0]))
        zs, dzs, _ = word_arcs(std, w[None, 1:])
        assert std.f(th) == pytest.approx(float(np.angle(zs[0])) % (2 * np.pi), abs=1e-9)


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_point_enclosures_nest(std, seed):
    w = random_words(std.A, 1, 8, np.random.default_rng(seed))[0]
    outer, inner = pi_point(std, w[:4]), pi_point(std, w)
    gap = abs(np.angle(np.exp(1j * (outer.angle - inner.angle))))
    assert gap + inner.radius <= outer.radius + 1e-12
