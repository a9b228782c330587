from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadnet.dual import t_parameter_counting
from dyadnet.gf2 import BitMatrix, rank
from dyadnet.netgen import (
    FAMILIES, GeneratingMatrixSet, ShiftVector, builtin_matrices, builtin_sequence, default_dimension,
    digital_shift, extend_with_index, format_net, generate_net, parse_net, pascal_matrix, random_matrices,
    sequence_prefix, truncate,
)

from conftest import pascal2


def one_dim(C):
    return GeneratingMatrixSet(1, C.rows, (C,))


def test_van_der_corput_order():
    P = generate_net(one_dim(BitMatrix.identity(2)))
    assert [P.as_fractions(n)[0] for n in range(4)] == [0, Fraction(1, 2), Fraction(1, 4), Fraction(3, 4)]


@pytest.mark.parametrize("m", [0, 1, 3, 5])
def test_zero_matrix_collapses_to_origin(m):
    P = generate_net(one_dim(BitMatrix.zeros(m, m)))
    assert P.N == 2**m and not P.coords.any()


def test_identity_pascal_boxes_of_volume_quarter():
    P = generate_net(pascal2(2))
    assert t_parameter_counting(P).value == 0
    cells = {(int(x) >> 1, int(y) >> 1) for x, y in P.coords}
    assert len(cells) == 4
    assert sorted(P.coords[:, 0].tolist()) == sorted(P.coords[:, 1].tolist()) == [0, 1, 2, 3]


def test_pascal_entries():
    assert pascal_matrix(3).to_rows() == [[1, 1, 1], [0, 1, 0], [0, 0, 1]]


def test_shift_examples():
    P = generate_net(pascal2(3))
    assert digital_shift(P, ShiftVector.zeros(2, 3)) == P
    T = ShiftVector(2, 3, (5, 2))
    assert digital_shift(digital_shift(P, T), T) == P
    one = generate_net(one_dim(BitMatrix.identity(2)))
    shifted = digital_shift(one, ShiftVector(1, 2, (3,)))
    # point 1/4 (digits 0,1) xor 3/4 (digits 1,1) is 1/2
    assert shifted.as_fractions(2)[0] == Fraction(1, 2)


def test_truncate_examples():
    assert truncate(Fraction(1, 3), 2) == Fraction(1, 4)
    assert truncate(Fraction(3, 8), 3) == Fraction(3, 8)
    assert truncate(0.9, 0) == 0


def test_extend_with_index():
    P = generate_net(one_dim(BitMatrix.identity(1)))
    Q = extend_with_index(P)
    assert [Q.as_fractions(n) for n in range(2)] == [(0, 0), (Fraction(1, 2), Fraction(1, 2))]
    R = extend_with_index(generate_net(one_dim(BitMatrix.identity(2))))
    assert R.as_fractions(3)[0] == Fraction(3, 4)
    assert sorted(R.coords[:, 0].tolist()) == [0, 1, 2, 3]


def test_sequence_prefix_examples():
    gen = builtin_sequence("sobol2", 2)
    assert sequence_prefix(gen, 0, 4) == generate_net(builtin_matrices("sobol2", 2, 4))
    assert t_parameter_counting(sequence_prefix(gen, 1, 3)).value == 0
    assert sequence_prefix(gen, 0, 0).N == 1


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("m", [1, 4, 7])
def test_sequence_prefixes_are_nested(family, m):
    gen = builtin_sequence(family, default_dimension(family))
    big = sequence_prefix(gen, 0, m)
    small = sequence_prefix(gen, 0, m - 1)
    assert np.array_equal(big.coords[: 2 ** (m - 1)] >> 1, small.coords)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(1, 3), st.integers(0, 2**32))
def test_size_and_permutation_property(m, s, seed):
    G = random_matrices(s, m, np.random.default_rng(seed))
    P = generate_net(G)
    assert P.N == 2**m
    for i, C in enumerate(G.matrices):
        if rank(C) == m:
            assert sorted(P.coords[:, i].tolist()) == list(range(2**m))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32))
def test_shift_preserves_t(m, seed):
    rng = np.random.default_rng(seed)
    P = generate_net(random_matrices(2, m, rng))
    T = ShiftVector(2, m, tuple(int(v) for v in rng.integers(0, 2**m, size=2)))
    assert t_parameter_counting(digital_shift(P, T)).value == t_parameter_counting(P).value


def test_net_text_round_trip():
    P = generate_net(pascal2(4))
    text = format_net(P)
    assert text.splitlines()[0] == "2 4 16"
    assert text.splitlines()[2] == "1000 1000"
    assert format_net(parse_net(text)) == text and parse_net(text) == P


@pytest.mark.parametrize("bad", ["2 2 4\n00 00\n", "1 2 1\n0a\n", "1 2 1\n000\n", "x\n"])
def test_net_parse_rejects_malformed(bad):
    with pytest.raises(ValueError):
        parse_net(bad)


def test_generating_set_validates_shapes():
    with pytest.raises(ValueError):
        GeneratingMatrixSet(2, 2, (BitMatrix.identity(2),))
    with pytest.raises(ValueError):
        GeneratingMatrixSet(1, 2, (BitMatrix.identity(3),))
