import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadnet.discrepancy import index_vectors
from dyadnet.dual import (
    INFINITE_WEIGHT, character_sum, count_G_A, defining_map_rank, dual_space, g_a_size_by_rank,
    min_dual_weight, rho_weight, t_parameter_counting, t_parameter_exact, weight_histogram,
)
from dyadnet.gf2 import BitMatrix, BitVector, rank
from dyadnet.netgen import (
    FAMILIES, GeneratingMatrixSet, ShiftVector, builtin_matrices, default_dimension, digital_shift,
    generate_net, random_matrices,
)

from conftest import diagonal, pascal2


def brute_dual(G):
    """Orthogonality tested directly against every generated point's digit vector."""
    P = generate_net(G)
    packed = [int(x) for x in P.packed_digits()]
    return {v for v in range(2 ** (G.s * G.m)) if all((v & x).bit_count() % 2 == 0 for x in packed)}


def elements(D):
    return {int(e) for e in D.elements}


def test_dual_examples():
    I3 = BitMatrix.identity(3)
    assert elements(dual_space(GeneratingMatrixSet(1, 3, (I3,)))) == {0}
    assert elements(diagonal_dual(1)) == {0b00, 0b11}
    Z = BitMatrix.zeros(2, 2)
    assert dual_space(GeneratingMatrixSet(2, 2, (Z, Z))).size == 16


def diagonal_dual(m):
    return dual_space(diagonal(m))


def test_rho_weight_examples():
    assert rho_weight(0, 2, 3) == 0
    assert rho_weight(BitVector.from_list([1, 0, 0]), 1, 3) == 1
    # m_1 = (0, 1), m_2 = (1, 1): digit j of block i sits at bit i*m + j - 1
    assert rho_weight(BitVector.from_list([0, 1, 1, 1]), 2, 2) == 4


def test_min_dual_weight_examples():
    I = BitMatrix.identity(3)
    assert min_dual_weight(dual_space(GeneratingMatrixSet(1, 3, (I,)))) == INFINITE_WEIGHT
    assert min_dual_weight(diagonal_dual(2)) == 2
    Z = BitMatrix.zeros(3, 3)
    assert min_dual_weight(dual_space(GeneratingMatrixSet(2, 3, (Z, Z)))) == 1


@pytest.mark.parametrize("m", range(1, 9))
def test_t_examples(m):
    vdc = builtin_matrices("vdc", 1, m)
    assert t_parameter_exact(vdc).value == 0
    assert t_parameter_counting(generate_net(vdc)).value == 0
    assert t_parameter_exact(pascal2(m)).value == 0
    assert t_parameter_counting(generate_net(pascal2(m))).value == 0
    zero = builtin_matrices("zero", 2, m)
    assert t_parameter_counting(generate_net(zero)).value == m


def test_diagonal_t_is_one_at_m2():
    for method in ("dual_weight", "rank_composition"):
        assert t_parameter_exact(diagonal(2), method).value == 1
    assert t_parameter_counting(generate_net(diagonal(2))).value == 1


def test_count_G_A_examples():
    D = diagonal_dual(2)
    assert count_G_A(D, (0, 0)) == 1
    assert count_G_A(D, (2, 2)) == 4 <= 2 ** (4 - 2 + 1)
    w = min_dual_weight(D)
    for A in index_vectors(2, 2):
        if A.a0 < w:
            assert count_G_A(D, A.values) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32))
def test_three_t_methods_agree(m, seed):
    G = random_matrices(2, m, np.random.default_rng(seed))
    a = t_parameter_exact(G, "dual_weight").value
    b = t_parameter_exact(G, "rank_composition").value
    c = t_parameter_counting(generate_net(G)).value
    assert a == b == c


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32))
def test_dual_matches_brute_force_and_size_formula(m, s, seed):
    G = random_matrices(s, m, np.random.default_rng(seed))
    D = dual_space(G)
    assert elements(D) == brute_dual(G)
    assert D.size == 2 ** (s * m - defining_map_rank(G))
    if rank(G.matrices[0]) == m:
        assert D.size == 2 ** ((s - 1) * m)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32))
def test_count_G_A_matches_rank_formula(m, seed):
    G = random_matrices(2, m, np.random.default_rng(seed))
    D = dual_space(G)
    for A in index_vectors(m, 2):
        assert count_G_A(D, A.values) == g_a_size_by_rank(G, A.values)


@pytest.mark.parametrize("m", range(1, 5))
def test_character_sum_dichotomy_exhaustive(m):
    for G in (pascal2(m), diagonal(m), builtin_matrices("sobol2", 2, m),
              random_matrices(2, m, np.random.default_rng(m))):
        P, D = generate_net(G), dual_space(G)
        for v in range(2 ** (2 * m)):
            assert character_sum(P, v) == (2**m if D.contains(v) else 0)
        for e in D.elements:
            assert character_sum(P, int(e)) == 2**m


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32))
def test_character_sum_shift_sign(m, seed):
    rng = np.random.default_rng(seed)
    G = random_matrices(2, m, rng)
    P = generate_net(G)
    T = ShiftVector(2, m, tuple(int(x) for x in rng.integers(0, 2**m, size=2)))
    Q = digital_shift(P, T)
    for v in range(2 ** (2 * m)):
        sign = -1 if (v & T.packed()).bit_count() % 2 else 1
        assert character_sum(Q, v) == sign * character_sum(P, v)
    assert elements(dual_space(G)) == brute_dual(G)


@pytest.mark.parametrize("family", FAMILIES)
def test_weight_histogram_totals(family):
    G = builtin_matrices(family, default_dimension(family), 4)
    D = dual_space(G)
    hist = weight_histogram(D)
    assert sum(hist.values()) == D.size and hist[0] == 1
    w = min_dual_weight(D)
    if w != INFINITE_WEIGHT:
        assert min(k for k in hist if k) == w


def test_layers_and_enumeration_agree_on_weight():
    for seed in range(20):
        G = random_matrices(3, 5, np.random.default_rng(seed))
        D = dual_space(G)
        assert min_dual_weight(D, "layers") == min_dual_weight(D, "enumerate")
