import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadnet.cltlab import sample_block
from dyadnet.discrepancy import (
    IndexVector, conditional_expectation, dm_decomposition, e_squared_batch, full_expectation,
    index_families, index_vectors, l2_discrepancy_sq, lambda_via_dual, local_discrepancy,
    local_discrepancy_batch, martingale_terms, micro_local_discrepancy, rademacher, v0,
)
from dyadnet.dual import dual_space, t_parameter_exact
from dyadnet.netgen import (
    DigitalNet, ShiftVector, builtin_matrices, digital_shift, generate_net, random_matrices,
)

from conftest import pascal2

F = Fraction


def vdc(m):
    return generate_net(builtin_matrices("vdc", 1, m))


def test_local_discrepancy_examples():
    origin = DigitalNet(1, 0, np.zeros((1, 1), dtype=np.uint64))
    assert local_discrepancy(origin, [F(1, 2)]) == F(1, 2)
    P = generate_net(pascal2(3))
    assert local_discrepancy(P, [1, 1]) == 0
    assert local_discrepancy(vdc(2), [F(1, 2)]) == 0


def test_warnock_examples():
    origin = DigitalNet(1, 0, np.zeros((1, 1), dtype=np.uint64))
    assert l2_discrepancy_sq(origin, exact=True) == F(1, 3)
    origin2 = DigitalNet(2, 0, np.zeros((1, 2), dtype=np.uint64))
    # (1 - y1 y2)^2 integrated over the unit square
    assert l2_discrepancy_sq(origin2, exact=True) == F(11, 18)
    empty = DigitalNet(2, 3, np.zeros((0, 2), dtype=np.uint64))
    assert l2_discrepancy_sq(empty) == 0


@pytest.mark.parametrize("G", [pascal2(3), builtin_matrices("diag2", 2, 3), random_matrices(3, 2, np.random.default_rng(1))],
                         ids=["pascal", "diag2", "random3d"])
def test_warnock_matches_monte_carlo(G):
    P = generate_net(G)
    rng = np.random.default_rng(7)
    Y = rng.random((40_000, P.s))
    x = P.as_float()
    counts = np.all(x[None, :, :] < Y[:, None, :], axis=2).sum(axis=1)
    d2 = (counts - P.N * Y.prod(axis=1)) ** 2
    mean, se = d2.mean(), d2.std(ddof=1) / np.sqrt(d2.size)
    assert abs(l2_discrepancy_sq(P) - mean) <= 3 * se


def test_warnock_float_and_exact_agree():
    P = generate_net(builtin_matrices("sobol2", 2, 6))
    assert abs(l2_discrepancy_sq(P) - float(l2_discrepancy_sq(P, exact=True))) < 1e-12


def test_rademacher_examples():
    assert rademacher((0, 0), [F(1, 3), F(2, 3)]) == 1
    assert rademacher((1,), [F(1, 2)]) == -1
    assert rademacher((1, 1), [F(1, 2), F(1, 2)]) == 1


@pytest.mark.parametrize("m", [1, 3, 5])
def test_rademacher_orthogonality(m):
    ys = [F(v, 2**m) for v in range(2**m)]
    for a, b in itertools.product(range(m + 1), repeat=2):
        avg = F(sum(rademacher((a,), [y]) * rademacher((b,), [y]) for y in ys), 2**m)
        assert avg == (1 if a == b else 0)


def test_micro_local_zero_index():
    P = generate_net(pascal2(3))
    assert micro_local_discrepancy(P, (0, 0), (3, 5)) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32))
def test_lambda_identity_random_nets(m, seed):
    rng = np.random.default_rng(seed)
    G = random_matrices(2, m, rng)
    P, D = generate_net(G), dual_space(G)
    t = t_parameter_exact(G).value
    Z = tuple(int(v) for v in rng.integers(0, 2**m, size=2))
    for A in index_vectors(m, 2):
        lam = micro_local_discrepancy(P, A, Z)
        assert lam == lambda_via_dual(D, A, Z)
        assert abs(lam) <= 2**t
        if A.volume >= F(2**t, 2**m):
            assert lam == 0
        if A.a0 <= m - t:
            assert lam == 0


def test_product_form_equals_index_sum():
    rng = np.random.default_rng(3)
    for G in (pascal2(3), builtin_matrices("diag2", 2, 3), random_matrices(2, 3, rng), random_matrices(3, 2, rng)):
        P = generate_net(G)
        for _ in range(15):
            T = tuple(int(v) for v in rng.integers(0, 2**G.m, size=G.s))
            Y = [F(int(v), 2**20) for v in rng.integers(1, 2**20, size=G.s)]
            a = dm_decomposition(P, T, Y)
            b = dm_decomposition(P, T, Y, method="index_sum")
            assert a == b
            assert a[0] + a[1] == local_discrepancy(digital_shift(P, ShiftVector(G.s, G.m, T)), Y)


def test_van_der_corput_m1_four_cases():
    # both shifts leave {0, 1/2}; D^(m) vanishes and D = 1/2 at the two cell midpoints
    P = vdc(1)
    for T in (0, 1):
        for y in (F(1, 4), F(3, 4)):
            assert dm_decomposition(P, (T,), [y]) == (0, F(1, 2))


def test_batch_matches_scalar():
    P = generate_net(builtin_matrices("sobol2", 2, 5))
    T, Y64 = sample_block(2, 5, 11, 0, 64)
    Ds, Dms, Es = e_squared_batch(P, T, Y64)
    fast = local_discrepancy_batch(P, T, Y64)
    for b in range(64):
        Tb = tuple(int(v) for v in T[b])
        Y = [F(int(v), 2**64) for v in Y64[b]]
        dm, e = dm_decomposition(P, Tb, Y)
        assert (Dms[b], Es[b]) == (dm, e) and Ds[b] == dm + e
        assert abs(fast[b] - float(Ds[b])) < 1e-9


def test_family_bound_and_partition():
    for s in (2, 3):
        for m in range(1, 10):
            for t in range(0, min(m, 3) + 1):
                fam = index_families(m, s, t)
                for k in range(1, m + 1):
                    assert len(fam[k]) <= s * k ** (s - 2) * (t + v0(m))
                members = [A.values for f in fam.values() for A in f]
                want = [A.values for A in index_vectors(m, s) if A.a0 > m - t or A.a0 >= m + v0(m)]
                assert sorted(members) == sorted(want)


def test_index_families_rejects_impossible_t():
    with pytest.raises(ValueError):
        index_families(2, 2, 3)


@pytest.mark.parametrize("route", ["dual", "count"])
def test_martingale_terms_sum_to_dm(route):
    rng = np.random.default_rng(5)
    for G in (pascal2(4), builtin_matrices("diag2", 2, 3), random_matrices(2, 4, rng)):
        P, D = generate_net(G), dual_space(G)
        t = t_parameter_exact(G).value
        for _ in range(10):
            T = tuple(int(v) for v in rng.integers(0, 2**G.m, size=2))
            Y = [F(int(v), 2**16) for v in rng.integers(0, 2**16, size=2)]
            md = martingale_terms(P, T, Y, t=t, dual=D, route=route)
            assert md.total == dm_decomposition(P, T, Y)[0]
            assert md.max_abs_psi() <= 2 ** (t + 1)


def test_conditional_expectation_examples():
    m, s = 2, 1
    f = lambda T, Y: T[0] * 4 + Y[0]
    top = conditional_expectation(f, m, m, s)
    assert all(top((a,), (b,)) == f((a,), (b,)) for a in range(4) for b in range(4))
    assert full_expectation(f, m, s) == F(sum(f((a,), (b,)) for a in range(4) for b in range(4)), 16)
    assert full_expectation(lambda T, Y: 7, 3, 2) == 7
    half = conditional_expectation(f, 1, m, s)
    assert half((2,), (3,)) == F(4 * 2 + 2 + 4 * 3 + 2 + 4 * 2 + 3 + 4 * 3 + 3, 4)


def test_exchange_identity_on_grid_constant_function():
    P = generate_net(pascal2(2))
    m, s = 2, 2
    dm = lambda T, Y: dm_decomposition(P, T, [F(y, 2**m) for y in Y])[0]
    digit_avg = full_expectation(dm, m, s)
    # D^(m) only reads the first m digits of Y, so the continuous average over each cell is its corner value
    rng = np.random.default_rng(9)
    for _ in range(20):
        T = tuple(int(v) for v in rng.integers(0, 4, size=2))
        Y = [F(int(v), 2**30) for v in rng.integers(0, 2**30, size=2)]
        corner = tuple(int(y * 2**m) for y in Y)
        assert dm_decomposition(P, T, Y)[0] == dm(T, corner)
    assert digit_avg == 0


def test_martingale_difference_small():
    G = pascal2(2)
    P, D = generate_net(G), dual_space(G)
    m, s = 2, 2
    terms = lambda T, Y: martingale_terms(P, T, [F(y, 2**m) for y in Y], t=0, dual=D).terms
    for k in range(1, m + 1):
        g = conditional_expectation(lambda T, Y, k=k: terms(T, Y)[k], k - 1, m, s)
        for prefix in itertools.product(range(2 ** (k - 1)), repeat=2 * s):
            shift = m - k + 1
            T = tuple(v << shift for v in prefix[:s])
            Y = tuple(v << shift for v in prefix[s:])
            assert g(T, Y) == 0


def test_index_vector_validation():
    with pytest.raises(ValueError):
        IndexVector((-1, 2))
    assert IndexVector((2, 1)).volume == F(1, 8)
