import numpy as np
import pytest

from dyadnet.dual import t_parameter_exact
from dyadnet.netgen import FAMILIES, builtin_matrices, default_dimension, random_matrices
from dyadnet.verify import run_checks


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_builtin_families_pass(family, m):
    results = run_checks(builtin_matrices(family, default_dimension(family), m))
    assert [r.name for r in results if r.status == "FAIL"] == []


def test_wrong_claim_fails_with_lemma_names():
    for seed in range(50):
        G = random_matrices(2, 3, np.random.default_rng(seed))
        if t_parameter_exact(G).value >= 2:
            break
    failed = {r.lemma for r in run_checks(G, t_claim=0) if r.status == "FAIL"}
    assert {"net-definition", "B"} <= failed


def test_large_instance_skips_enumeration():
    results = run_checks(builtin_matrices("pascal", 2, 9), n_pairs=200)
    by_name = {r.name: r for r in results}
    assert by_name["martingale_difference"].skipped
    assert not any(r.status == "FAIL" for r in results)
