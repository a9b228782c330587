import numpy as np
import pytest

from dyadnet.gf2 import BitMatrix
from dyadnet.netgen import GeneratingMatrixSet, builtin_matrices


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def diagonal(m):
    I = BitMatrix.identity(m)
    return GeneratingMatrixSet(2, m, (I, I))


def pascal2(m):
    return builtin_matrices("pascal", 2, m)
