import math
from itertools import product

import numpy as np
import pytest

from infoloss.info_core import DeterministicMap, JointDistribution

ACCEPTANCE_RESULTS = []


def random_joint(rng, sizes, names=None):
    names = names or tuple("SXYZ"[: len(sizes)])
    mass = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
    return JointDistribution.from_weights(names, mass)


def random_map(rng, n, m=None):
    m = m or int(rng.integers(1, n + 1))
    return DeterministicMap(rng.integers(0, m, size=n), codomain_size=m)


def brute_cmi(p):
    """Triple-loop I(A;B|C) in bits on a plain nested array, no numpy tricks."""
    na, nb, nc = len(p), len(p[0]), len(p[0][0])
    pc = [sum(p[a][b][c] for a in range(na) for b in range(nb)) for c in range(nc)]
    pac = [[sum(p[a][b][c] for b in range(nb)) for c in range(nc)] for a in range(na)]
    pbc = [[sum(p[a][b][c] for a in range(na)) for c in range(nc)] for b in range(nb)]
    total = 0.0
    for a, b, c in product(range(na), range(nb), range(nc)):
        pabc = p[a][b][c]
        if pabc > 0:
            total += pabc * math.log2(pabc * pc[c] / (pac[a][c] * pbc[b][c]))
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
