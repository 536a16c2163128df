import sys

import numpy as np
import pytest

from netred.errors import NotMinimal
from netred.graph import NetworkTopology
from netred.netfile import corridor
from netred.sysmodel import make_subsystem


def random_tree(rng, n, one_way=0.3, wmin=0.1, wmax=10.0, inputs=1, outputs=1):
    """Random weighted tree that keeps a directed rooted spanning tree.

    Every edge carries the arc parent -> child; the reverse arc is dropped
    with probability ``one_way``.
    """
    perm = rng.permutation(n)
    w = np.zeros((n, n))
    for k in range(1, n):
        child, parent = perm[k], perm[rng.integers(0, k)]
        w[child, parent] = rng.uniform(wmin, wmax)
        if rng.random() >= one_way:
            w[parent, child] = rng.uniform(wmin, wmax)
    g = rng.standard_normal((n, inputs))
    h = rng.standard_normal((outputs, n))
    return NetworkTopology(w, g, h)


def random_pd(rng, n, cond=10.0):
    u, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return u @ np.diag(np.geomspace(1.0, cond, n)) @ u.T


def random_subsystem(rng, n=None, m=1):
    n = n or int(rng.integers(1, 4))
    while True:
        s = rng.standard_normal((n, n))
        j = s - s.T
        f = rng.standard_normal((n, n))
        r = 0.1 * f @ f.T
        q = random_pd(rng, n)
        b = rng.standard_normal((n, m))
        try:
            return make_subsystem(j, r, q, b)
        except NotMinimal:
            continue


def path(n, w_fwd=1.0, w_bwd=1.0, g=None, h=None):
    return NetworkTopology.from_edges(n, [(k, k + 1, w_fwd, w_bwd) for k in range(n - 1)], g, h)


@pytest.fixture(scope="session")
def corridor_file():
    return corridor()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
