import numpy as np
import pytest

from streamcolor.stream import AdjacencyOracle, StreamSource


def oracle_from_edges(n, edges) -> AdjacencyOracle:
    return AdjacencyOracle(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))


def source_of(inst, seed=0) -> StreamSource:
    src = StreamSource(inst.n, inst.edges, seed=seed)
    src.declared_delta = inst.delta
    return src


def syndrome_of(x: np.ndarray, r: int, p: int) -> np.ndarray:
    """Independent measurement: sum of x_j * (j+1)^t, written directly."""
    out = np.zeros(2 * r, dtype=np.int64)
    for j in np.flatnonzero(x):
        acc = 1
        base = (int(j) + 1) % p
        for t in range(2 * r):
            out[t] = (out[t] + int(x[j]) * acc) % p
            acc = acc * base % p
    return out


def random_sparse_vector(rng, n: int, k: int, p: int) -> np.ndarray:
    x = np.zeros(n, dtype=np.int64)
    if k:
        supp = rng.choice(n, size=k, replace=False)
        x[supp] = rng.integers(1, p, size=k)
    return x


def uniform_palettes(n, delta, lists, params=None):
    """Palettes whose every list per vertex equals lists[v] (tests only)."""
    from streamcolor.palette import sample_palettes
    from streamcolor.params import ParamSet

    params = params or ParamSet.desk(n, delta)
    pal = sample_palettes(n, delta, params, seed=0)
    for v, colors in enumerate(lists):
        colors = frozenset(colors)
        pal.l2[v] = colors
        pal.l3[v] = colors
        pal.l4_star[v] = colors
        pal.l5[v] = colors
        pal.l4[v] = [colors] * params.beta
        pal.l6[v] = [colors] * (2 * params.beta)
        pal.l1[v] = min(colors)
        pal.masks[v] = 0
        for c in colors:
            pal.masks[v, (c - 1) // 64] |= np.uint64(1) << np.uint64((c - 1) % 64)
    return pal


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
