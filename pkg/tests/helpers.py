"""Small graph builders shared by the test modules."""

import numpy as np

from nplink.graph import GraphSequence


def seq_from(n, steps):
    """GraphSequence from a list of per-timestep ``(src, dst)`` edge lists."""
    return GraphSequence.from_edge_arrays(n, [np.array(e, dtype=np.int64).reshape(-1, 2) for e in steps])


def random_seq(rng, n, T, density):
    steps = []
    for _ in range(T):
        m = rng.random((n, n)) < density
        np.fill_diagonal(m, False)
        steps.append(np.argwhere(m))
    return GraphSequence.from_edge_arrays(n, steps)
