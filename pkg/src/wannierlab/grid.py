"""Symmetric k-grids.

A grid with ``n`` intervals per period stores the ``n + 1`` nodes
``k_i = (i - n/2)/n``, i.e. both boundary nodes -1/2 and +1/2 are kept, as
is k = 0.  Node ``i`` and node ``n - i`` are mirror images, nodes ``0`` and
``n`` are identified by periodicity.
"""

import numpy as np


def symmetric_grid(n):
    n = int(n)
    if n < 2 or n % 2:
        raise ValueError(f"grid size must be an even integer >= 2, got {n}")
    return np.arange(-(n // 2), n // 2 + 1) / n


def zero_index(n):
    return int(n) // 2


def mirror_index(i, n):
    return int(n) - i


def periodic_nodes(n):
    """Slice selecting one copy of each node (drops k = +1/2)."""
    return slice(0, int(n))


def node_of(index, n):
    """k value of a node index, or a tuple of them for several axes."""
    if np.ndim(index) == 0:
        return (index - int(n) // 2) / int(n)
    return tuple((i - m // 2) / m for i, m in zip(index, n))
