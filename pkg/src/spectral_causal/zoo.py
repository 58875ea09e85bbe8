"""Reference models used by the tests, the acceptance suite and the CLI.

Node indices are 0-based: a model drawn with nodes ``1..n`` uses ``0..n-1``.
"""

from __future__ import annotations

import numpy as np

from .model import LdimSpec
from .simulate import ArSpec


def _grid(num_bins: int) -> np.ndarray:
    return 2 * np.pi * np.arange(num_bins) / num_bins


def lag_filter(num_bins: int, gain: float, pole: float = 0.0, delay: int = 1) -> np.ndarray:
    """``gain z^-delay / (1 - pole z^-1)`` on the grid, ``z = e^{jw}``."""
    zi = np.exp(-1j * _grid(num_bins))
    return gain * zi**delay / (1 - pole * zi)


def sem1(num_bins: int = 64, a=None, b=None) -> LdimSpec:
    """Chain ``Z -> Y -> X`` (nodes X=0, Y=1, Z=2) with unit noise."""
    a = lag_filter(num_bins, 0.7, 0.4) if a is None else np.broadcast_to(a, (num_bins,))
    b = lag_filter(num_bins, 0.9, -0.3) if b is None else np.broadcast_to(b, (num_bins,))
    h = np.zeros((num_bins, 3, 3), dtype=complex)
    h[:, 0, 1] = a
    h[:, 1, 2] = b
    return LdimSpec(h, np.ones((3, num_bins)))


def sem2(num_bins: int = 64, beta=None, alpha=None, gamma=None) -> LdimSpec:
    """``x1 = beta x2 + gamma x3 + e1``, ``x2 = alpha x3 + e2``, ``x3 = e3`` (nodes 0, 1, 2)."""
    beta = lag_filter(num_bins, 0.8, 0.5) if beta is None else np.broadcast_to(beta, (num_bins,))
    alpha = lag_filter(num_bins, 0.6, -0.4, delay=2) if alpha is None else np.broadcast_to(alpha, (num_bins,))
    h = np.zeros((num_bins, 3, 3), dtype=complex)
    h[:, 0, 1] = beta
    h[:, 1, 2] = alpha
    if gamma is not None:
        h[:, 0, 2] = np.broadcast_to(gamma, (num_bins,))
    return LdimSpec(h, np.ones((3, num_bins)))


def graph1(num_bins: int = 64) -> LdimSpec:
    """``X1 -> X3``, ``X1 -> X4``, ``X2 -> X4``, ``X3 -> X4`` (nodes 0..3)."""
    h = np.zeros((num_bins, 4, 4), dtype=complex)
    h[:, 2, 0] = lag_filter(num_bins, 0.7, 0.3)
    h[:, 3, 0] = lag_filter(num_bins, 0.5, 0.0, delay=2)
    h[:, 3, 1] = lag_filter(num_bins, 0.6, -0.2)
    h[:, 3, 2] = lag_filter(num_bins, 0.8, 0.2)
    return LdimSpec(h, np.ones((4, num_bins)))


SIX_NODE_EDGES = ((0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 4), (2, 4), (3, 4), (4, 5))
# chosen so that kin, imaginary-part and collider statistics separate from their
# nulls at T = 10^4 and true-edge phases are far from flat
SIX_NODE_GAINS = (0.6693, 0.4652, 1.0842, 0.4197, 0.4693, 0.5969, 0.6757, 0.831, 0.7013)
SIX_NODE_SELF_LAGS = np.array(
    [
        [-0.1759, 0.2505, 0.0625],
        [0.4452, 0.166, -0.1507],
        [0.5174, -0.0231, -0.3278],
        [0.7096, 0.3822, 0.0409],
        [0.0959, 0.5834, 0.186],
        [0.1402, -0.1204, 0.0043],
    ]
)
SIX_NODE_NOISE = np.array([0.9307, 1.2585, 0.9702, 1.2507, 0.5845, 0.7758])


def six_node_ar() -> ArSpec:
    """The six-node AR network of the simulation protocol.

    Edges (1-based) 1->2, 1->3, 1->4, 1->5, 2->3, 2->5, 3->5, 4->5, 5->6; the
    only strict spouses are {2, 4} and {3, 4}, both through node 5. Cross gains
    are positive, so spouse coefficients have constant phase.
    """
    B = np.zeros((6, 6))
    for (u, v), g in zip(SIX_NODE_EDGES, SIX_NODE_GAINS):
        B[v, u] = g
    return ArSpec(SIX_NODE_SELF_LAGS, B, SIX_NODE_NOISE)


def ldim_from_graph(g, num_bins: int = 32, seed=None, gain_range=(0.3, 0.8)) -> LdimSpec:
    """Random rational transfer functions on the edges of ``g``, unit noise."""
    rng = np.random.default_rng(seed)
    h = np.zeros((num_bins, g.n, g.n), dtype=complex)
    for u, v in sorted(g.edges):
        gain = rng.uniform(*gain_range) * rng.choice([-1.0, 1.0])
        h[:, v, u] = lag_filter(num_bins, gain, rng.uniform(-0.5, 0.5), delay=int(rng.integers(1, 3)))
    return LdimSpec(h, np.ones((g.n, num_bins)))
