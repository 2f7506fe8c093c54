"""Triangle quadrature rules in barycentric coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_S15 = 15.0**0.5


def _rule7():
    a1, b1 = (9 - 2 * _S15) / 21, (6 + _S15) / 21
    a2, b2 = (9 + 2 * _S15) / 21, (6 - _S15) / 21
    w1, w2 = (155 + _S15) / 1200, (155 - _S15) / 1200
    bary = [(1 / 3, 1 / 3, 1 / 3),
            (a1, b1, b1), (b1, a1, b1), (b1, b1, a1),
            (a2, b2, b2), (b2, a2, b2), (b2, b2, a2)]
    return np.array(bary), np.array([0.225, w1, w1, w1, w2, w2, w2])


RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    3: (np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1 / 3)),
    7: _rule7(),
}


@dataclass(frozen=True)
class QuadratureConfig:
    """Panel quadrature settings.

    ``near_singular_threshold`` is the ratio (target-to-centroid distance) /
    (panel diameter) below which a panel is treated as near-singular.
    """

    regular_order: int = 7
    singular_subdivision_depth: int = 3
    near_singular_threshold: float = 2.0

    def __post_init__(self):
        if self.regular_order not in RULES:
            raise ValueError("regular_order must be one of 1, 3, 7")
        if not 0 <= self.singular_subdivision_depth <= 8:
            raise ValueError("singular_subdivision_depth must be in [0, 8]")
        if not self.near_singular_threshold > 0:
            raise ValueError("near_singular_threshold must be positive")


@lru_cache(maxsize=None)
def subdivision_centroids(depth: int) -> np.ndarray:
    """Barycentric centroids of the 4**depth congruent sub-triangles of a
    recursive 4-way split. All leaves have equal area."""
    tris = np.eye(3)[None]
    for _ in range(depth):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tris = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
            np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1),
        ])
    out = tris.mean(axis=1)
    out.setflags(write=False)
    return out


def map_points(triangles: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Physical points (m, q, 3) for barycentric nodes (q, 3) on triangles (m, 3, 3)."""
    return np.einsum("qk,mkd->mqd", bary, triangles)


def quadratic_shape(bary: np.ndarray):
    """6-node triangle shape functions and their derivatives with respect to
    the reference coordinates (xi1, xi2) = (bary[:, 1], bary[:, 2]).

    Node order: corners 0, 1, 2, then edge nodes 01, 12, 20.
    """
    l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
    z = np.zeros_like(l0)
    N = np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                  4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0], 1)
    d1 = np.stack([1 - 4 * l0, 4 * l1 - 1, z, 4 * (l0 - l1), 4 * l2, -4 * l2], 1)
    d2 = np.stack([1 - 4 * l0, z, 4 * l2 - 1, -4 * l1, 4 * l1, 4 * (l0 - l2)], 1)
    return N, d1, d2


def curved_points(nodes: np.ndarray, bary: np.ndarray):
    """Points (m, q, 3) and area-vector Jacobians (m, q, 3) of quadratic
    panels with nodes (m, 6, 3). Integrals over a panel are
    0.5 * sum_q w_q f(x_q) |J_q| for a rule with weights summing to 1."""
    N, d1, d2 = quadratic_shape(bary)
    x = np.einsum("qk,mkd->mqd", N, nodes)
    J = np.cross(np.einsum("qk,mkd->mqd", d1, nodes), np.einsum("qk,mkd->mqd", d2, nodes))
    return x, J
