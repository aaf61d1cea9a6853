"""Configuration manifolds supported by the boundary-value solvers.

Tangent vectors are always stored in body coordinates: plain vectors in
flat space, left-trivialized ``so(3)`` vectors on the rotation group. A
covariant derivative along a curve with body velocity ``v`` is then
``DX/dt = Ẋ + connection(v, X)``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Literal

import numpy as np

from geo_lqr.so3 import distance_gradient, exp_so3, hat, log_so3, project_to_rotation

ManifoldTag = Literal["flat", "so3-biinvariant"]


class Manifold(ABC):
    TAG: str = ""

    @abstractmethod
    def curvature(self, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Riemann tensor ``R(X,Y)Z``."""

    @abstractmethod
    def connection(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Correction term ``∇_a b`` for body-frame fields."""

    @abstractmethod
    def ambient_rate(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Time derivative of the stored configuration array."""

    @abstractmethod
    def project(self, q: np.ndarray) -> np.ndarray:
        """Pull an ambient array back onto the manifold."""

    @abstractmethod
    def advance(self, q: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Exponential map ``exp_q(y)``."""

    @abstractmethod
    def difference(self, q: np.ndarray, p: np.ndarray) -> np.ndarray:
        """``exp_q⁻¹(p)`` in body coordinates."""

    def distance_gradient(self, q: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Gradient at ``q`` of ``½ d(target, q)²``."""
        return -self.difference(q, target)

    def half_distance_sq(self, q: np.ndarray, target: np.ndarray) -> float:
        d = self.difference(q, target)
        return float(0.5 * d @ d)


class FlatSpace(Manifold):
    TAG = "flat"

    def curvature(self, x, y, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def connection(self, a, b):
        return np.zeros_like(np.asarray(b, dtype=float))

    def ambient_rate(self, q, v):
        return v

    def project(self, q):
        return q

    def advance(self, q, y):
        return q + y

    def difference(self, q, p):
        return p - q

    def distance_gradient(self, q, target):
        return q - target


class BiInvariantSO3(Manifold):
    """Rotation group with the bi-invariant metric ``⟨a, b⟩ = a·b`` on ``so(3)``.

    Curvature ``R(X,Y)Z = −¼[[X,Y],Z]``, connection ``∇_a b = ½ a×b``.
    """

    TAG = "so3-biinvariant"

    def curvature(self, x, y, z):
        return -0.25 * np.cross(np.cross(x, y), z)

    def connection(self, a, b):
        return 0.5 * np.cross(a, b)

    def ambient_rate(self, q, v):
        return q @ hat(v)

    def project(self, q):
        return project_to_rotation(q)

    def advance(self, q, y):
        return q @ exp_so3(y)

    def difference(self, q, p):
        return log_so3(q.T @ p)

    def distance_gradient(self, q, target):
        return distance_gradient(q, target)


MANIFOLDS: dict[str, Manifold] = {m.TAG: m for m in (FlatSpace(), BiInvariantSO3())}


def get_manifold(tag: ManifoldTag | Manifold) -> Manifold:
    if isinstance(tag, Manifold):
        return tag
    try:
        return MANIFOLDS[tag]
    except KeyError:
        raise ValueError(f"unknown manifold tag {tag!r}; expected one of {list(MANIFOLDS)}")


def curvature(tag: ManifoldTag, x, y, z) -> np.ndarray:
    """Closed-form ``R(X,Y)Z`` for the given manifold tag."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    if not x.shape == y.shape == z.shape:
        raise ValueError("tangent vectors must share one dimension")
    return get_manifold(tag).curvature(x, y, z)
