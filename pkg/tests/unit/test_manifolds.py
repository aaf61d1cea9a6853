import numpy as np
import pytest

from geo_lqr.pmp.manifolds import BiInvariantSO3, FlatSpace, curvature, get_manifold
from utils import random_rotation, random_vectors


class TestCurvature:
    """CURVATURE"""

    def test_flat_is_zero(self, rng):
        """should vanish identically in flat space"""
        x, y, z = random_vectors(rng, 3)
        assert np.array_equal(curvature("flat", x, y, z), np.zeros(3))

    def test_sectional_quarter(self):
        """should give <R(X,Y)Y, X> = 1/4 for orthonormal body axes"""
        e = np.eye(3)
        for i, j in ((0, 1), (1, 2), (2, 0)):
            assert curvature("so3-biinvariant", e[i], e[j], e[j]) @ e[i] == pytest.approx(0.25)

    def test_sectional_general(self, rng):
        """should equal |X x Y|^2 / 4 for arbitrary pairs"""
        x, y = random_vectors(rng, 2)
        k = curvature("so3-biinvariant", x, y, y) @ x
        assert k == pytest.approx(0.25 * np.linalg.norm(np.cross(x, y)) ** 2)

    def test_antisymmetric(self, rng):
        """should change sign when the first two slots swap"""
        x, y, z = random_vectors(rng, 3)
        forward = curvature("so3-biinvariant", x, y, z)
        assert np.allclose(forward, -curvature("so3-biinvariant", y, x, z))

    def test_bianchi_identity(self, rng):
        """should satisfy the first Bianchi identity"""
        x, y, z = random_vectors(rng, 3)
        total = sum(
            curvature("so3-biinvariant", a, b, c) for a, b, c in ((x, y, z), (y, z, x), (z, x, y))
        )
        assert np.allclose(total, 0.0, atol=1e-14)

    def test_shape_mismatch(self):
        """should refuse vectors of different dimensions"""
        with pytest.raises(ValueError):
            curvature("flat", [1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0])

    def test_unknown_tag(self):
        """should refuse a manifold it does not know"""
        with pytest.raises(ValueError):
            get_manifold("so3-inertia")


class TestOperations:
    """MANIFOLD OPERATIONS"""

    def test_connection_is_metric(self, rng):
        """should keep <nabla_a b, b> = 0 on the rotation group"""
        a, b = random_vectors(rng, 2)
        assert BiInvariantSO3().connection(a, b) @ b == pytest.approx(0.0, abs=1e-14)

    def test_advance_and_difference(self, rng):
        """should invert each other on both manifolds"""
        so3 = BiInvariantSO3()
        q = random_rotation(rng, 1.0)
        y = 0.5 * rng.normal(size=3)
        assert np.allclose(so3.difference(q, so3.advance(q, y)), y, atol=1e-12)
        flat = FlatSpace()
        assert np.allclose(flat.difference(q[0], flat.advance(q[0], y)), y)

    def test_distance_gradient(self, rng):
        """should point from the target to q"""
        flat = FlatSpace()
        assert np.allclose(flat.distance_gradient(np.array([2.0, 1.0]), np.zeros(2)), [2.0, 1.0])
        so3 = BiInvariantSO3()
        q, target = random_rotation(rng, 1.0), random_rotation(rng, 1.0)
        assert np.allclose(so3.distance_gradient(q, target), -so3.difference(q, target))
        d = so3.difference(q, target)
        assert so3.half_distance_sq(q, target) == pytest.approx(0.5 * d @ d)

    def test_project(self, rng):
        """should pull a perturbed rotation back onto the group"""
        q = random_rotation(rng)
        projected = BiInvariantSO3().project(q + 1e-6 * rng.normal(size=(3, 3)))
        assert np.allclose(projected @ projected.T, np.eye(3), atol=1e-14)
