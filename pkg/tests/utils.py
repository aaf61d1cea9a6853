import numpy as np

from geo_lqr.so3 import exp_so3


def random_axis_angle(rng: np.random.Generator, max_angle: float = np.pi - 1e-3) -> np.ndarray:
    """Uniform direction, angle uniform in [0, max_angle]."""
    axis = rng.normal(size=3)
    return axis / np.linalg.norm(axis) * rng.uniform(0.0, max_angle)


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi - 0.2) -> np.ndarray:
    return exp_so3(random_axis_angle(rng, max_angle))


def random_vectors(rng: np.random.Generator, count: int, scale: float = 1.0) -> np.ndarray:
    return scale * rng.normal(size=(count, 3))
