"""Rotation-group math shared by every other module.

Rotations are plain ``(3, 3)`` float arrays and body vectors are ``(3,)``
arrays. Nothing here keeps state, so every function is safe to call from
any thread.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

from geo_lqr.errors import AngleNearPi

Rotation = npt.NDArray[np.float64]
BodyVector = npt.NDArray[np.float64]
SkewMatrix = npt.NDArray[np.float64]
InertiaTensor = npt.NDArray[np.float64]

SMALL_ANGLE = 1e-4
EPS_LOG = 1e-7
"""Guard on tr(R) + 1 below which the logarithm is refused."""

ROTATION_TOL = 1e-9
INERTIA_SYMMETRY_TOL = 1e-12

I3 = np.eye(3)


def hat(v: npt.ArrayLike) -> SkewMatrix:
    """Map a body vector to the skew matrix with ``hat(v) @ w == v x w``."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array(
        [
            [0.0, -z, y],
            [z, 0.0, -x],
            [-y, x, 0.0],
        ]
    )


def skew(m: npt.ArrayLike) -> SkewMatrix:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m - m.T)


def vee(m: npt.ArrayLike) -> BodyVector:
    """Inverse of :func:`hat`. Non-antisymmetric input is projected first."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.array(
        [
            m[2, 1] - m[1, 2],
            m[0, 2] - m[2, 0],
            m[1, 0] - m[0, 1],
        ]
    )


def exp_so3(v: npt.ArrayLike) -> Rotation:
    """Rodrigues exponential of ``hat(v)``.

    Args:
        v: axis-angle vector, any norm.

    Returns:
        The rotation by ``|v|`` radians about ``v / |v|``.
    """
    v = np.asarray(v, dtype=float)
    phi2 = float(v @ v)
    phi = np.sqrt(phi2)
    if phi < SMALL_ANGLE:
        a = 1.0 - phi2 / 6.0 + phi2 * phi2 / 120.0
        b = 0.5 - phi2 / 24.0 + phi2 * phi2 / 720.0
    else:
        a = np.sin(phi) / phi
        b = (1.0 - np.cos(phi)) / phi2
    k = hat(v)
    return I3 + a * k + b * (k @ k)


def rotation_angle(r: Rotation) -> float:
    """Rotation angle in [0, pi], from both the trace and the skew part."""
    s = np.linalg.norm(vee(r))
    c = 0.5 * (np.trace(r) - 1.0)
    return float(np.arctan2(s, c))


def log_so3(r: Rotation) -> BodyVector:
    """Axis-angle coordinates of ``r``.

    Evaluates ``phi / sin(phi) * vee(Skew(r))`` with a series for small
    angles.

    Raises:
        AngleNearPi: when ``tr(r) + 1 <= EPS_LOG``.
    """
    r = np.asarray(r, dtype=float)
    tr = np.trace(r)
    if tr + 1.0 <= EPS_LOG:
        raise AngleNearPi(f"log undefined near the cut locus (tr(R) = {tr:.12g})")
    w = vee(r)
    s = np.linalg.norm(w)
    phi = np.arctan2(s, 0.5 * (tr - 1.0))
    if phi < SMALL_ANGLE:
        phi2 = phi * phi
        return (1.0 + phi2 / 6.0 + 7.0 * phi2 * phi2 / 360.0) * w
    return (phi / s) * w


def geodesic_distance(r1: Rotation, r2: Rotation) -> float:
    return float(np.linalg.norm(log_so3(np.asarray(r1).T @ np.asarray(r2))))


def distance_gradient(r: Rotation, r_d: Rotation) -> BodyVector:
    """Body-frame gradient at ``r`` of ``½ d(r_d, r)²``."""
    return log_so3(np.asarray(r_d).T @ np.asarray(r))


def transport_velocity(r: Rotation, r_ref: Rotation, w_ref: npt.ArrayLike) -> BodyVector:
    """Right-translation transport of ``w_ref`` from the ``r_ref`` body frame to ``r``."""
    return np.asarray(r).T @ (np.asarray(r_ref) @ np.asarray(w_ref, dtype=float))


def orthogonality_defect(m: npt.ArrayLike) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.linalg.norm(m.T @ m - I3))


def is_rotation(m: npt.ArrayLike, tol: float = ROTATION_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    return orthogonality_defect(m) <= tol and abs(np.linalg.det(m) - 1.0) <= tol


def as_rotation(m: npt.ArrayLike, tol: float = ROTATION_TOL) -> Rotation:
    """Return ``m`` as a float array, raising ValueError if it is not a rotation."""
    arr = np.asarray(m, dtype=float)
    if arr.shape == (9,):
        arr = arr.reshape(3, 3)
    if not is_rotation(arr, tol):
        raise ValueError(
            f"not a rotation: orthogonality defect {orthogonality_defect(arr):.3g}, "
            f"det {np.linalg.det(arr):.12g}"
        )
    return arr


def as_inertia(j: npt.ArrayLike) -> InertiaTensor:
    arr = np.asarray(j, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"inertia must be 3x3, got shape {arr.shape}")
    if np.max(np.abs(arr - arr.T)) > INERTIA_SYMMETRY_TOL:
        raise ValueError("inertia must be symmetric")
    if np.min(np.linalg.eigvalsh(arr)) <= 0.0:
        raise ValueError("inertia must be positive definite")
    return arr


def project_to_rotation(m: npt.ArrayLike) -> Rotation:
    """Nearest rotation in Frobenius norm (polar factor)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u[:, -1] *= -1.0
        r = u @ vt
    return r
