"""SO(3) primitives: exponential/logarithm maps, geodesic flow and distance.

All rotations are plain 3x3 numpy arrays (orthonormal, det +1); axis-angle
vectors are 3-vectors whose norm is the rotation angle in radians, kept on
the canonical branch (angle <= pi).
"""

from __future__ import annotations

import numpy as np

_SMALL_ANGLE = 1e-6
_NEAR_PI = 1e-4


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector."""
    v = np.asarray(v, dtype=float).reshape(3)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat: extract the 3-vector of a skew-symmetric matrix."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]], dtype=float)


def is_rotation(r: np.ndarray, tol: float = 1e-9) -> bool:
    """True if r is orthonormal with determinant +1 within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        return False
    return (
        np.max(np.abs(r.T @ r - np.eye(3))) <= tol
        and abs(np.linalg.det(r) - 1.0) <= tol
    )


def exp_rotation(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula: axis-angle 3-vector to rotation matrix."""
    v = np.asarray(v, dtype=float).reshape(3)
    theta = float(np.linalg.norm(v))
    k = hat(v)
    k2 = k @ k
    if theta < 1e-8:
        # Taylor expansion of sin(t)/t and (1-cos(t))/t^2
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * k2


def log_rotation(r: np.ndarray) -> np.ndarray:
    """Rotation matrix to axis-angle 3-vector on the branch angle in [0, pi].

    Uses the standard formula theta/(2 sin theta) * vee(R - R^T) with a
    series limit near theta = 0 and symmetric-part axis extraction near
    theta = pi, where R - R^T vanishes.
    """
    r = np.asarray(r, dtype=float)
    cos_theta = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))

    if theta < _SMALL_ANGLE:
        return vee(0.5 * (r - r.T))

    if theta > np.pi - _NEAR_PI:
        # Axis from the dominant diagonal of (R + I)/2; the antisymmetric
        # part still fixes the sign while theta < pi, and gives the angle
        # through asin, which stays well conditioned where arccos does not.
        a = 0.5 * (0.5 * (r + r.T) + np.eye(3))
        idx = int(np.argmax(np.diag(a)))
        axis = np.empty(3)
        axis[idx] = np.sqrt(max(a[idx, idx], 0.0))
        j, k = (idx + 1) % 3, (idx + 2) % 3
        axis[j] = a[idx, j] / axis[idx]
        axis[k] = a[idx, k] / axis[idx]
        axis /= np.linalg.norm(axis)
        w = vee(r - r.T)
        theta = np.pi - float(np.arcsin(np.clip(0.5 * np.linalg.norm(w), 0.0, 1.0)))
        if np.dot(axis, w) < 0.0:
            axis = -axis
        return theta * axis

    return (theta / (2.0 * np.sin(theta))) * vee(r - r.T)


def geodesic_flow(gamma: float, r: np.ndarray) -> np.ndarray:
    """Scale a rotation along its geodesic from the identity: exp(gamma log R)."""
    return exp_rotation(gamma * log_rotation(r))


def geodesic_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic angle between two rotations, in [0, pi]."""
    return float(np.linalg.norm(log_rotation(np.asarray(r1).T @ r2)))


def sample_uniform_axis(rng: np.random.Generator) -> np.ndarray:
    """Unit vector uniform on the sphere."""
    while True:
        v = rng.standard_normal(3)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


def sample_uniform_axes(rng: np.random.Generator, n: int) -> np.ndarray:
    """n unit vectors uniform on the sphere, shape (n, 3)."""
    v = rng.standard_normal((n, 3))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # Degenerate draws are astronomically unlikely; resample them anyway.
    bad = norms[:, 0] <= 1e-12
    while np.any(bad):
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        bad = norms[:, 0] <= 1e-12
    return v / norms


def exp_rotations(v: np.ndarray) -> np.ndarray:
    """Vectorized Rodrigues formula, (n, 3) axis-angle to (n, 3, 3)."""
    v = np.asarray(v, dtype=float).reshape(-1, 3)
    theta = np.linalg.norm(v, axis=1)
    small = theta < 1e-8
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    n = v.shape[0]
    k = np.zeros((n, 3, 3))
    k[:, 0, 1] = -v[:, 2]
    k[:, 0, 2] = v[:, 1]
    k[:, 1, 0] = v[:, 2]
    k[:, 1, 2] = -v[:, 0]
    k[:, 2, 0] = -v[:, 1]
    k[:, 2, 1] = v[:, 0]
    k2 = k @ k
    return np.eye(3)[None] + a[:, None, None] * k + b[:, None, None] * k2


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi) -> np.ndarray:
    """Random rotation with uniform axis and angle uniform on [0, max_angle]."""
    return exp_rotation(rng.uniform(0.0, max_angle) * sample_uniform_axis(rng))
