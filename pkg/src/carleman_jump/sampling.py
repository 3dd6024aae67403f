"""Deterministic point sets on spheres and balls.

All generators are reproducible: the same arguments always return the same
array, so maxima and constants estimated from them are stable across runs.
"""

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

_GOLDEN = (1.0 + 5.0 ** 0.5) / 2.0


def sphere_points(dim, count):
    """``count`` unit vectors in R^dim (on S^{dim-1}), low-discrepancy.

    dim=1 gives the two points +1, -1; dim=2 equispaced angles; dim=3 a
    Fibonacci lattice; higher dimensions an unscrambled Sobol sequence pushed
    through the Gaussian inverse CDF and normalized.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = 2.0 * np.pi * k / _GOLDEN
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    sob = qmc.Sobol(d=dim, scramble=False)
    m = int(np.ceil(np.log2(count + 2)))
    u = sob.random_base2(m)
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    g = ndtri(u)
    r = np.linalg.norm(g, axis=1)
    # the first points of the sequence map to (or next to) the origin
    g, r = g[r > 1e-6], r[r > 1e-6]
    while len(g) < count:
        m += 1
        u = np.clip(qmc.Sobol(d=dim, scramble=False).random_base2(m), 1e-12, 1.0 - 1e-12)
        g = ndtri(u)
        r = np.linalg.norm(g, axis=1)
        g, r = g[r > 1e-6], r[r > 1e-6]
    return (g / r[:, None])[:count]


def hemisphere_points(dim, count):
    """Unit vectors in R^dim with nonnegative last coordinate."""
    pts = sphere_points(dim, count).copy()
    pts[:, -1] = np.abs(pts[:, -1])
    return pts


def ball_points(dim, count, radius):
    """Deterministic points filling the closed ball of given radius.

    Includes the center and the 2*dim axis points at full radius; the rest
    come from a Sobol sequence on the cube, rejected outside the ball.
    """
    pts = [np.zeros(dim)]
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = radius
        pts.extend([e, -e])
    sob = qmc.Sobol(d=dim, scramble=False)
    m = int(np.ceil(np.log2(max(4 * count, 2))))
    cube = 2.0 * sob.random_base2(m) - 1.0
    inside = cube[np.linalg.norm(cube, axis=1) <= 1.0]
    pts.extend(radius * inside[: max(count - len(pts), 0)])
    return np.asarray(pts[: max(count, 1 + 2 * dim)])
