"""Area-weighted surface sampling for teacher point clouds."""

from __future__ import annotations

import numpy as np

from ..body import Mesh
from ..errors import ContractViolationError


def triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    b = vertices[faces[:, 2]] - vertices[faces[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)


def sample_surface_points(mesh: Mesh, n: int, seed: int,
                          return_faces: bool = False) -> np.ndarray:
    """Sample n points uniformly by area over the full mesh surface.

    Faces are drawn proportionally to their area, then a uniform barycentric
    point is drawn on each chosen face. Deterministic given the seed.
    """
    if n < 1:
        raise ContractViolationError("n must be >= 1")
    if mesh.faces is None or len(mesh.faces) == 0:
        raise ContractViolationError("mesh carries no faces to sample from")
    rng = np.random.default_rng(seed)
    areas = triangle_areas(mesh.vertices, mesh.faces)
    probs = areas / areas.sum()
    chosen = rng.choice(len(mesh.faces), size=n, p=probs)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    tri = mesh.vertices[mesh.faces[chosen]]
    points = (tri[:, 0]
              + u[:, None] * (tri[:, 1] - tri[:, 0])
              + v[:, None] * (tri[:, 2] - tri[:, 0]))
    if return_faces:
        return points, chosen
    return points
