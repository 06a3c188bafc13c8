"""Hidden point removal via spherical flipping + convex hull membership."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import ContractViolationError, DegenerateGeometryError

RADIUS_FACTOR = 10.0  # default flip radius = 10x the max viewpoint distance


def hidden_point_removal(points, viewpoint, radius_param: float | None = None) -> np.ndarray:
    """Indices of points visible from the viewpoint (Katz spherical flip).

    Points are flipped about a sphere of radius `radius_param` centered on the
    viewpoint; a point is visible iff its flipped image lies on the convex
    hull of the flipped set plus the viewpoint. Defaults the radius to 10x the
    largest viewpoint distance, which makes the result invariant to uniform
    scaling about the viewpoint.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    viewpoint = np.asarray(viewpoint, dtype=np.float64).reshape(3)
    m = points.shape[0]
    if m < 4:
        raise ContractViolationError("hidden point removal needs at least 4 points")

    centered = points - points.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals[0] <= 0 or svals[-1] < 1e-9 * svals[0]:
        raise DegenerateGeometryError(
            "coplanar or coincident points carry no volume for visibility")

    rel = points - viewpoint
    norms = np.linalg.norm(rel, axis=1)
    max_norm = norms.max()
    if max_norm <= 0 or np.any(norms <= 1e-12):
        raise DegenerateGeometryError("points coincide with the viewpoint")
    if radius_param is None:
        radius_param = RADIUS_FACTOR * max_norm
    elif radius_param <= max_norm:
        raise ContractViolationError(
            f"radius_param {radius_param} must exceed the max viewpoint distance {max_norm}")

    flipped = rel + 2.0 * (radius_param - norms)[:, None] * rel / norms[:, None]
    cloud = np.vstack([flipped, np.zeros(3)])
    try:
        hull = ConvexHull(cloud)
    except QhullError as exc:
        raise DegenerateGeometryError(
            f"degenerate point set for hidden point removal: {exc}") from exc
    visible = np.array(sorted(v for v in hull.vertices if v < m), dtype=np.int64)
    return visible
