"""Linear semantic directions in latent space.

A binary attribute that separates linearly in latent space defines a
hyperplane; its unit normal is a direction along which the attribute
varies. The signed projection n . z acts as a (sign-carrying) distance
to the hyperplane, and moving a latent code by alpha along the normal
shifts that projection by exactly alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .latent import FileFormatError, as_matrix, as_vector, dump_json, load_json

UNIT_NORM_TOL = 1e-10


@dataclass(frozen=True)
class SemanticBoundary:
    """Unit normal of an attribute-separating hyperplane."""

    normal: np.ndarray

    def __post_init__(self):
        n = as_vector(self.normal)
        norm = float(np.linalg.norm(n))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"normal must have unit length, got {norm!r}")
        object.__setattr__(self, "normal", n)

    @property
    def dim(self) -> int:
        return self.normal.size


def fit_boundary(latents, labels) -> SemanticBoundary:
    """Centroid-difference direction for a binary attribute.

    The normal points from the class-0 centroid toward the class-1
    centroid, normalized to unit length, so positive-class latents get
    positive signed distances. Closed form, no solver, and invariant
    under translating the whole dataset.
    """
    z = as_matrix(latents)
    y = np.asarray(labels)
    if y.shape != (z.shape[0],):
        raise ValueError(f"labels must be one per row, got shape {y.shape}")
    mask = y.astype(bool)
    if mask.all() or not mask.any():
        raise ValueError("both label classes must be present")
    direction = z[mask].mean(axis=0) - z[~mask].mean(axis=0)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise ValueError("class centroids coincide, no separating direction")
    return SemanticBoundary(normal=direction / norm)


def distance(boundary: SemanticBoundary, z) -> float:
    """Signed projection of a latent code onto the boundary normal."""
    zv = as_vector(z, dim=boundary.dim)
    return float(boundary.normal @ zv)


def edit(z, boundary: SemanticBoundary, alpha: float) -> np.ndarray:
    """Move a latent code by alpha along the boundary normal.

    Increases the signed distance by exactly alpha; positive alpha
    pushes toward the positive class.
    """
    zv = as_vector(z, dim=boundary.dim)
    if not np.isfinite(alpha):
        raise ValueError(f"edit step must be finite, got {alpha}")
    return zv + float(alpha) * boundary.normal


def save_boundary(path, boundary: SemanticBoundary) -> None:
    dump_json(path, {"n": boundary.normal})


def load_boundary(path) -> SemanticBoundary:
    doc = load_json(path)
    if set(doc) != {"n"}:
        raise FileFormatError(f"{path}: boundary document must have exactly key 'n'")
    try:
        return SemanticBoundary(normal=np.asarray(doc["n"], dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad boundary document ({exc})") from None
