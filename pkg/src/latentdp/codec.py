"""Deterministic PCA image codec and a synthetic face generator.

The codec is an encoder/generator pair over small grayscale images:
encoding projects a mean-centered image onto an orthonormal basis of
principal directions, decoding reconstructs from the basis and clamps
pixels back into [0, 1]. It gives the noise mechanism a continuous
latent space with an exact, desk-scale round-trip, and the synthetic
faces give it a reference dataset to calibrate bounds on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .latent import (
    FileFormatError,
    as_vector,
    dump_json,
    load_json,
    read_latent_file,
    write_latent_file,
)

ORTHONORMAL_TOL = 1e-8


def as_image(
    values,
    width: int | None = None,
    height: int | None = None,
    unit_range: bool = True,
) -> np.ndarray:
    """Validate an image: 2-D float64, finite, pixels in [0, 1].

    unit_range=False skips the range check for intermediate pixel
    fields such as unclamped reconstructions.
    """
    img = np.asarray(values, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"image must be a nonempty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite pixels")
    if unit_range and (img.min() < 0.0 or img.max() > 1.0):
        raise ValueError("image pixels must lie in [0, 1]")
    if height is not None and width is not None and img.shape != (height, width):
        raise ValueError(f"image shape {img.shape} != expected ({height}, {width})")
    return img


@dataclass(frozen=True)
class CodecModel:
    """Mean image plus d orthonormal principal directions."""

    mean: np.ndarray
    basis: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        basis = np.asarray(self.basis, dtype=np.float64)
        npix = int(self.width) * int(self.height)
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if mean.shape != (npix,):
            raise ValueError(f"mean has shape {mean.shape}, expected ({npix},)")
        if basis.ndim != 2 or basis.shape[1] != npix or basis.shape[0] < 1:
            raise ValueError(f"basis has shape {basis.shape}, expected (d, {npix})")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(basis))):
            raise ValueError("codec model contains non-finite values")
        gram = basis @ basis.T
        if np.max(np.abs(gram - np.eye(basis.shape[0]))) > ORTHONORMAL_TOL:
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def latent_dim(self) -> int:
        return self.basis.shape[0]


def fit_codec(images, d: int) -> CodecModel:
    """Fit a d-dimensional PCA codec to a set of same-sized images.

    The basis is the top d right singular vectors of the centered pixel
    matrix. Each basis vector is flipped, if needed, so its
    largest-magnitude entry is nonnegative; that pins the sign left free
    by the decomposition and makes fits reproducible.
    """
    imgs = [as_image(im) for im in images]
    if len(imgs) < 2:
        raise ValueError(f"need at least 2 images to fit, got {len(imgs)}")
    shape = imgs[0].shape
    for i, im in enumerate(imgs):
        if im.shape != shape:
            raise ValueError(f"image {i} has shape {im.shape}, expected {shape}")
    height, width = shape
    npix = width * height
    max_d = min(len(imgs) - 1, npix)
    if not (1 <= d <= max_d):
        raise ValueError(f"latent dimension must be in [1, {max_d}], got {d}")

    x = np.stack([im.ravel() for im in imgs])
    mean = x.mean(axis=0)
    _, _, vt = np.linalg.svd(x - mean, full_matrices=False)
    basis = vt[:d].copy()
    for row in basis:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return CodecModel(mean=mean, basis=basis, width=width, height=height)


def encode(model: CodecModel, image) -> np.ndarray:
    """Latent coordinates of an image: basis projection of (image - mean).

    Only the shape is constrained; out-of-range pixel fields (for
    instance an unclamped reconstruction) project fine.
    """
    img = as_image(image, width=model.width, height=model.height, unit_range=False)
    return model.basis @ (img.ravel() - model.mean)


def decode(model: CodecModel, z, clamp: bool = True) -> np.ndarray:
    """Image synthesized from latent coordinates.

    Reconstruction is mean + basis^T z; with clamp=True (the default)
    pixels are clipped into [0, 1], a postprocessing step. clamp=False
    exposes the raw linear reconstruction, on which encode is an exact
    inverse.
    """
    zv = as_vector(z, dim=model.latent_dim)
    flat = model.mean + model.basis.T @ zv
    if clamp:
        flat = np.clip(flat, 0.0, 1.0)
    return flat.reshape(model.height, model.width)


def save_codec(path, model: CodecModel) -> None:
    """Store the model as a latent file (mean first, then basis rows)."""
    write_latent_file(path, np.vstack([model.mean, model.basis]))
    dump_json(
        str(path) + ".json",
        {"width": model.width, "height": model.height, "latent_dim": model.latent_dim},
    )


def load_codec(path) -> CodecModel:
    rows = read_latent_file(path)
    sidecar = load_json(str(path) + ".json")
    try:
        width = int(sidecar["width"])
        height = int(sidecar["height"])
        d = int(sidecar["latent_dim"])
    except (KeyError, TypeError, ValueError):
        raise FileFormatError(f"{path}.json: bad codec sidecar") from None
    if rows.shape != (d + 1, width * height):
        raise FileFormatError(
            f"{path}: payload shape {rows.shape} inconsistent with sidecar "
            f"({d + 1}, {width * height})"
        )
    return CodecModel(mean=rows[0], basis=rows[1:], width=width, height=height)


def make_synthetic_faces(count: int, width: int, height: int, seed: int) -> list[np.ndarray]:
    """Procedural face-like images: head ellipse, eyes, mouth, jitter.

    Every geometric and intensity parameter is jittered per image from
    one seeded stream, so the same seed always yields the byte-identical
    set. Images are lightly smoothed and clipped to [0, 1].
    """
    if count < 2:
        raise ValueError(f"need count >= 2, got {count}")
    if width < 8 or height < 8:
        raise ValueError(f"faces need at least 8x8 pixels, got {width}x{height}")
    rng = np.random.default_rng(int(seed))
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    kernel = _gaussian_kernel(radius=2, sigma=1.0)

    faces = []
    for _ in range(count):
        u = rng.random(16)
        background = 0.10 + 0.10 * u[0]
        cx = width * (0.50 + 0.06 * (u[1] - 0.5))
        cy = height * (0.52 + 0.06 * (u[2] - 0.5))
        ax = width * (0.30 + 0.08 * u[3])
        ay = height * (0.38 + 0.08 * u[4])
        head = 0.70 + 0.20 * u[5]

        eye_dx = width * (0.12 + 0.05 * u[6])
        eye_dy = height * (0.10 + 0.05 * u[7])
        eye_r = width * (0.04 + 0.025 * u[8])
        eye_val = 0.05 + 0.10 * u[9]

        mouth_w = width * (0.10 + 0.08 * u[10])
        mouth_h = height * (0.015 + 0.02 * u[11])
        mouth_dy = height * (0.16 + 0.06 * u[12])
        mouth_val = 0.15 + 0.15 * u[13]
        mouth_cx = cx + width * 0.02 * (u[14] - 0.5)

        img = np.full((height, width), background)
        in_head = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2 <= 1.0
        img[in_head] = head
        for sign in (-1.0, 1.0):
            ex, ey = cx + sign * eye_dx, cy - eye_dy
            in_eye = (xx - ex) ** 2 + (yy - ey) ** 2 <= eye_r**2
            img[in_eye] = eye_val
        in_mouth = (
            ((xx - mouth_cx) / max(mouth_w, 1.0)) ** 2
            + ((yy - (cy + mouth_dy)) / max(mouth_h, 1.0)) ** 2
            <= 1.0
        )
        img[in_mouth] = mouth_val

        img += 0.01 * (u[15] - 0.5)
        faces.append(np.clip(_smooth(img, kernel), 0.0, 1.0))
    return faces


def _gaussian_kernel(radius: int, sigma: float) -> np.ndarray:
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def _smooth(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable convolution with edge padding."""
    pad = kernel.size // 2
    h, w = img.shape
    padded = np.pad(img, pad, mode="edge")
    rows = np.zeros((h, w + 2 * pad))
    for i, k in enumerate(kernel):
        rows += k * padded[i : i + h, :]
    out = np.zeros((h, w))
    for j, k in enumerate(kernel):
        out += k * rows[:, j : j + w]
    return out
