"""Image ingestion, preprocessing, tiling, corruption and stream sampling."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy.sparse.linalg import LinearOperator, cg

from .signals import Mask, Signal

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class BoundaryArtifactWarning(UserWarning):
    """Tile size below twice the kernel size; circular wrap will contaminate."""


@dataclass
class TileSpec:
    """Non-overlapping tile dimensions for image splitting."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("tile dimensions must be positive")

    @property
    def num_pixels(self) -> int:
        return self.rows * self.cols

    def check_boundary(self, kernel_shape: tuple[int, int]) -> bool:
        """True when tiles are at least twice the kernel size per dimension;
        otherwise emits a :class:`BoundaryArtifactWarning`."""
        ok = self.rows >= 2 * kernel_shape[0] and self.cols >= 2 * kernel_shape[1]
        if not ok:
            warnings.warn(
                f"tile {self.rows}x{self.cols} is below twice the kernel size "
                f"{kernel_shape[0]}x{kernel_shape[1]}; expect boundary artifacts",
                BoundaryArtifactWarning,
            )
        return ok


def load_grayscale(path) -> Signal:
    """Load an image file as intensities in [0, 1].

    RGB inputs are reduced with fixed luma weights (0.299, 0.587, 0.114);
    8-bit values are divided by 255.
    """
    with Image.open(path) as img:
        arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[..., :3] @ np.asarray(LUMA_WEIGHTS)
    return Signal(arr / 255.0)


def _gradient_spectrum(shape: tuple[int, int]) -> np.ndarray:
    # |Dr|^2 + |Dc|^2 for circular forward differences: 4 sin^2(pi k / n).
    rows, cols = shape
    row_freq = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(rows) / rows)
    col_freq = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(cols) / cols)
    return row_freq[:, None] + col_freq[None, :]


def tikhonov_highpass(s: Signal, weight: float = 5.0) -> Signal:
    """Remove the gradient-regularized lowpass component.

    The lowpass solves ``min_l 0.5 ||l - s||^2 + (weight/2) ||grad l||^2``
    exactly in the frequency domain with circular differences; the returned
    signal is ``s`` minus that component.
    """
    if weight < 0:
        raise ValueError("regularization weight must be nonnegative")
    denom = 1.0 + weight * _gradient_spectrum(s.shape)
    lowpass = np.fft.ifft2(np.fft.fft2(s.values) / denom).real
    return Signal(s.values - lowpass)


def _gradient_quadratic(l: np.ndarray) -> np.ndarray:
    # grad^T grad with circular forward differences, applied spatially.
    dr = np.roll(l, -1, axis=0) - l
    dc = np.roll(l, -1, axis=1) - l
    return (np.roll(dr, 1, axis=0) - dr) + (np.roll(dc, 1, axis=1) - dc)


def tikhonov_highpass_masked(
    s: Signal, mask: Mask, weight: float = 5.0, tol: float = 1e-12
) -> Signal:
    """Highpass with the data term restricted to valid pixels.

    Solves ``(W + weight * grad^T grad) l = W s`` by conjugate gradients;
    invalid pixels are filled by the smoothness term alone.
    """
    if mask.shape != s.shape:
        raise ValueError("mask shape does not match the signal")
    if weight < 0:
        raise ValueError("regularization weight must be nonnegative")
    w = mask.values
    shape = s.shape

    def matvec(v):
        l = v.reshape(shape)
        return (w * l + weight * _gradient_quadratic(l)).ravel()

    op = LinearOperator((s.num_pixels, s.num_pixels), matvec=matvec)
    rhs = (w * s.values).ravel()
    lowpass, info = cg(op, rhs, rtol=tol, maxiter=10 * s.num_pixels)
    if info != 0:
        warnings.warn("masked lowpass solve did not fully converge", RuntimeWarning)
    return Signal(s.values - lowpass.reshape(shape))


def split_image(s: Signal, spec: TileSpec) -> list[Signal]:
    """Cut into non-overlapping row-major tiles; trailing remainders are
    discarded."""
    rows, cols = s.shape
    if spec.rows > rows or spec.cols > cols:
        raise ValueError("tile larger than the image")
    tiles = []
    for r0 in range(0, rows - spec.rows + 1, spec.rows):
        for c0 in range(0, cols - spec.cols + 1, spec.cols):
            tiles.append(Signal(s.values[r0 : r0 + spec.rows, c0 : c0 + spec.cols].copy()))
    return tiles


def salt_pepper_corrupt(
    s: Signal, fraction: float, rng: np.random.Generator
) -> tuple[Signal, Mask]:
    """Impulse-corrupt an exact count of pixels at known locations.

    Exactly ``round(fraction * N)`` distinct pixels are chosen uniformly
    and set to 0 or 1 with equal probability; the returned mask is zero
    exactly there.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    num_hit = int(round(fraction * s.num_pixels))
    flat = s.values.copy().ravel()
    w = np.ones(s.num_pixels)
    if num_hit:
        hit = rng.choice(s.num_pixels, size=num_hit, replace=False)
        flat[hit] = (rng.random(num_hit) < 0.5).astype(np.float64)
        w[hit] = 0.0
    return Signal(flat.reshape(s.shape)), Mask(w.reshape(s.shape))


def stream_sampler(items: list, epochs: int, seed: int) -> list:
    """Concatenate one seeded shuffle of the items per epoch."""
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(epochs):
        for idx in rng.permutation(len(items)):
            out.append(items[idx])
    return out
