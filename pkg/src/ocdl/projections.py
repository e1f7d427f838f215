"""Constraint-set projections and the scalar shrinkage operator."""

from __future__ import annotations

import numpy as np

from .signals import Dictionary, PaddedDictionary


def _scale_to_unit_balls(filters: np.ndarray) -> np.ndarray:
    # Filters already inside (or on) the ball are returned unchanged.
    norms = np.sqrt(np.sum(filters ** 2, axis=(1, 2), keepdims=True))
    return filters / np.maximum(norms, 1.0)


def project_dictionary(d: Dictionary) -> Dictionary:
    """Project each filter onto the unit 2-norm ball."""
    return Dictionary(_scale_to_unit_balls(d.filters))


def project_padded_dictionary(
    values: np.ndarray | PaddedDictionary, support: tuple[int, int] | None = None
) -> PaddedDictionary:
    """Project signal-sized filters onto the supported unit-ball set.

    Energy outside the support block is removed first, then each filter is
    scaled onto the unit ball; the support is a subspace and the ball is
    centered at the origin, so this composition is the exact projection.
    """
    if isinstance(values, PaddedDictionary):
        support = values.support
        values = values.values
    elif support is None:
        raise ValueError("support is required for a raw array")
    lr, lc = support
    masked = np.zeros_like(values, dtype=np.float64)
    masked[:, :lr, :lc] = values[:, :lr, :lc]
    masked[:, :lr, :lc] = _scale_to_unit_balls(masked[:, :lr, :lc])
    return PaddedDictionary(masked, (lr, lc))


def soft_threshold(v, thresh: float):
    """Elementwise ``sign(v) * max(|v| - thresh, 0)``."""
    if thresh < 0:
        raise ValueError("threshold must be nonnegative")
    v = np.asarray(v)
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def random_dictionary(
    num_filters: int, kernel_shape: tuple[int, int], rng: np.random.Generator
) -> Dictionary:
    """Random filters (i.i.d. standard normal taps) projected onto the ball."""
    taps = rng.standard_normal((num_filters,) + tuple(kernel_shape))
    return project_dictionary(Dictionary(taps))
